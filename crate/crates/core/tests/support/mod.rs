//! Shared test support: a dense Hamiltonian builder written independently
//! of the production matrix-free application, with its own index
//! bookkeeping. Agreement between the two code paths is what makes the
//! cross-validation tests meaningful.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use passage_core::{ModelKind, ModelParams};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn gaussian(peak: f64, center: f64, width: f64, t: f64) -> f64 {
    let x = (t - center) / width;
    peak * (-x * x).exp()
}

/// Dense `H(t)` for either model, assembled element by element from the
/// model definition.
pub fn dense_hamiltonian(p: &ModelParams, t: f64) -> Array2<C64> {
    match p.model_kind {
        ModelKind::Eliminated => dense_eliminated(p, t),
        ModelKind::Full => dense_full(p, t),
    }
}

fn parity_sign(p: &ModelParams, k: i64) -> f64 {
    let e = k + i64::from(p.flip_fibre_parity);
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn dense_eliminated(p: &ModelParams, t: f64) -> Array2<C64> {
    let n_modes = 2 * p.k_max as usize + 1;
    let dim = 4 + n_modes;
    let (a0_a, cav_a, fib0, cav_b, a0_b) = (0, 1, 2, 2 + n_modes, 3 + n_modes);
    let mut h = Array2::<C64>::zeros((dim, dim));

    let denom = p.delta_g * p.delta_g + p.gamma * p.gamma;
    let spacing = p.delta0 / p.length;
    let two_dr = 2.0 * p.delta_r;

    // Per node: drive = delta_g * s01(t) given by the pulse; gamma terms
    // scale the drive by gamma/delta_g; s11 from g; s00 from s01^2/s11.
    let mut node = |drive: f64, g: f64, idx_atom: usize, idx_cav: usize| {
        let s11 = if g != 0.0 && denom > 0.0 { g * g / denom } else { 0.0 };
        let s00 = if s11 > 0.0 && p.delta_g != 0.0 {
            (drive / p.delta_g).powi(2) / s11
        } else {
            0.0
        };
        let atom_shift = if p.compensate_light_shift { 0.0 } else { p.delta_g * s00 };
        let cav_shift = if p.include_s11_shift { p.delta_g * s11 } else { 0.0 };
        h[[idx_atom, idx_atom]] = c(p.delta_r + atom_shift, -p.gamma * s00);
        h[[idx_cav, idx_cav]] = c(two_dr + cav_shift, -(p.kappa + p.gamma * s11));
        let ratio = if p.gamma != 0.0 { p.gamma / p.delta_g } else { 0.0 };
        let coupling = c(drive, -drive * ratio);
        h[[idx_atom, idx_cav]] = coupling;
        h[[idx_cav, idx_atom]] = coupling;
    };
    node(gaussian(p.pulses.a.peak, p.pulses.a.center, p.pulses.a.width, t), p.g_a, a0_a, cav_a);
    node(gaussian(p.pulses.b.peak, p.pulses.b.center, p.pulses.b.width, t), p.g_b, a0_b, cav_b);

    for j in 0..n_modes {
        let k = j as i64 - p.k_max as i64;
        let idx = fib0 + j;
        h[[idx, idx]] = c(two_dr + k as f64 * spacing, 0.0);
        h[[idx, cav_a]] = c(p.nu, 0.0);
        h[[cav_a, idx]] = c(p.nu, 0.0);
        let signed = p.nu * parity_sign(p, k);
        h[[idx, cav_b]] = c(signed, 0.0);
        h[[cav_b, idx]] = c(signed, 0.0);
    }
    h
}

fn dense_full(p: &ModelParams, t: f64) -> Array2<C64> {
    let n_modes = 2 * p.k_max as usize + 1;
    let dim = 6 + n_modes;
    let (a0_a, b_a, cav_a, fib0) = (0, 1, 2, 3);
    let (cav_b, b_b, a0_b) = (3 + n_modes, 4 + n_modes, 5 + n_modes);
    let mut h = Array2::<C64>::zeros((dim, dim));

    let denom = p.delta_g * p.delta_g + p.gamma * p.gamma;
    let spacing = p.delta0 / p.length;
    let two_dr = 2.0 * p.delta_r;

    let mut node = |omega: f64, g: f64, idx_a0: usize, idx_b: usize, idx_cav: usize| {
        let s00 = omega * omega / denom;
        let shift = if p.compensate_light_shift { -p.delta_g * s00 } else { 0.0 };
        h[[idx_a0, idx_a0]] = c(p.delta_r + shift, 0.0);
        h[[idx_b, idx_b]] = c(p.delta_r - p.delta_g, -p.gamma);
        h[[idx_cav, idx_cav]] = c(two_dr, -p.kappa);
        h[[idx_a0, idx_b]] = c(omega, 0.0);
        h[[idx_b, idx_a0]] = c(omega, 0.0);
        h[[idx_b, idx_cav]] = c(g, 0.0);
        h[[idx_cav, idx_b]] = c(g, 0.0);
    };
    node(gaussian(p.pulses.a.peak, p.pulses.a.center, p.pulses.a.width, t), p.g_a, a0_a, b_a, cav_a);
    node(gaussian(p.pulses.b.peak, p.pulses.b.center, p.pulses.b.width, t), p.g_b, a0_b, b_b, cav_b);

    for j in 0..n_modes {
        let k = j as i64 - p.k_max as i64;
        let idx = fib0 + j;
        h[[idx, idx]] = c(two_dr + k as f64 * spacing, 0.0);
        h[[idx, cav_a]] = c(p.nu, 0.0);
        h[[cav_a, idx]] = c(p.nu, 0.0);
        let signed = p.nu * parity_sign(p, k);
        h[[idx, cav_b]] = c(signed, 0.0);
        h[[cav_b, idx]] = c(signed, 0.0);
    }
    h
}
