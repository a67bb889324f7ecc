//! Integration of the time-dependent non-Hermitian Schroedinger equation
//! `dpsi/dt = -i H(t) psi`.
//!
//! Two independent code paths are provided: a fixed-step classical RK4
//! engine ([`propagate`], built on [`integrate_rk4`]) used for all
//! production runs, and a piecewise-constant matrix-exponential propagator
//! ([`propagate_oracle`]) restricted to small dimensions and used to
//! cross-validate the first. They share no numerical machinery.
//!
//! The norm is never renormalized during evolution; its decay is the
//! accumulated probability that a quantum jump has occurred.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{chain_observables, StateVector};
use crate::model::HamiltonianAction;

/// Integration scheme. Only a fixed-step RK4 is provided: the drives are
/// smooth Gaussians, fixed grids are bit-reproducible, and convergence is
/// controlled by halving the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
}

/// Convergence-ladder settings used by the experiment drivers: the step is
/// halved until the transfer fidelity moves by less than `fidelity_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub halvings_max: u32,
    pub fidelity_tol: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence { halvings_max: 3, fidelity_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Time step. The actual step is rounded so that an integer number of
    /// steps covers the interval exactly.
    pub dt: f64,
    /// Observable sampling stride, in steps.
    pub record_every: usize,
    pub convergence: Convergence,
}

impl IntegratorConfig {
    /// Default grid for a run of duration `t_total`: 2^15 steps with
    /// observables recorded at 2^10 samples.
    pub fn for_duration(t_total: f64) -> Self {
        Self::with_steps(t_total, 1 << 15, 1 << 10)
    }

    /// Grid with an explicit number of steps and recorded samples.
    pub fn with_steps(t_total: f64, n_steps: usize, samples: usize) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            dt: t_total / n_steps as f64,
            record_every: (n_steps / samples.max(1)).max(1),
            convergence: Convergence::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParams("integrator dt must be > 0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParams("record_every must be >= 1".into()));
        }
        if !(self.convergence.fidelity_tol > 0.0) {
            return Err(Error::InvalidParams("fidelity_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// One recorded point along a trajectory. In the single-excitation sector
/// the cavity populations are the cavity photon numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Total state norm, including the Q = 0 amplitude.
    pub norm: f64,
    pub pop_atom_a: f64,
    pub pop_cav_a: f64,
    /// Total fibre photon number.
    pub pop_fibre: f64,
    pub pop_cav_b: f64,
    pub pop_atom_b: f64,
    /// Photon number in the resonant mode k = 0.
    pub n_fibre_resonant: f64,
}

/// Time grid, recorded observables and final state of one propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: StateVector,
    pub q0_final: C64,
    /// Step actually used.
    pub dt: f64,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.norm)
    }

    /// Peak combined cavity photon number over the recorded samples.
    pub fn max_cavity_population(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.pop_cav_a + s.pop_cav_b)
            .fold(0.0, f64::max)
    }
}

/// Fixed-step classical RK4 for `dy/dt = rhs(t, y)` on complex amplitude
/// vectors. `observe` is called with `(step, t, y)` once for the initial
/// state and after every step; returning an error aborts the integration.
pub fn integrate_rk4<F, O>(
    rhs: F,
    y0: &[C64],
    t0: f64,
    t1: f64,
    n_steps: usize,
    mut observe: O,
) -> Result<Vec<C64>>
where
    F: Fn(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if !(t1 > t0) || n_steps == 0 {
        return Err(Error::InvalidParams("integration needs t1 > t0 and n_steps >= 1".into()));
    }
    let dim = y0.len();
    let dt = (t1 - t0) / n_steps as f64;
    let zero = C64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut k1 = vec![zero; dim];
    let mut k2 = vec![zero; dim];
    let mut k3 = vec![zero; dim];
    let mut k4 = vec![zero; dim];
    let mut stage = vec![zero; dim];

    observe(0, t0, &y)?;
    for step in 0..n_steps {
        let t = t0 + step as f64 * dt;
        rhs(t, &y, &mut k1);
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k1[i];
        }
        rhs(t + 0.5 * dt, &stage, &mut k2);
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * dt * k2[i];
        }
        rhs(t + 0.5 * dt, &stage, &mut k3);
        for i in 0..dim {
            stage[i] = y[i] + dt * k3[i];
        }
        rhs(t + dt, &stage, &mut k4);
        for i in 0..dim {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        observe(step + 1, t0 + (step + 1) as f64 * dt, &y)?;
    }
    Ok(y)
}

/// Propagates a Q = 1 state (plus its Q = 0 amplitude) from `t0` to `t1`.
///
/// The Q = 0 scalar sector is advanced analytically by the phase
/// `exp(-i * q0_rate * (t - t0))`; it never mixes with the Q = 1 vector.
/// The squared total norm is monitored every step: exceeding `1 + 1e-6` or
/// turning non-finite aborts with a numerical-failure error.
pub fn propagate(
    h: &HamiltonianAction,
    psi0: &StateVector,
    q0: C64,
    t0: f64,
    t1: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let basis = h.basis();
    if psi0.basis() != basis {
        return Err(Error::BasisMismatch { expected: basis, found: psi0.basis() });
    }
    let total0 = psi0.norm_sq() + q0.norm_sqr();
    if (total0 - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm_sq: total0 });
    }

    let n_steps = (((t1 - t0) / config.dt).round() as usize).max(1);
    let dt = (t1 - t0) / n_steps as f64;
    let record_every = config.record_every;
    let q0_norm_sq = q0.norm_sqr();

    let mut samples = Vec::with_capacity(n_steps / record_every + 2);
    let rhs = |t: f64, src: &[C64], dst: &mut [C64]| {
        h.apply_into(t, src, dst);
        for z in dst.iter_mut() {
            // multiply by -i
            *z = C64::new(z.im, -z.re);
        }
    };
    let observe = |step: usize, t: f64, y: &[C64]| {
        let q1_norm_sq: f64 = y.iter().map(|a| a.norm_sqr()).sum();
        let total = q1_norm_sq + q0_norm_sq;
        if !total.is_finite() {
            return Err(Error::NumericalFailure { t, detail: "non-finite amplitudes".into() });
        }
        if total > 1.0 + 1e-6 {
            return Err(Error::NumericalFailure {
                t,
                detail: format!("squared norm {total} exceeds 1 + 1e-6 (step too large?)"),
            });
        }
        if step % record_every == 0 || step == n_steps {
            let obs = chain_observables(basis, y);
            samples.push(Sample {
                t,
                norm: total.sqrt(),
                pop_atom_a: obs.pop_atom_a,
                pop_cav_a: obs.pop_cav_a,
                pop_fibre: obs.pop_fibre,
                pop_cav_b: obs.pop_cav_b,
                pop_atom_b: obs.pop_atom_b,
                n_fibre_resonant: obs.n_fibre_resonant,
            });
        }
        Ok(())
    };

    let final_amps = integrate_rk4(rhs, psi0.amplitudes(), t0, t1, n_steps, observe)?;
    let q0_final = q0 * C64::from_polar(1.0, -h.q0_rate() * (t1 - t0));
    Ok(Trajectory {
        samples,
        final_state: StateVector::from_amplitudes(basis, final_amps)?,
        q0_final,
        dt,
    })
}

/// Largest column sum of absolute values.
fn one_norm(a: &Array2<C64>) -> f64 {
    let mut max = 0.0f64;
    for col in a.columns() {
        let sum: f64 = col.iter().map(|z| z.norm()).sum();
        max = max.max(sum);
    }
    max
}

/// Matrix exponential by scaling-and-squaring with a truncated Taylor
/// series (term tolerance 1e-16).
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidParams("expm needs a square matrix".into()));
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::SeriesNotConvergent);
    }
    let scalings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    if scalings > 64 {
        return Err(Error::SeriesNotConvergent);
    }
    let factor = 2.0f64.powi(-scalings);
    let m = a.mapv(|z| z * factor);

    let mut result: Array2<C64> = Array2::eye(n);
    let mut term: Array2<C64> = Array2::eye(n);
    let mut converged = false;
    for k in 1..=64 {
        term = term.dot(&m).mapv(|z| z / k as f64);
        result += &term;
        if one_norm(&term) < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesNotConvergent);
    }
    for _ in 0..scalings {
        result = result.dot(&result);
    }
    Ok(result)
}

fn oracle_slice<F>(
    sampler: &F,
    psi: &mut Array1<C64>,
    ta: f64,
    tb: f64,
    depth: u32,
    dim: usize,
) -> Result<()>
where
    F: Fn(f64) -> Array2<C64>,
{
    let h = sampler(0.5 * (ta + tb));
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::InvalidParams(format!(
            "dense sampler returned a {}x{} matrix for dimension {dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    let generator = h.mapv(|z| z * C64::new(0.0, -(tb - ta)));
    match expm(&generator) {
        Ok(m) => {
            *psi = m.dot(psi);
            Ok(())
        }
        // Auto-split the slice if the series failed to converge.
        Err(Error::SeriesNotConvergent) if depth < 8 => {
            let tm = 0.5 * (ta + tb);
            oracle_slice(sampler, psi, ta, tm, depth + 1, dim)?;
            oracle_slice(sampler, psi, tm, tb, depth + 1, dim)
        }
        Err(e) => Err(e),
    }
}

/// Independent dense propagator: each of `n_slices` equal slices of
/// `[t0, t1]` is advanced by `expm(-i * dt * H(t_mid))`, with `H` supplied
/// as a dense matrix by `h_dense_sampler`. Restricted to dimensions up to
/// 256. Shares nothing with the RK4 path, so agreement between the two is
/// meaningful evidence of correctness.
pub fn propagate_oracle<F>(
    h_dense_sampler: F,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    n_slices: usize,
) -> Result<StateVector>
where
    F: Fn(f64) -> Array2<C64>,
{
    const MAX_DIM: usize = 256;
    let dim = psi0.basis().dimension();
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
    }
    if !(t1 > t0) || n_slices == 0 {
        return Err(Error::InvalidParams("oracle needs t1 > t0 and n_slices >= 1".into()));
    }
    let mut psi = Array1::from(psi0.amplitudes().to_vec());
    let dt = (t1 - t0) / n_slices as f64;
    for j in 0..n_slices {
        let ta = t0 + j as f64 * dt;
        oracle_slice(&h_dense_sampler, &mut psi, ta, ta + dt, 0, dim)?;
    }
    StateVector::from_amplitudes(psi0.basis(), psi.to_vec())
}
