//! Cross-module integration tests: the matrix-free application against the
//! independently built dense matrix, dark-state nullity by dense
//! construction, propagator cross-checks and gauge/conservation properties.

mod support;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use passage_core::{
    dark_state_0, darkness_residual, encode_initial, propagate, propagate_oracle,
    HamiltonianAction, IntegratorConfig, ModelKind, ModelParams, Pulse, PulsePair, PulseSchedule,
    StateVector,
};
use support::dense_hamiltonian;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_state(basis: passage_core::Basis, rng: &mut ChaCha8Rng) -> StateVector {
    let amps = (0..basis.dimension())
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    StateVector::from_amplitudes(basis, amps).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng, kind: ModelKind) -> ModelParams {
    let mut p = ModelParams {
        model_kind: kind,
        delta_g: rng.gen_range(2.0..30.0),
        delta_r: rng.gen_range(-0.3..0.3),
        gamma: rng.gen_range(0.0..1.0),
        kappa: rng.gen_range(0.0..0.5),
        g_a: rng.gen_range(0.2..3.0),
        g_b: rng.gen_range(0.2..3.0),
        delta0: rng.gen_range(0.05..1.0),
        k_max: rng.gen_range(0..24),
        pulses: PulsePair::new(
            Pulse::new(rng.gen_range(0.0..3.0), rng.gen_range(0.0..10.0), rng.gen_range(0.5..5.0)),
            Pulse::new(rng.gen_range(0.0..3.0), rng.gen_range(0.0..10.0), rng.gen_range(0.5..5.0)),
        ),
        compensate_light_shift: rng.gen_bool(0.5),
        include_s11_shift: rng.gen_bool(0.3),
        flip_fibre_parity: rng.gen_bool(0.2),
        ..Default::default()
    };
    p.set_length(rng.gen_range(0.25..8.0));
    p
}

#[test]
fn matrix_free_application_matches_dense_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for kind in [ModelKind::Eliminated, ModelKind::Full] {
        for _ in 0..40 {
            let params = random_params(&mut rng, kind);
            let action = HamiltonianAction::new(params.clone()).unwrap();
            let t = rng.gen_range(0.0..12.0);
            let dense = dense_hamiltonian(&params, t);
            let psi = random_state(action.basis(), &mut rng);
            let fast = action.apply(t, &psi).unwrap();
            let reference = dense.dot(&Array1::from(psi.amplitudes().to_vec()));
            for (a, b) in fast.amplitudes().iter().zip(reference.iter()) {
                assert!(
                    (a - b).norm() < 1e-12,
                    "dense/matrix-free mismatch for {kind:?}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn dark_state_is_a_null_vector_of_the_dense_partial_hamiltonian() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..60 {
        let mut params = ModelParams {
            kappa: rng.gen_range(0.0..0.5),
            nu: rng.gen_range(0.1..2.0),
            k_max: rng.gen_range(0..=64),
            delta0: rng.gen_range(0.02..1.0),
            pulses: PulsePair::new(
                Pulse::new(rng.gen_range(0.05..3.0), rng.gen_range(0.0..10.0), rng.gen_range(0.5..5.0)),
                Pulse::new(rng.gen_range(0.05..3.0), rng.gen_range(0.0..10.0), rng.gen_range(0.5..5.0)),
            ),
            ..Default::default()
        };
        params.length = rng.gen_range(0.25..16.0);
        // Evaluate near the node-B pulse so at least one drive is alive.
        let t = params.pulses.b.center + rng.gen_range(-1.0..1.0) * params.pulses.b.width;

        let dark = dark_state_0(&params, t).unwrap();
        let dense = dense_hamiltonian(&params, t);
        let image = dense.dot(&Array1::from(dark.amplitudes().to_vec()));
        let dense_residual: f64 = image.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(dense_residual <= 1e-12, "dense residual {dense_residual}");

        let production = darkness_residual(&dark, &params, t).unwrap();
        assert!(production <= 1e-12, "production residual {production}");
    }
}

/// Reference configuration: unit-length fibre, narrow chain, counterintuitive
/// Gaussian drive over [0, t_total].
fn chain_params(t_total: f64, k_max: u32) -> ModelParams {
    let mut p = ModelParams { k_max, ..Default::default() };
    p.pulses = PulseSchedule::default().materialize(t_total);
    p
}

#[test]
fn rk4_agrees_with_the_dense_oracle_on_a_short_run() {
    let t_total = 30.0;
    let params = chain_params(t_total, 2);
    let action = HamiltonianAction::new(params.clone()).unwrap();
    let (psi0, q0) = encode_initial(c(1.0, 0.0), c(0.0, 0.0), action.basis()).unwrap();

    let traj = propagate(
        &action,
        &psi0,
        q0,
        0.0,
        t_total,
        &IntegratorConfig::with_steps(t_total, 1 << 13, 64),
    )
    .unwrap();
    let oracle = propagate_oracle(
        |t| dense_hamiltonian(&params, t),
        &psi0,
        0.0,
        t_total,
        1 << 13,
    )
    .unwrap();

    let max_diff = traj
        .final_state
        .amplitudes()
        .iter()
        .zip(oracle.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(max_diff < 1e-7, "max amplitude difference {max_diff}");
}

#[test]
fn rk4_error_falls_at_fourth_order() {
    let t_total = 30.0;
    let params = chain_params(t_total, 2);
    let action = HamiltonianAction::new(params.clone()).unwrap();
    let (psi0, q0) = encode_initial(c(1.0, 0.0), c(0.0, 0.0), action.basis()).unwrap();

    // High-resolution oracle as the reference.
    let reference = propagate_oracle(
        |t| dense_hamiltonian(&params, t),
        &psi0,
        0.0,
        t_total,
        1 << 15,
    )
    .unwrap();

    let error_at = |n_steps: usize| -> f64 {
        let traj = propagate(
            &action,
            &psi0,
            q0,
            0.0,
            t_total,
            &IntegratorConfig::with_steps(t_total, n_steps, 16),
        )
        .unwrap();
        traj.final_state
            .amplitudes()
            .iter()
            .zip(reference.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };

    let coarse = error_at(1 << 7);
    let fine = error_at(1 << 8);
    assert!(
        coarse / fine >= 8.0,
        "convergence factor {} (coarse {coarse}, fine {fine})",
        coarse / fine
    );
}

#[test]
fn norm_is_conserved_without_loss_channels() {
    let t_total = 300.0;
    let mut params = chain_params(t_total, 10);
    params.kappa = 0.0;
    let action = HamiltonianAction::new(params.clone()).unwrap();
    let (psi0, q0) = encode_initial(c(1.0, 0.0), c(0.0, 0.0), action.basis()).unwrap();
    let traj = propagate(
        &action,
        &psi0,
        q0,
        0.0,
        t_total,
        &IntegratorConfig::for_duration(t_total),
    )
    .unwrap();
    let final_norm = traj.samples.last().unwrap().norm;
    assert!(
        (final_norm - 1.0).abs() <= 1e-8,
        "unitary norm drifted to {final_norm}"
    );
}

#[test]
fn norm_is_monotone_under_loss() {
    let t_total = 300.0;
    let params = chain_params(t_total, 10); // kappa = 0.1 by default
    let action = HamiltonianAction::new(params.clone()).unwrap();
    let (psi0, q0) = encode_initial(c(1.0, 0.0), c(0.0, 0.0), action.basis()).unwrap();
    let config = IntegratorConfig::for_duration(t_total);
    let traj = propagate(&action, &psi0, q0, 0.0, t_total, &config).unwrap();

    // Per-step local-error allowance, accumulated over the recording stride.
    let slack = config.record_every as f64 * 10.0 * traj.dt.powi(5);
    let norms: Vec<f64> = traj.norms().collect();
    for pair in norms.windows(2) {
        assert!(
            pair[1] <= pair[0] + slack,
            "norm increased from {} to {}",
            pair[0],
            pair[1]
        );
    }
    // And the loss channel actually bites.
    assert!(*norms.last().unwrap() < 1.0);
}

#[test]
fn too_fast_transfer_fails_nonadiabatically() {
    let t_total = 10.0;
    let mut params = ModelParams::default();
    params.pulses = PulseSchedule::default().materialize(t_total);
    params.set_length(0.5);
    let settings = passage_core::RunSettings {
        steps_exponent: 13,
        max_halvings: 1,
        max_k_doublings: 1,
        ..Default::default()
    };
    let result =
        passage_core::run_transfer(&params, t_total, c(1.0, 0.0), c(0.0, 0.0), &settings).unwrap();
    let epsilon = result.epsilon.unwrap();
    assert!(epsilon < 0.5, "a 10-unit transfer should fail, got epsilon = {epsilon}");
}

#[test]
fn flipping_the_fibre_parity_is_a_gauge_choice() {
    let t_total = 60.0;
    let base = chain_params(t_total, 6);
    let mut flipped = base.clone();
    flipped.flip_fibre_parity = true;

    let run = |params: &ModelParams| {
        let action = HamiltonianAction::new(params.clone()).unwrap();
        let (psi0, q0) = encode_initial(c(1.0, 0.0), c(0.0, 0.0), action.basis()).unwrap();
        propagate(
            &action,
            &psi0,
            q0,
            0.0,
            t_total,
            &IntegratorConfig::with_steps(t_total, 1 << 12, 128),
        )
        .unwrap()
    };
    let a = run(&base);
    let b = run(&flipped);
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        for (x, y) in [
            (sa.pop_atom_a, sb.pop_atom_a),
            (sa.pop_cav_a, sb.pop_cav_a),
            (sa.pop_fibre, sb.pop_fibre),
            (sa.pop_cav_b, sb.pop_cav_b),
            (sa.pop_atom_b, sb.pop_atom_b),
            (sa.n_fibre_resonant, sb.n_fibre_resonant),
        ] {
            assert!((x - y).abs() <= 1e-10, "population moved under parity flip: {x} vs {y}");
        }
    }
}
