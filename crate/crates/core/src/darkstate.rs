//! Dark states of the driven cavity-fibre chain.
//!
//! The partial Hamiltonian (everything except the |a0> light-shift/decay
//! block) has two eigenstates with zero cavity amplitude: an interference
//! dark state carrying the excitation, and the trivially decoupled Q = 0
//! ground state. The adiabatic transfer rides the first while the logical
//! |1>|1> component occupies the second.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{BasisState, ModelKind, StateVector};
use crate::model::{HamiltonianAction, ModelParams};
use crate::propagator::Trajectory;

/// Both dark states at a given instant: the normalized Q = 1 interference
/// state and the Q = 0 amplitude handle (the all-ground configuration).
#[derive(Debug, Clone, PartialEq)]
pub struct DarkStatePair {
    pub psi0: StateVector,
    pub q0_amplitude: C64,
}

/// Constructs both dark states; see [`dark_state_0`].
pub fn dark_state_pair(params: &ModelParams, t: f64) -> Result<DarkStatePair> {
    Ok(DarkStatePair { psi0: dark_state_0(params, t)?, q0_amplitude: C64::new(1.0, 0.0) })
}

/// The interference dark state of the eliminated model at time `t`.
///
/// Unnormalized amplitudes along the chain are
/// `(nu * W_b, 0, -W_a * W_b on the resonant mode, 0, nu * W_a)` with `W_x`
/// the effective drive of node x; off-resonant fibre modes and both
/// cavities carry exactly zero amplitude. The result is normalized.
pub fn dark_state_0(params: &ModelParams, t: f64) -> Result<StateVector> {
    if params.model_kind != ModelKind::Eliminated {
        return Err(Error::ModelKindMismatch {
            expected: ModelKind::Eliminated,
            found: params.model_kind,
        });
    }
    params.validate()?;
    let w_a = params.pulses.a.value(t);
    let w_b = params.pulses.b.value(t);
    let basis = params.basis();
    let mut v = StateVector::zero(basis);
    {
        let idx_a = basis.index_of(BasisState::AtomA(crate::hilbert::AtomLevel::A0))?;
        let idx_f0 = basis.index_of(BasisState::Fibre(0))?;
        let idx_b = basis.index_of(BasisState::AtomB(crate::hilbert::AtomLevel::A0))?;
        let amps = v.amplitudes_mut();
        amps[idx_a] = C64::new(params.nu * w_b, 0.0);
        amps[idx_f0] = C64::new(-w_a * w_b, 0.0);
        amps[idx_b] = C64::new(params.nu * w_a, 0.0);
    }
    v.normalized()
}

/// Norm of the partial Hamiltonian applied to a state.
///
/// Valid only under the conditions of the dark-state argument: `gamma = 0`,
/// `delta_r = 0` and a compensated light shift. The |a0> block then
/// vanishes identically, so the partial Hamiltonian coincides with the full
/// one and the production application path is used directly. For
/// [`dark_state_0`] the result is zero to numerical precision for any
/// `kappa`, since the state has no cavity amplitude.
pub fn darkness_residual(state: &StateVector, params: &ModelParams, t: f64) -> Result<f64> {
    if params.model_kind != ModelKind::Eliminated {
        return Err(Error::ModelKindMismatch {
            expected: ModelKind::Eliminated,
            found: params.model_kind,
        });
    }
    if params.gamma != 0.0 {
        return Err(Error::InvalidParams("darkness_residual requires gamma = 0".into()));
    }
    if params.delta_r != 0.0 {
        return Err(Error::InvalidParams("darkness_residual requires delta_r = 0".into()));
    }
    if !params.compensate_light_shift {
        return Err(Error::InvalidParams(
            "darkness_residual requires the light shift to be compensated".into(),
        ));
    }
    let action = HamiltonianAction::new(params.clone())?;
    Ok(action.apply(t, state)?.norm())
}

/// Time-averaged photon number in the resonant fibre mode divided by the
/// time-averaged total fibre photon number, over the recorded samples.
///
/// Returns `None` when the fibre is never populated (denominator below
/// 1e-30), e.g. for the |1>|1> input.
pub fn pi0_metric(trajectory: &Trajectory) -> Result<Option<f64>> {
    if trajectory.samples.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let resonant: f64 = trajectory.samples.iter().map(|s| s.n_fibre_resonant).sum();
    let total: f64 = trajectory.samples.iter().map(|s| s.pop_fibre).sum();
    if total < 1e-30 {
        Ok(None)
    } else {
        Ok(Some(resonant / total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{encode_initial, overlap, AtomLevel, BasisState};
    use crate::model::{Pulse, PulsePair};
    use crate::propagator::Sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Constant drives (W_a, W_b) realized as very wide Gaussians.
    fn drive_params(w_a: f64, w_b: f64, nu: f64, k_max: u32) -> ModelParams {
        ModelParams {
            nu,
            k_max,
            kappa: 0.0,
            pulses: PulsePair::new(
                Pulse::new(w_a, 0.0, 1e12),
                Pulse::new(w_b, 0.0, 1e12),
            ),
            ..Default::default()
        }
    }

    #[test]
    fn limiting_case_is_initial_logical_state() {
        // Node B switched on first: with W_a = 0 the dark state is exactly
        // the stored logical |0>|1>.
        let params = drive_params(0.0, 1.7, 0.8, 3);
        let dark = dark_state_0(&params, 0.0).unwrap();
        let atom_a = dark.amplitude(BasisState::AtomA(AtomLevel::A0)).unwrap();
        assert_eq!(atom_a, c(1.0, 0.0));
        assert!((dark.norm_sq() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_drives_give_symmetric_weights() {
        let params = drive_params(1.3, 1.3, 0.7, 2);
        let dark = dark_state_0(&params, 0.0).unwrap();
        let a = dark.amplitude(BasisState::AtomA(AtomLevel::A0)).unwrap();
        let b = dark.amplitude(BasisState::AtomB(AtomLevel::A0)).unwrap();
        assert_eq!(a.norm(), b.norm());
    }

    #[test]
    fn unit_drives_match_direct_substitution() {
        // W_a = W_b = nu = 1: amplitudes proportional to (1, 0, -1, 0, 1)/sqrt(3).
        let params = drive_params(1.0, 1.0, 1.0, 0);
        let dark = dark_state_0(&params, 0.0).unwrap();
        let want = 1.0 / 3.0f64.sqrt();
        let amps = dark.amplitudes();
        assert!((amps[0] - c(want, 0.0)).norm() < 1e-15);
        assert_eq!(amps[1], c(0.0, 0.0));
        assert!((amps[2] - c(-want, 0.0)).norm() < 1e-15);
        assert_eq!(amps[3], c(0.0, 0.0));
        assert!((amps[4] - c(want, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_drives_are_rejected() {
        let params = drive_params(0.0, 0.0, 1.0, 2);
        assert!(matches!(dark_state_0(&params, 0.0), Err(Error::DegenerateDarkState)));
        // nu = 0 with a single nonzero drive is degenerate as well.
        let params = drive_params(1.0, 0.0, 0.0, 2);
        assert!(matches!(dark_state_0(&params, 0.0), Err(Error::DegenerateDarkState)));
    }

    #[test]
    fn cavity_amplitudes_are_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let params = drive_params(
                rng.gen_range(0.01..3.0),
                rng.gen_range(0.01..3.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0..20),
            );
            let dark = dark_state_0(&params, 0.0).unwrap();
            assert_eq!(dark.amplitude(BasisState::CavityA).unwrap(), c(0.0, 0.0));
            assert_eq!(dark.amplitude(BasisState::CavityB).unwrap(), c(0.0, 0.0));
            for k in 1..=params.k_max as i32 {
                assert_eq!(dark.amplitude(BasisState::Fibre(k)).unwrap(), c(0.0, 0.0));
                assert_eq!(dark.amplitude(BasisState::Fibre(-k)).unwrap(), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn construction_is_continuous_in_the_drives() {
        let base = drive_params(0.9, 1.4, 0.8, 4);
        let dark = dark_state_0(&base, 0.0).unwrap();
        let diff_norm = |h: f64| {
            let perturbed = drive_params(0.9 + h, 1.4, 0.8, 4);
            let d = dark_state_0(&perturbed, 0.0).unwrap();
            let delta: f64 = d
                .amplitudes()
                .iter()
                .zip(dark.amplitudes())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum();
            delta.sqrt()
        };
        let d1 = diff_norm(1e-5);
        let d2 = diff_norm(2e-5);
        assert!(d1 < 1e-3);
        // First-order response: doubling the perturbation doubles the change.
        assert!((d2 / d1 - 2.0).abs() < 0.05, "d2/d1 = {}", d2 / d1);
    }

    #[test]
    fn dark_state_residual_vanishes_with_cavity_loss() {
        let params = ModelParams {
            kappa: 0.1,
            k_max: 10,
            nu: 1.0,
            pulses: PulsePair::new(Pulse::new(1.2, 5.0, 3.0), Pulse::new(0.4, 2.0, 3.0)),
            ..Default::default()
        };
        for t in [0.0, 2.5, 5.0, 8.0] {
            let dark = dark_state_0(&params, t).unwrap();
            let r = darkness_residual(&dark, &params, t).unwrap();
            assert!(r <= 1e-12, "residual {r} at t = {t}");
        }
    }

    #[test]
    fn cavity_state_residual_reflects_the_fibre_fan() {
        // A bare cavity photon couples to all 2K+1 fibre modes with
        // strength nu, so the residual is at least nu * sqrt(2K+1).
        let params = ModelParams {
            kappa: 0.0,
            nu: 1.0,
            k_max: 7,
            pulses: PulsePair::new(Pulse::new(0.0, 0.0, 1.0), Pulse::new(0.0, 0.0, 1.0)),
            ..Default::default()
        };
        let cav = StateVector::unit(params.basis(), BasisState::CavityA).unwrap();
        let r = darkness_residual(&cav, &params, 0.0).unwrap();
        let bound = params.nu * (2.0 * params.k_max as f64 + 1.0).sqrt();
        assert!(r >= bound - 1e-12, "residual {r} below fan bound {bound}");
    }

    #[test]
    fn ground_sector_is_stationary_on_raman_resonance() {
        // The Q = 0 dark state evolves only by the scalar 2 * delta_r.
        let params = drive_params(1.0, 1.0, 1.0, 2);
        assert_eq!(params.q0_rate(), 0.0);
    }

    #[test]
    fn residual_rejects_unsupported_parameters() {
        let mut params = drive_params(1.0, 1.0, 1.0, 2);
        params.delta_r = 0.2;
        let state = StateVector::zero(params.basis());
        assert!(darkness_residual(&state, &params, 0.0).is_err());

        let mut params = drive_params(1.0, 1.0, 1.0, 2);
        params.gamma = 0.1;
        params.delta_g = 10.0;
        params.g_a = 1.0;
        params.g_b = 1.0;
        let state = StateVector::zero(params.basis());
        assert!(darkness_residual(&state, &params, 0.0).is_err());
    }

    #[test]
    fn initial_superposition_decomposes_into_dark_states() {
        // With the node-B drive overwhelming node A, the encoded Q = 1
        // component coincides with the interference dark state.
        let params = drive_params(1e-6, 1.0, 1.0, 5);
        let dark = dark_state_0(&params, 0.0).unwrap();
        let basis = params.basis();

        let (q1, _) = encode_initial(c(1.0, 0.0), c(0.0, 0.0), basis).unwrap();
        let ov = overlap(&q1, &dark).unwrap();
        assert!(ov.re >= 1.0 - 1e-6);

        let alpha = c(0.6, 0.0);
        let beta = c(0.0, 0.8);
        let (q1, q0) = encode_initial(alpha, beta, basis).unwrap();
        let scaled = dark.scaled(alpha);
        let diff: f64 = q1
            .amplitudes()
            .iter()
            .zip(scaled.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        assert!(diff.sqrt() <= 2e-6);
        assert_eq!(q0, beta);
    }

    fn synthetic_trajectory(rows: &[(f64, f64)]) -> Trajectory {
        let basis = crate::hilbert::build_basis(ModelKind::Eliminated, 1);
        Trajectory {
            samples: rows
                .iter()
                .enumerate()
                .map(|(i, &(resonant, total))| Sample {
                    t: i as f64,
                    norm: 1.0,
                    pop_atom_a: 0.0,
                    pop_cav_a: 0.0,
                    pop_fibre: total,
                    pop_cav_b: 0.0,
                    pop_atom_b: 0.0,
                    n_fibre_resonant: resonant,
                })
                .collect(),
            final_state: StateVector::zero(basis),
            q0_final: c(0.0, 0.0),
            dt: 1.0,
        }
    }

    #[test]
    fn pi0_metric_examples() {
        // Only the resonant mode ever occupied.
        let traj = synthetic_trajectory(&[(0.2, 0.2), (0.7, 0.7), (0.1, 0.1)]);
        assert_eq!(pi0_metric(&traj).unwrap(), Some(1.0));

        // Even split between k = 0 and another mode at all times.
        let traj = synthetic_trajectory(&[(0.3, 0.6), (0.2, 0.4)]);
        assert_eq!(pi0_metric(&traj).unwrap(), Some(0.5));

        // Fibre never populated.
        let traj = synthetic_trajectory(&[(0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(pi0_metric(&traj).unwrap(), None);

        let traj = synthetic_trajectory(&[]);
        assert!(matches!(pi0_metric(&traj), Err(Error::EmptyTrajectory)));
    }
}
