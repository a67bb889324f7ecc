//! Desk-scale simulator for adiabatic-passage quantum state transfer
//! between two atom-cavity nodes connected by a multimode optical fibre.
//!
//! The protocol stores a qubit in the ground states of atom A, switches the
//! node-B laser on first and rides a photonic dark state of the coupled
//! cavity-fibre system, so that ideally neither cavity is ever populated
//! and cavity loss barely bites. Decoherence is modelled by non-Hermitian
//! no-jump evolution: the squared state norm is the probability that no
//! spontaneous emission or cavity decay has occurred.
//!
//! Module map:
//!
//! - [`hilbert`]: conserved-excitation bases and state-vector algebra;
//! - [`model`]: parameters and the two time-dependent Hamiltonians (full
//!   three-level and adiabatically eliminated), applied matrix-free;
//! - [`darkstate`]: dark-state construction, verification and the
//!   resonant-mode population metric;
//! - [`propagator`]: fixed-step RK4 integration plus an independent dense
//!   matrix-exponential oracle;
//! - [`experiments`]: transfer runs, fibre-length sweeps, adiabaticity
//!   scans and full-vs-eliminated comparison.
//!
//! All rates are in scaled units `u = alpha / sqrt(L0)` (fibre coupling per
//! unit root-length over the unit length); [`model::estimate_physical`]
//! bridges to laboratory numbers.

pub mod darkstate;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod model;
pub mod propagator;

pub use error::{Error, Result};
pub use hilbert::{
    build_basis, encode_initial, overlap, photon_observables, population, AtomLevel, Basis,
    BasisState, ModelKind, PhotonObservables, StateVector,
};
pub use model::{
    apply_eliminated, apply_full, estimate_physical, fibre_detunings, saturation_params,
    HamiltonianAction, ModelParams, PhysicalEstimate, Pulse, PulsePair, SaturationParams,
};
pub use darkstate::{dark_state_0, dark_state_pair, darkness_residual, pi0_metric, DarkStatePair};
pub use propagator::{
    expm, integrate_rk4, propagate, propagate_oracle, IntegratorConfig, Method, Sample,
    Trajectory,
};
pub use experiments::{
    adiabaticity_scan, compare_models, default_k, run_transfer, run_transfer_traced,
    sweep_length, CompareResult, PulseSchedule, RunSettings, ScanPoint, SweepPoint,
    TransferResult,
};
