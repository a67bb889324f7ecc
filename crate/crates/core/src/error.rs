//! Error type shared by all modules of the crate.

use std::fmt;

use crate::hilbert::{Basis, BasisState, ModelKind};

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong when building states, applying Hamiltonians
/// or integrating them.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input amplitude pair was not normalized to 1 within tolerance.
    NotNormalized { norm_sq: f64 },
    /// Two state vectors (or a state and an operator) live in different bases.
    BasisMismatch { expected: Basis, found: Basis },
    /// An operation received a model of the wrong kind.
    ModelKindMismatch { expected: ModelKind, found: ModelKind },
    /// The queried basis state is not part of the indexed Q = 1 sector.
    StateNotInBasis { state: BasisState },
    /// A parameter set violates its invariants; the message names the field.
    InvalidParams(String),
    /// Saturation parameters with `delta_g == 0` and `gamma == 0`.
    ZeroDenominator,
    /// Dark-state construction produced an identically zero vector.
    DegenerateDarkState,
    /// A trajectory metric was asked of a trajectory with no samples.
    EmptyTrajectory,
    /// The integrator produced a norm above 1 or non-finite amplitudes,
    /// usually a sign that the time step is too large.
    NumericalFailure { t: f64, detail: String },
    /// The dense oracle is restricted to small dimensions.
    DimensionTooLarge { dim: usize, max: usize },
    /// The exponential series did not converge (after slice splitting).
    SeriesNotConvergent,
    /// The transfer protocol requires the node-B pulse to peak first.
    PulseOrder { center_a: f64, center_b: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotNormalized { norm_sq } => {
                write!(f, "input amplitudes are not normalized: |alpha|^2 + |beta|^2 = {norm_sq}")
            }
            Error::BasisMismatch { expected, found } => {
                write!(f, "basis mismatch: expected {expected:?}, found {found:?}")
            }
            Error::ModelKindMismatch { expected, found } => {
                write!(f, "model kind mismatch: expected {expected:?}, found {found:?}")
            }
            Error::StateNotInBasis { state } => {
                write!(f, "basis state {state:?} is not part of the indexed sector")
            }
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::ZeroDenominator => {
                write!(f, "saturation parameters need delta_g^2 + gamma^2 > 0")
            }
            Error::DegenerateDarkState => {
                write!(f, "dark state is degenerate: all construction amplitudes vanish")
            }
            Error::EmptyTrajectory => write!(f, "trajectory holds no samples"),
            Error::NumericalFailure { t, detail } => {
                write!(f, "numerical failure at t = {t}: {detail}")
            }
            Error::DimensionTooLarge { dim, max } => {
                write!(f, "dimension {dim} exceeds the dense-oracle limit {max}")
            }
            Error::SeriesNotConvergent => {
                write!(f, "matrix-exponential series did not converge")
            }
            Error::PulseOrder { center_a, center_b } => {
                write!(
                    f,
                    "counterintuitive ordering violated: node-B pulse must peak before \
                     node-A pulse (t_a = {center_a}, t_b = {center_b})"
                )
            }
        }
    }
}

impl std::error::Error for Error {}
