//! Single-excitation basis enumeration and state-vector algebra.
//!
//! The dynamics conserves the charge Q = (total photon number) + (number of
//! atoms in |a0> or |b>). Every protocol in this crate starts with Q <= 1,
//! so states are represented by a vector over the enumerated Q = 1 sector
//! plus a single complex amplitude for the one-dimensional Q = 0 sector
//! (`BasisState::AllGround`). The two sectors never mix.
//!
//! Basis ordering runs left to right along the physical chain,
//!
//! ```text
//! atom A (a0) - [atom A (b)] - cavity A - fibre -K..K - cavity B - [atom B (b)] - atom B (a0)
//! ```
//!
//! with the excited-state slots present only in the full model. This makes
//! both Hamiltonians tridiagonal apart from the cavity-to-fibre fan, which
//! is what the matrix-free application in [`crate::model`] exploits.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Which Hamiltonian family a basis (or parameter set) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Two ground states per atom; the excited level has been adiabatically
    /// eliminated and the lasers enter through effective Raman couplings.
    Eliminated,
    /// Full three-level atoms including the excited state |b>.
    Full,
}

/// Atomic level that can hold the excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomLevel {
    /// The |a0> ground level.
    A0,
    /// The excited level |b> (full model only).
    Excited,
}

/// A basis state: where the single excitation sits, or the Q = 0 state.
///
/// Each Q = 1 state implicitly fixes the rest of the system: the other atom
/// is in |a1> and all remaining photon modes are in vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisState {
    /// Excitation held by atom A.
    AtomA(AtomLevel),
    /// One photon in cavity A, both atoms in |a1>.
    CavityA,
    /// One photon in fibre mode `k`; `k` runs over -K..=K with the resonant
    /// (dark) mode at `k = 0`.
    Fibre(i32),
    /// One photon in cavity B, both atoms in |a1>.
    CavityB,
    /// Excitation held by atom B.
    AtomB(AtomLevel),
    /// |a1,0>_A |a1,0>_B |vac>: the Q = 0 sector.
    AllGround,
}

/// Enumerated Q = 1 sector for one of the two models.
///
/// The basis is fully determined by `(kind, k_half)`, so the type is `Copy`
/// and index arithmetic replaces stored state lists. `AllGround` is *not*
/// part of the indexed sector; its amplitude travels separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Basis {
    kind: ModelKind,
    k_half: u32,
}

/// Builds the conserved-excitation basis for the given model kind and fibre
/// half-width `K` (the fibre carries `2K + 1` modes).
pub fn build_basis(kind: ModelKind, k_half: u32) -> Basis {
    Basis::new(kind, k_half)
}

impl Basis {
    pub fn new(kind: ModelKind, k_half: u32) -> Self {
        Basis { kind, k_half }
    }

    pub fn model_kind(&self) -> ModelKind {
        self.kind
    }

    /// Fibre half-width K.
    pub fn k_half(&self) -> u32 {
        self.k_half
    }

    /// Number of fibre modes, `2K + 1`.
    pub fn n_fibre_modes(&self) -> usize {
        2 * self.k_half as usize + 1
    }

    /// Dimension of the Q = 1 sector: `4 + (2K+1)` for the eliminated model,
    /// `6 + (2K+1)` for the full model.
    pub fn dimension(&self) -> usize {
        let atoms = match self.kind {
            ModelKind::Eliminated => 4,
            ModelKind::Full => 6,
        };
        atoms + self.n_fibre_modes()
    }

    pub(crate) fn idx_atom_a0(&self) -> usize {
        0
    }

    pub(crate) fn idx_atom_a_excited(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Eliminated => None,
            ModelKind::Full => Some(1),
        }
    }

    pub(crate) fn idx_cavity_a(&self) -> usize {
        match self.kind {
            ModelKind::Eliminated => 1,
            ModelKind::Full => 2,
        }
    }

    /// Index of fibre mode `k = -K`.
    pub(crate) fn idx_fibre_base(&self) -> usize {
        self.idx_cavity_a() + 1
    }

    pub(crate) fn idx_cavity_b(&self) -> usize {
        self.idx_fibre_base() + self.n_fibre_modes()
    }

    pub(crate) fn idx_atom_b_excited(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Eliminated => None,
            ModelKind::Full => Some(self.idx_cavity_b() + 1),
        }
    }

    pub(crate) fn idx_atom_b0(&self) -> usize {
        self.dimension() - 1
    }

    /// Index of a basis state, or an error if the state does not belong to
    /// this basis (wrong model kind, mode out of range, or `AllGround`).
    pub fn index_of(&self, state: BasisState) -> Result<usize> {
        let missing = || Error::StateNotInBasis { state };
        match state {
            BasisState::AtomA(AtomLevel::A0) => Ok(self.idx_atom_a0()),
            BasisState::AtomA(AtomLevel::Excited) => self.idx_atom_a_excited().ok_or_else(missing),
            BasisState::CavityA => Ok(self.idx_cavity_a()),
            BasisState::Fibre(k) => {
                let half = self.k_half as i64;
                if (k as i64).abs() <= half {
                    Ok(self.idx_fibre_base() + (k as i64 + half) as usize)
                } else {
                    Err(missing())
                }
            }
            BasisState::CavityB => Ok(self.idx_cavity_b()),
            BasisState::AtomB(AtomLevel::Excited) => self.idx_atom_b_excited().ok_or_else(missing),
            BasisState::AtomB(AtomLevel::A0) => Ok(self.idx_atom_b0()),
            BasisState::AllGround => Err(missing()),
        }
    }

    /// Basis state at a given index (inverse of [`Basis::index_of`]).
    pub fn state_at(&self, index: usize) -> Result<BasisState> {
        if index >= self.dimension() {
            return Err(Error::InvalidParams(format!(
                "index {index} out of range for dimension {}",
                self.dimension()
            )));
        }
        let fibre_base = self.idx_fibre_base();
        let state = if index == self.idx_atom_a0() {
            BasisState::AtomA(AtomLevel::A0)
        } else if Some(index) == self.idx_atom_a_excited() {
            BasisState::AtomA(AtomLevel::Excited)
        } else if index == self.idx_cavity_a() {
            BasisState::CavityA
        } else if index < self.idx_cavity_b() {
            BasisState::Fibre((index - fibre_base) as i32 - self.k_half as i32)
        } else if index == self.idx_cavity_b() {
            BasisState::CavityB
        } else if Some(index) == self.idx_atom_b_excited() {
            BasisState::AtomB(AtomLevel::Excited)
        } else {
            BasisState::AtomB(AtomLevel::A0)
        };
        Ok(state)
    }

    /// Iterator over the Q = 1 basis states in index order.
    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dimension()).map(move |i| self.state_at(i).expect("index in range"))
    }
}

/// Complex amplitude vector over the Q = 1 sector of a [`Basis`].
///
/// The squared norm is the probability that no quantum jump has occurred;
/// it stays in `[0, 1]` (up to integrator tolerance) under the non-Hermitian
/// evolution and is never renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: Basis,
    amps: Vec<C64>,
}

impl StateVector {
    /// The zero vector.
    pub fn zero(basis: Basis) -> Self {
        StateVector { basis, amps: vec![C64::new(0.0, 0.0); basis.dimension()] }
    }

    /// Unit vector on a single basis state.
    pub fn unit(basis: Basis, state: BasisState) -> Result<Self> {
        let mut v = StateVector::zero(basis);
        let idx = basis.index_of(state)?;
        v.amps[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// Wraps an amplitude vector; the length must match the basis dimension.
    pub fn from_amplitudes(basis: Basis, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dimension() {
            return Err(Error::InvalidParams(format!(
                "amplitude vector length {} does not match basis dimension {}",
                amps.len(),
                basis.dimension()
            )));
        }
        Ok(StateVector { basis, amps })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// Amplitude on a single basis state.
    pub fn amplitude(&self, state: BasisState) -> Result<C64> {
        Ok(self.amps[self.basis.index_of(state)?])
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Returns the vector scaled to unit norm; degenerate for (near-)zero input.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n <= 0.0 {
            return Err(Error::DegenerateDarkState);
        }
        for a in &mut self.amps {
            *a /= n;
        }
        Ok(self)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        StateVector {
            basis: self.basis,
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }
}

/// Population `|amplitude|^2` of a basis state.
pub fn population(state: &StateVector, basis_state: BasisState) -> Result<f64> {
    Ok(state.amplitude(basis_state)?.norm_sqr())
}

/// Inner product `<a|b>`, conjugate-linear in the first argument.
///
/// `|overlap|^2` is the fidelity between pure states when both arguments are
/// normalized.
pub fn overlap(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.basis != b.basis {
        return Err(Error::BasisMismatch { expected: a.basis, found: b.basis });
    }
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Photon-number expectation values of a Q = 1 state. In the
/// single-excitation sector each photon number equals the occupation
/// probability of the corresponding basis state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonObservables {
    pub n_cav_a: f64,
    pub n_cav_b: f64,
    pub n_fibre_total: f64,
    /// Occupation of the resonant mode k = 0 only.
    pub n_fibre_resonant: f64,
}

/// Photon observables of a state.
pub fn photon_observables(state: &StateVector) -> PhotonObservables {
    let basis = state.basis();
    let amps = state.amplitudes();
    let base = basis.idx_fibre_base();
    let n = basis.n_fibre_modes();
    let mut total = 0.0;
    for a in &amps[base..base + n] {
        total += a.norm_sqr();
    }
    PhotonObservables {
        n_cav_a: amps[basis.idx_cavity_a()].norm_sqr(),
        n_cav_b: amps[basis.idx_cavity_b()].norm_sqr(),
        n_fibre_total: total,
        n_fibre_resonant: amps[base + basis.k_half() as usize].norm_sqr(),
    }
}

/// Observables recorded along a trajectory, computed straight from an
/// amplitude slice to avoid cloning in the integrator hot path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ChainObservables {
    pub pop_atom_a: f64,
    pub pop_cav_a: f64,
    pub pop_fibre: f64,
    pub pop_cav_b: f64,
    pub pop_atom_b: f64,
    pub n_fibre_resonant: f64,
}

pub(crate) fn chain_observables(basis: Basis, amps: &[C64]) -> ChainObservables {
    let base = basis.idx_fibre_base();
    let n = basis.n_fibre_modes();
    let mut fibre = 0.0;
    for a in &amps[base..base + n] {
        fibre += a.norm_sqr();
    }
    ChainObservables {
        pop_atom_a: amps[basis.idx_atom_a0()].norm_sqr(),
        pop_cav_a: amps[basis.idx_cavity_a()].norm_sqr(),
        pop_fibre: fibre,
        pop_cav_b: amps[basis.idx_cavity_b()].norm_sqr(),
        pop_atom_b: amps[basis.idx_atom_b0()].norm_sqr(),
        n_fibre_resonant: amps[base + basis.k_half() as usize].norm_sqr(),
    }
}

/// Encodes the logical input `(alpha |0> + beta |1>) |1>` as a Q = 1 state
/// vector (weight `alpha` on atom A's |a0> level) plus the Q = 0 amplitude
/// `beta` on `AllGround`. The two sectors evolve independently.
pub fn encode_initial(alpha: C64, beta: C64, basis: Basis) -> Result<(StateVector, C64)> {
    let norm_sq = alpha.norm_sqr() + beta.norm_sqr();
    if (norm_sq - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm_sq });
    }
    let mut q1 = StateVector::zero(basis);
    let idx = basis.index_of(BasisState::AtomA(AtomLevel::A0))?;
    q1.amps[idx] = alpha;
    Ok((q1, beta))
}
