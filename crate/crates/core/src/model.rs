//! Physical parameters and the time-dependent non-Hermitian Hamiltonians.
//!
//! Everything is expressed in scaled units: the rate unit is
//! `u = alpha / sqrt(L0)`, where `alpha = nu * sqrt(L)` is the
//! length-independent cavity-fibre coupling scale and `L0` the unit fibre
//! length. Times are in `1/u` and fibre lengths in units of `L0`. In these
//! units the cavity-fibre coupling at length `L` is `nu = 1 / sqrt(L)` and
//! the fibre mode spacing is `delta0 / L`.
//!
//! The evolution of the no-jump branch is generated by a non-Hermitian
//! Hamiltonian: atomic spontaneous emission (`gamma`) and cavity loss
//! (`kappa`) enter as `-i` times positive-semidefinite operators, so the
//! squared state norm is the probability that no decay has occurred.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, ModelKind, StateVector};

/// Speed of light in m/s, for the physical-unit bridge only.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A Gaussian laser pulse, `value(t) = peak * exp(-((t - center)/width)^2)`.
///
/// In the eliminated model the pulse directly specifies the effective Raman
/// coupling `delta_g * s01(t)`; in the full model it is the Rabi frequency
/// `Omega(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub peak: f64,
    pub center: f64,
    pub width: f64,
}

impl Pulse {
    pub fn new(peak: f64, center: f64, width: f64) -> Self {
        Pulse { peak, center, width }
    }

    /// Pulse amplitude at time `t`.
    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.peak * (-x * x).exp()
    }
}

/// The two node pulses. Node B is switched on first in the transfer
/// protocol, so `b.center < a.center` for a counterintuitive sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePair {
    pub a: Pulse,
    pub b: Pulse,
}

impl PulsePair {
    pub fn new(a: Pulse, b: Pulse) -> Self {
        PulsePair { a, b }
    }
}

/// Dimensionless saturation parameters of a driven atom-cavity node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationParams {
    pub s00: f64,
    pub s11: f64,
    pub s01: C64,
    pub s10: C64,
}

/// Saturation parameters for Rabi frequency `omega`, cavity coupling `g`,
/// global detuning `delta_g` and spontaneous rate `gamma`:
/// `s00 = |omega|^2 / (delta_g^2 + gamma^2)`, `s11 = |g|^2 / (..)`,
/// `s01 = omega * conj(g) / (..)`, `s10 = conj(s01)`.
pub fn saturation_params(omega: C64, g: C64, delta_g: f64, gamma: f64) -> Result<SaturationParams> {
    let denom = delta_g * delta_g + gamma * gamma;
    if denom <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let s01 = omega * g.conj() / denom;
    Ok(SaturationParams {
        s00: omega.norm_sqr() / denom,
        s11: g.norm_sqr() / denom,
        s01,
        s10: s01.conj(),
    })
}

/// All physical rates, detunings, geometry and model flags, in scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub model_kind: ModelKind,
    /// Global detuning of the lasers from the excited state. Required
    /// nonzero for the full model; in the eliminated model it is only
    /// needed to convert between the drive product `delta_g * s01` (given
    /// by the pulses) and the bare saturation parameters.
    pub delta_g: f64,
    /// Raman (two-photon) detuning. The transfer protocol assumes Raman
    /// resonance, `delta_r = 0`.
    pub delta_r: f64,
    /// Atomic spontaneous-emission rate.
    pub gamma: f64,
    /// Cavity loss rate into non-fibre channels, identical for both cavities.
    pub kappa: f64,
    /// Atom-cavity couplings. Used directly by the full model; in the
    /// eliminated model they fix `s11` (and through it `s00`), which only
    /// matters when `gamma > 0`, `include_s11_shift` is set, or the light
    /// shift is left uncompensated.
    pub g_a: f64,
    pub g_b: f64,
    /// Cavity-fibre coupling, `1/sqrt(length)` in scaled units. Kept in
    /// sync with `length` by [`ModelParams::set_length`].
    pub nu: f64,
    /// Fibre length in units of `L0`.
    pub length: f64,
    /// Fibre mode spacing at unit length; the spacing at `length` is
    /// `delta0 / length`.
    pub delta0: f64,
    /// Fibre half-mode-count; the fibre carries `2K + 1` modes with the
    /// resonant mode at `k = 0`.
    pub k_max: u32,
    pub pulses: PulsePair,
    /// Cancel the static light shift of the |a0> level (a second,
    /// off-resonant laser in the physical setup). Default on.
    pub compensate_light_shift: bool,
    /// Include the real (`delta_g * s11 * n_photon`) light shift of the
    /// cavity-excited states in the eliminated model. Off by default: the
    /// reference operating point parameterizes the dynamics purely by the
    /// drive product, and the shift would act as an unspecified cavity
    /// detuning. The flag exists so the effect can be studied.
    pub include_s11_shift: bool,
    /// Swap the alternating fibre-mode parity, `(-1)^k -> (-1)^(k+1)`.
    /// A pure gauge choice: observable populations are unaffected.
    pub flip_fibre_parity: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            model_kind: ModelKind::Eliminated,
            delta_g: 0.0,
            delta_r: 0.0,
            gamma: 0.0,
            kappa: 0.1,
            g_a: 0.0,
            g_b: 0.0,
            nu: 1.0,
            length: 1.0,
            delta0: 0.1,
            k_max: 10,
            pulses: PulsePair::new(Pulse::new(0.0, 0.0, 1.0), Pulse::new(0.0, 0.0, 1.0)),
            compensate_light_shift: true,
            include_s11_shift: false,
            flip_fibre_parity: false,
        }
    }
}

impl ModelParams {
    /// Sets the fibre length and the matching coupling `nu = 1/sqrt(length)`.
    pub fn set_length(&mut self, length: f64) {
        self.length = length;
        self.nu = 1.0 / length.sqrt();
    }

    /// Fibre mode spacing at the configured length.
    pub fn fibre_spacing(&self) -> f64 {
        self.delta0 / self.length
    }

    /// The Q = 1 basis this parameter set acts on.
    pub fn basis(&self) -> Basis {
        Basis::new(self.model_kind, self.k_max)
    }

    /// Scalar action of the Hamiltonian on the Q = 0 sector: both atoms sit
    /// in |a1> with zero photons, so only the Raman detuning survives.
    pub fn q0_rate(&self) -> f64 {
        2.0 * self.delta_r
    }

    /// Checks all parameter invariants; the error message names the field.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(self.gamma >= 0.0) {
            return bad("gamma must be >= 0");
        }
        if !(self.kappa >= 0.0) {
            return bad("kappa must be >= 0");
        }
        if !(self.nu >= 0.0) {
            return bad("nu must be >= 0");
        }
        if !(self.length > 0.0) {
            return bad("length must be > 0");
        }
        if !(self.delta0 > 0.0) {
            return bad("delta0 must be > 0");
        }
        for (name, pulse) in [("a", &self.pulses.a), ("b", &self.pulses.b)] {
            if !(pulse.width > 0.0) {
                return Err(Error::InvalidParams(format!("pulse {name}: width must be > 0")));
            }
            if !(pulse.peak >= 0.0) {
                return Err(Error::InvalidParams(format!("pulse {name}: peak must be >= 0")));
            }
        }
        match self.model_kind {
            ModelKind::Full => {
                if self.delta_g == 0.0 {
                    return bad("delta_g must be nonzero for the full model");
                }
            }
            ModelKind::Eliminated => {
                // Only the drive product delta_g * s01 is specified by the
                // pulses; recovering s00 and s11 (needed for decay terms and
                // light shifts) requires delta_g and the cavity couplings.
                let needs_saturations = self.gamma > 0.0
                    || !self.compensate_light_shift
                    || self.include_s11_shift;
                if needs_saturations && (self.delta_g == 0.0 || self.g_a <= 0.0 || self.g_b <= 0.0)
                {
                    return bad(
                        "eliminated model with gamma > 0, include_s11_shift, or an \
                         uncompensated light shift needs delta_g != 0 and g_a, g_b > 0",
                    );
                }
            }
        }
        Ok(())
    }
}

/// Detunings `Delta_k = k * delta0 / length` of the fibre modes,
/// `k = -K ..= K`. The resonant dark mode sits at `k = 0`.
pub fn fibre_detunings(params: &ModelParams) -> Vec<f64> {
    let k_max = params.k_max as i64;
    let spacing = params.fibre_spacing();
    (-k_max..=k_max).map(|k| k as f64 * spacing).collect()
}

/// Physical-unit estimates for a fibre of length `l_metres` whose cavity
/// would decay into an infinite fibre at rate `kappa_f` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalEstimate {
    /// Coupling to an individual fibre mode, `sqrt(8 pi c kappa_f / L)` (rad/s).
    pub nu: f64,
    /// Length-independent coupling scale `nu * sqrt(L)` (rad/s * sqrt(m)).
    pub alpha: f64,
    /// Number of fibre modes coupling significantly, `kappa_f L / (4 pi c)`.
    pub n_modes_estimate: f64,
}

/// Bridges scaled simulation units to laboratory numbers.
pub fn estimate_physical(kappa_f: f64, l_metres: f64) -> Result<PhysicalEstimate> {
    if !(kappa_f > 0.0) || !(l_metres > 0.0) {
        return Err(Error::InvalidParams(
            "estimate_physical needs kappa_f > 0 and l_metres > 0".to_string(),
        ));
    }
    let nu = (8.0 * kappa_f * std::f64::consts::PI * SPEED_OF_LIGHT / l_metres).sqrt();
    Ok(PhysicalEstimate {
        nu,
        alpha: nu * l_metres.sqrt(),
        n_modes_estimate: kappa_f * l_metres / (4.0 * std::f64::consts::PI * SPEED_OF_LIGHT),
    })
}

/// Coefficients of one eliminated-model node at a given time.
struct NodeCoeffs {
    atom_diag: C64,
    cav_diag: C64,
    /// Matrix element mapping the cavity amplitude into the atom slot,
    /// `(delta_g - i gamma) s01`.
    down: C64,
    /// Matrix element mapping the atom amplitude into the cavity slot,
    /// `(delta_g - i gamma) s10`.
    up: C64,
}

/// Coefficients of one full-model node at a given time.
struct FullNodeCoeffs {
    a0_diag: C64,
    b_diag: C64,
    cav_diag: C64,
    omega: f64,
    g: f64,
}

/// Matrix-free application of `H(t)` to Q = 1 state vectors.
///
/// Pure and reentrant: one action may be shared across threads and applied
/// to distinct state vectors concurrently. The Q = 0 amplitude is acted on
/// by the scalar [`HamiltonianAction::q0_rate`] and never mixes with Q = 1.
#[derive(Debug, Clone)]
pub struct HamiltonianAction {
    params: ModelParams,
    basis: Basis,
    detunings: Vec<f64>,
    parity: Vec<f64>,
}

impl HamiltonianAction {
    /// Validates the parameters and precomputes the fibre grid.
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let basis = params.basis();
        let detunings = fibre_detunings(&params);
        let offset = u32::from(params.flip_fibre_parity);
        let k_max = params.k_max as i64;
        let parity = (-k_max..=k_max)
            .map(|k| if (k + offset as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 })
            .collect();
        Ok(HamiltonianAction { params, basis, detunings, parity })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// Scalar action on the Q = 0 amplitude, `2 * delta_r`.
    pub fn q0_rate(&self) -> f64 {
        self.params.q0_rate()
    }

    /// `H(t) |psi>`.
    pub fn apply(&self, t: f64, psi: &StateVector) -> Result<StateVector> {
        if psi.basis() != self.basis {
            return Err(Error::BasisMismatch { expected: self.basis, found: psi.basis() });
        }
        let mut out = StateVector::zero(self.basis);
        self.apply_into(t, psi.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// Writes `H(t) * src` into `dst`. Hot path: no allocation, no checks
    /// beyond debug assertions.
    pub fn apply_into(&self, t: f64, src: &[C64], dst: &mut [C64]) {
        debug_assert_eq!(src.len(), self.dimension());
        debug_assert_eq!(dst.len(), self.dimension());
        match self.params.model_kind {
            ModelKind::Eliminated => self.apply_eliminated_into(t, src, dst),
            ModelKind::Full => self.apply_full_into(t, src, dst),
        }
    }

    fn elim_node_coeffs(&self, pulse: &Pulse, g: f64, t: f64) -> NodeCoeffs {
        let p = &self.params;
        // The pulse is the drive product delta_g * s01(t) directly.
        let drive = pulse.value(t);
        let denom = p.delta_g * p.delta_g + p.gamma * p.gamma;
        let s11 = if g != 0.0 && denom > 0.0 { g * g / denom } else { 0.0 };
        // gamma-proportional pieces carry gamma/delta_g times the drive.
        let gamma_ratio = if p.gamma != 0.0 { p.gamma / p.delta_g } else { 0.0 };
        let coupling = C64::new(drive, -drive * gamma_ratio);
        let s00 = if s11 > 0.0 && p.delta_g != 0.0 {
            let s01 = drive / p.delta_g;
            s01 * s01 / s11
        } else {
            0.0
        };
        let atom_shift = if p.compensate_light_shift { 0.0 } else { p.delta_g * s00 };
        let cav_shift = if p.include_s11_shift { p.delta_g * s11 } else { 0.0 };
        NodeCoeffs {
            atom_diag: C64::new(p.delta_r + atom_shift, -p.gamma * s00),
            cav_diag: C64::new(2.0 * p.delta_r + cav_shift, -(p.kappa + p.gamma * s11)),
            down: coupling,
            up: coupling,
        }
    }

    fn apply_eliminated_into(&self, t: f64, src: &[C64], dst: &mut [C64]) {
        let p = &self.params;
        let basis = self.basis;
        let node_a = self.elim_node_coeffs(&p.pulses.a, p.g_a, t);
        let node_b = self.elim_node_coeffs(&p.pulses.b, p.g_b, t);
        let two_dr = 2.0 * p.delta_r;
        let nu = p.nu;

        let ia = basis.idx_atom_a0();
        let ica = basis.idx_cavity_a();
        let f0 = basis.idx_fibre_base();
        let icb = basis.idx_cavity_b();
        let ib = basis.idx_atom_b0();

        let cav_a = src[ica];
        let cav_b = src[icb];
        let mut sum_plain = C64::new(0.0, 0.0);
        let mut sum_parity = C64::new(0.0, 0.0);
        for (j, (&dk, &par)) in self.detunings.iter().zip(&self.parity).enumerate() {
            let f = src[f0 + j];
            sum_plain += f;
            sum_parity += par * f;
            dst[f0 + j] = (dk + two_dr) * f + nu * (cav_a + par * cav_b);
        }
        dst[ia] = node_a.atom_diag * src[ia] + node_a.down * cav_a;
        dst[ica] = node_a.up * src[ia] + node_a.cav_diag * cav_a + nu * sum_plain;
        dst[icb] = node_b.cav_diag * cav_b + node_b.up * src[ib] + nu * sum_parity;
        dst[ib] = node_b.down * cav_b + node_b.atom_diag * src[ib];
    }

    fn full_node_coeffs(&self, pulse: &Pulse, g: f64, t: f64) -> FullNodeCoeffs {
        let p = &self.params;
        let omega = pulse.value(t);
        let denom = p.delta_g * p.delta_g + p.gamma * p.gamma;
        let s00 = omega * omega / denom;
        // With compensation on, a counter-shift zeroes the net static light
        // shift of |a0> (the compensating laser of the physical setup).
        let a0_shift = if p.compensate_light_shift { -p.delta_g * s00 } else { 0.0 };
        FullNodeCoeffs {
            a0_diag: C64::new(p.delta_r + a0_shift, 0.0),
            b_diag: C64::new(p.delta_r - p.delta_g, -p.gamma),
            cav_diag: C64::new(2.0 * p.delta_r, -p.kappa),
            omega,
            g,
        }
    }

    fn apply_full_into(&self, t: f64, src: &[C64], dst: &mut [C64]) {
        let p = &self.params;
        let basis = self.basis;
        let node_a = self.full_node_coeffs(&p.pulses.a, p.g_a, t);
        let node_b = self.full_node_coeffs(&p.pulses.b, p.g_b, t);
        let two_dr = 2.0 * p.delta_r;
        let nu = p.nu;

        let ia0 = basis.idx_atom_a0();
        let iab = basis.idx_atom_a_excited().expect("full basis");
        let ica = basis.idx_cavity_a();
        let f0 = basis.idx_fibre_base();
        let icb = basis.idx_cavity_b();
        let ibb = basis.idx_atom_b_excited().expect("full basis");
        let ib0 = basis.idx_atom_b0();

        let cav_a = src[ica];
        let cav_b = src[icb];
        let mut sum_plain = C64::new(0.0, 0.0);
        let mut sum_parity = C64::new(0.0, 0.0);
        for (j, (&dk, &par)) in self.detunings.iter().zip(&self.parity).enumerate() {
            let f = src[f0 + j];
            sum_plain += f;
            sum_parity += par * f;
            dst[f0 + j] = (dk + two_dr) * f + nu * (cav_a + par * cav_b);
        }
        dst[ia0] = node_a.a0_diag * src[ia0] + node_a.omega * src[iab];
        dst[iab] = node_a.omega * src[ia0] + node_a.b_diag * src[iab] + node_a.g * cav_a;
        dst[ica] = node_a.g * src[iab] + node_a.cav_diag * cav_a + nu * sum_plain;
        dst[icb] = node_b.cav_diag * cav_b + node_b.g * src[ibb] + nu * sum_parity;
        dst[ibb] = node_b.g * cav_b + node_b.b_diag * src[ibb] + node_b.omega * src[ib0];
        dst[ib0] = node_b.omega * src[ibb] + node_b.a0_diag * src[ib0];
    }
}

/// Applies the adiabatically eliminated Hamiltonian of a parameter set.
pub fn apply_eliminated(params: &ModelParams, t: f64, psi: &StateVector) -> Result<StateVector> {
    if params.model_kind != ModelKind::Eliminated {
        return Err(Error::ModelKindMismatch {
            expected: ModelKind::Eliminated,
            found: params.model_kind,
        });
    }
    HamiltonianAction::new(params.clone())?.apply(t, psi)
}

/// Applies the full three-level Hamiltonian of a parameter set.
pub fn apply_full(params: &ModelParams, t: f64, psi: &StateVector) -> Result<StateVector> {
    if params.model_kind != ModelKind::Full {
        return Err(Error::ModelKindMismatch {
            expected: ModelKind::Full,
            found: params.model_kind,
        });
    }
    HamiltonianAction::new(params.clone())?.apply(t, psi)
}
