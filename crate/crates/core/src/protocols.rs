//! End-to-end sensing scenarios.
//!
//! * Bi-frequency illumination: a probe at frequencies `ω₁, ω₂` reflects
//!   off a target with reflectivities `η₁` and `η₂ = η₁ + λ`, each frequency
//!   mixing with its own thermal bath. The probe is either a two-mode
//!   squeezed vacuum or a pair of coherent states with `|α|² = n_s`.
//! * Quantum illumination: one arm of a squeezed pair reflects off a weak
//!   target (reflectivity `η²`) while the idler is kept.
//! * The equal-occupation approximation for the two thermal baths.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::fock::{
    anticommutator_residual, fock_derivative, qfi_spectral, qfi_from_derivative, FockState, LossChannel, TwoModeInput,
    DEFAULT_DROP_THRESHOLD, DEFAULT_STEP,
};
use crate::gaussian::{GaussianState, SymplecticTransform};
use crate::qfi::{hc_closed_form, hq_closed_form, qfi_gaussian, QfiResult, StateFamily};
use crate::sld::sld;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Tmsv,
    Coherent,
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Probe::Tmsv => "tmsv",
            Probe::Coherent => "coherent",
        })
    }
}

impl FromStr for Probe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tmsv" => Ok(Probe::Tmsv),
            "coherent" => Ok(Probe::Coherent),
            other => Err(invalid(format!("unknown probe '{other}', expected tmsv or coherent"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BiFrequencyParams {
    pub eta1: f64,
    pub lambda: f64,
    pub n_s: f64,
    pub n_th: f64,
}

impl BiFrequencyParams {
    pub fn new(eta1: f64, lambda: f64, n_s: f64, n_th: f64) -> Result<Self> {
        let p = Self { eta1, lambda, n_s, n_th };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let eta2 = self.eta1 + self.lambda;
        if !(0.0..=1.0).contains(&self.eta1) || !(0.0..=1.0).contains(&eta2) {
            return Err(domain(format!(
                "reflectivities must lie in [0, 1], got eta1={} eta2={eta2}",
                self.eta1
            )));
        }
        if !(self.n_s >= 0.0 && self.n_th >= 0.0) || !self.n_s.is_finite() || !self.n_th.is_finite() {
            return Err(domain(format!(
                "photon numbers must be finite and >= 0, got n_s={} n_th={}",
                self.n_s, self.n_th
            )));
        }
        Ok(())
    }

    pub fn eta2(&self) -> f64 {
        self.eta1 + self.lambda
    }
}

/// Four-mode input ordered bath, signal, bath, signal.
pub fn bifrequency_input(probe: Probe, n_s: f64, n_th: f64) -> Result<GaussianState> {
    let bath = GaussianState::thermal(n_th)?;
    match probe {
        Probe::Tmsv => Ok(bath
            .tensor(&bath)
            .tensor(&GaussianState::tmsv(n_s)?)
            .permute_modes(&[0, 2, 1, 3])?),
        Probe::Coherent => {
            if !(n_s >= 0.0) {
                return Err(invalid(format!("n_s must be >= 0, got {n_s}")));
            }
            let coh = GaussianState::coherent(n_s.sqrt(), 0.0);
            Ok(bath.tensor(&coh).tensor(&bath).tensor(&coh))
        }
    }
}

/// `S_BS(η₁) ⊕ S_BS(η₁ + λ)`.
pub fn bifrequency_transform(eta1: f64, lambda: f64) -> Result<SymplecticTransform> {
    Ok(SymplecticTransform::beam_splitter(eta1)?.direct_sum(&SymplecticTransform::beam_splitter(eta1 + lambda)?))
}

/// Two-mode state collected at the receiver (the bath ports are discarded).
pub fn bifrequency_received_state(p: &BiFrequencyParams, probe: Probe) -> Result<GaussianState> {
    p.validate()?;
    let input = bifrequency_input(probe, p.n_s, p.n_th)?;
    bifrequency_transform(p.eta1, p.lambda)?.apply(&input)?.partial_trace(&[1, 3])
}

/// `λ ↦` received state at fixed `(η₁, n_s, n_th)`, working point `λ = 0`.
pub fn bifrequency_family(probe: Probe, eta1: f64, n_s: f64, n_th: f64) -> Result<StateFamily> {
    if !(eta1 > 0.0 && eta1 < 1.0) {
        return Err(domain(format!("eta1 must lie strictly inside (0, 1), got {eta1}")));
    }
    BiFrequencyParams::new(eta1, 0.0, n_s, n_th)?;
    let input = bifrequency_input(probe, n_s, n_th)?;
    Ok(StateFamily::new(
        move |lambda| {
            BiFrequencyParams::new(eta1, lambda, n_s, n_th)?;
            bifrequency_transform(eta1, lambda)?.apply(&input)?.partial_trace(&[1, 3])
        },
        0.0,
    ))
}

/// Entries `(a, b, c_λ)` of the received TMSV covariance
/// `[[a I, b σ_Z], [b σ_Z, c_λ I]]`.
pub fn received_entries(p: &BiFrequencyParams) -> (f64, f64, f64) {
    let entry = |eta: f64| 1.0 + 2.0 * p.n_th + 2.0 * eta * (2.0 * p.n_s - p.n_th);
    let b = 2.0 * 2f64.sqrt() * p.eta1.sqrt() * (p.n_s * (2.0 * p.n_s + 1.0)).sqrt() * p.eta2().sqrt();
    (entry(p.eta1), b, entry(p.eta2()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Advantage {
    pub h_q: f64,
    pub h_c: f64,
    pub ratio: f64,
}

impl Advantage {
    fn from_pair(h_q: f64, h_c: f64) -> Result<Self> {
        if !(h_c > 0.0) {
            return Err(Error::NoInformation(h_c));
        }
        Ok(Self { h_q, h_c, ratio: h_q / h_c })
    }
}

/// `H_Q`, `H_C` and their ratio from the closed forms.
pub fn bifrequency_advantage(eta1: f64, n_s: f64, n_th: f64) -> Result<Advantage> {
    if n_s == 0.0 && n_th == 0.0 {
        return Err(Error::NoInformation(0.0));
    }
    Advantage::from_pair(hq_closed_form(eta1, n_s, n_th)?, hc_closed_form(eta1, n_s, n_th)?)
}

/// The same quantities from the numeric Gaussian pipeline.
pub fn bifrequency_advantage_numeric(eta1: f64, n_s: f64, n_th: f64) -> Result<Advantage> {
    if !(eta1 > 0.0 && eta1 < 1.0) {
        return Err(domain(format!("eta1 must lie strictly inside (0, 1), got {eta1}")));
    }
    let h_q = qfi_gaussian(&bifrequency_family(Probe::Tmsv, eta1, n_s, n_th)?)?.value;
    let h_c = qfi_gaussian(&bifrequency_family(Probe::Coherent, eta1, n_s, n_th)?)?.value;
    Advantage::from_pair(h_q, h_c)
}

pub fn bifrequency_qfi(probe: Probe, eta1: f64, n_s: f64, n_th: f64) -> Result<QfiResult> {
    qfi_gaussian(&bifrequency_family(probe, eta1, n_s, n_th)?)
}

/// `H_Q / H_C` at `n_th = n_s / beta`.
pub fn noise_factor_ratio(beta: f64, eta1: f64, n_s: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(domain(format!("noise factor must be > 0, got {beta}")));
    }
    Ok(bifrequency_advantage(eta1, n_s, n_s / beta)?.ratio)
}

fn fock_input(probe: Probe, n_s: f64, cutoff: usize) -> Result<TwoModeInput> {
    match probe {
        Probe::Tmsv => TwoModeInput::tmsv(n_s, cutoff),
        Probe::Coherent => TwoModeInput::coherent_pair(n_s.sqrt(), cutoff),
    }
}

/// Fock-space counterpart of [`bifrequency_family`].
pub fn fock_bifrequency_family(
    probe: Probe,
    eta1: f64,
    n_s: f64,
    n_th: f64,
    cutoff: usize,
) -> Result<impl Fn(f64) -> Result<FockState>> {
    BiFrequencyParams::new(eta1, 0.0, n_s, n_th)?;
    let input = fock_input(probe, n_s, cutoff)?;
    let first = LossChannel::new(eta1, n_th, cutoff)?;
    Ok(move |lambda: f64| {
        let second = LossChannel::new(eta1 + lambda, n_th, cutoff)?;
        input.through_channels(&first, &second)
    })
}

/// Spectral QFI of the received state in Fock space.
pub fn fock_qfi(probe: Probe, eta1: f64, n_s: f64, n_th: f64, cutoff: usize) -> Result<crate::fock::SpectralQfi> {
    let family = fock_bifrequency_family(probe, eta1, n_s, n_th, cutoff)?;
    qfi_spectral(family, 0.0, DEFAULT_STEP, DEFAULT_DROP_THRESHOLD)
}

/// Gaussian SLD checked against the Fock-space state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SldFockCheck {
    /// `‖{L, ρ} − 2∂ρ‖_F / ‖∂ρ‖_F`.
    pub anticommutator_residual: f64,
    /// `Tr[ρL²]`.
    pub second_moment: f64,
    /// `Tr[ρL]`.
    pub mean: f64,
    pub qfi_gaussian: f64,
    pub qfi_fock: f64,
    pub leak: f64,
}

pub fn sld_fock_check(probe: Probe, eta1: f64, n_s: f64, n_th: f64, cutoff: usize) -> Result<SldFockCheck> {
    let family = bifrequency_family(probe, eta1, n_s, n_th)?;
    let h = qfi_gaussian(&family)?.value;
    let l: DMatrix<f64> = sld(&family)?.operator().to_fock(cutoff)?;

    let d = fock_derivative(fock_bifrequency_family(probe, eta1, n_s, n_th, cutoff)?, 0.0, DEFAULT_STEP)?;
    let fock = qfi_from_derivative(&d, DEFAULT_DROP_THRESHOLD);
    let rho = d.rho.rho();
    let l_rho = &l * rho;
    Ok(SldFockCheck {
        anticommutator_residual: anticommutator_residual(&l, &d),
        second_moment: l_rho.component_mul(&l.transpose()).sum(),
        mean: l_rho.trace(),
        qfi_gaussian: h,
        qfi_fock: fock.value,
        leak: d.rho.leak(),
    })
}

// Quantum illumination. Photon numbers follow the standard convention
// (squeezed pair with diagonal 2n_s + 1) and the target reflectivity is η².

/// `4 n_s (n_s + 1) / (2 n_s n_th + n_s + n_th + 1)`.
pub fn qi_quantum_qfi(n_s: f64, n_th: f64) -> f64 {
    4.0 * n_s * (n_s + 1.0) / (2.0 * n_s * n_th + n_s + n_th + 1.0)
}

/// Coherent-probe QFI for the amplitude `η`.
///
/// Evaluated as written; it reproduces the numeric pipeline at `η = 0`,
/// which is the only point the ratio uses.
pub fn qi_classical_qfi(eta: f64, n_s: f64, n_th: f64) -> f64 {
    let e2 = eta * eta;
    4.0 * n_s / (1.0 - 2.0 * n_th * (eta - 1.0)) + 4.0 * n_th * e2 / ((e2 - 1.0) * (n_th * (e2 - 1.0) - 1.0))
}

/// `(n_s + 1)(2 n_th + 1) / (2 n_s n_th + n_s + n_th + 1)`.
pub fn qi_ratio(n_s: f64, n_th: f64) -> f64 {
    (n_s + 1.0) * (2.0 * n_th + 1.0) / (2.0 * n_s * n_th + n_s + n_th + 1.0)
}

fn qi_check_args(eta: f64, n_s: f64, n_th: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(domain(format!("eta must lie strictly inside (0, 1), got {eta}")));
    }
    if !(n_s >= 0.0 && n_th >= 0.0) {
        return Err(domain("photon numbers must be >= 0"));
    }
    Ok(())
}

/// Numeric quantum-illumination QFI: bath, signal, idler with the bath and
/// signal mixed at reflectivity `η²`; the bath port is discarded.
pub fn qi_quantum_numeric(eta: f64, n_s: f64, n_th: f64) -> Result<f64> {
    qi_check_args(eta, n_s, n_th)?;
    let input = GaussianState::thermal(n_th)?.tensor(&GaussianState::two_mode_squeezed(n_s)?);
    let family = StateFamily::new(
        move |e| {
            let s = SymplecticTransform::beam_splitter(e * e)?.direct_sum(&SymplecticTransform::identity(1));
            s.apply(&input)?.partial_trace(&[1, 2])
        },
        eta,
    );
    Ok(qfi_gaussian(&family)?.value)
}

/// Numeric coherent-probe counterpart. The received single mode is paired
/// with an uninformative thermal ancilla of occupation `n_th + 1` so the
/// two-mode engine applies.
pub fn qi_classical_numeric(eta: f64, n_s: f64, n_th: f64) -> Result<f64> {
    qi_check_args(eta, n_s, n_th)?;
    let input = GaussianState::thermal(n_th)?.tensor(&GaussianState::coherent(n_s.sqrt(), 0.0));
    let ancilla = GaussianState::thermal(n_th + 1.0)?;
    let family = StateFamily::new(
        move |e| {
            let received = SymplecticTransform::beam_splitter(e * e)?.apply(&input)?.partial_trace(&[1])?;
            Ok(received.tensor(&ancilla))
        },
        eta,
    );
    Ok(qfi_gaussian(&family)?.value)
}

/// Exact and first-order ratio of the thermal occupations at `ω₁` and `ω₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermalApproxReport {
    /// rad/s
    pub omega1: f64,
    /// rad/s
    pub delta_omega: f64,
    /// K
    pub temperature: f64,
    /// Bose–Einstein occupation at `ω₁`.
    pub occupation: f64,
    pub ratio: f64,
    pub first_order: f64,
    pub rel_error: f64,
}

/// Angular frequencies in rad/s, temperature in kelvin.
pub fn thermal_equal_occupation(omega1: f64, delta_omega: f64, temperature: f64) -> Result<ThermalApproxReport> {
    if !(omega1 > 0.0) || !(temperature > 0.0) || !delta_omega.is_finite() {
        return Err(domain("omega1 and temperature must be > 0"));
    }
    let beta = HBAR / (K_B * temperature);
    let x = beta * omega1;
    let em1 = x.exp_m1();
    let ratio = 1.0 / (1.0 + beta * delta_omega * (em1 + 1.0) / em1);
    let first_order = 1.0 - delta_omega / omega1;
    Ok(ThermalApproxReport {
        omega1,
        delta_omega,
        temperature,
        occupation: 1.0 / em1,
        ratio,
        first_order,
        rel_error: (ratio - first_order).abs() / ratio,
    })
}

/// Same as [`thermal_equal_occupation`] with `ω₁ = 2π·f₁` (Hz) and
/// `Δω = delta_frac · ω₁`.
pub fn thermal_equal_occupation_hz(freq_hz: f64, delta_frac: f64, temperature: f64) -> Result<ThermalApproxReport> {
    let omega1 = 2.0 * std::f64::consts::PI * freq_hz;
    thermal_equal_occupation(omega1, delta_frac * omega1, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_parsing() {
        assert_eq!("TMSV".parse::<Probe>().unwrap(), Probe::Tmsv);
        assert_eq!(Probe::Coherent.to_string(), "coherent");
        assert!("squeezed".parse::<Probe>().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(BiFrequencyParams::new(0.9, 0.2, 1.0, 1.0).is_err());
        assert!(BiFrequencyParams::new(0.5, 0.1, -1.0, 1.0).is_err());
        assert!(BiFrequencyParams::new(0.5, -0.1, 1.0, 1.0).is_ok());
    }

    #[test]
    fn received_state_entries() {
        let p = BiFrequencyParams::new(0.6, 0.05, 0.8, 1.3).unwrap();
        let st = bifrequency_received_state(&p, Probe::Tmsv).unwrap();
        let (a, b, cl) = received_entries(&p);
        let cov = st.cov();
        assert!((cov[(0, 0)] - a).abs() < 1e-12 && (cov[(1, 1)] - a).abs() < 1e-12);
        assert!((cov[(2, 2)] - cl).abs() < 1e-12);
        assert!((cov[(0, 2)] - b).abs() < 1e-12 && (cov[(1, 3)] + b).abs() < 1e-12);
    }

    #[test]
    fn zero_reflectivity_receives_thermal_pair() {
        let p = BiFrequencyParams::new(0.0, 0.0, 1.0, 2.0).unwrap();
        let st = bifrequency_received_state(&p, Probe::Tmsv).unwrap();
        let expected = DMatrix::<f64>::identity(4, 4) * 5.0;
        assert!((st.cov() - expected).amax() < 1e-12);
    }

    #[test]
    fn coherent_received_displacement() {
        let (eta1, lambda, n_s) = (0.4, 0.1, 2.0);
        let p = BiFrequencyParams::new(eta1, lambda, n_s, 0.7).unwrap();
        let st = bifrequency_received_state(&p, Probe::Coherent).unwrap();
        let alpha = n_s.sqrt();
        let d = st.disp();
        assert!((d[0] - alpha * (2.0 * eta1).sqrt()).abs() < 1e-12);
        assert!((d[2] - alpha * (2.0 * (eta1 + lambda)).sqrt()).abs() < 1e-12);
        assert!(d[1].abs() < 1e-15 && d[3].abs() < 1e-15);
    }

    #[test]
    fn advantage_examples() {
        assert!(bifrequency_advantage(0.95, 1.0, 1.0).unwrap().ratio > 1.0);
        assert!((bifrequency_advantage(0.6, 0.0, 1.5).unwrap().ratio - 1.0).abs() < 1e-9);
        let adv = bifrequency_advantage(0.5, 1.0, 0.0).unwrap();
        assert!((adv.h_c - 2.0).abs() < 1e-15);
        assert!((adv.ratio - adv.h_q / 2.0).abs() < 1e-15);
        assert!(bifrequency_advantage(0.5, 0.0, 0.0).is_err());
        assert!(bifrequency_advantage(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn numeric_advantage_matches_closed_form() {
        let a = bifrequency_advantage(0.7, 0.5, 0.5).unwrap();
        let b = bifrequency_advantage_numeric(0.7, 0.5, 0.5).unwrap();
        assert!(((a.ratio - b.ratio) / a.ratio).abs() < 1e-6);
    }

    #[test]
    fn noise_factor() {
        let lo = noise_factor_ratio(0.5, 0.3, 0.76).unwrap();
        let hi = noise_factor_ratio(0.5, 0.95, 0.76).unwrap();
        assert!(hi > lo);
        let r = noise_factor_ratio(f64::INFINITY, 0.5, 0.76).unwrap();
        assert!(r.is_finite());
        assert!(noise_factor_ratio(0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn qi_closed_forms() {
        let ns = 0.7;
        assert!((qi_quantum_qfi(ns, 0.0) - 4.0 * ns).abs() < 1e-15);
        assert!((qi_classical_qfi(0.0, ns, 0.0) - 4.0 * ns).abs() < 1e-15);
        assert_eq!(qi_ratio(ns, 0.0), 1.0);
        assert!((qi_ratio(1e-4, 1e4) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn qi_numeric_pipelines() {
        let (ns, nt) = (0.5, 2.0);
        let q = qi_quantum_numeric(1e-4, ns, nt).unwrap();
        let c = qi_classical_numeric(1e-4, ns, nt).unwrap();
        assert!(((q - qi_quantum_qfi(ns, nt)) / q).abs() < 1e-4, "{q}");
        assert!(((c - qi_classical_qfi(0.0, ns, nt)) / c).abs() < 1e-4, "{c}");
    }

    #[test]
    fn thermal_occupation_report() {
        let r = thermal_equal_occupation_hz(5e9, 0.0, 300.0).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.rel_error, 0.0);
        let r = thermal_equal_occupation_hz(5e9, 0.2, 300.0).unwrap();
        assert!((r.occupation - 1250.0).abs() < 12.5);
        assert!((r.rel_error - 0.04).abs() < 0.005, "{r:?}");
        assert!(thermal_equal_occupation(0.0, 1.0, 300.0).is_err());
    }

    #[test]
    fn first_order_remainder() {
        let t = 300.0;
        let beta = HBAR / (K_B * t);
        let omega1 = 1.0 / beta;
        let dw = 5e-5 / beta;
        let r = thermal_equal_occupation(omega1, dw, t).unwrap();
        let e = 1f64.exp();
        let taylor = 1.0 - beta * dw * e / (e - 1.0);
        assert!((r.ratio - taylor).abs() < 1e-7);
        // The quoted expansion also drops O(βω₁) terms.
        assert!((r.ratio - r.first_order).abs() < beta * dw);
    }
}
