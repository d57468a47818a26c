//! Two-mode Gaussian quantum Fisher information.
//!
//! The numeric route evaluates the closed two-mode formula in terms of
//! `A = iΩ T Σ Tᵀ` (blockwise ordering), its λ-derivative and the symplectic
//! eigenvalues `ν±`, with all derivatives taken by second-order central
//! differences around the working point:
//!
//! ```text
//! H = [ det A · Tr[(A⁻¹Ȧ)²] + √det(I + A²) · Tr[((I + A²)⁻¹Ȧ)²] − f(ν₊, ν₋) ]
//!     / (2 (det A − 1))  +  2 ḋᵀ Σ⁻¹ ḋ
//! f = 4 (ν₊² − ν₋²) (ν̇₊² / (ν₊⁴ − 1) − ν̇₋² / (ν₋⁴ − 1))
//! ```
//!
//! The module also carries the closed forms for the bi-frequency probes and
//! their high-reflectivity and noisy limits.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, Matrix4};
use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::gaussian::{basis_change, symplectic_form, BasisOrdering, GaussianState};

type C64 = Complex<f64>;

/// Discriminant of the symplectic-eigenvalue quadratic accepted as zero.
const DISCRIMINANT_TOL: f64 = 1e-9;
/// `det A − 1` below this is treated as a pure state.
const PURE_DET_TOL: f64 = 1e-12;
/// Symplectic eigenvalues must exceed `1 + NU_FLOOR` for the `ν⁴ − 1` terms.
const NU_FLOOR: f64 = 1e-10;
/// `|ν₊ − ν₋|` below this is a degenerate spectrum.
const DEGENERATE_TOL: f64 = 1e-8;
/// Relative size of `Σ̇` below which the covariance is λ-independent.
const STATIC_COV_TOL: f64 = 1e-8;

type FamilyFn = dyn Fn(f64) -> Result<GaussianState> + Send + Sync;

/// A differentiable map `λ ↦ (Σ_λ, d_λ)` together with the working point
/// and finite-difference step.
#[derive(Clone)]
pub struct StateFamily {
    eval: Arc<FamilyFn>,
    lambda0: f64,
    step: f64,
}

impl fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateFamily")
            .field("lambda0", &self.lambda0)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

impl StateFamily {
    pub const DEFAULT_STEP: f64 = 1e-5;

    /// Family evaluated at `lambda0` with step `1e-5 · max(1, |lambda0|)`.
    pub fn new<F>(eval: F, lambda0: f64) -> Self
    where
        F: Fn(f64) -> Result<GaussianState> + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            lambda0,
            step: Self::DEFAULT_STEP * lambda0.abs().max(1.0),
        }
    }

    /// A family whose state does not depend on λ.
    pub fn constant(state: GaussianState) -> Self {
        Self::new(move |_| Ok(state.clone()), 0.0)
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(invalid(format!("finite-difference step must be positive, got {step}")));
        }
        self.step = step;
        Ok(self)
    }

    pub fn at(mut self, lambda0: f64) -> Self {
        self.lambda0 = lambda0;
        self
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn eval(&self, lambda: f64) -> Result<GaussianState> {
        (self.eval)(lambda)
    }

    /// States at `λ₀ − h`, `λ₀`, `λ₀ + h`, all required to be two-mode.
    pub(crate) fn stencil(&self) -> Result<[GaussianState; 3]> {
        let h = self.step;
        let states = [
            self.eval(self.lambda0 - h)?,
            self.eval(self.lambda0)?,
            self.eval(self.lambda0 + h)?,
        ];
        for s in &states {
            if s.n_modes() != 2 {
                return Err(invalid(format!(
                    "the two-mode QFI needs two-mode states, family produced {} modes",
                    s.n_modes()
                )));
            }
        }
        Ok(states)
    }
}

/// `A = iΩ T Σ Tᵀ` for a two-mode state, blockwise ordering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AMatrix(pub Matrix4<C64>);

impl AMatrix {
    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn trace_of_square(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn det(&self) -> f64 {
        self.0.determinant().re
    }
}

pub fn a_matrix(state: &GaussianState) -> Result<AMatrix> {
    if state.n_modes() != 2 {
        return Err(invalid(format!("A matrix is defined for two-mode states, got {}", state.n_modes())));
    }
    Ok(AMatrix(a_from_cov(state.cov())))
}

fn a_from_cov(cov: &nalgebra::DMatrix<f64>) -> Matrix4<C64> {
    let t = basis_change(2);
    let omega = symplectic_form(2, BasisOrdering::Blockwise);
    let real = &omega * &t * cov * t.transpose();
    Matrix4::from_fn(|i, j| C64::new(0.0, real[(i, j)]))
}

/// Symplectic eigenvalues `(ν₊, ν₋)` from `4ν±² = Tr[A²] ± √((Tr[A²])² − 16 det A)`.
pub fn symplectic_eigenvalues(state: &GaussianState) -> Result<(f64, f64)> {
    let a = a_matrix(state)?;
    nu_from_a(&a.0)
}

fn nu_from_a(a: &Matrix4<C64>) -> Result<(f64, f64)> {
    let tr = (a * a).trace().re;
    let det = a.determinant().re;
    let mut disc = tr * tr - 16.0 * det;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_TOL * tr.powi(2).max(1.0) {
            return Err(Error::NumericInstability(format!(
                "negative discriminant {disc:e} in symplectic eigenvalues"
            )));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let plus = ((tr + root) / 4.0).max(0.0).sqrt();
    // ν₊ν₋ = √det A avoids the cancellation in tr − root.
    let minus = if plus > 0.0 && det > 0.0 {
        det.sqrt() / plus
    } else {
        ((tr - root) / 4.0).max(0.0).sqrt()
    };
    Ok((plus, minus))
}

/// QFI together with its diagnostic breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QfiResult {
    pub value: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    /// `(det A·Tr[(A⁻¹Ȧ)²] + √det(I+A²)·Tr[((I+A²)⁻¹Ȧ)²]) / (2(det A − 1))`
    pub term_covariance: f64,
    /// `−f(ν₊, ν₋) / (2(det A − 1))`
    pub term_eigenvalue_correction: f64,
    /// `2 ḋᵀ Σ⁻¹ ḋ`
    pub term_displacement: f64,
}

/// Numeric two-mode Gaussian QFI of `family` at its working point.
///
/// A family whose covariance does not move with λ contributes only the
/// displacement term, which also covers pure coherent probes. Otherwise the
/// state must be mixed with both symplectic eigenvalues above one.
pub fn qfi_gaussian(family: &StateFamily) -> Result<QfiResult> {
    let [sm, s0, sp] = family.stencil()?;
    let h = family.step();

    let a0 = a_from_cov(s0.cov());
    let (nu_p, nu_m) = nu_from_a(&a0)?;

    let inv_cov = s0
        .cov()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateState("covariance matrix is singular".into()))?;
    let d_dot = (sp.disp() - sm.disp()) / (2.0 * h);
    let term_displacement = 2.0 * (d_dot.transpose() * &inv_cov * &d_dot)[(0, 0)];

    let cov_dot = (sp.cov() - sm.cov()) / (2.0 * h);
    if cov_dot.amax() <= STATIC_COV_TOL * s0.cov().amax().max(1.0) {
        return Ok(QfiResult {
            value: term_displacement,
            nu_plus: nu_p,
            nu_minus: nu_m,
            term_covariance: 0.0,
            term_eigenvalue_correction: 0.0,
            term_displacement,
        });
    }

    let det_a = a0.determinant().re;
    if det_a - 1.0 <= PURE_DET_TOL || nu_m <= 1.0 + NU_FLOOR {
        return Err(Error::UnsupportedPureState { det_a });
    }

    let a_dot = a_from_cov(&cov_dot);
    let a_inv = a0
        .try_inverse()
        .ok_or_else(|| Error::DegenerateState("A matrix is singular".into()))?;
    let x = a_inv * a_dot;
    let t1 = det_a * (x * x).trace().re;

    let b = Matrix4::<C64>::identity() + a0 * a0;
    let b_inv = b
        .try_inverse()
        .ok_or_else(|| Error::DegenerateState("I + A² is singular".into()))?;
    let y = b_inv * a_dot;
    let t2 = b.determinant().re.sqrt() * (y * y).trace().re;

    let f = if (nu_p - nu_m).abs() < DEGENERATE_TOL {
        // ν₊² − ν₋² vanishes while ν̇± stay bounded.
        0.0
    } else {
        let (np_p, nm_p) = nu_from_a(&a_from_cov(sp.cov()))?;
        let (np_m, nm_m) = nu_from_a(&a_from_cov(sm.cov()))?;
        let dp = (np_p - np_m) / (2.0 * h);
        let dm = (nm_p - nm_m) / (2.0 * h);
        4.0 * (nu_p * nu_p - nu_m * nu_m) * (dp * dp / (nu_p.powi(4) - 1.0) - dm * dm / (nu_m.powi(4) - 1.0))
    };

    let scale = 2.0 * (det_a - 1.0);
    let term_covariance = (t1 + t2) / scale;
    let term_eigenvalue_correction = -f / scale;
    Ok(QfiResult {
        value: term_covariance + term_eigenvalue_correction + term_displacement,
        nu_plus: nu_p,
        nu_minus: nu_m,
        term_covariance,
        term_eigenvalue_correction,
        term_displacement,
    })
}

fn check_open_reflectivity(eta1: f64) -> Result<()> {
    if !(eta1 > 0.0 && eta1 < 1.0) {
        return Err(domain(format!(
            "eta1 must lie strictly inside (0, 1), got {eta1}; use ratio_high_reflectivity for the eta1 -> 1 limit"
        )));
    }
    Ok(())
}

fn check_photons(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// Closed-form QFI of the two-mode squeezed probe at `λ → 0`.
pub fn hq_closed_form(eta1: f64, n_s: f64, n_th: f64) -> Result<f64> {
    check_open_reflectivity(eta1)?;
    check_photons("n_s", n_s)?;
    check_photons("n_th", n_th)?;
    let (e, ns, nt) = (eta1, n_s, n_th);
    let t = 1.0 - e;
    let k = t
        * (nt * (4.0 * ns * e + nt * t + 1.0) + 2.0 * ns * e)
        * (2.0 * nt * t * (4.0 * ns * e + 1.0) + 4.0 * ns * e * t + 2.0 * nt * nt * t * t + 1.0);
    if k == 0.0 {
        return Err(domain("H_Q is undefined when both n_s and n_th vanish"));
    }
    let num = 8.0 * t * e * ns.powi(3) * (2.0 * nt + 1.0)
        + 4.0
            * ns
            * ns
            * (-e + (e + 3.0 * e * nt).powi(2) - e * nt * (10.0 * nt + 7.0) + 3.0 * nt * (nt + 1.0) + 1.0)
        - 2.0 * ns * nt * (-e + nt * (e * (3.0 * e - 8.0) + 4.0 * t * (t - e) * nt + 3.0) + 1.0)
        + nt * nt * (2.0 * t * nt * (t * nt + 1.0) + 1.0);
    Ok(num / k)
}

/// Closed-form QFI of the coherent pair at `λ → 0`, with `|α|² = n_s`.
///
/// The thermal term is taken at its limit value 0 when `n_th = 0`.
pub fn hc_closed_form(eta1: f64, n_s: f64, n_th: f64) -> Result<f64> {
    check_open_reflectivity(eta1)?;
    check_photons("n_s", n_s)?;
    check_photons("n_th", n_th)?;
    let t = 1.0 - eta1;
    let g = 1.0 + 2.0 * n_th * t;
    let thermal = if n_th == 0.0 {
        0.0
    } else {
        4.0 * n_th * n_th * (g * g + 1.0) / (g.powi(4) - 1.0)
    };
    Ok(thermal + n_s / (eta1 + 2.0 * n_th * t * eta1))
}

/// `lim_{η₁→1} H_Q / H_C`.
pub fn ratio_high_reflectivity(n_s: f64, n_th: f64) -> Result<f64> {
    check_photons("n_s", n_s)?;
    check_photons("n_th", n_th)?;
    if n_th == 0.0 {
        return Err(domain("the high-reflectivity ratio degenerates at n_th = 0"));
    }
    let num = n_s * n_s * (8.0 * n_th * (n_th + 1.0) + 4.0) + 4.0 * n_s * n_th * n_th + n_th * n_th;
    let den = n_th * (n_s * (4.0 * n_th + 2.0) + n_th);
    Ok(num / den)
}

/// `1 + 8 n_s² / (4 n_s + 1)`, the high-reflectivity ratio for `n_th ≫ 1`.
pub fn ratio_noisy_limit(n_s: f64) -> f64 {
    1.0 + 8.0 * n_s * n_s / (4.0 * n_s + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector, Vector4};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn eigen_pairs_sorted(a: &Matrix4<C64>) -> Vector4<f64> {
        // Eigenvalues of A are ±ν±; A is i times a real matrix, so A² is real.
        let sq = (a * a).map(|z| z.re);
        let mut ev: Vec<f64> = sq.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        Vector4::from_vec(ev)
    }

    fn thermal_pair(n: f64) -> GaussianState {
        GaussianState::thermal(n).unwrap().tensor(&GaussianState::thermal(n).unwrap())
    }

    #[test]
    fn a_matrix_of_thermal_pair() {
        let a = a_matrix(&thermal_pair(1.0)).unwrap();
        let m = a.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expected = match (i, j) {
                    (0, 2) | (1, 3) => C64::new(0.0, 3.0),
                    (2, 0) | (3, 1) => C64::new(0.0, -3.0),
                    _ => C64::new(0.0, 0.0),
                };
                assert!((m[(i, j)] - expected).norm() < 1e-15, "A[{i},{j}] = {}", m[(i, j)]);
            }
        }
        assert!(m.trace().norm() < 1e-12);
        assert!(a_matrix(&GaussianState::vacuum(1).unwrap()).is_err());
    }

    #[test]
    fn a_matrix_of_vacuum_has_unit_spectrum() {
        let a = a_matrix(&GaussianState::vacuum(2).unwrap()).unwrap();
        let ev = eigen_pairs_sorted(a.matrix());
        for v in ev.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!((a.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symplectic_eigenvalues_simple_states() {
        let (p, m) = symplectic_eigenvalues(&GaussianState::vacuum(2).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-12 && (m - 1.0).abs() < 1e-12);
        let n = 0.85;
        let (p, m) = symplectic_eigenvalues(&thermal_pair(n)).unwrap();
        assert!((p - (1.0 + 2.0 * n)).abs() < 1e-12);
        assert!((m - (1.0 + 2.0 * n)).abs() < 1e-12);
        let (p, m) = symplectic_eigenvalues(
            &GaussianState::thermal(0.2).unwrap().tensor(&GaussianState::thermal(1.5).unwrap()),
        )
        .unwrap();
        assert!((p - 4.0).abs() < 1e-12 && (m - 1.4).abs() < 1e-12);
        // Pure TMSV: both symplectic eigenvalues are one. The discriminant
        // vanishes there, so rounding in det A shows up as its square root.
        let (p, m) = symplectic_eigenvalues(&GaussianState::tmsv(3.0).unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-6 && (m - 1.0).abs() < 1e-6);
        assert!((p * m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_family_has_zero_information() {
        let st = GaussianState::tmsv(0.4)
            .unwrap()
            .partial_trace(&[0])
            .unwrap()
            .tensor(&GaussianState::thermal(0.3).unwrap());
        let r = qfi_gaussian(&StateFamily::constant(st)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    /// Displacement-only family `|√λ ...⟩`: a coherent amplitude moving
    /// linearly in λ on top of a thermal covariance gives `2 ḋᵀΣ⁻¹ḋ`.
    #[test]
    fn displacement_term_matches_classical_fisher() {
        let nth = 0.5;
        let fam = StateFamily::new(
            move |l| {
                let cov = DMatrix::identity(4, 4) * (1.0 + 2.0 * nth);
                let disp = DVector::from_vec(vec![0.0, 0.0, l, 0.0]);
                GaussianState::new(cov, disp)
            },
            0.3,
        );
        let r = qfi_gaussian(&fam).unwrap();
        assert!(rel(r.value, 2.0 / (1.0 + 2.0 * nth)) < 1e-9);
        assert_eq!(r.term_covariance, 0.0);
    }

    /// Single-mode thermal family `n(λ) = λ` on one mode, a fixed thermal
    /// ancilla on the other: the QFI of a thermal state in its occupation is
    /// `1/(n(n+1))`.
    #[test]
    fn thermal_occupation_information() {
        for &n in &[0.3, 1.0, 4.0] {
            let fam = StateFamily::new(
                |l| Ok(GaussianState::thermal(l)?.tensor(&GaussianState::thermal(7.0)?)),
                n,
            );
            let r = qfi_gaussian(&fam).unwrap();
            assert!(rel(r.value, 1.0 / (n * (n + 1.0))) < 1e-7, "n = {n}: {r:?}");
            let sum = r.term_covariance + r.term_eigenvalue_correction + r.term_displacement;
            assert!(rel(sum, r.value) < 1e-10);
        }
    }

    #[test]
    fn pure_moving_family_is_rejected() {
        let fam = StateFamily::new(GaussianState::tmsv, 0.5);
        assert!(matches!(qfi_gaussian(&fam), Err(Error::UnsupportedPureState { .. })));
    }

    #[test]
    fn wrong_mode_count_rejected() {
        let fam = StateFamily::new(GaussianState::thermal, 0.5);
        assert!(matches!(qfi_gaussian(&fam), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn step_validation() {
        let fam = StateFamily::constant(GaussianState::vacuum(2).unwrap());
        assert!(fam.clone().with_step(0.0).is_err());
        assert!(fam.clone().with_step(-1.0).is_err());
        assert_eq!(fam.with_step(1e-4).unwrap().step(), 1e-4);
        assert_eq!(StateFamily::constant(GaussianState::vacuum(2).unwrap()).at(20.0).lambda0(), 20.0);
    }

    #[test]
    fn hc_examples() {
        assert!(rel(hc_closed_form(0.5, 1.0, 0.0).unwrap(), 2.0) < 1e-15);
        // Pure-thermal information N_th / (τ₁(τ₁ N_th + 1)).
        assert!(rel(hc_closed_form(0.5, 0.0, 1.0).unwrap(), 4.0 / 3.0) < 1e-12);
        // Equivalent form α²/(η₁(1+2N_th τ₁)) + N_th/(τ₁(τ₁N_th+1)).
        for &(e, ns, nt) in &[(0.3, 2.0, 1.5), (0.8, 0.4, 3.0), (0.1, 5.0, 0.2)] {
            let t: f64 = 1.0 - e;
            let alt = ns / (e * (1.0 + 2.0 * nt * t)) + nt / (t * (t * nt + 1.0));
            assert!(rel(hc_closed_form(e, ns, nt).unwrap(), alt) < 1e-12);
        }
        assert!(hc_closed_form(0.0, 1.0, 1.0).is_err());
        assert!(hc_closed_form(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn hq_small_signal_limit() {
        for &(e, nt) in &[(0.4, 0.7), (0.9, 3.0)] {
            let t: f64 = 1.0 - e;
            let k0 = t * (nt * (nt * t + 1.0)) * (2.0 * nt * t + 2.0 * nt * nt * t * t + 1.0);
            let expected = nt * nt * (2.0 * t * nt * (t * nt + 1.0) + 1.0) / k0;
            assert!(rel(hq_closed_form(e, 0.0, nt).unwrap(), expected) < 1e-12);
            assert!(rel(hq_closed_form(e, 1e-9, nt).unwrap(), expected) < 1e-6);
            // Without photons the squeezed probe carries the thermal information only.
            assert!(rel(expected, hc_closed_form(e, 0.0, nt).unwrap()) < 1e-12);
        }
        assert!(hq_closed_form(0.5, 0.0, 0.0).is_err());
        assert!(hq_closed_form(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn hq_positive_on_grid() {
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    let e = 0.1 + 0.2 * i as f64;
                    let ns = 0.1 + 1.225 * j as f64;
                    let nt = 1.25 * k as f64;
                    let v = hq_closed_form(e, ns, nt).unwrap();
                    assert!(v > 0.0 && v.is_finite(), "H_Q({e},{ns},{nt}) = {v}");
                }
            }
        }
    }

    #[test]
    fn ratio_limits() {
        assert_eq!(ratio_high_reflectivity(0.0, 2.0).unwrap(), 1.0);
        assert!(ratio_high_reflectivity(1.0, 0.0).is_err());
        assert_eq!(ratio_noisy_limit(0.0), 1.0);
        assert!(rel(ratio_noisy_limit(1.0), 2.6) < 1e-15);
        for &ns in &[0.5, 1.0, 5.0] {
            let r = ratio_high_reflectivity(ns, 1e4).unwrap();
            assert!(rel(r, ratio_noisy_limit(ns)) < 0.01);
        }
        let eta = 1.0 - 1e-6;
        let r = hq_closed_form(eta, 1.0, 2.0).unwrap() / hc_closed_form(eta, 1.0, 2.0).unwrap();
        assert!(rel(r, ratio_high_reflectivity(1.0, 2.0).unwrap()) < 1e-4);
    }
}
