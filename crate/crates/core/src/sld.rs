//! Symmetric logarithmic derivative and optimal observables.
//!
//! Work happens in the complex basis `Â = (a₁, a₂, a₁†, a₂†)` with
//! `a = (x + ip)/√2`. For a two-mode Gaussian family with complex covariance
//! `σ = ⟨{ΔÂ, ΔÂ†}⟩` and mean `d`, the SLD is
//!
//! ```text
//! L = ΔÂ† 𝒜 ΔÂ − ½ Tr[σ𝒜] + 2 ΔÂ† σ⁻¹ ḋ
//! vec(𝒜) = 𝓜⁻¹ vec(σ̇),   𝓜 = σ̄ ⊗ σ − K ⊗ K,   K = diag(1, 1, −1, −1)
//! ```
//!
//! and the optimal observable at the working point is `O = λ₀ + L/H`.
//! Expanded in normal order, a TMSV-probe observable reads
//! `l11 n̂₁ + l22 n̂₂ + l12 (â₁†â₂† + â₁â₂) + l0`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Matrix4, Vector2, Vector4};
use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::fock::{annihilation, embed};
use crate::gaussian::GaussianState;
use crate::qfi::{qfi_gaussian, StateFamily};

type C64 = Complex<f64>;

const STATIC_COV_TOL: f64 = 1e-8;
/// Largest imaginary part tolerated when an operator is expected to be real.
const REALITY_TOL: f64 = 1e-8;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Maps interleaved quadratures `(x₁, p₁, x₂, p₂)` to `(a₁, a₂, a₁†, a₂†)`.
pub fn quadrature_to_complex() -> Matrix4<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    Matrix4::new(
        c(s, 0.0), c(0.0, s), z, z,
        z, z, c(s, 0.0), c(0.0, s),
        c(s, 0.0), c(0.0, -s), z, z,
        z, z, c(s, 0.0), c(0.0, -s),
    )
}

/// Swaps the annihilation and creation halves of `Â`.
fn swap_halves() -> Matrix4<C64> {
    let mut x = Matrix4::zeros();
    for i in 0..2 {
        x[(i, i + 2)] = c(1.0, 0.0);
        x[(i + 2, i)] = c(1.0, 0.0);
    }
    x
}

fn k_matrix() -> Matrix4<C64> {
    Matrix4::from_diagonal(&Vector4::new(c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)))
}

fn to_complex_matrix(m: &DMatrix<f64>) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| c(m[(i, j)], 0.0))
}

/// Two-mode Gaussian state in the complex basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexGaussian {
    pub cov: Matrix4<C64>,
    pub disp: Vector4<C64>,
}

impl ComplexGaussian {
    pub fn from_real(state: &GaussianState) -> Result<Self> {
        if state.n_modes() != 2 {
            return Err(invalid(format!(
                "complex basis is defined for two-mode states, got {} modes",
                state.n_modes()
            )));
        }
        let w = quadrature_to_complex();
        let cov = w * to_complex_matrix(state.cov()) * w.adjoint();
        let d = state.disp();
        let disp = w * Vector4::new(c(d[0], 0.0), c(d[1], 0.0), c(d[2], 0.0), c(d[3], 0.0));
        Ok(Self { cov, disp })
    }

    pub fn to_real(&self) -> Result<GaussianState> {
        let w = quadrature_to_complex();
        let cov = w.adjoint() * self.cov * w;
        let disp = w.adjoint() * self.disp;
        let imag = cov.map(|z| z.im.abs()).max().max(disp.map(|z| z.im.abs()).max());
        if imag > REALITY_TOL {
            return Err(Error::NumericInstability(format!(
                "complex covariance does not map to a real one (imaginary part {imag:e})"
            )));
        }
        GaussianState::new(
            DMatrix::from_fn(4, 4, |i, j| cov[(i, j)].re),
            DVector::from_fn(4, |i, _| disp[i].re),
        )
    }

    /// `‖σ − X σ̄ X‖` with `X` swapping annihilation and creation blocks.
    pub fn reality_error(&self) -> f64 {
        let x = swap_halves();
        let cov_err = (self.cov - x * self.cov.conjugate() * x).map(|z| z.norm()).max();
        let disp_err = (self.disp - x * self.disp.conjugate()).map(|z| z.norm()).max();
        cov_err.max(disp_err)
    }
}

/// Normal-ordered two-mode operator
///
/// ```text
/// Σ N_jk a_j†a_k + Σ (P_jk a_j†a_k† + h.c.) + Σ (g_j a_j† + h.c.) + c
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticOperator {
    pub number: Matrix2<C64>,
    /// Symmetric.
    pub pair: Matrix2<C64>,
    pub linear: Vector2<C64>,
    pub constant: f64,
}

impl QuadraticOperator {
    pub fn zero() -> Self {
        Self {
            number: Matrix2::zeros(),
            pair: Matrix2::zeros(),
            linear: Vector2::zeros(),
            constant: 0.0,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            number: self.number * c(s, 0.0),
            pair: self.pair * c(s, 0.0),
            linear: self.linear * c(s, 0.0),
            constant: self.constant * s,
        }
    }

    /// Adds `s · I`.
    pub fn shifted(mut self, s: f64) -> Self {
        self.constant += s;
        self
    }

    /// Gaussian expectation value.
    pub fn expectation(&self, state: &ComplexGaussian) -> f64 {
        let sigma = &state.cov;
        let m = Vector2::new(state.disp[0], state.disp[1]);
        let mut total = c(self.constant, 0.0);
        for j in 0..2 {
            for k in 0..2 {
                let delta = if j == k { 1.0 } else { 0.0 };
                let nn = (sigma[(k, j)] - c(delta, 0.0)) * 0.5 + m[j].conj() * m[k];
                let aa = sigma[(j, k + 2)] * 0.5 + m[j] * m[k];
                total += self.number[(j, k)] * nn;
                total += self.pair[(j, k)] * aa.conj() + self.pair[(j, k)].conj() * aa;
            }
            total += self.linear[j] * m[j].conj() + self.linear[j].conj() * m[j];
        }
        total.re
    }

    /// Largest imaginary part among the coefficients.
    pub fn imaginary_part(&self) -> f64 {
        let im = |m: &[C64]| m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        im(self.number.as_slice()).max(im(self.pair.as_slice())).max(im(self.linear.as_slice()))
    }

    /// Matrix of the operator on a two-mode truncated Fock space.
    ///
    /// Fails when a coefficient carries an imaginary part, since the Fock
    /// oracle only represents real operators.
    pub fn to_fock(&self, cutoff: usize) -> Result<DMatrix<f64>> {
        let imag = self.imaginary_part();
        if imag > REALITY_TOL {
            return Err(invalid(format!("operator has complex coefficients ({imag:e})")));
        }
        let a1 = annihilation(cutoff);
        let a = [embed(&a1, 0, 2), embed(&a1, 1, 2)];
        let ad = [a[0].transpose(), a[1].transpose()];
        let dim = cutoff * cutoff;
        let mut op = DMatrix::<f64>::identity(dim, dim) * self.constant;
        for j in 0..2 {
            for k in 0..2 {
                let n = self.number[(j, k)].re;
                if n != 0.0 {
                    op += &ad[j] * &a[k] * n;
                }
                let p = self.pair[(j, k)].re;
                if p != 0.0 {
                    op += (&ad[j] * &ad[k] + &a[j] * &a[k]) * p;
                }
            }
            let g = self.linear[j].re;
            if g != 0.0 {
                op += (&ad[j] + &a[j]) * g;
            }
        }
        Ok(op)
    }
}

/// SLD at a working point: `L = ΔÂ†𝒜ΔÂ + ΔÂ†v + s` around the mean `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sld {
    pub quad: Matrix4<C64>,
    /// `2σ⁻¹ḋ`.
    pub linear: Vector4<C64>,
    /// `−½ Tr[σ𝒜]`.
    pub scalar: f64,
    pub state: ComplexGaussian,
}

impl Sld {
    /// Normal-ordered expansion of `L` in `â₁, â₂`.
    pub fn operator(&self) -> QuadraticOperator {
        let a = &self.quad;
        let d = &self.state.disp;
        let w = self.linear - a * d;
        let da = (d.adjoint() * a).transpose();

        let mut number = Matrix2::zeros();
        let mut pair = Matrix2::zeros();
        for j in 0..2 {
            for k in 0..2 {
                number[(j, k)] = a[(j, k)] + a[(k + 2, j + 2)];
                pair[(j, k)] = (a[(j, k + 2)] + a[(k, j + 2)]) * 0.5;
            }
        }
        let linear = Vector2::new(w[0] - da[2], w[1] - da[3]);
        let normal_order = a[(2, 2)] + a[(3, 3)];
        let constant = ((d.adjoint() * a * d)[0] - (d.adjoint() * self.linear)[0] + normal_order).re + self.scalar;
        QuadraticOperator { number, pair, linear, constant }
    }

    /// `Tr[ρL]` from the Gaussian moments; zero for a valid SLD.
    pub fn mean(&self) -> f64 {
        self.operator().expectation(&self.state)
    }
}

/// SLD of a two-mode Gaussian family at its working point.
pub fn sld(family: &StateFamily) -> Result<Sld> {
    let [sm, s0, sp] = family.stencil()?;
    let h = family.step();
    let state = ComplexGaussian::from_real(&s0)?;
    let w = quadrature_to_complex();

    let sigma_inv = state
        .cov
        .try_inverse()
        .ok_or_else(|| Error::DegenerateState("complex covariance is singular".into()))?;
    let d_dot = (sp.disp() - sm.disp()) / (2.0 * h);
    let d_dot_c = w * Vector4::new(c(d_dot[0], 0.0), c(d_dot[1], 0.0), c(d_dot[2], 0.0), c(d_dot[3], 0.0));
    let linear = sigma_inv * d_dot_c * c(2.0, 0.0);

    let cov_dot = (sp.cov() - sm.cov()) / (2.0 * h);
    let quad = if cov_dot.amax() <= STATIC_COV_TOL * s0.cov().amax().max(1.0) {
        Matrix4::zeros()
    } else {
        let sigma_dot = w * to_complex_matrix(&cov_dot) * w.adjoint();
        solve_quadratic_part(&state.cov, &sigma_dot)?
    };
    let scalar = -0.5 * (state.cov * quad).trace().re;
    Ok(Sld { quad, linear, scalar, state })
}

/// Solves `σ𝒜σ − K𝒜K = σ̇` for Hermitian `𝒜`.
fn solve_quadratic_part(sigma: &Matrix4<C64>, sigma_dot: &Matrix4<C64>) -> Result<Matrix4<C64>> {
    let sigma_d = DMatrix::from_fn(4, 4, |i, j| sigma[(i, j)]);
    let k = DMatrix::from_fn(4, 4, |i, j| k_matrix()[(i, j)]);
    let m = sigma_d.conjugate().kronecker(&sigma_d) - k.kronecker(&k);
    let rhs = DVector::from_column_slice(sigma_dot.as_slice());
    let sol = m
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| Error::DegenerateState("the SLD superoperator is singular".into()))?;
    let quad = Matrix4::from_column_slice(sol.as_slice());
    Ok((quad + quad.adjoint()) * c(0.5, 0.0))
}

/// Coefficients of `O_Q = l11 n̂₁ + l22 n̂₂ + l12 (â₁†â₂† + â₁â₂) + l0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SldCoefficients {
    pub l11: f64,
    pub l22: f64,
    pub l12: f64,
    pub l0: f64,
}

impl SldCoefficients {
    pub fn to_operator(&self) -> QuadraticOperator {
        let mut op = QuadraticOperator::zero();
        op.number[(0, 0)] = c(self.l11, 0.0);
        op.number[(1, 1)] = c(self.l22, 0.0);
        op.pair[(0, 1)] = c(self.l12 / 2.0, 0.0);
        op.pair[(1, 0)] = c(self.l12 / 2.0, 0.0);
        op.constant = self.l0;
        op
    }

    pub fn max_abs_diff(&self, other: &SldCoefficients) -> f64 {
        [
            self.l11 - other.l11,
            self.l22 - other.l22,
            self.l12 - other.l12,
            self.l0 - other.l0,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Optimal observable `λ₀ + L/H` expanded in normal order.
pub fn optimal_operator(family: &StateFamily) -> Result<QuadraticOperator> {
    let h = qfi_gaussian(family)?.value;
    if !(h > 1e-300) {
        return Err(Error::NoInformation(h));
    }
    Ok(sld(family)?.operator().scaled(1.0 / h).shifted(family.lambda0()))
}

/// Optimal observable of a zero-mean family in the `O_Q` form.
///
/// Terms outside that form (`â₁†â₂`, squeezing within a mode, linear
/// terms) must vanish, otherwise the family is rejected.
pub fn optimal_observable(family: &StateFamily) -> Result<SldCoefficients> {
    let op = optimal_operator(family)?;
    let scale = op.number.camax().max(op.pair.camax()).max(1.0);
    let stray = [
        op.number[(0, 1)].norm(),
        op.number[(1, 0)].norm(),
        op.pair[(0, 0)].norm(),
        op.pair[(1, 1)].norm(),
        op.linear.camax(),
        op.imaginary_part(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if stray > 1e-6 * scale {
        return Err(invalid(format!(
            "observable is not of the l11/l22/l12/l0 form (stray coefficient {stray:e})"
        )));
    }
    Ok(SldCoefficients {
        l11: op.number[(0, 0)].re,
        l22: op.number[(1, 1)].re,
        l12: 2.0 * op.pair[(0, 1)].re,
        l0: op.constant,
    })
}

fn check_open(eta1: f64) -> Result<()> {
    if !(eta1 > 0.0 && eta1 < 1.0) {
        return Err(domain(format!("eta1 must lie strictly inside (0, 1), got {eta1}")));
    }
    Ok(())
}

fn check_photons(n_s: f64, n_th: f64) -> Result<()> {
    if !(n_s >= 0.0 && n_th >= 0.0) || !n_s.is_finite() || !n_th.is_finite() {
        return Err(domain(format!("photon numbers must be finite and >= 0, got n_s={n_s}, n_th={n_th}")));
    }
    Ok(())
}

/// Closed-form `O_Q` coefficients for the TMSV probe.
pub fn sld_coeffs_closed_form(eta1: f64, n_s: f64, n_th: f64) -> Result<SldCoefficients> {
    check_open(eta1)?;
    check_photons(n_s, n_th)?;
    let (e, ns, nt) = (eta1, n_s, n_th);
    let a = 8.0 * (e - 1.0) * e * ns.powi(3) * (2.0 * nt + 1.0);
    let b = 4.0
        * ns
        * ns
        * (-e + (e + 3.0 * e * nt).powi(2) - e * nt * (10.0 * nt + 7.0) + 3.0 * nt * (nt + 1.0) + 1.0);
    let cc = 2.0 * ns * nt * (-e + nt * (e * (3.0 * e - 8.0) + 4.0 * (e - 1.0) * (2.0 * e - 1.0) * nt + 3.0) + 1.0);
    let d = nt * nt * (2.0 * (e - 1.0) * nt * ((e - 1.0) * nt - 1.0) + 1.0);
    let e_ = 4.0 * e * e * (-4.0 * ns * nt + ns * (2.0 * ns - 1.0) + nt * nt) * (ns * (4.0 * nt + 2.0) - nt * nt);
    let f = 2.0 * ns - nt;
    let g = 2.0 * nt * (nt + 1.0) + 1.0;

    let den = a - b + cc - d;
    if den == 0.0 {
        return Err(domain("observable is undefined when both n_s and n_th vanish"));
    }
    let l11 = -2.0 * e * ns * (2.0 * ns + 1.0) * (2.0 * nt + 1.0) / -den;
    let l22 = (4.0 * e * (2.0 * e - 1.0) * ns * ns * (2.0 * nt + 1.0)
        + 2.0 * ns * (e - 2.0 * nt * ((e - 3.0) * e + (e - 1.0) * (3.0 * e - 1.0) * nt + 1.0) - 1.0)
        + nt * (2.0 * (e - 1.0) * nt * ((e - 1.0) * nt - 1.0) + 1.0))
        / den;
    let l12 = -(2.0f64).sqrt() * (ns * (2.0 * ns + 1.0)).sqrt() * (e * e * (ns * (4.0 * nt + 2.0) - nt * nt) + nt * (nt + 1.0))
        / den;
    let l0_num = 4.0 * e.powi(3) * (nt * nt - 2.0 * ns * (2.0 * nt + 1.0)).powi(2)
        - 2.0 * e * e * (6.0 * nt + 5.0) * f * (ns * (4.0 * nt + 2.0) - nt * nt)
        + 4.0 * e * (nt + 1.0) * (ns * ns * (8.0 * nt + 4.0) - 2.0 * ns * (nt * (6.0 * nt + 5.0) + 1.0) + nt * nt * (3.0 * nt + 2.0))
        + (2.0 * nt + 3.0) * g * f;
    let l0_den = e_ - 4.0 * e * (2.0 * nt + 1.0) * f * (-4.0 * ns * nt + ns * (2.0 * ns - 1.0) + nt * nt)
        - 8.0 * ns * ns * (3.0 * nt * (nt + 1.0) + 1.0)
        + 4.0 * ns * nt * (nt * (4.0 * nt + 3.0) + 1.0)
        - 2.0 * nt * nt * g;
    Ok(SldCoefficients { l11, l22, l12, l0: -l0_num / l0_den })
}

/// `η₁ → 1` limits of the closed-form coefficients.
pub fn sld_coeffs_high_reflectivity(n_s: f64, n_th: f64) -> Result<SldCoefficients> {
    check_photons(n_s, n_th)?;
    let (ns, nt) = (n_s, n_th);
    let q = ns * ns * (8.0 * nt * (nt + 1.0) + 4.0) + 4.0 * ns * nt * nt + nt * nt;
    if q == 0.0 {
        return Err(domain("observable is undefined when both n_s and n_th vanish"));
    }
    Ok(SldCoefficients {
        l11: -2.0 * ns * (2.0 * ns + 1.0) * (2.0 * nt + 1.0) / q,
        l22: -(4.0 * ns * (2.0 * ns * nt + ns + nt) + nt) / q,
        l12: (2.0f64).sqrt() * (ns * (2.0 * ns + 1.0)).sqrt() * (ns * (4.0 * nt + 2.0) + nt) / q,
        l0: (-2.0 * ns * (ns * (8.0 * nt + 4.0) + 6.0 * nt + 1.0) - 3.0 * nt)
            / (8.0 * ns * ns * (2.0 * nt * (nt + 1.0) + 1.0) + 8.0 * ns * nt * nt + 2.0 * nt * nt),
    })
}

/// `μ² = 1 + 1/(2 n_s)`.
pub fn mu_squared(n_s: f64) -> f64 {
    1.0 + 1.0 / (2.0 * n_s)
}

/// `ν = 1 + 1/(4 n_s)`.
pub fn nu_noiseless(n_s: f64) -> f64 {
    1.0 + 1.0 / (4.0 * n_s)
}

/// Noiseless high-reflectivity observable `(−μ², −1, μ, −ν)`.
pub fn noiseless_observable(n_s: f64) -> Result<SldCoefficients> {
    if !(n_s > 0.0) {
        return Err(domain(format!("n_s must be > 0, got {n_s}")));
    }
    Ok(SldCoefficients {
        l11: -mu_squared(n_s),
        l22: -1.0,
        l12: mu_squared(n_s).sqrt(),
        l0: -nu_noiseless(n_s),
    })
}

/// `O_C = 2A [(â₂† − c)(â₂ − c) + ½]` acting on the second mode only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoherentObservable {
    pub a_coef: f64,
    pub center: f64,
}

/// `O_C = number · n̂₂ + linear · (â₂ + â₂†) + constant`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpandedObservable {
    pub number: f64,
    pub linear: f64,
    pub constant: f64,
}

impl CoherentObservable {
    pub fn expand(&self) -> ExpandedObservable {
        let (a, c0) = (self.a_coef, self.center);
        ExpandedObservable {
            number: 2.0 * a,
            linear: -2.0 * a * c0,
            constant: a * (1.0 + 2.0 * c0 * c0),
        }
    }

    pub fn to_operator(&self) -> QuadraticOperator {
        let e = self.expand();
        let mut op = QuadraticOperator::zero();
        op.number[(1, 1)] = c(e.number, 0.0);
        op.linear[1] = c(e.linear, 0.0);
        op.constant = e.constant;
        op
    }
}

/// `A = ½(η₁ − 1)(1 − N_th(η₁ − 1))`, centre `η₁√α`.
pub fn coherent_observable(eta1: f64, n_th: f64, alpha: f64) -> Result<CoherentObservable> {
    check_open(eta1)?;
    if !(alpha >= 0.0) {
        return Err(domain(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(CoherentObservable {
        a_coef: 0.5 * (eta1 - 1.0) * (1.0 - n_th * (eta1 - 1.0)),
        center: eta1 * alpha.sqrt(),
    })
}

/// Beam splitter `φ`, two squeezers `(r_i, θ_i)`, beam splitter `θ`, phase `ϕ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JpaCircuitParams {
    pub varphi: f64,
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub phi: f64,
}

impl JpaCircuitParams {
    fn from_slice(x: &[f64]) -> Self {
        Self {
            varphi: x[0],
            theta: x[1],
            r1: x[2],
            r2: x[3],
            theta1: x[4],
            theta2: x[5],
            phi: x[6],
        }
    }

    fn to_array(self) -> [f64; 7] {
        [self.varphi, self.theta, self.r1, self.r2, self.theta1, self.theta2, self.phi]
    }

    /// Output mode as coefficients on `(â₁, â₂, â₁†, â₂†)`.
    pub fn output_mode(&self) -> Vector4<C64> {
        let (cv, sv) = (self.varphi.cos(), self.varphi.sin());
        let (ct, st) = (self.theta.cos(), self.theta.sin());
        let (ch1, sh1) = (self.r1.cosh(), self.r1.sinh());
        let (ch2, sh2) = (self.r2.cosh(), self.r2.sinh());
        let e1 = C64::from_polar(1.0, self.theta1);
        let e2 = C64::from_polar(1.0, self.theta2);
        let raw = Vector4::new(
            c(ct * cv * ch1 - st * sv * ch2, 0.0),
            c(ct * sv * ch1 + st * cv * ch2, 0.0),
            -e1 * (ct * cv * sh1) + e2 * (st * sv * sh2),
            -e1 * (ct * sv * sh1) - e2 * (st * cv * sh2),
        );
        raw * C64::from_polar(1.0, -self.phi)
    }

    fn canonical(self) -> Self {
        let wrap = |a: f64| {
            let t = a.rem_euclid(std::f64::consts::TAU);
            if t > std::f64::consts::PI {
                t - std::f64::consts::TAU
            } else {
                t
            }
        };
        let (mut r1, mut t1) = (self.r1, self.theta1);
        let (mut r2, mut t2) = (self.r2, self.theta2);
        if r1 < 0.0 {
            r1 = -r1;
            t1 += std::f64::consts::PI;
        }
        if r2 < 0.0 {
            r2 = -r2;
            t2 += std::f64::consts::PI;
        }
        Self {
            varphi: wrap(self.varphi),
            theta: wrap(self.theta),
            r1,
            r2,
            theta1: wrap(t1),
            theta2: wrap(t2),
            phi: wrap(self.phi),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JpaSolution {
    pub params: JpaCircuitParams,
    pub mu: f64,
    /// `√(μ² − 1)`: the circuit produces `b̂₁ / scale`.
    pub scale: f64,
    /// `[b̂₁, b̂₁†]` of the unnormalised target mode.
    pub commutator: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Target coefficients of the normalised mode `b̂₁/s`, `b̂₁ = −i(â₂† − μâ₁)`.
fn jpa_target(n_s: f64) -> (Vector4<C64>, f64, f64) {
    let mu = mu_squared(n_s).sqrt();
    let s = (mu * mu - 1.0).sqrt();
    let t = Vector4::new(c(0.0, mu / s), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0 / s));
    (t, mu, s)
}

fn jpa_residual(x: &[f64], target: &Vector4<C64>) -> DVector<f64> {
    let out = JpaCircuitParams::from_slice(x).output_mode() - target;
    DVector::from_fn(8, |i, _| if i < 4 { out[i].re } else { out[i - 4].im })
}

pub const JPA_TOLERANCE: f64 = 1e-12;
pub const JPA_MAX_ITERATIONS: usize = 200;

/// Circuit parameters producing the photon-counting mode of the noiseless
/// high-reflectivity observable.
///
/// Damped Gauss–Newton (Levenberg–Marquardt) on the eight real equations
/// obtained by matching all four output coefficients, started from a point
/// of the symmetric ansatz `r₁ = r₂`, `θ = −φ`.
pub fn jpa_circuit_solve(n_s: f64) -> Result<JpaSolution> {
    if !(n_s > 0.0) || !n_s.is_finite() {
        return Err(domain(format!("n_s must be > 0, got {n_s}")));
    }
    let (target, mu, s) = jpa_target(n_s);
    let r0 = (1.0 / s).asinh();
    let mut x = DVector::from_row_slice(&[0.6, -0.6, r0, r0, 0.3, 2.8, -1.3]);
    let mut f = jpa_residual(x.as_slice(), &target);
    let mut damping = 1e-3;
    let mut iterations = 0;
    while f.norm() > JPA_TOLERANCE && iterations < JPA_MAX_ITERATIONS {
        iterations += 1;
        let h = 1e-7;
        let mut jac = DMatrix::zeros(8, 7);
        for k in 0..7 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let col = (jpa_residual(xp.as_slice(), &target) - jpa_residual(xm.as_slice(), &target)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &f;
        loop {
            let mut lhs = jtj.clone();
            for k in 0..7 {
                lhs[(k, k)] += damping * (1.0 + jtj[(k, k)]);
            }
            let step = lhs.lu().solve(&(-&grad));
            let Some(step) = step else {
                damping *= 10.0;
                continue;
            };
            let cand = &x + &step;
            let fc = jpa_residual(cand.as_slice(), &target);
            if fc.norm() < f.norm() {
                x = cand;
                f = fc;
                damping = (damping / 3.0).max(1e-15);
                break;
            }
            damping *= 4.0;
            if damping > 1e12 {
                return Err(Error::NonConvergence { iterations, residual: f.norm() });
            }
        }
    }
    let residual_norm = f.norm();
    if residual_norm > JPA_TOLERANCE {
        return Err(Error::NonConvergence { iterations, residual: residual_norm });
    }
    let params = JpaCircuitParams::from_slice(x.as_slice()).canonical();
    let residual_norm = jpa_residual(&params.to_array(), &target).norm();
    Ok(JpaSolution {
        params,
        mu,
        scale: s,
        commutator: mu * mu - 1.0,
        residual_norm,
        iterations,
    })
}

/// The two identification equations written as residuals:
/// `iμ/s − e^{−iϕ}·(â₁ coefficient)` and `i/s + e^{−iϕ}·(â₂† coefficient)`.
pub fn jpa_identification_residuals(params: &JpaCircuitParams, n_s: f64) -> [f64; 2] {
    let (target, _, _) = jpa_target(n_s);
    let out = params.output_mode();
    [(out[0] - target[0]).norm(), (out[3] - target[3]).norm()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::SymplecticTransform;
    use std::f64::consts::PI;

    fn received(eta1: f64, n_s: f64, n_th: f64, lambda: f64) -> Result<GaussianState> {
        let input = GaussianState::thermal(n_th)?
            .tensor(&GaussianState::thermal(n_th)?)
            .tensor(&GaussianState::tmsv(n_s)?)
            .permute_modes(&[0, 2, 1, 3])?;
        let s = SymplecticTransform::beam_splitter(eta1)?.direct_sum(&SymplecticTransform::beam_splitter(eta1 + lambda)?);
        s.apply(&input)?.partial_trace(&[1, 3])
    }

    fn tmsv_family(eta1: f64, n_s: f64, n_th: f64) -> StateFamily {
        StateFamily::new(move |l| received(eta1, n_s, n_th, l), 0.0)
    }

    #[test]
    fn vacuum_is_identity_in_complex_basis() {
        let cg = ComplexGaussian::from_real(&GaussianState::vacuum(2).unwrap()).unwrap();
        assert!((cg.cov - Matrix4::identity()).map(|z| z.norm()).max() < 1e-15);
    }

    #[test]
    fn complex_round_trip() {
        let st = GaussianState::tmsv(1.0).unwrap();
        let back = ComplexGaussian::from_real(&st).unwrap().to_real().unwrap();
        assert!((back.cov() - st.cov()).amax() < 1e-12);
        let st = GaussianState::coherent(0.3, -0.8).tensor(&GaussianState::thermal(0.2).unwrap());
        let back = ComplexGaussian::from_real(&st).unwrap().to_real().unwrap();
        assert!((back.disp() - st.disp()).amax() < 1e-12);
    }

    #[test]
    fn reality_structure_of_received_state() {
        let cg = ComplexGaussian::from_real(&received(0.9, 1.0, 0.5, 0.0).unwrap()).unwrap();
        assert!(cg.reality_error() < 1e-12);
        assert!(ComplexGaussian::from_real(&GaussianState::vacuum(3).unwrap()).is_err());
    }

    #[test]
    fn constant_family_has_zero_sld() {
        let fam = StateFamily::constant(received(0.5, 1.0, 1.0, 0.0).unwrap());
        let l = sld(&fam).unwrap();
        assert_eq!(l.quad, Matrix4::zeros());
        assert!(l.linear.norm() == 0.0 && l.scalar == 0.0);
    }

    #[test]
    fn sld_has_zero_mean() {
        let l = sld(&tmsv_family(0.75, 1.0, 1.0)).unwrap();
        assert!(l.mean().abs() < 1e-9, "{}", l.mean());
    }

    /// Defining equation in the covariance picture.
    #[test]
    fn quadratic_part_solves_defining_equation() {
        let fam = tmsv_family(0.6, 0.5, 0.3);
        let l = sld(&fam).unwrap();
        let [sm, _, sp] = fam.stencil().unwrap();
        let w = quadrature_to_complex();
        let dot = (sp.cov() - sm.cov()) / (2.0 * fam.step());
        let sigma_dot = w * to_complex_matrix(&dot) * w.adjoint();
        let s = l.state.cov;
        let k = k_matrix();
        let res = s * l.quad * s - k * l.quad * k - sigma_dot;
        assert!(res.map(|z| z.norm()).max() < 1e-9);
    }

    #[test]
    fn closed_form_coefficients_against_numeric() {
        let num = optimal_observable(&tmsv_family(0.75, 1.0, 1.0)).unwrap();
        let cf = sld_coeffs_closed_form(0.75, 1.0, 1.0).unwrap();
        for (a, b) in [(num.l11, cf.l11), (num.l22, cf.l22), (num.l12, cf.l12)] {
            assert!(((a - b) / b).abs() < 1e-6, "{num:?} vs {cf:?}");
        }
    }

    #[test]
    fn observable_from_coefficients_round_trips() {
        let co = SldCoefficients { l11: -1.5, l22: -1.0, l12: 1.2, l0: 0.3 };
        let op = co.to_operator();
        assert_eq!(op.number[(0, 0)].re, -1.5);
        assert_eq!(2.0 * op.pair[(0, 1)].re, 1.2);
    }

    #[test]
    fn coherent_observable_expansion() {
        let o = coherent_observable(0.5, 0.0, 1.0).unwrap();
        assert!((o.a_coef + 0.25).abs() < 1e-15);
        let (eta1, alpha) = (0.3, 2.0);
        let o = coherent_observable(eta1, 0.7, alpha).unwrap();
        let e = o.expand();
        let a = o.a_coef;
        assert!((e.number - 2.0 * a).abs() < 1e-15);
        assert!((e.linear + 2.0 * a * eta1 * alpha.sqrt()).abs() < 1e-15);
        assert!((e.constant - a * (1.0 + 2.0 * eta1 * eta1 * alpha)).abs() < 1e-15);
        let op = o.to_operator();
        assert_eq!(op.number[(0, 0)].re, 0.0);
        assert_eq!(op.linear[0].re, 0.0);
        assert!(coherent_observable(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn coherent_sld_acts_on_second_mode_only() {
        let fam = StateFamily::new(
            |l| {
                let input = GaussianState::thermal(0.4)?
                    .tensor(&GaussianState::coherent(1.0, 0.0))
                    .tensor(&GaussianState::thermal(0.4)?)
                    .tensor(&GaussianState::coherent(1.0, 0.0));
                let s = SymplecticTransform::beam_splitter(0.5)?.direct_sum(&SymplecticTransform::beam_splitter(0.5 + l)?);
                s.apply(&input)?.partial_trace(&[1, 3])
            },
            0.0,
        );
        let op = sld(&fam).unwrap().operator();
        for (j, k) in [(0, 0), (0, 1), (1, 0)] {
            assert!(op.number[(j, k)].norm() < 1e-9);
        }
        assert!(op.pair.camax() < 1e-9);
        assert!(op.linear[0].norm() < 1e-9);
        assert!(op.number[(1, 1)].norm() > 1e-3);
    }

    #[test]
    fn high_reflectivity_limits_of_closed_form() {
        let (ns, nt) = (1.0, 2.0);
        let lim = sld_coeffs_high_reflectivity(ns, nt).unwrap();
        let near = sld_coeffs_closed_form(1.0 - 1e-9, ns, nt).unwrap();
        assert!((near.l11 - lim.l11).abs() < 1e-6);
        assert!((near.l22 - lim.l22).abs() < 1e-6);
        assert!((near.l12 - lim.l12).abs() < 1e-6);
        assert!((near.l0 - lim.l0).abs() < 1e-6);
    }

    #[test]
    fn noiseless_limits() {
        let lim = sld_coeffs_high_reflectivity(1.0, 0.0).unwrap();
        assert!((lim.l11 + 1.5).abs() < 1e-12);
        assert!((lim.l22 + 1.0).abs() < 1e-12);
        assert!((lim.l0 + 1.25).abs() < 1e-12);
        assert!((lim.l12 - 1.5f64.sqrt()).abs() < 1e-12);
        let n = noiseless_observable(1.0).unwrap();
        assert!((n.l12 - 1.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn jpa_reference_solution_satisfies_identification() {
        for ns in [0.1f64, 1.0, 4.0] {
            let r = (2.0 * ns).sqrt().asinh();
            let p = JpaCircuitParams {
                varphi: PI / 4.0,
                theta: -PI / 4.0,
                r1: r,
                r2: r,
                theta1: 0.0,
                theta2: PI,
                phi: -PI / 2.0,
            };
            let (target, _, _) = jpa_target(ns);
            assert!((p.output_mode() - target).norm() < 1e-12);
        }
    }

    #[test]
    fn jpa_solver_converges() {
        for ns in [0.01, 0.1, 1.0, 3.0, 10.0] {
            let sol = jpa_circuit_solve(ns).unwrap();
            assert!(sol.residual_norm < 1e-9, "n_s={ns}: {sol:?}");
            let [e1, e2] = jpa_identification_residuals(&sol.params, ns);
            assert!(e1 < 1e-9 && e2 < 1e-9);
            assert!(sol.params.r1 >= 0.0 && sol.params.r2 >= 0.0);
            // The output mode is canonical.
            let m = sol.params.output_mode();
            let comm = m[0].norm_sqr() + m[1].norm_sqr() - m[2].norm_sqr() - m[3].norm_sqr();
            assert!((comm - 1.0).abs() < 1e-9);
        }
        let sol = jpa_circuit_solve(1.0).unwrap();
        assert!((sol.mu - 1.5f64.sqrt()).abs() < 1e-15);
        assert!((sol.commutator - 0.5).abs() < 1e-15);
        assert!(jpa_circuit_solve(0.0).is_err());
    }
}
