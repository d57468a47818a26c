//! Truncated Fock-space oracle.
//!
//! Density matrices are built in the photon-number basis, sent through
//! beam-splitter loss channels and diagonalised so that the QFI can be
//! evaluated from the spectral formula
//!
//! ```text
//! H = 2 Σ_{m,n} |⟨Φ_m| ∂ρ |Φ_n⟩|² / (ρ_m + ρ_n)
//! ```
//!
//! independently of the covariance-matrix machinery.
//!
//! All states handled here have real amplitudes in the number basis (real
//! coherent amplitudes, zero squeezing and beam-splitter phases), so density
//! matrices are stored as real symmetric matrices. Multi-mode indices are
//! row-major with mode 0 most significant.
//!
//! The beam splitter conserves total photon number, so its unitary is
//! exponentiated exactly inside each number sector; truncation only enters
//! through the input tails and the signal output box. The bi-frequency
//! channel never mixes frequencies, so each frequency is simulated as its own
//! single-mode thermal-loss channel and the two images are combined, keeping
//! matrices at `cutoff² × cutoff²`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;

/// Largest tail mass a truncated input may discard.
pub const TAIL_LIMIT: f64 = 1e-10;
/// Extra levels added on top of the minimal tail-based cutoff.
pub const GUARD_LEVELS: usize = 5;
/// Eigenvalue pairs with `ρ_m + ρ_n` below this are dropped from the QFI sum.
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-12;
/// Default finite-difference step for the five-point λ-derivative.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    cutoff: usize,
    n_modes: usize,
    rho: DMatrix<f64>,
}

impl FockState {
    pub fn new(rho: DMatrix<f64>, cutoff: usize, n_modes: usize) -> Result<Self> {
        let dim = dimension(cutoff, n_modes)?;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(invalid(format!(
                "density matrix is {}x{}, expected {dim}x{dim}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let asym = (&rho - rho.transpose()).amax();
        if asym > 1e-12 {
            return Err(invalid(format!("density matrix is not symmetric ({asym:e})")));
        }
        Ok(Self { cutoff, n_modes, rho })
    }

    fn from_parts(rho: DMatrix<f64>, cutoff: usize, n_modes: usize) -> Self {
        let rho = (&rho + rho.transpose()) * 0.5;
        Self { cutoff, n_modes, rho }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn rho(&self) -> &DMatrix<f64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace()
    }

    /// Probability mass lost to truncation, `1 − Tr ρ`.
    pub fn leak(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn purity(&self) -> f64 {
        self.rho.component_mul(&self.rho).sum()
    }

    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        if self.cutoff != other.cutoff {
            return Err(invalid("tensor product needs equal cutoffs"));
        }
        Ok(FockState::from_parts(
            self.rho.kronecker(&other.rho),
            self.cutoff,
            self.n_modes + other.n_modes,
        ))
    }

    /// Conjugates by a real orthogonal operator: `U ρ Uᵀ`.
    pub fn evolve(&self, unitary: &DMatrix<f64>) -> Result<FockState> {
        if unitary.nrows() != self.rho.nrows() || unitary.ncols() != self.rho.ncols() {
            return Err(invalid("unitary dimension does not match the state"));
        }
        Ok(FockState::from_parts(
            unitary * &self.rho * unitary.transpose(),
            self.cutoff,
            self.n_modes,
        ))
    }

    /// `Tr[ρ O]`.
    pub fn expect(&self, op: &DMatrix<f64>) -> f64 {
        self.rho.component_mul(&op.transpose()).sum()
    }
}

fn dimension(cutoff: usize, n_modes: usize) -> Result<usize> {
    if cutoff == 0 || n_modes == 0 {
        return Err(invalid("cutoff and mode count must be positive"));
    }
    u32::try_from(n_modes)
        .ok()
        .and_then(|m| cutoff.checked_pow(m))
        .ok_or_else(|| invalid("Fock space dimension overflows"))
}

fn check_tail(tail: f64, cutoff: usize, minimal: impl Fn() -> usize) -> Result<()> {
    if tail > TAIL_LIMIT {
        return Err(Error::CutoffTooSmall {
            cutoff,
            required: minimal() + GUARD_LEVELS,
            tail,
            limit: TAIL_LIMIT,
        });
    }
    Ok(())
}

fn smallest_cutoff(tail: impl Fn(usize) -> f64) -> usize {
    (1..10_000).find(|&c| tail(c) <= TAIL_LIMIT).unwrap_or(10_000)
}

/// Geometric tail `(n/(1+n))^cutoff` of a thermal distribution.
pub fn thermal_tail(n_th: f64, cutoff: usize) -> f64 {
    (n_th / (1.0 + n_th)).powi(cutoff as i32)
}

/// Tail mass of the number distribution of one mode of a two-mode squeezed
/// state with `mean_photons` per mode (geometric, ratio `tanh² r`).
pub fn squeezed_tail(mean_photons: f64, cutoff: usize) -> f64 {
    thermal_tail(mean_photons, cutoff)
}

/// Poisson tail `Σ_{n ≥ cutoff} e^{−|α|²} |α|^{2n} / n!`.
pub fn coherent_tail(alpha: f64, cutoff: usize) -> f64 {
    let mean = alpha * alpha;
    let mut term = (-mean).exp();
    for n in 1..=cutoff {
        term *= mean / n as f64;
    }
    let mut tail = 0.0;
    let mut n = cutoff;
    while term > 1e-300 && (n < cutoff + 10 || term > tail * 1e-17) {
        tail += term;
        n += 1;
        term *= mean / n as f64;
    }
    tail
}

/// Recommended cutoff for a thermal mode: minimal tail-safe cutoff plus guard levels.
pub fn thermal_cutoff(n_th: f64) -> usize {
    smallest_cutoff(|c| thermal_tail(n_th, c)) + GUARD_LEVELS
}

pub fn thermal_probabilities(n_th: f64, cutoff: usize) -> Result<DVector<f64>> {
    if !(n_th >= 0.0) || !n_th.is_finite() {
        return Err(invalid(format!("thermal occupation must be >= 0, got {n_th}")));
    }
    dimension(cutoff, 1)?;
    check_tail(thermal_tail(n_th, cutoff), cutoff, || {
        smallest_cutoff(|c| thermal_tail(n_th, c))
    })?;
    let q = n_th / (1.0 + n_th);
    Ok(DVector::from_fn(cutoff, |n, _| q.powi(n as i32) / (1.0 + n_th)))
}

/// Diagonal thermal state `(1+N)⁻¹ Σ (N/(1+N))ⁿ |n⟩⟨n|`.
pub fn fock_thermal(n_th: f64, cutoff: usize) -> Result<FockState> {
    let p = thermal_probabilities(n_th, cutoff)?;
    Ok(FockState::from_parts(DMatrix::from_diagonal(&p), cutoff, 1))
}

/// Schmidt coefficients `tanhⁿ r / cosh r` of the squeezed pair whose
/// covariance equals [`GaussianState::tmsv`]`(n_s)`, i.e. `sinh² r = 2 n_s`.
pub fn tmsv_amplitudes(n_s: f64, cutoff: usize) -> Result<DVector<f64>> {
    if !(n_s >= 0.0) || !n_s.is_finite() {
        return Err(invalid(format!("signal photon number must be >= 0, got {n_s}")));
    }
    dimension(cutoff, 1)?;
    let mean = 2.0 * n_s;
    check_tail(squeezed_tail(mean, cutoff), cutoff, || {
        smallest_cutoff(|c| squeezed_tail(mean, c))
    })?;
    let r = mean.sqrt().asinh();
    let (t, c) = (r.tanh(), r.cosh());
    Ok(DVector::from_fn(cutoff, |n, _| t.powi(n as i32) / c))
}

/// Pure two-mode squeezed vacuum `Σ cₙ |n, n⟩`.
pub fn fock_tmsv(n_s: f64, cutoff: usize) -> Result<FockState> {
    let amp = tmsv_amplitudes(n_s, cutoff)?;
    let mut psi = DVector::zeros(cutoff * cutoff);
    for n in 0..cutoff {
        psi[n * cutoff + n] = amp[n];
    }
    Ok(FockState::from_parts(&psi * psi.transpose(), cutoff, 2))
}

/// Number-basis amplitudes `e^{−α²/2} αⁿ / √n!` of a real coherent state.
pub fn coherent_amplitudes(alpha: f64, cutoff: usize) -> Result<DVector<f64>> {
    if !alpha.is_finite() {
        return Err(invalid("coherent amplitude must be finite"));
    }
    dimension(cutoff, 1)?;
    check_tail(coherent_tail(alpha, cutoff), cutoff, || {
        smallest_cutoff(|c| coherent_tail(alpha, c))
    })?;
    let mut amp = DVector::zeros(cutoff);
    let mut v = (-alpha * alpha / 2.0).exp();
    for n in 0..cutoff {
        amp[n] = v;
        v *= alpha / ((n + 1) as f64).sqrt();
    }
    Ok(amp)
}

pub fn fock_coherent(alpha: f64, cutoff: usize) -> Result<FockState> {
    let amp = coherent_amplitudes(alpha, cutoff)?;
    Ok(FockState::from_parts(&amp * amp.transpose(), cutoff, 1))
}

/// Truncated annihilation operator.
pub fn annihilation(cutoff: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// Embeds a single-mode operator on `mode` of an `n_modes` register.
pub fn embed(op: &DMatrix<f64>, mode: usize, n_modes: usize) -> DMatrix<f64> {
    let c = op.nrows();
    let id = DMatrix::<f64>::identity(c, c);
    let mut out = DMatrix::<f64>::identity(1, 1);
    for k in 0..n_modes {
        out = out.kronecker(if k == mode { op } else { &id });
    }
    out
}

/// Beam-splitter unitary restricted to one total-photon-number sector.
///
/// Basis `|k, N − k⟩` (bath holds `k`); the generator is
/// `φ (a_b† a_s − a_b a_s†)` with `cos φ = √η`, so that in the Heisenberg
/// picture `a_b → √η a_b + √(1−η) a_s` and `a_s → √η a_s − √(1−η) a_b`,
/// matching [`crate::SymplecticTransform::beam_splitter`]. This is the
/// `arcsin(√η)` unitary with its output ports exchanged, so `η = 1` is the
/// identity.
fn sector_unitary(eta: f64, total: usize) -> DMatrix<f64> {
    let phi = eta.sqrt().clamp(0.0, 1.0).acos();
    let n = total;
    let mut g = DMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        let v = phi * (((k + 1) * (n - k)) as f64).sqrt();
        g[(k + 1, k)] = v;
        g[(k, k + 1)] = -v;
    }
    g.exp()
}

fn check_reflectivity(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("reflectivity must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Two-mode beam-splitter unitary on (bath, signal), truncated to the
/// `cutoff × cutoff` box.
pub fn fock_beam_splitter(eta: f64, cutoff: usize) -> Result<DMatrix<f64>> {
    check_reflectivity(eta)?;
    let dim = dimension(cutoff, 2)?;
    let mut u = DMatrix::zeros(dim, dim);
    for total in 0..=2 * (cutoff - 1) {
        let sec = sector_unitary(eta, total);
        let lo = total.saturating_sub(cutoff - 1);
        let hi = total.min(cutoff - 1);
        for b_in in lo..=hi {
            for b_out in lo..=hi {
                let row = b_out * cutoff + (total - b_out);
                let col = b_in * cutoff + (total - b_in);
                u[(row, col)] = sec[(b_out, b_in)];
            }
        }
    }
    Ok(u)
}

/// Keeps the listed modes (strictly increasing) and traces out the rest.
pub fn fock_partial_trace(state: &FockState, keep: &[usize]) -> Result<FockState> {
    let n = state.n_modes;
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= n) {
        return Err(invalid(format!("invalid kept modes {keep:?} for {n} modes")));
    }
    let c = state.cutoff;
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let digits = |idx: usize| -> Vec<usize> {
        let mut d = vec![0; n];
        let mut r = idx;
        for k in (0..n).rev() {
            d[k] = r % c;
            r /= c;
        }
        d
    };
    let compose = |d: &[usize], modes: &[usize]| modes.iter().fold(0, |acc, &k| acc * c + d[k]);

    let out_dim = c.pow(keep.len() as u32);
    let mut out = DMatrix::zeros(out_dim, out_dim);
    let full = state.rho.nrows();
    for i in 0..full {
        let di = digits(i);
        let ri = compose(&di, keep);
        for j in 0..full {
            let v = state.rho[(i, j)];
            if v == 0.0 {
                continue;
            }
            let dj = digits(j);
            if traced.iter().all(|&k| di[k] == dj[k]) {
                out[(ri, compose(&dj, keep))] += v;
            }
        }
    }
    Ok(FockState::from_parts(out, c, keep.len()))
}

/// Quadrature moments in the covariance-matrix convention
/// (`x = (a+a†)/√2`, `p = (a−a†)/(i√2)`, vacuum `Σ = I`).
///
/// For real density matrices `⟨p⟩` and the `x`–`p` correlations vanish
/// identically, so only the `xx` and `pp` blocks are computed.
pub fn quadrature_moments(state: &FockState) -> Result<GaussianState> {
    let n = state.n_modes;
    let c = state.cutoff;
    let a = annihilation(c);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x1 = (&a + a.transpose()) * s;
    // p = −i P with P real antisymmetric.
    let p1 = (&a - a.transpose()) * s;
    let xs: Vec<DMatrix<f64>> = (0..n).map(|k| embed(&x1, k, n)).collect();
    let ps: Vec<DMatrix<f64>> = (0..n).map(|k| embed(&p1, k, n)).collect();
    let mean_x: Vec<f64> = xs.iter().map(|x| state.expect(x)).collect();

    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    let mut disp = DVector::zeros(2 * n);
    for i in 0..n {
        disp[2 * i] = mean_x[i];
        for j in 0..n {
            let xx = state.expect(&(&xs[i] * &xs[j] + &xs[j] * &xs[i])) - 2.0 * mean_x[i] * mean_x[j];
            let pp = -state.expect(&(&ps[i] * &ps[j] + &ps[j] * &ps[i]));
            cov[(2 * i, 2 * j)] = xx;
            cov[(2 * i + 1, 2 * j + 1)] = pp;
        }
    }
    GaussianState::new((&cov + cov.transpose()) * 0.5, disp)
}

/// Single-mode thermal-loss channel: the signal meets a thermal bath on a
/// beam splitter of reflectivity `eta` and the bath output is discarded.
///
/// Stored as the matrices `V_k[i, b] = ⟨b + k − i, i| U |b, k⟩` (bath first),
/// so that `E(|k⟩⟨l|)ᵢⱼ = Σ_b p_b V_k[i, b] V_l[j, b]` on `i − j = k − l`,
/// with `p` the bath distribution.
#[derive(Clone, Debug)]
pub struct LossChannel {
    cutoff: usize,
    bath: DVector<f64>,
    v: Vec<DMatrix<f64>>,
}

impl LossChannel {
    pub fn new(eta: f64, n_th: f64, cutoff: usize) -> Result<Self> {
        check_reflectivity(eta)?;
        let bath = thermal_probabilities(n_th, cutoff)?;
        let sectors: Vec<DMatrix<f64>> = (0..=2 * (cutoff - 1)).map(|n| sector_unitary(eta, n)).collect();
        let v = (0..cutoff)
            .map(|k| {
                DMatrix::from_fn(cutoff, cutoff, |i, b| {
                    let total = b + k;
                    if i > total {
                        0.0
                    } else {
                        sectors[total][(total - i, b)]
                    }
                })
            })
            .collect();
        Ok(Self { cutoff, bath, v })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `E(|k⟩⟨l|)`. The bath output must agree on both sides, so only the
    /// diagonal `i − j = k − l` is populated.
    pub fn basis_image(&self, k: usize, l: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.cutoff, self.cutoff);
        self.add_basis_image(&mut out, k, l, 1.0);
        out
    }

    fn add_basis_image(&self, out: &mut DMatrix<f64>, k: usize, l: usize, scale: f64) {
        let c = self.cutoff;
        let (vk, vl) = (&self.v[k], &self.v[l]);
        for i in 0..c {
            let j = i as isize + l as isize - k as isize;
            if j < 0 || j >= c as isize {
                continue;
            }
            let j = j as usize;
            let mut acc = 0.0;
            for b in 0..c {
                acc += self.bath[b] * vk[(i, b)] * vl[(j, b)];
            }
            out[(i, j)] += scale * acc;
        }
    }

    /// `E(|u⟩⟨w|)` for real vectors.
    pub fn outer_image(&self, u: &DVector<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.cutoff, self.cutoff);
        for (k, &uk) in u.iter().enumerate() {
            if uk == 0.0 {
                continue;
            }
            for (l, &wl) in w.iter().enumerate() {
                if wl != 0.0 {
                    self.add_basis_image(&mut out, k, l, uk * wl);
                }
            }
        }
        out
    }

    /// Image of an arbitrary single-mode density matrix.
    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if state.n_modes != 1 || state.cutoff != self.cutoff {
            return Err(invalid("loss channel acts on single-mode states with matching cutoff"));
        }
        let eig = state.rho.clone().symmetric_eigen();
        let mut out = DMatrix::zeros(self.cutoff, self.cutoff);
        for (m, &w) in eig.eigenvalues.iter().enumerate() {
            if w.abs() < 1e-300 {
                continue;
            }
            let u = eig.eigenvectors.column(m).into_owned();
            out += self.outer_image(&u, &u) * w;
        }
        Ok(FockState::from_parts(out, self.cutoff, 1))
    }
}

/// Pure two-mode input written in Schmidt-like form `Σᵢ wᵢ |uᵢ⟩|vᵢ⟩`.
#[derive(Clone, Debug)]
pub struct TwoModeInput {
    cutoff: usize,
    terms: Vec<(f64, DVector<f64>, DVector<f64>)>,
}

impl TwoModeInput {
    pub fn new(cutoff: usize, terms: Vec<(f64, DVector<f64>, DVector<f64>)>) -> Result<Self> {
        if terms.iter().any(|(_, u, v)| u.len() != cutoff || v.len() != cutoff) {
            return Err(invalid("Schmidt vectors must have length equal to the cutoff"));
        }
        Ok(Self { cutoff, terms })
    }

    /// Squeezed pair matching [`GaussianState::tmsv`]`(n_s)`.
    pub fn tmsv(n_s: f64, cutoff: usize) -> Result<Self> {
        let amp = tmsv_amplitudes(n_s, cutoff)?;
        let terms = (0..cutoff)
            .filter(|&n| amp[n] != 0.0)
            .map(|n| {
                let e = DVector::from_fn(cutoff, |i, _| if i == n { 1.0 } else { 0.0 });
                (amp[n], e.clone(), e)
            })
            .collect();
        Self::new(cutoff, terms)
    }

    /// `|α⟩ ⊗ |α⟩` with real `α`.
    pub fn coherent_pair(alpha: f64, cutoff: usize) -> Result<Self> {
        let amp = coherent_amplitudes(alpha, cutoff)?;
        Self::new(cutoff, vec![(1.0, amp.clone(), amp)])
    }

    pub fn to_state(&self) -> FockState {
        let c = self.cutoff;
        let mut psi = DVector::zeros(c * c);
        for (w, u, v) in &self.terms {
            psi += u.kronecker(v) * *w;
        }
        FockState::from_parts(&psi * psi.transpose(), c, 2)
    }

    /// `(E₁ ⊗ E₂)(|ψ⟩⟨ψ|)`.
    pub fn through_channels(&self, first: &LossChannel, second: &LossChannel) -> Result<FockState> {
        let c = self.cutoff;
        if first.cutoff != c || second.cutoff != c {
            return Err(invalid("channel cutoffs must match the input cutoff"));
        }
        let basis_index = |u: &DVector<f64>| -> Option<usize> {
            let mut nz = u.iter().enumerate().filter(|(_, &x)| x != 0.0);
            match (nz.next(), nz.next()) {
                (Some((k, 1.0)), None) => Some(k),
                _ => None,
            }
        };
        let image = |ch: &LossChannel, u: &DVector<f64>, w: &DVector<f64>| match (basis_index(u), basis_index(w)) {
            (Some(k), Some(l)) => ch.basis_image(k, l),
            _ => ch.outer_image(u, w),
        };

        let mut rho = DMatrix::zeros(c * c, c * c);
        for (wi, ui, vi) in &self.terms {
            for (wj, uj, vj) in &self.terms {
                let e1 = image(first, ui, uj);
                let e2 = image(second, vi, vj);
                accumulate_kron(&mut rho, &e1, &e2, wi * wj);
            }
        }
        Ok(FockState::from_parts(rho, c, 2))
    }
}

/// `out += scale · (a ⊗ b)`, skipping exact zeros.
fn accumulate_kron(out: &mut DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, scale: f64) {
    let nb = b.nrows();
    let nz_b: Vec<(usize, usize, f64)> = (0..nb)
        .flat_map(|i| (0..nb).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let v = b[(i, j)];
            (v != 0.0).then_some((i, j, v))
        })
        .collect();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let va = a[(i, j)];
            if va == 0.0 {
                continue;
            }
            let s = scale * va;
            for &(k, l, vb) in &nz_b {
                out[(i * nb + k, j * nb + l)] += s * vb;
            }
        }
    }
}

/// `ρ(λ₀)` and its five-point central derivative.
#[derive(Clone, Debug)]
pub struct FockDerivative {
    pub rho: FockState,
    pub drho: DMatrix<f64>,
}

pub fn fock_derivative<F>(family: F, lambda0: f64, step: f64) -> Result<FockDerivative>
where
    F: Fn(f64) -> Result<FockState>,
{
    if !(step > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let rho = family(lambda0)?;
    let m2 = family(lambda0 - 2.0 * step)?;
    let m1 = family(lambda0 - step)?;
    let p1 = family(lambda0 + step)?;
    let p2 = family(lambda0 + 2.0 * step)?;
    let drho = (m2.rho - p2.rho + (p1.rho - m1.rho) * 8.0) / (12.0 * step);
    Ok(FockDerivative { rho, drho })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralQfi {
    pub value: f64,
    /// `Σ ρ_m` over the computed spectrum.
    pub eigenvalue_sum: f64,
    pub trace: f64,
    /// Truncation leak `1 − Tr ρ`.
    pub leak: f64,
    pub min_eigenvalue: f64,
}

/// Spectral QFI for a precomputed `(ρ, ∂ρ)`.
pub fn qfi_from_derivative(d: &FockDerivative, drop_threshold: f64) -> SpectralQfi {
    let eig = d.rho.rho.clone().symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let rot = vecs.transpose() * &d.drho * vecs;
    let w = &eig.eigenvalues;
    let n = w.len();
    let mut h = 0.0;
    for m in 0..n {
        for k in 0..n {
            let s = w[m] + w[k];
            if s >= drop_threshold {
                h += rot[(m, k)].powi(2) / s;
            }
        }
    }
    SpectralQfi {
        value: 2.0 * h,
        eigenvalue_sum: w.sum(),
        trace: d.rho.trace(),
        leak: d.rho.leak(),
        min_eigenvalue: w.min(),
    }
}

/// QFI of a Fock-space family at `lambda0` from the spectral formula.
pub fn qfi_spectral<F>(family: F, lambda0: f64, step: f64, drop_threshold: f64) -> Result<SpectralQfi>
where
    F: Fn(f64) -> Result<FockState>,
{
    let d = fock_derivative(family, lambda0, step)?;
    Ok(qfi_from_derivative(&d, drop_threshold))
}

/// `‖{L, ρ} − 2∂ρ‖_F / ‖∂ρ‖_F`.
pub fn anticommutator_residual(l: &DMatrix<f64>, d: &FockDerivative) -> f64 {
    let rho = d.rho.rho();
    let res = l * rho + rho * l - &d.drho * 2.0;
    res.norm() / d.drho.norm()
}
