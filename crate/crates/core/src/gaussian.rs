//! Gaussian states in the real covariance-matrix formalism.
//!
//! A state on `n` bosonic modes is a real symmetric `2n × 2n` covariance
//! matrix plus a real `2n` displacement vector, stored in interleaved
//! quadrature order `(x₁, p₁, …, xₙ, pₙ)`. The vacuum has `cov = I`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// Absolute tolerance on `cov − covᵀ`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest eigenvalue of `cov + iΩ` still accepted as physical.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Elementwise tolerance on `S Ω Sᵀ − Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// Ordering of the quadrature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisOrdering {
    /// `(x₁, p₁, x₂, p₂, …)`
    Interleaved,
    /// `(x₁, …, xₙ, p₁, …, pₙ)`
    Blockwise,
}

/// Symplectic form `Ω` on `n` modes in the given ordering.
///
/// Interleaved: `⊕ [[0, 1], [−1, 0]]`. Blockwise: `[[0, I], [−I, 0]]`.
pub fn symplectic_form(n_modes: usize, ordering: BasisOrdering) -> DMatrix<f64> {
    let dim = 2 * n_modes;
    let mut omega = DMatrix::zeros(dim, dim);
    for k in 0..n_modes {
        let (x, p) = match ordering {
            BasisOrdering::Interleaved => (2 * k, 2 * k + 1),
            BasisOrdering::Blockwise => (k, n_modes + k),
        };
        omega[(x, p)] = 1.0;
        omega[(p, x)] = -1.0;
    }
    omega
}

/// Permutation `T` taking interleaved quadratures to blockwise ones,
/// `r_block = T r_inter`.
///
/// With 1-based indices, `T_ij = δ(j + 2n, 2i) + δ(j, 2i − 1)`.
pub fn basis_change(n_modes: usize) -> DMatrix<f64> {
    let dim = 2 * n_modes;
    DMatrix::from_fn(dim, dim, |r, c| {
        let (i, j) = (r + 1, c + 1);
        let hit = (j + dim == 2 * i) || (j + 1 == 2 * i);
        if hit {
            1.0
        } else {
            0.0
        }
    })
}

/// Outcome of a physicality check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalityReport {
    pub physical: bool,
    /// Smallest eigenvalue of `cov + iΩ`.
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    cov: DMatrix<f64>,
    disp: DVector<f64>,
}

impl GaussianState {
    /// Builds a state from raw moments, checking shapes and symmetry.
    ///
    /// Physicality is not enforced here; see [`GaussianState::check_physical`].
    pub fn new(cov: DMatrix<f64>, disp: DVector<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || cov.ncols() != dim {
            return Err(invalid(format!(
                "covariance must be a non-empty 2n x 2n matrix, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if disp.len() != dim {
            return Err(invalid(format!(
                "displacement length {} does not match covariance dimension {dim}",
                disp.len()
            )));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(invalid(format!("covariance is not symmetric (max |Σ − Σᵀ| = {asym:e})")));
        }
        Ok(Self { cov, disp })
    }

    /// Internal constructor for moments produced by trusted operations.
    fn from_parts(cov: DMatrix<f64>, disp: DVector<f64>) -> Self {
        let sym = (&cov + cov.transpose()) * 0.5;
        Self { cov: sym, disp }
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("vacuum needs at least one mode"));
        }
        let dim = 2 * n_modes;
        Ok(Self::from_parts(DMatrix::identity(dim, dim), DVector::zeros(dim)))
    }

    /// Single-mode thermal state with mean photon number `n_th`: `cov = (1 + 2 n_th) I₂`.
    pub fn thermal(n_th: f64) -> Result<Self> {
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(invalid(format!("thermal occupation must be finite and >= 0, got {n_th}")));
        }
        let v = 1.0 + 2.0 * n_th;
        Ok(Self::from_parts(DMatrix::identity(2, 2) * v, DVector::zeros(2)))
    }

    /// Single-mode coherent state `|α⟩`, `cov = I₂`, `disp = √2 (Re α, Im α)`.
    pub fn coherent(alpha_re: f64, alpha_im: f64) -> Self {
        let s = std::f64::consts::SQRT_2;
        Self::from_parts(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![s * alpha_re, s * alpha_im]),
        )
    }

    /// Two-mode squeezed vacuum with `mean_photons` photons in each mode:
    /// diagonal blocks `(1 + 2n) I₂`, correlations `2√(n(n+1)) σ_Z`.
    pub fn two_mode_squeezed(mean_photons: f64) -> Result<Self> {
        if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
            return Err(invalid(format!(
                "photon number must be finite and >= 0, got {mean_photons}"
            )));
        }
        let diag = 1.0 + 2.0 * mean_photons;
        let corr = 2.0 * (mean_photons * (mean_photons + 1.0)).sqrt();
        let mut cov = DMatrix::identity(4, 4) * diag;
        cov[(0, 2)] = corr;
        cov[(2, 0)] = corr;
        cov[(1, 3)] = -corr;
        cov[(3, 1)] = -corr;
        Ok(Self::from_parts(cov, DVector::zeros(4)))
    }

    /// Two-mode squeezed vacuum in the bi-frequency parametrisation:
    /// diagonal `1 + 4 n_s`, correlations `2√(2 n_s (2 n_s + 1)) σ_Z`.
    ///
    /// Under the vacuum = identity convention each mode then holds `2 n_s`
    /// photons, i.e. this is `two_mode_squeezed(2 n_s)`.
    pub fn tmsv(n_s: f64) -> Result<Self> {
        if !(n_s >= 0.0) || !n_s.is_finite() {
            return Err(invalid(format!("signal photon number must be finite and >= 0, got {n_s}")));
        }
        Self::two_mode_squeezed(2.0 * n_s)
    }

    pub fn n_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn disp(&self) -> &DVector<f64> {
        &self.disp
    }

    /// Mean photon number of mode `k`: `(Σ_xx + Σ_pp − 2)/4 + (d_x² + d_p²)/2`.
    pub fn mean_photons(&self, mode: usize) -> f64 {
        let (x, p) = (2 * mode, 2 * mode + 1);
        (self.cov[(x, x)] + self.cov[(p, p)] - 2.0) / 4.0
            + (self.disp[x].powi(2) + self.disp[p].powi(2)) / 2.0
    }

    /// Product state; `self`'s modes come first.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (n, m) = (self.cov.nrows(), other.cov.nrows());
        let mut cov = DMatrix::zeros(n + m, n + m);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        cov.view_mut((n, n), (m, m)).copy_from(&other.cov);
        let mut disp = DVector::zeros(n + m);
        disp.rows_mut(0, n).copy_from(&self.disp);
        disp.rows_mut(n, m).copy_from(&other.disp);
        GaussianState::from_parts(cov, disp)
    }

    /// Keeps the listed modes (strictly increasing) and discards the rest by
    /// deleting their rows and columns.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<GaussianState> {
        if keep.is_empty() {
            return Err(invalid("partial trace must keep at least one mode"));
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!("kept modes must be strictly increasing, got {keep:?}")));
        }
        let n = self.n_modes();
        if let Some(&bad) = keep.iter().find(|&&k| k >= n) {
            return Err(invalid(format!("mode {bad} out of range for a {n}-mode state")));
        }
        Ok(self.select_modes(keep))
    }

    /// Reorders modes: mode `i` of the result is mode `order[i]` of `self`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<GaussianState> {
        let n = self.n_modes();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(invalid(format!("permutation has {} entries for {n} modes", order.len())));
        }
        for &k in order {
            if k >= n || seen[k] {
                return Err(invalid(format!("{order:?} is not a permutation of 0..{n}")));
            }
            seen[k] = true;
        }
        Ok(self.select_modes(order))
    }

    fn select_modes(&self, modes: &[usize]) -> GaussianState {
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let d = idx.len();
        let cov = DMatrix::from_fn(d, d, |i, j| self.cov[(idx[i], idx[j])]);
        let disp = DVector::from_fn(d, |i, _| self.disp[idx[i]]);
        GaussianState::from_parts(cov, disp)
    }

    /// Moments expressed in another quadrature ordering. The stored state is
    /// always interleaved, so this is only meaningful as a view for callers
    /// that need blockwise matrices; the returned value carries the permuted
    /// moments verbatim.
    pub fn reorder_basis(&self, from: BasisOrdering, to: BasisOrdering) -> GaussianState {
        if from == to {
            return self.clone();
        }
        let t = basis_change(self.n_modes());
        let t = match (from, to) {
            (BasisOrdering::Interleaved, BasisOrdering::Blockwise) => t,
            _ => t.transpose(),
        };
        GaussianState {
            cov: &t * &self.cov * t.transpose(),
            disp: &t * &self.disp,
        }
    }

    /// Checks `cov + iΩ ≥ 0` through the real embedding `[[Σ, −Ω], [Ω, Σ]]`,
    /// which has the same spectrum (each eigenvalue doubled).
    pub fn check_physical(&self) -> PhysicalityReport {
        let dim = self.cov.nrows();
        let omega = symplectic_form(self.n_modes(), BasisOrdering::Interleaved);
        let mut emb = DMatrix::zeros(2 * dim, 2 * dim);
        emb.view_mut((0, 0), (dim, dim)).copy_from(&self.cov);
        emb.view_mut((dim, dim), (dim, dim)).copy_from(&self.cov);
        emb.view_mut((0, dim), (dim, dim)).copy_from(&(-&omega));
        emb.view_mut((dim, 0), (dim, dim)).copy_from(&omega);
        let min_eigenvalue = emb.symmetric_eigen().eigenvalues.min();
        PhysicalityReport {
            physical: min_eigenvalue >= -PHYSICALITY_TOL,
            min_eigenvalue,
        }
    }
}

/// Real linear map on quadratures preserving `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
}

impl SymplecticTransform {
    /// Wraps a matrix after checking `S Ω Sᵀ = Ω` (interleaved ordering).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || matrix.ncols() != dim {
            return Err(invalid(format!(
                "symplectic matrix must be 2n x 2n, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let s = Self { matrix };
        let err = s.symplectic_error();
        if err > SYMPLECTIC_TOL {
            return Err(invalid(format!("matrix is not symplectic (max |SΩSᵀ − Ω| = {err:e})")));
        }
        Ok(s)
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Beam splitter of reflectivity `eta` on (bath, signal), zero phase:
    /// `[[√η I, √(1−η) I], [−√(1−η) I, √η I]]`.
    pub fn beam_splitter(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(invalid(format!("reflectivity must lie in [0, 1], got {eta}")));
        }
        let (r, t) = (eta.sqrt(), (1.0 - eta).sqrt());
        let mut m = DMatrix::zeros(4, 4);
        for k in 0..2 {
            m[(k, k)] = r;
            m[(k + 2, k + 2)] = r;
            m[(k, k + 2)] = t;
            m[(k + 2, k)] = -t;
        }
        Ok(Self { matrix: m })
    }

    /// Block-diagonal composition acting on `self`'s modes then `other`'s.
    pub fn direct_sum(&self, other: &SymplecticTransform) -> SymplecticTransform {
        let (n, m) = (self.matrix.nrows(), other.matrix.nrows());
        let mut out = DMatrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(&self.matrix);
        out.view_mut((n, n), (m, m)).copy_from(&other.matrix);
        SymplecticTransform { matrix: out }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `max |S Ω Sᵀ − Ω|`.
    pub fn symplectic_error(&self) -> f64 {
        let omega = symplectic_form(self.n_modes(), BasisOrdering::Interleaved);
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    /// `cov ← S cov Sᵀ`, `disp ← S disp`.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if state.cov.nrows() != self.matrix.nrows() {
            return Err(invalid(format!(
                "transform acts on {} modes but state has {}",
                self.n_modes(),
                state.n_modes()
            )));
        }
        let cov = &self.matrix * &state.cov * self.matrix.transpose();
        let disp = &self.matrix * &state.disp;
        Ok(GaussianState::from_parts(cov, disp))
    }
}
