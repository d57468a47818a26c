//! Gaussian quantum-metrology engine for lossy bosonic sensing.
//!
//! The crate computes the quantum Fisher information (QFI) and the optimal
//! observable for estimating the reflectivity difference `λ = η₂ − η₁` of a
//! target probed at two frequencies, comparing a two-mode squeezed vacuum
//! probe against a pair of coherent states. A truncated Fock-space oracle
//! ([`fock`]) recomputes the same quantities by brute force.
//!
//! Conventions used throughout:
//!
//! * covariance matrices are real, vacuum-normalised (`vacuum = I`), with
//!   `Σᵢⱼ = ⟨{Δrᵢ, Δrⱼ}⟩` and `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`;
//! * quadratures are stored interleaved `(x₁, p₁, x₂, p₂, …)`;
//! * displacement of a coherent state `|α⟩` is `(√2 Re α, √2 Im α)`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod grid;
pub mod protocols;
pub mod qfi;
pub mod sld;

pub use error::{Error, Result};
pub use gaussian::{BasisOrdering, GaussianState, PhysicalityReport, SymplecticTransform};
pub use protocols::{BiFrequencyParams, Probe};
pub use qfi::{QfiResult, StateFamily};
pub use sld::SldCoefficients;
