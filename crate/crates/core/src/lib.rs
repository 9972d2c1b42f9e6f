//! Numerical toolkit for the elliptic Calogero-Sutherland model built on a
//! second-quantized anyon construction.
//!
//! - [`series`]: truncated power series in `q²`.
//! - [`elliptic`]: regularized elliptic kernels (`θ`, `b_ε`, `C_ε`, `V_ε`, …).
//! - [`fock`]: truncated two-copy boson Fock space and vertex operators.
//! - [`anyons`]: anyon correlators, closed form and Fock brute force.
//! - [`hamiltonian`]: the second-quantized Hamiltonian and its commutator identities.
//! - [`identity`]: the correlation-function identity behind the eigenfunction construction.
//! - [`spectral`]: the recursion matrix on plane-wave-like basis functions and its eigenvalues.

pub mod error;
pub mod numerics;
pub mod series;
pub mod elliptic;
pub mod fock;
pub mod report;
pub mod anyons;
pub mod hamiltonian;
pub mod identity;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use elliptic::{EllipticParams, TailControl};
pub use series::SeriesQ;
pub use fock::{FockBasis, FockOperator, FockState, FockVector, RepCoeffs, VertexSpec};
pub use report::{Check, Report};
pub use spectral::{MomentumVector, RecursionMatrix, SpectralWindow};
