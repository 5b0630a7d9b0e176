//! Renormalization of products of complex powers of analytic functions.
//!
//! The crate is organized bottom-up:
//!
//! - [`germ`]: exact and approximate algebra of meromorphic germs with linear
//!   poles and the pole-subtracting projection.
//! - [`dist`]: test functions, analytically continued pairings against complex
//!   powers of catalog functions, and Laurent extraction by contour sampling.
//! - [`renorm`]: the renormalization operator and its extension and tensor
//!   factorization checks.
//! - [`microlocal`]: causal order, traces, polarization and cone arithmetic.
//! - [`qft`]: flat-spacetime toy amplitudes and the locality checks.

pub mod dist;
pub mod field;
pub mod germ;
pub mod linalg;
pub mod microlocal;
pub mod poly;
pub mod qft;
pub mod quad;
pub mod renorm;

pub use field::{Field, GaussRat};
pub use germ::{parse_germ, project_pi, Decomposition, LinearForm, MeroGerm};
pub use num_complex::Complex64;
