//! Octonionic cubic forms and the singular Hessian-equation solutions built
//! from them, together with seeded certification harnesses for their spectra.
//!
//! The central object is the triality form `P(X, Y, Z) = Re((X Y) Z)` on
//! `R^24 = O^3` and the homogeneous functions `w = P / |x|^delta`.

pub mod certificate;
pub mod error;
pub mod isaacs;
pub mod linalg;
pub mod octonion;
pub mod operator;
pub mod rng;
pub mod singular;
pub mod spectral;
pub mod trilinear;
pub mod verify;

pub use certificate::{AuditConfig, Certificate};
pub use error::{Error, Result};
pub use linalg::{Spectrum, SymMatrix};
pub use octonion::{Octonion, Quaternion};
pub use trilinear::TriplePoint;
