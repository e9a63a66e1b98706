//! Octonionic plurisubharmonic functions on `O^2 = R^16`: the octonion algebra,
//! hermitian 2x2 octonionic matrices, the `Spin(9)` / `Spin(9,1)` actions, the
//! octonionic Hessian and Monge-Ampere operators, Monte-Carlo measures, the
//! resulting `Spin(9)`-invariant valuations, and the Radon transform over
//! octonionic lines.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod hermitian2;
pub mod mc;
pub mod measure;
pub mod octonion;
pub mod radon;
pub mod spin;
pub mod valuation;

pub use error::{Error, Result};
pub use hermitian2::{HMatrix2, OctoMatrix2, OctoVec2, RealSym16};
pub use octonion::Octonion;

pub type Vec16 = nalgebra::SVector<f64, 16>;
pub type Mat16 = nalgebra::SMatrix<f64, 16, 16>;
