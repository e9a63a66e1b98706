//! Calculus of real functions on `O^2`: octonionic Hessians, restriction to
//! octonionic lines, plurisubharmonicity and mollification.

pub mod field;
pub mod hessian;
pub mod line;
pub mod mollify;
pub mod psh;

pub use field::{field, Field, ScalarField, Smoothness};
pub use hessian::{dirac, gradient, line_laplacian, octonionic_hessian, real_hessian, HessianReport};
pub use line::AffineLine;
pub use mollify::{mollify, Mollified, Mollifier};
pub use psh::{is_psh, sphere_mean, PshReport, Region};
