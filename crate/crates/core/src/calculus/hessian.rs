//! Finite differences, Dirac operators, octonionic Hessians and line Laplacians.

use serde::Serialize;

use super::field::{ScalarField, Smoothness};
use super::line::AffineLine;
use crate::error::{Error, Result};
use crate::hermitian2::{octonionic_hessian_of, HMatrix2};
use crate::octonion::Octonion;
use crate::{Mat16, Vec16};

/// Central-difference Hessian with step `h` (symmetric by construction).
pub fn fd_hessian<F: ScalarField + ?Sized>(f: &F, x: &Vec16, h: f64) -> Mat16 {
    let f0 = f.eval(x);
    let e = |i: usize| Vec16::from_fn(|k, _| if k == i { h } else { 0.0 });
    let mut m = Mat16::zeros();
    let mut plus = [0.0; 16];
    let mut minus = [0.0; 16];
    for i in 0..16 {
        plus[i] = f.eval(&(x + e(i)));
        minus[i] = f.eval(&(x - e(i)));
        m[(i, i)] = (plus[i] - 2.0 * f0 + minus[i]) / (h * h);
    }
    for i in 0..16 {
        for j in (i + 1)..16 {
            let (ei, ej) = (e(i), e(j));
            let v = (f.eval(&(x + ei + ej)) - f.eval(&(x + ei - ej)) - f.eval(&(x - ei + ej))
                + f.eval(&(x - ei - ej)))
                / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// One Richardson step: `(4 H(h/2) - H(h)) / 3`.
pub fn fd_hessian_richardson<F: ScalarField + ?Sized>(f: &F, x: &Vec16, h: f64) -> Mat16 {
    (fd_hessian(f, x, h * 0.5) * 4.0 - fd_hessian(f, x, h)) / 3.0
}

pub fn fd_gradient<F: ScalarField + ?Sized>(f: &F, x: &Vec16, h: f64) -> Vec16 {
    Vec16::from_fn(|i, _| {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        (f.eval(&xp) - f.eval(&xm)) / (2.0 * h)
    })
}

/// Closed-form Hessian when available, central differences otherwise.
pub fn real_hessian<F: ScalarField + ?Sized>(f: &F, x: &Vec16) -> Mat16 {
    f.hessian(x).unwrap_or_else(|| fd_hessian(f, x, f.fd_step(x)))
}

pub fn gradient<F: ScalarField + ?Sized>(f: &F, x: &Vec16) -> Vec16 {
    f.gradient(x).unwrap_or_else(|| fd_gradient(f, x, f.fd_step(x)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianReport {
    pub hessian: HMatrix2,
    /// Imaginary parts of the diagonal and `|h12 - conj(h21)|` before symmetrization.
    pub asymmetry: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HessianRepr {
    pub a: f64,
    pub b: f64,
    pub q: [f64; 8],
    pub asymmetry: f64,
}

impl From<&HessianReport> for HessianRepr {
    fn from(r: &HessianReport) -> Self {
        HessianRepr { a: r.hessian.a, b: r.hessian.b, q: r.hessian.q.0, asymmetry: r.asymmetry }
    }
}

/// The octonionic Hessian `(d^2 f / dq̄_i dq_j)` at `x`.
///
/// Fields promising only continuity are refused; mollify them first.
pub fn octonionic_hessian<F: ScalarField + ?Sized>(f: &F, x: &Vec16) -> Result<HessianReport> {
    if f.smoothness() == Smoothness::Continuous {
        return Err(Error::Precondition(format!("octonionic Hessian of the merely continuous field `{}`", f.describe())));
    }
    let h = real_hessian(f, x);
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite second derivatives".into()));
    }
    let (hessian, asymmetry) = octonionic_hessian_of(&h);
    let tol = 1e-6 * (1.0 + h.amax());
    if asymmetry > 100.0 * tol {
        return Err(Error::Numerical(format!("octonionic Hessian asymmetry {asymmetry:.3e} exceeds {:.3e}", 100.0 * tol)));
    }
    Ok(HessianReport { hessian, asymmetry })
}

/// Dirac operator on an octonion-valued function of one octonion.
///
/// `conjugated`: `sum e_i dF/dx_i` (the operator `d/dq̄`); otherwise `sum (dF/dx_i) ē_i`.
pub fn dirac<F: Fn(&Octonion) -> Octonion>(f: F, p: &Octonion, conjugated: bool, h: f64) -> Octonion {
    let mut acc = Octonion::ZERO;
    for i in 0..8 {
        let e = Octonion::basis(i);
        let d = (f(&(*p + e * h)) - f(&(*p - e * h))) / (2.0 * h);
        acc += if conjugated { e * d } else { d * e.conj() };
    }
    acc
}

/// Laplacian of `x -> f(base + xi x)` at parameter `x`, by second differences along
/// the orthonormal tangent directions `xi e_c`.
pub fn line_laplacian<F: ScalarField + ?Sized>(f: &F, line: &AffineLine, x: &Octonion) -> f64 {
    let p = line.point(x);
    let h = f.fd_step(&p);
    let f0 = f.eval(&p);
    (0..8)
        .map(|c| {
            let d = line.tangent(c) * h;
            (f.eval(&(p + d)) - 2.0 * f0 + f.eval(&(p - d))) / (h * h)
        })
        .sum()
}
