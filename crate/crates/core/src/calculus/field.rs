//! Real-valued fields on `O^2 = R^16`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::hermitian2::RealSym16;
use crate::{Mat16, Vec16};

/// How much differentiability a field promises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    /// Polynomial of degree <= 2: second differences are exact.
    QuadraticExact,
    Smooth,
    /// Only continuity is assumed; Hessians must go through mollification.
    Continuous,
}

/// A deterministic real function on `R^16`.
///
/// `hessian` and `gradient` are optional closed forms; callers fall back to
/// central differences with `fd_step` when they return `None`. For
/// [`Smoothness::Continuous`] fields `gradient` may still return an almost-everywhere
/// gradient (e.g. of a Lipschitz function), which mollification uses.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: &Vec16) -> f64;

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }

    fn fd_step(&self, x: &Vec16) -> f64 {
        1e-3 * (1.0 + x.norm())
    }

    fn hessian(&self, _x: &Vec16) -> Option<Mat16> {
        None
    }

    fn gradient(&self, _x: &Vec16) -> Option<Vec16> {
        None
    }

    fn describe(&self) -> String {
        "field".to_string()
    }
}

pub type Field = Arc<dyn ScalarField>;

impl fmt::Debug for dyn ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// `|x|^2` over all 16 coordinates.
#[derive(Clone, Copy, Debug, Default)]
pub struct NormSq;

impl ScalarField for NormSq {
    fn eval(&self, x: &Vec16) -> f64 {
        x.norm_squared()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::QuadraticExact
    }
    fn hessian(&self, _x: &Vec16) -> Option<Mat16> {
        Some(Mat16::identity() * 2.0)
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        Some(x * 2.0)
    }
    fn describe(&self) -> String {
        "normsq".into()
    }
}

/// `|q1|^2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NormSq1;

impl ScalarField for NormSq1 {
    fn eval(&self, x: &Vec16) -> f64 {
        x.rows(0, 8).norm_squared()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::QuadraticExact
    }
    fn hessian(&self, _x: &Vec16) -> Option<Mat16> {
        Some(Mat16::from_fn(|i, j| if i == j && i < 8 { 2.0 } else { 0.0 }))
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        Some(Vec16::from_fn(|i, _| if i < 8 { 2.0 * x[i] } else { 0.0 }))
    }
    fn describe(&self) -> String {
        "normsq1".into()
    }
}

/// `Re(q1 conj(q2))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReQ1ConjQ2;

impl ScalarField for ReQ1ConjQ2 {
    fn eval(&self, x: &Vec16) -> f64 {
        (0..8).map(|i| x[i] * x[8 + i]).sum()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::QuadraticExact
    }
    fn hessian(&self, _x: &Vec16) -> Option<Mat16> {
        Some(Mat16::from_fn(|i, j| if i.abs_diff(j) == 8 { 1.0 } else { 0.0 }))
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        Some(Vec16::from_fn(|i, _| x[(i + 8) % 16]))
    }
    fn describe(&self) -> String {
        "re-q1-conj-q2".into()
    }
}

/// Euclidean norm `|x|`; convex, singular at the origin.
#[derive(Clone, Copy, Debug, Default)]
pub struct Abs;

impl ScalarField for Abs {
    fn eval(&self, x: &Vec16) -> f64 {
        x.norm()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Continuous
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        let n = x.norm();
        Some(if n > 0.0 { x / n } else { Vec16::zeros() })
    }
    fn describe(&self) -> String {
        "abs".into()
    }
}

/// `exp(-|x|^2 / (2 s^2))`.
#[derive(Clone, Copy, Debug)]
pub struct Gaussian {
    pub scale: f64,
}

impl ScalarField for Gaussian {
    fn eval(&self, x: &Vec16) -> f64 {
        (-x.norm_squared() / (2.0 * self.scale * self.scale)).exp()
    }
    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        let s2 = self.scale * self.scale;
        let g = self.eval(x);
        Some((x * x.transpose() / (s2 * s2) - Mat16::identity() / s2) * g)
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        Some(x * (-self.eval(x) / (self.scale * self.scale)))
    }
    fn describe(&self) -> String {
        format!("gaussian({})", self.scale)
    }
}

/// `x^T B x`.
#[derive(Clone, Copy, Debug)]
pub struct QuadForm {
    pub b: RealSym16,
}

impl ScalarField for QuadForm {
    fn eval(&self, x: &Vec16) -> f64 {
        self.b.form(x)
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::QuadraticExact
    }
    fn hessian(&self, _x: &Vec16) -> Option<Mat16> {
        Some(self.b.0 * 2.0)
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        Some(self.b.0 * x * 2.0)
    }
    fn describe(&self) -> String {
        "quadform".into()
    }
}

/// `<a, x> + c`.
#[derive(Clone, Copy, Debug)]
pub struct Affine {
    pub a: Vec16,
    pub c: f64,
}

impl Affine {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Affine { a: Vec16::from_fn(|_, _| rng.random_range(-1.0..=1.0)), c: rng.random_range(-1.0..=1.0) }
    }
}

impl ScalarField for Affine {
    fn eval(&self, x: &Vec16) -> f64 {
        self.a.dot(x) + self.c
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::QuadraticExact
    }
    fn hessian(&self, _x: &Vec16) -> Option<Mat16> {
        Some(Mat16::zeros())
    }
    fn gradient(&self, _x: &Vec16) -> Option<Vec16> {
        Some(self.a)
    }
    fn describe(&self) -> String {
        "affine".into()
    }
}

/// `sum c_k f_k`.
#[derive(Clone, Debug)]
pub struct Sum {
    pub terms: Vec<(f64, Field)>,
}

impl ScalarField for Sum {
    fn eval(&self, x: &Vec16) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.eval(x)).sum()
    }
    fn smoothness(&self) -> Smoothness {
        self.terms.iter().map(|(_, f)| f.smoothness()).max().unwrap_or(Smoothness::QuadraticExact)
    }
    fn fd_step(&self, x: &Vec16) -> f64 {
        self.terms.iter().map(|(_, f)| f.fd_step(x)).fold(f64::INFINITY, f64::min).min(1e-3 * (1.0 + x.norm()))
    }
    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        if self.smoothness() == Smoothness::Continuous {
            return None;
        }
        let mut h = Mat16::zeros();
        for (c, f) in &self.terms {
            h += super::real_hessian(f.as_ref(), x) * *c;
        }
        Some(h)
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        let mut g = Vec16::zeros();
        for (c, f) in &self.terms {
            g += f.gradient(x)? * *c;
        }
        Some(g)
    }
    fn describe(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(c, f)| format!("{c}*{}", f.describe())).collect();
        parts.join(" + ")
    }
}

/// Pointwise `max{u, v}`; continuous, with the gradient of the active branch.
#[derive(Clone, Debug)]
pub struct Max {
    pub u: Field,
    pub v: Field,
}

impl ScalarField for Max {
    fn eval(&self, x: &Vec16) -> f64 {
        self.u.eval(x).max(self.v.eval(x))
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Continuous
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        if self.u.eval(x) >= self.v.eval(x) {
            Some(super::gradient(self.u.as_ref(), x))
        } else {
            Some(super::gradient(self.v.as_ref(), x))
        }
    }
    fn describe(&self) -> String {
        format!("max({}, {})", self.u.describe(), self.v.describe())
    }
}

/// `f(M x + t)`: pullback under an affine map.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub inner: Field,
    pub m: Mat16,
    pub t: Vec16,
}

impl Pullback {
    pub fn translate(inner: Field, t: Vec16) -> Self {
        Pullback { inner, m: Mat16::identity(), t }
    }
}

impl ScalarField for Pullback {
    fn eval(&self, x: &Vec16) -> f64 {
        self.inner.eval(&(self.m * x + self.t))
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
    fn fd_step(&self, x: &Vec16) -> f64 {
        self.inner.fd_step(&(self.m * x + self.t))
    }
    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        let h = self.inner.hessian(&(self.m * x + self.t))?;
        Some(self.m.transpose() * h * self.m)
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        Some(self.m.transpose() * self.inner.gradient(&(self.m * x + self.t))?)
    }
    fn describe(&self) -> String {
        format!("pullback({})", self.inner.describe())
    }
}

/// Adapter turning a closure into a field.
pub struct FnField<F> {
    pub f: F,
    pub smoothness: Smoothness,
    pub step: f64,
}

impl<F: Fn(&Vec16) -> f64 + Send + Sync> FnField<F> {
    pub fn new(f: F, smoothness: Smoothness) -> Self {
        FnField { f, smoothness, step: 1e-3 }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

impl<F: Fn(&Vec16) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn eval(&self, x: &Vec16) -> f64 {
        (self.f)(x)
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
    fn fd_step(&self, x: &Vec16) -> f64 {
        self.step * (1.0 + x.norm())
    }
    fn describe(&self) -> String {
        "closure".into()
    }
}

pub fn field<F: ScalarField + 'static>(f: F) -> Field {
    Arc::new(f)
}
