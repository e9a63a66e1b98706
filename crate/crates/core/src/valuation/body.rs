//! Convex bodies in `R^16` and their (smoothed) support functions.
//!
//! A body is stored as `scale * shape + offset`, so that translations and dilations
//! act on two scalars/vectors only: `h_K(x) = scale * h_shape(x) + <offset, x>`.
//! Hessians never see the offset, which makes translation invariance of every
//! Hessian-based functional exact.

use serde::{Deserialize, Serialize};

use crate::calculus::field::{Field, ScalarField, Smoothness};
use crate::calculus::mollify::{mollify, Mollifier};
use crate::error::{Error, Result};
use crate::hermitian2::RealSym16;
use crate::{Mat16, Vec16};

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Unit ball centered at 0.
    Ball,
    /// `{x : x^T M^{-1} x <= 1}`, `h(x) = sqrt(x^T M x)`.
    Ellipsoid(Mat16),
    Polytope(Vec<Vec16>),
    /// Axis-parallel box `[lo, hi]`.
    Box { lo: Vec16, hi: Vec16 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody {
    pub shape: Shape,
    pub scale: f64,
    pub offset: Vec16,
}

/// JSON form of a body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BodySpec {
    Ball { center: Vec<f64>, radius: f64 },
    Ellipsoid { center: Vec<f64>, shape: Vec<Vec<f64>> },
    Polytope { vertices: Vec<Vec<f64>> },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

fn vec16(v: &[f64], what: &str) -> Result<Vec16> {
    if v.len() != 16 {
        return Err(Error::Parse(format!("{what} needs 16 coordinates, got {}", v.len())));
    }
    Ok(Vec16::from_column_slice(v))
}

impl TryFrom<&BodySpec> for ConvexBody {
    type Error = Error;

    fn try_from(spec: &BodySpec) -> Result<Self> {
        match spec {
            BodySpec::Ball { center, radius } => ConvexBody::ball(vec16(center, "center")?, *radius),
            BodySpec::Ellipsoid { center, shape } => {
                if shape.len() != 16 {
                    return Err(Error::Parse("ellipsoid shape must be 16x16".into()));
                }
                let mut m = Mat16::zeros();
                for (i, row) in shape.iter().enumerate() {
                    m.set_row(i, &vec16(row, "shape row")?.transpose());
                }
                ConvexBody::ellipsoid(vec16(center, "center")?, m)
            }
            BodySpec::Polytope { vertices } => {
                let v = vertices.iter().map(|v| vec16(v, "vertex")).collect::<Result<Vec<_>>>()?;
                ConvexBody::polytope(v)
            }
            BodySpec::Box { lo, hi } => ConvexBody::axis_box(vec16(lo, "lo")?, vec16(hi, "hi")?),
        }
    }
}

impl ConvexBody {
    pub fn ball(center: Vec16, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ConvexBody { shape: Shape::Ball, scale: radius, offset: center })
    }

    pub fn unit_ball() -> Self {
        ConvexBody { shape: Shape::Ball, scale: 1.0, offset: Vec16::zeros() }
    }

    pub fn ellipsoid(center: Vec16, m: Mat16) -> Result<Self> {
        let m = RealSym16::new(m)?;
        if m.min_eigenvalue() <= 0.0 {
            return Err(Error::Domain("ellipsoid shape matrix must be positive definite".into()));
        }
        Ok(ConvexBody { shape: Shape::Ellipsoid(m.0), scale: 1.0, offset: center })
    }

    pub fn polytope(vertices: Vec<Vec16>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Domain("polytope needs at least one vertex".into()));
        }
        Ok(ConvexBody { shape: Shape::Polytope(vertices), scale: 1.0, offset: Vec16::zeros() })
    }

    pub fn point(p: Vec16) -> Self {
        ConvexBody { shape: Shape::Polytope(vec![Vec16::zeros()]), scale: 1.0, offset: p }
    }

    pub fn axis_box(lo: Vec16, hi: Vec16) -> Result<Self> {
        if (0..16).any(|i| !(lo[i] <= hi[i])) {
            return Err(Error::Domain("box needs lo <= hi in every coordinate".into()));
        }
        Ok(ConvexBody { shape: Shape::Box { lo, hi }, scale: 1.0, offset: Vec16::zeros() })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: BodySpec = serde_json::from_str(s).map_err(|e| Error::Parse(format!("body JSON: {e}")))?;
        ConvexBody::try_from(&spec)
    }

    pub fn translated(&self, t: &Vec16) -> Self {
        ConvexBody { offset: self.offset + t, ..self.clone() }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        ConvexBody { scale: self.scale * lambda, offset: self.offset * lambda, ..self.clone() }
    }

    /// Image under the linear map `g` (support function `x -> h_K(g^T x)`).
    pub fn transformed(&self, g: &Mat16) -> Result<Self> {
        let shape = match &self.shape {
            Shape::Ball => {
                if ((g.transpose() * g) - Mat16::identity()).amax() > 1e-10 {
                    Shape::Ellipsoid(g * g.transpose())
                } else {
                    Shape::Ball
                }
            }
            Shape::Ellipsoid(m) => {
                let gm = g * m * g.transpose();
                Shape::Ellipsoid((gm + gm.transpose()) * 0.5)
            }
            Shape::Polytope(v) => Shape::Polytope(v.iter().map(|p| g * p).collect()),
            Shape::Box { .. } => {
                return Err(Error::Capability("linear images of boxes are not represented; use a polytope".into()))
            }
        };
        Ok(ConvexBody { shape, scale: self.scale, offset: g * self.offset })
    }

    /// Exact support function `sup_{y in K} <x, y>`.
    pub fn support(&self, x: &Vec16) -> f64 {
        self.scale * shape_support(&self.shape, x) + self.offset.dot(x)
    }

    /// Whether the support function is smooth away from the origin (no smoothing needed).
    pub fn is_smooth(&self) -> bool {
        matches!(self.shape, Shape::Ball | Shape::Ellipsoid(_))
    }

    /// `c` with `det(∂²h_K)(x) <= c / |x|^2` for smooth bodies.
    pub fn apex_constant(&self) -> Option<f64> {
        let s2 = self.scale * self.scale;
        match &self.shape {
            Shape::Ball => Some(56.0 * s2),
            Shape::Ellipsoid(m) => {
                let lmin = RealSym16(*m).min_eigenvalue();
                Some(s2 * m.trace().powi(2) / (4.0 * lmin))
            }
            _ => None,
        }
    }

    /// Axis box `(lo, hi)` including offset/scale, when the body is one.
    pub fn as_box(&self) -> Option<(Vec16, Vec16)> {
        let (lo, hi) = match &self.shape {
            Shape::Box { lo, hi } => (*lo, *hi),
            Shape::Polytope(v) => polytope_box(v)?,
            _ => return None,
        };
        let (a, b) = (lo * self.scale + self.offset, hi * self.scale + self.offset);
        Some((a.zip_map(&b, f64::min), a.zip_map(&b, f64::max)))
    }

    pub fn spec_name(&self) -> &'static str {
        match self.shape {
            Shape::Ball => "ball",
            Shape::Ellipsoid(_) => "ellipsoid",
            Shape::Polytope(_) => "polytope",
            Shape::Box { .. } => "box",
        }
    }
}

fn shape_support(shape: &Shape, x: &Vec16) -> f64 {
    match shape {
        Shape::Ball => x.norm(),
        Shape::Ellipsoid(m) => x.dot(&(m * x)).max(0.0).sqrt(),
        Shape::Polytope(v) => v.iter().map(|p| p.dot(x)).fold(f64::NEG_INFINITY, f64::max),
        Shape::Box { lo, hi } => (0..16).map(|i| (lo[i] * x[i]).max(hi[i] * x[i])).sum(),
    }
}

/// Recognizes a polytope whose vertices are exactly the corners of an axis box.
fn polytope_box(v: &[Vec16]) -> Option<(Vec16, Vec16)> {
    let lo = v.iter().fold(Vec16::repeat(f64::INFINITY), |a, p| a.zip_map(p, f64::min));
    let hi = v.iter().fold(Vec16::repeat(f64::NEG_INFINITY), |a, p| a.zip_map(p, f64::max));
    let degenerate = (0..16).filter(|&i| lo[i] == hi[i]).count();
    if v.len() != 1usize << (16 - degenerate) {
        return None;
    }
    let mut seen = std::collections::HashSet::new();
    for p in v {
        let mut key = 0u32;
        for i in 0..16 {
            if p[i] == hi[i] && lo[i] != hi[i] {
                key |= 1 << i;
            } else if p[i] != lo[i] {
                return None;
            }
        }
        if !seen.insert(key) {
            return None;
        }
    }
    Some((lo, hi))
}

/// Whether the union of two axis boxes is convex: one contains the other, or they
/// agree in all but one coordinate and overlap in that one.
pub fn box_union_is_convex(a: &(Vec16, Vec16), b: &(Vec16, Vec16)) -> bool {
    let contains = |x: &(Vec16, Vec16), y: &(Vec16, Vec16)| (0..16).all(|i| x.0[i] <= y.0[i] && y.1[i] <= x.1[i]);
    if contains(a, b) || contains(b, a) {
        return true;
    }
    let differing: Vec<usize> = (0..16).filter(|&i| a.0[i] != b.0[i] || a.1[i] != b.1[i]).collect();
    differing.len() == 1 && {
        let i = differing[0];
        a.0[i].max(b.0[i]) <= a.1[i].min(b.1[i])
    }
}

/// How support functions are made C^2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Smoothing {
    /// Closed-form derivatives (balls and ellipsoids, away from the origin).
    Exact,
    /// `(1/β) log Σ exp(β <v, x>)`; separable over coordinates for boxes.
    Lse { beta: f64 },
    Mollify { n: u32, points: usize, seed: u64 },
}

impl Smoothing {
    pub fn describe(&self) -> String {
        match self {
            Smoothing::Exact => "exact".into(),
            Smoothing::Lse { beta } => format!("lse(beta={beta})"),
            Smoothing::Mollify { n, points, .. } => format!("mollify(n={n}, points={points})"),
        }
    }

    pub fn default_for(body: &ConvexBody) -> Self {
        if body.is_smooth() {
            Smoothing::Exact
        } else {
            Smoothing::Lse { beta: 128.0 }
        }
    }
}

/// The support function of a body as a field, smoothed as requested.
#[derive(Clone, Debug)]
pub struct SupportField {
    pub body: ConvexBody,
    pub beta: Option<f64>,
}

/// `(1/β) log(e^{βa} + e^{βb})` with first and second derivative weights.
fn lse2(beta: f64, a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let (ea, eb) = ((beta * (a - m)).exp(), (beta * (b - m)).exp());
    let s = ea + eb;
    (m + s.ln() / beta, ea / s)
}

impl SupportField {
    fn shape_value(&self, x: &Vec16) -> f64 {
        match (&self.body.shape, self.beta) {
            (Shape::Polytope(v), Some(beta)) => {
                let dots: Vec<f64> = v.iter().map(|p| p.dot(x)).collect();
                let m = dots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                m + dots.iter().map(|d| (beta * (d - m)).exp()).sum::<f64>().ln() / beta
            }
            (Shape::Box { lo, hi }, Some(beta)) => (0..16).map(|i| lse2(beta, lo[i] * x[i], hi[i] * x[i]).0).sum(),
            (shape, _) => shape_support(shape, x),
        }
    }

    fn shape_gradient(&self, x: &Vec16) -> Vec16 {
        match (&self.body.shape, self.beta) {
            (Shape::Ball, _) => {
                let n = x.norm();
                if n > 0.0 { x / n } else { Vec16::zeros() }
            }
            (Shape::Ellipsoid(m), _) => {
                let mx = m * x;
                let s = x.dot(&mx).sqrt();
                if s > 0.0 { mx / s } else { Vec16::zeros() }
            }
            (Shape::Polytope(v), Some(beta)) => {
                let (p, _) = softmax(v, x, beta);
                v.iter().zip(&p).fold(Vec16::zeros(), |acc, (vk, pk)| acc + vk * *pk)
            }
            (Shape::Polytope(v), None) => {
                let best = v.iter().max_by(|a, b| a.dot(x).total_cmp(&b.dot(x))).expect("non-empty");
                *best
            }
            (Shape::Box { lo, hi }, Some(beta)) => Vec16::from_fn(|i, _| {
                let (_, p) = lse2(beta, lo[i] * x[i], hi[i] * x[i]);
                p * lo[i] + (1.0 - p) * hi[i]
            }),
            (Shape::Box { lo, hi }, None) => Vec16::from_fn(|i, _| if lo[i] * x[i] >= hi[i] * x[i] { lo[i] } else { hi[i] }),
        }
    }

    fn shape_hessian(&self, x: &Vec16) -> Option<Mat16> {
        match (&self.body.shape, self.beta) {
            (Shape::Ball, _) => {
                let n = x.norm();
                let u = x / n;
                Some((Mat16::identity() - u * u.transpose()) / n)
            }
            (Shape::Ellipsoid(m), _) => {
                let mx = m * x;
                let s = x.dot(&mx).sqrt();
                Some(m / s - mx * mx.transpose() / (s * s * s))
            }
            (Shape::Polytope(v), Some(beta)) => {
                let (p, _) = softmax(v, x, beta);
                let mean = v.iter().zip(&p).fold(Vec16::zeros(), |acc, (vk, pk)| acc + vk * *pk);
                let second = v.iter().zip(&p).fold(Mat16::zeros(), |acc, (vk, pk)| acc + vk * vk.transpose() * *pk);
                Some((second - mean * mean.transpose()) * beta)
            }
            (Shape::Box { lo, hi }, Some(beta)) => Some(Mat16::from_fn(|i, j| {
                if i != j {
                    return 0.0;
                }
                let (_, p) = lse2(beta, lo[i] * x[i], hi[i] * x[i]);
                beta * p * (1.0 - p) * (hi[i] - lo[i]).powi(2)
            })),
            _ => None,
        }
    }
}

fn softmax(v: &[Vec16], x: &Vec16, beta: f64) -> (Vec<f64>, f64) {
    let dots: Vec<f64> = v.iter().map(|p| p.dot(x)).collect();
    let m = dots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = dots.iter().map(|d| (beta * (d - m)).exp()).collect();
    let s: f64 = w.iter().sum();
    (w.iter().map(|wk| wk / s).collect(), m)
}

impl ScalarField for SupportField {
    fn eval(&self, x: &Vec16) -> f64 {
        self.body.scale * self.shape_value(x) + self.body.offset.dot(x)
    }

    fn smoothness(&self) -> Smoothness {
        if self.body.is_smooth() || self.beta.is_some() {
            Smoothness::Smooth
        } else {
            Smoothness::Continuous
        }
    }

    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        self.shape_hessian(x).map(|h| h * self.body.scale)
    }

    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        Some(self.shape_gradient(x) * self.body.scale + self.body.offset)
    }

    fn describe(&self) -> String {
        match self.beta {
            Some(b) => format!("support({}, lse beta={b})", self.body.spec_name()),
            None => format!("support({})", self.body.spec_name()),
        }
    }
}

/// The support function of `body` under `method`, as a C^2 field where possible.
pub fn smooth_support(body: &ConvexBody, method: &Smoothing) -> Result<Field> {
    match method {
        Smoothing::Exact => {
            if !body.is_smooth() && !matches!(&body.shape, Shape::Polytope(v) if v.len() == 1) {
                return Err(Error::Capability(format!("exact Hessian of a {} support function; use lse or mollify", body.spec_name())));
            }
            Ok(std::sync::Arc::new(SupportField { body: body.clone(), beta: None }))
        }
        Smoothing::Lse { beta } => {
            if !(*beta > 0.0) {
                return Err(Error::Domain(format!("lse needs beta > 0, got {beta}")));
            }
            let beta = if body.is_smooth() { None } else { Some(*beta) };
            Ok(std::sync::Arc::new(SupportField { body: body.clone(), beta }))
        }
        Smoothing::Mollify { n, points, seed } => {
            let raw = std::sync::Arc::new(SupportField { body: body.clone(), beta: None });
            Ok(std::sync::Arc::new(mollify(raw, Mollifier::new(*n), *points, *seed)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::hessian::fd_hessian;
    use crate::mc::stream_rng;
    use rand::Rng;

    fn rv(rng: &mut impl Rng) -> Vec16 {
        Vec16::from_fn(|_, _| rng.random_range(-1.0..=1.0))
    }

    #[test]
    fn support_examples() {
        let mut rng = stream_rng(1, 0);
        let x = rv(&mut rng);
        assert_eq!(ConvexBody::unit_ball().support(&x), x.norm());
        let p = rv(&mut rng);
        assert_eq!(ConvexBody::point(p).support(&x), p.dot(&x));
        let t = rv(&mut rng);
        let k = ConvexBody::ball(rv(&mut rng), 0.7).unwrap();
        assert!((k.translated(&t).support(&x) - k.support(&x) - t.dot(&x)).abs() < 1e-14);
    }

    #[test]
    fn subadditivity() {
        let mut rng = stream_rng(2, 0);
        let a = Mat16::from_fn(|_, _| rng.random_range(-1.0..=1.0));
        let bodies = vec![
            ConvexBody::ball(rv(&mut rng), 1.3).unwrap(),
            ConvexBody::ellipsoid(rv(&mut rng), a * a.transpose() + Mat16::identity() * 0.1).unwrap(),
            ConvexBody::polytope((0..5).map(|_| rv(&mut rng)).collect()).unwrap(),
            ConvexBody::axis_box(Vec16::repeat(-1.0), Vec16::repeat(0.5)).unwrap(),
        ];
        for k in &bodies {
            for _ in 0..1000 {
                let (x, y) = (rv(&mut rng), rv(&mut rng));
                assert!(k.support(&(x + y)) <= k.support(&x) + k.support(&y) + 1e-12);
            }
        }
    }

    #[test]
    fn lse_bracket_and_derivatives() {
        let mut rng = stream_rng(3, 0);
        let verts: Vec<Vec16> = (0..6).map(|_| rv(&mut rng)).collect();
        let k = ConvexBody::polytope(verts).unwrap();
        let beta = 32.0;
        let f = smooth_support(&k, &Smoothing::Lse { beta }).unwrap();
        for _ in 0..200 {
            let x = rv(&mut rng);
            let gap = f.eval(&x) - k.support(&x);
            assert!(gap >= -1e-12 && gap <= (6.0f64).ln() / beta + 1e-12);
        }
        let x = rv(&mut rng);
        let h = f.hessian(&x).unwrap();
        let fd = fd_hessian(f.as_ref(), &x, 1e-4);
        assert!((h - fd).amax() < 1e-4 * (1.0 + h.amax()));

        let single = smooth_support(&ConvexBody::point(Vec16::repeat(0.5)), &Smoothing::Lse { beta }).unwrap();
        assert!((single.eval(&x) - 0.5 * x.sum()).abs() < 1e-12);

        // separable box LSE equals polytope LSE over its corners (checked in 2 active coordinates)
        let mut lo = Vec16::zeros();
        let mut hi = Vec16::zeros();
        lo[0] = -1.0;
        hi[0] = 0.5;
        lo[9] = -0.2;
        hi[9] = 0.8;
        let bx = ConvexBody::axis_box(lo, hi).unwrap();
        let corners: Vec<Vec16> = (0..4)
            .map(|c| {
                let mut v = Vec16::zeros();
                v[0] = if c & 1 == 0 { lo[0] } else { hi[0] };
                v[9] = if c & 2 == 0 { lo[9] } else { hi[9] };
                v
            })
            .collect();
        let poly = ConvexBody::polytope(corners).unwrap();
        let fb = smooth_support(&bx, &Smoothing::Lse { beta }).unwrap();
        let fp = smooth_support(&poly, &Smoothing::Lse { beta }).unwrap();
        // the 14 degenerate coordinates add log(2)/beta each to the box form
        let offset = 14.0 * (2.0f64).ln() / beta;
        assert!((fb.eval(&x) - offset - fp.eval(&x)).abs() < 1e-12);
        assert!((fb.hessian(&x).unwrap() - fp.hessian(&x).unwrap()).amax() < 1e-10);
    }

    #[test]
    fn analytic_hessians() {
        let mut rng = stream_rng(4, 0);
        let a = Mat16::from_fn(|_, _| rng.random_range(-1.0..=1.0));
        let e = ConvexBody::ellipsoid(rv(&mut rng), a * a.transpose() + Mat16::identity() * 0.2).unwrap();
        for k in [ConvexBody::ball(rv(&mut rng), 2.0).unwrap(), e] {
            let f = smooth_support(&k, &Smoothing::Exact).unwrap();
            let x = rv(&mut rng);
            assert!((f.eval(&x) - k.support(&x)).abs() < 1e-12);
            let fd = fd_hessian(f.as_ref(), &x, 1e-4);
            let err = (f.hessian(&x).unwrap() - fd).amax();
            assert!(err < 1e-5, "{err}");
        }
        assert!(smooth_support(&ConvexBody::axis_box(Vec16::zeros(), Vec16::repeat(1.0)).unwrap(), &Smoothing::Exact).is_err());
    }

    #[test]
    fn json_schema() {
        let ball = r#"{"type":"ball","center":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],"radius":2}"#;
        let k = ConvexBody::from_json(ball).unwrap();
        assert_eq!(k.scale, 2.0);
        assert!(matches!(ConvexBody::from_json(r#"{"type":"ball","center":[0],"radius":1}"#), Err(Error::Parse(_))));
        assert!(matches!(ConvexBody::from_json("not json"), Err(Error::Parse(_))));
    }

    #[test]
    fn box_union_helper() {
        let a = (Vec16::repeat(0.0), Vec16::repeat(1.0));
        let mut b = a;
        b.0[3] = 0.5;
        b.1[3] = 1.5;
        assert!(box_union_is_convex(&a, &b));
        let mut c = b;
        c.0[4] = 0.5;
        c.1[4] = 1.5;
        assert!(!box_union_is_convex(&a, &c));
    }
}
