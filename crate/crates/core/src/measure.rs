//! Monte-Carlo Monge-Ampere functionals: `∫ ψ det(∂²f)`, its mixed version, the
//! trilinear form `τ`, and the residual of the max/min identities under
//! χ-smoothing.

use rand::Rng;
use serde::Serialize;

use crate::calculus::field::{Field, ScalarField, Smoothness};
use crate::calculus::hessian::{gradient, real_hessian};
use crate::calculus::psh::Region;
use crate::error::{Error, Result};
use crate::hermitian2::{octonionic_hessian_of, HMatrix2};
use crate::mc::{batch_means, MeasureEstimate, DEFAULT_BATCHES};
use crate::{Mat16, Vec16};

/// Product bump `A prod_i (1 - s_i^2)^k` on a box, `s_i` the coordinate rescaled to `[-1, 1]`.
///
/// `order >= 3` makes it C^2 across the boundary of its support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    pub support: Region,
    pub order: i32,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(support: Region, order: i32) -> Result<Self> {
        if order < 3 {
            return Err(Error::Domain(format!("bump order {order} is not C^2 (need >= 3)")));
        }
        Ok(TestFunction { support, order, amplitude: 1.0 })
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }

    /// Bump on a random sub-box of `within`, each side at least `min_frac` of the enclosing one.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, within: &Region, min_frac: f64) -> Self {
        let mut lo = Vec16::zeros();
        let mut hi = Vec16::zeros();
        for i in 0..16 {
            let w = within.hi[i] - within.lo[i];
            let len = w * rng.random_range(min_frac..=1.0);
            lo[i] = within.lo[i] + (w - len) * rng.random::<f64>();
            hi[i] = lo[i] + len;
        }
        TestFunction { support: Region { lo, hi }, order: rng.random_range(3..=4), amplitude: 1.0 }
    }

    pub fn translated(&self, t: &Vec16) -> Self {
        TestFunction { support: self.support.translated(t), ..*self }
    }

    /// Per-coordinate factor, first and second derivatives.
    fn factor(&self, i: usize, x: f64) -> (f64, f64, f64) {
        let (lo, hi) = (self.support.lo[i], self.support.hi[i]);
        if x <= lo || x >= hi {
            return (0.0, 0.0, 0.0);
        }
        let c = 2.0 / (hi - lo);
        let s = c * (x - lo) - 1.0;
        let u = 1.0 - s * s;
        let k = self.order as f64;
        let f = u.powi(self.order);
        let d1 = -2.0 * k * s * u.powi(self.order - 1) * c;
        let d2 = (-2.0 * k * u.powi(self.order - 1) + 4.0 * k * (k - 1.0) * s * s * u.powi(self.order - 2)) * c * c;
        (f, d1, d2)
    }

    fn factors(&self, x: &Vec16) -> [(f64, f64, f64); 16] {
        std::array::from_fn(|i| self.factor(i, x[i]))
    }
}

/// Product of all factors except those at `skip`.
fn product_except(vals: &[(f64, f64, f64); 16], skip: &[usize]) -> f64 {
    vals.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, v)| v.0).product()
}

impl ScalarField for TestFunction {
    fn eval(&self, x: &Vec16) -> f64 {
        self.amplitude * self.factors(x).iter().map(|v| v.0).product::<f64>()
    }

    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        let v = self.factors(x);
        let mut h = Mat16::zeros();
        if !self.support.contains(x) {
            return Some(h);
        }
        for i in 0..16 {
            h[(i, i)] = self.amplitude * v[i].2 * product_except(&v, &[i]);
            for j in (i + 1)..16 {
                let e = self.amplitude * v[i].1 * v[j].1 * product_except(&v, &[i, j]);
                h[(i, j)] = e;
                h[(j, i)] = e;
            }
        }
        Some(h)
    }

    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        let v = self.factors(x);
        Some(Vec16::from_fn(|i, _| self.amplitude * v[i].1 * product_except(&v, &[i])))
    }

    fn describe(&self) -> String {
        format!("bump(order={})", self.order)
    }
}

/// Product density on a box, tabulated per coordinate as piecewise constant on
/// `CELLS` cells. Used for importance sampling against product bumps.
#[derive(Clone, Debug)]
pub struct ProductDensity {
    pub region: Region,
    cdf: Vec<Vec<f64>>,
    pdf: Vec<Vec<f64>>,
}

const CELLS: usize = 2048;

impl ProductDensity {
    /// Per-coordinate weights `w(i, x) >= 0`, evaluated at cell midpoints.
    pub fn new(region: Region, w: impl Fn(usize, f64) -> f64) -> Self {
        let mut cdf = Vec::with_capacity(16);
        let mut pdf = Vec::with_capacity(16);
        for i in 0..16 {
            let width = (region.hi[i] - region.lo[i]) / CELLS as f64;
            let mut masses: Vec<f64> = (0..CELLS).map(|c| w(i, region.lo[i] + (c as f64 + 0.5) * width).max(0.0)).collect();
            let total: f64 = masses.iter().sum();
            if total <= 0.0 || !total.is_finite() {
                masses.iter_mut().for_each(|m| *m = 1.0 / CELLS as f64);
            } else {
                masses.iter_mut().for_each(|m| *m /= total);
            }
            let mut acc = 0.0;
            let c: Vec<f64> = masses.iter().map(|m| { acc += m; acc }).collect();
            pdf.push(masses.iter().map(|m| m / width).collect());
            cdf.push(c);
        }
        ProductDensity { region, cdf, pdf }
    }

    pub fn uniform(region: Region) -> Self {
        Self::new(region, |_, _| 1.0)
    }

    /// Density following `prod_a phi_a^power` for the given bumps.
    pub fn for_bumps(region: Region, bumps: &[&TestFunction], power: f64) -> Self {
        Self::new(region, |i, x| bumps.iter().map(|b| b.factor(i, x).0.powf(power)).product())
    }

    /// A point and `1 / density` at that point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec16, f64) {
        let mut x = Vec16::zeros();
        let mut inv = 1.0;
        for i in 0..16 {
            let u: f64 = rng.random();
            let c = self.cdf[i].partition_point(|&v| v < u).min(CELLS - 1);
            let width = (self.region.hi[i] - self.region.lo[i]) / CELLS as f64;
            x[i] = self.region.lo[i] + (c as f64 + rng.random::<f64>()) * width;
            inv /= self.pdf[i][c];
        }
        (x, inv)
    }
}

fn require_c2(f: &dyn ScalarField) -> Result<()> {
    if f.smoothness() == Smoothness::Continuous {
        return Err(Error::Precondition(format!(
            "Monge-Ampere integrand needs a C^2 field; `{}` is only continuous",
            f.describe()
        )));
    }
    Ok(())
}

pub fn hessian_at(f: &dyn ScalarField, x: &Vec16) -> HMatrix2 {
    octonionic_hessian_of(&real_hessian(f, x)).0
}

impl TestFunction {
    /// Importance density proportional (up to tabulation) to the bump itself.
    pub fn density(&self) -> ProductDensity {
        ProductDensity::for_bumps(self.support, &[self], 1.0)
    }
}

/// `∫ ψ(x) g(x) dx` for a per-point integrand `g`, importance-sampled from `ψ`.
pub fn psi_integral<G>(psi: &TestFunction, n: usize, seed: u64, g: G) -> MeasureEstimate
where
    G: Fn(&Vec16) -> f64 + Sync,
{
    let dens = psi.density();
    batch_means(n, DEFAULT_BATCHES, seed, 1, |rng, out| {
        let (x, inv) = dens.sample(rng);
        let w = psi.eval(&x) * inv;
        if w != 0.0 {
            out[0] = w * g(&x);
        }
    })
    .estimate(0)
}

/// `∫ ψ det(∂²f) dq`.
pub fn ma_integral(f: &dyn ScalarField, psi: &TestFunction, n: usize, seed: u64) -> Result<MeasureEstimate> {
    require_c2(f)?;
    Ok(psi_integral(psi, n, seed, |x| hessian_at(f, x).det()))
}

/// `∫ ψ det(∂²f, ∂²g) dq` on the same points as [`ma_integral`].
pub fn mixed_ma_integral(f: &dyn ScalarField, g: &dyn ScalarField, psi: &TestFunction, n: usize, seed: u64) -> Result<MeasureEstimate> {
    require_c2(f)?;
    require_c2(g)?;
    Ok(psi_integral(psi, n, seed, |x| hessian_at(f, x).mixed_det(&hessian_at(g, x))))
}

/// All six orderings of `τ(f_a, f_b, f_c) = ∫ f_a det(∂²f_b, ∂²f_c)` on common points.
///
/// The integrand vanishes outside the common support of the three bumps, so points
/// are drawn there; every ordering therefore sees the same sample.
#[derive(Clone, Debug)]
pub struct TauTable {
    pub perms: [[usize; 3]; 6],
    pub batches: crate::mc::BatchMeans,
}

pub const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

impl TauTable {
    pub fn value(&self, perm: usize) -> MeasureEstimate {
        self.batches.estimate(perm)
    }

    /// Common-random-numbers estimate of `τ(perm a) - τ(perm b)`.
    pub fn difference(&self, a: usize, b: usize) -> MeasureEstimate {
        self.batches.combine(|m| m[a] - m[b])
    }
}

pub fn tau_table(f: [&TestFunction; 3], n: usize, batches: usize, seed: u64) -> TauTable {
    let common = f[0].support.intersect(&f[1].support).and_then(|r| r.intersect(&f[2].support));
    let Some(region) = common else {
        return TauTable {
            perms: PERMUTATIONS,
            batches: crate::mc::BatchMeans { means: vec![vec![0.0; 6]; batches.max(1)], n_samples: 0, seed },
        };
    };
    // the integrand can carry up to two derivatives of one bump; the cube root of the
    // product keeps the likelihood ratio bounded near the edges
    let dens = ProductDensity::for_bumps(region, &f, 1.0 / 3.0);
    let bm = batch_means(n, batches, seed, 6, |rng, out| {
        let (x, inv) = dens.sample(rng);
        let vals = [f[0].eval(&x), f[1].eval(&x), f[2].eval(&x)];
        let hs = [hessian_at(f[0], &x), hessian_at(f[1], &x), hessian_at(f[2], &x)];
        for (k, p) in PERMUTATIONS.iter().enumerate() {
            out[k] = inv * vals[p[0]] * hs[p[1]].mixed_det(&hs[p[2]]);
        }
    });
    TauTable { perms: PERMUTATIONS, batches: bm }
}

/// `τ(f0, f1, f2)`.
pub fn tau(f0: &TestFunction, f1: &TestFunction, f2: &TestFunction, n: usize, seed: u64) -> MeasureEstimate {
    tau_table([f0, f1, f2], n, DEFAULT_BATCHES, seed).value(0)
}

/// C^2 smoothing of `max{x, 0}`: zero below -1, identity above 1,
/// `3/16 + x/2 + 3x^2/8 - x^4/16` in between (the Hermite interpolant of degree <= 5).
pub fn chi(x: f64) -> (f64, f64, f64) {
    if x <= -1.0 {
        (0.0, 0.0, 0.0)
    } else if x >= 1.0 {
        (x, 1.0, 0.0)
    } else {
        let x2 = x * x;
        (3.0 / 16.0 + x / 2.0 + 3.0 * x2 / 8.0 - x2 * x2 / 16.0, 0.5 + 0.75 * x - x2 * x / 4.0, 0.75 * (1.0 - x2))
    }
}

/// `ψ_j = v + χ(j (u - v)) / j`, a smooth psh majorant of `max{u, v}` decreasing to it in `j`.
#[derive(Clone, Debug)]
pub struct ChiMax {
    pub u: Field,
    pub v: Field,
    pub level: f64,
}

impl ChiMax {
    pub fn new(u: Field, v: Field, level: f64) -> Self {
        ChiMax { u, v, level }
    }

    /// Real Hessian as `H_v + χ'(jα) H_α + j χ''(jα) ∇α ∇α^T`.
    pub fn parts(&self, x: &Vec16) -> (f64, Mat16) {
        let j = self.level;
        let alpha = self.u.eval(x) - self.v.eval(x);
        let (c, c1, c2) = chi(j * alpha);
        let hv = real_hessian(self.v.as_ref(), x);
        let mut h = hv * (1.0 - c1) + real_hessian(self.u.as_ref(), x) * c1;
        if c2 != 0.0 {
            let g = gradient(self.u.as_ref(), x) - gradient(self.v.as_ref(), x);
            h += g * g.transpose() * (j * c2);
        }
        (self.v.eval(x) + c / j, h)
    }
}

impl ScalarField for ChiMax {
    fn eval(&self, x: &Vec16) -> f64 {
        let alpha = self.u.eval(x) - self.v.eval(x);
        self.v.eval(x) + chi(self.level * alpha).0 / self.level
    }
    fn smoothness(&self) -> Smoothness {
        self.u.smoothness().max(self.v.smoothness()).max(Smoothness::Smooth)
    }
    fn fd_step(&self, x: &Vec16) -> f64 {
        (0.1 / self.level).min(1e-3 * (1.0 + x.norm()))
    }
    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        Some(self.parts(x).1)
    }
    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        let alpha = self.u.eval(x) - self.v.eval(x);
        let c1 = chi(self.level * alpha).1;
        Some(gradient(self.v.as_ref(), x) * (1.0 - c1) + gradient(self.u.as_ref(), x) * c1)
    }
    fn describe(&self) -> String {
        format!("chimax({}, {}, j={})", self.u.describe(), self.v.describe(), self.level)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockiLevel {
    pub level: f64,
    /// `∫ψ det(∂²ψ_j)`
    pub lhs: MeasureEstimate,
    /// `∫ψ det(∂²ψ_j, ∂²u + ∂²v)`
    pub mixed_sum: MeasureEstimate,
    /// `∫ψ det(∂²u, ∂²v)`
    pub mixed_uv: MeasureEstimate,
    /// LHS - RHS of the max identity.
    pub residual: MeasureEstimate,
    /// LHS - RHS of the min identity with `min = u + v - ψ_j`.
    pub residual_min: MeasureEstimate,
    pub largest_term: f64,
    /// Whether `u + v - ψ_j` had a non-negative Hessian at every sampled point.
    pub min_is_psh: bool,
}

/// Residuals of `det(∂²w) = det(∂²w, ∂²u + ∂²v) - det(∂²u, ∂²v)` (w = max{u, v})
/// and of its min counterpart, with `w` replaced by `ψ_j` at each smoothing level.
/// All integrals at one level share their sample points.
pub fn blocki_residual(
    u: &Field,
    v: &Field,
    psi: &TestFunction,
    levels: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<BlockiLevel>> {
    require_c2(u.as_ref())?;
    require_c2(v.as_ref())?;
    let dens = psi.density();
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let w = ChiMax::new(u.clone(), v.clone(), level);
        let bm = batch_means(n, DEFAULT_BATCHES, seed, 6, |rng, o| {
            let (x, inv) = dens.sample(rng);
            let weight = psi.eval(&x) * inv;
            if weight == 0.0 {
                return;
            }
            let hu = hessian_at(u.as_ref(), &x);
            let hv = hessian_at(v.as_ref(), &x);
            let hw = octonionic_hessian_of(&w.parts(&x).1).0;
            let hmin = hu + hv - hw;
            o[0] = weight * hw.det();
            o[1] = weight * hw.mixed_det(&(hu + hv));
            o[2] = weight * hu.mixed_det(&hv);
            o[3] = weight * hmin.det();
            o[4] = weight * (hu.det() + hv.det());
            o[5] = if hmin.min_eigenvalue() < -1e-9 * (1.0 + hmin.entry_norm()) { 1.0 } else { 0.0 };
        });
        let lhs = bm.estimate(0);
        let mixed_sum = bm.estimate(1);
        let mixed_uv = bm.estimate(2);
        let residual = bm.combine(|m| m[0] - m[1] + m[2]);
        let residual_min = bm.combine(|m| m[3] - m[4] + m[0]);
        let largest_term = [lhs.value, mixed_sum.value, mixed_uv.value].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let min_is_psh = bm.means.iter().all(|m| m[5] == 0.0);
        out.push(BlockiLevel { level, lhs, mixed_sum, mixed_uv, residual, residual_min, largest_term, min_is_psh });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::field::*;
    use crate::calculus::hessian::fd_hessian;
    use crate::mc::stream_rng;

    fn psi() -> TestFunction {
        TestFunction::new(Region::cube(&Vec16::zeros(), 0.5), 3).unwrap()
    }

    #[test]
    fn bump_derivatives_match_fd() {
        let mut rng = stream_rng(1, 0);
        let b = TestFunction::random(&mut rng, &Region::cube(&Vec16::zeros(), 1.0), 0.6);
        let x = b.support.center() + Vec16::from_fn(|i, _| 0.02 * (i as f64 - 8.0));
        let h = b.hessian(&x).unwrap();
        let fd = fd_hessian(&FnField::new(|y: &Vec16| b.eval(y), Smoothness::Smooth), &x, 1e-4);
        assert!((h - fd).amax() < 1e-5 * (1.0 + h.amax()));
        assert_eq!(b.eval(&(b.support.hi + Vec16::repeat(0.1))), 0.0);
        assert!(TestFunction::new(b.support, 2).is_err());
    }

    #[test]
    fn ma_examples() {
        let p = psi();
        let n = 1 << 12;
        let mass = ma_integral(&NormSq, &p, n, 3).unwrap();
        let int_psi = psi_integral(&p, n, 3, |_| 1.0);
        // each coordinate contributes 0.5 * ∫(1 - s^2)^3 ds = 16/35
        let exact = (16.0f64 / 35.0).powi(16);
        assert!(int_psi.within(exact, 4.0, 1e-3 * exact));
        assert!((mass.value - 256.0 * int_psi.value).abs() < 1e-9 * mass.value);
        let lin = Affine { a: Vec16::repeat(0.3), c: 1.0 };
        assert_eq!(ma_integral(&lin, &p, n, 3).unwrap().value, 0.0);
        assert!(ma_integral(&Abs, &p, n, 3).is_err());
        let same = mixed_ma_integral(&NormSq1, &NormSq1, &p, n, 4).unwrap();
        assert_eq!(same, ma_integral(&NormSq1, &p, n, 4).unwrap());
    }

    #[test]
    fn chi_shape() {
        for k in -300..=300 {
            let x = k as f64 / 100.0;
            let (c, c1, c2) = chi(x);
            assert!(c >= x.max(0.0) - 1e-15);
            assert!((0.0..=1.0).contains(&c1) && c2 >= 0.0);
        }
        // C^2 at the junctions
        for x in [-1.0f64, 1.0] {
            let (a, b) = (chi(x - 1e-9), chi(x + 1e-9));
            assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8 && (a.2 - b.2).abs() < 1e-8);
        }
    }

    #[test]
    fn tau_zero_and_symmetric_pair() {
        let mut rng = stream_rng(5, 0);
        let outer = Region::cube(&Vec16::zeros(), 1.0);
        let f: Vec<TestFunction> = (0..3).map(|_| TestFunction::random(&mut rng, &outer, 0.7)).collect();
        let t = tau_table([&f[0], &f[1], &f[2]], 1 << 10, 16, 1);
        assert_eq!(t.value(0), t.value(1));
        let zero = f[0].with_amplitude(0.0);
        assert_eq!(tau(&zero, &f[1], &f[2], 1 << 10, 1).value, 0.0);
    }
}
