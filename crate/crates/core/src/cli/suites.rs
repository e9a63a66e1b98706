//! Self-checking suites: each one recomputes a property of the library against an
//! independent oracle and reports one row per check.

use std::collections::BTreeMap;

use nalgebra::{SMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::calculus::field::{field, Field, FnField, NormSq, Pullback, ScalarField, Smoothness, Sum};
use crate::calculus::hessian::{line_laplacian, octonionic_hessian};
use crate::calculus::line::AffineLine;
use crate::calculus::psh::Region;
use crate::error::{Error, Result};
use crate::hermitian2::{project_theta, HMatrix2, OctoVec2, RealSym16};
use crate::mc::{ball_volume, batch_means, stream_rng, unit_sphere, MeasureEstimate};
use crate::measure::{blocki_residual, tau_table, TestFunction, PERMUTATIONS};
use crate::octonion::Octonion;
use crate::radon::{
    inverse_operator_at, laplacian_power_at_zero_multinomial, laplacian_power_at_zero_radial, radon_transform,
    random_line, transform_line, GaussianFamily, InverseMode, LineFunction,
};
use crate::spin::{GroupElement, Mat10, SpinContext, TracelessOctoMatrix, SL2_DIM, SPIN9_DIM};
use crate::valuation::{
    additivity_residual, omega15, pseudo_volume, pseudo_volume_pair, psi_valuation, t_valuation, u_valuation,
    u_valuation_mc, BodySpec, ConvexBody, Smoothing,
};
use crate::{Mat16, Vec16};

/// One computed value with its provenance and, for checks, the verdict.
///
/// For rows with a `target`, `tolerance` is in units of `std_error` (plus any
/// analytic slack folded into the verdict); otherwise it bounds `value` itself.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub id: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Row {
    /// A reported value without a verdict.
    pub fn info(id: impl Into<String>, value: f64) -> Row {
        Row { id: id.into(), value, std_error: None, target: None, n_samples: 0, seed: 0, pass: None, tolerance: None }
    }

    /// Passes when `value <= tol`.
    pub fn bound(id: impl Into<String>, value: f64, tol: f64) -> Row {
        Row { pass: Some(value <= tol), tolerance: Some(tol), ..Row::info(id, value) }
    }

    /// Passes when `value >= tol`.
    pub fn at_least(id: impl Into<String>, value: f64, tol: f64) -> Row {
        Row { pass: Some(value >= tol), tolerance: Some(tol), ..Row::info(id, value) }
    }

    pub fn flag(id: impl Into<String>, ok: bool) -> Row {
        Row { pass: Some(ok), ..Row::info(id, if ok { 1.0 } else { 0.0 }) }
    }

    /// Passes when `|est - target| <= k σ + slack`.
    pub fn sigma(id: impl Into<String>, est: &MeasureEstimate, target: f64, k: f64, slack: f64) -> Row {
        Row {
            id: id.into(),
            value: est.value,
            std_error: Some(est.std_error),
            target: Some(target),
            n_samples: est.n_samples,
            seed: est.seed,
            pass: Some(est.within(target, k, slack)),
            tolerance: Some(k),
        }
    }

    pub fn estimate(id: impl Into<String>, est: &MeasureEstimate) -> Row {
        Row { std_error: Some(est.std_error), n_samples: est.n_samples, seed: est.seed, ..Row::info(id, est.value) }
    }

    pub fn samples(mut self, n: usize, seed: u64) -> Row {
        self.n_samples = n;
        self.seed = seed;
        self
    }
}

/// Seed, sample-size override and per-check tolerance overrides.
#[derive(Clone, Debug, Default)]
pub struct Ctx {
    pub seed: u64,
    pub samples: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Ctx {
    pub fn new(seed: u64) -> Ctx {
        Ctx { seed, ..Ctx::default() }
    }

    fn n(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn tol(&self, id: &str, default: f64) -> f64 {
        self.tolerances.get(id).copied().unwrap_or(default)
    }

    fn rng(&self, stream: u64) -> rand_chacha::ChaCha8Rng {
        stream_rng(self.seed, stream)
    }
}

pub const SUITES: [&str; 10] =
    ["algebra", "hermitian", "spin", "calculus", "tau", "blocki", "valuation", "pseudo-volume", "classical", "radon"];

pub fn run_suite(name: &str, ctx: &Ctx) -> Result<Vec<Row>> {
    match name {
        "algebra" => algebra(ctx),
        "hermitian" => hermitian(ctx),
        "spin" => spin(ctx),
        "calculus" => calculus(ctx),
        "tau" => tau(ctx),
        "blocki" => blocki(ctx),
        "valuation" => valuation(ctx),
        "pseudo-volume" => pseudo_volume_suite(ctx),
        "classical" => classical(ctx),
        "radon" => radon(ctx),
        _ => Err(Error::Parse(format!("unknown suite `{name}` (known: {})", SUITES.join(", ")))),
    }
}

// ---------------------------------------------------------------- octonions

/// The multiplication table of `e_1..e_7`, row times column.
const TABLE: [[&str; 7]; 7] = [
    ["-1", "e4", "e7", "-e2", "e6", "-e5", "-e3"],
    ["-e4", "-1", "e5", "e1", "-e3", "e7", "-e6"],
    ["-e7", "-e5", "-1", "e6", "e2", "-e4", "e1"],
    ["e2", "-e1", "-e6", "-1", "e7", "e3", "-e5"],
    ["-e6", "e3", "-e2", "-e7", "-1", "e1", "e4"],
    ["e5", "-e7", "e4", "-e3", "-e1", "-1", "e2"],
    ["e3", "e6", "-e1", "e5", "-e4", "-e2", "-1"],
];

fn table_entry(s: &str) -> Octonion {
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s),
    };
    match rest.strip_prefix('e') {
        Some(k) => Octonion::basis(k.parse().unwrap()) * sign,
        None => Octonion::real(sign * rest.parse::<f64>().unwrap()),
    }
}

/// `x + y l` with `x, y` in the quaternions `span{1, e1, e2, e4}` and `l = e3`.
fn cayley_dickson(x: &Octonion, y: &Octonion) -> Octonion {
    *x + *y * Octonion::basis(3)
}

fn random_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Octonion {
    let c = Octonion::random(rng).0;
    Octonion::new([c[0], c[1], c[2], 0.0, c[4], 0.0, 0.0, 0.0])
}

fn algebra(ctx: &Ctx) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut mismatches = 0;
    for i in 1..8 {
        for j in 1..8 {
            if Octonion::basis(i) * Octonion::basis(j) != table_entry(TABLE[i - 1][j - 1]) {
                mismatches += 1;
            }
        }
    }
    rows.push(Row::bound("octonion.table-mismatches", mismatches as f64, 0.0));

    let n = ctx.n(10_000);
    let tol = ctx.tol("octonion.identities", 1e-12);
    let mut rng = ctx.rng(1);
    let mut worst = [0.0f64; 8];
    for _ in 0..n {
        let (a, b, c) = (Octonion::random(&mut rng), Octonion::random(&mut rng), Octonion::random(&mut rng));
        let errs = [
            ((a * b) * c).re() - (a * (b * c)).re(),
            (a * (b * c) + b.conj() * (a.conj() * c) - (a * b + b.conj() * a.conj()) * c).max_abs(),
            // the conjugate of (ii) with c for conj(c)
            ((c * a) * b + (c * b.conj()) * a.conj() - c * (a * b + b.conj() * a.conj())).max_abs(),
            // the subalgebra generated by a, b and their conjugates is associative
            Octonion::associator(&a, &b, &a)
                .max_abs()
                .max(Octonion::associator(&a, &a.conj(), &b).max_abs())
                .max(Octonion::associator(&b, &a, &b.conj()).max_abs()),
            ((a.conj() * b) * (c * a)).re() - a.norm_sqr() * (b * c).re(),
            ((a * b).norm() - a.norm() * b.norm()).abs(),
            ((a * b).conj() - b.conj() * a.conj()).max_abs(),
            (a * a.inverse()? - Octonion::ONE).max_abs(),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e.abs());
        }
    }
    let names = ["lemma-i", "lemma-ii", "lemma-iii", "lemma-iv", "lemma-v", "norm-multiplicative", "conj-anti-involution", "inverse"];
    for (name, w) in names.iter().zip(worst) {
        rows.push(Row::bound(format!("octonion.{name}"), w, tol).samples(n, ctx.seed));
    }

    let mut cd = 0.0f64;
    for _ in 0..n.min(1000) {
        let q: [Octonion; 4] = std::array::from_fn(|_| random_quaternion(&mut rng));
        let [x, y, w, z] = q;
        let lhs = cayley_dickson(&x, &y) * cayley_dickson(&w, &z);
        let rhs = cayley_dickson(&(x * w - z.conj() * y), &(z * x + y * w.conj()));
        cd = cd.max((lhs - rhs).max_abs());
    }
    rows.push(Row::bound("octonion.cayley-dickson", cd, tol).samples(n.min(1000), ctx.seed));
    Ok(rows)
}

// ---------------------------------------------------------------- hermitian matrices

fn hermitian(ctx: &Ctx) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut rng = ctx.rng(2);

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = HMatrix2::random(&mut rng);
        worst = worst.max(project_theta(&a.embed_j())?.max_abs_diff(&a));
    }
    rows.push(Row::bound("hermitian.theta-after-j", worst, ctx.tol("hermitian.theta-after-j", 1e-12)).samples(100, ctx.seed));

    // sphere average of b(xi x) over x in S^7
    let n = ctx.n(10_000);
    let k = ctx.tol("hermitian.sphere-average", 3.0);
    let b = RealSym16::random(&mut rng);
    let theta = project_theta(&b)?;
    let a = Octonion::random(&mut rng);
    for (name, xi) in [("a-1", OctoVec2::new(a, Octonion::ONE)), ("1-a", OctoVec2::new(Octonion::ONE, a))] {
        let est = batch_means(n, 16, ctx.seed, 1, |rng, out| {
            let x = Octonion::new(unit_sphere(rng));
            out[0] = b.form(&xi.right_mul(&x).to_vec16());
        })
        .estimate(0);
        rows.push(Row::sigma(format!("hermitian.sphere-average.{name}"), &est, theta.quad_form(&xi), k, 0.0));
    }

    // Sylvester criterion against the spectrum of the real 16x16 form
    let margin = ctx.tol("hermitian.sylvester-margin", 1e-8);
    let (mut disagree, mut decided, mut positive) = (0, 0, 0);
    for _ in 0..1000 {
        let shift = rng.random_range(0.0..6.0);
        let a = HMatrix2::random_positive(&mut rng) - HMatrix2::IDENTITY * shift;
        let lam = SymmetricEigen::new(a.embed_j().0).eigenvalues.min();
        if lam.abs() < margin {
            continue;
        }
        decided += 1;
        positive += (lam > 0.0) as usize;
        if a.is_positive(true) != (lam > 0.0) {
            disagree += 1;
        }
    }
    rows.push(Row::bound("hermitian.sylvester-disagreements", disagree as f64, 0.0).samples(decided, ctx.seed));
    rows.push(Row::info("hermitian.sylvester-positive-cases", positive as f64));

    // Aleksandrov: det(A, B)^2 >= det A det B for A > 0, equality on the ray of A
    let tol = ctx.tol("hermitian.aleksandrov", 1e-12);
    let (mut violation, mut equality) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let a = HMatrix2::random_positive(&mut rng);
        let b = HMatrix2::random(&mut rng) * 3.0;
        let scale = (a.entry_norm() * b.entry_norm()).powi(2);
        violation = violation.max((a.det() * b.det() - a.mixed_det(&b).powi(2)) / scale);
        let lam = rng.random_range(-2.0..2.0);
        let c = a * lam;
        let s = (a.entry_norm() * c.entry_norm()).powi(2);
        equality = equality.max((a.mixed_det(&c).powi(2) - a.det() * c.det()).abs() / s);
    }
    rows.push(Row::bound("hermitian.aleksandrov-violation", violation, tol).samples(1000, ctx.seed));
    rows.push(Row::bound("hermitian.aleksandrov-equality", equality, tol).samples(1000, ctx.seed));

    // signature of the mixed determinant on the 10-dimensional space
    let gram = Mat10::from_fn(|i, j| HMatrix2::basis(i).mixed_det(&HMatrix2::basis(j)));
    let ev = SymmetricEigen::new(gram).eigenvalues;
    let plus = ev.iter().filter(|&&l| l > 1e-12).count();
    let minus = ev.iter().filter(|&&l| l < -1e-12).count();
    rows.push(Row::flag("hermitian.signature-1-9", plus == 1 && minus == 9));

    // |A|_1 <= 4 det(A, I) for A >= 0 (entry norm |a| + |b| + 2|q|)
    let mut ratio = 0.0f64;
    for _ in 0..1000 {
        let a = HMatrix2::random_positive(&mut rng);
        ratio = ratio.max(a.entry_norm() / a.mixed_det(&HMatrix2::IDENTITY));
    }
    rows.push(Row::bound("hermitian.entry-norm-over-trace-form", ratio, 4.0).samples(1000, ctx.seed));
    Ok(rows)
}

// ---------------------------------------------------------------- SL2(O) and Spin(9)

/// The action on `H_2(O)` dual to [`GroupElement::act_h`] under `Re tr(XY)`.
fn covariant_action(g: &GroupElement, a: &HMatrix2) -> Result<HMatrix2> {
    let w = Mat10::from_diagonal(&nalgebra::SVector::<f64, 10>::from_fn(|i, _| if i < 2 { 1.0 } else { 2.0 }));
    let inv = g.g_h.try_inverse().ok_or_else(|| Error::Numerical("singular H_2(O) action".into()))?;
    let m = w.try_inverse().unwrap() * inv.transpose() * w;
    Ok(HMatrix2::from_coords((m * nalgebra::SVector::<f64, 10>::from(a.to_coords())).as_slice()))
}

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1e-300)
}

fn spin(ctx: &Ctx) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let sc = SpinContext::global();
    rows.push(Row::bound("spin.dim-sl2", (sc.full.len() as f64 - SL2_DIM as f64).abs(), 0.0));
    rows.push(Row::info("spin.dim-sl2-value", sc.full.len() as f64));
    rows.push(Row::bound("spin.dim-compact", (sc.compact.len() as f64 - SPIN9_DIM as f64).abs(), 0.0));
    rows.push(Row::info("spin.dim-compact-value", sc.compact.len() as f64));

    let mut rng = ctx.rng(3);
    let mut orth = 0.0f64;
    for _ in 0..20 {
        orth = orth.max(sc.sample_spin9(&mut rng).orthogonality_defect());
    }
    rows.push(Row::bound("spin.compact-orthogonality", orth, ctx.tol("spin.compact-orthogonality", 1e-10)).samples(20, ctx.seed));

    let (mut det_err, mut pos_fail, mut conf) = (0.0f64, 0usize, 0.0f64);
    let (mut eq44_spin, mut eq44_general) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let g = sc.sample_sl2(&mut rng, if k % 2 == 0 { 0.1 } else { 0.3 });
        let a = HMatrix2::random(&mut rng);
        det_err = det_err.max(rel((g.act_h(&a).det() - a.det()).abs(), 1.0 + a.entry_norm().powi(2)));
        let p = HMatrix2::random_positive(&mut rng);
        if !g.act_h(&p).is_positive(true) {
            pos_fail += 1;
        }
        // |g(xi u)| = |g xi| for unit u when xi is in chart form
        let xi = OctoVec2::new(Octonion::random(&mut rng), Octonion::ONE);
        let base = g.apply(&xi).norm();
        for _ in 0..4 {
            let u = Octonion::new(unit_sphere(&mut rng));
            conf = conf.max(rel((g.apply(&xi.right_mul(&u)).norm() - base).abs(), base));
        }
        let (x, y) = (OctoVec2::random(&mut rng), OctoVec2::random(&mut rng));
        let lhs = g.apply(&x).sym_outer(&g.apply(&y));
        eq44_general = eq44_general.max(rel(lhs.max_abs_diff(&covariant_action(&g, &x.sym_outer(&y))?), 1.0 + lhs.entry_norm()));
        let h = sc.sample_spin9(&mut rng);
        let lhs = h.apply(&x).sym_outer(&h.apply(&y));
        eq44_spin = eq44_spin.max(rel(lhs.max_abs_diff(&h.act_h(&x.sym_outer(&y))), 1.0 + lhs.entry_norm()));
    }
    rows.push(Row::bound("spin.det-invariance", det_err, ctx.tol("spin.det-invariance", 1e-8)).samples(100, ctx.seed));
    rows.push(Row::bound("spin.positive-cone-failures", pos_fail as f64, 0.0).samples(100, ctx.seed));
    rows.push(Row::bound("spin.line-conformality", conf, ctx.tol("spin.line-conformality", 1e-8)).samples(400, ctx.seed));
    let tol = ctx.tol("spin.outer-equivariance", 1e-8);
    rows.push(Row::bound("spin.outer-equivariance.spin9", eq44_spin, tol).samples(100, ctx.seed));
    rows.push(Row::bound("spin.outer-equivariance.sl2-dual", eq44_general, tol).samples(100, ctx.seed));

    // (M xi) xi^* + xi (M xi)^* = M (xi xi^*) + (xi xi^*) M^* for traceless M
    let mut inf = 0.0f64;
    for _ in 0..100 {
        let m = TracelessOctoMatrix::random(&mut rng);
        let xi = OctoVec2::random(&mut rng);
        let lhs = m.matrix().apply(&xi).sym_outer(&xi);
        let x = xi.outer().as_matrix();
        let (rhs, dev) = m.matrix().matmul(&x).add(&x.matmul(&m.matrix().star())).to_hermitian();
        inf = inf.max(lhs.max_abs_diff(&rhs)).max(dev);
    }
    rows.push(Row::bound("spin.infinitesimal-outer", inf, ctx.tol("spin.infinitesimal-outer", 1e-10)).samples(100, ctx.seed));
    Ok(rows)
}

// ---------------------------------------------------------------- octonionic Hessian

/// `q_1(x) q_2(x) + q_3(x) + Σ c_i x_i^3` with its closed-form Hessian.
struct Quartic {
    b: [Mat16; 3],
    c: Vec16,
}

impl Quartic {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Quartic { b: std::array::from_fn(|_| RealSym16::random(rng).0 * 0.5), c: Vec16::from_fn(|_, _| rng.random_range(-1.0..1.0)) }
    }
}

impl ScalarField for Quartic {
    fn eval(&self, x: &Vec16) -> f64 {
        let q = |m: &Mat16| (x.transpose() * m * x)[0];
        q(&self.b[0]) * q(&self.b[1]) + q(&self.b[2]) + x.iter().zip(self.c.iter()).map(|(x, c)| c * x * x * x).sum::<f64>()
    }
    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        let q = |m: &Mat16| (x.transpose() * m * x)[0];
        let (g1, g2) = (self.b[0] * x * 2.0, self.b[1] * x * 2.0);
        let cubic = Mat16::from_diagonal(&x.zip_map(&self.c, |x, c| 6.0 * c * x));
        Some(self.b[0] * (2.0 * q(&self.b[1])) + self.b[1] * (2.0 * q(&self.b[0])) + g1 * g2.transpose() + g2 * g1.transpose() + self.b[2] * 2.0 + cubic)
    }
}

fn calculus(ctx: &Ctx) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut rng = ctx.rng(4);
    let sc = SpinContext::global();

    // Laplacian along an octonionic line = Re(xi^* Hess xi) / |xi|^2
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = Quartic::random(&mut rng);
        let z = Vec16::from_fn(|_, _| rng.random_range(-0.7..0.7));
        let line = AffineLine::new(OctoVec2::random(&mut rng), z)?;
        let lhs = line_laplacian(&f, &line, &Octonion::ZERO);
        let xi = line.direction;
        let rhs = octonionic_hessian(&f, &z)?.hessian.quad_form(&xi) / xi.norm_sqr();
        let scale = f.hessian(&z).unwrap().amax() * 8.0;
        worst = worst.max(rel((lhs - rhs).abs(), scale));
    }
    rows.push(Row::bound("calculus.line-laplacian", worst, ctx.tol("calculus.line-laplacian", 1e-4)).samples(100, ctx.seed));

    // the form of j(A) has octonionic Hessian 16 A
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = HMatrix2::random(&mut rng);
        let b = a.embed_j();
        let f = FnField::new(move |x: &Vec16| b.form(x), Smoothness::Smooth);
        let x = Vec16::from_fn(|_, _| rng.random_range(-1.0..1.0));
        worst = worst.max(rel(octonionic_hessian(&f, &x)?.hessian.max_abs_diff(&(a * 16.0)), 16.0 * a.entry_norm()));
    }
    rows.push(Row::bound("calculus.form-hessian", worst, ctx.tol("calculus.form-hessian", 1e-6)).samples(100, ctx.seed));

    // theta commutes with the group action on forms and on H_2(O)
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let g = sc.sample_sl2(&mut rng, 0.3);
        let b = RealSym16::random(&mut rng);
        let lhs = project_theta(&g.act_form(&b)?)?;
        worst = worst.max(rel(lhs.max_abs_diff(&g.act_h(&project_theta(&b)?)), lhs.entry_norm()));
    }
    rows.push(Row::bound("calculus.theta-equivariance", worst, ctx.tol("calculus.theta-equivariance", 1e-10)).samples(50, ctx.seed));

    // Hess(f o g^-1)(q) = g . Hess f(g^-1 q), left side by finite differences
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g = sc.sample_sl2(&mut rng, 0.3);
        let inv = g.inverse()?;
        let f = std::sync::Arc::new(Quartic::random(&mut rng));
        let fc = f.clone();
        let ginv = inv.g16;
        let pulled = FnField::new(move |x: &Vec16| fc.eval(&(ginv * x)), Smoothness::Smooth);
        let q = Vec16::from_fn(|_, _| rng.random_range(-0.7..0.7));
        let lhs = octonionic_hessian(&pulled, &q)?.hessian;
        let rhs = g.act_h(&octonionic_hessian(f.as_ref(), &(inv.g16 * q))?.hessian);
        worst = worst.max(rel(lhs.max_abs_diff(&rhs), rhs.entry_norm()));
    }
    rows.push(Row::bound("calculus.hessian-equivariance", worst, ctx.tol("calculus.hessian-equivariance", 1e-5)).samples(20, ctx.seed));
    Ok(rows)
}

// ---------------------------------------------------------------- Monge-Ampere measures

fn tau(ctx: &Ctx) -> Result<Vec<Row>> {
    let n = ctx.n(1 << 16);
    let k = ctx.tol("tau.symmetry", 3.0);
    let mut rng = ctx.rng(5);
    let cube = Region::cube(&Vec16::zeros(), 1.0);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut all = true;
    for t in 0..20u64 {
        let f: [TestFunction; 3] = std::array::from_fn(|_| TestFunction::random(&mut rng, &cube, 0.6));
        let table = tau_table([&f[0], &f[1], &f[2]], n, 64, ctx.seed.wrapping_add(t));
        for p in 1..PERMUTATIONS.len() {
            let d = table.difference(0, p);
            let z = d.value.abs() / d.std_error.max(1e-300);
            worst = worst.max(if d.value == 0.0 { 0.0 } else { z });
            all &= d.within(0.0, k, 0.0);
        }
        rows.push(Row::estimate(format!("tau.value.{t}"), &table.value(0)));
    }
    rows.push(Row { pass: Some(all), tolerance: Some(k), n_samples: n, seed: ctx.seed, ..Row::info("tau.max-permutation-gap-sigma", worst) });
    Ok(rows)
}

fn blocki(ctx: &Ctx) -> Result<Vec<Row>> {
    let n = ctx.n(1 << 14);
    let levels = [2.0, 4.0, 8.0];
    let a = Vec16::from_fn(|i, _| if i == 0 { 0.4 } else { 0.0 });
    let u: Field = field(NormSq);
    let v: Field = field(Pullback::translate(u.clone(), -a));
    let psi = TestFunction::new(Region::cube(&(a * 0.5), 0.3), 3)?;
    let mut rows = Vec::new();

    let res = blocki_residual(&u, &v, &psi, &levels, n, ctx.seed)?;
    let top = res.last().unwrap();
    let frac = ctx.tol("blocki.crossing", 0.05);
    rows.push(Row::bound("blocki.crossing.relative-residual", top.residual.value.abs() / top.largest_term, frac).samples(n, ctx.seed));
    rows.push(Row::estimate("blocki.crossing.lhs", &top.lhs));
    for w in res.windows(2) {
        let ok = w[1].residual.value.abs() <= w[0].residual.value.abs() + 2.0 * (w[0].residual.std_error + w[1].residual.std_error);
        rows.push(Row { pass: Some(ok), tolerance: Some(2.0), ..Row::estimate(format!("blocki.ladder.j{}", w[1].level), &w[1].residual) });
    }
    rows.push(Row::flag("blocki.crossing.min-psh", top.min_is_psh));

    let k = ctx.tol("blocki.degenerate", 3.0);
    let shifted: Field = field(Sum { terms: vec![(1.0, u.clone()), (1.0, field(crate::calculus::field::Affine { a: Vec16::zeros(), c: -1.0 }))] });
    for (name, v) in [("equal", u.clone()), ("dominated", shifted)] {
        let r = blocki_residual(&u, &v, &psi, &[8.0], n, ctx.seed)?;
        let slack = 1e-12 * r[0].largest_term;
        rows.push(Row::sigma(format!("blocki.{name}.residual"), &r[0].residual, 0.0, k, slack));
        rows.push(Row::sigma(format!("blocki.{name}.residual-min"), &r[0].residual_min, 0.0, k, slack));
    }
    Ok(rows)
}

// ---------------------------------------------------------------- valuations

fn additivity_pair() -> Result<(ConvexBody, ConvexBody)> {
    let k1 = ConvexBody::axis_box(Vec16::repeat(-0.5), Vec16::repeat(0.5))?;
    let mut lo = Vec16::repeat(-0.5);
    let mut hi = Vec16::repeat(0.5);
    lo[0] = -0.2;
    hi[0] = 0.9;
    Ok((k1, ConvexBody::axis_box(lo, hi)?))
}

fn additivity_psi() -> Result<TestFunction> {
    TestFunction::new(Region::cube(&Vec16::repeat(0.01), 0.1), 3)
}

fn valuation(ctx: &Ctx) -> Result<Vec<Row>> {
    let n = ctx.n(1 << 14);
    let mut rows = Vec::new();
    let (k1, k2) = additivity_pair()?;
    let psi = additivity_psi()?;
    let smooth_tol = ctx.tol("valuation.smoothing-relative", 1e-6);
    let mut prev: Option<MeasureEstimate> = None;
    for beta in [32.0, 64.0, 128.0] {
        let rep = additivity_residual(&k1, &k2, &psi, beta, n, ctx.seed)?;
        let slack = smooth_tol * rep.reference.value.abs();
        rows.push(Row::sigma(format!("valuation.additivity.beta{beta}"), &rep.residual, 0.0, 2.0, slack));
        if let Some(d) = rep.direct_residual {
            // smoothing the union and intersection boxes directly carries an O(1/β) bias
            rows.push(Row::estimate(format!("valuation.additivity-direct.beta{beta}"), &d));
        }
        if let Some(p) = prev {
            let ok = rep.residual.value.abs() <= p.value.abs() + 2.0 * (p.std_error + rep.residual.std_error) + slack;
            rows.push(Row { pass: Some(ok), ..Row::estimate(format!("valuation.ladder.beta{beta}"), &rep.residual) });
        }
        prev = Some(rep.residual);
    }

    let t = Vec16::from_fn(|i, _| 0.03 * (i as f64 - 7.5));
    let lse = Smoothing::Lse { beta: 64.0 };
    let cases = [
        ("box", k1.clone(), lse),
        ("ball", ConvexBody::ball(Vec16::repeat(0.1), 0.8)?, Smoothing::Exact),
    ];
    for (name, body, sm) in cases {
        let base = psi_valuation(&body, &psi, &sm, n, ctx.seed)?;
        let moved = psi_valuation(&body.translated(&t), &psi, &sm, n, ctx.seed)?;
        let doubled = psi_valuation(&body.scaled(2.0), &psi, &sm, n, ctx.seed)?;
        rows.push(Row::flag(format!("valuation.psi.translation.{name}"), moved.value == base.value));
        rows.push(Row::flag(format!("valuation.psi.homogeneity.{name}"), doubled.value == 4.0 * base.value));
        let pv = pseudo_volume(&body, &sm, n, ctx.seed)?;
        let pv_moved = pseudo_volume(&body.translated(&t), &sm, n, ctx.seed)?;
        let pv_doubled = pseudo_volume(&body.scaled(2.0), &sm, n, ctx.seed)?;
        rows.push(Row::flag(format!("valuation.pseudo-volume.translation.{name}"), pv_moved.value == pv.value));
        rows.push(Row::flag(format!("valuation.pseudo-volume.homogeneity.{name}"), pv_doubled.value == 4.0 * pv.value));
    }
    Ok(rows)
}

/// The off-center ellipsoid used for the invariance checks.
pub fn test_ellipsoid() -> Result<ConvexBody> {
    let mut rng = stream_rng(11, 0);
    let a = Mat16::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let m = a * a.transpose() * 0.3 + Mat16::from_diagonal(&Vec16::from_fn(|i, _| 0.2 + 0.1 * i as f64));
    ConvexBody::ellipsoid(Vec16::from_fn(|i, _| 0.05 * i as f64), m)
}

#[derive(Clone, Debug, serde::Deserialize, Serialize)]
pub struct WitnessFixture {
    pub body: BodySpec,
    pub rotation: Vec<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
    pub gap_sigma: f64,
}

pub const SO16_WITNESS: &str = include_str!("../../fixtures/so16_witness.json");

pub fn so16_witness() -> Result<(ConvexBody, Mat16, WitnessFixture)> {
    let fx: WitnessFixture = serde_json::from_str(SO16_WITNESS)?;
    if fx.rotation.len() != 16 || fx.rotation.iter().any(|r| r.len() != 16) {
        return Err(Error::Parse("witness rotation must be 16x16".into()));
    }
    let g = Mat16::from_fn(|i, j| fx.rotation[i][j]);
    Ok((ConvexBody::try_from(&fx.body)?, g, fx))
}

/// `det` of the octonionic Hessian of `|x|` at a unit vector, by finite differences.
fn apex_constant_fd(x: &Vec16) -> Result<f64> {
    let f = FnField::new(|y: &Vec16| y.norm(), Smoothness::Smooth);
    Ok(octonionic_hessian(&f, x)?.hessian.det())
}

fn pseudo_volume_suite(ctx: &Ctx) -> Result<Vec<Row>> {
    let n = ctx.n(1 << 16);
    let k = ctx.tol("pseudo-volume.sigma", 3.0);
    let mut rows = Vec::new();
    let mut rng = ctx.rng(6);

    let u = Vec16::from(unit_sphere::<16, _>(&mut rng));
    let c0 = apex_constant_fd(&u)?;
    rows.push(Row::info("pseudo-volume.apex-constant", c0));
    let oracle = c0 * omega15() / 14.0;
    let est = pseudo_volume(&ConvexBody::unit_ball(), &Smoothing::Exact, n, ctx.seed)?;
    rows.push(Row::sigma("pseudo-volume.unit-ball", &est.estimate(), oracle, k, est.exclusion_bound));

    let body = test_ellipsoid()?;
    let sc = SpinContext::global();
    let mut worst = 0.0f64;
    let mut all = true;
    for s in 0..10u64 {
        let g = sc.sample_spin9(&mut stream_rng(100 + s, 0));
        let pair = pseudo_volume_pair(&body, &body.transformed(&g.g16)?, &Smoothing::Exact, n, ctx.seed)?;
        worst = worst.max(pair.gap_sigma());
        all &= pair.gap_sigma() <= k;
    }
    rows.push(Row { pass: Some(all), tolerance: Some(k), n_samples: n, seed: ctx.seed, ..Row::info("pseudo-volume.spin9-max-gap-sigma", worst) });

    let (wbody, g, fx) = so16_witness()?;
    let orth = (g.transpose() * g - Mat16::identity()).amax();
    rows.push(Row::flag("pseudo-volume.so16-witness.rotation", orth < 1e-12 && g.determinant() > 0.0));
    let pair = pseudo_volume_pair(&wbody, &wbody.transformed(&g)?, &Smoothing::Exact, fx.samples, fx.seed)?;
    rows.push(Row::at_least("pseudo-volume.so16-witness.gap-sigma", pair.gap_sigma(), ctx.tol("pseudo-volume.so16-gap", 5.0)).samples(fx.samples, fx.seed));
    Ok(rows)
}

/// Uniform point of `OP^1 = S^8` as the rank-one projector `(I + n) / 2`.
fn random_projector<R: Rng + ?Sized>(rng: &mut R) -> HMatrix2 {
    let s: [f64; 9] = unit_sphere(rng);
    let q = Octonion::new(std::array::from_fn(|i| s[i + 1]));
    HMatrix2::new(0.5 * (1.0 + s[0]), 0.5 * (1.0 - s[0]), q * 0.5)
}

/// `T_8` of `{x^T M^{-1} x <= 1}` from projectors sampled on `S^8`: the projection to
/// the line with projector `P` has volume `κ_8 sqrt(det(T^T M T))`, `T` a basis of `im P`.
pub fn t8_ellipsoid_oracle(m: &Mat16, scale: f64, n: usize, seed: u64) -> MeasureEstimate {
    batch_means(n, 16, seed, 1, |rng, out| {
        let p = random_projector(rng).embed_j().0;
        let eig = SymmetricEigen::new(p);
        let mut idx: Vec<usize> = (0..16).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let t = SMatrix::<f64, 16, 8>::from_fn(|r, c| eig.eigenvectors[(r, idx[c])]);
        out[0] = ball_volume(8) * scale.powi(8) * (t.transpose() * m * t).determinant().max(0.0).sqrt();
    })
    .estimate(0)
}

fn classical(ctx: &Ctx) -> Result<Vec<Row>> {
    let n = ctx.n(100_000);
    let k = ctx.tol("classical.sigma", 3.0);
    let mut rows = Vec::new();
    let ell = test_ellipsoid()?;
    let ball = ConvexBody::ball(Vec16::repeat(0.05), 0.7)?;

    let t0 = t_valuation(&ell, 0, n, ctx.seed)?;
    rows.push(Row::flag("classical.t0", t0.value == 1.0 && t0.std_error == 0.0));
    let t8 = t_valuation(&ball, 8, n, ctx.seed)?;
    let exact = ball_volume(8) * 0.7f64.powi(8);
    rows.push(Row::bound("classical.t8-ball.relative-error", rel((t8.value - exact).abs(), exact), 1e-12).samples(n, ctx.seed));
    rows.push(Row::bound("classical.t8-ball.std-error", t8.std_error, 0.0).samples(n, ctx.seed));

    let est = t_valuation(&ell, 8, n, ctx.seed)?;
    let crate::valuation::Shape::Ellipsoid(m) = &ell.shape else { unreachable!() };
    let oracle = t8_ellipsoid_oracle(m, ell.scale, n, ctx.seed.wrapping_add(1));
    let diff = MeasureEstimate {
        value: est.value - oracle.value,
        std_error: est.std_error.hypot(oracle.std_error),
        n_samples: n,
        seed: ctx.seed,
    };
    rows.push(Row::estimate("classical.t8-ellipsoid", &est.estimate()));
    rows.push(Row::estimate("classical.t8-ellipsoid.oracle", &oracle));
    rows.push(Row::sigma("classical.t8-ellipsoid.difference", &diff, 0.0, k, 0.0));

    let r: f64 = 0.9;
    for (j, exact) in [(16, ball_volume(16) * r.powi(16)), (8, ball_volume(8) * r.powi(8))] {
        let u = u_valuation(&ConvexBody::ball(Vec16::zeros(), r)?, j, 1000, ctx.seed)?;
        rows.push(Row::bound(format!("classical.u{j}-ball.relative-error"), rel((u.value - exact).abs(), exact), 1e-10));
    }
    let nmc = ctx.n(1 << 18);
    for j in [8, 12, 16] {
        let body = ConvexBody::ball(Vec16::from_fn(|i, _| 0.02 * i as f64), r)?;
        let quad = u_valuation(&body, j, 1000, ctx.seed)?;
        let mc = u_valuation_mc(&body, j, nmc, ctx.seed)?;
        rows.push(Row::sigma(format!("classical.u{j}-quadrature-vs-mc"), &mc.estimate(), quad.value, k, 0.0));
    }
    Ok(rows)
}

// ---------------------------------------------------------------- Radon transform

fn radon(ctx: &Ctx) -> Result<Vec<Row>> {
    let n = ctx.n(1 << 20);
    let mut rows = Vec::new();
    let radial = laplacian_power_at_zero_radial(4, 8);
    let multinomial = laplacian_power_at_zero_multinomial(4, 8);
    rows.push(Row::bound("radon.laplacian4-radial", (radial - 13440.0).abs(), 1e-9));
    rows.push(Row::bound("radon.laplacian4-multinomial", (multinomial - 13440.0).abs(), 1e-9));
    let c = crate::radon::inversion_constant();
    rows.push(Row::flag("radon.constant-nonzero", c != 0.0 && c.is_finite()));
    rows.push(Row::info("radon.constant", c));

    let f = GaussianFamily::standard();
    let image = f.image();
    let tol = ctx.tol("radon.inversion", 1e-3);
    let mut rng = ctx.rng(7);
    for p in 0..10 {
        let dir = Vec16::from(unit_sphere::<16, _>(&mut rng));
        let q = dir * rng.random_range(0.0..1.2);
        let est = inverse_operator_at(&image, &q, n, ctx.seed.wrapping_add(p), InverseMode::AnalyticGaussian)?;
        let target = c * f.eval(&q);
        rows.push(Row::bound(format!("radon.inversion.{p}"), rel((est.value - target).abs(), target.abs()), tol).samples(n, est.seed));
    }

    // R(f o g^-1)(gL) = Rf(L) for g in Spin(9)
    let k = ctx.tol("radon.equivariance", 3.0);
    let sc = SpinContext::global();
    let nl = ctx.n(1 << 16);
    let center = Vec16::from_fn(|i, _| 0.1 * ((i % 5) as f64 - 2.0));
    let f = GaussianFamily::single(1.0, center, 0.8);
    for t in 0..5u64 {
        let g = sc.sample_spin9(&mut rng);
        let line = random_line(&mut rng, 1.0);
        let moved = GaussianFamily::single(1.0, g.g16 * center, 0.8);
        let a = radon_transform(&f, &line, nl, ctx.seed.wrapping_add(2 * t));
        let b = radon_transform(&moved, &transform_line(&g, &line)?, nl, ctx.seed.wrapping_add(2 * t + 1));
        let diff = MeasureEstimate { value: a.value - b.value, std_error: a.std_error.hypot(b.std_error), n_samples: nl, seed: ctx.seed };
        rows.push(Row::sigma(format!("radon.equivariance.{t}"), &diff, 0.0, k, 0.0));
        let exact = f.image().eval(&line);
        rows.push(Row::sigma(format!("radon.closed-form.{t}"), &a, exact, k, 0.0));
    }
    Ok(rows)
}

/// Dimension line printed by `spin9-dim`.
pub fn spin9_dims() -> (usize, usize) {
    let sc = SpinContext::global();
    (sc.full.len(), sc.compact.len())
}
