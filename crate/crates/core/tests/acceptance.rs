//! End-to-end acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Oracles are computed here from first principles (Hamilton quaternions, explicit
//! finite differences, closed-form Gaussian moments, uniform sampling of S^8) and
//! compared with what the library produces.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use nalgebra::{SMatrix, SymmetricEigen};
use octopsh::calculus::field::{field, Affine, Field, FnField, NormSq, Pullback, ScalarField, Smoothness, Sum};
use octopsh::calculus::hessian::octonionic_hessian;
use octopsh::calculus::psh::Region;
use octopsh::measure::{blocki_residual, tau_table, TestFunction, PERMUTATIONS};
use octopsh::radon::{
    inverse_operator_at, inversion_constant, laplacian_power_at_zero_multinomial, laplacian_power_at_zero_radial,
    radon_transform, random_line, transform_line, GaussianFamily, InverseMode,
};
use octopsh::spin::{GroupElement, Mat10, SpinContext};
use octopsh::valuation::{
    additivity_residual, pseudo_volume, pseudo_volume_pair, psi_valuation, t_valuation, u_valuation, u_valuation_mc,
    BodySpec, ConvexBody, Shape, Smoothing,
};
use octopsh::{HMatrix2, Mat16, Octonion, RealSym16, Vec16};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn sphere<const N: usize>(r: &mut ChaCha8Rng) -> [f64; N] {
    let v: [f64; N] = std::array::from_fn(|_| normal(r));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

fn oct(r: &mut ChaCha8Rng) -> Octonion {
    Octonion::new(std::array::from_fn(|_| r.random_range(-1.0..1.0)))
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// `|S^{n-1}|` and `κ_n` through the Gamma function at integers and half-integers.
fn gamma_half(twice: usize) -> f64 {
    if twice % 2 == 0 {
        (1..twice / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while 2.0 * x < twice as f64 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

fn kappa(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

// ------------------------------------------------------------ criterion 1

const TABLE: [[&str; 7]; 7] = [
    ["-1", "e4", "e7", "-e2", "e6", "-e5", "-e3"],
    ["-e4", "-1", "e5", "e1", "-e3", "e7", "-e6"],
    ["-e7", "-e5", "-1", "e6", "e2", "-e4", "e1"],
    ["e2", "-e1", "-e6", "-1", "e7", "e3", "-e5"],
    ["-e6", "e3", "-e2", "-e7", "-1", "e1", "e4"],
    ["e5", "-e7", "e4", "-e3", "-e1", "-1", "e2"],
    ["e3", "e6", "-e1", "e5", "-e4", "-e2", "-1"],
];

fn table_entry(s: &str) -> [f64; 8] {
    let (sign, rest) = s.strip_prefix('-').map_or((1.0, s), |r| (-1.0, r));
    let mut c = [0.0; 8];
    match rest.strip_prefix('e') {
        Some(k) => c[k.parse::<usize>().unwrap()] = sign,
        None => c[0] = sign * rest.parse::<f64>().unwrap(),
    }
    c
}

type Quat = [f64; 4];

fn qmul(a: Quat, b: Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn qconj(a: Quat) -> Quat {
    [a[0], -a[1], -a[2], -a[3]]
}

fn qadd(a: Quat, b: Quat, s: f64) -> Quat {
    std::array::from_fn(|i| a[i] + s * b[i])
}

/// `o = x + y l` with `i = e1, j = e2, k = e4, l = e3`; then `i l = e7, j l = e5, k l = -e6`.
fn split(o: &Octonion) -> (Quat, Quat) {
    let c = o.0;
    ([c[0], c[1], c[2], c[4]], [c[3], c[7], c[5], -c[6]])
}

fn join(x: Quat, y: Quat) -> Octonion {
    Octonion::new([x[0], x[1], x[2], y[0], x[3], y[2], -y[3], y[1]])
}

/// `(x + y l)(w + z l) = (x w - conj(z) y) + (z x + y conj(w)) l`.
fn cd_product(a: &Octonion, b: &Octonion) -> Octonion {
    let (x, y) = split(a);
    let (w, z) = split(b);
    join(qadd(qmul(x, w), qmul(qconj(z), y), -1.0), qadd(qmul(z, x), qmul(y, qconj(w)), 1.0))
}

fn criterion1() -> Outcome {
    let t0 = Instant::now();
    let mut mismatches = 0;
    for i in 1..8 {
        for j in 1..8 {
            if (Octonion::basis(i) * Octonion::basis(j)).0 != table_entry(TABLE[i - 1][j - 1]) {
                mismatches += 1;
            }
        }
    }
    let mut r = rng(101);
    let mut worst = 0.0f64;
    let mut cd = 0.0f64;
    for _ in 0..10_000 {
        let (a, b, c) = (oct(&mut r), oct(&mut r), oct(&mut r));
        let errs = [
            ((a * b) * c).re() - (a * (b * c)).re(),
            (a * (b * c) + b.conj() * (a.conj() * c) - (a * b + b.conj() * a.conj()) * c).max_abs(),
            ((c * a) * b + (c * b.conj()) * a.conj() - c * (a * b + b.conj() * a.conj())).max_abs(),
            ((a * b) * a - a * (b * a)).max_abs() + ((a * a.conj()) * b - a * (a.conj() * b)).max_abs(),
            ((a.conj() * b) * (c * a)).re() - a.norm_sqr() * (b * c).re(),
        ];
        worst = errs.iter().fold(worst, |w, e| w.max(e.abs()));
        cd = cd.max((a * b - cd_product(&a, &b)).max_abs());
    }
    let ok = mismatches == 0 && worst <= 1e-12 && cd <= 1e-12 && t0.elapsed().as_secs_f64() < 1.0;
    Ok((ok, format!("table mismatches {mismatches}, identity err {worst:.1e}, vs Cayley-Dickson {cd:.1e}, {:.2}s", t0.elapsed().as_secs_f64())))
}

// ------------------------------------------------------------ criteria 2, 3

fn quad_form(a: &HMatrix2, x: &Octonion, y: &Octonion) -> f64 {
    a.a * x.norm_sqr() + a.b * y.norm_sqr() + 2.0 * (x.conj() * (a.q * *y)).re()
}

fn v16(x: &Octonion, y: &Octonion) -> Vec16 {
    Vec16::from_fn(|i, _| if i < 8 { x.0[i] } else { y.0[i - 8] })
}

fn halves(v: &Vec16) -> (Octonion, Octonion) {
    (Octonion::new(std::array::from_fn(|i| v[i])), Octonion::new(std::array::from_fn(|i| v[i + 8])))
}

/// `(Σ_{r,s} H_{(i,r),(j,s)} e_r conj(e_s))_{ij}`, read as a hermitian matrix.
fn assemble_hessian(h: &Mat16) -> HMatrix2 {
    let entry = |i: usize, j: usize| {
        let mut acc = Octonion::ZERO;
        for r in 0..8 {
            for s in 0..8 {
                acc += Octonion::basis(r) * Octonion::basis(s).conj() * h[(8 * i + r, 8 * j + s)];
            }
        }
        acc
    };
    HMatrix2::new(entry(0, 0).re(), entry(1, 1).re(), entry(0, 1))
}

/// Real symmetric matrix of `v -> Re(ξ^* A ξ)`, by polarization.
fn form_matrix(a: &HMatrix2) -> Mat16 {
    let f = |v: &Vec16| {
        let (x, y) = halves(v);
        quad_form(a, &x, &y)
    };
    let e = |i: usize| Vec16::from_fn(|k, _| if k == i { 1.0 } else { 0.0 });
    Mat16::from_fn(|i, j| 0.25 * (f(&(e(i) + e(j))) - f(&(e(i) - e(j)))))
}

fn criterion2() -> Outcome {
    let mut r = rng(202);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = HMatrix2::random(&mut r);
        let b = form_matrix(&a);
        worst = worst.max((a.embed_j().0 - b).amax());
        let theta = assemble_hessian(&(b * 2.0)) * (1.0 / 16.0);
        worst = worst.max(theta.max_abs_diff(&a));
        worst = worst.max(octopsh::hermitian2::project_theta(&RealSym16(b))?.max_abs_diff(&a));
    }
    let b = RealSym16::random(&mut r);
    let theta = octopsh::hermitian2::project_theta(&b)?;
    let a = oct(&mut r);
    let mut zs = Vec::new();
    for (x, y) in [(a, Octonion::ONE), (Octonion::ONE, a)] {
        let vals: Vec<f64> = (0..10_000)
            .map(|_| {
                let u = Octonion::new(sphere::<8>(&mut r));
                b.form(&v16(&(x * u), &(y * u)))
            })
            .collect();
        let (m, se) = mean_se(&vals);
        zs.push((m - quad_form(&theta, &x, &y)).abs() / se);
    }
    let ok = worst <= 1e-12 && zs.iter().all(|z| *z <= 3.0);
    Ok((ok, format!("theta o j err {worst:.1e}; sphere average gaps {:.2}σ, {:.2}σ", zs[0], zs[1])))
}

fn criterion3() -> Outcome {
    let mut r = rng(303);
    let (mut disagree, mut decided) = (0, 0);
    for _ in 0..1000 {
        let shift = r.random_range(0.0..6.0);
        let a = HMatrix2::random_positive(&mut r) - HMatrix2::IDENTITY * shift;
        let lam = SymmetricEigen::new(form_matrix(&a)).eigenvalues.min();
        if lam.abs() < 1e-8 {
            continue;
        }
        decided += 1;
        disagree += (a.is_positive(true) != (lam > 0.0)) as usize;
    }
    let (mut viol, mut eq) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let a = HMatrix2::random_positive(&mut r);
        let b = HMatrix2::random(&mut r) * 3.0;
        let s = (a.entry_norm() * b.entry_norm()).powi(2);
        viol = viol.max((a.det() * b.det() - a.mixed_det(&b).powi(2)) / s);
        let c = a * r.random_range(-2.0..2.0);
        let s = (a.entry_norm() * c.entry_norm()).powi(2);
        eq = eq.max((a.mixed_det(&c).powi(2) - a.det() * c.det()).abs() / s);
    }
    let basis: Vec<HMatrix2> = (0..10)
        .map(|k| match k {
            0 => HMatrix2::diag(1.0, 0.0),
            1 => HMatrix2::diag(0.0, 1.0),
            _ => HMatrix2::new(0.0, 0.0, Octonion::basis(k - 2)),
        })
        .collect();
    let ev = SymmetricEigen::new(Mat10::from_fn(|i, j| basis[i].mixed_det(&basis[j]))).eigenvalues;
    let plus = ev.iter().filter(|&&l| l > 1e-12).count();
    let minus = ev.iter().filter(|&&l| l < -1e-12).count();
    let ok = disagree == 0 && viol <= 1e-12 && eq <= 1e-12 && (plus, minus) == (1, 9);
    Ok((ok, format!("Sylvester disagreements {disagree}/{decided}; Aleksandrov violation {viol:.1e}, equality err {eq:.1e}; signature ({plus}, {minus})")))
}

// ------------------------------------------------------------ criterion 4

type M2 = [[Octonion; 2]; 2];

fn m2_mul(a: &M2, b: &M2) -> M2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

fn m2_star(a: &M2) -> M2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].conj()))
}

fn m2_apply(a: &M2, x: &Octonion, y: &Octonion) -> (Octonion, Octonion) {
    (a[0][0] * *x + a[0][1] * *y, a[1][0] * *x + a[1][1] * *y)
}

/// `ξ η^* + η ξ^*` as a 2x2 octonion matrix.
fn sym_outer(x: &(Octonion, Octonion), y: &(Octonion, Octonion)) -> M2 {
    let c = |p: &Octonion, q: &Octonion| *p * q.conj();
    [
        [c(&x.0, &y.0) + c(&y.0, &x.0), c(&x.0, &y.1) + c(&y.0, &x.1)],
        [c(&x.1, &y.0) + c(&y.1, &x.0), c(&x.1, &y.1) + c(&y.1, &x.1)],
    ]
}

fn m2_dist(a: &M2, b: &M2) -> f64 {
    (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).fold(0.0, |m, (i, j)| m.max((a[i][j] - b[i][j]).max_abs()))
}

fn as_m2(h: &HMatrix2) -> M2 {
    [[Octonion::real(h.a), h.q], [h.q.conj(), Octonion::real(h.b)]]
}

fn apply16(g: &GroupElement, x: &Octonion, y: &Octonion) -> (Octonion, Octonion) {
    halves(&(g.g16 * v16(x, y)))
}

/// Action on `H_2(O)` dual to `act_h` under the pairing `Re tr(XY)`.
fn dual_action(g: &GroupElement, a: &HMatrix2) -> HMatrix2 {
    let w = Mat10::from_fn(|i, j| if i != j { 0.0 } else if i < 2 { 1.0 } else { 2.0 });
    let m = w.try_inverse().unwrap() * g.g_h.try_inverse().unwrap().transpose() * w;
    HMatrix2::from_coords((m * nalgebra::SVector::<f64, 10>::from(a.to_coords())).as_slice())
}

fn criterion4() -> Outcome {
    let t0 = Instant::now();
    let sc = SpinContext::global();
    let dims = (sc.full.len(), sc.compact.len());
    let mut r = rng(404);
    let mut orth = 0.0f64;
    let (mut det, mut inf, mut eq_spin, mut eq_dual, mut conf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut cone_fail = 0;
    for k in 0..100 {
        let h = sc.sample_spin9(&mut r);
        orth = orth.max((h.g16.transpose() * h.g16 - Mat16::identity()).amax());
        let g = sc.sample_sl2(&mut r, if k % 2 == 0 { 0.1 } else { 0.3 });
        let a = HMatrix2::random(&mut r);
        det = det.max((g.act_h(&a).det() - a.det()).abs() / (1.0 + a.entry_norm().powi(2)));
        if !g.act_h(&HMatrix2::random_positive(&mut r)).is_positive(true) {
            cone_fail += 1;
        }
        // traceless M: (Mξ)ξ* + ξ(Mξ)* = M(ξξ*) + (ξξ*)M*
        let p = oct(&mut r);
        let m: M2 = [[p, oct(&mut r)], [oct(&mut r), -p]];
        let (x, y) = (oct(&mut r), oct(&mut r));
        let mx = m2_apply(&m, &x, &y);
        let lhs = sym_outer(&mx, &(x, y));
        let xx = [[x * x.conj(), x * y.conj()], [y * x.conj(), y * y.conj()]];
        let a1 = m2_mul(&m, &xx);
        let a2 = m2_mul(&xx, &m2_star(&m));
        let rhs: M2 = std::array::from_fn(|i| std::array::from_fn(|j| a1[i][j] + a2[i][j]));
        inf = inf.max(m2_dist(&lhs, &rhs));
        // ξ ⊗ η -> ξη* + ηξ* intertwines the group actions
        let (xi, eta) = ((oct(&mut r), oct(&mut r)), (oct(&mut r), oct(&mut r)));
        let s = sym_outer(&xi, &eta);
        let s = HMatrix2::new(s[0][0].re(), s[1][1].re(), s[0][1]);
        let gh = sym_outer(&apply16(&h, &xi.0, &xi.1), &apply16(&h, &eta.0, &eta.1));
        eq_spin = eq_spin.max(m2_dist(&gh, &as_m2(&h.act_h(&s))) / (1.0 + s.entry_norm()));
        let gg = sym_outer(&apply16(&g, &xi.0, &xi.1), &apply16(&g, &eta.0, &eta.1));
        eq_dual = eq_dual.max(m2_dist(&gg, &as_m2(&dual_action(&g, &s))) / (1.0 + s.entry_norm()));
        // conformality on the line {(a, 1) u}
        let a0 = oct(&mut r);
        let base = apply16(&g, &a0, &Octonion::ONE);
        let nb = (base.0.norm_sqr() + base.1.norm_sqr()).sqrt();
        for _ in 0..4 {
            let u = Octonion::new(sphere::<8>(&mut r));
            let im = apply16(&g, &(a0 * u), &u);
            conf = conf.max(((im.0.norm_sqr() + im.1.norm_sqr()).sqrt() - nb).abs() / nb);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = dims == (45, 36) && orth <= 1e-10 && det <= 1e-8 && cone_fail == 0 && inf <= 1e-10 && eq_spin <= 1e-8 && eq_dual <= 1e-8 && conf <= 1e-8 && secs < 30.0;
    Ok((
        ok,
        format!(
            "dims {dims:?}; orthogonality {orth:.1e}; det {det:.1e}; cone failures {cone_fail}; infinitesimal {inf:.1e}; equivariance {eq_spin:.1e} (Spin(9)), {eq_dual:.1e} (SL2, dual action); conformality {conf:.1e}; {secs:.1}s"
        ),
    ))
}

// ------------------------------------------------------------ criterion 5

struct Quartic {
    b: [Mat16; 3],
    c: Vec16,
}

impl Quartic {
    fn new(r: &mut ChaCha8Rng) -> Self {
        Quartic { b: std::array::from_fn(|_| RealSym16::random(r).0 * 0.5), c: Vec16::from_fn(|_, _| r.random_range(-1.0..1.0)) }
    }

    fn q(&self, k: usize, x: &Vec16) -> f64 {
        x.dot(&(self.b[k] * x))
    }

    fn hess(&self, x: &Vec16) -> Mat16 {
        let (g1, g2) = (self.b[0] * x * 2.0, self.b[1] * x * 2.0);
        self.b[0] * (2.0 * self.q(1, x)) + self.b[1] * (2.0 * self.q(0, x)) + g1 * g2.transpose() + g2 * g1.transpose()
            + self.b[2] * 2.0
            + Mat16::from_diagonal(&x.zip_map(&self.c, |x, c| 6.0 * c * x))
    }
}

impl ScalarField for Quartic {
    fn eval(&self, x: &Vec16) -> f64 {
        self.q(0, x) * self.q(1, x) + self.q(2, x) + x.iter().zip(self.c.iter()).map(|(x, c)| c * x * x * x).sum::<f64>()
    }
}

/// Central-difference real Hessian.
fn fd_hessian(f: &dyn Fn(&Vec16) -> f64, x: &Vec16, h: f64) -> Mat16 {
    let e = |i: usize| Vec16::from_fn(|k, _| if k == i { h } else { 0.0 });
    let mut m = Mat16::zeros();
    for i in 0..16 {
        for j in i..16 {
            let v = (f(&(x + e(i) + e(j))) - f(&(x + e(i) - e(j))) - f(&(x - e(i) + e(j))) + f(&(x - e(i) - e(j)))) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn criterion5() -> Outcome {
    let mut r = rng(505);
    let sc = SpinContext::global();
    let mut lap = 0.0f64;
    for _ in 0..100 {
        let f = Quartic::new(&mut r);
        let z = Vec16::from_fn(|_, _| r.random_range(-0.7..0.7));
        let a = oct(&mut r);
        let n = (a.norm_sqr() + 1.0).sqrt();
        // Laplacian of x -> f(z + ξx) along the orthonormal tangents ξ e_c / |ξ|
        let h = 1e-3;
        let f0 = f.eval(&z);
        let lhs: f64 = (0..8)
            .map(|c| {
                let t = v16(&(a * Octonion::basis(c)), &Octonion::basis(c)) / n;
                (f.eval(&(z + t * h)) - 2.0 * f0 + f.eval(&(z - t * h))) / (h * h)
            })
            .sum();
        let rhs = quad_form(&octonionic_hessian(&f, &z)?.hessian, &a, &Octonion::ONE) / (n * n);
        lap = lap.max((lhs - rhs).abs() / (8.0 * f.hess(&z).amax()));
    }
    let mut form = 0.0f64;
    for _ in 0..100 {
        let a = HMatrix2::random(&mut r);
        let f = FnField::new(move |v: &Vec16| { let (x, y) = halves(v); quad_form(&a, &x, &y) }, Smoothness::Smooth);
        let x = Vec16::from_fn(|_, _| r.random_range(-1.0..1.0));
        form = form.max(octonionic_hessian(&f, &x)?.hessian.max_abs_diff(&(a * 16.0)) / (16.0 * a.entry_norm()));
    }
    let mut equi = 0.0f64;
    for _ in 0..20 {
        let g = sc.sample_sl2(&mut r, 0.3);
        let ginv = g.g16.try_inverse().unwrap();
        let f = Quartic::new(&mut r);
        let q = Vec16::from_fn(|_, _| r.random_range(-0.7..0.7));
        let lhs = assemble_hessian(&fd_hessian(&|x| f.eval(&(ginv * x)), &q, 1e-3));
        let rhs = g.act_h(&assemble_hessian(&f.hess(&(ginv * q))));
        equi = equi.max(lhs.max_abs_diff(&rhs) / rhs.entry_norm());
    }
    let ok = lap <= 1e-4 && form <= 1e-6 && equi <= 1e-5;
    Ok((ok, format!("line Laplacian rel err {lap:.1e}; Hess of j(A)-form vs 16A {form:.1e}; Hessian equivariance {equi:.1e}")))
}

// ------------------------------------------------------------ criteria 6, 7

fn criterion6() -> Outcome {
    let mut r = rng(606);
    let cube = Region::cube(&Vec16::zeros(), 1.0);
    let mut worst = 0.0f64;
    let mut ok = true;
    for t in 0..20 {
        let f: [TestFunction; 3] = std::array::from_fn(|_| TestFunction::random(&mut r, &cube, 0.6));
        let table = tau_table([&f[0], &f[1], &f[2]], 1 << 16, 64, 6000 + t);
        for p in 1..PERMUTATIONS.len() {
            let d = table.difference(0, p);
            let z = if d.value == 0.0 { 0.0 } else { d.value.abs() / d.std_error };
            worst = worst.max(z);
            ok &= z <= 3.0;
        }
    }
    Ok((ok, format!("largest permutation gap {worst:.2}σ over 20 triples x 5 permutations")))
}

fn criterion7() -> Outcome {
    let a = Vec16::from_fn(|i, _| if i == 0 { 0.4 } else { 0.0 });
    let u: Field = field(NormSq);
    let v: Field = field(Pullback::translate(u.clone(), -a));
    let psi = TestFunction::new(Region::cube(&(a * 0.5), 0.3), 3)?;
    let n = 1 << 14;
    let ladder = blocki_residual(&u, &v, &psi, &[2.0, 4.0, 8.0], n, 707)?;
    let top = ladder.last().unwrap();
    let frac = top.residual.value.abs() / top.largest_term;
    let mono = ladder.windows(2).all(|w| w[1].residual.value.abs() <= w[0].residual.value.abs() + 2.0 * (w[0].residual.std_error + w[1].residual.std_error));
    let shifted: Field = field(Sum { terms: vec![(1.0, u.clone()), (1.0, field(Affine { a: Vec16::zeros(), c: -1.0 }))] });
    let mut degenerate = 0.0f64;
    let mut deg_ok = true;
    for w in [u.clone(), shifted] {
        let lv = &blocki_residual(&u, &w, &psi, &[8.0], n, 708)?[0];
        for res in [&lv.residual, &lv.residual_min] {
            degenerate = degenerate.max(res.value.abs());
            deg_ok &= res.value.abs() <= 3.0 * res.std_error + 1e-12 * lv.largest_term;
        }
    }
    let ok = frac <= 0.05 && mono && deg_ok;
    Ok((ok, format!("crossing pair residual/largest term {frac:.1e} (largest {:.3e}); ladder non-increasing {mono}; degenerate |residual| {degenerate:.1e}", top.largest_term)))
}

// ------------------------------------------------------------ criteria 8, 9, 10

fn criterion8() -> Outcome {
    let k1 = ConvexBody::axis_box(Vec16::repeat(-0.5), Vec16::repeat(0.5))?;
    let (mut lo, mut hi) = (Vec16::repeat(-0.5), Vec16::repeat(0.5));
    lo[0] = -0.2;
    hi[0] = 0.9;
    let k2 = ConvexBody::axis_box(lo, hi)?;
    let psi = TestFunction::new(Region::cube(&Vec16::repeat(0.01), 0.1), 3)?;
    let n = 1 << 14;
    let reps = [32.0, 64.0, 128.0].map(|b| additivity_residual(&k1, &k2, &psi, b, n, 808));
    let reps = reps.into_iter().collect::<Result<Vec<_>, _>>()?;
    let top = &reps[2];
    let smoothing_tol = 1e-6 * top.reference.value.abs();
    let add_ok = top.residual.value.abs() <= 2.0 * top.residual.std_error + smoothing_tol;
    let mono = reps.windows(2).all(|w| w[1].residual.value.abs() <= w[0].residual.value.abs() + 2.0 * (w[0].residual.std_error + w[1].residual.std_error));
    let direct = top.direct_residual.map_or(f64::NAN, |d| d.value / top.reference.value);

    let t = Vec16::from_fn(|i, _| 0.05 * (i as f64 - 7.5));
    let mut exact = true;
    for (body, sm) in [(k1.clone(), Smoothing::Lse { beta: 64.0 }), (ConvexBody::ball(Vec16::repeat(0.1), 0.8)?, Smoothing::Exact)] {
        let v = |b: &ConvexBody| psi_valuation(b, &psi, &sm, n, 809).map(|r| r.value);
        let p = |b: &ConvexBody| pseudo_volume(b, &sm, n, 810).map(|r| r.value);
        exact &= v(&body.translated(&t))? == v(&body)? && v(&body.scaled(2.0))? == 4.0 * v(&body)?;
        exact &= p(&body.translated(&t))? == p(&body)? && p(&body.scaled(2.0))? == 4.0 * p(&body)?;
    }
    let ok = add_ok && mono && exact;
    Ok((
        ok,
        format!(
            "residual at β=128 {:.1e} ± {:.1e} (reference {:.3e}); ladder non-increasing {mono}; translation/homogeneity bitwise {exact}; direct-smoothing residual/reference {direct:.1e}",
            top.residual.value, top.residual.std_error, top.reference.value
        ),
    ))
}

fn test_ellipsoid() -> Result<ConvexBody, octopsh::Error> {
    let mut r = rng(909);
    let a = Mat16::from_fn(|_, _| r.random_range(-1.0..1.0));
    let m = a * a.transpose() * 0.3 + Mat16::from_diagonal(&Vec16::from_fn(|i, _| 0.2 + 0.1 * i as f64));
    ConvexBody::ellipsoid(Vec16::from_fn(|i, _| 0.04 * i as f64 - 0.3), m)
}

fn criterion9() -> Outcome {
    // det of the octonionic Hessian of |x| at e_0, by finite differences
    let e0 = Vec16::from_fn(|i, _| if i == 0 { 1.0 } else { 0.0 });
    let c0 = assemble_hessian(&fd_hessian(&|x: &Vec16| x.norm(), &e0, 1e-4)).det();
    let oracle = c0 * sphere_area(16) / 14.0;
    let ball = pseudo_volume(&ConvexBody::unit_ball(), &Smoothing::Exact, 1 << 16, 7)?;
    let z_ball = (ball.value - oracle).abs() / ball.std_error;
    let ball_ok = ball.within(oracle, 3.0);

    let body = test_ellipsoid()?;
    let sc = SpinContext::global();
    let mut r = rng(910);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let g = sc.sample_spin9(&mut r);
        let pair = pseudo_volume_pair(&body, &body.transformed(&g.g16)?, &Smoothing::Exact, 1 << 16, 911)?;
        worst = worst.max(pair.gap_sigma());
    }

    #[derive(serde::Deserialize)]
    struct Witness {
        body: BodySpec,
        rotation: Vec<Vec<f64>>,
        samples: usize,
        seed: u64,
    }
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/so16_witness.json"))?;
    let w: Witness = serde_json::from_str(&text)?;
    let g = Mat16::from_fn(|i, j| w.rotation[i][j]);
    let is_rotation = (g.transpose() * g - Mat16::identity()).amax() < 1e-12 && g.determinant() > 0.0;
    let wb = ConvexBody::try_from(&w.body)?;
    let pair = pseudo_volume_pair(&wb, &wb.transformed(&g)?, &Smoothing::Exact, w.samples, w.seed)?;
    let ok = ball_ok && worst <= 3.0 && is_rotation && pair.gap_sigma() > 5.0;
    Ok((
        ok,
        format!(
            "P_O(ball) {:.5} ± {:.5} vs c0 ω15/14 = {oracle:.5} (c0 = {c0:.4}, {z_ball:.2}σ); Spin(9) max gap {worst:.2}σ; SO(16) witness gap {:.1}σ",
            ball.value, ball.std_error, pair.gap_sigma()
        ),
    ))
}

/// `T_8` of an ellipsoid averaged over octonionic lines drawn as uniform points of `S^8`.
fn t8_oracle(m: &Mat16, n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            // X = (I + s)/2 = ξξ^* with ξ = (a, 1)/|(a, 1)|, a = q / (1 - s_0)
            let s: [f64; 9] = sphere(&mut r);
            let q = Octonion::new(std::array::from_fn(|i| s[i + 1]));
            let a = q * (1.0 / (1.0 - s[0]));
            let norm = (1.0 + a.norm_sqr()).sqrt();
            let t = SMatrix::<f64, 16, 8>::from_fn(|row, c| v16(&(a * Octonion::basis(c)), &Octonion::basis(c))[row] / norm);
            kappa(8) * (t.transpose() * m * t).determinant().sqrt()
        })
        .collect();
    mean_se(&vals)
}

fn criterion10() -> Outcome {
    let ell = test_ellipsoid()?;
    let Shape::Ellipsoid(m) = ell.shape.clone() else { unreachable!() };
    let t0 = t_valuation(&ell, 0, 1000, 1001)?;
    let r = 0.7;
    let ball = ConvexBody::ball(Vec16::repeat(0.05), r)?;
    let t8b = t_valuation(&ball, 8, 10_000, 1002)?;
    let t8b_ok = (t8b.value - kappa(8) * r.powi(8)).abs() <= 1e-12 * t8b.value && t8b.std_error == 0.0;
    let est = t_valuation(&ell, 8, 100_000, 1003)?;
    let (om, ose) = t8_oracle(&m, 100_000, 1004);
    let z_t8 = (est.value - om).abs() / est.std_error.hypot(ose);

    let rb = 0.9;
    let unit = ConvexBody::ball(Vec16::zeros(), rb)?;
    let u16 = u_valuation(&unit, 16, 100, 1005)?.value / (kappa(16) * rb.powi(16)) - 1.0;
    let u8 = u_valuation(&unit, 8, 100, 1005)?.value / (kappa(8) * rb.powi(8)) - 1.0;
    let off = ConvexBody::ball(Vec16::from_fn(|i, _| 0.02 * i as f64), rb)?;
    let mut zmax = 0.0f64;
    for j in [8, 12, 16] {
        let q = u_valuation(&off, j, 100, 1006)?;
        let mc = u_valuation_mc(&off, j, 1 << 18, 1007)?;
        zmax = zmax.max((mc.value - q.value).abs() / mc.std_error);
    }
    let ok = t0.value == 1.0 && t8b_ok && z_t8 <= 3.0 && u16.abs() <= 1e-10 && u8.abs() <= 1e-10 && zmax <= 3.0;
    Ok((
        ok,
        format!(
            "T0 = {}; T8(ball) zero variance {t8b_ok}; T8(ellipsoid) {:.3} ± {:.3} vs S^8 oracle {om:.3} ± {ose:.3} ({z_t8:.2}σ); U16, U8 rel err {u16:.1e}, {u8:.1e}; quadrature vs MC max {zmax:.2}σ",
            t0.value, est.value, est.std_error
        ),
    ))
}

// ------------------------------------------------------------ criterion 11

fn criterion11() -> Outcome {
    // Δ^k e^{-|w|^2/2} at 0 in R^n is (-1)^k n (n+2) ... (n+2k-2)
    let moment: f64 = (0..4).map(|i| 8.0 + 2.0 * i as f64).product();
    let radial = laplacian_power_at_zero_radial(4, 8);
    let multi = laplacian_power_at_zero_multinomial(4, 8);
    let chain_ok = (radial - moment).abs() < 1e-9 && (multi - moment).abs() < 1e-9 && moment == 13440.0;
    let c = moment * (2.0 * PI).powi(4);
    let c_ok = c != 0.0 && (inversion_constant() - c).abs() <= 1e-12 * c;

    let image = GaussianFamily::standard().image();
    let mut r = rng(1111);
    let mut worst = 0.0f64;
    for p in 0..10 {
        let q = Vec16::from(sphere::<16>(&mut r)) * r.random_range(0.0..1.2);
        let est = inverse_operator_at(&image, &q, 1 << 20, 1112 + p, InverseMode::AnalyticGaussian)?;
        let target = c * (-q.norm_squared() / 2.0).exp();
        worst = worst.max((est.value - target).abs() / target);
    }

    let sc = SpinContext::global();
    let center = Vec16::from_fn(|i, _| 0.1 * ((i % 5) as f64 - 2.0));
    let f = GaussianFamily::single(1.0, center, 0.8);
    let mut zmax = 0.0f64;
    for t in 0..5 {
        let g = sc.sample_spin9(&mut r);
        let line = random_line(&mut r, 1.0);
        let moved = GaussianFamily::single(1.0, g.g16 * center, 0.8);
        let a = radon_transform(&f, &line, 1 << 16, 1200 + 2 * t);
        let b = radon_transform(&moved, &transform_line(&g, &line)?, 1 << 16, 1201 + 2 * t);
        zmax = zmax.max((a.value - b.value).abs() / a.std_error.hypot(b.std_error));
        // closed form of the transform: (2π s^2)^4 exp(-d^2 / 2s^2)
        let d2 = line.perp_component(&(line.base - center)).norm_squared();
        let exact = (2.0 * PI * 0.64f64).powi(4) * (-d2 / (2.0 * 0.64)).exp();
        zmax = zmax.max((a.value - exact).abs() / a.std_error);
    }
    let ok = chain_ok && c_ok && worst <= 1e-3 && zmax <= 3.0;
    Ok((ok, format!("Δ^4 constant {radial} / {multi} (moment formula {moment}); c = {c:.6e}; inversion max rel err {worst:.1e}; equivariance/closed form max {zmax:.2}σ")))
}

// ------------------------------------------------------------ criterion 12

fn octopsh(args: &[&str], threads: &str) -> std::io::Result<std::process::Output> {
    Command::new(env!("CARGO_BIN_EXE_octopsh")).args(args).env("OCTOPSH_THREADS", threads).output()
}

fn criterion12() -> Outcome {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let ball = dir.join("unit_ball.json");
    std::fs::write(&ball, r#"{"type":"ball","center":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0],"radius":1}"#)?;
    let ball_s = ball.to_str().unwrap();
    let mut notes = Vec::new();
    let mut ok = true;

    let runs: [&[&str]; 3] = [
        &["algebra-check", "--seed", "1"],
        &["pseudo-volume", "--body", ball_s, "--samples", "65536", "--seed", "7"],
        &["report", "--suite", "tau", "--samples", "4096", "--format", "csv"],
    ];
    for args in runs {
        let a = octopsh(args, "1")?;
        let b = octopsh(args, "1")?;
        let c = octopsh(args, "4")?;
        let same = a.stdout == b.stdout && a.stdout == c.stdout && !a.stdout.is_empty();
        ok &= same && a.status.code() == Some(0);
        notes.push(format!("{} identical={same} exit={:?}", args[0], a.status.code()));
    }
    let pv: serde_json::Value = serde_json::from_slice(&octopsh(runs[1], "2")?.stdout)?;
    ok &= pv["rows"][0]["std_error"].is_number() && pv["seed"] == 7;

    let dims = octopsh(&["spin9-dim"], "2")?;
    let text = String::from_utf8_lossy(&dims.stdout);
    ok &= text.contains("dim sl2(O) = 45, dim compact = 36") && dims.status.code() == Some(0);

    // every suite runs as one command (reduced samples may fail statistical checks, exit 1)
    for s in ["algebra", "hermitian", "spin", "calculus", "tau", "blocki", "valuation", "pseudo-volume", "classical", "radon"] {
        let out = octopsh(&["report", "--suite", s, "--samples", "2048"], "4")?;
        let code = out.status.code();
        ok &= matches!(code, Some(0) | Some(1)) && out.stdout.starts_with(b"{");
        if code != Some(0) {
            notes.push(format!("suite {s} at 2048 samples exit {code:?}"));
        }
    }

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"type":"ball","center":[0,0],"radius":1}"#)?;
    let boxf = dir.join("box.json");
    std::fs::write(&boxf, format!(r#"{{"type":"box","lo":{:?},"hi":{:?}}}"#, [-1.0; 16], [1.0; 16]))?;
    let parse = octopsh(&["pseudo-volume", "--body", bad.to_str().unwrap()], "1")?.status.code();
    let cap = octopsh(&["t-valuation", "--body", boxf.to_str().unwrap(), "--index", "8"], "1")?.status.code();
    let fail = octopsh(&["algebra-check", "--tol", "octonion.identities=0"], "1")?.status.code();
    let field_err = octopsh(&["hessian", "--field", "normsq * abs"], "1")?.status.code();
    ok &= parse == Some(2) && cap == Some(4) && fail == Some(1) && field_err == Some(2);
    notes.push(format!("exit codes parse={parse:?} capability={cap:?} failed-check={fail:?} field={field_err:?}"));
    Ok((ok, notes.join("; ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("multiplication table and octonion identities", criterion1),
        ("theta o j and sphere averages", criterion2),
        ("Sylvester, Aleksandrov, signature", criterion3),
        ("sl2(O), Spin(9) and equivariance", criterion4),
        ("octonionic Hessian identities", criterion5),
        ("symmetry of tau", criterion6),
        ("max identity under chi-smoothing", criterion7),
        ("valuation law", criterion8),
        ("pseudo-volume oracle and invariance", criterion9),
        ("classical valuations", criterion10),
        ("Radon inversion", criterion11),
        ("CLI determinism", criterion12),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += (!pass) as usize;
        println!("criterion {:2} [{}] {name} ({:.1}s): {detail}", k + 1, if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
