//! Octonionic hermitian 2x2 matrices and their real 16x16 counterparts.
//!
//! Coordinates on `O^2 = R^16`: indices `0..8` are the coefficients of `q1`,
//! indices `8..16` those of `q2`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::SymmetricEigen;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::octonion::Octonion;
use crate::{Mat16, Vec16};

/// `[[a, q], [conj(q), b]]` with `a, b` real.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct HMatrix2 {
    pub a: f64,
    pub b: f64,
    pub q: Octonion,
}

/// A column `(q1, q2)` in `O^2`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct OctoVec2 {
    pub q1: Octonion,
    pub q2: Octonion,
}

/// General (not necessarily hermitian) octonionic 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct OctoMatrix2 {
    pub m: [[Octonion; 2]; 2],
}

/// Real symmetric 16x16 matrix, i.e. a quadratic form on `O^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealSym16(pub Mat16);

/// Serialized form of an `HMatrix2` used in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HMatrix2Repr {
    pub a: f64,
    pub b: f64,
    pub q: [f64; 8],
}

impl From<&HMatrix2> for HMatrix2Repr {
    fn from(m: &HMatrix2) -> Self {
        HMatrix2Repr { a: m.a, b: m.b, q: m.q.0 }
    }
}

impl HMatrix2 {
    pub const IDENTITY: HMatrix2 = HMatrix2 { a: 1.0, b: 1.0, q: Octonion::ZERO };

    pub fn new(a: f64, b: f64, q: Octonion) -> Self {
        HMatrix2 { a, b, q }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        HMatrix2 { a, b, q: Octonion::ZERO }
    }

    /// Coordinates in the basis `{diag(1,0), diag(0,1), offdiag(e_0..e_7)}`.
    pub fn to_coords(&self) -> [f64; 10] {
        let mut c = [0.0; 10];
        c[0] = self.a;
        c[1] = self.b;
        c[2..].copy_from_slice(&self.q.0);
        c
    }

    pub fn from_coords(c: &[f64]) -> Self {
        assert_eq!(c.len(), 10);
        let mut q = [0.0; 8];
        q.copy_from_slice(&c[2..]);
        HMatrix2 { a: c[0], b: c[1], q: Octonion(q) }
    }

    /// The k-th element of the fixed H2(O) basis.
    pub fn basis(k: usize) -> Self {
        let mut c = [0.0; 10];
        c[k] = 1.0;
        HMatrix2::from_coords(&c)
    }

    pub fn conj_entries(&self) -> Self {
        HMatrix2 { q: self.q.conj(), ..*self }
    }

    /// `a b - |q|^2`.
    pub fn det(&self) -> f64 {
        self.a * self.b - self.q.norm_sqr()
    }

    /// Polarization of `det`: `(a11 b22 + a22 b11 - 2 Re(a12 b21)) / 2`.
    pub fn mixed_det(&self, other: &HMatrix2) -> f64 {
        // Re(q_A conj(q_B)) is the Euclidean dot product, which keeps mixed_det(A, A) == det(A) bitwise
        0.5 * (self.a * other.b + self.b * other.a - 2.0 * self.q.dot(&other.q))
    }

    pub fn trace(&self) -> f64 {
        self.a + self.b
    }

    /// Entry norm `|a| + |b| + 2|q|`.
    pub fn entry_norm(&self) -> f64 {
        self.a.abs() + self.b.abs() + 2.0 * self.q.norm()
    }

    /// `Re(xi^* A xi) = a|x|^2 + b|y|^2 + 2 Re(conj(x) q y)`.
    pub fn quad_form(&self, xi: &OctoVec2) -> f64 {
        self.a * xi.q1.norm_sqr()
            + self.b * xi.q2.norm_sqr()
            + 2.0 * (xi.q1.conj() * (self.q * xi.q2)).re()
    }

    /// Sylvester criterion. The non-strict variant admits `det >= -1e-10 (1 + |A|^2)`.
    pub fn is_positive(&self, strict: bool) -> bool {
        if strict {
            self.a > 0.0 && self.det() > 0.0
        } else {
            let n = self.entry_norm();
            self.a >= 0.0 && self.b >= 0.0 && self.det() >= -1e-10 * (1.0 + n * n)
        }
    }

    /// Smallest eigenvalue of `embed_j(self)`: `(a+b)/2 - sqrt(((a-b)/2)^2 + |q|^2)`
    /// (each eigenvalue has multiplicity 8).
    pub fn min_eigenvalue(&self) -> f64 {
        let m = 0.5 * (self.a + self.b);
        let d = 0.5 * (self.a - self.b);
        m - (d * d + self.q.norm_sqr()).sqrt()
    }

    /// Matrix of the quadratic form `xi -> Re(xi^* A xi)` in coefficient coordinates.
    pub fn embed_j(&self) -> RealSym16 {
        let mut m = Mat16::zeros();
        for i in 0..8 {
            m[(i, i)] = self.a;
            m[(8 + i, 8 + i)] = self.b;
        }
        // cross block: Re(conj(e_r) (q e_s)) = (q e_s)_r
        let lq = self.q.left_mul_matrix();
        for r in 0..8 {
            for s in 0..8 {
                m[(r, 8 + s)] = lq[r][s];
                m[(8 + s, r)] = lq[r][s];
            }
        }
        RealSym16(m)
    }

    pub fn as_matrix(&self) -> OctoMatrix2 {
        OctoMatrix2 { m: [[Octonion::real(self.a), self.q], [self.q.conj(), Octonion::real(self.b)]] }
    }

    pub fn max_abs_diff(&self, other: &HMatrix2) -> f64 {
        (self.a - other.a).abs().max((self.b - other.b).abs()).max((self.q - other.q).max_abs())
    }

    /// Uniform `[-1, 1]` diagonal and octonion coefficients.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        HMatrix2 { a: rng.random_range(-1.0..=1.0), b: rng.random_range(-1.0..=1.0), q: Octonion::random(rng) }
    }

    /// `sum_k xi_k xi_k^*` over three random columns; positive definite with probability one.
    pub fn random_positive<R: Rng + ?Sized>(rng: &mut R) -> Self {
        (0..3).fold(HMatrix2::default(), |acc, _| acc + OctoVec2::random(rng).outer())
    }
}

impl Add for HMatrix2 {
    type Output = HMatrix2;
    fn add(self, r: HMatrix2) -> HMatrix2 {
        HMatrix2 { a: self.a + r.a, b: self.b + r.b, q: self.q + r.q }
    }
}

impl Sub for HMatrix2 {
    type Output = HMatrix2;
    fn sub(self, r: HMatrix2) -> HMatrix2 {
        HMatrix2 { a: self.a - r.a, b: self.b - r.b, q: self.q - r.q }
    }
}

impl Neg for HMatrix2 {
    type Output = HMatrix2;
    fn neg(self) -> HMatrix2 {
        HMatrix2 { a: -self.a, b: -self.b, q: -self.q }
    }
}

impl Mul<f64> for HMatrix2 {
    type Output = HMatrix2;
    fn mul(self, s: f64) -> HMatrix2 {
        HMatrix2 { a: self.a * s, b: self.b * s, q: self.q * s }
    }
}

impl Mul<HMatrix2> for f64 {
    type Output = HMatrix2;
    fn mul(self, m: HMatrix2) -> HMatrix2 {
        m * self
    }
}

impl OctoVec2 {
    pub fn new(q1: Octonion, q2: Octonion) -> Self {
        OctoVec2 { q1, q2 }
    }

    pub fn from_vec16(v: &Vec16) -> Self {
        let mut a = [0.0; 8];
        let mut b = [0.0; 8];
        for i in 0..8 {
            a[i] = v[i];
            b[i] = v[8 + i];
        }
        OctoVec2 { q1: Octonion(a), q2: Octonion(b) }
    }

    pub fn to_vec16(&self) -> Vec16 {
        Vec16::from_fn(|i, _| if i < 8 { self.q1.0[i] } else { self.q2.0[i - 8] })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.q1.norm_sqr() + self.q2.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        OctoVec2 { q1: self.q1 / n, q2: self.q2 / n }
    }

    /// `xi * x = (q1 x, q2 x)`.
    pub fn right_mul(&self, x: &Octonion) -> Self {
        OctoVec2 { q1: self.q1 * *x, q2: self.q2 * *x }
    }

    /// `xi^* eta = conj(q1) eta1 + conj(q2) eta2`.
    pub fn inner_oct(&self, eta: &OctoVec2) -> Octonion {
        self.q1.conj() * eta.q1 + self.q2.conj() * eta.q2
    }

    /// `xi xi^*` as a hermitian matrix: `[[|x|^2, x conj(y)], [y conj(x), |y|^2]]`.
    pub fn outer(&self) -> HMatrix2 {
        HMatrix2 { a: self.q1.norm_sqr(), b: self.q2.norm_sqr(), q: self.q1 * self.q2.conj() }
    }

    /// `xi eta^* + eta xi^*`.
    pub fn sym_outer(&self, eta: &OctoVec2) -> HMatrix2 {
        HMatrix2 {
            a: 2.0 * self.q1.dot(&eta.q1),
            b: 2.0 * self.q2.dot(&eta.q2),
            q: self.q1 * eta.q2.conj() + eta.q1 * self.q2.conj(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        OctoVec2 { q1: Octonion::random(rng), q2: Octonion::random(rng) }
    }
}

impl Add for OctoVec2 {
    type Output = OctoVec2;
    fn add(self, r: OctoVec2) -> OctoVec2 {
        OctoVec2 { q1: self.q1 + r.q1, q2: self.q2 + r.q2 }
    }
}

impl Sub for OctoVec2 {
    type Output = OctoVec2;
    fn sub(self, r: OctoVec2) -> OctoVec2 {
        OctoVec2 { q1: self.q1 - r.q1, q2: self.q2 - r.q2 }
    }
}

impl Mul<f64> for OctoVec2 {
    type Output = OctoVec2;
    fn mul(self, s: f64) -> OctoVec2 {
        OctoVec2 { q1: self.q1 * s, q2: self.q2 * s }
    }
}

impl OctoMatrix2 {
    pub fn new(m11: Octonion, m12: Octonion, m21: Octonion, m22: Octonion) -> Self {
        OctoMatrix2 { m: [[m11, m12], [m21, m22]] }
    }

    /// Conjugate transpose.
    pub fn star(&self) -> Self {
        let m = &self.m;
        OctoMatrix2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn apply(&self, xi: &OctoVec2) -> OctoVec2 {
        let m = &self.m;
        OctoVec2 { q1: m[0][0] * xi.q1 + m[0][1] * xi.q2, q2: m[1][0] * xi.q1 + m[1][1] * xi.q2 }
    }

    pub fn matmul(&self, o: &OctoMatrix2) -> OctoMatrix2 {
        let (a, b) = (&self.m, &o.m);
        let mut m = [[Octonion::ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        OctoMatrix2 { m }
    }

    pub fn add(&self, o: &OctoMatrix2) -> OctoMatrix2 {
        let mut m = self.m;
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += o.m[i][j];
            }
        }
        OctoMatrix2 { m }
    }

    pub fn scale(&self, s: f64) -> OctoMatrix2 {
        OctoMatrix2 { m: self.m.map(|row| row.map(|e| e * s)) }
    }

    /// Reads a hermitian result, reporting the largest deviation from hermitian form.
    pub fn to_hermitian(&self) -> (HMatrix2, f64) {
        let m = &self.m;
        let q = (m[0][1] + m[1][0].conj()) * 0.5;
        let mut dev = (m[0][1] - m[1][0].conj()).max_abs();
        for i in 0..2 {
            let mut im = m[i][i];
            im.0[0] = 0.0;
            dev = dev.max(im.max_abs());
        }
        (HMatrix2 { a: m[0][0].re(), b: m[1][1].re(), q }, dev)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |acc, e| acc.max(e.max_abs()))
    }
}

impl RealSym16 {
    pub fn new(m: Mat16) -> Result<Self> {
        let asym = (m - m.transpose()).amax();
        if asym > 1e-12 * (1.0 + m.amax()) {
            return Err(Error::Domain(format!("matrix is not symmetric (asymmetry {asym:.3e})")));
        }
        Ok(RealSym16(m))
    }

    pub fn matrix(&self) -> &Mat16 {
        &self.0
    }

    pub fn form(&self, v: &Vec16) -> f64 {
        v.dot(&(self.0 * v))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }

    /// Random symmetric matrix with entries uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut m = Mat16::zeros();
        for i in 0..16 {
            for j in i..16 {
                let x = rng.random_range(-1.0..=1.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        RealSym16(m)
    }
}

/// Octonionic Hessian assembled from a real symmetric 16x16 second-derivative matrix:
/// entry `(i, j)` is `sum_{r,s} H[(i,r),(j,s)] e_r conj(e_s)`.
///
/// Returns the hermitian matrix together with the pre-symmetrization asymmetry
/// (imaginary parts of the diagonal and the mismatch between `h12` and `conj(h21)`).
pub fn octonionic_hessian_of(h: &Mat16) -> (HMatrix2, f64) {
    let mut entries = [[Octonion::ZERO; 2]; 2];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let mut acc = Octonion::ZERO;
            for r in 0..8 {
                for s in 0..8 {
                    let v = h[(8 * i + r, 8 * j + s)];
                    if v == 0.0 {
                        continue;
                    }
                    let (sign, k) = basis_times_conj(r, s);
                    acc.0[k] += sign * v;
                }
            }
            *e = acc;
        }
    }
    OctoMatrix2 { m: entries }.to_hermitian()
}

/// `e_r conj(e_s) = sign * e_k`.
fn basis_times_conj(r: usize, s: usize) -> (f64, usize) {
    let (sign, k) = crate::octonion::PRODUCT[r][s];
    let conj_sign = if s == 0 { 1.0 } else { -1.0 };
    (f64::from(sign) * conj_sign, k as usize)
}

/// `theta(B)`: one sixteenth of the (point-independent) octonionic Hessian of the
/// quadratic form `b(v) = v^T B v`, whose real Hessian is `2B`. Left inverse of `embed_j`.
pub fn project_theta(b: &RealSym16) -> Result<HMatrix2> {
    let m = b.matrix();
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::Domain(format!("project_theta needs a symmetric matrix (asymmetry {asym:.3e})")));
    }
    let (h, _) = octonionic_hessian_of(&(m * 2.0));
    Ok(h * (1.0 / 16.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    fn e(i: usize) -> Octonion {
        Octonion::basis(i)
    }

    #[test]
    fn quad_form_examples() {
        let xi = OctoVec2::new(e(1), Octonion::ONE);
        assert_eq!(HMatrix2::IDENTITY.quad_form(&xi), 2.0);
        let mut rng = stream_rng(1, 0);
        let q = Octonion::random(&mut rng);
        let v = OctoVec2::new(q, Octonion::random(&mut rng));
        assert!((HMatrix2::diag(2.0, 0.0).quad_form(&v) - 2.0 * q.norm_sqr()).abs() < 1e-14);

        // alpha|a|^2 + beta + 2 Re(q conj(a)) for xi = (a, 1)
        let a0 = Octonion::random(&mut rng);
        let m = HMatrix2::new(0.7, -0.3, Octonion::random(&mut rng));
        let expect = 0.7 * a0.norm_sqr() - 0.3 + 2.0 * (m.q * a0.conj()).re();
        assert!((m.quad_form(&OctoVec2::new(a0, Octonion::ONE)) - expect).abs() < 1e-13);
    }

    #[test]
    fn determinants() {
        assert_eq!(HMatrix2::new(2.0, 3.0, e(1)).det(), 5.0);
        assert_eq!(HMatrix2::IDENTITY.det(), 1.0);
        assert_eq!(HMatrix2::diag(1.0, 0.0).mixed_det(&HMatrix2::diag(0.0, 1.0)), 0.5);
        let mut rng = stream_rng(2, 0);
        for _ in 0..100 {
            let a = HMatrix2::random(&mut rng);
            let b = HMatrix2::random(&mut rng);
            assert_eq!(a.mixed_det(&a), a.det());
            assert!((a.q.dot(&b.q) - (a.q * b.q.conj()).re()).abs() < 1e-15);
            assert!((a.mixed_det(&b) - b.mixed_det(&a)).abs() < 1e-14);
            // polarization
            let pol = 0.5 * ((a + b).det() - a.det() - b.det());
            assert!((pol - a.mixed_det(&b)).abs() < 1e-13);
            let pa = HMatrix2::random_positive(&mut rng);
            let pb = HMatrix2::random_positive(&mut rng);
            assert!(pa.mixed_det(&pb) > 0.0);
        }
    }

    #[test]
    fn positivity_examples() {
        assert!(HMatrix2::IDENTITY.is_positive(true));
        let m = HMatrix2::new(1.0, 1.0, 2.0 * e(1));
        assert_eq!(m.det(), -3.0);
        assert!(!m.is_positive(true));
        assert!(!m.is_positive(false));
        // rank-one boundary matrix is non-negative but not positive
        let mut rng = stream_rng(3, 0);
        let r1 = OctoVec2::random(&mut rng).outer();
        assert!(r1.is_positive(false));
    }

    #[test]
    fn embed_j_examples() {
        let j = HMatrix2::diag(2.0, 0.0).embed_j();
        for i in 0..16 {
            for k in 0..16 {
                let expect = if i == k && i < 8 { 2.0 } else { 0.0 };
                assert_eq!(j.0[(i, k)], expect);
            }
        }
        assert_eq!(HMatrix2::IDENTITY.embed_j().0, Mat16::identity());
        let mut rng = stream_rng(4, 0);
        for _ in 0..50 {
            let a = HMatrix2::random(&mut rng);
            let xi = OctoVec2::random(&mut rng);
            let v = xi.to_vec16();
            assert!((a.quad_form(&xi) - a.embed_j().form(&v)).abs() < 1e-12);
            let eig = a.embed_j().min_eigenvalue();
            assert!((eig - a.min_eigenvalue()).abs() < 1e-10);
        }
    }

    #[test]
    fn theta_examples() {
        // x0 * y0
        let mut m = Mat16::zeros();
        m[(0, 8)] = 0.5;
        m[(8, 0)] = 0.5;
        let t = project_theta(&RealSym16(m)).unwrap();
        assert_eq!(t.a, 0.0);
        assert_eq!(t.b, 0.0);
        assert!((t.q - Octonion::real(1.0 / 16.0)).max_abs() < 1e-16);

        // x_p x_q, p != q
        let mut m = Mat16::zeros();
        m[(2, 5)] = 0.5;
        m[(5, 2)] = 0.5;
        let t = project_theta(&RealSym16(m)).unwrap();
        assert!(t.max_abs_diff(&HMatrix2::default()) < 1e-16);

        let mut rng = stream_rng(5, 0);
        for _ in 0..100 {
            let a = HMatrix2::random(&mut rng);
            let back = project_theta(&a.embed_j()).unwrap();
            assert!(back.max_abs_diff(&a) < 1e-12);
        }
        let mut bad = Mat16::zeros();
        bad[(0, 1)] = 1.0;
        assert!(matches!(project_theta(&RealSym16(bad)), Err(Error::Domain(_))));
        assert!(RealSym16::new(bad).is_err());
    }

    #[test]
    fn mixed_det_signature() {
        let mut g = nalgebra::SMatrix::<f64, 10, 10>::zeros();
        for k in 0..10 {
            for l in 0..10 {
                g[(k, l)] = HMatrix2::basis(k).mixed_det(&HMatrix2::basis(l));
            }
        }
        let eig = SymmetricEigen::new(g).eigenvalues;
        let pos = eig.iter().filter(|&&x| x > 1e-12).count();
        let neg = eig.iter().filter(|&&x| x < -1e-12).count();
        assert_eq!((pos, neg), (1, 9));
    }

    #[test]
    fn outer_products() {
        let mut rng = stream_rng(6, 0);
        let xi = OctoVec2::random(&mut rng);
        let eta = OctoVec2::random(&mut rng);
        let s = xi.sym_outer(&eta);
        let direct = xi.outer();
        assert!((xi.sym_outer(&xi) * 0.5).max_abs_diff(&direct) < 1e-14);
        // xi xi^* has zero determinant and trace |xi|^2
        assert!(direct.det().abs() < 1e-13);
        assert!((direct.trace() - xi.norm_sqr()).abs() < 1e-13);
        assert!(s.max_abs_diff(&eta.sym_outer(&xi)) < 1e-14);
    }
}
