//! `sl2(O)` as a bracket closure inside `gl16(R)`, its action on `H2(O)`, the
//! compact part `spin(9)`, group sampling and Hopf classes.
//!
//! Every Lie element carries two matrices: `rep16`, the action on `O^2 = R^16`,
//! and `rep_h`, the action `X -> -M^* X - X M` on hermitian matrices in the basis
//! `{diag(1,0), diag(0,1), offdiag(e_0..e_7)}`. Brackets are taken on both
//! simultaneously, so the pair stays a representation by construction.
//!
//! For a group element `g` the `rep_h` side is the action dual to `xi -> g xi`
//! on quadratic forms: `j(g_H A) = g^{-T} j(A) g^{-1}`. On `xi xi^*` the induced
//! action is `g_H` only when `g` is orthogonal, i.e. on `Spin(9)`.

use std::sync::OnceLock;

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::hermitian2::{HMatrix2, OctoMatrix2, OctoVec2, RealSym16};
use crate::mc::{gaussian, stream_rng};
use crate::octonion::Octonion;
use crate::{Mat16, Vec16};

pub type Mat10 = SMatrix<f64, 10, 10>;
pub type Vec10 = SVector<f64, 10>;

pub const SL2_DIM: usize = 45;
pub const SPIN9_DIM: usize = 36;

const RANK_TOL: f64 = 1e-9;
const MAX_ROUNDS: usize = 10;

/// Octonionic 2x2 matrix with `m11 + m22 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracelessOctoMatrix(OctoMatrix2);

impl TracelessOctoMatrix {
    pub fn new(m11: Octonion, m12: Octonion, m21: Octonion, m22: Octonion) -> Result<Self> {
        let tr = (m11 + m22).max_abs();
        if tr > 1e-14 * (1.0 + m11.max_abs()) {
            return Err(Error::Domain(format!("matrix has nonzero trace (|m11 + m22| = {tr:.3e})")));
        }
        Ok(TracelessOctoMatrix(OctoMatrix2::new(m11, m12, m21, -m11)))
    }

    pub fn e12(x: Octonion) -> Self {
        TracelessOctoMatrix(OctoMatrix2::new(Octonion::ZERO, x, Octonion::ZERO, Octonion::ZERO))
    }

    pub fn e21(x: Octonion) -> Self {
        TracelessOctoMatrix(OctoMatrix2::new(Octonion::ZERO, Octonion::ZERO, x, Octonion::ZERO))
    }

    pub fn diag(x: Octonion) -> Self {
        TracelessOctoMatrix(OctoMatrix2::new(x, Octonion::ZERO, Octonion::ZERO, -x))
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::diag(Octonion::random(rng))
            .plus(&Self::e12(Octonion::random(rng)))
            .plus(&Self::e21(Octonion::random(rng)))
    }

    fn plus(&self, o: &Self) -> Self {
        TracelessOctoMatrix(self.0.add(&o.0))
    }

    pub fn matrix(&self) -> &OctoMatrix2 {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LieElement {
    pub rep16: Mat16,
    pub rep_h: Mat10,
}

impl LieElement {
    pub fn zero() -> Self {
        LieElement { rep16: Mat16::zeros(), rep_h: Mat10::zeros() }
    }

    pub fn bracket(&self, o: &LieElement) -> LieElement {
        LieElement {
            rep16: self.rep16 * o.rep16 - o.rep16 * self.rep16,
            rep_h: self.rep_h * o.rep_h - o.rep_h * self.rep_h,
        }
    }

    pub fn scale(&self, s: f64) -> LieElement {
        LieElement { rep16: self.rep16 * s, rep_h: self.rep_h * s }
    }

    pub fn axpy(&mut self, s: f64, o: &LieElement) {
        self.rep16 += o.rep16 * s;
        self.rep_h += o.rep_h * s;
    }

    pub fn exp(&self) -> GroupElement {
        GroupElement { g16: self.rep16.exp(), g_h: self.rep_h.exp() }
    }
}

/// Lie element of `xi -> M xi`, with `rep_h` the matrix of `X -> -M^* X - X M`.
pub fn operator16(m: &TracelessOctoMatrix) -> LieElement {
    let mm = m.matrix();
    let mut rep16 = Mat16::zeros();
    for bi in 0..2 {
        for bj in 0..2 {
            let l = mm.m[bi][bj].left_mul_matrix();
            for r in 0..8 {
                for s in 0..8 {
                    rep16[(8 * bi + r, 8 * bj + s)] = l[r][s];
                }
            }
        }
    }
    let star = mm.star();
    let mut rep_h = Mat10::zeros();
    for k in 0..10 {
        let x = HMatrix2::basis(k).as_matrix();
        let img = star.matmul(&x).add(&x.matmul(mm)).scale(-1.0);
        let (h, _) = img.to_hermitian();
        rep_h.set_column(k, &Vec10::from(h.to_coords()));
    }
    LieElement { rep16, rep_h }
}

/// `{E12(e_i), E21(e_i), diag(e_i, -e_i)}`: 24 operators spanning the traceless matrices.
pub fn traceless_generators() -> Vec<LieElement> {
    (0..8)
        .flat_map(|i| {
            let e = Octonion::basis(i);
            [TracelessOctoMatrix::e12(e), TracelessOctoMatrix::e21(e), TracelessOctoMatrix::diag(e)]
        })
        .map(|m| operator16(&m))
        .collect()
}

fn frob(a: &Mat16, b: &Mat16) -> f64 {
    a.component_mul(b).sum()
}

/// Frobenius-orthonormal basis of the span of `rep16`, with `rep_h` carried along.
struct Span {
    basis: Vec<LieElement>,
}

impl Span {
    /// Projects `x` onto the complement of the span. Returns the residual element
    /// and the mismatch of `rep_h` when the `rep16` part is already in the span.
    fn reduce(&self, x: &LieElement) -> LieElement {
        let mut r = x.clone();
        // two passes of modified Gram-Schmidt for stability
        for _ in 0..2 {
            for b in &self.basis {
                let c = frob(&r.rep16, &b.rep16);
                r.axpy(-c, b);
            }
        }
        r
    }

    /// Adds `x` if independent; errors if `rep16` lies in the span but `rep_h` does not follow.
    fn try_push(&mut self, x: &LieElement, scale: f64) -> Result<bool> {
        let r = self.reduce(x);
        let n = r.rep16.norm();
        if n > RANK_TOL * scale.max(1.0) {
            self.basis.push(r.scale(1.0 / n));
            Ok(true)
        } else {
            let mismatch = r.rep_h.amax();
            if mismatch > 1e-7 * scale.max(1.0) {
                return Err(Error::Internal(format!("H2(O) action is not induced by the 16-dim action (mismatch {mismatch:.3e})")));
            }
            Ok(false)
        }
    }
}

/// Orthonormal basis of the Lie algebra generated by `generators`.
pub fn lie_closure(generators: &[LieElement]) -> Result<Vec<LieElement>> {
    let mut span = Span { basis: Vec::new() };
    for g in generators {
        let s = g.rep16.norm();
        span.try_push(g, s)?;
    }
    for _ in 0..MAX_ROUNDS {
        let n = span.basis.len();
        let mut added = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let br = span.basis[i].bracket(&span.basis[j]);
                added |= span.try_push(&br, 1.0)?;
            }
        }
        if !added {
            return Ok(span.basis);
        }
    }
    Err(Error::Numerical(format!("bracket closure did not stabilize after {MAX_ROUNDS} rounds")))
}

/// Intersection of the span of `full` with the antisymmetric matrices.
pub fn compact_basis(full: &[LieElement]) -> Result<Vec<LieElement>> {
    let n = full.len();
    // Gram matrix of symmetric parts; its kernel gives antisymmetric combinations
    let sym: Vec<Mat16> = full.iter().map(|x| x.rep16 + x.rep16.transpose()).collect();
    let gram = nalgebra::DMatrix::from_fn(n, n, |i, j| frob(&sym[i], &sym[j]));
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.amax().max(1.0);
    let mut out = Vec::new();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= 1e-10 * top {
            let mut x = LieElement::zero();
            for (i, b) in full.iter().enumerate() {
                x.axpy(eig.eigenvectors[(i, k)], b);
            }
            // enforce exact antisymmetry of the 16-dim part
            x.rep16 = (x.rep16 - x.rep16.transpose()) * 0.5;
            out.push(x);
        }
    }
    if n == SL2_DIM && out.len() != SPIN9_DIM {
        return Err(Error::Internal(format!("compact part has dimension {} (expected {SPIN9_DIM})", out.len())));
    }
    Ok(out)
}

/// Immutable `sl2(O)` / `spin(9)` bases, built once.
pub struct SpinContext {
    pub full: Vec<LieElement>,
    pub compact: Vec<LieElement>,
}

impl SpinContext {
    pub fn build() -> Result<Self> {
        let full = lie_closure(&traceless_generators())?;
        if full.len() != SL2_DIM {
            return Err(Error::Internal(format!("sl2(O) closure has dimension {} (expected {SL2_DIM})", full.len())));
        }
        let compact = compact_basis(&full)?;
        Ok(SpinContext { full, compact })
    }

    /// Process-wide context; panics only if the closure itself is inconsistent.
    pub fn global() -> &'static SpinContext {
        static CTX: OnceLock<SpinContext> = OnceLock::new();
        CTX.get_or_init(|| SpinContext::build().expect("sl2(O) closure"))
    }

    pub fn combine(basis: &[LieElement], coeffs: &[f64]) -> LieElement {
        assert_eq!(basis.len(), coeffs.len());
        let mut x = LieElement::zero();
        for (b, &c) in basis.iter().zip(coeffs) {
            x.axpy(c, b);
        }
        x
    }

    /// `exp` of a Gaussian combination of the compact basis.
    pub fn sample_spin9<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        let c: Vec<f64> = (0..self.compact.len()).map(|_| gaussian(rng)).collect();
        Self::combine(&self.compact, &c).exp()
    }

    /// `exp` of a combination of the full basis with coefficients of standard deviation `scale`.
    pub fn sample_sl2<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> GroupElement {
        let c: Vec<f64> = (0..self.full.len()).map(|_| scale * gaussian(rng)).collect();
        Self::combine(&self.full, &c).exp()
    }
}

/// Seeded `Spin(9)` element.
pub fn sample_spin9(seed: u64) -> GroupElement {
    SpinContext::global().sample_spin9(&mut stream_rng(seed, 0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub g16: Mat16,
    pub g_h: Mat10,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { g16: Mat16::identity(), g_h: Mat10::identity() }
    }

    pub fn apply(&self, xi: &OctoVec2) -> OctoVec2 {
        OctoVec2::from_vec16(&(self.g16 * xi.to_vec16()))
    }

    pub fn apply_vec(&self, v: &Vec16) -> Vec16 {
        self.g16 * v
    }

    pub fn act_h(&self, a: &HMatrix2) -> HMatrix2 {
        HMatrix2::from_coords((self.g_h * Vec10::from(a.to_coords())).as_slice())
    }

    /// `B -> g^{-T} B g^{-1}`, the form `v -> b(g^{-1} v)`.
    pub fn act_form(&self, b: &RealSym16) -> Result<RealSym16> {
        let inv = self.g16.try_inverse().ok_or_else(|| Error::Numerical("singular group element".into()))?;
        let m = inv.transpose() * b.matrix() * inv;
        Ok(RealSym16((m + m.transpose()) * 0.5))
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        let g16 = self.g16.try_inverse().ok_or_else(|| Error::Numerical("singular group element".into()))?;
        let g_h = self.g_h.try_inverse().ok_or_else(|| Error::Numerical("singular group element".into()))?;
        Ok(GroupElement { g16, g_h })
    }

    pub fn orthogonality_defect(&self) -> f64 {
        (self.g16.transpose() * self.g16 - Mat16::identity()).amax()
    }
}

/// `xi xi^*` of the normalized column: the point of `OP^1` under the Hopf map.
pub fn hopf_class(xi: &OctoVec2) -> Result<HMatrix2> {
    let n = xi.norm();
    if n == 0.0 {
        return Err(Error::Domain("zero vector has no Hopf class".into()));
    }
    Ok(xi.normalized().outer())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> &'static SpinContext {
        SpinContext::global()
    }

    #[test]
    fn dimensions() {
        assert_eq!(ctx().full.len(), 45);
        assert_eq!(ctx().compact.len(), 36);
        for x in &ctx().compact {
            assert!((x.rep16 + x.rep16.transpose()).amax() < 1e-12);
        }
        assert!(lie_closure(&[LieElement::zero()]).unwrap().is_empty());
    }

    #[test]
    fn closure_is_bracket_closed() {
        let span = Span { basis: ctx().full.clone() };
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let i = rng.random_range(0..45);
            let j = rng.random_range(0..45);
            let r = span.reduce(&ctx().full[i].bracket(&ctx().full[j]));
            assert!(r.rep16.norm() < 1e-8);
            assert!(r.rep_h.amax() < 1e-8);
        }
    }

    #[test]
    fn operator_examples() {
        let m = TracelessOctoMatrix::diag(Octonion::ONE);
        let x = operator16(&m);
        for i in 0..16 {
            assert_eq!(x.rep16[(i, i)], if i < 8 { 1.0 } else { -1.0 });
        }
        assert!(TracelessOctoMatrix::new(Octonion::ONE, Octonion::ZERO, Octonion::ZERO, Octonion::ONE).is_err());
        let z = operator16(&TracelessOctoMatrix::e12(Octonion::ZERO));
        assert_eq!(z, LieElement::zero());
    }

    #[test]
    fn eq11_and_contragredient() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..50 {
            let m = TracelessOctoMatrix::random(&mut rng);
            let xi = OctoVec2::random(&mut rng);
            let mxi = m.matrix().apply(&xi);
            let lhs = mxi.sym_outer(&xi);
            let x = xi.outer().as_matrix();
            let rhs = m.matrix().matmul(&x).add(&x.matmul(&m.matrix().star()));
            let (rhs, dev) = rhs.to_hermitian();
            assert!(dev < 1e-12);
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn spin9_elements() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..5 {
            let g = ctx().sample_spin9(&mut rng);
            assert!(g.orthogonality_defect() < 1e-10);
            let a = HMatrix2::random(&mut rng);
            assert!((g.act_h(&a).det() - a.det()).abs() < 1e-8);
            let xi = OctoVec2::random(&mut rng);
            let lhs = hopf_class(&g.apply(&xi)).unwrap();
            let rhs = g.act_h(&hopf_class(&xi).unwrap());
            assert!(lhs.max_abs_diff(&rhs) < 1e-8);
        }
        let id = SpinContext::combine(&ctx().compact, &[0.0; 36]).exp();
        assert!((id.g16 - Mat16::identity()).amax() < 1e-15);
    }

    #[test]
    fn hopf_examples() {
        let h = hopf_class(&OctoVec2::new(Octonion::ONE, Octonion::ZERO)).unwrap();
        assert_eq!(h, HMatrix2::diag(1.0, 0.0));
        assert!(hopf_class(&OctoVec2::default()).is_err());
        let mut rng = stream_rng(6, 0);
        let xi = OctoVec2::random(&mut rng);
        let chart = OctoVec2::new(xi.q1 * xi.q2.inverse().unwrap(), Octonion::ONE);
        assert!(hopf_class(&xi).unwrap().max_abs_diff(&hopf_class(&chart).unwrap()) < 1e-12);
    }
}
