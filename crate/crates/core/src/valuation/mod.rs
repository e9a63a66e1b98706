//! Valuations on convex bodies in `O^2 = R^16`: the ψ-weighted Monge-Ampere
//! valuation `K -> ∫ ψ det(∂²h_K)`, the octonionic pseudo-volume (ψ = indicator of
//! the unit ball), finite additivity through max/min of support functions, and the
//! classical `T_i` / `U_j` valuations built from intrinsic volumes.

pub mod body;
pub mod classical;

use serde::Serialize;

pub use body::{box_union_is_convex, smooth_support, BodySpec, ConvexBody, Shape, Smoothing, SupportField};
pub use classical::{intrinsic_volume_ball, sample_line, t_valuation, u_valuation, u_valuation_mc};

use crate::error::{Error, Result};
use crate::hermitian2::{octonionic_hessian_of, HMatrix2};
use crate::mc::{ball_volume, batch_means, haar_orthogonal16, sphere_area, stream_rng, uniform_ball16, MeasureEstimate, DEFAULT_BATCHES};
use crate::calculus::field::ScalarField;
use crate::measure::{hessian_at, ChiMax, TestFunction};
use crate::{Mat16, Vec16};

/// Radius of the ball around the apex of `h_K` that is cut out of the sample.
pub const EXCLUSION_RADIUS: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValuationResult {
    pub value: f64,
    pub std_error: f64,
    /// Analytic bound on the contribution of the excluded apex ball.
    pub exclusion_bound: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub smoothing: String,
}

impl ValuationResult {
    pub(crate) fn new(est: MeasureEstimate, exclusion_bound: f64, smoothing: String) -> Self {
        ValuationResult {
            value: est.value,
            std_error: est.std_error,
            exclusion_bound,
            n_samples: est.n_samples,
            seed: est.seed,
            smoothing,
        }
    }

    pub fn estimate(&self) -> MeasureEstimate {
        MeasureEstimate { value: self.value, std_error: self.std_error, n_samples: self.n_samples, seed: self.seed }
    }

    /// `|value - target| <= k σ + exclusion bound`.
    pub fn within(&self, target: f64, k_sigma: f64) -> bool {
        self.estimate().within(target, k_sigma, self.exclusion_bound)
    }
}

/// `|S^15|`.
pub fn omega15() -> f64 {
    sphere_area(16)
}

/// `∫_{|x| < ρ} c / |x|^2 dx = c ω_15 ρ^14 / 14`.
fn apex_bound(c: f64, rho: f64) -> f64 {
    c * omega15() * rho.powi(14) / 14.0
}

/// Apex constant when the evaluation uses the exact (singular) support function.
fn apex_constant(body: &ConvexBody, smoothing: &Smoothing) -> Option<f64> {
    match smoothing {
        Smoothing::Mollify { .. } => None,
        _ => body.apex_constant(),
    }
}

/// `∫ ψ det(∂²h̃_K) dq`, `h̃_K` the smoothed support function.
pub fn psi_valuation(body: &ConvexBody, psi: &TestFunction, smoothing: &Smoothing, n: usize, seed: u64) -> Result<ValuationResult> {
    let f = smooth_support(body, smoothing)?;
    let apex = apex_constant(body, smoothing);
    let rho = EXCLUSION_RADIUS;
    let near_apex = {
        let nearest = Vec16::zeros().zip_zip_map(&psi.support.lo, &psi.support.hi, |z, lo, hi| z.clamp(lo, hi));
        nearest.norm() < rho
    };
    let bound = match apex {
        Some(c) if near_apex => psi.amplitude.abs() * apex_bound(c, rho),
        _ => 0.0,
    };
    let cut = apex.is_some() && near_apex;
    let est = crate::measure::psi_integral(psi, n, seed, |x| {
        if cut && x.norm() < rho {
            0.0
        } else {
            hessian_at(f.as_ref(), x).det()
        }
    });
    Ok(ValuationResult::new(est, bound, smoothing.describe()))
}

/// Common-random-number estimates of the pseudo-volume of several bodies.
fn pseudo_volume_batches(bodies: &[&ConvexBody], smoothing: &Smoothing, n: usize, seed: u64) -> Result<(crate::mc::BatchMeans, Vec<f64>)> {
    let fields = bodies.iter().map(|b| smooth_support(b, smoothing)).collect::<Result<Vec<_>>>()?;
    let apex: Vec<Option<f64>> = bodies.iter().map(|b| apex_constant(b, smoothing)).collect();
    let rho = EXCLUSION_RADIUS;
    let kappa = ball_volume(16);
    let bm = batch_means(n, DEFAULT_BATCHES, seed, bodies.len(), |rng, out| {
        let x = uniform_ball16(rng, 1.0);
        for (k, f) in fields.iter().enumerate() {
            if apex[k].is_some() && x.norm() < rho {
                continue;
            }
            out[k] = kappa * hessian_at(f.as_ref(), &x).det();
        }
    });
    let bounds = apex.iter().map(|c| c.map_or(0.0, |c| apex_bound(c, rho))).collect();
    Ok((bm, bounds))
}

/// `P_O(K) = ∫_D det(∂²h̃_K) dq` over the unit ball `D`, sampled uniformly.
pub fn pseudo_volume(body: &ConvexBody, smoothing: &Smoothing, n: usize, seed: u64) -> Result<ValuationResult> {
    let (bm, bounds) = pseudo_volume_batches(&[body], smoothing, n, seed)?;
    Ok(ValuationResult::new(bm.estimate(0), bounds[0], smoothing.describe()))
}

#[derive(Clone, Debug, Serialize)]
pub struct PseudoVolumePair {
    pub first: ValuationResult,
    pub second: ValuationResult,
    /// `P_O(second) - P_O(first)` on common points.
    pub difference: MeasureEstimate,
    pub exclusion_bound: f64,
}

impl PseudoVolumePair {
    /// Gap in units of the difference's standard error.
    pub fn gap_sigma(&self) -> f64 {
        self.difference.value.abs() / (self.difference.std_error + self.exclusion_bound)
    }
}

pub fn pseudo_volume_pair(a: &ConvexBody, b: &ConvexBody, smoothing: &Smoothing, n: usize, seed: u64) -> Result<PseudoVolumePair> {
    let (bm, bounds) = pseudo_volume_batches(&[a, b], smoothing, n, seed)?;
    let desc = smoothing.describe();
    Ok(PseudoVolumePair {
        first: ValuationResult::new(bm.estimate(0), bounds[0], desc.clone()),
        second: ValuationResult::new(bm.estimate(1), bounds[1], desc),
        difference: bm.combine(|m| m[1] - m[0]),
        exclusion_bound: bounds[0] + bounds[1],
    })
}

/// A rotation in `SO(16)` drawn from `rotation_seed`.
pub fn rotation_from_seed(rotation_seed: u64) -> Mat16 {
    let mut g = haar_orthogonal16(&mut stream_rng(rotation_seed, 0));
    if g.determinant() < 0.0 {
        g.column_mut(0).neg_mut();
    }
    g
}

#[derive(Clone, Debug, Serialize)]
pub struct So16Witness {
    pub rotation_seed: u64,
    pub samples: usize,
    pub seed: u64,
    pub pair: PseudoVolumePair,
}

/// Randomized search for `g in SO(16)` with `|P_O(gK) - P_O(K)| > threshold σ`.
pub fn so16_witness_search(
    body: &ConvexBody,
    smoothing: &Smoothing,
    n: usize,
    seed: u64,
    rotation_seeds: std::ops::Range<u64>,
    threshold: f64,
) -> Result<Option<So16Witness>> {
    for rotation_seed in rotation_seeds {
        let gk = body.transformed(&rotation_from_seed(rotation_seed))?;
        let pair = pseudo_volume_pair(body, &gk, smoothing, n, seed)?;
        if pair.gap_sigma() > threshold {
            return Ok(Some(So16Witness { rotation_seed, samples: n, seed, pair }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityReport {
    pub beta: f64,
    /// `val(K1 ∪ K2) + val(K1 ∩ K2) - val(K1) - val(K2)` with the union and intersection
    /// represented by the χ-smoothed max and min of the two smoothed support functions.
    pub residual: MeasureEstimate,
    /// The same combination with the union and intersection boxes smoothed directly.
    pub direct_residual: Option<MeasureEstimate>,
    /// `val(K1)`, for scale.
    pub reference: MeasureEstimate,
}

/// Additivity of the ψ-valuation on a pair with convex union, at smoothing `β`
/// (log-sum-exp for the bodies, χ-level `β` for max/min). All terms share points.
pub fn additivity_residual(
    k1: &ConvexBody,
    k2: &ConvexBody,
    psi: &TestFunction,
    beta: f64,
    n: usize,
    seed: u64,
) -> Result<AdditivityReport> {
    let boxes = match (k1.as_box(), k2.as_box()) {
        (Some(a), Some(b)) => {
            if !box_union_is_convex(&a, &b) {
                return Err(Error::Precondition("union of the two boxes is not convex".into()));
            }
            Some((a, b))
        }
        _ => None,
    };
    let smoothing = Smoothing::Lse { beta };
    let u = smooth_support(k1, &smoothing)?;
    let v = smooth_support(k2, &smoothing)?;
    let w = ChiMax::new(u.clone(), v.clone(), beta);
    let direct = match boxes {
        Some((a, b)) => {
            let union = ConvexBody::axis_box(a.0.zip_map(&b.0, f64::min), a.1.zip_map(&b.1, f64::max))?;
            let inter = ConvexBody::axis_box(a.0.zip_map(&b.0, f64::max), a.1.zip_map(&b.1, f64::min))?;
            Some((smooth_support(&union, &smoothing)?, smooth_support(&inter, &smoothing)?))
        }
        None => None,
    };
    let dens = psi.density();
    let bm = batch_means(n, DEFAULT_BATCHES, seed, 3, |rng, out| {
        let (x, inv) = dens.sample(rng);
        let weight = psi.eval(&x) * inv;
        if weight == 0.0 {
            return;
        }
        let hu = hessian_at(u.as_ref(), &x);
        let hv = hessian_at(v.as_ref(), &x);
        let hw: HMatrix2 = octonionic_hessian_of(&w.parts(&x).1).0;
        let parts = hu.det() + hv.det();
        out[0] = weight * (hw.det() + (hu + hv - hw).det() - parts);
        if let Some((fu, fi)) = &direct {
            out[1] = weight * (hessian_at(fu.as_ref(), &x).det() + hessian_at(fi.as_ref(), &x).det() - parts);
        }
        out[2] = weight * hu.det();
    });
    Ok(AdditivityReport {
        beta,
        residual: bm.estimate(0),
        direct_residual: direct.as_ref().map(|_| bm.estimate(1)),
        reference: bm.estimate(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::psh::Region;

    fn psi() -> TestFunction {
        TestFunction::new(Region::cube(&Vec16::repeat(0.05), 0.3), 3).unwrap()
    }

    #[test]
    fn singleton_and_exactness() {
        let p = ConvexBody::point(Vec16::repeat(0.3));
        let r = psi_valuation(&p, &psi(), &Smoothing::Lse { beta: 32.0 }, 256, 1).unwrap();
        assert_eq!(r.value, 0.0);
        let k = ConvexBody::ball(Vec16::repeat(0.1), 1.5).unwrap();
        let s = Smoothing::Exact;
        let base = psi_valuation(&k, &psi(), &s, 1024, 2).unwrap();
        assert!(base.exclusion_bound > 0.0 && base.exclusion_bound < 1e-15);
        let t = Vec16::from_fn(|i, _| (i as f64).cos());
        assert_eq!(psi_valuation(&k.translated(&t), &psi(), &s, 1024, 2).unwrap(), base);
        let doubled = psi_valuation(&k.scaled(2.0), &psi(), &s, 1024, 2).unwrap();
        assert_eq!(doubled.value, 4.0 * base.value);
    }

    #[test]
    fn nested_and_equal_pairs() {
        let lo = Vec16::repeat(-0.5);
        let hi = Vec16::repeat(0.5);
        let k1 = ConvexBody::axis_box(lo, hi).unwrap();
        let k2 = ConvexBody::axis_box(lo * 1.5, hi).unwrap();
        let r = additivity_residual(&k1, &k1, &psi(), 32.0, 512, 3).unwrap();
        assert!(r.residual.value.abs() <= 3.0 * r.residual.std_error + 1e-12 * r.reference.value.abs());
        let r = additivity_residual(&k1, &k2, &psi(), 32.0, 512, 3).unwrap();
        assert_eq!(r.direct_residual.unwrap().value, 0.0);
        let mut far = lo;
        far[0] = 2.0;
        let mut far_hi = hi;
        far_hi[0] = 3.0;
        far[1] = 2.0;
        far_hi[1] = 3.0;
        let k3 = ConvexBody::axis_box(far, far_hi).unwrap();
        assert!(matches!(additivity_residual(&k1, &k3, &psi(), 32.0, 16, 3), Err(Error::Precondition(_))));
    }
}
