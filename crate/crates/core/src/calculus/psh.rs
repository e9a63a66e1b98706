//! Plurisubharmonicity checks and sphere means.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{ScalarField, Smoothness};
use super::hessian::octonionic_hessian;
use crate::error::{Error, Result};
use crate::mc::{batch_means, stream_rng, unit_sphere16, MeasureEstimate, DEFAULT_BATCHES};
use crate::Vec16;

/// Axis-aligned box `[lo, hi]` in `R^16`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub lo: Vec16,
    pub hi: Vec16,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRepr {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec16, hi: Vec16) -> Result<Self> {
        if (0..16).any(|i| !(lo[i] < hi[i])) {
            return Err(Error::Domain("region needs lo < hi in every coordinate".into()));
        }
        Ok(Region { lo, hi })
    }

    pub fn cube(center: &Vec16, half_width: f64) -> Self {
        Region { lo: center.add_scalar(-half_width), hi: center.add_scalar(half_width) }
    }

    pub fn volume(&self) -> f64 {
        (self.hi - self.lo).product()
    }

    pub fn center(&self) -> Vec16 {
        (self.lo + self.hi) * 0.5
    }

    pub fn contains(&self, x: &Vec16) -> bool {
        (0..16).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn intersect(&self, o: &Region) -> Option<Region> {
        let lo = self.lo.zip_map(&o.lo, f64::max);
        let hi = self.hi.zip_map(&o.hi, f64::min);
        Region::new(lo, hi).ok()
    }

    pub fn translated(&self, t: &Vec16) -> Self {
        Region { lo: self.lo + t, hi: self.hi + t }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec16 {
        Vec16::from_fn(|i, _| self.lo[i] + (self.hi[i] - self.lo[i]) * rng.random::<f64>())
    }

    pub fn repr(&self) -> RegionRepr {
        RegionRepr { lo: self.lo.as_slice().to_vec(), hi: self.hi.as_slice().to_vec() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PshReport {
    pub pass: bool,
    pub min_eigenvalue: f64,
    pub witness: Vec<f64>,
    pub n_points: usize,
    pub seed: u64,
    pub tol: f64,
}

/// Samples `n_points` in `region` and checks that the octonionic Hessian is
/// non-negative definite (smallest eigenvalue of its real form `>= -tol`).
pub fn is_psh<F: ScalarField + ?Sized>(f: &F, region: &Region, n_points: usize, seed: u64, tol: f64) -> Result<PshReport> {
    if f.smoothness() == Smoothness::Continuous {
        return Err(Error::Precondition(format!(
            "psh check needs a C^2 field; mollify `{}` first",
            f.describe()
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let points: Vec<Vec16> = (0..n_points).map(|_| region.sample(&mut rng)).collect();
    let eigs: Vec<Result<f64>> = points
        .par_iter()
        .map(|p| octonionic_hessian(f, p).map(|r| r.hessian.min_eigenvalue()))
        .collect();
    let mut worst = (f64::INFINITY, Vec16::zeros());
    for (p, e) in points.iter().zip(eigs) {
        let e = e?;
        if e < worst.0 {
            worst = (e, *p);
        }
    }
    Ok(PshReport {
        pass: worst.0 >= -tol,
        min_eigenvalue: worst.0,
        witness: worst.1.as_slice().to_vec(),
        n_points,
        seed,
        tol,
    })
}

/// Monte-Carlo mean of `f` over the sphere `|x - center| = radius`.
pub fn sphere_mean<F: ScalarField + ?Sized>(f: &F, center: &Vec16, radius: f64, n_samples: usize, seed: u64) -> MeasureEstimate {
    batch_means(n_samples, DEFAULT_BATCHES, seed, 1, |rng, out| {
        out[0] = f.eval(&(center + unit_sphere16(rng) * radius));
    })
    .estimate(0)
}
