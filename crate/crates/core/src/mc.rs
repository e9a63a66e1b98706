//! Seeded, batched Monte-Carlo plumbing.
//!
//! Every estimator in the crate runs through [`batch_means`]: the sample budget is
//! split into a fixed number of batches, batch `b` draws from ChaCha stream `b` of
//! the run seed, batches execute on the rayon pool and are reduced in batch-index
//! order. Results are therefore bit-identical for any thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Vec16;

pub const DEFAULT_BATCHES: usize = 16;
pub const DEFAULT_SAMPLES: usize = 1 << 16;

/// ChaCha8 generator positioned on stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl MeasureEstimate {
    pub fn exact(value: f64, seed: u64) -> Self {
        MeasureEstimate { value, std_error: 0.0, n_samples: 0, seed }
    }

    /// `|value - target| <= k * std_error + slack`.
    pub fn within(&self, target: f64, k_sigma: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k_sigma * self.std_error + slack
    }

    pub fn scaled(&self, s: f64) -> Self {
        MeasureEstimate { value: self.value * s, std_error: self.std_error * s.abs(), ..*self }
    }
}

/// Per-batch means of several quantities computed on common random numbers.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    pub means: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub seed: u64,
}

impl BatchMeans {
    pub fn batches(&self) -> usize {
        self.means.len()
    }

    /// Estimate of quantity `k`.
    pub fn estimate(&self, k: usize) -> MeasureEstimate {
        self.combine(|m| m[k])
    }

    /// Estimate of `f(quantities)` evaluated batch by batch. For linear `f` this is
    /// the common-random-numbers estimate of the combination, with its own error bar.
    pub fn combine(&self, f: impl Fn(&[f64]) -> f64) -> MeasureEstimate {
        let vals: Vec<f64> = self.means.iter().map(|m| f(m)).collect();
        let (value, std_error) = mean_and_error(&vals);
        MeasureEstimate { value, std_error, n_samples: self.n_samples, seed: self.seed }
    }
}

/// Mean and standard error of the mean, summed in slice order.
pub fn mean_and_error(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs `n` samples split over `batches` streams; `sample` writes `width` values per draw.
pub fn batch_means<F>(n: usize, batches: usize, seed: u64, width: usize, sample: F) -> BatchMeans
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let batches = batches.clamp(1, n.max(1));
    let base = n / batches;
    let extra = n % batches;
    let means: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = base + usize::from(b < extra);
            let mut rng = stream_rng(seed, b as u64);
            let mut acc = vec![0.0; width];
            let mut buf = vec![0.0; width];
            for _ in 0..count {
                buf.iter_mut().for_each(|x| *x = 0.0);
                sample(&mut rng, &mut buf);
                for (a, v) in acc.iter_mut().zip(&buf) {
                    *a += v;
                }
            }
            if count > 0 {
                acc.iter_mut().for_each(|a| *a /= count as f64);
            }
            acc
        })
        .collect();
    BatchMeans { means, n_samples: n, seed }
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_array<const N: usize, R: Rng + ?Sized>(rng: &mut R) -> [f64; N] {
    std::array::from_fn(|_| gaussian(rng))
}

/// Uniform point on the unit sphere of R^N (normalized Gaussian).
pub fn unit_sphere<const N: usize, R: Rng + ?Sized>(rng: &mut R) -> [f64; N] {
    loop {
        let g: [f64; N] = gaussian_array(rng);
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return g.map(|x| x / n);
        }
    }
}

pub fn unit_sphere16<R: Rng + ?Sized>(rng: &mut R) -> Vec16 {
    Vec16::from(unit_sphere::<16, R>(rng))
}

/// Uniform point in the ball of radius `radius` in R^16.
pub fn uniform_ball16<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Vec16 {
    let u: f64 = rng.random();
    unit_sphere16(rng) * (radius * u.powf(1.0 / 16.0))
}

/// Haar-distributed orthogonal 16x16 matrix (QR of a Gaussian matrix with sign fix).
pub fn haar_orthogonal16<R: Rng + ?Sized>(rng: &mut R) -> crate::Mat16 {
    let g = crate::Mat16::from_fn(|_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..16 {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// Surface measure of the unit sphere `S^{n-1}` in R^n.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Volume of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    sphere_area(n) / n as f64
}

/// `Gamma(n / 2)` for positive integer `n`.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n > 0);
    if n % 2 == 0 {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x)
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let k = i.max(j) as f64;
        if i.abs_diff(j) == 1 { k / (4.0 * k * k - 1.0).sqrt() } else { 0.0 }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_constants() {
        assert!((ball_volume(2) - PI).abs() < 1e-14);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((ball_volume(8) - PI.powi(4) / 24.0).abs() < 1e-14);
        assert!((ball_volume(16) - PI.powi(8) / 40320.0).abs() < 1e-16);
        assert!((sphere_area(16) - 2.0 * PI.powi(8) / 5040.0).abs() < 1e-12);
    }

    #[test]
    fn batches_are_thread_independent() {
        let run = || {
            batch_means(1000, 16, 42, 2, |rng, out| {
                let x: f64 = rng.random();
                out[0] = x;
                out[1] = x * x;
            })
        };
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a.means, b.means);
        let e = a.estimate(0);
        assert!(e.within(0.5, 4.0, 0.0));
        let d = a.combine(|m| m[1] - m[0] * m[0]);
        assert!((d.value - 1.0 / 12.0).abs() < 0.02);
    }

    #[test]
    fn ball_sampling_radius_law() {
        let mut rng = stream_rng(1, 0);
        let n = 20000;
        let mean_r: f64 = (0..n).map(|_| uniform_ball16(&mut rng, 2.0).norm()).sum::<f64>() / n as f64;
        // E|x| = 16/17 * R
        assert!((mean_r - 2.0 * 16.0 / 17.0).abs() < 0.01);
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(12);
        for k in 0..24 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "degree {k}");
        }
    }
}
