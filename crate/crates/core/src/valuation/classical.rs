//! `T_i(K) = ∫_{OP^1} V_i(pr_E K) dE` and `U_j(K) = ∫ V_{j-8}(K ∩ F) dF` over affine
//! octonionic lines `F = E + w`.
//!
//! `dE` is the invariant probability on `OP^1`, realized as the Hopf image of the
//! uniform measure on `S^15`; `dF` is `dE` times Lebesgue measure on `E^⊥`.

use nalgebra::SMatrix;
use rand::Rng;

use super::body::{ConvexBody, Shape};
use super::ValuationResult;
use crate::calculus::line::AffineLine;
use crate::error::{Error, Result};
use crate::hermitian2::OctoVec2;
use crate::mc::{ball_volume, batch_means, gauss_legendre, sphere_area, stream_rng, unit_sphere16, MeasureEstimate, DEFAULT_BATCHES};
use crate::{Mat16, Vec16};

/// Uniformly distributed octonionic line through 0.
pub fn sample_line<R: Rng + ?Sized>(rng: &mut R) -> AffineLine {
    AffineLine::through_origin(OctoVec2::from_vec16(&unit_sphere16(rng))).expect("unit direction")
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `V_i` of the `n`-ball of radius `r`: `C(n, i) κ_n / κ_{n-i} r^i`.
pub fn intrinsic_volume_ball(n: usize, i: usize, r: f64) -> f64 {
    if i > n {
        return 0.0;
    }
    binomial(n, i) * ball_volume(n) / ball_volume(n - i) * r.powi(i as i32)
}

/// Mean over sampled lines through 0. Values are accumulated relative to the
/// first line's value, so a line-independent integrand has exactly zero spread.
fn line_average<F>(n_lines: usize, seed: u64, per_line: F) -> MeasureEstimate
where
    F: Fn(&AffineLine, &mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let pilot = {
        let mut rng = stream_rng(seed, u64::MAX);
        let line = sample_line(&mut rng);
        per_line(&line, &mut rng)
    };
    let est = batch_means(n_lines, DEFAULT_BATCHES, seed, 1, |rng, out| {
        let line = sample_line(rng);
        out[0] = per_line(&line, rng) - pilot;
    })
    .estimate(0);
    MeasureEstimate { value: est.value + pilot, ..est }
}

/// `sqrt(det(T^T M T))` for the frame `T` of `E`: the volume ratio of the projected ellipsoid.
fn restricted_gram_sqrt_det(m: &Mat16, frame: &[Vec16; 8]) -> f64 {
    let t = SMatrix::<f64, 16, 8>::from_columns(frame);
    (t.transpose() * m * t).determinant().max(0.0).sqrt()
}

pub fn t_valuation(body: &ConvexBody, i: usize, n_lines: usize, seed: u64) -> Result<ValuationResult> {
    if i > 8 {
        return Err(Error::Domain(format!("T_i needs i in 0..=8, got {i}")));
    }
    if i == 0 {
        return Ok(ValuationResult {
            value: 1.0,
            std_error: 0.0,
            exclusion_bound: 0.0,
            n_samples: n_lines,
            seed,
            smoothing: "none".into(),
        });
    }
    let r = body.scale;
    let est = match (&body.shape, i) {
        (Shape::Ball, _) => line_average(n_lines, seed, |_, _| intrinsic_volume_ball(8, i, r)),
        (Shape::Ellipsoid(m), 8) => {
            let k = ball_volume(8) * r.powi(8);
            line_average(n_lines, seed, |line, _| k * restricted_gram_sqrt_det(m, &line.tangents()))
        }
        _ => {
            return Err(Error::Capability(format!(
                "T_{i} of a {} (projections need closed-form intrinsic volumes)",
                body.spec_name()
            )))
        }
    };
    Ok(ValuationResult::new(est, 0.0, "none".into()))
}

/// `∫_{R^8} V_i(B^8(sqrt(r^2 - |w|^2))) dw`, by Gauss-Legendre in `ρ = r sin θ`.
fn ball_section_integral(i: usize, r: f64) -> f64 {
    let (x, w) = gauss_legendre(24);
    let half = std::f64::consts::FRAC_PI_4;
    let radial: f64 = x
        .iter()
        .zip(&w)
        .map(|(x, w)| {
            let th = half * (x + 1.0);
            let (s, c) = th.sin_cos();
            w * half * intrinsic_volume_ball(8, i, r * c) * (r * s).powi(7) * r * c
        })
        .sum();
    sphere_area(8) * radial
}

fn ball_radius(body: &ConvexBody, j: usize) -> Result<f64> {
    if !(8..=16).contains(&j) {
        return Err(Error::Domain(format!("U_j needs j in 8..=16, got {j}")));
    }
    match body.shape {
        Shape::Ball => Ok(body.scale),
        _ => Err(Error::Capability(format!("U_{j} is implemented for balls only, not a {}", body.spec_name()))),
    }
}

/// `U_j` of a ball: for every sampled line, the offset integral over `E^⊥` is done
/// by radial quadrature around the projected center.
pub fn u_valuation(body: &ConvexBody, j: usize, n_lines: usize, seed: u64) -> Result<ValuationResult> {
    let r = ball_radius(body, j)?;
    let est = line_average(n_lines, seed, |_, _| ball_section_integral(j - 8, r));
    Ok(ValuationResult::new(est, 0.0, "quadrature".into()))
}

/// Plain Monte-Carlo `U_j` of a ball: line, then offset `w` uniform in an 8-disk of
/// `E^⊥` covering the projection of the body.
pub fn u_valuation_mc(body: &ConvexBody, j: usize, n: usize, seed: u64) -> Result<ValuationResult> {
    let r = ball_radius(body, j)?;
    let c = body.offset;
    let big = r + c.norm();
    let disk = ball_volume(8) * big.powi(8);
    let est = batch_means(n, DEFAULT_BATCHES, seed, 1, |rng, out| {
        let line = sample_line(rng);
        let perp = line.perp_frame();
        let u: [f64; 8] = crate::mc::unit_sphere(rng);
        let rad = big * rng.random::<f64>().powf(0.125);
        let w = (0..8).fold(Vec16::zeros(), |acc, k| acc + perp[k] * (u[k] * rad));
        let d = (line.perp_component(&c) - w).norm();
        if d <= r {
            out[0] = disk * intrinsic_volume_ball(8, j - 8, (r * r - d * d).sqrt());
        }
    })
    .estimate(0);
    Ok(ValuationResult::new(est, 0.0, "monte-carlo".into()))
}
