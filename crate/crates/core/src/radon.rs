//! Radon transform over affine octonionic lines, `(Rf)(E) = ∫_E f`, and the
//! inversion operator `Dg(q) = ∫_{E ∋ q} (Δ_{E^⊥})^4 g(E + w)|_{w=0} dE`.
//!
//! Lines through a point are drawn with the Hopf image of the uniform measure on
//! `S^15` (a probability measure); lines carry Lebesgue measure through the
//! isometric parametrization `x -> base + ξ x`. Under these conventions
//! `D(Rf) = 13440 (2π)^4 f`.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::field::ScalarField;
use crate::calculus::line::AffineLine;
use crate::error::{Error, Result};
use crate::mc::{batch_means, gaussian_array, stream_rng, MeasureEstimate, DEFAULT_BATCHES};
use crate::octonion::Octonion;
use crate::spin::GroupElement;
use crate::valuation::sample_line;
use crate::Vec16;

/// A function on affine octonionic lines.
pub trait LineFunction: Send + Sync {
    fn eval(&self, line: &AffineLine) -> f64;

    /// Closed form of `(Δ_{E^⊥})^4 g(E + w)` at `w = 0`, if known.
    fn perp_laplacian4(&self, _line: &AffineLine) -> Option<f64> {
        None
    }
}

/// `∫_{x in O} f(base + ξ x) dx`, importance-sampled with a Gaussian of standard
/// deviation `proposal_scale` centered at the foot of the line.
pub fn radon_transform_with<F: ScalarField + ?Sized>(f: &F, line: &AffineLine, n: usize, seed: u64, proposal_scale: f64) -> MeasureEstimate {
    let t = line.tangents();
    // line coordinate of the foot: base + ξ x0 = foot
    let x0: [f64; 8] = std::array::from_fn(|c| -t[c].dot(&line.base));
    let s = proposal_scale;
    let norm = (2.0 * std::f64::consts::PI * s * s).powi(4);
    batch_means(n, DEFAULT_BATCHES, seed, 1, |rng, out| {
        let z: [f64; 8] = gaussian_array(rng);
        let x = Octonion::new(std::array::from_fn(|c| x0[c] + s * z[c]));
        let density = (-0.5 * z.iter().map(|v| v * v).sum::<f64>()).exp() / norm;
        out[0] = f.eval(&line.point(&x)) / density;
    })
    .estimate(0)
}

pub fn radon_transform<F: ScalarField + ?Sized>(f: &F, line: &AffineLine, n: usize, seed: u64) -> MeasureEstimate {
    radon_transform_with(f, line, n, seed, 1.5)
}

/// `Σ_k a_k exp(-|q - c_k|^2 / (2 s_k^2))`, closed under the Radon transform.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFamily {
    pub terms: Vec<GaussianTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: Vec16,
    pub scale: f64,
}

impl GaussianFamily {
    pub fn standard() -> Self {
        Self::single(1.0, Vec16::zeros(), 1.0)
    }

    pub fn single(amplitude: f64, center: Vec16, scale: f64) -> Self {
        GaussianFamily { terms: vec![GaussianTerm { amplitude, center, scale }] }
    }

    /// The Radon image as a line function.
    pub fn image(&self) -> GaussianImage {
        GaussianImage { family: self.clone() }
    }
}

impl ScalarField for GaussianFamily {
    fn eval(&self, x: &Vec16) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * (-(x - t.center).norm_squared() / (2.0 * t.scale * t.scale)).exp())
            .sum()
    }

    fn describe(&self) -> String {
        format!("gaussian-family({} terms)", self.terms.len())
    }
}

/// `(R f)(E) = Σ a_k (2π s_k^2)^4 exp(-d_k^2 / (2 s_k^2))`, `d_k` the distance from `c_k` to `E`.
#[derive(Clone, Debug)]
pub struct GaussianImage {
    pub family: GaussianFamily,
}

impl LineFunction for GaussianImage {
    fn eval(&self, line: &AffineLine) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        self.family
            .terms
            .iter()
            .map(|t| {
                let s2 = t.scale * t.scale;
                let d2 = line.perp_component(&(line.base - t.center)).norm_squared();
                t.amplitude * (two_pi * s2).powi(4) * (-d2 / (2.0 * s2)).exp()
            })
            .sum()
    }

    /// With `u = P_⊥(base - c) / s`: `s^{-8} (2π s^2)^4 P_4(|u|^2) e^{-|u|^2/2}`.
    fn perp_laplacian4(&self, line: &AffineLine) -> Option<f64> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let p4 = radial_laplacian_polynomial(4, 8);
        Some(
            self.family
                .terms
                .iter()
                .map(|t| {
                    let s2 = t.scale * t.scale;
                    let u2 = line.perp_component(&(line.base - t.center)).norm_squared() / s2;
                    t.amplitude * (two_pi * s2).powi(4) / s2.powi(4) * eval_poly(&p4, u2) * (-u2 / 2.0).exp()
                })
                .sum(),
        )
    }
}

/// Constant line function.
impl LineFunction for f64 {
    fn eval(&self, _line: &AffineLine) -> f64 {
        *self
    }

    fn perp_laplacian4(&self, _line: &AffineLine) -> Option<f64> {
        Some(0.0)
    }
}

fn eval_poly(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Coefficients (ascending in `t = |u|^2`) of `P_k` with
/// `Δ^k e^{-|u|^2/2} = P_k(|u|^2) e^{-|u|^2/2}` in `R^dim`, from
/// `P_{k+1} = 4t P_k'' + (2 dim - 4t) P_k' + (t - dim) P_k`.
pub fn radial_laplacian_polynomial(k: usize, dim: usize) -> Vec<f64> {
    let n = dim as f64;
    let mut p = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; p.len() + 1];
        for (m, &c) in p.iter().enumerate() {
            let m_f = m as f64;
            // t^m -> 4 m (m-1) t^{m-1} + 2 n m t^{m-1} - 4 m t^m + t^{m+1} - n t^m
            if m >= 1 {
                next[m - 1] += c * (4.0 * m_f * (m_f - 1.0) + 2.0 * n * m_f);
            }
            next[m] += c * (-4.0 * m_f - n);
            next[m + 1] += c;
        }
        p = next;
    }
    p
}

/// `Δ^k e^{-|u|^2/2}` at 0 in `R^dim` via the radial recurrence.
pub fn laplacian_power_at_zero_radial(k: usize, dim: usize) -> f64 {
    radial_laplacian_polynomial(k, dim)[0]
}

/// The same value from `Δ^k = Σ_{|α|=k} k!/α! ∂^{2α}` and
/// `∂^{2m} e^{-x^2/2}|_0 = (-1)^m (2m-1)!!`.
pub fn laplacian_power_at_zero_multinomial(k: usize, dim: usize) -> f64 {
    fn fact(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }
    fn double_fact_odd(m: usize) -> f64 {
        // (2m - 1)!!
        (1..=m).map(|i| (2 * i - 1) as f64).product()
    }
    fn rec(dim_left: usize, k_left: usize, acc: f64, total: &mut f64) {
        if dim_left == 0 {
            if k_left == 0 {
                *total += acc;
            }
            return;
        }
        for a in 0..=k_left {
            rec(dim_left - 1, k_left - a, acc * double_fact_odd(a) / fact(a), total);
        }
    }
    let mut total = 0.0;
    rec(dim, k, 1.0, &mut total);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * fact(k) * total
}

/// `c` in `D(Rf) = c f`: `Δ^4 e^{-|w|^2/2}|_0` in `R^8` times `(2π)^4`.
pub fn inversion_constant() -> f64 {
    laplacian_power_at_zero_radial(4, 8) * (2.0 * std::f64::consts::PI).powi(4)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum InverseMode {
    /// Closed-form `(Δ_{E^⊥})^4` of the line function.
    AnalyticGaussian,
    /// Finite differences with step `h` and a 1-D second-derivative stencil of
    /// accuracy `order` (2, 4, 6 or 8), iterated four times over the eight
    /// directions of `E^⊥`. Each iteration amplifies round-off by about `h^-2`.
    Fd { h: f64, order: usize },
}

/// Central second-derivative weights on offsets `-m..=m`.
fn second_derivative_stencil(order: usize) -> Result<Vec<f64>> {
    Ok(match order {
        2 => vec![1.0, -2.0, 1.0],
        4 => vec![-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        6 => vec![1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
        8 => vec![
            -1.0 / 560.0,
            8.0 / 315.0,
            -1.0 / 5.0,
            8.0 / 5.0,
            -205.0 / 72.0,
            8.0 / 5.0,
            -1.0 / 5.0,
            8.0 / 315.0,
            -1.0 / 560.0,
        ],
        _ => return Err(Error::Domain(format!("stencil order must be 2, 4, 6 or 8, got {order}"))),
    })
}

type Stencil = Vec<([i8; 8], f64)>;

/// Weights of `Δ^4` on the integer lattice of `R^8` (unit step), sorted by offset.
fn laplacian4_stencil(order: usize) -> Result<&'static Stencil> {
    static CACHE: [OnceLock<Stencil>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let d2 = second_derivative_stencil(order)?;
    let m = (d2.len() / 2) as i8;
    Ok(CACHE[order / 2 - 1].get_or_init(|| {
        let mut lap: HashMap<[i8; 8], f64> = HashMap::new();
        for axis in 0..8 {
            for (k, w) in d2.iter().enumerate() {
                let mut off = [0i8; 8];
                off[axis] = k as i8 - m;
                *lap.entry(off).or_default() += w;
            }
        }
        let mut acc: HashMap<[i8; 8], f64> = HashMap::from([([0i8; 8], 1.0)]);
        for _ in 0..4 {
            let mut next: HashMap<[i8; 8], f64> = HashMap::with_capacity(acc.len() * 8);
            for (a, wa) in &acc {
                for (b, wb) in &lap {
                    let off: [i8; 8] = std::array::from_fn(|i| a[i] + b[i]);
                    *next.entry(off).or_default() += wa * wb;
                }
            }
            acc = next;
        }
        let mut v: Stencil = acc.into_iter().filter(|(_, w)| *w != 0.0).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }))
}

/// `(Δ_{E^⊥})^4 g(E + w)` at `w = 0` by finite differences.
///
/// The sum is taken over differences `g(E + w_k) - g(E)`, so constants cancel
/// exactly. If the estimated round-off exceeds 1% of the result, the step is too
/// small for the stencil and a numerical error is returned.
pub fn fd_perp_laplacian4(g: &dyn LineFunction, line: &AffineLine, h: f64, order: usize) -> Result<f64> {
    let stencil = laplacian4_stencil(order)?;
    let perp = line.perp_frame();
    let g0 = g.eval(line);
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    let mut weight_mass = 0.0;
    for (off, w) in stencil {
        let shift = (0..8).fold(Vec16::zeros(), |acc, k| acc + perp[k] * (off[k] as f64 * h));
        let diff = g.eval(&line.translated(&shift)) - g0;
        sum += w * diff;
        magnitude += (w * diff).abs();
        weight_mass += w.abs();
    }
    let scale = h.powi(-8);
    let value = sum * scale;
    let roundoff = f64::EPSILON * (magnitude + g0.abs() * weight_mass) * scale;
    if roundoff > 1e-2 * value.abs() && roundoff > 0.0 {
        return Err(Error::Numerical(format!(
            "finite-difference (Δ_perp)^4 dominated by cancellation (h = {h}, round-off {roundoff:.3e} vs value {value:.3e})"
        )));
    }
    Ok(value)
}

/// `Dg(q)`, averaged over `n_lines` lines through `q`. Per-line values are
/// accumulated relative to a pilot line, so a line-independent integrand yields an
/// exactly zero error bar.
pub fn inverse_operator_at(g: &dyn LineFunction, q: &Vec16, n_lines: usize, seed: u64, mode: InverseMode) -> Result<MeasureEstimate> {
    let per_line = |line: &AffineLine| -> Result<f64> {
        match mode {
            InverseMode::AnalyticGaussian => g
                .perp_laplacian4(line)
                .ok_or_else(|| Error::Capability("analytic mode needs a closed-form Gaussian image".into())),
            InverseMode::Fd { h, order } => fd_perp_laplacian4(g, line, h, order),
        }
    };
    let through_q = |rng: &mut rand_chacha::ChaCha8Rng| sample_line(rng).translated(q);
    let pilot = per_line(&through_q(&mut stream_rng(seed, u64::MAX)))?;
    let failure = std::sync::Mutex::new(None);
    let est = batch_means(n_lines, DEFAULT_BATCHES, seed, 1, |rng, out| match per_line(&through_q(rng)) {
        Ok(v) => out[0] = v - pilot,
        Err(e) => {
            failure.lock().expect("poisoned").get_or_insert(e);
        }
    })
    .estimate(0);
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(MeasureEstimate { value: est.value + pilot, ..est })
}

/// The line `g·E` for `g` in `Spin(9)`: through `g·base` with direction `g·ξ`.
pub fn transform_line(g: &GroupElement, line: &AffineLine) -> Result<AffineLine> {
    AffineLine::new(g.apply(&line.direction), g.apply_vec(&line.base))
}

/// A random affine line whose foot lies within `radius` of the origin.
pub fn random_line<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> AffineLine {
    let line = sample_line(rng);
    line.translated(&crate::mc::uniform_ball16(rng, radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_constants() {
        assert_eq!(laplacian_power_at_zero_radial(4, 8), 13440.0);
        assert_eq!(laplacian_power_at_zero_multinomial(4, 8), 13440.0);
        for k in 0..6 {
            // (-1)^k 2^k (k + 3)! / 3! in R^8
            let fact: f64 = (1..=k + 3).map(|i| i as f64).product();
            let closed = (-2.0f64).powi(k as i32) * fact / 6.0;
            assert_eq!(laplacian_power_at_zero_radial(k, 8), closed);
            assert_eq!(laplacian_power_at_zero_multinomial(k, 8), closed);
        }
        assert!(inversion_constant() != 0.0);
    }

    #[test]
    fn stencil_exact_on_polynomials() {
        // Δ^4 |w|^8 = 8!! * 14 * 12 * 10 * 8 ... checked against the radial formula:
        // Δ r^{2m} = 2m (2m + 6) r^{2m-2} in R^8
        let st = laplacian4_stencil(8).unwrap();
        let val: f64 = st
            .iter()
            .map(|(o, w)| w * o.iter().map(|&k| (k as f64).powi(2)).sum::<f64>().powi(4))
            .sum();
        let exact = (1..=4).map(|m| (2 * m * (2 * m + 6)) as f64).product::<f64>();
        assert!((val - exact).abs() < 1e-6 * exact, "{val} vs {exact}");
        let total: f64 = st.iter().map(|(_, w)| w).sum();
        let mass: f64 = st.iter().map(|(_, w)| w.abs()).sum();
        assert!(total.abs() < 1e-13 * mass);
    }
}
