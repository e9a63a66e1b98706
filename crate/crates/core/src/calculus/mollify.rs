//! Convolution with the polynomial bump `c (1 - n^2 |z|^2)^8` supported in `|z| < 1/n`.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::field::{Field, ScalarField, Smoothness};
use super::hessian::{gradient, real_hessian};
use crate::mc::{ball_volume, haar_orthogonal16, stream_rng, unit_sphere16};
use crate::{Mat16, Vec16};

const EXPONENT: i32 = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mollifier {
    pub n: u32,
}

impl Mollifier {
    pub fn new(n: u32) -> Self {
        assert!(n >= 1, "mollifier index must be positive");
        Mollifier { n }
    }

    pub fn radius(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Normalizing constant `c`:
    /// `1 / c = |S^15| n^-16 B(8, 9) / 2 = 16 kappa_16 n^-16 * 7! 8! / (2 * 16!)`.
    pub fn constant(&self) -> f64 {
        let beta_8_9 = (1..=7).product::<u64>() as f64 * (1..=8).product::<u64>() as f64
            / (1..=16).product::<u64>() as f64;
        let mass = 16.0 * ball_volume(16) * beta_8_9 / 2.0 / (self.n as f64).powi(16);
        1.0 / mass
    }

    pub fn density(&self, z: &Vec16) -> f64 {
        let t = (self.n as f64).powi(2) * z.norm_squared();
        if t >= 1.0 {
            0.0
        } else {
            self.constant() * (1.0 - t).powi(EXPONENT)
        }
    }

    /// Draw from the bump: `n^2 |z|^2 ~ Beta(8, 9)`, direction uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec16 {
        let s2: f64 = Beta::new(8.0, 9.0).expect("valid beta").sample(rng);
        unit_sphere16(rng) * (s2.sqrt() / self.n as f64)
    }

    /// `d log(delta) / dz = -16 n^2 z / (1 - t)`.
    fn score(&self, z: &Vec16) -> Vec16 {
        let n2 = (self.n as f64).powi(2);
        let t = n2 * z.norm_squared();
        z * (-2.0 * EXPONENT as f64 * n2 / (1.0 - t))
    }

    /// `(d^2 delta) / delta = -16 n^2 I / (1 - t) + 224 n^4 z z^T / (1 - t)^2`.
    fn second_score(&self, z: &Vec16) -> Mat16 {
        let n2 = (self.n as f64).powi(2);
        let t = n2 * z.norm_squared();
        let k = 2.0 * EXPONENT as f64;
        Mat16::identity() * (-k * n2 / (1.0 - t)) + z * z.transpose() * ((k * k - 2.0 * k) * n2 * n2 / (1.0 - t).powi(2))
    }
}

/// `f * delta_n` evaluated on a fixed sample of the bump.
///
/// The sample consists of radii drawn from the bump, each paired with a Haar-random
/// orthonormal frame used in both orientations (32 offsets per radius), so that
/// second moments are exactly isotropic.
///
/// Second derivatives: for C^2 inner fields, the average of inner Hessians (so
/// positivity of the octonionic Hessian is preserved exactly); for continuous
/// fields with an a.e. gradient, derivatives are moved onto the kernel once; for
/// bare continuous fields, twice. The kernel routes are divided by the sample's
/// own value of the corresponding moment identity, which makes them exact on
/// quadratics.
pub struct Mollified {
    pub inner: Field,
    pub mollifier: Mollifier,
    pub offsets: Vec<Vec16>,
    first_moment: f64,
    second_moment: f64,
}

pub fn mollify(f: Field, m: Mollifier, quad_points: usize, seed: u64) -> Mollified {
    let mut rng = stream_rng(seed, 0);
    let radii = quad_points.div_ceil(32).max(1);
    let mut offsets = Vec::with_capacity(32 * radii);
    for _ in 0..radii {
        let s = m.sample(&mut rng).norm();
        let frame = haar_orthogonal16(&mut rng);
        for k in 0..16 {
            let z = frame.column(k) * s;
            offsets.push(z);
            offsets.push(-z);
        }
    }
    let len = offsets.len() as f64;
    // E[z score(z)^T] = -I and E[|z|^2 S(z) / 2] = I
    let first_moment = -offsets.iter().map(|z| z.dot(&m.score(z))).sum::<f64>() / (16.0 * len);
    let second_moment = offsets.iter().map(|z| 0.5 * z.norm_squared() * m.second_score(z).trace()).sum::<f64>() / (16.0 * len);
    Mollified { inner: f, mollifier: m, offsets, first_moment, second_moment }
}

impl Mollified {
    fn mean<T, F>(&self, zero: T, f: F) -> T
    where
        T: std::ops::AddAssign + std::ops::Div<f64, Output = T>,
        F: Fn(&Vec16) -> T,
    {
        let mut acc = zero;
        for z in &self.offsets {
            acc += f(z);
        }
        acc / self.offsets.len() as f64
    }
}

impl ScalarField for Mollified {
    fn eval(&self, x: &Vec16) -> f64 {
        self.mean(0.0, |z| self.inner.eval(&(x - z)))
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }

    fn fd_step(&self, x: &Vec16) -> f64 {
        (0.1 * self.mollifier.radius()).min(1e-3 * (1.0 + x.norm()))
    }

    fn hessian(&self, x: &Vec16) -> Option<Mat16> {
        let inner = self.inner.as_ref();
        let h = if inner.smoothness() != Smoothness::Continuous {
            self.mean(Mat16::zeros(), |z| real_hessian(inner, &(x - z)))
        } else if inner.gradient(x).is_some() {
            let m = self.mean(Mat16::zeros(), |z| gradient(inner, &(x - z)) * self.mollifier.score(z).transpose());
            (m + m.transpose()) * (0.5 / self.first_moment)
        } else {
            let f0 = inner.eval(x);
            self.mean(Mat16::zeros(), |z| self.mollifier.second_score(z) * (inner.eval(&(x - z)) - f0)) / self.second_moment
        };
        Some(h)
    }

    fn gradient(&self, x: &Vec16) -> Option<Vec16> {
        let inner = self.inner.as_ref();
        inner.gradient(x)?;
        Some(self.mean(Vec16::zeros(), |z| gradient(inner, &(x - z))))
    }

    fn describe(&self) -> String {
        format!("mollify({}, n={})", self.inner.describe(), self.mollifier.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::field::*;
    use crate::mc::batch_means;

    #[test]
    fn unit_mass() {
        // E_uniform-on-ball[density] * vol(ball) = 1
        let m = Mollifier::new(3);
        let r = m.radius();
        let est = batch_means(1 << 16, 16, 1, 1, |rng, out| {
            let z = crate::mc::uniform_ball16(rng, r);
            out[0] = m.density(&z) * ball_volume(16) * r.powi(16);
        });
        assert!(est.estimate(0).within(1.0, 4.0, 0.0));
    }

    #[test]
    fn reproduces_constants_and_linear() {
        let m = Mollifier::new(4);
        let c = mollify(field(Affine { a: Vec16::zeros(), c: 2.5 }), m, 64, 1);
        let x = Vec16::from_fn(|i, _| i as f64);
        assert!((c.eval(&x) - 2.5).abs() < 1e-14);
        let lin = Affine { a: Vec16::from_fn(|i, _| 1.0 / (1.0 + i as f64)), c: 0.3 };
        let ml = mollify(field(lin), m, 64, 2);
        assert!((ml.eval(&x) - lin.eval(&x)).abs() < 1e-12);
    }

    #[test]
    fn abs_at_origin() {
        let m = Mollifier::new(5);
        let v = mollify(field(Abs), m, 256, 3).eval(&Vec16::zeros());
        assert!(v > 0.0 && v <= 0.2);
    }

    #[test]
    fn kernel_hessians_agree() {
        // |x|^2 declared continuous exercises both kernel-derivative routes
        let m = Mollifier::new(2);
        let x = Vec16::from_fn(|i, _| 0.05 * i as f64);
        let with_grad = mollify(field(Pullback::translate(field(NormSq), Vec16::zeros())), m, 4096, 4);
        let exact = with_grad.hessian(&x).unwrap();
        assert!((exact - Mat16::identity() * 2.0).amax() < 1e-12);
        let cont = FnField::new(|v: &Vec16| v.norm_squared(), Smoothness::Continuous);
        let bare = mollify(field(cont), m, 1024, 5).hessian(&x).unwrap();
        assert!((bare - Mat16::identity() * 2.0).amax() < 1e-10);
        let lip = Max { u: field(NormSq), v: field(Affine { a: Vec16::zeros(), c: -100.0 }) };
        let once = mollify(field(lip), m, 4096, 6).hessian(&x).unwrap();
        assert!((once - Mat16::identity() * 2.0).amax() < 1e-10);
    }
}
