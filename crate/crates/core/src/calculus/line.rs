use crate::error::{Error, Result};
use crate::hermitian2::OctoVec2;
use crate::octonion::Octonion;
use crate::spin::hopf_class;
use crate::{HMatrix2, Vec16};

/// `{base + xi x : x in O}` with `|xi| = 1`.
///
/// Because `O` is not associative, `{xi x}` is an octonionic line only when `xi` is
/// written in a chart, `(a, 1)` or `(1, b)` up to a real factor; constructors bring
/// the direction into that form (same Hopf class).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineLine {
    pub direction: OctoVec2,
    pub base: Vec16,
}

impl AffineLine {
    pub fn new(direction: OctoVec2, base: Vec16) -> Result<Self> {
        if direction.norm() == 0.0 {
            return Err(Error::Domain("line direction must be nonzero".into()));
        }
        Ok(AffineLine { direction: chart_direction(&direction), base })
    }

    pub fn through_origin(direction: OctoVec2) -> Result<Self> {
        Self::new(direction, Vec16::zeros())
    }

    pub fn point(&self, x: &Octonion) -> Vec16 {
        self.base + self.direction.right_mul(x).to_vec16()
    }

    /// Unit tangent `xi e_c`; the eight tangents are orthonormal.
    pub fn tangent(&self, c: usize) -> Vec16 {
        self.direction.right_mul(&Octonion::basis(c)).to_vec16()
    }

    pub fn tangents(&self) -> [Vec16; 8] {
        std::array::from_fn(|c| self.tangent(c))
    }

    /// Orthogonal projection onto the linear 8-plane `{xi x}`.
    pub fn project_tangent(&self, v: &Vec16) -> Vec16 {
        self.tangents().iter().fold(Vec16::zeros(), |acc, t| acc + t * t.dot(v))
    }

    /// Orthonormal frame of the orthogonal complement, from coordinate seeds by Gram-Schmidt.
    pub fn perp_frame(&self) -> [Vec16; 8] {
        let mut frame: Vec<Vec16> = self.tangents().to_vec();
        for k in 0..16 {
            if frame.len() == 16 {
                break;
            }
            let mut v = Vec16::from_fn(|i, _| if i == k { 1.0 } else { 0.0 });
            for _ in 0..2 {
                for f in &frame {
                    v -= f * f.dot(&v);
                }
            }
            let n = v.norm();
            if n > 1e-6 {
                frame.push(v / n);
            }
        }
        std::array::from_fn(|i| frame[8 + i])
    }

    /// Component of `v` orthogonal to the tangent plane.
    pub fn perp_component(&self, v: &Vec16) -> Vec16 {
        v - self.project_tangent(v)
    }

    /// Point of the line closest to the origin.
    pub fn foot(&self) -> Vec16 {
        self.base - self.project_tangent(&self.base)
    }

    pub fn distance_to_origin(&self) -> f64 {
        self.foot().norm()
    }

    pub fn translated(&self, w: &Vec16) -> Self {
        AffineLine { base: self.base + w, ..*self }
    }

    /// Point of `OP^1` of the direction.
    pub fn class(&self) -> HMatrix2 {
        hopf_class(&self.direction).expect("unit direction")
    }
}

/// Unit representative `(a, 1) / |(a, 1)|` or `(1, b) / |(1, b)|` of the line through
/// `xi`, using the chart with the larger pivot.
pub fn chart_direction(xi: &OctoVec2) -> OctoVec2 {
    let (q1, q2) = (xi.q1, xi.q2);
    let v = if q1.norm_sqr() >= q2.norm_sqr() {
        OctoVec2::new(Octonion::ONE, q2 * q1.inverse().expect("nonzero pivot"))
    } else {
        OctoVec2::new(q1 * q2.inverse().expect("nonzero pivot"), Octonion::ONE)
    };
    v.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    #[test]
    fn frames_are_orthonormal() {
        let mut rng = stream_rng(9, 0);
        let l = AffineLine::new(OctoVec2::random(&mut rng), Vec16::from_fn(|i, _| i as f64)).unwrap();
        let mut all = l.tangents().to_vec();
        all.extend(l.perp_frame());
        for i in 0..16 {
            for j in 0..16 {
                let d = all[i].dot(&all[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        // foot is orthogonal to the line and realizes the distance
        let f = l.foot();
        assert!(l.project_tangent(&f).norm() < 1e-12);
        let x = Octonion::random(&mut rng);
        assert!(l.point(&x).norm() >= f.norm() - 1e-12);
        assert!(AffineLine::through_origin(OctoVec2::default()).is_err());
    }

    #[test]
    fn chart_form_spans_the_hopf_fiber() {
        let mut rng = stream_rng(10, 0);
        for _ in 0..100 {
            let xi = OctoVec2::random(&mut rng);
            let l = AffineLine::through_origin(xi).unwrap();
            assert!(l.class().max_abs_diff(&hopf_class(&xi).unwrap()) < 1e-12);
            // every point of the line has the line's Hopf class
            let p = OctoVec2::from_vec16(&l.point(&Octonion::random(&mut rng)));
            assert!(hopf_class(&p).unwrap().max_abs_diff(&l.class()) < 1e-12);
        }
    }
}
