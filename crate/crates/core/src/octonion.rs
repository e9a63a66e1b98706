//! Octonion arithmetic.
//!
//! Basis `e0 = 1, e1, ..., e7`. The product is driven by a signed index table
//! covering all 64 basis pairs; the table is transcribed from the classical 7x7
//! table and checked at compile time against the seven oriented Fano lines
//! `(1,2,4) (2,3,5) (3,4,6) (4,5,7) (5,6,1) (6,7,2) (7,1,3)`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;

use crate::error::{Error, Result};

/// `BASIS_TABLE[i-1][j-1] = (sign, k)` means `e_i e_j = sign * e_k`, for `i, j >= 1`.
/// `k = 0` stands for the real unit.
const BASIS_TABLE: [[(i8, u8); 7]; 7] = [
    [(-1, 0), (1, 4), (1, 7), (-1, 2), (1, 6), (-1, 5), (-1, 3)],
    [(-1, 4), (-1, 0), (1, 5), (1, 1), (-1, 3), (1, 7), (-1, 6)],
    [(-1, 7), (-1, 5), (-1, 0), (1, 6), (1, 2), (-1, 4), (1, 1)],
    [(1, 2), (-1, 1), (-1, 6), (-1, 0), (1, 7), (1, 3), (-1, 5)],
    [(-1, 6), (1, 3), (-1, 2), (-1, 7), (-1, 0), (1, 1), (1, 4)],
    [(1, 5), (-1, 7), (1, 4), (-1, 3), (-1, 1), (-1, 0), (1, 2)],
    [(1, 3), (1, 6), (-1, 1), (1, 5), (-1, 4), (-1, 2), (-1, 0)],
];

/// Cyclically oriented Fano lines: `e_a e_b = e_c` for each `(a, b, c)`.
pub const FANO_LINES: [[u8; 3]; 7] = [
    [1, 2, 4],
    [2, 3, 5],
    [3, 4, 6],
    [4, 5, 7],
    [5, 6, 1],
    [6, 7, 2],
    [7, 1, 3],
];

const fn full_table() -> [[(i8, u8); 8]; 8] {
    let mut t = [[(0i8, 0u8); 8]; 8];
    let mut i = 0;
    while i < 8 {
        let mut j = 0;
        while j < 8 {
            t[i][j] = if i == 0 {
                (1, j as u8)
            } else if j == 0 {
                (1, i as u8)
            } else {
                BASIS_TABLE[i - 1][j - 1]
            };
            j += 1;
        }
        i += 1;
    }
    t
}

const fn fano_table() -> [[(i8, u8); 8]; 8] {
    let mut t = [[(0i8, 0u8); 8]; 8];
    let mut i = 0;
    while i < 8 {
        t[0][i] = (1, i as u8);
        t[i][0] = (1, i as u8);
        if i > 0 {
            t[i][i] = (-1, 0);
        }
        i += 1;
    }
    let mut l = 0;
    while l < 7 {
        let [a, b, c] = FANO_LINES[l];
        let (a, b, c) = (a as usize, b as usize, c as usize);
        // every cyclic rotation of an oriented line is again oriented
        t[a][b] = (1, c as u8);
        t[b][a] = (-1, c as u8);
        t[b][c] = (1, a as u8);
        t[c][b] = (-1, a as u8);
        t[c][a] = (1, b as u8);
        t[a][c] = (-1, b as u8);
        l += 1;
    }
    t
}

const fn tables_agree(x: &[[(i8, u8); 8]; 8], y: &[[(i8, u8); 8]; 8]) -> bool {
    let mut i = 0;
    while i < 8 {
        let mut j = 0;
        while j < 8 {
            if x[i][j].0 != y[i][j].0 || x[i][j].1 != y[i][j].1 {
                return false;
            }
            j += 1;
        }
        i += 1;
    }
    true
}

/// Signed index table for all 64 basis products, `e_i e_j = PRODUCT[i][j].0 * e_{PRODUCT[i][j].1}`.
pub const PRODUCT: [[(i8, u8); 8]; 8] = full_table();

const _: () = assert!(
    tables_agree(&PRODUCT, &fano_table()),
    "octonion multiplication table disagrees with the Fano plane"
);

/// An octonion `sum_i c[i] e_i`; index 0 is the real part.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Octonion(pub [f64; 8]);

impl Octonion {
    pub const ZERO: Octonion = Octonion([0.0; 8]);
    pub const ONE: Octonion = Octonion([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

    pub fn new(c: [f64; 8]) -> Self {
        Octonion(c)
    }

    pub fn real(x: f64) -> Self {
        let mut c = [0.0; 8];
        c[0] = x;
        Octonion(c)
    }

    /// The basis unit `e_i`.
    pub fn basis(i: usize) -> Self {
        assert!(i < 8, "octonion basis index {i} out of range");
        let mut c = [0.0; 8];
        c[i] = 1.0;
        Octonion(c)
    }

    pub fn coeffs(&self) -> &[f64; 8] {
        &self.0
    }

    pub fn re(&self) -> f64 {
        self.0[0]
    }

    pub fn conj(&self) -> Self {
        let mut c = self.0;
        for x in c.iter_mut().skip(1) {
            *x = -*x;
        }
        Octonion(c)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<x, y> = Re(x conj(y))`, which equals the Euclidean dot product of coefficients.
    pub fn dot(&self, other: &Octonion) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn inverse(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::Domain("zero octonion has no inverse".into()));
        }
        Ok(self.conj() / n2)
    }

    /// `[a, b, c] = (ab)c - a(bc)`.
    pub fn associator(a: &Octonion, b: &Octonion, c: &Octonion) -> Octonion {
        (*a * *b) * *c - *a * (*b * *c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Coefficients i.i.d. uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut c = [0.0; 8];
        for x in c.iter_mut() {
            *x = rng.random_range(-1.0..=1.0);
        }
        Octonion(c)
    }

    /// 8x8 real matrix of `x -> self * x` (column `j` is `self * e_j`).
    pub fn left_mul_matrix(&self) -> [[f64; 8]; 8] {
        let mut m = [[0.0; 8]; 8];
        for (j, col) in (0..8).map(|j| (j, *self * Octonion::basis(j))) {
            for i in 0..8 {
                m[i][j] = col.0[i];
            }
        }
        m
    }

    /// 8x8 real matrix of `x -> x * self`.
    pub fn right_mul_matrix(&self) -> [[f64; 8]; 8] {
        let mut m = [[0.0; 8]; 8];
        for (j, col) in (0..8).map(|j| (j, Octonion::basis(j) * *self)) {
            for i in 0..8 {
                m[i][j] = col.0[i];
            }
        }
        m
    }
}

impl fmt::Debug for Octonion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Octonion{:?}", self.0)
    }
}

impl fmt::Display for Octonion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &x) in self.0.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if x < 0.0 { '-' } else { '+' })?;
            } else if x < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            if i == 0 {
                write!(f, "{}", x.abs())?;
            } else {
                write!(f, "{}e{}", x.abs(), i)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Index<usize> for Octonion {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Octonion {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Octonion {
    type Output = Octonion;
    fn add(mut self, rhs: Octonion) -> Octonion {
        self += rhs;
        self
    }
}

impl AddAssign for Octonion {
    fn add_assign(&mut self, rhs: Octonion) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
    }
}

impl Sub for Octonion {
    type Output = Octonion;
    fn sub(mut self, rhs: Octonion) -> Octonion {
        self -= rhs;
        self
    }
}

impl SubAssign for Octonion {
    fn sub_assign(&mut self, rhs: Octonion) {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a -= b;
        }
    }
}

impl Neg for Octonion {
    type Output = Octonion;
    fn neg(self) -> Octonion {
        Octonion(self.0.map(|x| -x))
    }
}

impl Mul for Octonion {
    type Output = Octonion;
    fn mul(self, rhs: Octonion) -> Octonion {
        let mut out = [0.0; 8];
        for i in 0..8 {
            let a = self.0[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..8 {
                let (s, k) = PRODUCT[i][j];
                out[k as usize] += f64::from(s) * a * rhs.0[j];
            }
        }
        Octonion(out)
    }
}

impl Mul<f64> for Octonion {
    type Output = Octonion;
    fn mul(self, rhs: f64) -> Octonion {
        Octonion(self.0.map(|x| x * rhs))
    }
}

impl Mul<Octonion> for f64 {
    type Output = Octonion;
    fn mul(self, rhs: Octonion) -> Octonion {
        rhs * self
    }
}

impl MulAssign<f64> for Octonion {
    fn mul_assign(&mut self, rhs: f64) {
        for x in self.0.iter_mut() {
            *x *= rhs;
        }
    }
}

impl Div<f64> for Octonion {
    type Output = Octonion;
    fn div(self, rhs: f64) -> Octonion {
        Octonion(self.0.map(|x| x / rhs))
    }
}

impl From<f64> for Octonion {
    fn from(x: f64) -> Self {
        Octonion::real(x)
    }
}
