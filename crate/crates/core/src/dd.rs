//! Minimal double-double arithmetic (about 32 significant digits) for the
//! cancellation-heavy end of Fisher's alternating series.

use std::ops::{Add, Mul, Neg};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub(crate) const ZERO: Self = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub(crate) const ONE: Self = DoubleDouble { hi: 1.0, lo: 0.0 };

    fn from_pair((hi, lo): (f64, f64)) -> Self {
        DoubleDouble { hi, lo }
    }

    /// Exact `a·b`.
    pub(crate) fn product(a: f64, b: f64) -> Self {
        Self::from_pair(two_prod(a, b))
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub(crate) fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::from_pair(quick_two_sum(p, e + self.lo * b))
    }

    pub(crate) fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let (s, f) = two_sum(self.hi, -p);
        let q2 = (s + (f - e + self.lo)) / b;
        Self::from_pair(quick_two_sum(q1, q2))
    }

    pub(crate) fn powi(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        DoubleDouble { hi: v, lo: 0.0 }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Self::from_pair(quick_two_sum(s, e + f))
    }
}

impl Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        Self::from_pair(quick_two_sum(p, e + (self.hi * rhs.lo + self.lo * rhs.hi)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_digits_lost_in_f64() {
        let tiny = DoubleDouble::from(1e-20);
        let s = DoubleDouble::ONE + tiny + -DoubleDouble::ONE;
        assert_eq!(s.to_f64(), 1e-20);
    }

    #[test]
    fn division_and_powers() {
        let third = DoubleDouble::ONE.div_f64(3.0);
        let back = third.mul_f64(3.0) + -DoubleDouble::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let p = DoubleDouble::from(1.5).powi(10);
        assert_eq!(p.to_f64(), 1.5f64.powi(10));
        assert_eq!(DoubleDouble::from(7.0).powi(0), DoubleDouble::ONE);
    }

    #[test]
    fn exact_product() {
        let p = DoubleDouble::product(1.0 + f64::EPSILON, 1.0 - f64::EPSILON);
        // 1 - eps² is not representable in f64
        assert_eq!(p.hi, 1.0);
        assert_eq!(p.lo, -f64::EPSILON * f64::EPSILON);
    }
}
