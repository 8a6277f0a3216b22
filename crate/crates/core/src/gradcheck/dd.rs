//! Double-double arithmetic (about 106 significant bits) for the reference
//! forward pass.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

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

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn max(self, other: Dd) -> Dd {
        if other.cmp_dd(self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn cmp_dd(self, other: Dd) -> Ordering {
        self.hi
            .total_cmp(&other.hi)
            .then(self.lo.total_cmp(&other.lo))
    }

    fn ldexp(self, k: i32) -> Dd {
        let f = 2f64.powi(k);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn exp(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::from_f64(k);
        // shrink the argument by 2^10, sum the Taylor series, square back up
        let t = r.ldexp(-10);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..=16 {
            term = term * t / Dd::from_f64(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    /// Natural logarithm of a positive value by Newton steps on `exp`.
    pub fn ln(self) -> Dd {
        let mut z = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            z = z + self * (-z).exp() - Dd::ONE;
        }
        z
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, y: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, y.hi);
        let (t, f) = two_sum(self.lo, y.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, y: Dd) -> Dd {
        self + (-y)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, y: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, y.hi);
        let e = e + (self.hi * y.lo + self.lo * y.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, y: Dd) -> Dd {
        let q1 = self.hi / y.hi;
        let r = self - y * Dd::from_f64(q1);
        let q2 = r.hi / y.hi;
        let r = r - y * Dd::from_f64(q2);
        let q3 = r.hi / y.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_ln_agree_with_f64() {
        for &x in &[-20.0, -3.5, -1e-3, 0.1, 1.0, 2.5, 40.0] {
            let e = Dd::from_f64(x).exp();
            assert!((e.to_f64() - f64::exp(x)).abs() <= 4.0 * f64::EPSILON * f64::exp(x));
            let back = e.ln();
            assert!((back - Dd::from_f64(x)).to_f64().abs() < 1e-28 * x.abs().max(1.0));
        }
    }

    #[test]
    fn recovers_bits_lost_in_f64() {
        let third = Dd::ONE / Dd::from_f64(3.0);
        let err = (third * Dd::from_f64(3.0) - Dd::ONE).to_f64();
        assert!(err.abs() < 1e-31);
        let tiny = Dd::from_f64(1.0) + Dd::from_f64(1e-20);
        assert_eq!(tiny.lo, 1e-20);
    }
}
