//! Closed real intervals with outward-rounded arithmetic.
//!
//! Every operation returns an interval that contains the exact result of the
//! same operation applied to any pair of real numbers drawn from the operands.
//! Rounding direction is recovered from the exact error terms (TwoSum and
//! fused multiply-add), so exact operations stay degenerate.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    let ap = s - bp;
    (s, (a - ap) + (b - bp))
}

pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return s;
    }
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return s;
    }
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    let e = a.mul_add(b, -p);
    if e < 0.0 || (p == 0.0 && a != 0.0 && b != 0.0 && (a < 0.0) != (b < 0.0)) {
        p.next_down()
    } else {
        p
    }
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 || (p == 0.0 && a != 0.0 && b != 0.0 && (a < 0.0) == (b < 0.0)) {
        p.next_up()
    } else {
        p
    }
}

pub(crate) fn div_down(a: f64, b: f64) -> f64 {
    let r = a / b;
    if !r.is_finite() {
        return r;
    }
    // a - r*b has the sign of (a/b - r) * sign(b)
    let rem = (-r).mul_add(b, a);
    let below = if b > 0.0 { rem < 0.0 } else { rem > 0.0 };
    if below || (r == 0.0 && a != 0.0) {
        r.next_down()
    } else {
        r
    }
}

pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    let r = a / b;
    if !r.is_finite() {
        return r;
    }
    let rem = (-r).mul_add(b, a);
    let above = if b > 0.0 { rem > 0.0 } else { rem < 0.0 };
    if above || (r == 0.0 && a != 0.0) {
        r.next_up()
    } else {
        r
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Symmetric enclosure `[x - err, x + err]`, rounded outward.
    pub fn around(x: f64, err: f64) -> Self {
        Interval {
            lo: add_down(x, -err),
            hi: add_up(x, err),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn abs(&self) -> Self {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval::new(0.0, self.mag())
        }
    }

    pub fn hull(&self, other: &Interval) -> Self {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn add(self, o: Interval) -> Self {
        Interval::new(add_down(self.lo, o.lo), add_up(self.hi, o.hi))
    }

    pub fn sub(self, o: Interval) -> Self {
        self.add(-o)
    }

    pub fn mul(self, o: Interval) -> Self {
        let cands_lo = [
            mul_down(self.lo, o.lo),
            mul_down(self.lo, o.hi),
            mul_down(self.hi, o.lo),
            mul_down(self.hi, o.hi),
        ];
        let cands_hi = [
            mul_up(self.lo, o.lo),
            mul_up(self.lo, o.hi),
            mul_up(self.hi, o.lo),
            mul_up(self.hi, o.hi),
        ];
        Interval::new(
            cands_lo.iter().copied().fold(f64::INFINITY, f64::min),
            cands_hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// Division by an interval that does not contain zero.
    pub fn div(self, o: Interval) -> Self {
        assert!(o.lo > 0.0 || o.hi < 0.0, "division by interval containing zero");
        let cands_lo = [
            div_down(self.lo, o.lo),
            div_down(self.lo, o.hi),
            div_down(self.hi, o.lo),
            div_down(self.hi, o.hi),
        ];
        let cands_hi = [
            div_up(self.lo, o.lo),
            div_up(self.lo, o.hi),
            div_up(self.hi, o.lo),
            div_up(self.hi, o.hi),
        ];
        Interval::new(
            cands_lo.iter().copied().fold(f64::INFINITY, f64::min),
            cands_hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    pub fn powi(self, mut e: u32) -> Self {
        let mut base = self;
        let mut acc = Interval::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            e >>= 1;
            if e > 0 {
                // squaring is never negative
                let sq = base.mul(base);
                base = if self.lo < 0.0 && self.hi > 0.0 {
                    Interval::new(sq.lo.max(0.0), sq.hi)
                } else {
                    sq
                };
            }
        }
        acc
    }

    /// `x^e` for a positive point `x` and real exponent, widened to cover libm error.
    pub fn powf_point(x: f64, e: f64) -> Self {
        debug_assert!(x > 0.0);
        if e == 0.0 {
            return Interval::ONE;
        }
        if e == 1.0 {
            return Interval::point(x);
        }
        let v = x.powf(e);
        let slack = v * 4.0 * f64::EPSILON;
        Interval::new((v - slack).max(0.0), v + slack)
    }
}

impl std::ops::Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_operations_stay_degenerate() {
        let a = Interval::point(0.5).add(Interval::point(0.25));
        assert_eq!(a, Interval::point(0.75));
        let b = Interval::point(3.0).mul(Interval::point(-2.0));
        assert_eq!(b, Interval::point(-6.0));
        let c = Interval::point(1.0).div(Interval::point(4.0));
        assert_eq!(c, Interval::point(0.25));
    }

    #[test]
    fn inexact_division_is_bracketed() {
        let third = Interval::point(1.0).div(Interval::point(3.0));
        assert!(third.lo < third.hi);
        assert_eq!(third.lo.next_up(), third.hi);
        assert!(third.lo * 3.0 <= 1.0 && third.hi * 3.0 >= 1.0);
    }

    #[test]
    fn powi_matches_repeated_products() {
        let p = Interval::point(0.5).powi(10);
        assert_eq!(p, Interval::point(1.0 / 1024.0));
        let q = Interval::point(-3.0).powi(3);
        assert_eq!(q, Interval::point(-27.0));
        let r = Interval::point(1.0 / 3.0).powi(7);
        assert!(r.lo <= 1.0 / 2187.0 && r.hi >= 1.0 / 2187.0);
    }

    proptest! {
        #[test]
        fn sum_encloses_high_precision_value(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let s = Interval::point(a).add(Interval::point(b));
            let (hi, lo) = two_sum(a, b);
            // exact sum = hi + lo
            prop_assert!(s.lo <= hi && hi <= s.hi);
            if lo > 0.0 { prop_assert!(s.hi > hi); }
            if lo < 0.0 { prop_assert!(s.lo < hi); }
        }

        #[test]
        fn product_encloses_fma_residual(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let p = Interval::point(a).mul(Interval::point(b));
            let r = a * b;
            let e = a.mul_add(b, -r);
            prop_assert!(p.lo <= r && r <= p.hi);
            if e > 0.0 { prop_assert!(p.hi > r); }
            if e < 0.0 { prop_assert!(p.lo < r); }
        }
    }
}
