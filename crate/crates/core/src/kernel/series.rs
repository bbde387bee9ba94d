//! Certified enclosures for sums over a kernel.
//!
//! The prefix is summed in interval arithmetic. The parametric tail is summed
//! explicitly for as many terms as needed and the remainder is bracketed in
//! closed form:
//!
//! * `|q| < 1`, `alpha = beta = 0`: exact geometric (or arithmetico-geometric) sums;
//! * `|q| < 1` otherwise: a geometric dominator built from the term ratio bound;
//! * `q = 1` (or absolute mode with `|q| = 1`): the telescoping closed form when
//!   `alpha = beta = 1`, otherwise integral-test brackets for `sum k^-s`;
//! * `q = -1`, signed: alternating-series remainder once terms decrease;
//! * `|q| > 1`, or `|q| = 1` with too little decay: divergent.
//!
//! Explicit tail terms are accumulated with compensated summation; the enclosure
//! is widened by an a-priori rounding bound (`(k + 10) u` per term, which covers
//! binary powering of `q`).

use serde::{Deserialize, Serialize};

use super::{pow_int, KernelSpec, SumMode, TailModel};
use crate::interval::Interval;

const U: f64 = f64::EPSILON / 2.0;
const TERM_BUDGET: usize = 1 << 23;
const TAIL_PRECISION: f64 = 1e-13;
/// Absolute slack for terms lost to underflow.
const TINY: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SumEnclosure {
    Finite { lo: f64, hi: f64 },
    Divergent,
    Unknown,
}

impl SumEnclosure {
    fn from_interval(iv: Interval) -> Self {
        SumEnclosure::Finite { lo: iv.lo, hi: iv.hi }
    }

    pub fn interval(&self) -> Option<Interval> {
        match *self {
            SumEnclosure::Finite { lo, hi } => Some(Interval::new(lo, hi)),
            _ => None,
        }
    }

    pub fn hi(&self) -> Option<f64> {
        self.interval().map(|iv| iv.hi)
    }

    pub fn lo(&self) -> Option<f64> {
        self.interval().map(|iv| iv.lo)
    }

    pub fn width(&self) -> Option<f64> {
        self.interval().map(|iv| iv.width())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SumEnclosure::Finite { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, SumEnclosure::Divergent)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval().is_some_and(|iv| iv.contains(x))
    }

    fn shift(self, by: Interval) -> Self {
        match self {
            SumEnclosure::Finite { lo, hi } => Self::from_interval(Interval::new(lo, hi).add(by)),
            other => other,
        }
    }
}

/// `sum_{k >= start} c q^k k^j / (k^alpha (k+1)^beta)`, `j` in {0, 1}.
#[derive(Clone, Copy, Debug)]
struct TailSeries {
    c: f64,
    q: f64,
    alpha: f64,
    beta: f64,
    moment: bool,
}

impl TailSeries {
    fn new(tail: TailModel, mode: SumMode) -> Option<Self> {
        match tail {
            TailModel::Zero => None,
            TailModel::Parametric { c, q, alpha, beta } => {
                let (c, q) = if mode.is_absolute() { (c.abs(), q.abs()) } else { (c, q) };
                Some(TailSeries { c, q, alpha, beta, moment: mode.is_moment() })
            }
        }
    }

    fn j(&self) -> f64 {
        if self.moment {
            1.0
        } else {
            0.0
        }
    }

    /// Effective decay exponent of `|term_k|` when `|q| = 1`.
    fn decay(&self) -> f64 {
        self.alpha + self.beta - self.j()
    }

    fn term(&self, k: usize) -> f64 {
        let kf = k as f64;
        let mut v = self.c * pow_int(self.q, k);
        if self.moment {
            v *= kf;
        }
        if self.alpha != 0.0 {
            v /= kf.powf(self.alpha);
        }
        if self.beta != 0.0 {
            v /= (kf + 1.0).powf(self.beta);
        }
        v
    }

    /// Relative rounding bound of `term(k)`.
    fn term_rel_err(k: usize) -> f64 {
        (k as f64 + 10.0) * U
    }

    fn sum(&self, start: usize, precision: f64) -> SumEnclosure {
        if self.c == 0.0 || self.q == 0.0 {
            return SumEnclosure::Finite { lo: 0.0, hi: 0.0 };
        }
        let aq = self.q.abs();
        if aq > 1.0 {
            return SumEnclosure::Divergent;
        }
        if aq == 1.0 {
            if self.q > 0.0 {
                if self.decay() <= 1.0 {
                    return SumEnclosure::Divergent;
                }
                if !self.moment && self.alpha == 1.0 && self.beta == 1.0 {
                    // sum_{k>=m} 1/(k(k+1)) = 1/m
                    let v = Interval::point(self.c).div(Interval::point(start as f64));
                    return SumEnclosure::from_interval(v);
                }
                return self.power_bracket(start, precision);
            }
            if self.decay() <= 0.0 {
                return SumEnclosure::Divergent;
            }
            return self.alternating(start, precision);
        }
        if self.alpha == 0.0 && self.beta == 0.0 {
            return SumEnclosure::from_interval(self.geometric_closed(start));
        }
        self.geometric_dominated(start, precision)
    }

    fn geometric_closed(&self, start: usize) -> Interval {
        let q = Interval::point(self.q);
        let one_minus_q = Interval::ONE.sub(q);
        let qm = q.powi(start as u32);
        let c = Interval::point(self.c);
        if !self.moment {
            c.mul(qm).div(one_minus_q)
        } else {
            // sum_{k>=m} k q^k = q^m (m - (m-1) q) / (1-q)^2
            let m = Interval::point(start as f64);
            let m1 = Interval::point(start as f64 - 1.0);
            let num = m.sub(m1.mul(q));
            c.mul(qm).mul(num).div(one_minus_q.mul(one_minus_q))
        }
    }

    /// `|q| < 1` with polynomial factors: explicit terms plus a geometric remainder.
    fn geometric_dominated(&self, start: usize, precision: f64) -> SumEnclosure {
        let aq = self.q.abs();
        let growth = (self.j() - self.alpha).max(0.0);
        let signed = self.q < 0.0;
        let mut acc = Compensated::default();
        let mut k = start;
        loop {
            let t = self.term(k);
            let kf = k as f64;
            let rho = if growth == 0.0 {
                aq
            } else {
                aq * ((kf + 1.0) / kf).powf(growth) * (1.0 + 8.0 * U)
            };
            let used = k - start;
            if rho < 1.0 {
                let r = t.abs() * (1.0 + Self::term_rel_err(k)) / (1.0 - rho) * (1.0 + 8.0 * U) + TINY;
                let width = if signed { 2.0 * r } else { r };
                if width <= 0.5 * precision || used >= TERM_BUDGET {
                    let rem = if signed {
                        Interval::new(-r, r)
                    } else if self.c > 0.0 {
                        Interval::new(0.0, r)
                    } else {
                        Interval::new(-r, 0.0)
                    };
                    return SumEnclosure::from_interval(acc.enclosure().add(rem));
                }
            } else if used >= TERM_BUDGET {
                return SumEnclosure::Unknown;
            }
            acc.push(t, Self::term_rel_err(k));
            k += 1;
        }
    }

    /// `|q| = 1`, all terms of the sign of `c`, decay exponent `s > 1`.
    fn power_bracket(&self, start: usize, precision: f64) -> SumEnclosure {
        let s = self.decay();
        let c = self.c.abs();
        let bracket = |k: usize| -> (f64, f64) {
            let kf = k as f64;
            let hi = (kf - 0.5).powf(1.0 - s) / (s - 1.0);
            let shape = if self.beta == 0.0 { 1.0 } else { (kf / (kf + 1.0)).powf(self.beta) };
            let lo = shape * (kf.powf(1.0 - s) / (s - 1.0) + 0.5 * kf.powf(-s));
            (c * lo * (1.0 - 16.0 * U), c * hi * (1.0 + 16.0 * U))
        };
        let mut split = start;
        loop {
            let (lo, hi) = bracket(split);
            if hi - lo <= 0.5 * precision || split - start >= TERM_BUDGET {
                break;
            }
            split = (split * 2).max(split + 1).min(start + TERM_BUDGET);
        }
        let mut acc = Compensated::default();
        for k in start..split {
            acc.push(self.term(k).abs(), Self::term_rel_err(k));
        }
        let (lo, hi) = bracket(split);
        let total = acc.enclosure().add(Interval::new(lo.max(0.0), hi + TINY));
        let total = if self.c < 0.0 { -total } else { total };
        SumEnclosure::from_interval(total)
    }

    /// `q = -1`, signed: alternating series with eventually decreasing magnitudes.
    fn alternating(&self, start: usize, precision: f64) -> SumEnclosure {
        let s = self.decay();
        let growth = self.j() - self.alpha;
        // |term_k| decreases once (j - alpha)(k + 1) < beta k
        let monotone_from = if growth <= 0.0 {
            start
        } else {
            start.max((growth / s).floor() as usize + 1)
        };
        // |term_k| <= |c| k^-s
        let target = (2.0 * self.c.abs() / precision).powf(1.0 / s).ceil();
        let last = if target >= (start + TERM_BUDGET) as f64 {
            start + TERM_BUDGET
        } else {
            (target as usize).max(start.saturating_sub(1))
        };
        let last = last.max(monotone_from.saturating_sub(1));
        let mut acc = Compensated::default();
        for k in start..=last {
            acc.push(self.term(k), Self::term_rel_err(k));
        }
        let next = self.term(last + 1);
        let slack = next.abs() * Self::term_rel_err(last + 1) + TINY;
        let rem = Interval::new(next.min(0.0) - slack, next.max(0.0) + slack);
        let total = acc.enclosure().add(rem);
        if total.width() > precision && s <= 1.0 {
            return SumEnclosure::Unknown;
        }
        SumEnclosure::from_interval(total)
    }
}

/// Neumaier summation with a running a-priori error bound.
#[derive(Default)]
struct Compensated {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    term_err: f64,
    count: usize,
}

impl Compensated {
    fn push(&mut self, t: f64, rel_err: f64) {
        let s = self.sum + t;
        if self.sum.abs() >= t.abs() {
            self.comp += (self.sum - s) + t;
        } else {
            self.comp += (t - s) + self.sum;
        }
        self.sum = s;
        self.abs_sum += t.abs();
        self.term_err += t.abs() * rel_err;
        self.count += 1;
    }

    fn enclosure(&self) -> Interval {
        let value = self.sum + self.comp;
        let n = self.count as f64;
        let err = (2.0 * U * value.abs() + 4.0 * n * U * U * self.abs_sum + self.term_err) * (1.0 + 1e-6);
        if self.count == 0 {
            Interval::ZERO
        } else {
            Interval::around(value, err)
        }
    }
}

fn prefix_enclosure(prefix: &[f64], from: usize, mode: SumMode) -> Interval {
    // from is a 1-based index
    let mut acc = Interval::ZERO;
    for k in from..=prefix.len() {
        let a = prefix[k - 1];
        let a = if mode.is_absolute() { a.abs() } else { a };
        let w = if mode.is_moment() {
            Interval::point(a).mul(Interval::point(k as f64))
        } else {
            Interval::point(a)
        };
        acc = acc.add(w);
    }
    acc
}

pub(super) fn series_sum(kernel: &KernelSpec, mode: SumMode, precision: f64) -> SumEnclosure {
    assert!(precision > 0.0, "precision must be positive");
    let head = prefix_enclosure(&kernel.prefix, 1, mode);
    let tail = match TailSeries::new(kernel.tail, mode) {
        None => SumEnclosure::Finite { lo: 0.0, hi: 0.0 },
        Some(ts) => ts.sum(kernel.prefix.len() + 1, 0.5 * precision),
    };
    tail.shift(head)
}

pub(super) fn tail_abs_sum(kernel: &KernelSpec, n: usize) -> SumEnclosure {
    let len = kernel.prefix.len();
    let head = if n < len {
        prefix_enclosure(&kernel.prefix, n + 1, SumMode::Absolute)
    } else {
        Interval::ZERO
    };
    let tail = match TailSeries::new(kernel.tail, SumMode::Absolute) {
        None => SumEnclosure::Finite { lo: 0.0, hi: 0.0 },
        Some(ts) => ts.sum(len.max(n) + 1, TAIL_PRECISION),
    };
    tail.shift(head)
}

/// Enclosure of `a(t) = sum_n a_n t^n` at a real point `t`.
pub fn power_series_at(kernel: &KernelSpec, t: f64, precision: f64) -> SumEnclosure {
    let ti = Interval::point(t);
    let mut pow = Interval::ONE;
    let mut head = Interval::ZERO;
    for &a in &kernel.prefix {
        pow = pow.mul(ti);
        head = head.add(Interval::point(a).mul(pow));
    }
    let TailModel::Parametric { c, q, alpha, beta } = kernel.tail else {
        return SumEnclosure::from_interval(head);
    };
    let qt = q * t;
    let exact = q.mul_add(t, -qt) == 0.0;
    let start = kernel.prefix.len() + 1;
    let ts = TailSeries { c, q: qt, alpha, beta, moment: false };
    let tail = ts.sum(start, 0.5 * precision);
    if exact {
        return tail.shift(head);
    }
    // q t was rounded: (qt)^k and fl(qt)^k differ by at most ~k u |fl(qt)|^k (up to one ulp of base)
    let bound = TailSeries { c: c.abs(), q: qt.abs().next_up(), alpha, beta, moment: true };
    match (tail, bound.sum(start, 1.0)) {
        (SumEnclosure::Finite { lo, hi }, SumEnclosure::Finite { hi: m1, .. }) => {
            let widen = 2.0 * U * m1 * (1.0 + 1e-6);
            SumEnclosure::Finite { lo: lo - widen, hi: hi + widen }.shift(head)
        }
        (SumEnclosure::Divergent, _) => SumEnclosure::Divergent,
        _ => SumEnclosure::Unknown,
    }
}
