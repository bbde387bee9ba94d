//! Coefficient sequences `(a_n)` of the convolution recursion.
//!
//! A kernel is a finite prefix `a_1..a_N` followed by a parametric tail
//! `a_n = c q^n / (n^alpha (n+1)^beta)` for `n > N`. The tail family is narrow
//! on purpose: every quantity the certificates need (tail sums, moments,
//! radius of convergence, sign pattern) has a closed form or a two-sided
//! bracket for it.

mod series;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use series::{power_series_at, SumEnclosure};

/// Tail model applying to every index past the prefix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TailModel {
    Zero,
    Parametric { c: f64, q: f64, alpha: f64, beta: f64 },
}

impl TailModel {
    /// `a_n = c q^n / (n^alpha (n+1)^beta)`.
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            TailModel::Zero => 0.0,
            TailModel::Parametric { c, q, alpha, beta } => {
                let k = n as f64;
                let mut v = c * pow_int(q, n);
                if alpha != 0.0 {
                    v /= k.powf(alpha);
                }
                if beta != 0.0 {
                    v /= (k + 1.0).powf(beta);
                }
                v
            }
        }
    }
}

pub(crate) fn pow_int(q: f64, n: usize) -> f64 {
    if n <= i32::MAX as usize {
        q.powi(n as i32)
    } else {
        q.powf(n as f64)
    }
}

/// Which weight the series routines apply to `a_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumMode {
    /// `sum a_n`
    Plain,
    /// `sum |a_n|`
    Absolute,
    /// `sum n a_n`
    FirstMoment,
    /// `sum n |a_n|`
    FirstMomentAbs,
}

impl SumMode {
    pub(crate) fn is_absolute(self) -> bool {
        matches!(self, SumMode::Absolute | SumMode::FirstMomentAbs)
    }

    pub(crate) fn is_moment(self) -> bool {
        matches!(self, SumMode::FirstMoment | SumMode::FirstMomentAbs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub prefix: Vec<f64>,
    pub tail: TailModel,
}

/// gcd of the indices carrying positive coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportGcd {
    Value(u64),
    Undefined,
}

impl KernelSpec {
    /// Builds a kernel, validating and normalizing it the same way the JSON parser does.
    pub fn new(prefix: Vec<f64>, tail: TailModel) -> Result<Self> {
        let mut k = KernelSpec { prefix, tail };
        k.validate()?;
        k.normalize();
        Ok(k)
    }

    pub fn zero_tail(prefix: Vec<f64>) -> Result<Self> {
        Self::new(prefix, TailModel::Zero)
    }

    pub fn parametric(prefix: Vec<f64>, c: f64, q: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(prefix, TailModel::Parametric { c, q, alpha, beta })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: KernelSpec = serde_json::from_str(text)?;
        Self::new(raw.prefix, raw.tail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel serialization cannot fail")
    }

    fn validate(&self) -> Result<()> {
        for (i, v) in self.prefix.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidKernel {
                    field: format!("prefix[{i}]"),
                    reason: "must be a finite number".into(),
                });
            }
        }
        if let TailModel::Parametric { c, q, alpha, beta } = self.tail {
            for (name, v) in [("c", c), ("q", q), ("alpha", alpha), ("beta", beta)] {
                if !v.is_finite() {
                    return Err(Error::InvalidKernel {
                        field: format!("tail.{name}"),
                        reason: "must be a finite number".into(),
                    });
                }
            }
            if alpha < 0.0 {
                return Err(Error::InvalidKernel {
                    field: "tail.alpha".into(),
                    reason: format!("must be >= 0, got {alpha}"),
                });
            }
            if beta < 0.0 {
                return Err(Error::InvalidKernel {
                    field: "tail.beta".into(),
                    reason: format!("must be >= 0, got {beta}"),
                });
            }
        }
        Ok(())
    }

    fn normalize(&mut self) {
        if let TailModel::Parametric { c, q, .. } = self.tail {
            if c == 0.0 || q == 0.0 {
                self.tail = TailModel::Zero;
            }
        }
        // -0.0 and 0.0 must hash identically
        for v in &mut self.prefix {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
    }

    /// Length `N` of the explicit prefix.
    pub fn prefix_len(&self) -> usize {
        self.prefix.len()
    }

    /// `a_n` for `n >= 1`.
    pub fn term(&self, n: usize) -> f64 {
        assert!(n >= 1, "kernel indices start at 1");
        if n <= self.prefix.len() {
            self.prefix[n - 1]
        } else {
            self.tail.eval(n)
        }
    }

    /// `a_1..=a_n` as a vector (index 0 holds `a_1`).
    pub fn terms(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.term(k)).collect()
    }

    /// Content hash of the normalized kernel.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(digest.as_slice())
    }

    /// Radius of convergence of `sum a_n z^n`; `f64::INFINITY` for finite kernels.
    pub fn radius_of_convergence(&self) -> f64 {
        match self.tail {
            TailModel::Zero => f64::INFINITY,
            TailModel::Parametric { q, .. } => 1.0 / q.abs(),
        }
    }

    pub fn series_sum(&self, mode: SumMode, precision: f64) -> SumEnclosure {
        series::series_sum(self, mode, precision)
    }

    /// Enclosure of `L_n = sum_{i>n} |a_i|`.
    pub fn tail_abs_sum(&self, n: usize) -> SumEnclosure {
        series::tail_abs_sum(self, n)
    }

    /// Every `a_n >= 0`, decided from the prefix and the tail's sign pattern.
    pub fn is_nonnegative(&self) -> bool {
        let prefix_ok = self.prefix.iter().all(|&v| v >= 0.0);
        let tail_ok = match self.tail {
            TailModel::Zero => true,
            TailModel::Parametric { c, q, .. } => c == 0.0 || (c > 0.0 && q > 0.0),
        };
        prefix_ok && tail_ok
    }

    pub fn support_gcd(&self) -> SupportGcd {
        let n = self.prefix.len();
        // the tail sign pattern has period at most 2, so four indices settle its gcd
        let tail_idx = match self.tail {
            TailModel::Zero => 0..0,
            TailModel::Parametric { .. } => (n + 1)..(n + 5),
        };
        let positive = (1..=n)
            .filter(|&i| self.prefix[i - 1] > 0.0)
            .chain(tail_idx.filter(|&i| self.tail_sign(i) > 0.0));
        let g = positive.fold(0u64, |g, i| gcd(g, i as u64));
        if g == 0 {
            SupportGcd::Undefined
        } else {
            SupportGcd::Value(g)
        }
    }

    /// Sign of the tail formula at `n`, independent of underflow.
    fn tail_sign(&self, n: usize) -> f64 {
        match self.tail {
            TailModel::Zero => 0.0,
            TailModel::Parametric { c, q, .. } => {
                let qs = if q < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
                c.signum() * qs
            }
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
