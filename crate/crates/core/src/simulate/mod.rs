//! Trajectories of `x_n = sum_{i<n} a_{n-i} x_i` and their empirical classification.
//!
//! Kernels whose tail grows (`|q| > 1`) are simulated in the tilted variable
//! `y_n = x_n / q^n`, which satisfies the same recursion with kernel
//! `a_k q^{-k}`. The tilted kernel stays bounded, so cancellations such as the
//! one in `a_n = -p^n` happen between moderate numbers and come out exact.

mod fast;

use std::io::Write;

use serde::Serialize;

use crate::kernel::{pow_int, KernelSpec, TailModel};

pub use fast::solve_fast;

/// Stop once `|x_n|` passes this; ten times the default classification cutoff.
pub const EARLY_EXIT: f64 = 1e13;
const COMPENSATE_FROM: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    FftBlocked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    /// `|x_n|` passed [`EARLY_EXIT`]; the crossing value is the last entry.
    EarlyExit,
    /// The next value was not finite; the trajectory ends at the last finite entry.
    Overflow,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub kernel_id: String,
    pub method: Method,
    pub status: Status,
}

impl Trajectory {
    /// Writes `n,x` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,x")?;
        for (n, &x) in self.values.iter().enumerate() {
            writeln!(out, "{n},{}", format_g17(x))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// `%.17g`-style formatting.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        trim_fraction(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mant))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The recursion as actually iterated: `y_n = sum b_{n-i} y_i`, `x_n = y_n * scale^n`.
pub(crate) struct Tilted {
    pub scale: Option<f64>,
    /// `b_1..b_N` for the prefix indices.
    pub prefix: Vec<f64>,
    pub tail: TailModel,
    pub n_prefix: usize,
}

impl Tilted {
    pub fn new(kernel: &KernelSpec) -> Self {
        let scale = match kernel.tail {
            TailModel::Parametric { q, .. } if q.abs() > 1.0 => Some(q),
            _ => None,
        };
        let n_prefix = kernel.prefix_len();
        let prefix = (1..=n_prefix)
            .map(|k| match scale {
                Some(q) => kernel.term(k) / pow_int(q, k),
                None => kernel.term(k),
            })
            .collect();
        let tail = match (kernel.tail, scale) {
            (TailModel::Parametric { c, alpha, beta, .. }, Some(_)) => {
                TailModel::Parametric { c, q: 1.0, alpha, beta }
            }
            (t, _) => t,
        };
        Tilted { scale, prefix, tail, n_prefix }
    }

    pub fn b(&self, k: usize) -> f64 {
        if k <= self.n_prefix {
            self.prefix[k - 1]
        } else {
            self.tail.eval(k)
        }
    }

    pub fn coefficients(&self, len: usize) -> Vec<f64> {
        std::iter::once(0.0).chain((1..len).map(|k| self.b(k))).collect()
    }

    /// Tail ratio when the tail is a pure geometric sequence.
    pub fn geometric(&self) -> Option<(f64, f64)> {
        match self.tail {
            TailModel::Parametric { c, q, alpha, beta } if alpha == 0.0 && beta == 0.0 => Some((c, q)),
            _ => None,
        }
    }

    pub fn untilt(&self, n: usize, y: f64) -> f64 {
        match self.scale {
            Some(q) if y != 0.0 => y * pow_int(q, n),
            _ => y,
        }
    }
}

/// Collects values and enforces the early-exit and overflow contract.
pub(crate) struct Recorder<'a> {
    tilt: &'a Tilted,
    pub values: Vec<f64>,
    pub status: Status,
}

impl<'a> Recorder<'a> {
    pub fn new(tilt: &'a Tilted, capacity: usize) -> Self {
        Recorder { tilt, values: Vec::with_capacity(capacity), status: Status::Complete }
    }

    /// Records `y_n`; returns false when the trajectory must stop.
    pub fn push(&mut self, n: usize, y: f64) -> bool {
        let x = self.tilt.untilt(n, y);
        if !x.is_finite() || !y.is_finite() {
            self.status = Status::Overflow;
            return false;
        }
        self.values.push(x);
        if x.abs() > EARLY_EXIT {
            self.status = Status::EarlyExit;
            return false;
        }
        true
    }
}

/// Direct evaluation, oldest index first; Neumaier summation past index 10^4.
pub fn solve(kernel: &KernelSpec, steps: usize, x0: f64) -> Trajectory {
    assert!(steps >= 1, "steps must be at least 1");
    let tilt = Tilted::new(kernel);
    let b = tilt.coefficients(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    let mut rec = Recorder::new(&tilt, steps + 1);
    y.push(x0);
    if rec.push(0, x0) {
        for n in 1..=steps {
            let v = if n > COMPENSATE_FROM {
                neumaier((0..n).map(|i| b[n - i] * y[i]))
            } else {
                (0..n).fold(0.0, |acc, i| acc + b[n - i] * y[i])
            };
            y.push(v);
            if !rec.push(n, v) {
                break;
            }
        }
    }
    Trajectory {
        values: rec.values,
        kernel_id: kernel.id(),
        method: Method::Direct,
        status: rec.status,
    }
}

pub(crate) fn neumaier(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for t in terms {
        let u = s + t;
        if s.abs() >= t.abs() {
            comp += (s - u) + t;
        } else {
            comp += (t - u) + s;
        }
        s = u;
    }
    s + comp
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub unbounded_cutoff: f64,
    pub decay_level: f64,
    pub window_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { unbounded_cutoff: 1e12, decay_level: 1e-8, window_fraction: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpiricalKind {
    Decaying,
    BoundedNonDecaying,
    Unbounded,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub index: usize,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalVerdict {
    pub kind: EmpiricalKind,
    pub witness: Witness,
}

pub const MIN_CLASSIFY_LEN: usize = 100;
/// Largest drop of the trailing-window max against the previous window.
const WINDOW_DROP: f64 = 0.10;
/// Largest drop against the window ending at mid-horizon.
const HORIZON_DROP: f64 = 0.02;

fn window_max(values: &[f64]) -> Witness {
    values
        .iter()
        .enumerate()
        .fold(Witness { index: 0, value: 0.0 }, |w, (i, &v)| {
            if v.abs() > w.value {
                Witness { index: i, value: v.abs() }
            } else {
                w
            }
        })
}

/// Empirical reading of a trajectory.
///
/// Slow decay counts as mixed: a trailing max more than 10% below the
/// previous window, or more than 2% below the window ending at mid-horizon,
/// gives `Inconclusive` instead of `BoundedNonDecaying`.
pub fn classify(trajectory: &Trajectory, thresholds: &Thresholds) -> EmpiricalVerdict {
    let v = &trajectory.values;
    if let Some(i) = v.iter().position(|x| x.abs() > thresholds.unbounded_cutoff) {
        return EmpiricalVerdict {
            kind: EmpiricalKind::Unbounded,
            witness: Witness { index: i, value: v[i].abs() },
        };
    }
    if trajectory.status == Status::Overflow {
        return EmpiricalVerdict {
            kind: EmpiricalKind::Unbounded,
            witness: Witness { index: v.len(), value: f64::INFINITY },
        };
    }
    let len = v.len();
    let w = ((thresholds.window_fraction * len as f64).ceil() as usize).clamp(1, len.max(1));
    let trailing = |end: usize| {
        let start = end.saturating_sub(w);
        let m = window_max(&v[start..end]);
        Witness { index: start + m.index, value: m.value }
    };
    if len == 0 {
        return EmpiricalVerdict {
            kind: EmpiricalKind::Inconclusive,
            witness: Witness { index: 0, value: 0.0 },
        };
    }
    let last = trailing(len);
    let verdict = |kind| EmpiricalVerdict { kind, witness: last };
    if len < MIN_CLASSIFY_LEN {
        return verdict(EmpiricalKind::Inconclusive);
    }
    if last.value <= thresholds.decay_level {
        return verdict(EmpiricalKind::Decaying);
    }
    let previous = trailing(len - w);
    let horizon = trailing(len / 2);
    if last.value < (1.0 - WINDOW_DROP) * previous.value
        || last.value < (1.0 - HORIZON_DROP) * horizon.value
    {
        return verdict(EmpiricalKind::Inconclusive);
    }
    verdict(EmpiricalKind::BoundedNonDecaying)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(c: f64, q: f64) -> KernelSpec {
        KernelSpec::parametric(vec![], c, q, 0.0, 0.0).unwrap()
    }

    #[test]
    fn solve_examples() {
        let t = solve(&geometric(-1.0, 3.0), 5, 1.0);
        assert_eq!(t.values, vec![1.0, -3.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.method, Method::Direct);

        let t = solve(&KernelSpec::zero_tail(vec![0.5]).unwrap(), 4, 1.0);
        assert_eq!(t.values, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);

        let t = solve(&geometric(1.0, 0.5), 4, 1.0);
        assert_eq!(t.values, vec![1.0, 0.5, 0.5, 0.5, 0.5]);
        assert_eq!(t.status, Status::Complete);
        assert_eq!(t.kernel_id.len(), 64);
    }

    #[test]
    fn geometric_null_stays_exact_far_out() {
        let t = solve(&geometric(-1.0, 3.0), 1000, 1.0);
        assert_eq!(t.values.len(), 1001);
        assert!(t.values[2..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn early_exit_and_overflow() {
        let eq7 = KernelSpec::parametric(vec![], 0.5, 2.0, 1.0, 1.0).unwrap();
        let t = solve(&eq7, 500, 1.0);
        assert_eq!(t.status, Status::EarlyExit);
        assert!(t.values.last().unwrap().abs() > EARLY_EXIT);
        assert!(t.values.len() < 64);

        let t = solve(&KernelSpec::zero_tail(vec![1e200]).unwrap(), 10, 1.0);
        assert_eq!(t.status, Status::EarlyExit);
        assert_eq!(t.values, vec![1.0, 1e200]);
    }

    #[test]
    fn csv_format() {
        let t = solve(&geometric(-1.0, 3.0), 3, 1.0);
        assert_eq!(t.to_csv(), "n,x\n0,1\n1,-3\n2,0\n3,0\n");
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_g17(2.5e20), "2.5e20");
        for x in [0.1, -1.0 / 3.0, 1e-7, 6.02e23, 123456.789] {
            assert_eq!(format_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    fn traj(values: Vec<f64>) -> Trajectory {
        Trajectory { values, kernel_id: String::new(), method: Method::Direct, status: Status::Complete }
    }

    #[test]
    fn classify_examples() {
        let th = Thresholds::default();
        let eq7 = KernelSpec::parametric(vec![], 0.5, 2.0, 1.0, 1.0).unwrap();
        let v = classify(&solve(&eq7, 64, 1.0), &th);
        assert_eq!(v.kind, EmpiricalKind::Unbounded);
        assert!(v.witness.value > th.unbounded_cutoff);

        let v = classify(&solve(&geometric(1.0, 0.5), 1000, 1.0), &th);
        assert_eq!(v.kind, EmpiricalKind::BoundedNonDecaying);
        assert_eq!(v.witness.value, 0.5);

        let v = classify(&solve(&KernelSpec::zero_tail(vec![0.5]).unwrap(), 1000, 1.0), &th);
        assert_eq!(v.kind, EmpiricalKind::Decaying);
        assert!(v.witness.value <= th.decay_level);
    }

    #[test]
    fn classify_edge_cases() {
        let th = Thresholds::default();
        assert_eq!(classify(&traj(vec![1.0; 99]), &th).kind, EmpiricalKind::Inconclusive);
        assert_eq!(classify(&traj(vec![1.0; 100]), &th).kind, EmpiricalKind::BoundedNonDecaying);
        // short but already huge
        assert_eq!(classify(&traj(vec![1.0, 1e13]), &th).kind, EmpiricalKind::Unbounded);
        // slow algebraic decay is not called bounded
        let slow: Vec<f64> = (0..10_000).map(|n| 1.0 / (n as f64 + 1.0).sqrt()).collect();
        assert_eq!(classify(&traj(slow), &th).kind, EmpiricalKind::Inconclusive);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let s = neumaier([1e16, 1.0, -1e16, 1.0].into_iter());
        assert_eq!(s, 2.0);
    }
}
