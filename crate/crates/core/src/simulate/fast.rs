//! Online convolution by divide and conquer.
//!
//! `solve(l, r)` first finishes `[l, m)`, then adds the contribution of
//! `y[l..m)` to every `n` in `[m, r)` with one cyclic convolution of length
//! `2(m - l)`, then recurses on `[m, r)`. Each level costs `O(len log len)`.
//! Pure geometric tails skip the convolution altogether: their contribution
//! obeys a first-order recurrence.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{neumaier, Method, Recorder, Tilted, Trajectory};
use crate::kernel::{pow_int, KernelSpec};

const LEAF: usize = 64;

pub fn solve_fast(kernel: &KernelSpec, steps: usize, x0: f64) -> Trajectory {
    assert!(steps >= 1, "steps must be at least 1");
    let tilt = Tilted::new(kernel);
    let len = steps + 1;
    let mut rec = Recorder::new(&tilt, len);
    match tilt.geometric() {
        Some((c, g)) => geometric_tail(&tilt, c, g, len, x0, &mut rec),
        None => {
            // a nonnegative kernel keeps every x_n on the side of x0; FFT
            // rounding may not
            let sign = if kernel.is_nonnegative() { x0.signum() } else { 0.0 };
            Relaxed::new(&tilt, len, x0, sign).run(&mut rec)
        }
    }
    Trajectory {
        values: rec.values,
        kernel_id: kernel.id(),
        method: Method::FftBlocked,
        status: rec.status,
    }
}

/// Prefix terms summed directly; the tail `T_n = sum_{i < n-N} c g^{n-i} y_i`
/// follows `T_n = g T_{n-1} + c g^{N+1} y_{n-N-1}`.
fn geometric_tail(tilt: &Tilted, c: f64, g: f64, len: usize, x0: f64, rec: &mut Recorder) {
    let np = tilt.n_prefix;
    let feed = c * pow_int(g, np + 1);
    let mut y = Vec::with_capacity(len);
    let (mut t, mut t_comp) = (0.0f64, 0.0f64);
    y.push(x0);
    if !rec.push(0, x0) {
        return;
    }
    for n in 1..len {
        if n > np {
            let term = feed * y[n - np - 1];
            if g == 1.0 {
                let s = t + term;
                t_comp += if t.abs() >= term.abs() { (t - s) + term } else { (term - s) + t };
                t = s;
            } else {
                t = g * t + term;
            }
        }
        let lo = n.saturating_sub(np);
        let head = (lo..n).map(|i| tilt.prefix[n - i - 1] * y[i]);
        let v = neumaier(head.chain([t, t_comp]));
        y.push(v);
        if !rec.push(n, v) {
            return;
        }
    }
}

struct Level {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    b_hat: Vec<Complex64>,
}

struct Relaxed {
    len: usize,
    b: Vec<f64>,
    y: Vec<f64>,
    acc: Vec<f64>,
    sign: f64,
    planner: FftPlanner<f64>,
    levels: HashMap<usize, Level>,
}

impl Relaxed {
    fn new(tilt: &Tilted, len: usize, x0: f64, sign: f64) -> Self {
        let size = len.next_power_of_two().max(LEAF);
        let mut y = vec![0.0; size];
        y[0] = x0;
        Relaxed {
            len,
            b: tilt.coefficients(size),
            y,
            acc: vec![0.0; size],
            sign,
            planner: FftPlanner::new(),
            levels: HashMap::new(),
        }
    }

    fn run(mut self, rec: &mut Recorder) {
        let size = self.y.len();
        self.solve(0, size, rec);
    }

    fn solve(&mut self, l: usize, r: usize, rec: &mut Recorder) -> bool {
        if l >= self.len {
            return true;
        }
        if r - l <= LEAF {
            return self.leaf(l, r.min(self.len), rec);
        }
        let m = (l + r) / 2;
        if !self.solve(l, m, rec) {
            return false;
        }
        if m >= self.len {
            return true;
        }
        self.contribute(l, m, r);
        self.solve(m, r, rec)
    }

    fn leaf(&mut self, l: usize, r: usize, rec: &mut Recorder) -> bool {
        for n in l..r {
            if n > 0 {
                let direct = (l..n).fold(0.0, |s, i| s + self.b[n - i] * self.y[i]);
                let v = self.acc[n] + direct;
                self.y[n] = if self.sign * v < 0.0 { 0.0 } else { v };
            }
            if !rec.push(n, self.y[n]) {
                return false;
            }
        }
        true
    }

    /// `acc[n] += sum_{i in [l, m)} b[n - i] y[i]` for `n` in `[m, r)`.
    fn contribute(&mut self, l: usize, m: usize, r: usize) {
        let half = m - l;
        let size = 2 * half;
        if !self.levels.contains_key(&half) {
            let fwd = self.planner.plan_fft_forward(size);
            let inv = self.planner.plan_fft_inverse(size);
            let mut b_hat: Vec<Complex64> =
                self.b[..size].iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fwd.process(&mut b_hat);
            self.levels.insert(half, Level { fwd, inv, b_hat });
        }
        let level = &self.levels[&half];
        let mut buf: Vec<Complex64> = (0..size)
            .map(|j| Complex64::new(if j < half { self.y[l + j] } else { 0.0 }, 0.0))
            .collect();
        level.fwd.process(&mut buf);
        for (u, v) in buf.iter_mut().zip(&level.b_hat) {
            *u *= v;
        }
        level.inv.process(&mut buf);
        let scale = 1.0 / size as f64;
        // wrapped products land below index `half` and are never read
        for n in m..r.min(self.len) {
            self.acc[n] += buf[n - l].re * scale;
        }
    }
}
