#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use volterra::charfun::RootSet;
use volterra::{KernelSpec, SumMode, TailModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn abs_sum_hi(k: &KernelSpec) -> f64 {
    k.series_sum(SumMode::Absolute, 1e-12).hi().expect("geometric tails converge")
}

fn scaled(prefix: &[f64], tail: TailModel, factor: f64) -> KernelSpec {
    let tail = match tail {
        TailModel::Zero => TailModel::Zero,
        TailModel::Parametric { c, q, alpha, beta } => TailModel::Parametric { c: c * factor, q, alpha, beta },
    };
    KernelSpec::new(prefix.iter().map(|v| v * factor).collect(), tail).unwrap()
}

/// Random prefix (length 0..=6) plus a tail `c q^n / (n^alpha (n+1)^beta)` with
/// `|q| <= 0.9`, rescaled so that `sum |a_n|` lands in `(0, max_abs_sum]`.
pub fn random_kernel(rng: &mut ChaCha8Rng, max_abs_sum: f64, pure_geometric: bool) -> KernelSpec {
    let len = rng.gen_range(0..=6);
    let prefix: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c = rng.gen_range(-1.0..1.0);
    let q = rng.gen_range(-0.9..0.9);
    let (alpha, beta) = if pure_geometric {
        (0.0, 0.0)
    } else {
        (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0))
    };
    let tail = TailModel::Parametric { c, q, alpha, beta };
    let raw = KernelSpec::new(prefix.clone(), tail).unwrap();
    let s = abs_sum_hi(&raw);
    if s == 0.0 {
        return raw;
    }
    let target = max_abs_sum * rng.gen_range(0.05..1.0);
    let mut factor = target / s;
    loop {
        let k = scaled(&prefix, tail, factor);
        if abs_sum_hi(&k) <= max_abs_sum {
            return k;
        }
        factor *= 0.999;
    }
}

/// Random root set with `r_n > 1`; some moduli sit exactly on the unit circle.
pub fn random_root_set(rng: &mut ChaCha8Rng) -> RootSet {
    let n = rng.gen_range(1..=12);
    let mut roots: Vec<Complex64> = (0..n)
        .map(|_| {
            let m = match rng.gen_range(0..6) {
                0 => 1.0,
                1 => rng.gen_range(0.0..0.5),
                _ => rng.gen_range(0.2..3.0),
            };
            Complex64::from_polar(m, rng.gen_range(-PI..PI))
        })
        .collect();
    roots[0] = Complex64::from_polar(rng.gen_range(1.01..4.0), rng.gen_range(-PI..PI));
    let r_n = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    RootSet { degree: n, roots, residual_bound: 0.0, r_n }
}

/// Random kernel with `n` prefix entries in `[-1, 1]` and a random geometric tail.
pub fn random_poly_kernel(rng: &mut ChaCha8Rng, n: usize) -> KernelSpec {
    let prefix: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    KernelSpec::parametric(prefix, rng.gen_range(-1.0..1.0), rng.gen_range(-0.9..0.9), 0.0, 0.0).unwrap()
}

/// `p_n` re-expanded from its roots matches the coefficients: relative 1e-8 on
/// coefficients of magnitude at least 1e-12.
pub fn reexpansion_ok(k: &KernelSpec, n: usize) -> Result<(), String> {
    let rs = volterra::charfun::pn_roots(k, n).map_err(|e| e.to_string())?;
    let want = volterra::charfun::pn_coefficients(k, n);
    let got = rs.expand();
    for (i, (w, g)) in want.iter().zip(&got).enumerate() {
        if w.abs() >= 1e-12 && (g - w).norm() > 1e-8 * w.abs() {
            return Err(format!("n={n} coefficient {i}: want {w}, got {g}"));
        }
    }
    Ok(())
}

/// `|s_n(z) - z^n p_n(1/z)| <= 1e-10 max(1, |z|^n)`.
pub fn reversal_ok(k: &KernelSpec, n: usize, z: Complex64) -> Result<(), String> {
    let lhs = volterra::charfun::partial_sum_eval(k, n, z);
    let rhs = z.powu(n as u32) * volterra::charfun::pn_eval(k, n, z.inv());
    let tol = 1e-10 * z.norm().powi(n as i32).max(1.0);
    if (lhs - rhs).norm() <= tol {
        Ok(())
    } else {
        Err(format!("n={n} z={z}: {lhs} vs {rhs}"))
    }
}

pub fn random_unit_annulus_point(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = 10f64.powf(rng.gen_range(-1.0..1.0));
    Complex64::from_polar(r, rng.gen_range(-PI..PI))
}
