//! The `delta_n` profile of a root set and its cheap lower bounds.

use serde::Serialize;

use super::roots::RootSet;
use crate::error::{Error, Result};

const GOLDEN_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-9;

/// `delta_n(rho) = prod |1 - rho |z_i||`.
pub fn delta(moduli: &[f64], rho: f64) -> f64 {
    moduli.iter().map(|&m| (1.0 - rho * m).abs()).product()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaMax {
    pub rho0: f64,
    pub value: f64,
    pub profile_kinks: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EBoundKind {
    E1,
    E2,
    E3,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EBound {
    pub kind: EBoundKind,
    pub value: f64,
    pub rho: f64,
}

fn require_outside(roots: &RootSet) -> Result<()> {
    if roots.r_n > 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "delta profile needs r_n > 1, got r_n = {}",
            roots.r_n
        )))
    }
}

/// Maximum of `delta_n` over `[1/r_n, 1]`.
///
/// Between consecutive kinks `1/|z_i|` every factor keeps its sign, so
/// `log delta_n` is concave there; golden-section search finds each piece's
/// maximum and the endpoints are checked directly.
pub fn maximize_delta(roots: &RootSet) -> Result<DeltaMax> {
    require_outside(roots)?;
    let moduli = roots.moduli_desc();
    let lo = 1.0 / roots.r_n;
    let mut kinks: Vec<f64> = moduli
        .iter()
        .filter(|&&m| m > 1.0)
        .map(|&m| 1.0 / m)
        .filter(|&b| b > lo && b < 1.0)
        .collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();

    let mut breaks = Vec::with_capacity(kinks.len() + 2);
    breaks.push(lo);
    breaks.extend(kinks.iter().copied());
    breaks.push(1.0);

    let mut best = (1.0, delta(&moduli, 1.0));
    for &b in &breaks {
        let v = delta(&moduli, b);
        if v > best.1 {
            best = (b, v);
        }
    }
    for w in breaks.windows(2) {
        let (rho, v) = golden_max(|r| delta(&moduli, r), w[0], w[1]);
        if v > best.1 {
            best = (rho, v);
        }
    }
    Ok(DeltaMax { rho0: best.0, value: best.1, profile_kinks: kinks })
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(c, fc), (d, fd), (mid, fm)]
        .into_iter()
        .fold((mid, fm), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Closed-form lower bounds for `delta_n(rho_0)` read off the sorted moduli.
pub fn e_bounds(roots: &RootSet) -> Result<EBound> {
    require_outside(roots)?;
    let moduli = roots.moduli_desc();
    let n = moduli.len() as i32;
    // moduli within UNIT_TOL of 1 count as lying on the circle
    let outside = moduli.iter().take_while(|&&m| m > 1.0 + UNIT_TOL).count();
    if outside == 0 {
        // every root within tolerance of the circle
        return Ok(EBound { kind: EBoundKind::NotApplicable, value: 0.0, rho: 1.0 });
    }
    let i0 = outside - 1;
    if outside == moduli.len() {
        let last = moduli[i0];
        return Ok(EBound { kind: EBoundKind::E1, value: (last - 1.0).abs().powi(n), rho: 1.0 });
    }
    let next = moduli[i0 + 1];
    if next < 1.0 - UNIT_TOL {
        let value = (1.0 - moduli[i0]).abs().powi(n).min((1.0 - next).abs().powi(n));
        return Ok(EBound { kind: EBoundKind::E2, value, rho: 1.0 });
    }
    let rho1 = 2.0 / (moduli[i0] + 1.0);
    let value = (1.0 - rho1 * moduli[i0]).abs().powi(n);
    Ok(EBound { kind: EBoundKind::E3, value, rho: rho1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn set(moduli: &[f64]) -> RootSet {
        let roots = moduli.iter().map(|&m| Complex64::new(m, 0.0)).collect::<Vec<_>>();
        let r_n = moduli.iter().copied().fold(0.0, f64::max);
        RootSet { degree: roots.len(), roots, residual_bound: 0.0, r_n }
    }

    fn grid_max(moduli: &[f64], points: usize) -> f64 {
        let r = moduli.iter().copied().fold(0.0, f64::max);
        let lo = 1.0 / r;
        (0..=points)
            .map(|i| delta(moduli, lo + (1.0 - lo) * i as f64 / points as f64))
            .fold(0.0, f64::max)
    }

    #[test]
    fn delta_examples() {
        let d = maximize_delta(&set(&[2.0, 2.0])).unwrap();
        assert_eq!(d.rho0, 1.0);
        assert!((d.value - 1.0).abs() < 1e-15);
        assert!(d.value >= grid_max(&[2.0, 2.0], 10_000));

        let d = maximize_delta(&set(&[2.0])).unwrap();
        assert_eq!((d.rho0, d.value), (1.0, 1.0));

        let d = maximize_delta(&set(&[2.0, 0.5])).unwrap();
        assert_eq!(d.rho0, 1.0);
        assert!((d.value - 0.5).abs() < 1e-15);
        assert!(d.value >= grid_max(&[2.0, 0.5], 10_000));
    }

    #[test]
    fn interior_maximum_is_found() {
        // delta(rho) = (3 rho - 1)(1 - 0.9 rho): peak inside [1/3, 1]
        let m = [3.0, 0.9];
        let d = maximize_delta(&set(&m)).unwrap();
        let peak = (3.0 + 0.9) / (2.0 * 3.0 * 0.9);
        assert!((d.rho0 - peak).abs() < 1e-6, "{d:?}");
        assert!(d.value >= grid_max(&m, 100_000) - 1e-15);
    }

    #[test]
    fn kinks_are_reported() {
        let d = maximize_delta(&set(&[4.0, 2.0, 0.3])).unwrap();
        assert_eq!(d.profile_kinks, vec![0.5]);
    }

    #[test]
    fn e_bound_examples() {
        let e = e_bounds(&set(&[2.0, 2.0])).unwrap();
        assert_eq!((e.kind, e.value, e.rho), (EBoundKind::E1, 1.0, 1.0));
        let e = e_bounds(&set(&[2.0, 0.5])).unwrap();
        assert_eq!((e.kind, e.value), (EBoundKind::E2, 0.25));
        let e = e_bounds(&set(&[2.0, 1.0])).unwrap();
        assert_eq!(e.kind, EBoundKind::E3);
        assert!((e.rho - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.value - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_below_unit_circle() {
        assert!(matches!(maximize_delta(&set(&[0.5, 0.2])), Err(Error::Domain(_))));
        assert!(matches!(e_bounds(&set(&[1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn left_endpoint_vanishes() {
        let m = [3.0, 1.5, 0.2];
        assert_eq!(delta(&m, 1.0 / 3.0), 0.0);
    }
}
