//! Truncated characteristic function `s_n(z) = 1 - sum_{k<=n} a_k z^k`, its
//! reversed polynomial `p_n(z) = z^n - a_1 z^{n-1} - ... - a_n`, and the
//! quantities built on the roots of `p_n`.

mod delta;
mod roots;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

pub use delta::{delta, e_bounds, maximize_delta, DeltaMax, EBound, EBoundKind};
pub use roots::{polynomial_roots, RootSet};

/// `s_n(z)` by Horner's rule.
pub fn partial_sum_eval(kernel: &KernelSpec, n: usize, z: Complex64) -> Complex64 {
    assert!(n >= 1);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        acc = acc * z + kernel.term(k);
    }
    Complex64::new(1.0, 0.0) - acc * z
}

/// Descending coefficients `[1, -a_1, ..., -a_n]` of `p_n`.
pub fn pn_coefficients(kernel: &KernelSpec, n: usize) -> Vec<f64> {
    std::iter::once(1.0)
        .chain((1..=n).map(|k| -kernel.term(k)))
        .collect()
}

/// `p_n(z)` by Horner's rule.
pub fn pn_eval(kernel: &KernelSpec, n: usize, z: Complex64) -> Complex64 {
    pn_coefficients(kernel, n)
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn pn_roots(kernel: &KernelSpec, n: usize) -> Result<RootSet> {
    assert!(n >= 1);
    let coeffs = pn_coefficients(kernel, n);
    polynomial_roots(&coeffs).map_err(|residual| Error::NonConvergence { degree: n, residual })
}

/// Minimum of `|s_n(e^{i theta})|` over `grid_points` equally spaced angles,
/// with the point where it occurs.
pub fn circle_min_modulus(kernel: &KernelSpec, n: usize, grid_points: usize) -> (f64, Complex64) {
    assert!(grid_points >= 16, "grid_points must be at least 16");
    circle_profile(kernel, n, grid_points)
        .into_iter()
        .enumerate()
        .fold((f64::INFINITY, Complex64::new(1.0, 0.0)), |best, (j, v)| {
            if v < best.0 {
                (v, circle_point(j, grid_points))
            } else {
                best
            }
        })
}

pub(crate) fn circle_point(j: usize, grid_points: usize) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / grid_points as f64)
}

/// `|s_n|` on the uniform circle grid, starting at `theta = 0`.
pub(crate) fn circle_profile(kernel: &KernelSpec, n: usize, grid_points: usize) -> Vec<f64> {
    let a = kernel.terms(n);
    (0..grid_points)
        .map(|j| {
            let z = circle_point(j, grid_points);
            let mut acc = Complex64::new(0.0, 0.0);
            for &ak in a.iter().rev() {
                acc = acc * z + ak;
            }
            (Complex64::new(1.0, 0.0) - acc * z).norm()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn partial_sum_examples() {
        let k = KernelSpec::parametric(vec![1.5, -0.5625], 400.0, 0.05, 0.0, 0.0).unwrap();
        assert_eq!(partial_sum_eval(&k, 5, c(0.0)), c(1.0));
        assert_eq!(partial_sum_eval(&k, 2, c(1.0)), c(1.0 / 16.0));
        let k = KernelSpec::zero_tail(vec![4.0, -4.0]).unwrap();
        assert_eq!(partial_sum_eval(&k, 2, c(0.5)), c(0.0));
    }

    #[test]
    fn reversal_identity_spot_check() {
        let k = KernelSpec::parametric(vec![0.3, -1.2], 2.0, -0.7, 1.0, 0.0).unwrap();
        let z = Complex64::new(0.4, -1.3);
        let lhs = partial_sum_eval(&k, 7, z);
        let rhs = z.powu(7) * pn_eval(&k, 7, z.inv());
        assert!((lhs - rhs).norm() < 1e-12 * z.norm().powi(7).max(1.0));
    }

    #[test]
    fn root_examples() {
        let k = KernelSpec::parametric(vec![1.5, -0.5625], 400.0, 0.05, 0.0, 0.0).unwrap();
        let rs = pn_roots(&k, 2).unwrap();
        assert!((rs.r_n - 0.75).abs() < 1e-9);
        let k = KernelSpec::zero_tail(vec![4.0, -4.0]).unwrap();
        let rs = pn_roots(&k, 2).unwrap();
        assert!(rs.roots.iter().all(|z| (z - c(2.0)).norm() < 1e-9));
        let z = KernelSpec::zero_tail(vec![0.0]).unwrap();
        let rs = pn_roots(&z, 1).unwrap();
        assert_eq!((rs.roots.clone(), rs.r_n), (vec![c(0.0)], 0.0));
    }

    #[test]
    fn table_kernel_root_moduli() {
        let k = KernelSpec::parametric(
            vec![1.0, -41.0 / 36.0, 8.0 / 9.0, -34.0 / 81.0, 16.0 / 81.0, -4.0 / 81.0],
            1.0 / 64.0,
            0.5,
            0.0,
            0.0,
        )
        .unwrap();
        // frozen from a 40-digit polyroots run
        for (n, want) in [(2, 1.067187373), (3, 1.012036503), (4, 0.9127523245), (5, 0.7813238059), (6, 2.0 / 3.0)] {
            let rs = pn_roots(&k, n).unwrap();
            assert!((rs.r_n - want).abs() < 5e-4, "n={n} r={}", rs.r_n);
            assert_eq!(rs.degree, n);
        }
    }

    #[test]
    fn circle_minimum_examples() {
        let k = KernelSpec::zero_tail(vec![0.5]).unwrap();
        let (m, z) = circle_min_modulus(&k, 1, 64);
        assert!((m - 0.5).abs() < 1e-15);
        assert_eq!(z, c(1.0));

        let g = KernelSpec::parametric(vec![], 1.0, 0.5, 0.0, 0.0).unwrap();
        let (m, z) = circle_min_modulus(&g, 20, 4096);
        assert!(m < 1e-5, "{m}");
        assert!(z.arg().abs() < 1e-12);

        let c0 = 1.0 / 1.202_056_903_159_594_3;
        let k = KernelSpec::parametric(vec![], c0, -1.0, 3.0, 0.0).unwrap();
        let (m, z) = circle_min_modulus(&k, 200, 4096);
        assert!(m < 1e-4, "{m}");
        assert!((z.arg().abs() - PI).abs() < 1e-9);
    }
}
