//! All roots of a monic real polynomial by Aberth-Ehrlich iteration.
//!
//! After the simultaneous iteration, tight clusters are tested for being a
//! single multiple root: the cluster centroid is refined by Newton's method on
//! the `(m-1)`-th derivative and replaces the members when its residual is no
//! worse. This recovers multiple roots to near machine precision instead of
//! the `eps^(1/m)` scatter the plain iteration leaves behind.

use num_complex::Complex64;

const MAX_SWEEPS: usize = 2000;
const RESIDUAL_LIMIT: f64 = 1e-8;

/// Roots plus the accuracy data the certificates consume.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub degree: usize,
    pub roots: Vec<Complex64>,
    /// Largest normalized residual `|p(z)| / sum |c_k| |z|^k` over the roots.
    pub residual_bound: f64,
    /// Largest root modulus.
    pub r_n: f64,
}

impl RootSet {
    pub(crate) fn from_roots(coeffs: &[f64], roots: Vec<Complex64>) -> Self {
        let residual_bound = roots
            .iter()
            .map(|&z| normalized_residual(coeffs, z))
            .fold(0.0, f64::max);
        let r_n = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
        RootSet { degree: roots.len(), roots, residual_bound, r_n }
    }

    /// Root moduli, largest first.
    pub fn moduli_desc(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.roots.iter().map(|z| z.norm()).collect();
        m.sort_by(|a, b| b.total_cmp(a));
        m
    }

    /// Uncertainty attached to every root modulus before it is compared with 1.
    ///
    /// A point with normalized residual `e` lies within about `e^(1/m)` of an
    /// `m`-fold root, so `e^(1/n)` covers every multiplicity. The residual is
    /// floored at the rounding level of a degree-`n` Horner evaluation.
    pub fn modulus_margin(&self) -> f64 {
        if self.degree == 0 {
            return 0.0;
        }
        let floor = 4.0 * self.degree as f64 * f64::EPSILON;
        self.residual_bound.max(floor).powf(1.0 / self.degree as f64) * self.r_n.max(1.0)
    }

    /// Monic coefficients (descending) of `prod (z - z_i)`.
    ///
    /// Accumulated in double-double: plain expansion loses about `2^n eps`
    /// when the roots crowd the unit circle.
    pub fn expand(&self) -> Vec<Complex64> {
        let zero = (Dd::ZERO, Dd::ZERO);
        let mut c = vec![(Dd::from(1.0), Dd::ZERO)];
        for &z in &self.roots {
            let mut next = vec![zero; c.len() + 1];
            for (i, &(re, im)) in c.iter().enumerate() {
                next[i] = (next[i].0.add(re), next[i].1.add(im));
                let prod_re = re.mul(z.re).add(im.mul(-z.im));
                let prod_im = re.mul(z.im).add(im.mul(z.re));
                next[i + 1] = (next[i + 1].0.add(prod_re.neg()), next[i + 1].1.add(prod_im.neg()));
            }
            c = next;
        }
        c.into_iter().map(|(re, im)| Complex64::new(re.value(), im.value())).collect()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn neg(self) -> Self {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    fn mul(self, x: f64) -> Dd {
        let p = self.hi * x;
        let e = self.hi.mul_add(x, -p);
        let (hi, lo) = fast_two_sum(p, e + self.lo * x);
        Dd { hi, lo }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// `p(z)` and `p'(z)` for descending coefficients.
fn horner2(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(coeffs[0], 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in &coeffs[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub(crate) fn normalized_residual(coeffs: &[f64], z: Complex64) -> f64 {
    let r = z.norm();
    let scale = coeffs.iter().fold(0.0, |acc, &c| acc * r + c.abs());
    if scale == 0.0 {
        return 0.0;
    }
    horner(coeffs, z).norm() / scale
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    let d = coeffs.len() - 1;
    coeffs[..d]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (d - i) as f64)
        .collect()
}

/// Roots of the monic polynomial with descending coefficients `coeffs`.
///
/// Returns `Err(residual)` when the iteration cannot bring every normalized
/// residual under `1e-8`.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<RootSet, f64> {
    assert!(!coeffs.is_empty() && coeffs[0] == 1.0, "polynomial must be monic");
    let degree = coeffs.len() - 1;
    // exact zero roots from vanishing trailing coefficients
    let trailing = coeffs.iter().rev().take_while(|&&c| c == 0.0).count().min(degree);
    let reduced = &coeffs[..coeffs.len() - trailing];
    let mut roots = vec![Complex64::new(0.0, 0.0); trailing];
    roots.extend(aberth(reduced)?);
    let set = RootSet::from_roots(coeffs, roots);
    if set.residual_bound > RESIDUAL_LIMIT || !set.residual_bound.is_finite() {
        return Err(set.residual_bound);
    }
    Ok(set)
}

fn aberth(coeffs: &[f64]) -> Result<Vec<Complex64>, f64> {
    let d = coeffs.len() - 1;
    match d {
        0 => return Ok(vec![]),
        1 => return Ok(vec![Complex64::new(-coeffs[1], 0.0)]),
        _ => {}
    }
    let scale = coeffs[1..]
        .iter()
        .enumerate()
        .map(|(k, &c)| c.abs().powf(1.0 / (k + 1) as f64))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / d as f64 + 0.4;
            Complex64::from_polar(scale, theta)
        })
        .collect();
    let mut done = vec![false; d];
    for _ in 0..MAX_SWEEPS {
        let mut all_done = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp) = horner2(coeffs, z[i]);
            if p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                // nudge off a degenerate configuration
                z[i] += Complex64::new(1e-3 * scale, 1e-3 * scale);
                all_done = false;
                continue;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    let mut z = newton_polish(coeffs, z);
    merge_clusters(coeffs, &mut z);
    Ok(z)
}

fn newton_polish(coeffs: &[f64], z: Vec<Complex64>) -> Vec<Complex64> {
    z.into_iter()
        .map(|mut r| {
            for _ in 0..3 {
                let (p, dp) = horner2(coeffs, r);
                if dp.norm() == 0.0 {
                    break;
                }
                let cand = r - p / dp;
                if normalized_residual(coeffs, cand) < normalized_residual(coeffs, r) {
                    r = cand;
                } else {
                    break;
                }
            }
            r
        })
        .collect()
}

fn merge_clusters(coeffs: &[f64], z: &mut [Complex64]) {
    let d = z.len();
    let mut cluster_of: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let tol = 1e-3 * z[i].norm().max(z[j].norm()).max(1e-3);
            if (z[i] - z[j]).norm() <= tol {
                let (a, b) = (find(&mut cluster_of, i), find(&mut cluster_of, j));
                cluster_of[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..d {
        let r = find(&mut cluster_of, i);
        groups.entry(r).or_default().push(i);
    }
    let noise = 8.0 * f64::EPSILON * (d as f64);
    for members in groups.values().filter(|m| m.len() > 1) {
        let m = members.len();
        let centroid: Complex64 = members.iter().map(|&i| z[i]).sum::<Complex64>() / m as f64;
        let worst = members
            .iter()
            .map(|&i| normalized_residual(coeffs, z[i]))
            .fold(0.0, f64::max);
        // the m-fold root is a simple root of the (m-1)-th derivative
        let mut dc = coeffs.to_vec();
        for _ in 1..m {
            dc = derivative(&dc);
        }
        let mut cand = centroid;
        for _ in 0..50 {
            let (p, dp) = horner2(&dc, cand);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            cand -= step;
            if step.norm() <= f64::EPSILON * cand.norm().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let cand_res = normalized_residual(coeffs, cand);
        let best = if cand_res <= normalized_residual(coeffs, centroid) {
            cand
        } else {
            centroid
        };
        let best_res = normalized_residual(coeffs, best);
        if best_res <= 4.0 * worst + noise {
            // real polynomials: a cluster straddling the axis collapses onto it
            let best = if best.im.abs() <= 1e-14 * best.norm() {
                Complex64::new(best.re, 0.0)
            } else {
                best
            };
            for &i in members {
                z[i] = best;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(rs: &RootSet) -> Vec<f64> {
        let mut v: Vec<f64> = rs.roots.iter().map(|z| z.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn double_roots_are_recovered_exactly() {
        let rs = polynomial_roots(&[1.0, -1.5, 0.5625]).unwrap();
        assert!((rs.r_n - 0.75).abs() < 1e-12, "{rs:?}");
        let rs = polynomial_roots(&[1.0, -4.0, 4.0]).unwrap();
        for z in &rs.roots {
            assert!((z - Complex64::new(2.0, 0.0)).norm() < 1e-12, "{rs:?}");
        }
    }

    #[test]
    fn simple_real_roots() {
        // (z-1)(z-2)(z-3)
        let rs = polynomial_roots(&[1.0, -6.0, 11.0, -6.0]).unwrap();
        let re = sorted_re(&rs);
        for (got, want) in re.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((rs.r_n - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_roots_are_split_off() {
        let rs = polynomial_roots(&[1.0, -0.5, 0.0, 0.0]).unwrap();
        assert_eq!(rs.degree, 3);
        assert_eq!(rs.roots.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert_eq!(rs.r_n, 0.5);
        let rs = polynomial_roots(&[1.0, 0.0]).unwrap();
        assert_eq!(rs.roots, vec![Complex64::new(0.0, 0.0)]);
        assert_eq!(rs.r_n, 0.0);
    }

    #[test]
    fn complex_double_pair() {
        // (z^2 + 4/9)^2 (z - 1/2)^2
        let a = [1.0, 0.0, 4.0 / 9.0];
        let b = [1.0, -1.0, 0.25];
        let mut sq = vec![0.0; 5];
        for i in 0..3 {
            for j in 0..3 {
                sq[i + j] += a[i] * a[j];
            }
        }
        let mut p = vec![0.0; 7];
        for i in 0..5 {
            for j in 0..3 {
                p[i + j] += sq[i] * b[j];
            }
        }
        let rs = polynomial_roots(&p).unwrap();
        assert!((rs.r_n - 2.0 / 3.0).abs() < 1e-9, "{}", rs.r_n);
    }

    #[test]
    fn expansion_reproduces_coefficients() {
        let coeffs = [1.0, -0.3, 0.7, -1.1, 0.05, 0.2];
        let rs = polynomial_roots(&coeffs).unwrap();
        let e = rs.expand();
        for (c, x) in coeffs.iter().zip(e.iter()) {
            assert!((x.re - c).abs() < 1e-12 && x.im.abs() < 1e-12);
        }
    }

    #[test]
    fn margin_is_positive_and_small_for_clean_roots() {
        let rs = polynomial_roots(&[1.0, -1.5, 0.5625]).unwrap();
        let m = rs.modulus_margin();
        assert!(m > 0.0 && m < 1e-7, "{m}");
    }
}
