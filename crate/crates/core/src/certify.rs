//! Stability certificates and the ordered pipeline that combines them.
//!
//! Rigorous certificates compare interval enclosures only, with the certified
//! side strict. Root moduli enter through [`RootSet::modulus_margin`]: `r_n` is
//! inflated by it before a stability comparison and deflated before an
//! instability one, and every `delta` factor loses `rho * margin`.

use serde::Serialize;

use crate::charfun::{self, EBoundKind, RootSet};
use crate::interval::Interval;
use crate::kernel::{power_series_at, KernelSpec, SumEnclosure, SumMode, SupportGcd};
use crate::simulate::{self, EmpiricalKind, EmpiricalVerdict, Method, Status, Thresholds};

pub const DEFAULT_MAX_DEGREE: usize = 32;
pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const DEFAULT_STEPS: usize = 10_000;
/// Smallest degree the marginal test looks at.
pub const MARGINAL_MIN_DEGREE: usize = 16;

const SERIES_PRECISION: f64 = 1e-10;
const EFP_WIDTH: f64 = 1e-9;
const INSIDE_TOL: f64 = 1e-6;
/// Near-zero runs may cover at most this share of the circle grid.
const MAX_RUN_SHARE: f64 = 0.01;
const LINEARITY: (f64, f64) = (1.5, 2.5);
/// Above this many steps the empirical fallback uses the FFT solver.
const FAST_FROM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AsymptoticallyStable,
    Stable,
    Unstable,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Criterion {
    AbsoluteSum,
    #[serde(rename = "EFP")]
    Efp,
    RealAxisRoot,
    RoucheStable,
    RoucheUnstable,
    MarginalStable,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::AbsoluteSum => "AbsoluteSum",
            Criterion::Efp => "EFP",
            Criterion::RealAxisRoot => "RealAxisRoot",
            Criterion::RoucheStable => "RoucheStable",
            Criterion::RoucheUnstable => "RoucheUnstable",
            Criterion::MarginalStable => "MarginalStable",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rigor {
    Rigorous,
    Heuristic,
    Empirical,
}

/// Which lower bound a Rouché comparison used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoucheBound {
    /// `(1 - r_n)^n`
    Stability,
    E1,
    E2,
    E3,
    /// `delta_n(rho_0)` from the full maximization.
    Delta,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Sum {
        absolute_sum: SumEnclosure,
    },
    Renewal {
        nonnegative: bool,
        support_gcd: Option<u64>,
        sum: SumEnclosure,
        first_moment: SumEnclosure,
    },
    RealRoot {
        /// The root of `1 - a(t)` lies strictly inside this bracket.
        bracket: [f64; 2],
        /// Enclosure of `1 - a(t)` at the far end of the bracket.
        b_at_end: Interval,
    },
    Rouche {
        n: usize,
        r_n: f64,
        margin: f64,
        tail: SumEnclosure,
        bound: RoucheBound,
        bound_value: f64,
        rho: f64,
    },
    CircleZeros {
        n: usize,
        /// Arguments in `(-pi, pi]` of the located zeros of `s_n` on `|z| = 1`.
        thetas: Vec<f64>,
        min_modulus: Vec<f64>,
        threshold: f64,
    },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub criterion: Criterion,
    pub rigor: Rigor,
    pub witness: Witness,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Certificate {
    fn fires(criterion: Criterion, verdict: Verdict, rigor: Rigor, witness: Witness) -> Self {
        Certificate { verdict, criterion, rigor, witness, reason: None }
    }

    fn not_applicable(criterion: Criterion, rigor: Rigor, witness: Witness, reason: impl Into<String>) -> Self {
        Certificate {
            verdict: Verdict::NotApplicable,
            criterion,
            rigor,
            witness,
            reason: Some(reason.into()),
        }
    }

    pub fn is_rigorous_hit(&self) -> bool {
        self.rigor == Rigor::Rigorous && self.verdict != Verdict::NotApplicable
    }
}

/// `1 - 4 k u`: relative slack for a product of `k` rounded factors.
fn shrink(k: usize) -> f64 {
    1.0 - 4.0 * (k as f64 + 1.0) * f64::EPSILON
}

pub fn test_absolute_sum(kernel: &KernelSpec) -> Certificate {
    let sum = kernel.series_sum(SumMode::Absolute, SERIES_PRECISION);
    let witness = Witness::Sum { absolute_sum: sum };
    match sum.hi() {
        Some(hi) if hi < 1.0 => {
            Certificate::fires(Criterion::AbsoluteSum, Verdict::AsymptoticallyStable, Rigor::Rigorous, witness)
        }
        Some(_) => Certificate::not_applicable(Criterion::AbsoluteSum, Rigor::Rigorous, witness, "sum |a_n| not below 1"),
        None => Certificate::not_applicable(
            Criterion::AbsoluteSum,
            Rigor::Rigorous,
            witness,
            "sum |a_n| not certified finite",
        ),
    }
}

pub fn test_efp(kernel: &KernelSpec) -> Certificate {
    let nonnegative = kernel.is_nonnegative();
    let support_gcd = match kernel.support_gcd() {
        SupportGcd::Value(g) => Some(g),
        SupportGcd::Undefined => None,
    };
    let sum = kernel.series_sum(SumMode::Plain, 1e-12);
    let first_moment = kernel.series_sum(SumMode::FirstMoment, SERIES_PRECISION);
    let unit_sum = sum.contains(1.0) && sum.width().is_some_and(|w| w <= EFP_WIDTH);
    let witness = Witness::Renewal { nonnegative, support_gcd, sum, first_moment };
    let reason = if !nonnegative {
        Some("negative coefficients")
    } else if support_gcd != Some(1) {
        Some("support gcd is not 1")
    } else if !unit_sum {
        Some("sum a_n not certified equal to 1")
    } else if !first_moment.is_divergent() {
        Some("sum n a_n not certified infinite")
    } else {
        None
    };
    match reason {
        None => Certificate::fires(Criterion::Efp, Verdict::AsymptoticallyStable, Rigor::Rigorous, witness),
        Some(r) => Certificate::not_applicable(Criterion::Efp, Rigor::Rigorous, witness, r),
    }
}

/// Enclosure of `b(t) = 1 - a(t)`, tightened once when the first pass is inconclusive.
fn b_enclosure(kernel: &KernelSpec, t: f64) -> Option<Interval> {
    let first = power_series_at(kernel, t, 1e-6).interval()?;
    let b = Interval::ONE.sub(first);
    if b.hi < 0.0 || b.lo > 0.0 {
        return Some(b);
    }
    power_series_at(kernel, t, 1e-12).interval().map(|a| Interval::ONE.sub(a))
}

/// Scans `t = +-T j / grid_points`, `T = min(1, R)`, for a certified negative value of `1 - a(t)`.
///
/// The endpoints `+-T` are used only when the series has a finite enclosure there.
pub fn test_real_axis_root(kernel: &KernelSpec, grid_points: usize) -> Certificate {
    assert!(grid_points >= 2, "grid_points must be at least 2");
    let reach = kernel.radius_of_convergence().min(1.0);
    for side in [1.0, -1.0] {
        let mut last_positive = 0.0;
        for j in 1..=grid_points {
            let t = side * reach * j as f64 / grid_points as f64;
            let Some(b) = b_enclosure(kernel, t) else {
                continue;
            };
            if b.hi < 0.0 {
                let bracket = if side > 0.0 { [last_positive, t] } else { [t, last_positive] };
                return Certificate::fires(
                    Criterion::RealAxisRoot,
                    Verdict::Unstable,
                    Rigor::Rigorous,
                    Witness::RealRoot { bracket, b_at_end: b },
                );
            }
            if b.lo > 0.0 {
                last_positive = t;
            }
        }
    }
    Certificate::not_applicable(
        Criterion::RealAxisRoot,
        Rigor::Rigorous,
        Witness::None,
        "no certified sign change of 1 - a(t) on the real axis",
    )
}

fn roots_or_reason(kernel: &KernelSpec, n: usize) -> Result<RootSet, String> {
    charfun::pn_roots(kernel, n).map_err(|e| e.to_string())
}

pub fn test_rouche_stable(kernel: &KernelSpec, n: usize) -> Certificate {
    assert!(n >= 1);
    let c = Criterion::RoucheStable;
    let tail = kernel.tail_abs_sum(n);
    let Some(tail_hi) = tail.hi() else {
        return Certificate::not_applicable(c, Rigor::Rigorous, Witness::None, "tail sum not certified finite");
    };
    let roots = match roots_or_reason(kernel, n) {
        Ok(r) => r,
        Err(e) => return Certificate::not_applicable(c, Rigor::Rigorous, Witness::None, e),
    };
    let margin = roots.modulus_margin();
    let r_up = (roots.r_n + margin).next_up();
    let bound_value = if r_up < 1.0 {
        (1.0 - r_up).next_down().powi(n as i32) * shrink(n)
    } else {
        0.0
    };
    let witness = Witness::Rouche {
        n,
        r_n: roots.r_n,
        margin,
        tail,
        bound: RoucheBound::Stability,
        bound_value,
        rho: 1.0,
    };
    if r_up >= 1.0 {
        Certificate::not_applicable(c, Rigor::Rigorous, witness, "r_n not certified below 1")
    } else if tail_hi < bound_value {
        Certificate::fires(c, Verdict::AsymptoticallyStable, Rigor::Rigorous, witness)
    } else {
        Certificate::not_applicable(c, Rigor::Rigorous, witness, "tail not below (1 - r_n)^n")
    }
}

/// Lower bound for `min |s_n|` on `|z| = rho` that survives the root uncertainty.
fn delta_lower(moduli: &[f64], rho: f64, margin: f64) -> f64 {
    let p: f64 = moduli
        .iter()
        .map(|&m| ((1.0 - rho * m).abs() - rho * margin).max(0.0))
        .product();
    p * shrink(2 * moduli.len())
}

pub fn test_rouche_unstable(kernel: &KernelSpec, n: usize) -> Certificate {
    assert!(n >= 1);
    let c = Criterion::RoucheUnstable;
    let tail = kernel.tail_abs_sum(n);
    let Some(tail_hi) = tail.hi() else {
        return Certificate::not_applicable(c, Rigor::Rigorous, Witness::None, "tail sum not certified finite");
    };
    let roots = match roots_or_reason(kernel, n) {
        Ok(r) => r,
        Err(e) => return Certificate::not_applicable(c, Rigor::Rigorous, Witness::None, e),
    };
    let margin = roots.modulus_margin();
    let r_down = (roots.r_n - margin).next_down();
    let witness = |bound, bound_value, rho| Witness::Rouche {
        n,
        r_n: roots.r_n,
        margin,
        tail,
        bound,
        bound_value,
        rho,
    };
    if r_down <= 1.0 {
        return Certificate::not_applicable(
            c,
            Rigor::Rigorous,
            witness(RoucheBound::Delta, 0.0, 1.0),
            "r_n not certified above 1",
        );
    }
    let moduli = roots.moduli_desc();
    // a zero of s_n strictly inside |z| < rho needs rho * |z_1| > 1 for the deflated modulus
    let usable = |rho: f64| rho * r_down > 1.0;

    if let Ok(e) = charfun::e_bounds(&roots) {
        let kind = match e.kind {
            EBoundKind::E1 => Some(RoucheBound::E1),
            EBoundKind::E2 => Some(RoucheBound::E2),
            EBoundKind::E3 => Some(RoucheBound::E3),
            EBoundKind::NotApplicable => None,
        };
        if let Some(kind) = kind {
            let certified = e.value.min(delta_lower(&moduli, e.rho, margin));
            if usable(e.rho) && tail_hi < certified {
                return Certificate::fires(c, Verdict::Unstable, Rigor::Rigorous, witness(kind, e.value, e.rho));
            }
        }
    }
    match charfun::maximize_delta(&roots) {
        Ok(d) => {
            let certified = delta_lower(&moduli, d.rho0, margin);
            if usable(d.rho0) && tail_hi < certified {
                Certificate::fires(
                    c,
                    Verdict::Unstable,
                    Rigor::Rigorous,
                    witness(RoucheBound::Delta, d.value, d.rho0),
                )
            } else {
                Certificate::not_applicable(
                    c,
                    Rigor::Rigorous,
                    witness(RoucheBound::Delta, d.value, d.rho0),
                    "tail not below delta_n(rho_0)",
                )
            }
        }
        Err(e) => Certificate::not_applicable(c, Rigor::Rigorous, witness(RoucheBound::Delta, 0.0, 1.0), e.to_string()),
    }
}

pub fn test_marginal_stable(kernel: &KernelSpec, n: usize, grid_points: usize) -> Certificate {
    let real_axis = test_real_axis_root(kernel, grid_points);
    marginal_with(kernel, n, grid_points, &real_axis)
}

fn marginal_with(kernel: &KernelSpec, n: usize, grid_points: usize, real_axis: &Certificate) -> Certificate {
    assert!(n >= MARGINAL_MIN_DEGREE, "marginal test needs n >= {MARGINAL_MIN_DEGREE}");
    let c = Criterion::MarginalStable;
    let na = |reason: &str| Certificate::not_applicable(c, Rigor::Heuristic, Witness::None, reason);
    if !kernel.series_sum(SumMode::FirstMomentAbs, 1e-6).is_finite() {
        return na("sum n |a_n| not certified finite");
    }
    if real_axis.verdict != Verdict::NotApplicable {
        return na("certified real root inside the disk");
    }
    let Ok(roots) = charfun::pn_roots(kernel, n) else {
        return na("root iteration did not converge");
    };
    if roots.r_n > 1.0 / (1.0 - INSIDE_TOL) {
        return na("s_n has a zero inside the unit disk");
    }
    let Some(tail_hi) = kernel.tail_abs_sum(n).hi() else {
        return na("tail sum not certified finite");
    };
    let lipschitz: f64 = (1..=n).map(|k| k as f64 * kernel.term(k).abs()).sum();
    let threshold = tail_hi + std::f64::consts::PI / grid_points as f64 * lipschitz;
    let profile = charfun::circle_profile(kernel, n, grid_points);

    let runs = near_zero_runs(&profile, threshold);
    if runs.is_empty() {
        return na("no near-zero of s_n on the unit circle");
    }
    let covered: usize = runs.iter().map(|r| r.1).sum();
    if covered as f64 > MAX_RUN_SHARE * grid_points as f64 {
        return na("near-zero set on the circle is not isolated");
    }
    let g = grid_points as isize;
    let at = |j: isize| profile[j.rem_euclid(g) as usize];
    let mut thetas = Vec::new();
    let mut mins = Vec::new();
    for &(start, width) in &runs {
        let jmin = (0..width as isize)
            .map(|o| start as isize + o)
            .min_by(|&a, &b| at(a).total_cmp(&at(b)))
            .expect("runs are nonempty");
        for dir in [-1isize, 1] {
            let near = at(jmin + 4 * dir);
            let far = at(jmin + 8 * dir);
            let ratio = far / near;
            if !(LINEARITY.0..=LINEARITY.1).contains(&ratio) {
                return na("circle near-zero is not locally linear");
            }
        }
        let z = charfun::circle_point(jmin.rem_euclid(g) as usize, grid_points);
        thetas.push(z.arg());
        mins.push(at(jmin));
    }
    Certificate::fires(
        c,
        Verdict::Stable,
        Rigor::Heuristic,
        Witness::CircleZeros { n, thetas, min_modulus: mins, threshold },
    )
}

/// Maximal circular runs `(start, width)` of grid values at or below `threshold`.
fn near_zero_runs(profile: &[f64], threshold: f64) -> Vec<(usize, usize)> {
    let g = profile.len();
    let below: Vec<bool> = profile.iter().map(|&v| v <= threshold).collect();
    if below.iter().all(|&b| b) {
        return vec![(0, g)];
    }
    // start scanning just after a point above the threshold so no run wraps
    let origin = below.iter().position(|&b| !b).expect("some point is above") + 1;
    let mut runs = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for step in 0..g {
        let j = (origin + step) % g;
        match (below[j], current.as_mut()) {
            (true, Some(run)) => run.1 += 1,
            (true, None) => current = Some((j, 1)),
            (false, Some(_)) => runs.push(current.take().expect("run is open")),
            (false, None) => {}
        }
    }
    runs.extend(current);
    runs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CertifyOptions {
    pub max_degree: usize,
    pub steps: usize,
    pub grid_points: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            max_degree: DEFAULT_MAX_DEGREE,
            steps: DEFAULT_STEPS,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalVerdict {
    AsymptoticallyStable,
    Stable,
    Unstable,
    Inconclusive,
}

impl FinalVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            FinalVerdict::AsymptoticallyStable => "asymptotically_stable",
            FinalVerdict::Stable => "stable",
            FinalVerdict::Unstable => "unstable",
            FinalVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Final {
    pub verdict: FinalVerdict,
    /// Criterion name, or `"Empirical"` for the trajectory fallback.
    pub criterion: String,
    pub rigor: Rigor,
    pub witness: serde_json::Value,
}

impl Final {
    /// `verdict (criterion, rigor)`, the one-line CLI summary.
    pub fn summary(&self) -> String {
        let rigor = match self.rigor {
            Rigor::Rigorous => "rigorous",
            Rigor::Heuristic => "heuristic",
            Rigor::Empirical => "empirical",
        };
        format!("{} ({}, {rigor})", self.verdict.as_str(), self.criterion)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Empirical {
    pub steps: usize,
    pub method: Method,
    pub status: Status,
    pub computed: usize,
    pub verdict: EmpiricalVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub kernel_id: String,
    #[serde(rename = "final")]
    pub final_: Final,
    pub attempts: Vec<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical: Option<Empirical>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

fn final_from_certificate(cert: &Certificate, verdict: FinalVerdict) -> Final {
    Final {
        verdict,
        criterion: cert.criterion.name().to_string(),
        rigor: cert.rigor,
        witness: serde_json::to_value(&cert.witness).expect("witness serializes"),
    }
}

fn certified_verdict(v: Verdict) -> FinalVerdict {
    match v {
        Verdict::AsymptoticallyStable => FinalVerdict::AsymptoticallyStable,
        Verdict::Stable => FinalVerdict::Stable,
        Verdict::Unstable => FinalVerdict::Unstable,
        Verdict::NotApplicable => FinalVerdict::Inconclusive,
    }
}

/// Runs the pipeline with default grid size.
pub fn certify(kernel: &KernelSpec, max_degree: usize, steps: usize) -> Report {
    certify_with(
        kernel,
        &CertifyOptions { max_degree, steps, grid_points: DEFAULT_GRID_POINTS },
    )
}

/// Absolute sum, EFP, real axis, Rouché stable for `n = 1..=max_degree`, Rouché
/// unstable likewise, marginal; stops at the first rigorous hit and otherwise
/// falls back to simulation.
pub fn certify_with(kernel: &KernelSpec, opts: &CertifyOptions) -> Report {
    assert!(opts.max_degree >= 1, "max_degree must be at least 1");
    assert!(opts.steps >= simulate::MIN_CLASSIFY_LEN, "steps must be at least 100");
    let mut attempts = Vec::new();
    let report = |attempts: Vec<Certificate>, final_: Final, empirical| Report {
        kernel_id: kernel.id(),
        final_,
        attempts,
        empirical,
    };
    let try_rigorous = |cert: Certificate, attempts: &mut Vec<Certificate>| {
        let hit = cert.is_rigorous_hit();
        attempts.push(cert);
        hit
    };

    if try_rigorous(test_absolute_sum(kernel), &mut attempts)
        || try_rigorous(test_efp(kernel), &mut attempts)
        || try_rigorous(test_real_axis_root(kernel, opts.grid_points), &mut attempts)
        || (1..=opts.max_degree).any(|n| try_rigorous(test_rouche_stable(kernel, n), &mut attempts))
        || (1..=opts.max_degree).any(|n| try_rigorous(test_rouche_unstable(kernel, n), &mut attempts))
    {
        let last = attempts.last().expect("a hit was recorded");
        let final_ = final_from_certificate(last, certified_verdict(last.verdict));
        return report(attempts, final_, None);
    }

    let real_axis = attempts
        .iter()
        .find(|c| c.criterion == Criterion::RealAxisRoot)
        .cloned()
        .expect("real-axis attempt recorded");
    let marginal = marginal_with(
        kernel,
        opts.max_degree.max(MARGINAL_MIN_DEGREE),
        opts.grid_points,
        &real_axis,
    );
    attempts.push(marginal.clone());

    let empirical = run_empirical(kernel, opts.steps);
    let final_ = if marginal.verdict != Verdict::NotApplicable {
        let contradicted = empirical.verdict.kind == EmpiricalKind::Unbounded;
        let verdict = if contradicted { FinalVerdict::Inconclusive } else { certified_verdict(marginal.verdict) };
        final_from_certificate(&marginal, verdict)
    } else {
        let verdict = match empirical.verdict.kind {
            EmpiricalKind::Decaying => FinalVerdict::AsymptoticallyStable,
            EmpiricalKind::BoundedNonDecaying => FinalVerdict::Stable,
            EmpiricalKind::Unbounded => FinalVerdict::Unstable,
            EmpiricalKind::Inconclusive => FinalVerdict::Inconclusive,
        };
        Final {
            verdict,
            criterion: "Empirical".into(),
            rigor: Rigor::Empirical,
            witness: serde_json::to_value(empirical.verdict.witness).expect("witness serializes"),
        }
    };
    report(attempts, final_, Some(empirical))
}

fn run_empirical(kernel: &KernelSpec, steps: usize) -> Empirical {
    let traj = if steps > FAST_FROM {
        simulate::solve_fast(kernel, steps, 1.0)
    } else {
        simulate::solve(kernel, steps, 1.0)
    };
    let verdict = simulate::classify(&traj, &Thresholds::default());
    Empirical {
        steps,
        method: traj.method,
        status: traj.status,
        computed: traj.values.len().saturating_sub(1),
        verdict,
    }
}

/// Every test at every degree, without stopping at the first hit.
pub fn all_certificates(kernel: &KernelSpec, opts: &CertifyOptions) -> Vec<Certificate> {
    let mut out = vec![
        test_absolute_sum(kernel),
        test_efp(kernel),
        test_real_axis_root(kernel, opts.grid_points),
    ];
    out.extend((1..=opts.max_degree).map(|n| test_rouche_stable(kernel, n)));
    out.extend((1..=opts.max_degree).map(|n| test_rouche_unstable(kernel, n)));
    let real_axis = out[2].clone();
    out.push(marginal_with(
        kernel,
        opts.max_degree.max(MARGINAL_MIN_DEGREE),
        opts.grid_points,
        &real_axis,
    ));
    out
}
