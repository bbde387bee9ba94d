//! Command-line front end. `run_cli` never exits the process; it returns the exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certify::{self, CertifyOptions, Verdict, Witness};
use crate::charfun;
use crate::error::Error;
use crate::fixtures;
use crate::kernel::KernelSpec;
use crate::simulate::{self, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CHECKS: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "volterra", version, about = "Stability certificates for x_n = sum a_{n-i} x_i")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    /// direct up to 4096 steps, fft beyond
    Auto,
    Direct,
    Fft,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate x_0 = 1 and write the trajectory.
    Simulate {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = SolverChoice::Auto)]
        method: SolverChoice,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Roots of p_n as JSON.
    Roots {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run the certificate pipeline and print the verdict.
    Certify {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = certify::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = certify::DEFAULT_MAX_DEGREE)]
        max_degree: usize,
        #[arg(long, default_value_t = certify::DEFAULT_GRID_POINTS)]
        grid_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Rebuild the worked examples and the r_n / L_n table, checking every cell.
    ReproducePaper {
        #[arg(long, default_value_t = certify::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            Error::InvalidKernel { .. } | Error::KernelJson(_) | Error::Domain(_) => EXIT_PARSE,
            Error::Io(_) => EXIT_FAILED_CHECKS,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_PARSE, message: message.into() }
}

pub fn run_cli<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_PARSE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(&config.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load_kernel(path: &Path) -> Result<KernelSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    KernelSpec::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes `body` to `out` (plus a sidecar) or to stdout.
fn emit(out: &Option<PathBuf>, body: &str, meta: serde_json::Value, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, body).map_err(Error::from)?;
            let mut side = path.clone().into_os_string();
            side.push(".meta.json");
            let meta = serde_json::to_string_pretty(&meta).expect("meta serializes");
            fs::write(PathBuf::from(side), meta + "\n").map_err(Error::from)?;
        }
        None => stdout.write_all(body.as_bytes()).map_err(Error::from)?,
    }
    Ok(())
}

fn meta(command: &str, kernel: Option<&KernelSpec>, params: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "tool": "volterra",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "kernel_id": kernel.map(KernelSpec::id),
        "params": params,
    })
}

pub fn simulate_with(kernel: &KernelSpec, steps: usize, method: SolverChoice) -> Trajectory {
    match method {
        SolverChoice::Direct => simulate::solve(kernel, steps, 1.0),
        SolverChoice::Fft => simulate::solve_fast(kernel, steps, 1.0),
        SolverChoice::Auto if steps > 4096 => simulate::solve_fast(kernel, steps, 1.0),
        SolverChoice::Auto => simulate::solve(kernel, steps, 1.0),
    }
}

#[derive(Serialize)]
struct RootJson {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct RootsJson {
    n: usize,
    roots: Vec<RootJson>,
    r_n: f64,
    residual_bound: f64,
}

fn dispatch(command: &Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Simulate { kernel, steps, method, out, format } => {
            if *steps == 0 {
                return Err(usage("--steps must be at least 1"));
            }
            let k = load_kernel(kernel)?;
            let traj = simulate_with(&k, *steps, *method);
            let body = match format {
                Format::Csv => traj.to_csv(),
                Format::Json => serde_json::to_string(&traj).expect("trajectory serializes") + "\n",
            };
            let params = serde_json::json!({"steps": steps, "method": traj.method, "status": traj.status});
            emit(out, &body, meta("simulate", Some(&k), params), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Roots { kernel, n, out, format } => {
            if *format != Format::Json {
                return Err(usage("roots supports --format json only"));
            }
            if *n == 0 {
                return Err(usage("--n must be at least 1"));
            }
            let k = load_kernel(kernel)?;
            let rs = charfun::pn_roots(&k, *n)?;
            let json = RootsJson {
                n: *n,
                roots: rs.roots.iter().map(|z| RootJson { re: z.re, im: z.im }).collect(),
                r_n: rs.r_n,
                residual_bound: rs.residual_bound,
            };
            let body = serde_json::to_string_pretty(&json).expect("roots serialize") + "\n";
            emit(out, &body, meta("roots", Some(&k), serde_json::json!({"n": n})), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Certify { kernel, steps, max_degree, grid_points, out, format } => {
            if *format != Format::Json {
                return Err(usage("certify supports --format json only"));
            }
            if *max_degree == 0 || *steps < simulate::MIN_CLASSIFY_LEN || *grid_points < 16 {
                return Err(usage("need --max-degree >= 1, --steps >= 100, --grid-points >= 16"));
            }
            let k = load_kernel(kernel)?;
            let opts = CertifyOptions { max_degree: *max_degree, steps: *steps, grid_points: *grid_points };
            let report = certify::certify_with(&k, &opts);
            if let Some(path) = out {
                let params = serde_json::to_value(opts).expect("options serialize");
                emit(&Some(path.clone()), &(report.to_json() + "\n"), meta("certify", Some(&k), params), stdout)?;
            }
            writeln!(stdout, "{}", report.final_.summary()).map_err(Error::from)?;
            Ok(EXIT_OK)
        }
        Command::ReproducePaper { steps, out } => {
            if *steps < simulate::MIN_CLASSIFY_LEN {
                return Err(usage("--steps must be at least 100"));
            }
            let rep = reproduce_paper(*steps);
            stdout.write_all(rep.render().as_bytes()).map_err(Error::from)?;
            if let Some(path) = out {
                let body = serde_json::to_string_pretty(&rep).expect("reproduction serializes") + "\n";
                fs::write(path, body).map_err(Error::from)?;
            }
            Ok(if rep.all_passed() { EXIT_OK } else { EXIT_FAILED_CHECKS })
        }
    }
}

/// Published values of the r_n / L_n table: `(n, r_n, L_n, (1 - r_n)^n)`.
const TABLE: [(usize, f64, Option<f64>, Option<f64>); 6] = [
    (1, 1.0, None, None),
    (2, 1.067, None, None),
    (3, 1.012, None, None),
    (4, 0.913, Some(0.24716), Some(0.00005)),
    (5, 0.781, Some(0.04963), Some(0.00050)),
    (6, 0.667, Some(0.00024), Some(0.00137)),
];
const R_TOL: f64 = 5e-4;
const L_TOL: f64 = 5e-6;
/// The printed `(1 - r_4)^4 = 0.00005` is `5.79e-5` rounded down, so this column gets one more unit.
const BOUND_TOL: f64 = 1e-5;

const EXPECTED_VERDICTS: [(&str, &str); 9] = [
    ("efp", "asymptotically_stable (EFP, rigorous)"),
    ("unbounded_p2", "unstable (Empirical, empirical)"),
    ("geometric_null_p3", "asymptotically_stable (Empirical, empirical)"),
    ("rouche_first_plus", "asymptotically_stable (RoucheStable, rigorous)"),
    ("rouche_first_minus", "asymptotically_stable (RoucheStable, rigorous)"),
    ("rouche_table", "asymptotically_stable (RoucheStable, rigorous)"),
    ("rouche_final", "unstable (RealAxisRoot, rigorous)"),
    ("marginal_zeta3", "stable (MarginalStable, heuristic)"),
    ("geometric_half", "stable (MarginalStable, heuristic)"),
];

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub r_n: f64,
    pub l_n: Option<f64>,
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Reproduction {
    pub table: Vec<TableRow>,
    pub verdicts: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Reproduction {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Published precision: 3 decimals for r_n, 5 for L_n and (1 - r_n)^n.
    pub fn render(&self) -> String {
        let mut s = String::from("n, r_n, L_n, (1-r_n)^n\n");
        for row in &self.table {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.5}"));
            s += &format!("{}, {:.3}, {}, {}\n", row.n, row.r_n, opt(row.l_n), opt(row.bound));
        }
        s += "\n";
        for (name, summary) in &self.verdicts {
            s += &format!("{name}: {summary}\n");
        }
        s += "\n";
        for c in self.checks.iter().filter(|c| !c.pass) {
            s += &format!("FAILED {}: expected {}, got {}\n", c.name, c.expected, c.actual);
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        s += &format!("checks: {passed}/{} passed\n", self.checks.len());
        s
    }
}

fn close(name: String, expected: f64, actual: f64, tol: f64) -> Check {
    Check {
        name,
        expected: format!("{expected} +- {tol:e}"),
        actual: format!("{actual}"),
        pass: (expected - actual).abs() <= tol,
    }
}

pub fn reproduce_paper(steps: usize) -> Reproduction {
    let mut checks = Vec::new();
    let mut table = Vec::new();
    let k = fixtures::kernel("rouche_table");
    for (n, r_pub, l_pub, b_pub) in TABLE {
        let r_n = match charfun::pn_roots(&k, n) {
            Ok(rs) => rs.r_n,
            Err(_) => f64::NAN,
        };
        let (l_n, bound) = if r_n < 1.0 {
            let l = k.tail_abs_sum(n).interval().map(|i| i.mid()).unwrap_or(f64::NAN);
            (Some(l), Some((1.0 - r_n).powi(n as i32)))
        } else {
            (None, None)
        };
        checks.push(close(format!("r_{n}"), r_pub, r_n, R_TOL));
        if let (Some(lp), Some(l)) = (l_pub, l_n) {
            checks.push(close(format!("L_{n}"), lp, l, L_TOL));
        }
        if let (Some(bp), Some(b)) = (b_pub, bound) {
            checks.push(close(format!("(1-r_{n})^{n}"), bp, b, BOUND_TOL));
        }
        if l_pub.is_some() != l_n.is_some() {
            checks.push(Check {
                name: format!("row {n} shape"),
                expected: format!("L_n shown: {}", l_pub.is_some()),
                actual: format!("L_n shown: {}", l_n.is_some()),
                pass: false,
            });
        }
        table.push(TableRow { n, r_n, l_n, bound });
    }

    let first_hit = (1..=6).find(|&n| certify::test_rouche_stable(&k, n).verdict != Verdict::NotApplicable);
    checks.push(Check {
        name: "table kernel: first Rouche stability degree".into(),
        expected: "6".into(),
        actual: format!("{first_hit:?}"),
        pass: first_hit == Some(6),
    });

    let fin = certify::test_rouche_unstable(&fixtures::kernel("rouche_final"), 2);
    let e1 = matches!(
        fin.witness,
        Witness::Rouche { bound: certify::RoucheBound::E1, bound_value, .. } if (bound_value - 1.0).abs() <= 1e-9
    );
    checks.push(Check {
        name: "final example: Rouche instability at n = 2 via E1 = 1".into(),
        expected: "unstable, E1 = 1".into(),
        actual: format!("{:?}, {}", fin.verdict, serde_json::to_string(&fin.witness).expect("witness serializes")),
        pass: fin.verdict == Verdict::Unstable && e1,
    });

    let opts = CertifyOptions { steps, ..CertifyOptions::default() };
    let mut verdicts = Vec::new();
    for (name, expected) in EXPECTED_VERDICTS {
        let report = certify::certify_with(&fixtures::kernel(name), &opts);
        let summary = report.final_.summary();
        checks.push(Check {
            name: format!("{name} verdict"),
            expected: expected.into(),
            actual: summary.clone(),
            pass: summary == expected,
        });
        verdicts.push((name.to_string(), summary));
    }
    Reproduction { table, verdicts, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("volterra").chain(args.iter().copied());
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn fixture_path(name: &str) -> String {
        format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn simulate_writes_csv() {
        let (code, out, _) = run(&["simulate", "--kernel", &fixture_path("geometric_null_p3"), "--steps", "3"]);
        assert_eq!(code, 0);
        assert_eq!(out, "n,x\n0,1\n1,-3\n2,0\n3,0\n");
    }

    #[test]
    fn certify_prints_verdict_line() {
        let (code, out, _) = run(&["certify", "--kernel", &fixture_path("efp")]);
        assert_eq!(code, 0);
        assert_eq!(out, "asymptotically_stable (EFP, rigorous)\n");
    }

    #[test]
    fn bad_input_exit_codes() {
        let (code, _, _) = run(&["simulate", "--kernel", &fixture_path("efp"), "--bogus"]);
        assert_eq!(code, EXIT_PARSE);
        let (code, _, err) = run(&["certify", "--kernel", "/nonexistent/kernel.json"]);
        assert_eq!(code, EXIT_PARSE);
        assert!(err.contains("cannot read"));
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("reproduce-paper"));
    }

    #[test]
    fn roots_json_shape() {
        let (code, out, _) = run(&["roots", "--kernel", &fixture_path("rouche_final"), "--n", "2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["roots"].as_array().unwrap().len(), 2);
        assert!((v["r_n"].as_f64().unwrap() - 2.0).abs() < 1e-9);
        assert!(v["residual_bound"].as_f64().unwrap() <= 1e-8);
    }
}
