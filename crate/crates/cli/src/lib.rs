//! Job execution behind the `mconvex` binary: a [`JobSpec`] names a command,
//! carries its input documents inline and produces a JSON [`Report`].

pub mod svg;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use mconvex_core::geometry::{essential_range_hull, extreme_points, is_simplex, jnr_sandwich, ConvexBody, PointD};
use mconvex_core::models::{
    block_diagonal_model, essential_spectrum_diag, extreme_spectral_compression, joint_spectrum, sw_perturbation,
    verify_complete_isometry, verify_local_sw, DiagonalTuple, NormalTuple,
};
use mconvex_core::ranges::{
    choi_li_calibration, choi_li_equiv_check, is_matrix_extreme_free_symmetric, is_matrix_extreme_free_unitary,
    kmax_member, kmin_member, mrange_equal, theta_min_alpha, ucp_member, MemberStatus, RangeOptions,
};
use mconvex_core::verify::{run_criterion, CriterionResult, SuiteConfig, CRITERIA};
use mconvex_core::{ComplexMatrix, Error, OperatorTuple, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_UNDECIDED: i32 = 70;

pub const COMMANDS: [&str; 11] =
    ["jnr", "member", "equal", "theta", "extreme", "choili", "model", "sw", "toeplitz", "verify-suite", "batch"];

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Internal(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Data(m) => write!(f, "bad input: {m}"),
            Failure::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoCertificate => Failure::Internal(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Tolerances and sizes; every field has the library default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    /// Solver tolerance; for `theta` the bracket width.
    pub tol: Option<f64>,
    pub seed: u64,
    pub max_iter: usize,
    pub levels: Vec<usize>,
    pub grid: Option<usize>,
    pub probes: usize,
    pub p: usize,
    pub trials: usize,
    pub strict: bool,
    pub svg: Option<String>,
    /// Criteria to run in `verify-suite` (all when empty).
    pub only: Vec<usize>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: None,
            seed: 0,
            max_iter: mconvex_core::sdp::DEFAULT_MAX_ITER,
            levels: vec![1, 2],
            grid: None,
            probes: 20,
            p: 2,
            trials: 100,
            strict: false,
            svg: None,
            only: Vec::new(),
        }
    }
}

impl Options {
    fn solver_tol(&self) -> f64 {
        self.tol.unwrap_or(mconvex_core::sdp::DEFAULT_TOL)
    }

    fn range(&self) -> RangeOptions {
        let mut o = RangeOptions::with_tol(self.solver_tol());
        o.max_iter = self.max_iter;
        if let Some(g) = self.grid {
            o.disc_grid = g.max(3);
        }
        o
    }

    fn validate(&self) -> Outcome<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {t}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Failure::Usage("--max-iter must be positive".into()));
        }
        if self.levels.is_empty() || self.levels.contains(&0) || self.levels.iter().any(|&l| l > 8) {
            return Err(Failure::Usage("--level takes values in 1..=8".into()));
        }
        if matches!(self.grid, Some(g) if !(3..=1 << 16).contains(&g)) {
            return Err(Failure::Usage("--grid must lie in 3..=65536".into()));
        }
        if self.p == 0 || self.p > 8 {
            return Err(Failure::Usage("--p must lie in 1..=8".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobSpec {
    pub command: String,
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub inputs: BTreeMap<String, Value>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub status: String,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub result: Value,
    pub wall_time_s: f64,
}

impl Report {
    pub fn exit_code(&self, strict: bool) -> i32 {
        match self.status.as_str() {
            "Unknown" if strict => EXIT_UNDECIDED,
            "fail" => EXIT_FAILURE,
            _ => EXIT_OK,
        }
    }
}

fn input<'a>(job: &'a JobSpec, key: &str) -> Outcome<&'a Value> {
    job.inputs.get(key).ok_or_else(|| Failure::Usage(format!("{} needs --{key}", job.command)))
}

fn parse<T: for<'de> Deserialize<'de>>(job: &JobSpec, key: &str) -> Outcome<T> {
    serde_json::from_value(input(job, key)?.clone()).map_err(|e| Failure::Data(format!("{key}: {e}")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// A single non-Hermitian matrix against a planar body stands for its real and imaginary parts.
fn tuple_for_body(t: OperatorTuple, body: &ConvexBody) -> Outcome<OperatorTuple> {
    if t.d() == 1 && !t.is_hermitian() && body.dim() == 2 {
        return Ok(OperatorTuple::real_imag(t.mat(0))?);
    }
    Ok(t)
}

fn matrix_input(job: &JobSpec, key: &str) -> Outcome<ComplexMatrix> {
    let v = input(job, key)?;
    if v.is_array() {
        let rows = serde_json::from_value(v.clone()).map_err(|e| Failure::Data(format!("{key}: {e}")))?;
        return Ok(mconvex_core::io::matrix_from_json(rows)?);
    }
    let t: OperatorTuple = parse(job, key)?;
    if t.d() != 1 {
        return Err(Failure::Data(format!("{key}: expected a single matrix, got a {}-tuple", t.d())));
    }
    Ok(t.mat(0).clone())
}

fn write_svg(job: &JobSpec, body: String) -> Outcome<Option<String>> {
    match &job.options.svg {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| Failure::Internal(format!("writing {path}: {e}")))?;
            Ok(Some(path.clone()))
        }
        None => Ok(None),
    }
}

fn kind<'a>(job: &'a JobSpec, allowed: &[&str]) -> Outcome<&'a str> {
    let k = job
        .kind
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("{} needs --kind ({})", job.command, allowed.join(" | "))))?;
    if !allowed.contains(&k) {
        return Err(Failure::Usage(format!(
            "unknown kind {k:?} for {}; expected {}",
            job.command,
            allowed.join(" | ")
        )));
    }
    Ok(k)
}

fn status_name(s: MemberStatus) -> String {
    format!("{s:?}")
}

pub fn execute(job: &JobSpec) -> Outcome<Report> {
    job.options.validate()?;
    let start = Instant::now();
    let (status, result) = match job.command.as_str() {
        "jnr" => jnr(job)?,
        "member" => member(job)?,
        "equal" => equal(job)?,
        "theta" => theta(job)?,
        "extreme" => extreme(job)?,
        "choili" => choili(job)?,
        "model" => model(job)?,
        "sw" => sw(job)?,
        "toeplitz" => toeplitz(job)?,
        "verify-suite" => verify_suite(job)?,
        "batch" => return Err(Failure::Usage("batch jobs cannot nest".into())),
        other => {
            return Err(Failure::Usage(format!("unknown command {other:?}; expected one of {}", COMMANDS.join(", "))))
        }
    };
    let tol = match job.command.as_str() {
        "theta" => job.options.tol.unwrap_or(THETA_WIDTH),
        _ => job.options.solver_tol(),
    };
    Ok(Report {
        command: job.command.clone(),
        kind: job.kind.clone(),
        status,
        seed: job.options.seed,
        tol,
        max_iter: job.options.max_iter,
        result,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Worker count for concurrent jobs: `MCONVEX_THREADS` when set, otherwise the machine's parallelism.
pub fn thread_cap() -> Outcome<usize> {
    match std::env::var("MCONVEX_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("MCONVEX_THREADS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn pool() -> Outcome<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(thread_cap()?).build().map_err(|e| Failure::Internal(e.to_string()))
}

/// Runs independent jobs concurrently; reports keep the input order.
pub fn execute_batch(jobs: &[JobSpec]) -> Outcome<Vec<Outcome<Report>>> {
    use rayon::prelude::*;
    let pool = pool()?;
    Ok(pool.install(|| jobs.par_iter().map(execute).collect()))
}

fn jnr(job: &JobSpec) -> Outcome<(String, Value)> {
    let t: OperatorTuple = parse(job, "tuple")?;
    let t = if t.d() == 1 && !t.is_hermitian() { OperatorTuple::real_imag(t.mat(0))? } else { t };
    let m = job.options.grid.unwrap_or(64);
    let s = jnr_sandwich(&t, m)?;
    let svg = write_svg(job, svg::sandwich(&s.inner, &s.outer))?;
    Ok(("ok".into(), json!({ "m": m, "sandwich": to_value(&s), "svg": svg })))
}

fn member(job: &JobSpec) -> Outcome<(String, Value)> {
    let o = job.options.range();
    let r = match kind(job, &["ucp", "kmin", "kmax"])? {
        "ucp" => {
            let host: OperatorTuple = parse(job, "host")?;
            let a: OperatorTuple = parse(job, "tuple")?;
            ucp_member(&host, &a, &o)?
        }
        k => {
            let body: ConvexBody = parse(job, "body")?;
            body.validate()?;
            let a = tuple_for_body(parse(job, "tuple")?, &body)?;
            if k == "kmin" {
                kmin_member(&body, &a, &o)?
            } else {
                kmax_member(&body, &a, &o)?
            }
        }
    };
    Ok((status_name(r.status), to_value(&r)))
}

fn equal(job: &JobSpec) -> Outcome<(String, Value)> {
    let x: OperatorTuple = parse(job, "x")?;
    let y: OperatorTuple = parse(job, "y")?;
    let rep = mrange_equal(&x, &y, &job.options.levels, job.options.probes, job.options.seed, &job.options.range())?;
    let undecided: usize = rep.levels.iter().map(|l| l.undecided).sum();
    let status = if rep.equal {
        "Equal"
    } else if undecided > 0 && rep.levels.iter().all(|l| l.x_in_y + l.y_in_x + l.undecided == 2 * l.probes) {
        "Unknown"
    } else {
        "Unequal"
    };
    Ok((status.into(), to_value(&rep)))
}

const THETA_WIDTH: f64 = 0.01;

fn theta(job: &JobSpec) -> Outcome<(String, Value)> {
    let body: ConvexBody = parse(job, "body")?;
    body.validate()?;
    let a = tuple_for_body(parse(job, "tuple")?, &body)?;
    let width = job.options.tol.unwrap_or(THETA_WIDTH);
    // the bracket width never loosens the solver
    let mut o = job.options.range();
    o.tol = o.tol.min(mconvex_core::sdp::DEFAULT_TOL);
    let est = theta_min_alpha(&body, &a, width, &o)?;
    let svg = write_svg(job, svg::theta_trace(&est.trace))?;
    let mut v = to_value(&est);
    v["svg"] = json!(svg);
    v["width"] = json!(width);
    v["solver_tol"] = json!(o.tol);
    Ok(("ok".into(), v))
}

fn extreme(job: &JobSpec) -> Outcome<(String, Value)> {
    let tol = job.options.solver_tol();
    match kind(job, &["points", "simplex", "free-sym", "free-uni"])? {
        "points" => {
            let pts: Vec<PointD> = parse(job, "points")?;
            if pts.is_empty() {
                return Err(Failure::Data("points: empty list".into()));
            }
            let e = extreme_points(&pts, tol);
            Ok(("ok".into(), json!({ "extremes": e, "count": e.len() })))
        }
        "simplex" => {
            let pts: Vec<PointD> = parse(job, "points")?;
            let r = is_simplex(&pts, tol)?;
            Ok((if r.is_simplex { "simplex" } else { "not_simplex" }.into(), to_value(&r)))
        }
        k => {
            let t: OperatorTuple = parse(job, "tuple")?;
            let r =
                if k == "free-sym" { is_matrix_extreme_free_symmetric(&t) } else { is_matrix_extreme_free_unitary(&t) };
            Ok((if r.extreme { "extreme" } else { "not_extreme" }.into(), to_value(&r)))
        }
    }
}

fn choili(job: &JobSpec) -> Outcome<(String, Value)> {
    let calibration = choi_li_calibration();
    if !job.inputs.contains_key("matrix") {
        return Ok(("ok".into(), json!({ "calibration": calibration })));
    }
    let y = matrix_input(job, "matrix")?;
    let r = choi_li_equiv_check(&y, &job.options.range())?;
    let status = if !r.comparable {
        "Unknown"
    } else if r.consistent {
        "consistent"
    } else {
        "inconsistent"
    };
    Ok((status.into(), json!({ "check": r, "calibration": calibration })))
}

fn model(job: &JobSpec) -> Outcome<(String, Value)> {
    match kind(job, &["normal", "blockdiag"])? {
        "normal" => {
            let t = NormalTuple::new(parse(job, "tuple")?)?;
            let m = extreme_spectral_compression(&t)?;
            let iso = verify_complete_isometry(&t, &m, job.options.p, job.options.trials, job.options.seed)?;
            Ok(("ok".into(), json!({ "joint_spectrum": joint_spectrum(&t), "model": m, "isometry_check": iso })))
        }
        _ => {
            let candidates: Vec<OperatorTuple> = parse(job, "candidates")?;
            let m = block_diagonal_model(&candidates)?;
            Ok(("ok".into(), to_value(&m)))
        }
    }
}

fn sw(job: &JobSpec) -> Outcome<(String, Value)> {
    let t: DiagonalTuple = parse(job, "diag")?;
    t.validate()?;
    let tol = job.options.solver_tol();
    match kind(job, &["ess", "perturb", "verify"])? {
        "ess" => Ok(("ok".into(), json!({ "essential_spectrum": essential_spectrum_diag(&t, tol) }))),
        "perturb" => {
            let (p, rep) = sw_perturbation(&t)?;
            Ok(("ok".into(), json!({ "perturbed": p, "report": rep })))
        }
        _ => {
            let (p, mut rep) = sw_perturbation(&t)?;
            let q = *job.options.levels.iter().max().expect("levels validated");
            let local = verify_local_sw(&t, &p, q, job.options.probes, job.options.seed, &job.options.range())?;
            let undecided: usize = local.levels.iter().map(|l| l.undecided).sum();
            if local.equal {
                rep.verified_levels = q;
            }
            let status = if local.equal {
                "Equal"
            } else if undecided > 0 {
                "Unknown"
            } else {
                "Unequal"
            };
            Ok((status.into(), json!({ "perturbation": rep, "local": local })))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FourierTerm {
    k: i64,
    c: mconvex_core::io::ScalarJson,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Symbol {
    #[serde(default)]
    samples: Option<Vec<mconvex_core::io::ScalarJson>>,
    #[serde(default)]
    fourier: Option<Vec<FourierTerm>>,
}

fn toeplitz(job: &JobSpec) -> Outcome<(String, Value)> {
    let sym: Symbol = parse(job, "symbol")?;
    let samples: Vec<C64> = match (sym.samples, sym.fourier) {
        (Some(s), None) => s.into_iter().map(C64::from).collect(),
        (None, Some(terms)) => {
            let m = job.options.grid.unwrap_or(360);
            (0..m)
                .map(|j| {
                    let th = std::f64::consts::TAU * j as f64 / m as f64;
                    terms.iter().map(|t| C64::from(t.c) * C64::from_polar(1.0, th * t.k as f64)).sum()
                })
                .collect()
        }
        _ => return Err(Failure::Data("symbol: give exactly one of \"samples\" or \"fourier\"".into())),
    };
    let (hull, extremes) = essential_range_hull(&samples)?;
    let svg = write_svg(job, svg::sandwich(&extremes, &[]))?;
    Ok(("ok".into(), json!({ "samples": samples.len(), "hull": hull, "extremes": extremes, "svg": svg })))
}

fn verify_suite(job: &JobSpec) -> Outcome<(String, Value)> {
    use rayon::prelude::*;
    let mut ids: Vec<usize> =
        if job.options.only.is_empty() { (1..=CRITERIA.len()).collect() } else { job.options.only.clone() };
    ids.sort_unstable();
    ids.dedup();
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA.len()) {
        return Err(Failure::Usage(format!("no criterion {bad}; criteria are 1..={}", CRITERIA.len())));
    }
    let cfg = SuiteConfig { seed: job.options.seed, tol: job.options.solver_tol() };
    let results: Vec<mconvex_core::Result<CriterionResult>> =
        pool()?.install(|| ids.par_iter().map(|&id| run_criterion(id, &cfg)).collect());
    let results: Vec<CriterionResult> = results.into_iter().collect::<mconvex_core::Result<_>>()?;
    let passed = results.iter().filter(|r| r.passed).count();
    let status = if passed == results.len() { "pass" } else { "fail" };
    Ok((status.into(), json!({ "passed": passed, "total": results.len(), "criteria": results })))
}
