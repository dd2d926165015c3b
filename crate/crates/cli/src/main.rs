use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use mconvex_cli::{execute, execute_batch, Failure, JobSpec, Options, Report, EXIT_OK};

#[derive(Parser)]
#[command(name = "mconvex", version, about = "Matrix ranges and matrix convex sets at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Solver tolerance (for `theta`: the bracket width)
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iter", global = true, default_value_t = mconvex_core::sdp::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Matrix levels, comma separated (for `sw --kind verify`: the largest is q)
    #[arg(long, global = true, value_delimiter = ',', default_value = "1,2")]
    level: Vec<usize>,
    /// Polygon or sampling grid size
    #[arg(long, visible_alias = "m", global = true)]
    grid: Option<usize>,
    /// Random probes per level
    #[arg(long, global = true, default_value_t = 20)]
    probes: usize,
    /// Pencil size for complete-isometry checks
    #[arg(long, global = true, default_value_t = 2)]
    p: usize,
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
    /// Write an SVG plot (planar ranges and theta traces)
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Also write the JSON report to this file
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Exit with status 70 when a verdict is Unknown
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Polygon sandwich of the joint numerical range of a Hermitian pair
    Jnr {
        #[arg(long)]
        tuple: PathBuf,
    },
    /// Membership in a matrix range (ucp) or in K^min / K^max of a body
    Member {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        tuple: PathBuf,
        #[arg(long)]
        body: Option<PathBuf>,
        /// Tuple whose matrix range is tested (kind ucp)
        #[arg(long)]
        host: Option<PathBuf>,
    },
    /// Equality of two matrix ranges on random probes
    Equal {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Smallest scaling of K^min containing a tuple
    Theta {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        tuple: PathBuf,
    },
    /// Extreme points, simplex test, or matrix-extremality for free symmetries / unitaries
    Extreme {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        tuple: Option<PathBuf>,
    },
    /// Square / disc correspondence for one matrix, or the calibration report alone
    Choili {
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Spectral model of a commuting normal tuple, or a block-diagonal model
    Model {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        tuple: Option<PathBuf>,
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Essential spectrum, compact perturbation and local check for diagonal tuples
    Sw {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        diag: PathBuf,
    },
    /// Hull of the essential range of a symbol
    Toeplitz {
        #[arg(long)]
        symbol: PathBuf,
    },
    /// Run the acceptance checks and report pass/fail per criterion
    VerifySuite {
        /// Subset of criteria, comma separated
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
    /// Run a JSON array of jobs concurrently (capped by MCONVEX_THREADS)
    Batch {
        #[arg(long)]
        jobs: PathBuf,
    },
}

fn load(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn build(cli: &Cli) -> Result<(JobSpec, Option<PathBuf>), Failure> {
    let c = &cli.common;
    let mut options = Options {
        tol: c.tol,
        seed: c.seed,
        max_iter: c.max_iter,
        levels: c.level.clone(),
        grid: c.grid,
        probes: c.probes,
        p: c.p,
        trials: c.trials,
        strict: c.strict,
        svg: c.svg.as_ref().map(|p| p.display().to_string()),
        only: Vec::new(),
    };
    let mut inputs = BTreeMap::new();
    let mut add = |key: &str, path: &Option<PathBuf>| -> Result<(), Failure> {
        if let Some(p) = path {
            inputs.insert(key.to_string(), load(p)?);
        }
        Ok(())
    };
    let (name, kind) = match &cli.command {
        Command::Jnr { tuple } => {
            add("tuple", &Some(tuple.clone()))?;
            ("jnr", None)
        }
        Command::Member { kind, tuple, body, host } => {
            add("tuple", &Some(tuple.clone()))?;
            add("body", body)?;
            add("host", host)?;
            ("member", Some(kind.clone()))
        }
        Command::Equal { x, y } => {
            add("x", &Some(x.clone()))?;
            add("y", &Some(y.clone()))?;
            ("equal", None)
        }
        Command::Theta { body, tuple } => {
            add("body", &Some(body.clone()))?;
            add("tuple", &Some(tuple.clone()))?;
            ("theta", None)
        }
        Command::Extreme { kind, points, tuple } => {
            add("points", points)?;
            add("tuple", tuple)?;
            ("extreme", Some(kind.clone()))
        }
        Command::Choili { matrix } => {
            add("matrix", matrix)?;
            ("choili", None)
        }
        Command::Model { kind, tuple, candidates } => {
            add("tuple", tuple)?;
            add("candidates", candidates)?;
            ("model", Some(kind.clone()))
        }
        Command::Sw { kind, diag } => {
            add("diag", &Some(diag.clone()))?;
            ("sw", Some(kind.clone()))
        }
        Command::Toeplitz { symbol } => {
            add("symbol", &Some(symbol.clone()))?;
            ("toeplitz", None)
        }
        Command::VerifySuite { only } => {
            options.only = only.clone();
            ("verify-suite", None)
        }
        Command::Batch { jobs } => {
            add("jobs", &Some(jobs.clone()))?;
            ("batch", None)
        }
    };
    Ok((JobSpec { command: name.into(), kind, inputs, options }, c.json.clone()))
}

fn emit<T: serde::Serialize>(value: &T, json_path: &Option<PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    if let Some(p) = json_path {
        std::fs::write(p, &text).map_err(|e| Failure::Internal(format!("writing {}: {e}", p.display())))?;
    }
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn run_batch(job: &JobSpec, json_path: &Option<PathBuf>) -> Result<i32, Failure> {
    let jobs: Vec<JobSpec> =
        serde_json::from_value(job.inputs["jobs"].clone()).map_err(|e| Failure::Data(format!("jobs: {e}")))?;
    let results = execute_batch(&jobs)?;
    let mut code = EXIT_OK;
    let mut out = Vec::new();
    for (spec, r) in jobs.iter().zip(results) {
        match r {
            Ok(rep) => {
                let c = rep.exit_code(spec.options.strict);
                if code == EXIT_OK {
                    code = c;
                }
                out.push(serde_json::to_value(&rep).expect("reports serialize"));
            }
            Err(f) => {
                if code == EXIT_OK {
                    code = f.code();
                }
                out.push(serde_json::json!({ "command": spec.command, "error": f.to_string(), "exit_code": f.code() }));
            }
        }
    }
    emit(&Value::Array(out), json_path)?;
    Ok(code)
}

fn print_criteria(rep: &Report) {
    if let Some(list) = rep.result.get("criteria").and_then(Value::as_array) {
        for c in list {
            let passed = c["passed"].as_bool().unwrap_or(false);
            eprintln!(
                "{} {:>2} {} ({:.2}s): {}",
                if passed { "PASS" } else { "FAIL" },
                c["id"],
                c["name"].as_str().unwrap_or(""),
                c["seconds"].as_f64().unwrap_or(0.0),
                c["detail"].as_str().unwrap_or("")
            );
        }
    }
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let (job, json_path) = build(cli)?;
    if job.command == "batch" {
        return run_batch(&job, &json_path);
    }
    let rep = execute(&job)?;
    if rep.command == "verify-suite" {
        print_criteria(&rep);
    }
    emit(&rep, &json_path)?;
    Ok(rep.exit_code(job.options.strict))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { mconvex_cli::EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("mconvex: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}
