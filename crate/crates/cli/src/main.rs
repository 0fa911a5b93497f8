use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use indefsl_core::coefficients::{build_problem, IndefiniteProblem, ProblemSpec};
use indefsl_core::count::{count_half_line_operator, OperatorTag, DEFAULT_TOL};
use indefsl_core::matching::{eigenvalues_a_with, eigenvalues_ja_with, eval_matching_with, MatchingKind};
use indefsl_core::oracle::oracle_counts;
use indefsl_core::periodic::{audit_gaps_ja, band_edges};
use indefsl_core::report::{format_real, SCHEMA_VERSION};
use indefsl_core::theorems::{
    random_suite, run_suite, verify_accumulation_with, verify_count_estimate_with, verify_gap,
    verify_interlacing_with_a_with, verify_rank_one_perturbation_with, verify_symmetric_halving_with,
    write_suite_csv, TheoremId, TheoremReport, Verdict, SUITE_SEED, SUITE_SIZE,
};
use indefsl_core::weyl::WeylEngine;
use indefsl_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

const MAX_X_VAR: &str = "INDEFSL_MAX_X";

#[derive(Parser, Debug)]
#[command(name = "indefsl", version, about = "Eigenvalues of indefinite Sturm-Liouville operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count eigenvalues of A, JA, B+, -B-, B or JB in an interval.
    Count(CountArgs),
    /// Locate the eigenvalues of A or JA in an interval.
    Eigenvalues(CountArgs),
    /// Write m-function and matching-function values on a grid as CSV.
    Trace(TraceArgs),
    /// Check one theorem on a problem, or run the seeded suite with --all.
    Verify(VerifyArgs),
    /// Floquet band edges of a periodic problem.
    Bands(BandsArgs),
    /// Finite-difference counts for cross-checking.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct CountArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    operator: OperatorTag,
    /// `a,b` with a < b. For JA and JB with a >= 0 the union with (-b,-a) is used.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: (f64, f64),
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: (f64, f64),
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, required_unless_present = "all")]
    theorem: Option<TheoremId>,
    #[arg(long, required_unless_present = "all")]
    problem: Option<PathBuf>,
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: Option<(f64, f64)>,
    /// Count threshold for `accumulate`.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Run the seeded random-well suite.
    #[arg(long, conflicts_with_all = ["theorem", "problem"])]
    all: bool,
    #[arg(long, default_value_t = SUITE_SEED)]
    seed: u64,
    #[arg(long, default_value_t = SUITE_SIZE)]
    size: usize,
    /// Suite CSV destination; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BandsArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Where to write the `lambda,delta` trace.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also audit JA eigenvalues in every open gap.
    #[arg(long)]
    audit: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    count: CountArgs,
    #[arg(long, default_value_t = 4000)]
    grid: usize,
    #[arg(long, default_value_t = 30.0)]
    cutoff: f64,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b, got {s:?}"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if !(a < b) {
        return Err(format!("interval needs a < b, got {a},{b}"));
    }
    Ok((a, b))
}

#[derive(Serialize)]
struct Versions {
    indefsl: &'static str,
    schema: &'static str,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    problem_digest: Option<String>,
    flags: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_x_override: Option<String>,
    versions: Versions,
    elapsed_seconds: String,
}

struct Run {
    subcommand: &'static str,
    flags: Value,
    digest: Option<String>,
    max_x: Option<f64>,
    started: Instant,
}

impl Run {
    fn manifest(&self) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand,
            problem_digest: self.digest.clone(),
            flags: self.flags.clone(),
            max_x_override: self.max_x.map(format_real),
            versions: Versions { indefsl: env!("CARGO_PKG_VERSION"), schema: SCHEMA_VERSION },
            elapsed_seconds: format!("{:.3}", self.started.elapsed().as_secs_f64()),
        }
    }

    fn emit<T: Serialize>(&self, report: &T) -> io::Result<()> {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "manifest": self.manifest(),
            "report": report,
        });
        let mut out = io::stdout().lock();
        serde_json::to_writer_pretty(&mut out, &doc)?;
        writeln!(out)
    }

    /// CSV artifacts carry the manifest as a leading `#` comment line.
    fn csv_header(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "# {}", serde_json::to_string(&self.manifest())?)
    }

    fn problem(&mut self, path: &Path) -> Result<IndefiniteProblem, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut spec = ProblemSpec::from_json(&text)?;
        if let Some(x) = self.max_x {
            spec.truncation.max_x = x;
            spec.truncation.x0 = spec.truncation.x0.min(x);
        }
        let problem = build_problem(&spec)?;
        self.digest = Some(problem.digest.clone());
        Ok(problem)
    }
}

enum Failure {
    Usage(String),
    Numeric(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => 0,
        Verdict::Violated => 2,
        Verdict::Inconclusive => 3,
    }
}

fn worst(reports: &[&TheoremReport]) -> u8 {
    if reports.iter().any(|r| r.verdict == Verdict::Violated) {
        2
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        3
    } else {
        0
    }
}

fn open_out(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn count_flags(c: &CountArgs) -> Value {
    json!({
        "problem": c.problem.display().to_string(),
        "operator": c.operator.to_string(),
        "interval": [format_real(c.interval.0), format_real(c.interval.1)],
        "tol": format_real(c.tol),
    })
}

fn cmd_count(run: &mut Run, c: &CountArgs, only_a_ja: bool) -> Result<u8, Failure> {
    if only_a_ja && !matches!(c.operator, OperatorTag::A | OperatorTag::JA) {
        return Err(Failure::Usage(format!("eigenvalues takes A or JA, got {}", c.operator)));
    }
    let problem = run.problem(&c.problem)?;
    let engine = WeylEngine::new(&problem);
    let (a, b) = c.interval;
    let report = match c.operator {
        OperatorTag::A => eigenvalues_a_with(&engine, a, b, c.tol)?,
        OperatorTag::JA => eigenvalues_ja_with(&engine, a, b, c.tol)?,
        tag => count_half_line_operator(&engine, tag, a, b, c.tol)?,
    };
    run.emit(&report)?;
    Ok(0)
}

fn cmd_trace(run: &mut Run, t: &TraceArgs) -> Result<u8, Failure> {
    let problem = run.problem(&t.problem)?;
    let engine = WeylEngine::new(&problem);
    let (a, b) = t.interval;
    let n = t.points.max(2);
    let mut out = open_out(&t.out)?;
    run.csv_header(&mut *out)?;
    writeln!(out, "lambda,theta_plus,m_plus,theta_minus_reflected,D,M,delta")?;
    for i in 0..n {
        let l = a + (b - a) * i as f64 / (n - 1) as f64;
        let row = eval_matching_with(&engine, MatchingKind::M, l).and_then(|m| {
            let d = eval_matching_with(&engine, MatchingKind::D, l)?;
            let m_plus = engine.m(indefsl_core::ode::Side::Plus, l)?.as_scalar;
            Ok((m, d, m_plus))
        });
        match row {
            Ok((m, d, m_plus)) => writeln!(
                out,
                "{},{},{},{},{},{},{}",
                format_real(l),
                format_real(m.theta_plus),
                format_real(m_plus),
                format_real(m.theta_minus),
                format_real(d.value),
                format_real(m.value),
                format_real(m.defect),
            )?,
            // Points on the essential spectrum have no m-function value.
            Err(Error::EssentialSpectrumProximity { .. }) => {
                writeln!(out, "{},nan,nan,nan,nan,nan,nan", format_real(l))?
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.flush()?;
    Ok(0)
}

fn one_theorem(engine: &WeylEngine, id: TheoremId, interval: Option<(f64, f64)>, n: usize) -> Result<TheoremReport, Failure> {
    let need = || interval.ok_or_else(|| Failure::Usage(format!("{id} needs --interval")));
    Ok(match id {
        TheoremId::CountEstimate => {
            let (a, b) = need()?;
            verify_count_estimate_with(engine, a, b)?
        }
        TheoremId::RankOne => {
            let (a, b) = need()?;
            verify_rank_one_perturbation_with(engine, a, b)?
        }
        TheoremId::SymmetricHalving => {
            let (a, b) = need()?;
            verify_symmetric_halving_with(engine, a, b)?
        }
        TheoremId::Interlacing => {
            let (a, b) = need()?;
            verify_interlacing_with_a_with(engine, a, b)?
        }
        TheoremId::Accumulation => {
            let (a, b) = need()?;
            verify_accumulation_with(engine, a, b, n)?
        }
        TheoremId::Gap => verify_gap(engine.problem)?,
        TheoremId::PeriodicGap => {
            return Err(Failure::Usage("periodic gap audits run through `bands --audit`".into()))
        }
    })
}

fn cmd_verify(run: &mut Run, v: &VerifyArgs) -> Result<u8, Failure> {
    if v.all {
        let cases = random_suite(v.seed, v.size);
        let rows = run_suite(&cases)?;
        let mut out = open_out(&v.csv)?;
        run.csv_header(&mut *out)?;
        write_suite_csv(&rows, &mut out)?;
        out.flush()?;
        drop(out);
        let reports: Vec<&TheoremReport> = rows.iter().flat_map(|r| r.reports()).collect();
        return Ok(worst(&reports));
    }
    let (id, path) = match (v.theorem, &v.problem) {
        (Some(id), Some(p)) => (id, p),
        _ => return Err(Failure::Usage("--theorem and --problem are required without --all".into())),
    };
    let problem = run.problem(path)?;
    let engine = WeylEngine::new(&problem);
    let report = one_theorem(&engine, id, v.interval, v.n)?;
    run.emit(&report)?;
    Ok(verdict_code(report.verdict))
}

fn cmd_bands(run: &mut Run, b: &BandsArgs) -> Result<u8, Failure> {
    let problem = run.problem(&b.problem)?;
    let bands = band_edges(&problem, b.lambda_max)?;
    if let Some(path) = &b.csv {
        let mut out = BufWriter::new(File::create(path)?);
        run.csv_header(&mut out)?;
        bands.write_delta_csv(&mut out)?;
        out.flush()?;
    }
    if b.audit {
        let audit = audit_gaps_ja(&problem, &bands)?;
        run.emit(&json!({ "bands": bands, "audit": audit }))?;
        Ok(worst(&audit.iter().collect::<Vec<_>>()))
    } else {
        run.emit(&bands)?;
        Ok(0)
    }
}

fn cmd_oracle(run: &mut Run, o: &OracleArgs) -> Result<u8, Failure> {
    let problem = run.problem(&o.count.problem)?;
    let (a, b) = o.count.interval;
    let report = oracle_counts(&problem, o.count.operator, a, b, o.cutoff, o.grid)?;
    run.emit(&report)?;
    Ok(0)
}

fn max_x_override() -> Result<Option<f64>, Failure> {
    match std::env::var(MAX_X_VAR) {
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(Some(x)),
            _ => Err(Failure::Usage(format!("{MAX_X_VAR} must be a positive number, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn error_doc(kind: &str, message: String) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "error": { "kind": kind, "message": message },
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let (subcommand, flags) = match &cli.command {
        Command::Count(c) => ("count", count_flags(c)),
        Command::Eigenvalues(c) => ("eigenvalues", count_flags(c)),
        Command::Trace(t) => (
            "trace",
            json!({
                "problem": t.problem.display().to_string(),
                "interval": [format_real(t.interval.0), format_real(t.interval.1)],
                "points": t.points,
            }),
        ),
        Command::Verify(v) => (
            "verify",
            json!({
                "theorem": v.theorem.map(|t| t.to_string()),
                "problem": v.problem.as_ref().map(|p| p.display().to_string()),
                "interval": v.interval.map(|(a, b)| [format_real(a), format_real(b)]),
                "n": v.n,
                "all": v.all,
                "seed": v.seed,
                "size": v.size,
            }),
        ),
        Command::Bands(b) => (
            "bands",
            json!({
                "problem": b.problem.display().to_string(),
                "lambda_max": b.lambda_max.map(format_real),
                "audit": b.audit,
            }),
        ),
        Command::Oracle(o) => {
            let mut f = count_flags(&o.count);
            f["grid"] = json!(o.grid);
            f["cutoff"] = json!(format_real(o.cutoff));
            ("oracle", f)
        }
    };
    let result = max_x_override().and_then(|max_x| {
        let mut run = Run { subcommand, flags, digest: None, max_x, started: Instant::now() };
        match &cli.command {
            Command::Count(c) => cmd_count(&mut run, c, false),
            Command::Eigenvalues(c) => cmd_count(&mut run, c, true),
            Command::Trace(t) => cmd_trace(&mut run, t),
            Command::Verify(v) => cmd_verify(&mut run, v),
            Command::Bands(b) => cmd_bands(&mut run, b),
            Command::Oracle(o) => cmd_oracle(&mut run, o),
        }
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let doc = match f {
                Failure::Usage(m) => error_doc("UsageError", m),
                Failure::Numeric(e) => error_doc(e.kind(), e.to_string()),
                Failure::Io(e) => error_doc("IoError", e.to_string()),
            };
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            ExitCode::from(1)
        }
    }
}
