//! Command-line driver.
//!
//! Exit codes: 0 when every check passes, 1 on a verification failure, 2 on a
//! usage, configuration or I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::coaction;
use crate::error::{Error, Result};
use crate::models::{BuiltModel, ModelKind, ModelSpec};
use crate::probspace;
use crate::report::{all_pass, Check, Verdict};
use crate::semigroup::{self, SemigroupRep};
use crate::suite::{self, Corruption, SuiteConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bperm",
    version,
    about = "Desk-scale checks for boolean permutation quantum semigroups"
)]
struct Cli {
    /// Write the JSON report here ("-" for stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Inject a fault into a builtin rep (standard, averaging) or model kind.
    #[arg(long, global = true, value_name = "TARGET")]
    corrupt: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Defining relations of a representation, or of its coproduct image.
    Relations(RelationsArgs),
    /// Moment invariance under one of the coactions.
    Invariance {
        #[arg(value_enum)]
        kind: InvarianceKind,
        #[command(flatten)]
        args: InvarianceArgs,
    },
    /// Independence and moment identities of a model.
    Independence {
        #[arg(value_enum)]
        kind: IndependenceKind,
        #[command(flatten)]
        args: IndependenceArgs,
    },
    /// Convergence of the averaged invariance sum as M grows.
    Averaging(AveragingArgs),
    /// The full verification suite.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RelationCheck {
    Relations,
    Comultiplication,
    All,
}

#[derive(Debug, Args)]
struct RelationsArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, value_enum, default_value = "relations")]
    check: RelationCheck,
    /// `standard`, or `averaging:N,M` (then `--n` is ignored).
    #[arg(long, default_value = "standard")]
    rep: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InvarianceKind {
    Linear,
    Algebraic,
    Bsn,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Builtin kind or path to a model JSON file.
    #[arg(long, default_value = "shift-nonunital")]
    model: String,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Basis cutoff for shift models; defaults to max(word length, n) + 1.
    #[arg(long)]
    truncation: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct InvarianceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    degree: usize,
    /// `standard`, or `averaging:N,M` with N+M equal to the model size.
    #[arg(long, default_value = "standard")]
    rep: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum IndependenceKind {
    Boolean,
    Factorization,
    FreeAfterUnitalization,
    MomentReduction,
}

#[derive(Debug, Args)]
struct IndependenceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "max-len", default_value_t = 5)]
    max_len: usize,
    /// Tuple length for moment-reduction.
    #[arg(long, default_value_t = 3)]
    max_indices: usize,
    /// Largest power for moment-reduction.
    #[arg(long, default_value_t = 3)]
    max_power: usize,
}

#[derive(Debug, Args)]
struct AveragingArgs {
    #[arg(long, default_value = "shift-nonunital")]
    model: String,
    /// Frozen prefix size N.
    #[arg(long, default_value_t = 1)]
    frozen: usize,
    /// Averaging sizes M.
    #[arg(long = "m", value_delimiter = ',', default_values_t = [4, 8, 16, 32])]
    m_sizes: Vec<usize>,
    /// Word over 1..=N+1; the letter N+1 is averaged.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 2, 1, 1, 2, 2])]
    word: Vec<usize>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    /// n <= 3, degree <= 4 (the default).
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// n <= 4, degree <= 5.
    #[arg(long)]
    full: bool,
}

#[derive(Debug, Serialize)]
struct Outcome {
    config: Value,
    checks: Vec<Check>,
    details: Value,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidSize("--jobs must be at least 1".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let corrupt = cli
        .corrupt
        .iter()
        .map(|c| {
            Corruption::parse(c)
                .ok_or_else(|| Error::InvalidModel(format!("unknown corruption target `{c}`")))
        })
        .collect::<Result<Vec<_>>>()?;

    let outcome = match &cli.command {
        Command::Relations(a) => relations(a, &corrupt)?,
        Command::Invariance { kind, args } => invariance(*kind, args, &corrupt)?,
        Command::Independence { kind, args } => independence(*kind, args, &corrupt)?,
        Command::Averaging(a) => averaging(a, &corrupt)?,
        Command::Suite(a) => suite_cmd(a, &corrupt)?,
    };
    let verdict = all_pass(&outcome.checks);
    print_summary(&outcome.checks, verdict);

    if let Some(path) = &cli.out {
        let mut config = outcome.config.clone();
        if let Value::Object(map) = &mut config {
            map.insert("jobs".into(), json!(cli.jobs));
            map.insert("corrupt".into(), json!(cli.corrupt));
        }
        let report = json!({
            "version": 1,
            "config": config,
            "checks": outcome.checks,
            "verdict": verdict,
            "details": outcome.details,
        });
        write_report(path, &report)?;
    }
    Ok(if verdict.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn write_report(path: &Path, report: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    if path == Path::new("-") {
        println!("{text}");
    } else {
        fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn print_summary(checks: &[Check], verdict: Verdict) {
    for c in checks {
        let mark = if c.verdict.passed() { "PASS" } else { "FAIL" };
        let witness = c
            .witness
            .as_ref()
            .map(|w| format!("  witness={w}"))
            .unwrap_or_default();
        println!(
            "{mark} {}  residual={:.3e}  tol={:.1e}{witness}",
            c.name, c.residual, c.tolerance
        );
    }
    let passed = checks.iter().filter(|c| c.verdict.passed()).count();
    println!(
        "verdict: {} ({passed}/{} checks passed)",
        if verdict.passed() { "pass" } else { "fail" },
        checks.len()
    );
}

enum RepChoice {
    Standard,
    Averaging { frozen: usize, m: usize },
}

fn parse_rep(s: &str) -> Result<RepChoice> {
    if s == "standard" {
        return Ok(RepChoice::Standard);
    }
    let bad = || {
        Error::InvalidSize(format!(
            "unknown rep `{s}`; use `standard` or `averaging:N,M`"
        ))
    };
    let rest = s.strip_prefix("averaging:").ok_or_else(bad)?;
    let (a, b) = rest.split_once(',').ok_or_else(bad)?;
    Ok(RepChoice::Averaging {
        frozen: a.trim().parse().map_err(|_| bad())?,
        m: b.trim().parse().map_err(|_| bad())?,
    })
}

fn build_rep(choice: &RepChoice, n: usize, corrupt: &[Corruption]) -> Result<SemigroupRep> {
    match *choice {
        RepChoice::Standard => {
            let rep = semigroup::build_standard_rep(n)?;
            if corrupt.contains(&Corruption::StandardRep) {
                return suite::corrupt_standard(rep);
            }
            Ok(rep)
        }
        RepChoice::Averaging { frozen, m } => {
            let rep = semigroup::build_averaging_rep(frozen, m)?;
            if corrupt.contains(&Corruption::AveragingRep) {
                return suite::corrupt_averaging(rep, frozen);
            }
            Ok(rep)
        }
    }
}

fn load_model(
    name: &str,
    n: usize,
    truncation: Option<usize>,
    max_len: usize,
    corrupt: &[Corruption],
) -> Result<BuiltModel> {
    let spec = match ModelKind::parse(name) {
        Some(kind) if kind != ModelKind::Custom => ModelSpec::builtin(kind, n, truncation),
        _ => ModelSpec::load(Path::new(name))?,
    };
    let built = spec.build(max_len)?;
    if corrupt.contains(&Corruption::Model(spec.kind)) {
        return suite::corrupt_model(built, spec.kind);
    }
    Ok(built)
}

fn relations(a: &RelationsArgs, corrupt: &[Corruption]) -> Result<Outcome> {
    let choice = parse_rep(&a.rep)?;
    let rep = build_rep(&choice, a.n, corrupt)?;
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    if matches!(a.check, RelationCheck::Relations | RelationCheck::All) {
        let r = semigroup::check_relations(&rep, a.tol);
        checks.extend(r.checks.iter().cloned());
        details.insert("relations".into(), serde_json::to_value(&r)?);
    }
    if matches!(
        a.check,
        RelationCheck::Comultiplication | RelationCheck::All
    ) {
        let r = semigroup::comultiplication_check(&rep, a.tol);
        checks.extend(r.checks.iter().cloned());
        details.insert("comultiplication".into(), serde_json::to_value(&r)?);
    }
    Ok(Outcome {
        config: json!({
            "subcommand": "relations",
            "n": rep.n(),
            "rep": rep.label(),
            "check": a.check,
            "tolerance": a.tol,
        }),
        checks,
        details: Value::Object(details),
    })
}

fn invariance(kind: InvarianceKind, a: &InvarianceArgs, corrupt: &[Corruption]) -> Result<Outcome> {
    if a.degree == 0 {
        return Err(Error::InvalidSize("--degree must be at least 1".into()));
    }
    let m = &a.model;
    let built = load_model(&m.model, m.n, m.truncation, a.degree, corrupt)?;
    let model = &built.model;
    let (report, rep_label) = match kind {
        InvarianceKind::Bsn => (
            coaction::bsn_invariance_check(model, a.degree, m.tol)?,
            "trivial".to_string(),
        ),
        _ => {
            let rep = build_rep(&parse_rep(&a.rep)?, model.n(), corrupt)?;
            let r = if let InvarianceKind::Linear = kind {
                coaction::linear_invariance_check(model, &rep, a.degree, m.tol)?
            } else {
                coaction::algebraic_invariance_check(model, &rep, a.degree, m.tol)?
            };
            (r, rep.label().to_string())
        }
    };
    Ok(Outcome {
        config: json!({
            "subcommand": "invariance",
            "kind": kind,
            "model": m.model,
            "n": model.n(),
            "max_degree": a.degree,
            "tolerance": m.tol,
            "rep": rep_label,
        }),
        checks: vec![report.to_check()],
        details: serde_json::to_value(&report)?,
    })
}

fn independence(
    kind: IndependenceKind,
    a: &IndependenceArgs,
    corrupt: &[Corruption],
) -> Result<Outcome> {
    let m = &a.model;
    let max_len = match kind {
        IndependenceKind::MomentReduction => a.max_indices * a.max_power,
        _ => a.max_len,
    };
    if max_len == 0 {
        return Err(Error::InvalidSize(
            "word length bound must be at least 1".into(),
        ));
    }
    let built = load_model(&m.model, m.n, m.truncation, max_len, corrupt)?;
    let model = &built.model;
    let need_e = || {
        built.expectation.as_ref().map(Some).ok_or_else(|| {
            Error::InvalidModel(format!(
                "model `{}` has no conditional expectation; this check needs one",
                model.label()
            ))
        })
    };
    let report = match kind {
        IndependenceKind::Boolean => probspace::check_boolean_independence(
            model,
            built.expectation.as_ref(),
            a.max_len,
            m.tol,
        )?,
        IndependenceKind::Factorization => {
            probspace::check_factorization_property(model, need_e()?, a.max_len, m.tol)?
        }
        IndependenceKind::FreeAfterUnitalization => {
            probspace::check_boolean_implies_free(model, need_e()?, a.max_len, m.tol)?
        }
        IndependenceKind::MomentReduction => {
            probspace::check_moment_reduction(model, a.max_indices, a.max_power, m.tol)?
        }
    };
    Ok(Outcome {
        config: json!({
            "subcommand": "independence",
            "kind": kind,
            "model": m.model,
            "n": model.n(),
            "max_len": max_len,
            "tolerance": m.tol,
            "expectation": built.expectation.is_some(),
        }),
        checks: vec![report.to_check()],
        details: serde_json::to_value(&report)?,
    })
}

fn averaging(a: &AveragingArgs, corrupt: &[Corruption]) -> Result<Outcome> {
    let largest = a.m_sizes.iter().copied().max().unwrap_or(0);
    let n = a.frozen + largest.max(a.word.len());
    let built = load_model(&a.model, n, None, a.word.len(), corrupt)?;
    let report = coaction::averaging_experiment_with(
        &built.model,
        a.frozen,
        &a.m_sizes,
        &a.word,
        a.tol,
        |m| {
            build_rep(
                &RepChoice::Averaging {
                    frozen: a.frozen,
                    m,
                },
                0,
                corrupt,
            )
        },
    )?;
    for row in &report.rows {
        let ratio = row.ratio.map_or("-".to_string(), |q| format!("{q:.4}"));
        println!(
            "M={:<4} deviation={:.6e}  factor={:.6e}  bound={:.6e}  ratio={ratio}",
            row.m_size, row.deviation, row.factor, row.bound
        );
    }
    Ok(Outcome {
        config: json!({
            "subcommand": "averaging",
            "model": a.model,
            "frozen": a.frozen,
            "m": a.m_sizes,
            "word": a.word,
            "tolerance": a.tol,
        }),
        checks: report.checks(),
        details: serde_json::to_value(&report)?,
    })
}

fn suite_cmd(a: &SuiteArgs, corrupt: &[Corruption]) -> Result<Outcome> {
    let mut cfg = if a.full {
        SuiteConfig::full()
    } else {
        SuiteConfig::quick()
    };
    cfg.corrupt = corrupt.to_vec();
    let start = Instant::now();
    let report = suite::run_suite(&cfg)?;
    for g in &report.groups {
        println!(
            "[{}] {} ({} checks, {:.2}s)",
            if g.verdict.passed() { "pass" } else { "FAIL" },
            g.name,
            g.checks.len(),
            g.seconds
        );
    }
    println!("suite time: {:.2}s", start.elapsed().as_secs_f64());
    Ok(Outcome {
        config: json!({
            "subcommand": "suite",
            "mode": if cfg.full { "full" } else { "quick" },
            "max_n": cfg.max_n,
            "max_degree": cfg.max_degree,
            "tolerance": cfg.tolerance,
        }),
        checks: report.checks().cloned().collect(),
        details: json!({
            "groups": report.groups.iter().map(|g| json!({
                "name": g.name,
                "seconds": g.seconds,
                "verdict": g.verdict,
                "checks": g.checks.len(),
            })).collect::<Vec<_>>(),
        }),
    })
}
