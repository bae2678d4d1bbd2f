//! Command-line driver: reads a JSON family definition, runs the
//! verification / translation-number / classification pipelines, and
//! drops deterministic JSON reports plus CSV plot data under a run
//! directory named by the configuration's hash.
//!
//! Exit codes: 0 success, 1 input or numeric failure, 2 hypothesis or
//! precondition failure, 3 resolution too coarse to pick a case.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use config::Config;
use pseudogroup::classify::{classify, CasePayload, ClassifyError, SemiConjugacy};
use pseudogroup::nilpotency::{
    verify_abelian, verify_metabelian, verify_near_identity_nilpotent,
};
use pseudogroup::pmap::eval_word;
use pseudogroup::rotation::{
    relative_translation_number_traced, RationalApprox, TauError,
};
use pseudogroup::Word;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "pseudogroup",
    version,
    about = "Verification, translation numbers, and classification for \
             families of near-identity increasing maps on (-1,1)"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the identity tolerance.
    #[arg(long = "tol-identity", global = true)]
    tol_identity: Option<f64>,
    /// Overrides the orbit length behind translation numbers.
    #[arg(long = "iters", global = true)]
    iters: Option<usize>,
    /// Overrides the largest denominator for rational identification.
    #[arg(long = "qmax", global = true)]
    qmax: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the family against its claimed order, plus the abelian and
    /// metabelian refinements.
    Verify,
    /// Measure how fast generator `j` moves relative to generator `i`
    /// near a commutator-fixed base point.
    Tau {
        /// Ruler generator (1-based index into the config's list).
        #[arg(long)]
        i: usize,
        /// Subject generator (1-based index into the config's list).
        #[arg(long)]
        j: usize,
        /// Base point; must be fixed by the pair's commutator.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
    },
    /// Run the full three-way classification.
    Classify,
    /// Iterate a word and dump the orbit for plotting.
    Orbit {
        /// Word in generator names, e.g. "f1 f2^-1".
        #[arg(long)]
        word: String,
        /// Starting point.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        /// Number of steps.
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Ok(threads) = std::env::var("PSEUDOGROUP_THREADS") {
        let n: usize = threads
            .parse()
            .context("PSEUDOGROUP_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }

    let path = cli
        .config
        .ok_or_else(|| anyhow!("--config PATH is required"))?;
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut config: Config = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;

    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    if let Some(tol) = cli.tol_identity {
        config.tolerances.identity = tol;
    }
    if let Some(iters) = cli.iters {
        config.iterations.tau = iters;
    }
    if let Some(qmax) = cli.qmax {
        config.q_max = qmax;
    }
    config.validate()?;

    let run_dir = config.output_dir.join(config.run_id());
    fs::create_dir_all(&run_dir)
        .with_context(|| format!("creating run directory {}", run_dir.display()))?;

    match cli.command {
        Command::Verify => cmd_verify(&config, &run_dir),
        Command::Tau { i, j, x0 } => cmd_tau(&config, &run_dir, i, j, x0),
        Command::Classify => cmd_classify(&config, &run_dir),
        Command::Orbit { word, x0, n } => cmd_orbit(&config, &run_dir, &word, x0, n),
    }
}

/// Writes the standard report envelope and returns the file's path.
fn write_report(
    run_dir: &Path,
    command: &str,
    config: &Config,
    body: serde_json::Value,
) -> Result<PathBuf> {
    let report = json!({
        "schema_version": 1,
        "command": command,
        "run_id": config.run_id(),
        "config": serde_json::to_value(config)?,
        "body": body,
    });
    let path = run_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(&path, text)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// 17 significant digits, enough to reproduce every f64 exactly.
fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_verify(config: &Config, run_dir: &Path) -> Result<u8> {
    let gens = config.build_family()?;
    let opts = config.verify_options();
    let nilpotency = verify_near_identity_nilpotent(&gens, opts)?;
    let abelian = verify_abelian(&gens, opts)?;
    let metabelian = verify_metabelian(&gens, opts)?;
    println!(
        "distance to identity {:.3e} against threshold {:.3e} for order {}: {}",
        nilpotency.epsilon,
        nilpotency.epsilon_threshold,
        nilpotency.claimed_order,
        if nilpotency.epsilon_ok { "ok" } else { "too large" },
    );
    println!(
        "order-{} verification: {} ({} commutators checked)",
        nilpotency.claimed_order,
        if nilpotency.passed { "pass" } else { "fail" },
        nilpotency.commutators_checked,
    );
    println!(
        "abelian: {}; metabelian: {}",
        if abelian.passed { "pass" } else { "fail" },
        if metabelian.passed { "pass" } else { "fail" },
    );
    let passed = nilpotency.passed;
    let body = json!({
        "nilpotency": nilpotency,
        "abelian": abelian,
        "metabelian": metabelian,
    });
    let path = write_report(run_dir, "verify", config, body)?;
    println!("report: {}", path.display());
    Ok(if passed { 0 } else { 2 })
}

fn rational_text(r: Option<RationalApprox>) -> String {
    match r {
        None => "none".into(),
        Some(r) if r.low_confidence => format!("{}/{} low-confidence", r.p, r.q),
        Some(r) => format!("{}/{}", r.p, r.q),
    }
}

fn cmd_tau(config: &Config, run_dir: &Path, i: usize, j: usize, x0: f64) -> Result<u8> {
    let gens = config.build_family()?;
    let n = gens.len();
    for (flag, index) in [("--i", i), ("--j", j)] {
        if index == 0 || index > n {
            bail!("{flag} must name a generator between 1 and {n}, got {index}");
        }
    }
    let trace_path = run_dir.join("trace.csv");
    if i == j {
        // A map measured against itself advances exactly one step per step.
        println!("1.0000 \u{b1} 0.0000 (rational 1/1)");
        write_csv(&trace_path, "n,a,k,p", std::iter::empty())?;
        let body = json!({
            "ruler": i, "subject": j, "x0": x0,
            "value": 1.0, "error_bound": 0.0,
            "rational": { "p": 1, "q": 1, "low_confidence": false },
        });
        let path = write_report(run_dir, "tau", config, body)?;
        println!("trace: {}; report: {}", trace_path.display(), path.display());
        return Ok(0);
    }

    let ruler = Word::generator(i - 1);
    let subject = Word::generator(j - 1);
    let opts = config.tau_options();
    let commutator = Word::commutator(&ruler, &subject);
    match eval_word(&gens, &commutator, x0, opts.inversion_tol) {
        Ok(image) => {
            let dev = (image - x0).abs();
            if dev > config.tolerances.identity {
                eprintln!(
                    "base point {x0} is not commutator-fixed: [{}, {}] moves it by \
                     {dev:.3e} (tolerance {:.3e})",
                    gens.generator(i - 1).name(),
                    gens.generator(j - 1).name(),
                    config.tolerances.identity,
                );
                return Ok(2);
            }
        }
        Err(e) => {
            eprintln!("the pair's commutator is undefined at base point {x0}: {e}");
            return Ok(2);
        }
    }

    let (est, trace) =
        match relative_translation_number_traced(&gens, &subject, &ruler, x0, opts) {
            Ok(fine) => fine,
            Err(e @ (TauError::RulerFixed { .. } | TauError::WindowViolation { .. })) => {
                eprintln!("precondition failed: {e}");
                return Ok(2);
            }
            Err(e) => return Err(e.into()),
        };
    println!(
        "{:.4} \u{b1} {:.4} (rational {})",
        est.value,
        est.error_bound,
        rational_text(est.rational),
    );
    write_csv(
        &trace_path,
        "n,a,k,p",
        trace
            .iter()
            .map(|row| format!("{},{},{},{}", row.n, csv_float(row.a), row.k, row.p)),
    )?;
    let body = json!({
        "ruler": i, "subject": j, "x0": x0,
        "estimate": est,
    });
    let path = write_report(run_dir, "tau", config, body)?;
    println!("trace: {}; report: {}", trace_path.display(), path.display());
    Ok(0)
}

/// Dumps a straightening pair as `t,value` CSVs next to the report.
fn write_conjugacy_csvs(
    run_dir: &Path,
    suffix: &str,
    conjugacy: &SemiConjugacy,
) -> Result<()> {
    let psi = &conjugacy.psi;
    write_csv(
        &run_dir.join(format!("psi{suffix}.csv")),
        "x,t",
        psi.x_nodes()
            .iter()
            .zip(psi.y_nodes())
            .map(|(x, t)| format!("{},{}", csv_float(*x), csv_float(*t))),
    )?;
    let phi = &conjugacy.phi;
    write_csv(
        &run_dir.join(format!("phi{suffix}.csv")),
        "t,x",
        phi.x_nodes()
            .iter()
            .zip(phi.y_nodes())
            .map(|(t, x)| format!("{},{}", csv_float(*t), csv_float(*x))),
    )?;
    Ok(())
}

fn cmd_classify(config: &Config, run_dir: &Path) -> Result<u8> {
    let gens = config.build_family()?;
    let report = match classify(&gens, &config.classify_options()) {
        Ok(report) => report,
        Err(ClassifyError::HypothesisFailed { epsilon, threshold, order, report }) => {
            eprintln!(
                "refused: the family failed its order-{order} verification \
                 (distance {epsilon:.3e}, threshold {threshold:.3e})"
            );
            let body = json!({
                "refusal": "hypothesis_failed",
                "epsilon": epsilon,
                "threshold": threshold,
                "order": order,
                "verification": report,
            });
            let path = write_report(run_dir, "classify", config, body)?;
            eprintln!("report: {}", path.display());
            return Ok(2);
        }
        Err(ClassifyError::AmbiguousResolution { index, value, p, q }) => {
            eprintln!(
                "unresolved: generator {}'s relative speed {value} sits between the \
                 dense and periodic cases at this resolution",
                index + 1,
            );
            let body = json!({
                "refusal": "ambiguous_resolution",
                "generator": index + 1,
                "value": value,
                "candidates": [
                    { "case": 2, "reading": "irrational at resolution", "value": value },
                    { "case": 3, "reading": "rational", "p": p, "q": q },
                ],
            });
            let path = write_report(run_dir, "classify", config, body)?;
            eprintln!("report: {}", path.display());
            return Ok(3);
        }
        Err(e) => return Err(e.into()),
    };

    match &report.payload {
        CasePayload::FixedIntervals { intervals } => {
            println!(
                "case 1: {} shared fixed point(s), {} interval(s) analyzed",
                report.common_fixed_points.points.len()
                    + report.common_fixed_points.plateaus.len(),
                intervals.len(),
            );
            for (idx, analysis) in intervals.iter().enumerate() {
                write_conjugacy_csvs(
                    run_dir,
                    &format!("_interval_{idx}"),
                    &analysis.conjugacy,
                )?;
            }
        }
        CasePayload::DenseTranslations(dense) => {
            println!(
                "case 2: dense translations, measured against {}",
                dense.ruler_text,
            );
            write_conjugacy_csvs(run_dir, "", &dense.conjugacy)?;
        }
        CasePayload::PeriodicChain(periodic) => {
            println!(
                "case 3: periodic chain of {} points, constants {:?}, period {}",
                periodic.chain.points.len(),
                periodic.constants,
                periodic.q,
            );
            let base = periodic.chain.base_index as i64;
            write_csv(
                &run_dir.join("chain.csv"),
                "k,y",
                periodic.chain.points.iter().enumerate().map(|(k, y)| {
                    format!("{},{}", k as i64 - base, csv_float(*y))
                }),
            )?;
        }
    }
    println!(
        "abelian: {}; metabelian: {}",
        report.abelian, report.metabelian,
    );
    let body = serde_json::to_value(&report)?;
    let path = write_report(run_dir, "classify", config, body)?;
    println!("report: {}", path.display());
    Ok(0)
}

fn cmd_orbit(
    config: &Config,
    run_dir: &Path,
    word_text: &str,
    x0: f64,
    n: usize,
) -> Result<u8> {
    let gens = config.build_family()?;
    let word = gens
        .parse_word(word_text)
        .with_context(|| format!("parsing word `{word_text}`"))?;
    let tol = config.tolerances.inversion;
    let mut rows = Vec::with_capacity(n + 1);
    let mut x = x0;
    rows.push(format!("0,{},ok", csv_float(x)));
    for k in 1..=n {
        match eval_word(&gens, &word, x, tol) {
            Ok(next) => {
                x = next;
                rows.push(format!("{k},{},ok", csv_float(x)));
            }
            Err(_) => {
                rows.push(format!("{k},,out_of_domain"));
                break;
            }
        }
    }
    let flagged = rows.last().is_some_and(|r| r.ends_with("out_of_domain"));
    let path = run_dir.join("orbit.csv");
    let steps = rows.len() - 1;
    write_csv(&path, "k,x,status", rows.into_iter())?;
    println!(
        "orbit of `{word_text}` from {x0}: {steps} row(s){}",
        if flagged { ", stopped at the domain boundary" } else { "" },
    );
    println!("orbit: {}", path.display());
    Ok(0)
}
