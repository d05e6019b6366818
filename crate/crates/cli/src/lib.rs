//! `induct` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a property suite that should pass does
//! not, 2 on usage, validation or I/O errors.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use induct_core::characterization::standard_suites;
use induct_core::credal::{read_labeled_csv, write_labeled_csv, DEFAULT_EPS};
use induct_core::dominance::{verify_dominance_with, DominanceSearch};
use induct_core::harness::{run_experiment, ExperimentConfig};
use induct_core::updating::{general_bayes_update, inferential_update, predictive_update};
use induct_core::{Credibility, Error, HypothesisSet, LossValue, ProbabilityVector, ScoreVector};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "induct",
    version,
    about = "Inferential and predictive updating over finite hypothesis sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Inferential,
    Predictive,
    GeneralBayes,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Update a prior with one batch of evidence and write the posterior CSV.
    ///
    /// Scores are matched to the prior by label. Inferential scores are
    /// positive multipliers, predictive scores additive, general-bayes
    /// scores are losses.
    Update {
        #[arg(long, value_enum)]
        rule: RuleArg,
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Predictive only: multiply raw scores (e.g. CRPS values) by this negative constant.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        /// General-bayes only: learning rate (default 1).
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Run a seeded experiment; writes results.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check a credibility CSV for accuracy dominance; prints a JSON report.
    Dominance {
        #[arg(long)]
        cred: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every property suite; prints a JSON array of reports.
    Props {
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn run(command: Command, out: &mut impl Write) -> Result<i32, Error> {
    match command {
        Command::Update {
            rule,
            prior,
            scores,
            out: out_path,
            a,
            rate,
        } => update(rule, &prior, &scores, &out_path, a, rate, out),
        Command::Simulate { config, out_dir } => simulate(&config, &out_dir),
        Command::Dominance { cred, seed } => dominance(&cred, seed, out),
        Command::Props { tol, seed } => props(tol, seed, out),
    }
}

fn read_csv(path: &Path) -> Result<(HypothesisSet, Vec<f64>), Error> {
    let file =
        File::open(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    read_labeled_csv(BufReader::new(file))
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Reorders `values` (labelled by `labels`) into the order of `target`.
fn align(
    target: &HypothesisSet,
    labels: &HypothesisSet,
    values: &[f64],
) -> Result<Vec<f64>, Error> {
    if labels.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            found: labels.len(),
        });
    }
    target
        .labels()
        .iter()
        .map(|l| {
            labels.index_of(l).map(|i| values[i]).ok_or_else(|| {
                Error::InvalidInput(format!("scores have no entry for hypothesis {l:?}"))
            })
        })
        .collect()
}

#[derive(Serialize)]
struct PredictiveSummary<'a> {
    d: f64,
    zeroed: Vec<&'a str>,
    rule: &'static str,
}

fn update(
    rule: RuleArg,
    prior_path: &Path,
    scores_path: &Path,
    out_path: &Path,
    a: Option<f64>,
    rate: Option<f64>,
    out: &mut impl Write,
) -> Result<i32, Error> {
    if a.is_some() && rule != RuleArg::Predictive {
        return Err(Error::InvalidInput(
            "--a applies only to --rule predictive".into(),
        ));
    }
    if rate.is_some() && rule != RuleArg::GeneralBayes {
        return Err(Error::InvalidInput(
            "--rate applies only to --rule general-bayes".into(),
        ));
    }
    let (labels, prior) = read_csv(prior_path)?;
    let prior = ProbabilityVector::new(prior)?;
    let (score_labels, raw) = read_csv(scores_path)?;
    let raw = align(&labels, &score_labels, &raw)?;

    let (posterior, summary) = match rule {
        RuleArg::Inferential => (
            inferential_update(&prior, &ScoreVector::multiplicative(raw)?)?,
            None,
        ),
        RuleArg::Predictive => {
            let scores = match a {
                Some(a) if !(a.is_finite() && a < 0.0) => {
                    return Err(Error::InvalidInput(format!(
                        "--a must be finite and < 0, got {a}"
                    )))
                }
                Some(a) => raw.iter().map(|v| a * v).collect(),
                None => raw,
            };
            let result = predictive_update(&prior, &ScoreVector::additive(scores)?)?;
            let zeroed: Vec<&str> = result
                .zeroed
                .iter()
                .map(|&i| labels.labels()[i].as_str())
                .collect();
            let summary = serde_json::to_string(&PredictiveSummary {
                d: result.d,
                zeroed,
                rule: "predictive",
            })?;
            (result.posterior, Some(summary))
        }
        RuleArg::GeneralBayes => {
            let losses = LossValue::batch(&raw, rate.unwrap_or(1.0))?;
            (general_bayes_update(&prior, &losses)?, None)
        }
    };

    let file = File::create(out_path)?;
    let mut writer = BufWriter::new(file);
    write_labeled_csv(&mut writer, &labels, &posterior)?;
    writer.flush()?;
    if let Some(summary) = summary {
        writeln!(out, "{summary}")?;
    }
    Ok(EXIT_OK)
}

fn simulate(config_path: &Path, out_dir: &Path) -> Result<i32, Error> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let result = run_experiment(&cfg)?;
    fs::create_dir_all(out_dir)?;

    let mut csv = BufWriter::new(File::create(out_dir.join("results.csv"))?);
    result.write_csv(&mut csv)?;
    csv.flush()?;

    let summary = serde_json::json!({
        "config": cfg,
        "models": result.models,
        "rules": result.summaries,
    });
    let mut json = BufWriter::new(File::create(out_dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut json, &summary)?;
    writeln!(json)?;
    json.flush()?;
    Ok(EXIT_OK)
}

fn dominance(cred_path: &Path, seed: u64, out: &mut impl Write) -> Result<i32, Error> {
    let (_, values) = read_csv(cred_path)?;
    let c = Credibility::new(values)?;
    let search = DominanceSearch {
        seed,
        ..DominanceSearch::default()
    };
    let report = verify_dominance_with(&c, DEFAULT_EPS, search);
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(EXIT_OK)
}

fn props(tol: f64, seed: u64, out: &mut impl Write) -> Result<i32, Error> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "--tol must be finite and > 0, got {tol}"
        )));
    }
    let reports = standard_suites(tol, seed)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&reports)?)?;
    let unexpected: Vec<&str> = reports
        .iter()
        .filter(|r| !r.as_expected())
        .map(|r| r.suite.as_str())
        .collect();
    if unexpected.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("suites not behaving as expected: {}", unexpected.join(", "));
        Ok(EXIT_PROPERTY_FAILURE)
    }
}
