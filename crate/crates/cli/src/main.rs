//! flocksim command line.
//!
//! A pipeline of small subcommands so every stage can be tested on
//! fixtures: `run` simulates and writes the raw artifacts, `detect`
//! scores an exported state, `calibrate` fits detector weights or the
//! growth target, `report` turns scores into cohort statistics.
//!
//! Exit codes: 0 ok, 2 usage/config error, 3 runtime error.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flocksim_core::config::{LoadedConfig, RunConfig};
use flocksim_core::detection::{DetectorModel, MODEL_VERSION};
use flocksim_core::experiment::{
    baseline_times, build_report, calibrate_detector, calibrate_growth, growth_of,
    hybrid_rosters, norms_of_population, sample_baseline, score_accounts, trend_report,
    ExperimentError, Simulation,
};
use flocksim_core::export;
use flocksim_core::platform::AccountId;
use flocksim_core::rng::derive_stream;

#[derive(Parser)]
#[command(
    name = "flocksim",
    version,
    about = "Deterministic microblogging-platform simulator with scripted bots and a bot-detection pipeline"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured experiment; writes events.jsonl,
    /// state.jsonl, growth.csv, trending.csv, and baseline.csv.
    Run {
        /// Skip the (large) event log.
        #[arg(long)]
        no_event_log: bool,
    },
    /// Score every account of a state export; writes scores.csv.
    Detect {
        /// State export produced by `run`.
        #[arg(long)]
        state: PathBuf,
        /// Calibrated weights file; without it, equal weights and
        /// population-derived norms are used.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Fit detector weights on the configured labeled scenario (writes
    /// weights.json), or fit the human follow-back probability to a
    /// follower-growth target (writes calibration.json).
    Calibrate {
        /// Calibrate growth toward this final follower total instead of
        /// fitting detector weights.
        #[arg(long)]
        growth_target: Option<f64>,
        /// Relative tolerance of the growth target.
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
        /// Seeds averaged per growth evaluation.
        #[arg(long, default_value_t = 5)]
        evaluation_seeds: u64,
    },
    /// Cohort box summaries and rank-sum tests; writes stats.json and
    /// box_summary.csv.
    Report {
        /// scores.csv from `detect`.
        #[arg(long)]
        scores: PathBuf,
        /// baseline.csv from `run`; enables the baseline cohorts.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<flocksim_core::config::ConfigError> for CliError {
    fn from(e: flocksim_core::config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<export::ExportError> for CliError {
    fn from(e: export::ExportError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Input files that fail to read or parse are usage errors (exit 2).
fn input_err(e: export::ExportError) -> CliError {
    CliError::Config(e.to_string())
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match &e {
            ExperimentError::Sim(flocksim_core::experiment::SimError::Config(_)) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { no_event_log } => cmd_run(cli, *no_event_log),
        Command::Detect { state, weights } => cmd_detect(cli, state, weights.as_deref()),
        Command::Calibrate {
            growth_target,
            tolerance,
            evaluation_seeds,
        } => cmd_calibrate(cli, *growth_target, *tolerance, *evaluation_seeds),
        Command::Report { scores, baseline } => cmd_report(cli, scores, baseline.as_deref()),
    }
}

fn require_config(cli: &Cli) -> Result<LoadedConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this subcommand".into()))?;
    Ok(RunConfig::load(path)?)
}

fn log(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn cmd_run(cli: &Cli, no_event_log: bool) -> Result<(), CliError> {
    let loaded = require_config(cli)?;
    let mut sim = Simulation::build(&loaded, cli.seed).map_err(ExperimentError::from)?;
    if no_event_log {
        sim.engine.set_record_log(false);
    }
    log(cli, format!("seed {}: simulating {} days...", sim.root_seed(), sim.end().day() - sim.activity_start().day()));
    sim.run_all().map_err(ExperimentError::from)?;
    for w in &sim.warnings {
        log(cli, format!("warning: {w}"));
    }

    let growth = growth_of(&sim);
    let trends = trend_report(&sim);
    let locale_filter = match sim.cfg.experiment.baseline_locale.as_str() {
        "all" => None,
        other => Some(other.to_owned()),
    };
    let mut rng = derive_stream(sim.root_seed(), "baseline").expect("label");
    let baseline = sample_baseline(
        &sim.platform,
        &baseline_times(&sim),
        sim.cfg.experiment.baseline_coverage,
        sim.cfg.experiment.baseline_window_secs,
        sim.end(),
        locale_filter.as_deref(),
        &mut rng,
    )?;

    let out = &cli.out;
    if !no_event_log {
        export::write_event_log(&out.join("events.jsonl"), sim.engine.log())?;
    }
    export::write_state(&out.join("state.jsonl"), &sim.platform)?;
    export::write_csv(&out.join("growth.csv"), &export::growth_csv(&growth))?;
    export::write_csv(&out.join("trending.csv"), &export::trending_csv(&trends))?;
    export::write_csv(&out.join("baseline.csv"), &export::baseline_csv(&sim.platform, &baseline))?;
    log(
        cli,
        format!(
            "final followers {} | push rank {:?} | baseline accounts {} | {} artifacts in {}",
            growth.final_total(),
            trends.best_rank_during_push(),
            baseline.len(),
            if no_event_log { 4 } else { 5 },
            out.display()
        ),
    );
    Ok(())
}

fn cmd_detect(cli: &Cli, state: &Path, weights: Option<&Path>) -> Result<(), CliError> {
    let timeline_cap = cli
        .config
        .as_ref()
        .map(|p| RunConfig::load(p).map(|l| l.cfg.platform.timeline_cap))
        .transpose()?
        .unwrap_or(1_000);
    let platform = export::read_state(state, timeline_cap).map_err(input_err)?;
    let at = platform.last_activity();
    let model = match weights {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Config(format!("cannot read weights `{}`: {e}", path.display())))?;
            let model: DetectorModel = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Config(format!("weights file `{}`: {e}", path.display())))?;
            if model.version != MODEL_VERSION {
                return Err(CliError::Config(format!(
                    "weights file version {} unsupported (expected {MODEL_VERSION})",
                    model.version
                )));
            }
            model
        }
        None => {
            log(cli, "no weights file: equal weights, norms from this population");
            let params = match cli.config.as_ref() {
                Some(p) => RunConfig::load(p)?.cfg.detection.params()?,
                None => Default::default(),
            };
            DetectorModel::uncalibrated(norms_of_population(&platform, at, &params)?, params)
        }
    };
    let scored = score_accounts(&platform, at, &model)?;
    export::write_csv(&cli.out.join("scores.csv"), &export::scores_csv(&scored))?;
    log(cli, format!("scored {} accounts -> {}", scored.len(), cli.out.join("scores.csv").display()));
    Ok(())
}

fn cmd_calibrate(
    cli: &Cli,
    growth_target: Option<f64>,
    tolerance: f64,
    evaluation_seeds: u64,
) -> Result<(), CliError> {
    let loaded = require_config(cli)?;
    match growth_target {
        Some(target) => {
            let seeds: Vec<u64> = (0..evaluation_seeds.max(1))
                .map(|i| cli.seed.unwrap_or(loaded.cfg.seed) + 100 + i)
                .collect();
            log(cli, format!("bisecting follow-back probability toward {target} followers..."));
            let fit = calibrate_growth(&loaded, target, tolerance, &seeds)?;
            export::write_json(&cli.out.join("calibration.json"), &fit)?;
            log(
                cli,
                format!(
                    "follow_back_prob = {:.4} (mean total {:.1}, {} evaluations) -> calibration.json",
                    fit.follow_back_prob, fit.achieved_mean, fit.evaluations
                ),
            );
        }
        None => {
            log(cli, "running labeled calibration scenario...");
            let model = calibrate_detector(&loaded, cli.seed)?;
            if model.degenerate {
                log(cli, "warning: degenerate calibration, score distributions barely separate");
            }
            export::write_json(&cli.out.join("weights.json"), &model)?;
            log(
                cli,
                format!(
                    "balanced accuracy {:.3}, tau {:.3} -> weights.json",
                    model.balanced_accuracy, model.tau
                ),
            );
        }
    }
    Ok(())
}

struct ScoreRow {
    id: AccountId,
    locale: String,
    aggregate: f64,
    archetype: String,
}

fn parse_scores(path: &Path) -> Result<Vec<ScoreRow>, CliError> {
    let rows = export::read_csv(path).map_err(input_err)?;
    let header = rows
        .first()
        .ok_or_else(|| CliError::Config(format!("`{}` is empty", path.display())))?;
    let col = |name: &str| -> Result<usize, CliError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("`{}` lacks column `{name}`", path.display())))
    };
    let (c_id, c_locale, c_agg, c_arch) = (
        col("account_id")?,
        col("locale")?,
        col("aggregate")?,
        col("archetype")?,
    );
    let mut out = Vec::with_capacity(rows.len().saturating_sub(1));
    for (i, row) in rows.iter().enumerate().skip(1) {
        let bad = |m: &str| CliError::Config(format!("`{}` row {}: {m}", path.display(), i + 1));
        out.push(ScoreRow {
            id: AccountId(row[c_id].parse().map_err(|_| bad("bad account_id"))?),
            locale: row[c_locale].clone(),
            aggregate: row[c_agg].parse().map_err(|_| bad("bad aggregate"))?,
            archetype: row[c_arch].clone(),
        });
    }
    Ok(out)
}

fn cmd_report(cli: &Cli, scores: &Path, baseline: Option<&Path>) -> Result<(), CliError> {
    let rows = parse_scores(scores)?;
    let baseline_ids: Option<BTreeSet<AccountId>> = match baseline {
        Some(path) => {
            let parsed = export::read_csv(path).map_err(input_err)?;
            Some(
                parsed
                    .iter()
                    .skip(1)
                    .filter_map(|r| r.first())
                    .filter_map(|id| id.parse().ok())
                    .map(AccountId)
                    .collect(),
            )
        }
        None => None,
    };
    // Hybrid clique/single split needs the roster layout from the config.
    let (clique, hybrids) = match cli.config.as_ref() {
        Some(path) => hybrid_rosters(&RunConfig::load(path)?.cfg),
        None => (BTreeSet::new(), BTreeSet::new()),
    };

    let mut cohorts: Vec<(String, Vec<f64>)> = Vec::new();
    let mut push = |name: &str, values: Vec<f64>| -> usize {
        cohorts.push((name.to_owned(), values));
        cohorts.len() - 1
    };

    let hybrid_rows: Vec<&ScoreRow> = rows.iter().filter(|r| r.archetype == "hybrid_bot").collect();
    let in_clique = |r: &&ScoreRow| {
        if hybrids.is_empty() {
            false
        } else {
            clique.contains(&r.id)
        }
    };
    let bots_all = push("bots_all", hybrid_rows.iter().map(|r| r.aggregate).collect());
    let bots_group = push(
        "bots_group",
        hybrid_rows.iter().filter(|r| in_clique(r)).map(|r| r.aggregate).collect(),
    );
    let bots_single = push(
        "bots_single",
        hybrid_rows
            .iter()
            .filter(|r| !in_clique(r) && !hybrids.is_empty())
            .map(|r| r.aggregate)
            .collect(),
    );
    push(
        "naive_bots",
        rows.iter().filter(|r| r.archetype == "naive_bot").map(|r| r.aggregate).collect(),
    );

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if let Some(ids) = &baseline_ids {
        let in_baseline =
            |r: &&ScoreRow| ids.contains(&r.id) && r.archetype == "human";
        let baseline_all = push(
            "baseline",
            rows.iter().filter(|r| ids.contains(&r.id)).map(|r| r.aggregate).collect(),
        );
        let baseline_human = push(
            "baseline_human",
            rows.iter().filter(in_baseline).map(|r| r.aggregate).collect(),
        );
        let _ = baseline_all;
        pairs.push((bots_all, baseline_human));
        pairs.push((bots_group, baseline_human));
        pairs.push((bots_single, baseline_human));
        let locales: BTreeSet<String> = rows
            .iter()
            .filter(|r| ids.contains(&r.id))
            .map(|r| r.locale.clone())
            .collect();
        for locale in locales {
            let idx = push(
                &format!("baseline_human_{locale}"),
                rows.iter()
                    .filter(|r| in_baseline(r) && r.locale == locale)
                    .map(|r| r.aggregate)
                    .collect(),
            );
            pairs.push((bots_all, idx));
        }
    }

    let report = build_report(&cohorts, &pairs);
    export::write_json(&cli.out.join("stats.json"), &report)?;
    let mut box_rows = vec![
        ["cohort", "n", "mean", "min", "q1", "median", "q3", "max"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>(),
    ];
    let sorted: BTreeMap<_, _> = report.cohorts.iter().collect();
    for (name, c) in sorted {
        box_rows.push(vec![
            name.clone(),
            c.n.to_string(),
            format!("{:.6}", c.mean),
            format!("{:.6}", c.summary.min),
            format!("{:.6}", c.summary.q1),
            format!("{:.6}", c.summary.median),
            format!("{:.6}", c.summary.q3),
            format!("{:.6}", c.summary.max),
        ]);
    }
    export::write_csv(&cli.out.join("box_summary.csv"), &box_rows)?;
    log(
        cli,
        format!(
            "{} cohorts, {} tests -> stats.json, box_summary.csv",
            report.cohorts.len(),
            report.tests.len()
        ),
    );
    Ok(())
}
