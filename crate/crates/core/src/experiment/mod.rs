//! Experiment orchestration: phase-1 follower growth, phase-2 coordinated
//! hashtag push, baseline account sampling at fixed times of day, and the
//! statistical machinery for comparing score cohorts.

pub mod runner;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::config::LoadedConfig;
use crate::detection::{
    account_history, aggregate_score, calibrate, compute_norms, extract_stats, scores_from_stats,
    AccountStats, DetectionError, DetectionParams, DetectorModel, FeatureVector, PopulationNorms,
};
use crate::platform::{AccountId, Archetype, EdgeEventKind, Platform};
use crate::rng::RandomStream;
use crate::time::{parse_clock, SimTime, SECS_PER_DAY, SECS_PER_HOUR};

pub use crate::stats::{rank_sum_test, summarize_box, BoxSummary, RankSumTest};
pub use runner::{replay_log, Action, ChainKind, SimError, Simulation, Trigger};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error("baseline time {requested} outside the simulated span ending at {end}")]
    TimeOutOfRange { requested: SimTime, end: SimTime },
    #[error("growth target {target} unreachable: at follow-back probability 1 the mean total is {max_achievable:.1}")]
    Unreachable { target: f64, max_achievable: f64 },
}

/// Hourly follower counts of every bot over the productive window.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthCurve {
    /// Start of the documented window.
    pub start: SimTime,
    pub bot_ids: Vec<AccountId>,
    /// `per_bot[b][h]` = live follower count of bot `b` at hour `h`.
    pub per_bot: Vec<Vec<u32>>,
    /// Sum over bots per hour.
    pub total: Vec<u32>,
}

impl GrowthCurve {
    pub fn final_total(&self) -> u32 {
        *self.total.last().unwrap_or(&0)
    }

    /// Computes the curve from the platform's edge-event history, covering
    /// `[window.0, window.1]` sampled every hour (inclusive endpoints).
    pub fn from_platform(platform: &Platform, bots: &[AccountId], window: (SimTime, SimTime)) -> GrowthCurve {
        let hours = (window.1 - window.0) / SECS_PER_HOUR;
        let n_samples = hours as usize + 1;
        let mut per_bot = Vec::with_capacity(bots.len());
        for &bot in bots {
            let mut counts = Vec::with_capacity(n_samples);
            let mut live: i64 = 0;
            let mut events = platform.received_edge_events(bot).peekable();
            for h in 0..n_samples {
                let cutoff = window.0 + h as u64 * SECS_PER_HOUR;
                while let Some(ev) = events.peek() {
                    if ev.at > cutoff {
                        break;
                    }
                    match ev.kind {
                        EdgeEventKind::Created => live += 1,
                        EdgeEventKind::Removed => live -= 1,
                    }
                    events.next();
                }
                counts.push(live.max(0) as u32);
            }
            per_bot.push(counts);
        }
        let total = (0..n_samples)
            .map(|h| per_bot.iter().map(|c| c[h]).sum())
            .collect();
        GrowthCurve {
            start: window.0,
            bot_ids: bots.to_vec(),
            per_bot,
            total,
        }
    }
}

/// Phase 1: build the follower network. Runs setup plus productive days;
/// only the productive window is documented in the returned curve.
pub fn run_phase1(loaded: &LoadedConfig, seed: Option<u64>) -> Result<(GrowthCurve, Simulation), ExperimentError> {
    let mut sim = Simulation::build(loaded, seed)?;
    let (_, productive_end) = sim.productive_window();
    sim.run_until(productive_end)?;
    let growth = growth_of(&sim);
    Ok((growth, sim))
}

/// The documented growth curve of a simulation that has reached at least
/// the end of its productive window.
pub fn growth_of(sim: &Simulation) -> GrowthCurve {
    GrowthCurve::from_platform(&sim.platform, &sim.bot_ids(), sim.productive_window())
}

/// One trending window's standing of one pushed hashtag.
#[derive(Debug, Clone, Serialize)]
pub struct TrendWindowEntry {
    pub window_start: SimTime,
    pub hashtag: Arc<str>,
    pub count: u32,
    /// 1-based rank among all hashtags in the window; `None` when the tag
    /// did not occur (an absent tag is unranked).
    pub rank: Option<u32>,
}

/// Per-window ranks of the pushed hashtags across the whole run.
#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub window_secs: u64,
    pub push_window: Option<(SimTime, SimTime)>,
    pub entries: Vec<TrendWindowEntry>,
}

impl TrendReport {
    /// Best (lowest) rank attained in any window overlapping the push.
    pub fn best_rank_during_push(&self) -> Option<u32> {
        let (push_start, push_end) = self.push_window?;
        self.entries
            .iter()
            .filter(|e| {
                e.window_start < push_end
                    && e.window_start.as_secs() + self.window_secs > push_start.as_secs()
            })
            .filter_map(|e| e.rank)
            .min()
    }

    /// Worst-case check that every window starting at or after `cutoff`
    /// ranks the pushed tags strictly below `top_k` (absent counts as
    /// unranked, i.e. below everything).
    pub fn all_below_after(&self, cutoff: SimTime, top_k: u32) -> bool {
        self.entries
            .iter()
            .filter(|e| e.window_start >= cutoff)
            .all(|e| e.rank.is_none_or(|r| r > top_k))
    }
}

/// Phase 2: continue a phase-1 simulation through the coordinated push
/// and report the pushed hashtags' trending ranks per window.
pub fn run_phase2(sim: &mut Simulation) -> Result<TrendReport, ExperimentError> {
    let end = sim.end();
    sim.run_until(end)?;
    Ok(trend_report(sim))
}

/// Hourly (configurable) trending ranks of the pushed hashtags over the
/// whole activity span.
pub fn trend_report(sim: &Simulation) -> TrendReport {
    let window_secs = sim.cfg.platform.trending_window_secs;
    let tags: Vec<Arc<str>> = sim
        .cfg
        .experiment
        .push_hashtags
        .iter()
        .map(|t| Arc::from(t.as_str()))
        .collect();
    let mut entries = Vec::new();
    let mut ws = sim.activity_start();
    let end = sim.end();
    while ws < end {
        let window = (ws, ws + window_secs);
        let ranking = sim.platform.hashtag_ranking(window);
        for tag in &tags {
            let found = ranking
                .iter()
                .position(|(t, _)| t == tag)
                .map(|i| ((i + 1) as u32, ranking[i].1));
            entries.push(TrendWindowEntry {
                window_start: ws,
                hashtag: tag.clone(),
                count: found.map_or(0, |(_, c)| c),
                rank: found.map(|(r, _)| r),
            });
        }
        ws += window_secs;
    }
    TrendReport {
        window_secs,
        push_window: sim.push_window(),
        entries,
    }
}

/// Collects the unique authors seen in coverage-sampled stream windows
/// around each baseline time, optionally restricted to one locale.
pub fn sample_baseline(
    platform: &Platform,
    times: &[SimTime],
    coverage: f64,
    window_secs: u64,
    span_end: SimTime,
    locale: Option<&str>,
    rng: &mut RandomStream,
) -> Result<BTreeSet<AccountId>, ExperimentError> {
    let mut accounts = BTreeSet::new();
    for &t in times {
        let half = window_secs / 2;
        let window = (t.saturating_sub(half), t + (window_secs - half));
        if window.1 > span_end {
            return Err(ExperimentError::TimeOutOfRange {
                requested: t,
                end: span_end,
            });
        }
        let sampled = platform
            .sample_stream(None, coverage, window, rng)
            .map_err(|e| SimError::Runtime(e.to_string()))
            .map_err(ExperimentError::Sim)?;
        for pid in sampled {
            let author = platform.post(pid).expect("sampled post exists").author;
            if let Some(want) = locale {
                if platform.account(author).expect("author exists").locale.as_ref() != want {
                    continue;
                }
            }
            accounts.insert(author);
        }
    }
    Ok(accounts)
}

/// The baseline instants of a simulation per its experiment config:
/// the configured times of day on the configured baseline day.
pub fn baseline_times(sim: &Simulation) -> Vec<SimTime> {
    let day = sim.productive_window().0
        + sim.cfg.experiment.baseline_day_offset as u64 * SECS_PER_DAY;
    sim.cfg
        .experiment
        .baseline_times
        .iter()
        .map(|c| day + parse_clock(c).expect("validated") as u64)
        .collect()
}

/// Result of fitting the human follow-back probability to a growth target.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthCalibration {
    pub follow_back_prob: f64,
    pub achieved_mean: f64,
    pub evaluations: u32,
}

/// Bisects the human follow-back probability over `[0, 1]` until the mean
/// final follower total over the given seeds lands within
/// `tolerance * target` of `target` (or 20 iterations pass). Evaluations
/// run phase 1 only, with event-log retention off.
pub fn calibrate_growth(
    loaded: &LoadedConfig,
    target: f64,
    tolerance: f64,
    seeds: &[u64],
) -> Result<GrowthCalibration, ExperimentError> {
    assert!(!seeds.is_empty(), "at least one evaluation seed");
    if target <= 0.0 {
        return Ok(GrowthCalibration {
            follow_back_prob: 0.0,
            achieved_mean: evaluate_growth(loaded, 0.0, seeds)?,
            evaluations: 1,
        });
    }
    let mut evaluations = 0u32;
    let mut eval = |p: f64| -> Result<f64, ExperimentError> {
        evaluations += 1;
        evaluate_growth(loaded, p, seeds)
    };

    let at_max = eval(1.0)?;
    if at_max < target * (1.0 - tolerance) {
        return Err(ExperimentError::Unreachable {
            target,
            max_achievable: at_max,
        });
    }
    if (at_max - target).abs() <= tolerance * target {
        return Ok(GrowthCalibration {
            follow_back_prob: 1.0,
            achieved_mean: at_max,
            evaluations,
        });
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (1.0, at_max);
    for _ in 0..20 {
        let mid = (lo + hi) / 2.0;
        let mean = eval(mid)?;
        if (mean - best.1).abs() + (mean - target).abs() < (best.1 - target).abs() {
            best = (mid, mean);
        }
        if (mean - target).abs() <= tolerance * target {
            return Ok(GrowthCalibration {
                follow_back_prob: mid,
                achieved_mean: mean,
                evaluations,
            });
        }
        if mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GrowthCalibration {
        follow_back_prob: best.0,
        achieved_mean: best.1,
        evaluations,
    })
}

fn evaluate_growth(loaded: &LoadedConfig, p: f64, seeds: &[u64]) -> Result<f64, ExperimentError> {
    let mut tuned = loaded.clone();
    tuned.cfg.population.follow_back_prob = p;
    let mut sum = 0.0;
    for &seed in seeds {
        let mut sim = Simulation::build(&tuned, Some(seed))?;
        sim.engine.set_record_log(false);
        let (_, productive_end) = sim.productive_window();
        sim.run_until(productive_end)?;
        sum += growth_of(&sim).final_total() as f64;
    }
    Ok(sum / seeds.len() as f64)
}

/// Per-account raw detection stats of every account with observable
/// history, with the ground-truth archetype alongside (the label never
/// feeds the features themselves).
pub fn population_stats(
    platform: &Platform,
    at: SimTime,
    params: &DetectionParams,
) -> Result<Vec<(AccountId, Archetype, AccountStats)>, ExperimentError> {
    let mut out = Vec::with_capacity(platform.num_accounts());
    for account in platform.accounts() {
        let history = account_history(platform, account.id, at)?;
        match extract_stats(&history, params) {
            Ok(stats) => out.push((account.id, account.archetype, stats)),
            Err(DetectionError::EmptyHistory) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

/// Norms of an unlabeled population: robust medians over every account
/// with history (a small bot contamination barely moves them).
pub fn norms_of_population(
    platform: &Platform,
    at: SimTime,
    params: &DetectionParams,
) -> Result<PopulationNorms, ExperimentError> {
    let stats: Vec<AccountStats> = population_stats(platform, at, params)?
        .into_iter()
        .map(|(_, _, s)| s)
        .collect();
    Ok(compute_norms(&stats))
}

/// Runs the labeled calibration scenario (the config must field both bot
/// and human accounts), computes human norms, and grid-fits the detector.
pub fn calibrate_detector(
    loaded: &LoadedConfig,
    seed: Option<u64>,
) -> Result<DetectorModel, ExperimentError> {
    let mut sim = Simulation::build(loaded, seed)?;
    sim.engine.set_record_log(false);
    let (_, productive_end) = sim.productive_window();
    sim.run_until(productive_end)?;
    let params = sim
        .cfg
        .detection
        .params()
        .map_err(|e| SimError::Config(e.to_string()))?;
    let rows = population_stats(&sim.platform, productive_end, &params)?;
    let human_stats: Vec<AccountStats> = rows
        .iter()
        .filter(|(_, a, _)| *a == Archetype::Human)
        .map(|(_, _, s)| s.clone())
        .collect();
    let norms = compute_norms(&human_stats);
    let labeled: Vec<(FeatureVector, bool)> = rows
        .iter()
        .map(|(_, arch, s)| {
            (
                scores_from_stats(s, &norms, &params),
                *arch != Archetype::Human,
            )
        })
        .collect();
    let cal = calibrate(&labeled, sim.cfg.detection.grid_step)?;
    Ok(DetectorModel::from_calibration(&cal, norms, params))
}

/// One scored account: class vector, aggregate, and (for evaluation output
/// only) the ground-truth archetype.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredAccount {
    pub id: AccountId,
    pub locale: Arc<str>,
    pub vector: FeatureVector,
    pub aggregate: f64,
    pub archetype: Archetype,
}

/// Account-id sets of a config's bot roster: the mutually befriended
/// clique heads and the full hybrid roster (ids are assigned to bots
/// first, group by group, before any human).
pub fn hybrid_rosters(cfg: &crate::config::RunConfig) -> (BTreeSet<AccountId>, BTreeSet<AccountId>) {
    let mut clique = BTreeSet::new();
    let mut all = BTreeSet::new();
    let mut next = 0u32;
    for group in &cfg.bots {
        for i in 0..group.count {
            let id = AccountId(next + i);
            if group.preset == crate::config::BotPreset::HybridNetwork {
                all.insert(id);
                if i < group.clique {
                    clique.insert(id);
                }
            }
        }
        next += group.count;
    }
    (clique, all)
}

/// Five-number summary plus mean of one score cohort.
#[derive(Debug, Clone, Serialize)]
pub struct CohortSummary {
    pub n: usize,
    pub mean: f64,
    #[serde(flatten)]
    pub summary: BoxSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedTest {
    pub a: String,
    pub b: String,
    pub u: f64,
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub significant: bool,
}

/// The `stats.json` payload: per-cohort box summaries and rank-sum tests.
#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub alpha: f64,
    pub cohorts: std::collections::BTreeMap<String, CohortSummary>,
    pub tests: Vec<NamedTest>,
}

/// Two-sided significance level adopted for all cohort comparisons.
pub const REPORT_ALPHA: f64 = 0.05;

/// Builds box summaries for every named cohort and rank-sum tests for the
/// requested pairs (skipping pairs with an empty side).
pub fn build_report(cohorts: &[(String, Vec<f64>)], pairs: &[(usize, usize)]) -> StatsReport {
    let mut summaries = std::collections::BTreeMap::new();
    for (name, values) in cohorts {
        if values.is_empty() {
            continue;
        }
        summaries.insert(
            name.clone(),
            CohortSummary {
                n: values.len(),
                mean: crate::stats::mean(values),
                summary: summarize_box(values).expect("non-empty"),
            },
        );
    }
    let mut tests = Vec::new();
    for &(a, b) in pairs {
        let (na, va) = &cohorts[a];
        let (nb, vb) = &cohorts[b];
        if va.is_empty() || vb.is_empty() {
            continue;
        }
        let t = rank_sum_test(va, vb).expect("non-empty samples");
        tests.push(NamedTest {
            a: na.clone(),
            b: nb.clone(),
            u: t.u,
            p: t.p,
            n_a: t.n_a,
            n_b: t.n_b,
            significant: t.p < REPORT_ALPHA,
        });
    }
    StatsReport {
        alpha: REPORT_ALPHA,
        cohorts: summaries,
        tests,
    }
}

/// Scores every account with at least one observable event.
pub fn score_accounts(
    platform: &Platform,
    at: SimTime,
    model: &DetectorModel,
) -> Result<Vec<ScoredAccount>, ExperimentError> {
    let rows = population_stats(platform, at, &model.params)?;
    let mut out = Vec::with_capacity(rows.len());
    for (id, archetype, stats) in rows {
        let vector = scores_from_stats(&stats, &model.norms, &model.params);
        let aggregate = aggregate_score(&vector, &model.weights)?.0;
        out.push(ScoredAccount {
            id,
            locale: platform.account(id).expect("scored account exists").locale.clone(),
            vector,
            aggregate,
            archetype,
        });
    }
    Ok(out)
}
