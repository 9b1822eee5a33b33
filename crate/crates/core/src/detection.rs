//! Feature-class scoring of accounts from observable history alone.
//!
//! Seven class scores in `[0, 1]` (sentiment, content, language,
//! friendship, network, temporal, user — higher means more bot-like) are
//! aggregated by a calibrated linear weighting into a single bot
//! probability. Ground-truth labels never enter this module's inputs:
//! [`AccountHistory`] is built purely from platform-observable data.
//!
//! Deviation-style sub-features are normalized against the human
//! population's empirical distribution via a robust z-score (median/MAD)
//! squashed through a bounded logistic map; direction-style sub-features
//! (regularity, night activity, account youth) have absolute definitions.
//! A class flags when any of its sub-features flags (max combination).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::{
    AccountId, AccountSnapshot, EdgeEvent, EdgeEventKind, Platform, PlatformError, Post, PostKind,
};
use crate::stats::{mad, median};
use crate::time::{SimTime, SECS_PER_DAY};

#[derive(Debug, Error, PartialEq)]
pub enum DetectionError {
    #[error("account history holds no posts and no edge events")]
    EmptyHistory,
    #[error("timestamp list must be non-empty")]
    EmptyInput,
    #[error("weights must be non-negative and sum to 1 (got sum {0})")]
    BadWeights(f64),
    #[error("calibration needs both bot and human examples")]
    SingleClassInput,
    #[error(transparent)]
    Platform(#[from] PlatformError),
}

/// Everything the detector may look at for one account.
pub struct AccountHistory<'a> {
    pub snapshot: AccountSnapshot,
    /// Authored posts up to the snapshot instant, chronological.
    pub posts: Vec<&'a Post>,
    pub initiated_edges: Vec<&'a EdgeEvent>,
    pub received_edges: Vec<&'a EdgeEvent>,
    /// Public snapshots of the live friends (followees) and followers.
    pub neighbor_snapshots: Vec<AccountSnapshot>,
    /// Authors of the originals this account retweeted.
    pub retweet_source_authors: Vec<AccountId>,
}

/// Builds the observable history of `id` as of `at`.
pub fn account_history(
    platform: &Platform,
    id: AccountId,
    at: SimTime,
) -> Result<AccountHistory<'_>, DetectionError> {
    let snapshot = platform.account_snapshot(id, at)?;
    let posts: Vec<&Post> = platform.posts_by(id).take_while(|p| p.at <= at).collect();
    let initiated: Vec<&EdgeEvent> = platform
        .initiated_edge_events(id)
        .take_while(|e| e.at <= at)
        .collect();
    let received: Vec<&EdgeEvent> = platform
        .received_edge_events(id)
        .take_while(|e| e.at <= at)
        .collect();

    let mut live: BTreeSet<AccountId> = BTreeSet::new();
    for e in &initiated {
        match e.kind {
            EdgeEventKind::Created => live.insert(e.followee),
            EdgeEventKind::Removed => live.remove(&e.followee),
        };
    }
    for e in &received {
        match e.kind {
            EdgeEventKind::Created => live.insert(e.follower),
            EdgeEventKind::Removed => live.remove(&e.follower),
        };
    }
    live.remove(&id);
    let neighbor_snapshots = live
        .iter()
        .map(|&n| platform.account_snapshot(n, at))
        .collect::<Result<Vec<_>, _>>()?;

    let retweet_source_authors = posts
        .iter()
        .filter(|p| p.kind == PostKind::Retweet)
        .filter_map(|p| p.ref_post)
        .filter_map(|r| platform.post(r))
        .map(|p| p.author)
        .collect();

    Ok(AccountHistory {
        snapshot,
        posts,
        initiated_edges: initiated,
        received_edges: received,
        neighbor_snapshots,
        retweet_source_authors,
    })
}

/// The seven class scores, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub sentiment: f64,
    pub content: f64,
    pub language: f64,
    pub friendship: f64,
    pub network: f64,
    pub temporal: f64,
    pub user: f64,
}

pub const CLASS_NAMES: [&str; 7] = [
    "sentiment",
    "content",
    "language",
    "friendship",
    "network",
    "temporal",
    "user",
];

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.sentiment,
            self.content,
            self.language,
            self.friendship,
            self.network,
            self.temporal,
            self.user,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        FeatureVector {
            sentiment: a[0],
            content: a[1],
            language: a[2],
            friendship: a[3],
            network: a[4],
            temporal: a[5],
            user: a[6],
        }
    }
}

/// Aggregate bot probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DetectionScore(pub f64);

/// Robust location/scale of one population quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub med: f64,
    pub mad: f64,
}

impl Norm {
    fn of(values: &[f64]) -> Norm {
        Norm {
            med: median(values),
            mad: mad(values),
        }
    }

    /// Robust z-score; saturates at +-8 when the population scale is
    /// degenerate.
    fn z(&self, x: f64) -> f64 {
        let scale = 1.4826 * self.mad;
        if scale < 1e-12 {
            if (x - self.med).abs() < 1e-12 {
                0.0
            } else if x > self.med {
                8.0
            } else {
                -8.0
            }
        } else {
            ((x - self.med) / scale).clamp(-8.0, 8.0)
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// |2 sigma(z) - 1|: 0 at the population median, saturating to 1 for
/// strong deviation in either direction.
fn folded(z: f64) -> f64 {
    (2.0 * logistic(z) - 1.0).abs()
}

/// Population norms detection scores are computed against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationNorms {
    pub mean_length: Norm,
    pub mean_entropy: Norm,
    pub mean_slang: Norm,
    pub emoticon_rate: Norm,
    pub polarity_var: Norm,
    pub ego_log_ratio: Norm,
    pub neighbor_ratio_median: Norm,
    pub neighbor_ratio_dispersion: Norm,
}

/// Tunable constants of the feature definitions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Night window (seconds of day, half-open). Default 01:00..06:00.
    pub night_start: u32,
    pub night_end: u32,
    /// Age at which the account-youth feature reaches zero.
    pub age_horizon_secs: u64,
    /// Minimum neighbors before friendship features activate.
    pub min_neighbors: usize,
    /// Minimum posts before the activity-trend feature activates.
    pub min_posts_for_trend: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            night_start: 3_600,
            night_end: 6 * 3_600,
            age_horizon_secs: 30 * SECS_PER_DAY,
            min_neighbors: 5,
            min_posts_for_trend: 6,
        }
    }
}

/// Per-account raw quantities the class scores are computed from.
#[derive(Debug, Clone, Default)]
pub struct AccountStats {
    pub mean_length: Option<f64>,
    pub mean_entropy: Option<f64>,
    pub mean_slang: Option<f64>,
    pub emoticon_rate: Option<f64>,
    pub polarity_var: Option<f64>,
    pub interval_cv: Option<f64>,
    pub circadian_deficit: Option<f64>,
    pub night_fraction: Option<f64>,
    pub ego_log_ratio: f64,
    pub retweet_concentration: f64,
    pub neighbor_ratio_median: Option<f64>,
    pub neighbor_ratio_dispersion: Option<f64>,
    pub youth: f64,
    pub incompleteness: f64,
    pub activity_trend: f64,
}

/// Shannon entropy (base 2) of the event distribution over the 24
/// hour-of-day bins.
pub fn circadian_entropy(timestamps: &[SimTime]) -> Result<f64, DetectionError> {
    if timestamps.is_empty() {
        return Err(DetectionError::EmptyInput);
    }
    let mut bins = [0u64; 24];
    for t in timestamps {
        bins[t.hour_of_day() as usize] += 1;
    }
    let n = timestamps.len() as f64;
    let mut h = 0.0;
    for &c in &bins {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    Ok(h)
}

/// Extracts the raw per-account quantities from a history.
pub fn extract_stats(
    history: &AccountHistory<'_>,
    params: &DetectionParams,
) -> Result<AccountStats, DetectionError> {
    let posts = &history.posts;
    let edge_events = history.initiated_edges.len() + history.received_edges.len();
    if posts.is_empty() && edge_events == 0 {
        return Err(DetectionError::EmptyHistory);
    }

    let mut stats = AccountStats::default();
    if !posts.is_empty() {
        let n = posts.len() as f64;
        stats.mean_length = Some(posts.iter().map(|p| p.descriptor.length as f64).sum::<f64>() / n);
        stats.mean_entropy = Some(posts.iter().map(|p| p.descriptor.token_entropy).sum::<f64>() / n);
        stats.mean_slang = Some(posts.iter().map(|p| p.descriptor.slang_fraction).sum::<f64>() / n);
        stats.emoticon_rate =
            Some(posts.iter().map(|p| p.descriptor.emoticon_count as f64).sum::<f64>() / n);
        if posts.len() >= 2 {
            let mean_pol = posts.iter().map(|p| p.descriptor.polarity).sum::<f64>() / n;
            stats.polarity_var = Some(
                posts
                    .iter()
                    .map(|p| (p.descriptor.polarity - mean_pol).powi(2))
                    .sum::<f64>()
                    / n,
            );
        }
    }

    // Timing features run on the account's visible actions: posts plus
    // initiated follows.
    let mut event_times: Vec<SimTime> = posts.iter().map(|p| p.at).collect();
    event_times.extend(history.initiated_edges.iter().map(|e| e.at));
    event_times.sort_unstable();
    if !event_times.is_empty() {
        let h = circadian_entropy(&event_times).expect("non-empty");
        stats.circadian_deficit = Some((1.0 - h / 24f64.log2()).clamp(0.0, 1.0));
        let night = event_times
            .iter()
            .filter(|t| {
                let s = t.second_of_day();
                s >= params.night_start && s < params.night_end
            })
            .count() as f64;
        stats.night_fraction = Some(night / event_times.len() as f64);
    }
    // Every feature is a function of the timestamp multiset: sort before
    // anything order-sensitive, so post permutation cannot matter.
    let mut post_times: Vec<SimTime> = posts.iter().map(|p| p.at).collect();
    post_times.sort_unstable();
    if post_times.len() >= 3 {
        let intervals: Vec<f64> = post_times.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
        let m = intervals.iter().sum::<f64>() / intervals.len() as f64;
        if m > 0.0 {
            let var = intervals.iter().map(|d| (d - m).powi(2)).sum::<f64>() / intervals.len() as f64;
            stats.interval_cv = Some(var.sqrt() / m);
        }
    }

    stats.ego_log_ratio = history.snapshot.smoothed_ratio().ln();
    let retweets = history.retweet_source_authors.len();
    if retweets > 0 {
        let mut counts: std::collections::BTreeMap<AccountId, u32> = std::collections::BTreeMap::new();
        for a in &history.retweet_source_authors {
            *counts.entry(*a).or_insert(0) += 1;
        }
        let hhi: f64 = counts
            .values()
            .map(|&c| (c as f64 / retweets as f64).powi(2))
            .sum();
        // Damped for tiny samples: one retweet is not concentration.
        stats.retweet_concentration = hhi * retweets as f64 / (retweets as f64 + 3.0);
    }

    if history.neighbor_snapshots.len() >= params.min_neighbors {
        let ratios: Vec<f64> = history
            .neighbor_snapshots
            .iter()
            .map(|s| s.smoothed_ratio())
            .collect();
        stats.neighbor_ratio_median = Some(median(&ratios));
        stats.neighbor_ratio_dispersion = Some(mad(&ratios));
    }

    let age = history.snapshot.age_secs as f64;
    stats.youth = (1.0 - age / params.age_horizon_secs as f64).clamp(0.0, 1.0);
    stats.incompleteness = (1.0 - history.snapshot.profile_completeness).clamp(0.0, 1.0);
    if post_times.len() >= params.min_posts_for_trend {
        let first = post_times[0];
        let last = *post_times.last().unwrap();
        if last > first {
            let mid = first + (last - first) / 2;
            let n1 = post_times.iter().filter(|t| **t <= mid).count() as f64;
            let n2 = post_times.len() as f64 - n1;
            stats.activity_trend = ((n2 - n1) / (n1 + n2)).abs();
        }
    }
    Ok(stats)
}

/// Computes population norms from the per-account stats of a reference
/// population (robust to a small fraction of contaminating bots).
pub fn compute_norms(stats: &[AccountStats]) -> PopulationNorms {
    fn collect(stats: &[AccountStats], f: impl Fn(&AccountStats) -> Option<f64>) -> Vec<f64> {
        stats.iter().filter_map(f).collect()
    }
    PopulationNorms {
        mean_length: Norm::of(&collect(stats, |s| s.mean_length)),
        mean_entropy: Norm::of(&collect(stats, |s| s.mean_entropy)),
        mean_slang: Norm::of(&collect(stats, |s| s.mean_slang)),
        emoticon_rate: Norm::of(&collect(stats, |s| s.emoticon_rate)),
        polarity_var: Norm::of(&collect(stats, |s| s.polarity_var)),
        ego_log_ratio: Norm::of(&collect(stats, |s| Some(s.ego_log_ratio))),
        neighbor_ratio_median: Norm::of(&collect(stats, |s| s.neighbor_ratio_median)),
        neighbor_ratio_dispersion: Norm::of(&collect(stats, |s| s.neighbor_ratio_dispersion)),
    }
}

fn two_sided(x: Option<f64>, norm: &Norm) -> f64 {
    x.map_or(0.0, |v| folded(norm.z(v)))
}

/// Flags only deviation BELOW the population median (e.g. suspiciously low
/// variance or dispersion).
fn below(x: Option<f64>, norm: &Norm) -> f64 {
    match x {
        Some(v) if v < norm.med => folded(norm.z(v)),
        _ => 0.0,
    }
}

/// Computes the seven class scores of a history against population norms.
pub fn class_scores(
    history: &AccountHistory<'_>,
    norms: &PopulationNorms,
    params: &DetectionParams,
) -> Result<FeatureVector, DetectionError> {
    let stats = extract_stats(history, params)?;
    Ok(scores_from_stats(&stats, norms, params))
}

/// Class scores from pre-extracted stats (shared by scoring and norms
/// pipelines).
pub fn scores_from_stats(
    stats: &AccountStats,
    norms: &PopulationNorms,
    params: &DetectionParams,
) -> FeatureVector {
    let sentiment = below(stats.polarity_var, &norms.polarity_var)
        .max(two_sided(stats.emoticon_rate, &norms.emoticon_rate));
    let content = two_sided(stats.mean_length, &norms.mean_length)
        .max(two_sided(stats.mean_entropy, &norms.mean_entropy));
    let language = two_sided(stats.mean_slang, &norms.mean_slang);
    let friendship = below(stats.neighbor_ratio_dispersion, &norms.neighbor_ratio_dispersion)
        .max(two_sided(stats.neighbor_ratio_median, &norms.neighbor_ratio_median));
    let network = two_sided(Some(stats.ego_log_ratio), &norms.ego_log_ratio)
        .max(stats.retweet_concentration.clamp(0.0, 1.0));

    let night_norm = (params.night_end - params.night_start) as f64 / SECS_PER_DAY as f64;
    let night_score = stats
        .night_fraction
        .map_or(0.0, |f| (f / night_norm).clamp(0.0, 1.0));
    let regularity = stats.interval_cv.map_or(0.0, |cv| (-cv).exp());
    let temporal = stats
        .circadian_deficit
        .unwrap_or(0.0)
        .max(regularity)
        .max(night_score);

    let user = stats.youth.max(stats.incompleteness).max(stats.activity_trend);

    FeatureVector {
        sentiment: sentiment.clamp(0.0, 1.0),
        content: content.clamp(0.0, 1.0),
        language: language.clamp(0.0, 1.0),
        friendship: friendship.clamp(0.0, 1.0),
        network: network.clamp(0.0, 1.0),
        temporal: temporal.clamp(0.0, 1.0),
        user: user.clamp(0.0, 1.0),
    }
}

/// Non-negative class weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights(pub [f64; 7]);

impl Weights {
    pub fn uniform() -> Weights {
        Weights([1.0 / 7.0; 7])
    }

    pub fn validate(&self) -> Result<(), DetectionError> {
        if self.0.iter().any(|w| *w < 0.0) {
            return Err(DetectionError::BadWeights(self.0.iter().sum()));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(DetectionError::BadWeights(sum));
        }
        Ok(())
    }
}

/// Weighted linear aggregation of the class scores; monotone
/// non-decreasing in every component.
pub fn aggregate_score(vector: &FeatureVector, weights: &Weights) -> Result<DetectionScore, DetectionError> {
    weights.validate()?;
    let v = vector.as_array();
    let value: f64 = v.iter().zip(weights.0.iter()).map(|(a, w)| a * w).sum();
    Ok(DetectionScore(value.clamp(0.0, 1.0)))
}

/// A calibrated detector: weights, decision threshold, and the norms the
/// feature vectors were computed against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub weights: Weights,
    pub tau: f64,
    pub balanced_accuracy: f64,
    /// Set when the labeled score distributions barely separate.
    pub degenerate: bool,
}

pub const MODEL_VERSION: u32 = 1;

/// The persisted detector artifact (`weights.json`): weights, threshold,
/// population norms, and feature parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub version: u32,
    pub weights: Weights,
    pub tau: f64,
    pub balanced_accuracy: f64,
    pub degenerate: bool,
    pub norms: PopulationNorms,
    pub params: DetectionParams,
}

impl DetectorModel {
    pub fn from_calibration(cal: &Calibration, norms: PopulationNorms, params: DetectionParams) -> Self {
        DetectorModel {
            version: MODEL_VERSION,
            weights: cal.weights,
            tau: cal.tau,
            balanced_accuracy: cal.balanced_accuracy,
            degenerate: cal.degenerate,
            norms,
            params,
        }
    }

    /// An uncalibrated fallback: equal weights, midpoint threshold, and
    /// norms computed from the scored population itself.
    pub fn uncalibrated(norms: PopulationNorms, params: DetectionParams) -> Self {
        DetectorModel {
            version: MODEL_VERSION,
            weights: Weights::uniform(),
            tau: 0.5,
            balanced_accuracy: f64::NAN,
            degenerate: false,
            norms,
            params,
        }
    }
}

/// Grid-searches the 7-simplex (step `grid_step`) for the weight vector
/// maximizing balanced accuracy of `score > tau` with `tau` the midpoint
/// between the class medians. Among equally accurate grid points the one
/// closest to uniform weighting wins (least-concentrated detector).
pub fn calibrate(
    labeled: &[(FeatureVector, bool)],
    grid_step: f64,
) -> Result<Calibration, DetectionError> {
    let bots: Vec<[f64; 7]> = labeled.iter().filter(|(_, b)| *b).map(|(v, _)| v.as_array()).collect();
    let humans: Vec<[f64; 7]> = labeled
        .iter()
        .filter(|(_, b)| !*b)
        .map(|(v, _)| v.as_array())
        .collect();
    if bots.is_empty() || humans.is_empty() {
        return Err(DetectionError::SingleClassInput);
    }

    let units = (1.0 / grid_step).round() as u32;
    let mut grid: Vec<[u32; 7]> = Vec::new();
    let mut point = [0u32; 7];
    enumerate_compositions(units, 0, &mut point, &mut grid);

    let mut bot_scores = vec![0.0; bots.len()];
    let mut human_scores = vec![0.0; humans.len()];
    let mut best: Option<(f64, f64, Weights, f64)> = None; // (acc, -dist2, weights, tau)
    for point in &grid {
        let w: [f64; 7] = std::array::from_fn(|i| point[i] as f64 / units as f64);
        for (i, b) in bots.iter().enumerate() {
            bot_scores[i] = dot(b, &w);
        }
        for (i, h) in humans.iter().enumerate() {
            human_scores[i] = dot(h, &w);
        }
        let tau = (median_inplace(&mut bot_scores.clone()) + median_inplace(&mut human_scores.clone())) / 2.0;
        let tpr = bot_scores.iter().filter(|s| **s > tau).count() as f64 / bots.len() as f64;
        let tnr = human_scores.iter().filter(|s| **s <= tau).count() as f64 / humans.len() as f64;
        let acc = (tpr + tnr) / 2.0;
        let dist2: f64 = w.iter().map(|x| (x - 1.0 / 7.0).powi(2)).sum();
        let key = (acc, -dist2);
        if best.as_ref().is_none_or(|b| key > (b.0, b.1)) {
            best = Some((acc, -dist2, Weights(w), tau));
        }
    }
    let (acc, _, weights, tau) = best.expect("non-empty grid");
    Ok(Calibration {
        weights,
        tau,
        balanced_accuracy: acc,
        degenerate: acc < 0.55,
    })
}

fn dot(a: &[f64; 7], b: &[f64; 7]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn median_inplace(values: &mut [f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn enumerate_compositions(remaining: u32, idx: usize, point: &mut [u32; 7], out: &mut Vec<[u32; 7]>) {
    if idx == 6 {
        point[6] = remaining;
        out.push(*point);
        return;
    }
    for v in 0..=remaining {
        point[idx] = v;
        enumerate_compositions(remaining - v, idx + 1, point, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::content::ContentDescriptor;
    use crate::platform::{AccountSpec, Archetype};
    use std::sync::Arc;

    fn entropy_of(hour_counts: &[(u32, u64)]) -> f64 {
        let mut ts = Vec::new();
        for &(hour, count) in hour_counts {
            for i in 0..count {
                ts.push(SimTime::from_secs(i * SECS_PER_DAY + hour as u64 * 3_600 + 7));
            }
        }
        circadian_entropy(&ts).unwrap()
    }

    #[test]
    fn circadian_entropy_reference_values() {
        // All events in one hour bin: zero bits.
        assert_eq!(entropy_of(&[(14, 9)]), 0.0);
        // Uniform over all 24 hours: the analytic maximum log2(24).
        let uniform = entropy_of(&(0..24).map(|h| (h, 5)).collect::<Vec<_>>());
        assert!((uniform - 24f64.log2()).abs() < 1e-12);
        // Hand-computed: counts {2, 1, 1} over three bins -> 1.5 bits.
        assert!((entropy_of(&[(0, 2), (1, 1), (2, 1)]) - 1.5).abs() < 1e-12);
        assert_eq!(circadian_entropy(&[]).unwrap_err(), DetectionError::EmptyInput);
    }

    fn descriptor() -> ContentDescriptor {
        ContentDescriptor {
            length: 90,
            token_entropy: 4.0,
            hashtags: vec![],
            emoticon_count: 0,
            polarity: 0.1,
            slang_fraction: 0.2,
            text: None,
        }
    }

    /// Platform with one scored account plus enough neighbors to notice.
    fn metronome_platform() -> Platform {
        let mut p = Platform::default();
        for i in 0..3 {
            p.create_account(AccountSpec {
                handle: format!("a{i}"),
                created_at: SimTime::ZERO,
                profile_completeness: 0.9,
                locale: Arc::from("ww"),
                archetype: Archetype::Human,
            })
            .unwrap();
        }
        // Account 0 posts every 3600 s around the clock for 4 days.
        for i in 0..96u64 {
            p.submit_post(
                AccountId(0),
                descriptor(),
                PostKind::Original,
                None,
                SimTime::from_secs(i * 3_600),
            )
            .unwrap();
        }
        p
    }

    fn flat_norms() -> PopulationNorms {
        let n = Norm { med: 0.0, mad: 1.0 };
        PopulationNorms {
            mean_length: Norm { med: 90.0, mad: 10.0 },
            mean_entropy: Norm { med: 4.0, mad: 0.2 },
            mean_slang: Norm { med: 0.2, mad: 0.05 },
            emoticon_rate: Norm { med: 0.4, mad: 0.2 },
            polarity_var: Norm { med: 0.12, mad: 0.05 },
            ego_log_ratio: n,
            neighbor_ratio_median: Norm { med: 1.0, mad: 0.3 },
            neighbor_ratio_dispersion: Norm { med: 0.3, mad: 0.1 },
        }
    }

    #[test]
    fn metronome_account_has_maximal_temporal_score() {
        let p = metronome_platform();
        let h = account_history(&p, AccountId(0), SimTime::from_days(5)).unwrap();
        let v = class_scores(&h, &flat_norms(), &DetectionParams::default()).unwrap();
        assert!(v.temporal >= 0.9, "temporal = {}", v.temporal);
    }

    #[test]
    fn fresh_incomplete_account_has_high_user_score() {
        let mut p = Platform::default();
        p.create_account(AccountSpec {
            handle: "fresh".into(),
            created_at: SimTime::from_days(100),
            profile_completeness: 0.0,
            locale: Arc::from("ww"),
            archetype: Archetype::Human,
        })
        .unwrap();
        p.submit_post(
            AccountId(0),
            descriptor(),
            PostKind::Original,
            None,
            SimTime::from_days(100) + 3_600,
        )
        .unwrap();
        // Age below one day at scoring time.
        let h = account_history(&p, AccountId(0), SimTime::from_days(100) + 7_200).unwrap();
        let v = class_scores(&h, &flat_norms(), &DetectionParams::default()).unwrap();
        assert!(v.user >= 0.8, "user = {}", v.user);
    }

    #[test]
    fn empty_history_is_an_error() {
        let mut p = Platform::default();
        p.create_account(AccountSpec {
            handle: "inert".into(),
            created_at: SimTime::ZERO,
            profile_completeness: 0.5,
            locale: Arc::from("ww"),
            archetype: Archetype::Human,
        })
        .unwrap();
        let h = account_history(&p, AccountId(0), SimTime::from_days(1)).unwrap();
        assert_eq!(
            class_scores(&h, &flat_norms(), &DetectionParams::default()).unwrap_err(),
            DetectionError::EmptyHistory
        );
    }

    #[test]
    fn aggregate_score_reference_points() {
        let w = Weights::uniform();
        let zeros = FeatureVector::from_array([0.0; 7]);
        let ones = FeatureVector::from_array([1.0; 7]);
        let flat = FeatureVector::from_array([0.4; 7]);
        assert_eq!(aggregate_score(&zeros, &w).unwrap().0, 0.0);
        assert!((aggregate_score(&ones, &w).unwrap().0 - 1.0).abs() < 1e-12);
        assert!((aggregate_score(&flat, &w).unwrap().0 - 0.4).abs() < 1e-12);

        let bad = Weights([0.5; 7]);
        assert!(matches!(
            aggregate_score(&zeros, &bad).unwrap_err(),
            DetectionError::BadWeights(_)
        ));
        let negative = Weights([-0.1, 0.2, 0.2, 0.2, 0.2, 0.2, 0.1]);
        assert!(aggregate_score(&zeros, &negative).is_err());
    }

    #[test]
    fn aggregate_is_monotone_in_each_class() {
        let w = Weights([0.3, 0.1, 0.1, 0.1, 0.1, 0.2, 0.1]);
        let base = FeatureVector::from_array([0.3; 7]);
        let s0 = aggregate_score(&base, &w).unwrap().0;
        for i in 0..7 {
            let mut bumped = base.as_array();
            bumped[i] += 0.2;
            let s = aggregate_score(&FeatureVector::from_array(bumped), &w).unwrap().0;
            assert!(s >= s0);
        }
    }

    #[test]
    fn calibrate_separates_separable_classes_perfectly() {
        let mut labeled = Vec::new();
        for i in 0..20 {
            let x = 0.7 + 0.01 * (i as f64 % 5.0);
            labeled.push((FeatureVector::from_array([x; 7]), true));
            let y = 0.2 + 0.01 * (i as f64 % 5.0);
            labeled.push((FeatureVector::from_array([y; 7]), false));
        }
        let cal = calibrate(&labeled, 0.05).unwrap();
        assert_eq!(cal.balanced_accuracy, 1.0);
        assert!(!cal.degenerate);
        assert!(cal.tau > 0.2 && cal.tau < 0.8);
        // Every grid point separates these; the closest-to-uniform
        // tie-break keeps the weights spread out.
        let max_w = cal.weights.0.iter().cloned().fold(0.0, f64::max);
        assert!(max_w <= 0.2, "concentrated weights {:?}", cal.weights);
        cal.weights.validate().unwrap();
    }

    #[test]
    fn calibrate_flags_identical_distributions_as_degenerate() {
        let mut labeled = Vec::new();
        for i in 0..30 {
            let v = FeatureVector::from_array([0.1 * ((i % 10) as f64 / 10.0) + 0.3; 7]);
            labeled.push((v, i % 2 == 0));
        }
        let cal = calibrate(&labeled, 0.25).unwrap();
        assert!(cal.balanced_accuracy < 0.6, "acc = {}", cal.balanced_accuracy);
        assert!(cal.degenerate);
    }

    #[test]
    fn calibrate_requires_both_classes() {
        let labeled = vec![(FeatureVector::from_array([0.5; 7]), true)];
        assert_eq!(calibrate(&labeled, 0.25).unwrap_err(), DetectionError::SingleClassInput);
    }

    #[test]
    fn grid_enumeration_covers_simplex() {
        let mut out = Vec::new();
        let mut point = [0u32; 7];
        enumerate_compositions(4, 0, &mut point, &mut out);
        // C(4+6, 6) = 210 compositions of 4 into 7 parts.
        assert_eq!(out.len(), 210);
        assert!(out.iter().all(|p| p.iter().sum::<u32>() == 4));
    }
}
