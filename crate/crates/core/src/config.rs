//! Run configuration: a single versioned TOML file describing the
//! platform, the human population, the bot roster, and the experiment
//! plan. Unknown keys are rejected; every field has a validated range.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{ContentDb, ContentDescriptor, ContentEntry};
use crate::time::parse_clock;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config invalid: {0}")]
    Invalid(String),
}

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schema version; must equal [`CONFIG_VERSION`].
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub platform: PlatformConfig,
    pub population: PopulationConfig,
    #[serde(default)]
    pub bots: Vec<BotGroupConfig>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConfig {
    /// Public-stream coverage; bandwidth-limited listeners see this
    /// fraction of matching traffic.
    #[serde(default = "default_coverage")]
    pub stream_coverage: f64,
    #[serde(default = "default_timeline_cap")]
    pub timeline_cap: usize,
    #[serde(default = "default_trending_window")]
    pub trending_window_secs: u64,
    #[serde(default = "default_trending_top_k")]
    pub trending_top_k: usize,
    /// Oldest original anyone still retweets, in seconds.
    #[serde(default = "default_retweet_max_age")]
    pub retweet_max_age_secs: u64,
}

fn default_coverage() -> f64 {
    0.10
}
fn default_timeline_cap() -> usize {
    1_000
}
fn default_trending_window() -> u64 {
    3_600
}
fn default_trending_top_k() -> usize {
    100
}
fn default_retweet_max_age() -> u64 {
    12 * 3_600
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            stream_coverage: default_coverage(),
            timeline_cap: default_timeline_cap(),
            trending_window_secs: default_trending_window(),
            trending_top_k: default_trending_top_k(),
            retweet_max_age_secs: default_retweet_max_age(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub humans: u32,
    /// Human accounts are created with ages staggered over this span.
    #[serde(default = "default_history_days")]
    pub history_days: u32,
    /// Log-normal parameters of the static human-human follow graph
    /// out-degree.
    #[serde(default = "default_out_degree_mean")]
    pub graph_out_degree_mean: f64,
    #[serde(default = "default_out_degree_sigma")]
    pub graph_out_degree_sigma: f64,
    /// Log-normal per-human posts/day distribution.
    #[serde(default = "default_post_rate_mean")]
    pub post_rate_mean: f64,
    #[serde(default = "default_post_rate_sigma")]
    pub post_rate_sigma: f64,
    /// Per-human retweet rate as a fraction of the post rate.
    #[serde(default = "default_retweet_fraction")]
    pub retweet_rate_fraction: f64,
    /// Daily active-window length, hours (jittered per human).
    #[serde(default = "default_active_len_hours")]
    pub active_len_hours: f64,
    #[serde(default = "default_active_len_jitter")]
    pub active_len_jitter_hours: f64,
    /// Probability a human reciprocates a balanced-looking new follower.
    #[serde(default = "default_follow_back_prob")]
    pub follow_back_prob: f64,
    /// Penalty multiplier for requesters outside the balanced band.
    #[serde(default = "default_oob_penalty")]
    pub out_of_band_penalty: f64,
    #[serde(default = "default_ratio_band")]
    pub balanced_ratio_band: [f64; 2],
    #[serde(default = "default_latency_median")]
    pub response_latency_median_hours: f64,
    #[serde(default = "default_latency_sigma")]
    pub response_latency_sigma: f64,
    #[serde(default = "default_latency_cap")]
    pub response_latency_cap_hours: f64,
    pub locales: Vec<LocaleConfig>,
}

fn default_history_days() -> u32 {
    365
}
fn default_out_degree_mean() -> f64 {
    12.0
}
fn default_out_degree_sigma() -> f64 {
    0.6
}
fn default_post_rate_mean() -> f64 {
    5.0
}
fn default_post_rate_sigma() -> f64 {
    0.5
}
fn default_retweet_fraction() -> f64 {
    0.35
}
fn default_active_len_hours() -> f64 {
    14.0
}
fn default_active_len_jitter() -> f64 {
    2.0
}
fn default_follow_back_prob() -> f64 {
    0.2
}
fn default_oob_penalty() -> f64 {
    0.2
}
fn default_ratio_band() -> [f64; 2] {
    [0.3, 3.0]
}
fn default_latency_median() -> f64 {
    6.0
}
fn default_latency_sigma() -> f64 {
    1.0
}
fn default_latency_cap() -> f64 {
    48.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocaleConfig {
    pub name: String,
    /// Fraction of the human population; fractions must sum to 1.
    pub fraction: f64,
    /// Active-window starts spread uniformly over this many hours
    /// (24 models a worldwide population, small values a single country).
    #[serde(default = "default_tz_spread")]
    pub timezone_spread_hours: f64,
    /// Base local window start.
    #[serde(default = "default_active_start")]
    pub active_start: String,
    #[serde(default = "default_pool_size")]
    pub hashtag_pool_size: u32,
    #[serde(default = "default_zipf")]
    pub zipf_exponent: f64,
    #[serde(default = "default_length_mean")]
    pub length_mean: f64,
    #[serde(default = "default_length_sd")]
    pub length_sd: f64,
    /// Between-human spread of per-account mean length.
    #[serde(default = "default_length_between_sd")]
    pub length_between_sd: f64,
    #[serde(default = "default_entropy_mean")]
    pub entropy_mean: f64,
    #[serde(default = "default_entropy_sd")]
    pub entropy_sd: f64,
    #[serde(default = "default_entropy_between_sd")]
    pub entropy_between_sd: f64,
    #[serde(default = "default_hashtag_rate")]
    pub hashtag_rate: f64,
    #[serde(default = "default_emoticon_rate")]
    pub emoticon_rate: f64,
    #[serde(default = "default_polarity_mean")]
    pub polarity_mean: f64,
    #[serde(default = "default_polarity_sd")]
    pub polarity_sd: f64,
    #[serde(default = "default_slang_mean")]
    pub slang_mean: f64,
    #[serde(default = "default_slang_sd")]
    pub slang_sd: f64,
    #[serde(default = "default_slang_between_sd")]
    pub slang_between_sd: f64,
}

fn default_tz_spread() -> f64 {
    2.0
}
fn default_active_start() -> String {
    "08:00".to_owned()
}
fn default_pool_size() -> u32 {
    400
}
fn default_zipf() -> f64 {
    1.0
}
fn default_length_mean() -> f64 {
    90.0
}
fn default_length_sd() -> f64 {
    35.0
}
fn default_length_between_sd() -> f64 {
    10.0
}
fn default_entropy_mean() -> f64 {
    4.0
}
fn default_entropy_sd() -> f64 {
    0.35
}
fn default_entropy_between_sd() -> f64 {
    0.15
}
fn default_hashtag_rate() -> f64 {
    0.8
}
fn default_emoticon_rate() -> f64 {
    0.4
}
fn default_polarity_mean() -> f64 {
    0.1
}
fn default_polarity_sd() -> f64 {
    0.35
}
fn default_slang_mean() -> f64 {
    0.18
}
fn default_slang_sd() -> f64 {
    0.08
}
fn default_slang_between_sd() -> f64 {
    0.05
}

/// Bot archetype presets (classified by automation and orchestration):
/// a fully reactive reply bot, a centrally driven army of crude always-on
/// bots, and a network of human-mimicking hybrid bots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BotPreset {
    Reactive,
    NaiveBotArmy,
    HybridNetwork,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BotGroupConfig {
    pub preset: BotPreset,
    pub count: u32,
    /// Mutually befriended head of the group (hybrid networks).
    #[serde(default)]
    pub clique: u32,
    #[serde(default)]
    pub locale: Option<String>,
    /// JSON Lines content database; resolved relative to the config file.
    #[serde(default)]
    pub content_db: Option<PathBuf>,
    #[serde(default)]
    pub posts_per_day: Option<f64>,
    #[serde(default)]
    pub retweets_per_day: Option<f64>,
    #[serde(default)]
    pub follows_per_day: Option<f64>,
    #[serde(default)]
    pub jitter: Option<f64>,
    #[serde(default)]
    pub active_start: Option<String>,
    #[serde(default)]
    pub active_end: Option<String>,
    #[serde(default)]
    pub window_jitter_minutes: Option<u32>,
    /// Daily zero-activity intervals as `["HH:MM", "HH:MM"]` pairs.
    #[serde(default)]
    pub rest_periods: Option<Vec<[String; 2]>>,
    #[serde(default)]
    pub topics_per_bot: Option<u32>,
    #[serde(default)]
    pub ratio_band: Option<[f64; 2]>,
    #[serde(default)]
    pub min_activity: Option<u32>,
    #[serde(default)]
    pub activity_lookback_days: Option<f64>,
    #[serde(default)]
    pub prefer_popular: Option<bool>,
    #[serde(default)]
    pub reciprocity_window_hours: Option<f64>,
    #[serde(default)]
    pub ratio_guard: Option<[f64; 2]>,
    #[serde(default)]
    pub profile_completeness: Option<f64>,
    /// Relative spread of per-bot rate individualization.
    #[serde(default)]
    pub rate_individuality: Option<f64>,
    /// Reactive preset: tracked hashtags.
    #[serde(default)]
    pub keywords: Option<Vec<String>>,
    /// Reactive preset: processing delay between trigger and reply.
    #[serde(default)]
    pub reply_delay_secs: Option<u64>,
    /// Reactive preset: listener coverage (defaults to the platform's).
    #[serde(default)]
    pub listener_coverage: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_setup_days")]
    pub setup_days: u32,
    #[serde(default = "default_productive_days")]
    pub productive_days: u32,
    /// Days appended after the productive window for the coordinated push
    /// and baseline sampling.
    #[serde(default = "default_phase2_days")]
    pub phase2_days: u32,
    #[serde(default = "default_push_enabled")]
    pub push_enabled: bool,
    /// Day of the push within phase 2.
    #[serde(default)]
    pub push_day_offset: u32,
    #[serde(default = "default_push_clock")]
    pub push_clock: String,
    #[serde(default = "default_push_window_hours")]
    pub push_window_hours: f64,
    #[serde(default = "default_push_posts")]
    pub push_posts_per_bot: u32,
    #[serde(default = "default_push_retweets")]
    pub push_retweets_per_bot: u32,
    #[serde(default = "default_push_hashtags")]
    pub push_hashtags: Vec<String>,
    /// Baseline sampling day, counted from the start of the productive
    /// window.
    #[serde(default = "default_baseline_day")]
    pub baseline_day_offset: u32,
    #[serde(default = "default_baseline_times")]
    pub baseline_times: Vec<String>,
    #[serde(default = "default_coverage")]
    pub baseline_coverage: f64,
    #[serde(default = "default_baseline_window")]
    pub baseline_window_secs: u64,
    /// Restrict the baseline to one locale, or "all".
    #[serde(default = "default_baseline_locale")]
    pub baseline_locale: String,
}

fn default_setup_days() -> u32 {
    2
}
fn default_productive_days() -> u32 {
    8
}
fn default_phase2_days() -> u32 {
    3
}
fn default_push_enabled() -> bool {
    true
}
fn default_push_clock() -> String {
    "12:00".to_owned()
}
fn default_push_window_hours() -> f64 {
    2.0
}
fn default_push_posts() -> u32 {
    6
}
fn default_push_retweets() -> u32 {
    12
}
fn default_push_hashtags() -> Vec<String> {
    vec!["#sommerwolke".to_owned()]
}
fn default_baseline_day() -> u32 {
    // Day 2 of phase 2 under the default 8 productive days.
    10
}
fn default_baseline_times() -> Vec<String> {
    ["00:00", "06:00", "12:00", "18:00"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}
fn default_baseline_window() -> u64 {
    3_600
}
fn default_baseline_locale() -> String {
    "all".to_owned()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    #[serde(default = "default_night_start")]
    pub night_start: String,
    #[serde(default = "default_night_end")]
    pub night_end: String,
    #[serde(default = "default_age_horizon")]
    pub age_horizon_days: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
}

fn default_night_start() -> String {
    "01:00".to_owned()
}
fn default_night_end() -> String {
    "06:00".to_owned()
}
fn default_age_horizon() -> f64 {
    30.0
}
fn default_grid_step() -> f64 {
    0.05
}

impl Default for DetectionConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields defaulted")
    }
}

impl DetectionConfig {
    pub fn params(&self) -> Result<crate::detection::DetectionParams, ConfigError> {
        Ok(crate::detection::DetectionParams {
            night_start: parse_clock(&self.night_start).map_err(ConfigError::Invalid)?,
            night_end: parse_clock(&self.night_end).map_err(ConfigError::Invalid)?,
            age_horizon_secs: (self.age_horizon_days * 86_400.0) as u64,
            ..Default::default()
        })
    }
}

/// A parsed config together with the per-group content databases.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub cfg: RunConfig,
    /// One database per bot group, indexed like `cfg.bots`.
    pub content: Vec<Arc<ContentDb>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses, validates, and resolves content databases relative
    /// to the config file's directory.
    pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_content(base)
    }

    /// Loads content databases (paths relative to `base`), falling back to
    /// preset defaults when a group names none.
    pub fn resolve_content(self, base: &Path) -> Result<LoadedConfig, ConfigError> {
        let mut content = Vec::with_capacity(self.bots.len());
        for group in &self.bots {
            let db = match &group.content_db {
                Some(rel) => {
                    let path = if rel.is_absolute() {
                        rel.clone()
                    } else {
                        base.join(rel)
                    };
                    Arc::new(ContentDb::load(&path).map_err(|e| ConfigError::Invalid(e.to_string()))?)
                }
                None => default_content_for(group.preset),
            };
            content.push(db);
        }
        Ok(LoadedConfig { cfg: self, content })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::Invalid(m));
        if self.version != CONFIG_VERSION {
            return err(format!(
                "version = {} unsupported (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if !(0.01..=0.40).contains(&self.platform.stream_coverage) {
            return err(format!(
                "platform.stream_coverage = {} outside [0.01, 0.40]",
                self.platform.stream_coverage
            ));
        }
        if self.platform.timeline_cap == 0 {
            return err("platform.timeline_cap must be positive".into());
        }
        if self.population.locales.is_empty() {
            return err("population.locales must not be empty".into());
        }
        let frac: f64 = self.population.locales.iter().map(|l| l.fraction).sum();
        if (frac - 1.0).abs() > 1e-6 {
            return err(format!("population.locales fractions sum to {frac}, expected 1"));
        }
        for l in &self.population.locales {
            parse_clock(&l.active_start).map_err(ConfigError::Invalid)?;
            if l.hashtag_pool_size == 0 {
                return err(format!("locale `{}`: hashtag_pool_size must be positive", l.name));
            }
        }
        if !(0.0..=1.0).contains(&self.population.follow_back_prob) {
            return err("population.follow_back_prob outside [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.population.out_of_band_penalty) {
            return err("population.out_of_band_penalty outside [0, 1]".into());
        }
        let [lo, hi] = self.population.balanced_ratio_band;
        if lo <= 0.0 || hi < lo {
            return err("population.balanced_ratio_band must satisfy 0 < lo <= hi".into());
        }
        for (i, g) in self.bots.iter().enumerate() {
            let tag = format!("bots[{i}]");
            if g.clique > g.count {
                return err(format!("{tag}.clique = {} exceeds count = {}", g.clique, g.count));
            }
            if let Some(j) = g.jitter {
                if !(0.0..=1.0).contains(&j) {
                    return err(format!("{tag}.jitter = {j} outside [0, 1]"));
                }
            }
            if let Some([lo, hi]) = g.ratio_band {
                if lo <= 0.0 || hi < lo {
                    return err(format!("{tag}.ratio_band must satisfy 0 < lo <= hi"));
                }
            }
            if let Some(w) = g.reciprocity_window_hours {
                if w <= 0.0 {
                    return err(format!("{tag}.reciprocity_window_hours must be positive"));
                }
            }
            if let Some(locale) = &g.locale {
                if !self.population.locales.iter().any(|l| &l.name == locale) {
                    return err(format!("{tag}.locale `{locale}` not in population.locales"));
                }
            }
            for c in [&g.active_start, &g.active_end].into_iter().flatten() {
                parse_clock(c).map_err(ConfigError::Invalid)?;
            }
            if let Some(rest) = &g.rest_periods {
                for [s, e] in rest {
                    parse_clock(s).map_err(ConfigError::Invalid)?;
                    parse_clock(e).map_err(ConfigError::Invalid)?;
                }
            }
        }
        let e = &self.experiment;
        if e.productive_days == 0 {
            return err("experiment.productive_days must be positive".into());
        }
        parse_clock(&e.push_clock).map_err(ConfigError::Invalid)?;
        for t in &e.baseline_times {
            parse_clock(t).map_err(ConfigError::Invalid)?;
        }
        if e.push_enabled && e.push_day_offset >= e.phase2_days {
            return err(format!(
                "experiment.push_day_offset = {} outside phase 2 (phase2_days = {})",
                e.push_day_offset, e.phase2_days
            ));
        }
        if e.push_enabled && e.push_hashtags.is_empty() {
            return err("experiment.push_hashtags must not be empty when the push is enabled".into());
        }
        if e.baseline_day_offset >= e.productive_days + e.phase2_days {
            return err(format!(
                "experiment.baseline_day_offset = {} beyond the simulated span",
                e.baseline_day_offset
            ));
        }
        if !(0.0..=1.0).contains(&e.baseline_coverage) {
            return err("experiment.baseline_coverage outside [0, 1]".into());
        }
        if e.baseline_locale != "all"
            && !self.population.locales.iter().any(|l| l.name == e.baseline_locale)
        {
            return err(format!(
                "experiment.baseline_locale `{}` not in population.locales",
                e.baseline_locale
            ));
        }
        if !(0.001..=0.5).contains(&self.detection.grid_step) {
            return err("detection.grid_step outside [0.001, 0.5]".into());
        }
        Ok(())
    }
}

/// Built-in content for presets that ship without a database file.
pub fn default_content_for(preset: BotPreset) -> Arc<ContentDb> {
    match preset {
        // The army recycles a handful of near-identical lines.
        BotPreset::NaiveBotArmy => {
            let entries = (0..5)
                .map(|i| ContentEntry {
                    descriptor: ContentDescriptor {
                        length: 45,
                        token_entropy: 2.1 + 0.01 * i as f64,
                        hashtags: vec![],
                        emoticon_count: 0,
                        polarity: 0.0,
                        slang_fraction: 0.05,
                        text: None,
                    },
                    media: false,
                })
                .collect();
            Arc::new(ContentDb::new(entries))
        }
        // Reactive bots never post from a database; hybrid groups are
        // expected to name a curated file, but stay runnable without one.
        BotPreset::Reactive | BotPreset::HybridNetwork => Arc::new(ContentDb::new(vec![])),
    }
}

/// The canned greeting a reactive bot replies with.
pub fn reactive_reply_descriptor() -> ContentDescriptor {
    ContentDescriptor {
        length: 12,
        token_entropy: 1.2,
        hashtags: vec![],
        emoticon_count: 1,
        polarity: 0.6,
        slang_fraction: 0.0,
        text: Some(Arc::from("Hello!")),
    }
}
