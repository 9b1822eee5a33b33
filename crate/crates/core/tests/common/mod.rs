#![allow(dead_code)]

//! Shared builders for integration tests: small configurations and an
//! in-memory content database, so tests need no fixture files.

use std::sync::Arc;

use flocksim_core::config::{BotGroupConfig, LoadedConfig, RunConfig};
use flocksim_core::content::{ContentDb, ContentDescriptor, ContentEntry};

pub fn content_entry(
    length: u32,
    entropy: f64,
    polarity: f64,
    slang: f64,
    emoticons: u32,
    tags: &[&str],
    media: bool,
) -> ContentEntry {
    ContentEntry {
        descriptor: ContentDescriptor {
            length,
            token_entropy: entropy,
            hashtags: tags.iter().map(|t| Arc::from(*t)).collect(),
            emoticon_count: emoticons,
            polarity,
            slang_fraction: slang,
            text: None,
        },
        media,
    }
}

/// A varied, human-plausible content pool for hybrid bots (mildly elevated
/// slang, otherwise near the desk-scale population center).
pub fn hybrid_db() -> ContentDb {
    // Statistical profile of curated microblog lines: a touch shorter and
    // simpler than the population center, visibly more slang, otherwise
    // organic variety.
    let mut entries = Vec::new();
    let lengths = [48u32, 62, 75, 84, 95, 110, 58, 72, 120, 66];
    let entropies = [3.5, 3.7, 3.9, 4.1, 3.6, 3.8, 4.0, 3.6, 4.2, 3.8];
    let polarities = [0.4, -0.27, 0.09, 0.59, -0.41, 0.0, 0.27, -0.14, 0.5, 0.18];
    let slang = [0.22, 0.30, 0.26, 0.35, 0.28, 0.24, 0.32, 0.27, 0.30, 0.25];
    let emoticons = [0u32, 1, 0, 1, 0, 0, 1, 0, 2, 1];
    for i in 0..30 {
        entries.push(content_entry(
            lengths[i % 10] + (i as u32 % 7) * 3,
            entropies[i % 10],
            polarities[i % 10],
            slang[i % 10],
            emoticons[i % 10],
            &[],
            i % 6 == 5,
        ));
    }
    ContentDb::new(entries)
}

fn base_cfg(humans: u32) -> RunConfig {
    let text = format!(
        r#"
version = 1
seed = 42

[population]
humans = {humans}
history_days = 120

[[population.locales]]
name = "de"
fraction = 0.4
timezone_spread_hours = 2.0
hashtag_pool_size = 150
slang_mean = 0.18

[[population.locales]]
name = "ww"
fraction = 0.6
timezone_spread_hours = 24.0
hashtag_pool_size = 250
slang_mean = 0.15

[experiment]
setup_days = 2
productive_days = 8
phase2_days = 3
"#
    );
    RunConfig::parse(&text).expect("test config valid")
}

pub fn hybrid_group(count: u32, clique: u32) -> BotGroupConfig {
    let text = format!(
        r#"
version = 1
[population]
humans = 1
[[population.locales]]
name = "de"
fraction = 1.0
[[bots]]
preset = "hybrid_network"
count = {count}
clique = {clique}
locale = "de"
"#
    );
    RunConfig::parse(&text).expect("group parses").bots.remove(0)
}

pub fn naive_group(count: u32) -> BotGroupConfig {
    let text = format!(
        r#"
version = 1
[population]
humans = 1
[[population.locales]]
name = "de"
fraction = 1.0
[[bots]]
preset = "naive_bot_army"
count = {count}
locale = "de"
"#
    );
    RunConfig::parse(&text).expect("group parses").bots.remove(0)
}

/// A small hybrid-network scenario: fast enough for unit-style runs.
pub fn small_hybrid_config(humans: u32, bots: u32, clique: u32) -> LoadedConfig {
    let mut cfg = base_cfg(humans);
    cfg.bots.push(hybrid_group(bots, clique));
    LoadedConfig {
        cfg,
        content: vec![Arc::new(hybrid_db())],
    }
}

/// Humans only (reference populations, norms).
pub fn humans_only_config(humans: u32) -> LoadedConfig {
    LoadedConfig {
        cfg: base_cfg(humans),
        content: vec![],
    }
}

/// Exact central binomial interval by CDF inversion (log-space summation):
/// smallest k with CDF >= alpha/2 up to smallest k with CDF >= 1 - alpha/2.
pub fn binomial_central_interval(n: u64, p: f64, alpha: f64) -> (u64, u64) {
    let ln_choose = |n: u64, k: u64| -> f64 {
        fn ln_gamma(x: f64) -> f64 {
            // Stirling with correction terms; exact enough for n! ratios.
            let coeffs = [
                76.18009172947146,
                -86.50532032941677,
                24.01409824083091,
                -1.231739572450155,
                0.1208650973866179e-2,
                -0.5395239384953e-5,
            ];
            let mut y = x;
            let tmp = x + 5.5 - (x + 0.5) * (x + 5.5).ln();
            let mut ser = 1.000000000190015;
            for c in coeffs {
                y += 1.0;
                ser += c / y;
            }
            -tmp + (2.5066282746310005 * ser / x).ln()
        }
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    };
    let ln_q = (-p).ln_1p(); // ln(1 - p)
    let (lo_t, hi_t) = (alpha / 2.0, 1.0 - alpha / 2.0);
    let mut cdf = 0.0;
    let mut lo = None;
    for k in 0..=n {
        let ln_pmf = ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * ln_q;
        cdf += ln_pmf.exp();
        if lo.is_none() && cdf >= lo_t {
            lo = Some(k);
        }
        if cdf >= hi_t {
            return (lo.expect("lower bound found first"), k);
        }
    }
    (lo.unwrap_or(0), n)
}

