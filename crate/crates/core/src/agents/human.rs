//! Baseline human accounts: organic posting/retweeting activity and the
//! reciprocity responses that make follow-for-follow growth possible.
//!
//! Humans are stateless decision functions over explicit random streams;
//! the simulation runner owns scheduling and platform mutation.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};

use crate::agents::activity::DailySchedule;
use crate::content::ContentDescriptor;
use crate::platform::AccountSnapshot;
use crate::rng::RandomStream;

/// Parameters of the log-normal follow-back response latency.
#[derive(Debug, Clone, Copy)]
pub struct LatencyParams {
    pub median_secs: f64,
    pub sigma: f64,
    pub cap_secs: u64,
}

impl Default for LatencyParams {
    fn default() -> Self {
        // Median 6h, capped at 48h: most responses land inside a 24h
        // reciprocity window, a meaningful minority legitimately miss it.
        LatencyParams {
            median_secs: 6.0 * 3_600.0,
            sigma: 1.0,
            cap_secs: 48 * 3_600,
        }
    }
}

/// Per-post content statistics generator for one account.
#[derive(Debug, Clone)]
pub struct ContentSampler {
    pub length_mean: f64,
    pub length_sd: f64,
    pub entropy_mean: f64,
    pub entropy_sd: f64,
    /// Mean hashtags per post (Poisson).
    pub hashtag_rate: f64,
    /// Shared per-locale hashtag pool, most popular first.
    pub hashtag_pool: Arc<[Arc<str>]>,
    /// Cumulative Zipf weights over the pool, normalized to end at 1.
    pub zipf_cum: Arc<[f64]>,
    /// Mean emoticons per post (Poisson).
    pub emoticon_rate: f64,
    pub polarity_mean: f64,
    pub polarity_sd: f64,
    pub slang_mean: f64,
    pub slang_sd: f64,
}

impl ContentSampler {
    pub fn sample(&self, rng: &mut RandomStream) -> ContentDescriptor {
        let length = Normal::new(self.length_mean, self.length_sd)
            .expect("valid normal")
            .sample(rng)
            .round()
            .clamp(3.0, 500.0) as u32;
        let token_entropy = Normal::new(self.entropy_mean, self.entropy_sd)
            .expect("valid normal")
            .sample(rng)
            .clamp(0.5, 8.0);
        let n_tags = Poisson::new(self.hashtag_rate.max(1e-9))
            .expect("valid poisson")
            .sample(rng)
            .min(3.0) as usize;
        let mut hashtags = Vec::with_capacity(n_tags);
        for _ in 0..n_tags {
            let tag = self.zipf_tag(rng);
            if !hashtags.contains(&tag) {
                hashtags.push(tag);
            }
        }
        let emoticon_count = Poisson::new(self.emoticon_rate.max(1e-9))
            .expect("valid poisson")
            .sample(rng)
            .min(6.0) as u32;
        let polarity = Normal::new(self.polarity_mean, self.polarity_sd)
            .expect("valid normal")
            .sample(rng)
            .clamp(-1.0, 1.0);
        let slang_fraction = Normal::new(self.slang_mean, self.slang_sd)
            .expect("valid normal")
            .sample(rng)
            .clamp(0.0, 1.0);
        ContentDescriptor {
            length,
            token_entropy,
            hashtags,
            emoticon_count,
            polarity,
            slang_fraction,
            text: None,
        }
    }

    fn zipf_tag(&self, rng: &mut RandomStream) -> Arc<str> {
        // Inverse-CDF draw over the precomputed cumulative Zipf weights.
        debug_assert_eq!(self.zipf_cum.len(), self.hashtag_pool.len());
        let u = rng.random::<f64>();
        let idx = self.zipf_cum.partition_point(|&c| c <= u);
        self.hashtag_pool[idx.min(self.hashtag_pool.len() - 1)].clone()
    }
}

/// Cumulative Zipf weights (exponent `s`) for a pool of `n` ranks,
/// normalized so the last entry is 1.
pub fn zipf_cumulative(n: usize, s: f64) -> Arc<[f64]> {
    let mut cum = Vec::with_capacity(n);
    let mut total = 0.0;
    for k in 1..=n {
        total += (k as f64).powf(-s);
        cum.push(total);
    }
    for c in &mut cum {
        *c /= total;
    }
    cum.into()
}

/// Behavioral parameters of one human account.
#[derive(Debug, Clone)]
pub struct HumanProfile {
    pub post_rate: f64,
    pub retweet_rate: f64,
    pub schedule: DailySchedule,
    pub follow_back_prob: f64,
    /// Following/follower band a requester must sit in to look organic.
    pub balanced_ratio_band: (f64, f64),
    /// Multiplier applied to the follow-back probability for requesters
    /// outside the band.
    pub out_of_band_penalty: f64,
    pub latency: LatencyParams,
    pub content: ContentSampler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowBackDecision {
    Accept { latency_secs: u64 },
    Decline,
}

/// Decides whether this human reciprocates a new follower.
///
/// Acceptance probability is `follow_back_prob` when the requester's
/// following/follower ratio sits inside the balanced band, and
/// `follow_back_prob * out_of_band_penalty` otherwise. Accepted responses
/// carry a log-normal latency, capped.
pub fn follow_back_decision(
    responder: &HumanProfile,
    requester: &AccountSnapshot,
    rng: &mut RandomStream,
) -> FollowBackDecision {
    let ratio = requester.following_follower_ratio();
    let (lo, hi) = responder.balanced_ratio_band;
    let in_band = ratio >= lo && ratio <= hi;
    let p = if in_band {
        responder.follow_back_prob
    } else {
        responder.follow_back_prob * responder.out_of_band_penalty
    };
    if rng.uniform() >= p {
        return FollowBackDecision::Decline;
    }
    let lat = &responder.latency;
    let dist = LogNormal::new(lat.median_secs.ln(), lat.sigma).expect("valid lognormal");
    let latency_secs = (dist.sample(rng).round().max(1.0) as u64).min(lat.cap_secs);
    FollowBackDecision::Accept { latency_secs }
}
