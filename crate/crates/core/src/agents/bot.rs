//! Scripted bot agents.
//!
//! Two families share this module: the hybrid, human-mimicking bot
//! (day-night cycle, jittered action times, candidate collection from the
//! sampled stream, follow-for-follow with a reciprocity window and
//! blacklist) and the crude always-on variants (metronomic posting,
//! fire-and-forget following, roster-sourced retweets). A reactive reply
//! bot is a third, stateless flavor at the bottom of the file.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::agents::activity::{next_action_time, ActivityError, DailySchedule};
use crate::content::{ContentDb, ContentDescriptor};
use crate::platform::{AccountId, Platform, Post, PostId, PostKind};
use crate::rng::RandomStream;
use crate::time::SimTime;

/// Filters applied to stream authors before they become follow candidates.
#[derive(Debug, Clone)]
pub struct CandidateCriteria {
    /// Acceptable following/follower ratio interval.
    pub ratio_band: (f64, f64),
    /// Minimum authored posts within the lookback window.
    pub min_activity: u32,
    pub activity_lookback_secs: u64,
    /// Rank candidates by the retweet count of their triggering post.
    pub prefer_popular: bool,
}

impl Default for CandidateCriteria {
    fn default() -> Self {
        CandidateCriteria {
            ratio_band: (0.3, 3.0),
            min_activity: 1,
            activity_lookback_secs: 7 * 86_400,
            prefer_popular: true,
        }
    }
}

/// Lifecycle of one outgoing follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowState {
    Pending { deadline: SimTime },
    Friend,
    /// Terminal: the target never followed back and is never contacted again.
    Blacklisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FollowRecord {
    pub target: AccountId,
    pub state: FollowState,
    pub initiated_at: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowPolicy {
    /// Unfollow and blacklist targets that do not reciprocate within the
    /// window.
    FollowForFollow { reciprocity_window_secs: u64 },
    /// Follow and never look back (keeps one-sided edges forever).
    FireAndForget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetweetSource {
    /// Topical posts collected from the sampled stream.
    CollectedStream,
    /// Latest post of a fellow roster bot (centrally amplified content).
    Roster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BotActionKind {
    Post,
    Retweet,
    Follow,
}

/// Behavioral parameter set of a scripted bot.
#[derive(Debug, Clone)]
pub struct BotProfile {
    pub schedule: DailySchedule,
    pub posts_per_day: f64,
    pub retweets_per_day: f64,
    pub follows_per_day: f64,
    /// Relative noise amplitude on inter-action intervals, in [0, 1].
    pub jitter: f64,
    /// Hashtags the bot's stream listener tracks.
    pub topics: BTreeSet<Arc<str>>,
    pub criteria: CandidateCriteria,
    pub follow_policy: FollowPolicy,
    pub retweet_source: RetweetSource,
    /// Stop initiating follows while the own following/follower ratio would
    /// leave this band (keeps the profile from looking obviously bot-like).
    pub ratio_guard: Option<(f64, f64)>,
    pub content_db: Arc<ContentDb>,
    /// Freshest-first cap on how old a retweeted original may be, seconds.
    pub retweet_max_age_secs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Candidate {
    pub account: AccountId,
    /// Retweet count of the triggering post at collection time.
    pub popularity: u32,
}

#[derive(Debug)]
enum CandidateQueue {
    /// Ordered by descending popularity, account id as tie-break.
    Popular(BTreeSet<(Reverse<u32>, AccountId)>),
    /// Stream order.
    Fifo(VecDeque<Candidate>),
}

impl CandidateQueue {
    fn len(&self) -> usize {
        match self {
            CandidateQueue::Popular(s) => s.len(),
            CandidateQueue::Fifo(q) => q.len(),
        }
    }

    fn push(&mut self, c: Candidate) {
        match self {
            CandidateQueue::Popular(s) => {
                s.insert((Reverse(c.popularity), c.account));
            }
            CandidateQueue::Fifo(q) => q.push_back(c),
        }
    }

    fn pop(&mut self) -> Option<Candidate> {
        match self {
            CandidateQueue::Popular(s) => {
                let first = s.iter().next().copied()?;
                s.remove(&first);
                Some(Candidate {
                    account: first.1,
                    popularity: first.0 .0,
                })
            }
            CandidateQueue::Fifo(q) => q.pop_front(),
        }
    }
}

/// Everything produced by one follow tick: unfollows to emit and follows
/// to initiate (with the reciprocity deadline, when the policy has one).
#[derive(Debug, Default, PartialEq, Eq)]
pub struct FollowTickOutcome {
    pub unfollows: Vec<AccountId>,
    pub follows: Vec<(AccountId, Option<SimTime>)>,
}

/// Mutable state of one scripted bot.
pub struct BotAgent {
    pub id: AccountId,
    pub profile: BotProfile,
    records: BTreeMap<AccountId, FollowRecord>,
    /// Every target ever followed, under any policy.
    contacted: BTreeSet<AccountId>,
    /// Accounts never to contact: self plus the operator's own roster.
    excluded: BTreeSet<AccountId>,
    /// Candidate set membership, to keep the queue duplicate-free.
    queued: BTreeSet<AccountId>,
    queue: CandidateQueue,
    /// Sampled topical posts kept for retweeting: (post, original posted-at).
    collected: VecDeque<(PostId, SimTime)>,
    last_content: Option<usize>,
    pub empty_db_warned: bool,
    /// End of the last stream-collection window.
    pub last_collected_at: SimTime,
}

const COLLECTED_CAP: usize = 256;

impl BotAgent {
    pub fn new(id: AccountId, profile: BotProfile, roster: &[AccountId], start: SimTime) -> Self {
        let mut excluded: BTreeSet<AccountId> = roster.iter().copied().collect();
        excluded.insert(id);
        let queue = if profile.criteria.prefer_popular {
            CandidateQueue::Popular(BTreeSet::new())
        } else {
            CandidateQueue::Fifo(VecDeque::new())
        };
        BotAgent {
            id,
            profile,
            records: BTreeMap::new(),
            contacted: BTreeSet::new(),
            excluded,
            queued: BTreeSet::new(),
            queue,
            collected: VecDeque::new(),
            last_content: None,
            empty_db_warned: false,
            last_collected_at: start,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &FollowRecord> {
        self.records.values()
    }

    pub fn record(&self, target: AccountId) -> Option<&FollowRecord> {
        self.records.get(&target)
    }

    pub fn candidate_count(&self) -> usize {
        self.queue.len()
    }

    /// Next firing time for one of the bot's action chains.
    pub fn next_action_time(
        &self,
        kind: BotActionKind,
        now: SimTime,
        rng: &mut RandomStream,
    ) -> Result<SimTime, ActivityError> {
        let rate = match kind {
            BotActionKind::Post => self.profile.posts_per_day,
            BotActionKind::Retweet => self.profile.retweets_per_day,
            BotActionKind::Follow => self.profile.follows_per_day,
        };
        next_action_time(&self.profile.schedule, rate, self.profile.jitter, now, rng)
    }

    /// Whether an account may still be followed by this bot.
    pub fn may_follow(&self, target: AccountId) -> bool {
        !self.excluded.contains(&target) && !self.contacted.contains(&target)
    }

    /// Feeds freshly collected candidates into the queue (duplicates and
    /// already-contacted accounts are dropped).
    pub fn absorb_candidates(&mut self, candidates: Vec<Candidate>) {
        for c in candidates {
            if self.may_follow(c.account) && self.queued.insert(c.account) {
                self.queue.push(c);
            }
        }
    }

    /// Remembers sampled topical posts as retweet material.
    pub fn absorb_collected(&mut self, platform: &Platform, sampled: &[PostId]) {
        for &pid in sampled {
            let original = platform.resolve_original(pid);
            let Some(post) = platform.post(original) else {
                continue;
            };
            if post.author == self.id {
                continue;
            }
            self.collected.push_back((original, post.at));
            if self.collected.len() > COLLECTED_CAP {
                self.collected.pop_front();
            }
        }
    }

    /// Registers an outgoing follow decided to fire at `fire_at`; returns
    /// the reciprocity deadline when the policy supervises reactions.
    pub fn stage_follow(&mut self, target: AccountId, fire_at: SimTime) -> Option<SimTime> {
        debug_assert!(self.may_follow(target));
        self.contacted.insert(target);
        self.queued.remove(&target);
        match self.profile.follow_policy {
            FollowPolicy::FollowForFollow {
                reciprocity_window_secs,
            } => {
                let deadline = fire_at + reciprocity_window_secs;
                self.records.insert(
                    target,
                    FollowRecord {
                        target,
                        state: FollowState::Pending { deadline },
                        initiated_at: fire_at,
                    },
                );
                Some(deadline)
            }
            FollowPolicy::FireAndForget => None,
        }
    }

    /// Resolves pending follow records: targets that follow the bot back
    /// become friends; records past their deadline are blacklisted and the
    /// returned accounts must be unfollowed by the caller.
    pub fn sweep_pending(&mut self, now: SimTime, platform: &Platform) -> Vec<AccountId> {
        let mut unfollows = Vec::new();
        for rec in self.records.values_mut() {
            let FollowState::Pending { deadline } = rec.state else {
                continue;
            };
            if platform.follows(rec.target, self.id) {
                rec.state = FollowState::Friend;
            } else if deadline <= now {
                rec.state = FollowState::Blacklisted;
                unfollows.push(rec.target);
            }
        }
        unfollows
    }

    /// Picks the next follow target honoring the ratio guard, or `None`
    /// when throttled or out of candidates.
    pub fn pick_follow_target(&mut self, platform: &Platform, now: SimTime) -> Option<AccountId> {
        if let Some((_, hi)) = self.profile.ratio_guard {
            let snap = platform.snapshot_now(self.id, now).ok()?;
            let would_be = (snap.following as f64 + 1.0) / (snap.followers.max(1) as f64);
            if would_be > hi {
                return None;
            }
        }
        while let Some(c) = self.queue.pop() {
            self.queued.remove(&c.account);
            if self.may_follow(c.account) {
                return Some(c.account);
            }
        }
        None
    }

    /// One unit of the follow actuator: resolve reactions, then initiate
    /// up to `budget` follows of the top candidates at `now`.
    pub fn follow_tick(
        &mut self,
        platform: &Platform,
        now: SimTime,
        budget: usize,
    ) -> FollowTickOutcome {
        let unfollows = self.sweep_pending(now, platform);
        let mut follows = Vec::new();
        for _ in 0..budget {
            let Some(target) = self.pick_follow_target(platform, now) else {
                break;
            };
            let deadline = self.stage_follow(target, now);
            follows.push((target, deadline));
        }
        FollowTickOutcome { unfollows, follows }
    }

    /// Draws the next prepared content entry; `None` (with the warning
    /// latch set) when the database is empty.
    pub fn draw_post(&mut self, rng: &mut RandomStream) -> Option<(ContentDescriptor, PostKind)> {
        match self.profile.content_db.clone().draw(&mut self.last_content, rng) {
            Some(entry) => {
                let kind = if entry.media {
                    PostKind::Media
                } else {
                    PostKind::Original
                };
                Some((entry.descriptor.clone(), kind))
            }
            None => {
                self.empty_db_warned = true;
                None
            }
        }
    }

    /// Picks a collected post to retweet such that the original is still
    /// fresh when the retweet fires. The pick is removed from the buffer,
    /// so a bot never retweets the same original twice.
    pub fn pick_retweet(&mut self, fire_at: SimTime, rng: &mut RandomStream) -> Option<PostId> {
        let min_at = fire_at.saturating_sub(self.profile.retweet_max_age_secs);
        let eligible: Vec<usize> = self
            .collected
            .iter()
            .enumerate()
            .filter(|(_, (_, at))| *at >= min_at)
            .map(|(i, _)| i)
            .collect();
        if eligible.is_empty() {
            // Drop hopelessly stale material so the buffer stays useful.
            while matches!(self.collected.front(), Some((_, at)) if *at < min_at) {
                self.collected.pop_front();
            }
            return None;
        }
        let pick = eligible[(rng.uniform() * eligible.len() as f64) as usize % eligible.len()];
        self.collected.remove(pick).map(|(pid, _)| pid)
    }
}

/// Filters and orders the authors of sampled stream posts into follow
/// candidates.
///
/// Authors are deduplicated (keeping their most-retweeted triggering post),
/// excluded when `exclude` says so (self, roster, blacklist, already
/// contacted), and filtered by the criteria's ratio band and minimum
/// activity. With `prefer_popular` the result is ordered by descending
/// triggering-post retweet count with account id as tie-break; otherwise
/// stream order is kept.
pub fn collect_candidates(
    platform: &Platform,
    sampled_posts: &[PostId],
    criteria: &CandidateCriteria,
    exclude: impl Fn(AccountId) -> bool,
    now: SimTime,
) -> Vec<Candidate> {
    let mut order: Vec<AccountId> = Vec::new();
    let mut best: BTreeMap<AccountId, u32> = BTreeMap::new();
    for &pid in sampled_posts {
        let Some(post) = platform.post(pid) else {
            continue;
        };
        let author = post.author;
        if exclude(author) {
            continue;
        }
        let original = platform.resolve_original(pid);
        let popularity = platform
            .post(original)
            .map(|p| p.retweets_received)
            .unwrap_or(0);
        match best.get_mut(&author) {
            Some(p) => *p = (*p).max(popularity),
            None => {
                best.insert(author, popularity);
                order.push(author);
            }
        }
    }

    let lookback_start = now.saturating_sub(criteria.activity_lookback_secs);
    let mut out: Vec<Candidate> = Vec::new();
    for author in order {
        let Ok(snap) = platform.snapshot_now(author, now) else {
            continue;
        };
        let ratio = snap.following_follower_ratio();
        if ratio < criteria.ratio_band.0 || ratio > criteria.ratio_band.1 {
            continue;
        }
        if criteria.min_activity > 0 {
            let recent = platform.post_count_in_window(author, (lookback_start, now + 1));
            if recent < criteria.min_activity {
                continue;
            }
        }
        out.push(Candidate {
            account: author,
            popularity: best[&author],
        });
    }
    if criteria.prefer_popular {
        out.sort_by_key(|c| (Reverse(c.popularity), c.account));
    }
    out
}

/// Keyword rules of the reactive reply bot.
#[derive(Debug, Clone)]
pub struct ReactiveRules {
    /// Hashtags that trigger a reply.
    pub keywords: BTreeSet<Arc<str>>,
    /// The canned reply content.
    pub reply: ContentDescriptor,
    /// Processing delay between trigger and reply; zero replies instantly.
    pub delay_secs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplyAction {
    pub descriptor: ContentDescriptor,
    pub ref_post: PostId,
}

/// The reactive bot: replies to any tracked-keyword post by someone else.
pub fn reactive_reply(post: &Post, rules: &ReactiveRules, self_id: AccountId) -> Option<ReplyAction> {
    if post.author == self_id {
        return None;
    }
    if !post.descriptor.has_any_hashtag(&rules.keywords) {
        return None;
    }
    Some(ReplyAction {
        descriptor: rules.reply.clone(),
        ref_post: post.id,
    })
}
