//! The simulation runner: builds the population from a config, then
//! drives the event loop.
//!
//! Everything that mutates platform state is itself an engine event with a
//! concrete payload (post with its descriptor, follow/unfollow with its
//! target), decided at scheduling time from the acting agent's own random
//! streams. Replaying a recorded event log against a freshly built initial
//! platform therefore reproduces the final platform state exactly; agent
//! decision events (deadline checks, push coordination, idle keep-alives)
//! are logged too but are no-ops on the platform.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rand_distr::{Beta, Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::agents::activity::{next_exponential_time, DailySchedule};
use crate::agents::bot::{
    collect_candidates, reactive_reply, BotActionKind, BotAgent, BotProfile, CandidateCriteria,
    FollowPolicy, ReactiveRules, RetweetSource,
};
use crate::agents::human::{
    follow_back_decision, zipf_cumulative, ContentSampler, FollowBackDecision, HumanProfile,
    LatencyParams,
};
use crate::config::{reactive_reply_descriptor, BotPreset, LoadedConfig, RunConfig};
use crate::content::{ContentDb, ContentDescriptor};
use crate::engine::{Actor, Engine, EventRecord};
use crate::platform::{
    AccountId, AccountSpec, Archetype, Platform, PlatformError, PostId, PostKind,
};
use crate::rng::{derive_stream, RandomStream};
use crate::time::{parse_clock, SimTime, SECS_PER_DAY};

/// Which scheduling chain an event belongs to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    Post,
    Retweet,
    Follow,
}

/// Why an action happened; routine actions reschedule their chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Routine,
    Push,
    Reply,
    FollowBack,
}

/// Event payloads. `Post`, `Follow`, and `Unfollow` mutate the platform;
/// the rest are agent-internal decisions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "payload", rename_all = "snake_case")]
pub enum Action {
    Post {
        kind: PostKind,
        descriptor: ContentDescriptor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ref_post: Option<PostId>,
        trigger: Trigger,
    },
    Follow {
        target: AccountId,
        trigger: Trigger,
    },
    Unfollow {
        target: AccountId,
    },
    /// Reciprocity-window expiry check for one pending follow.
    FollowDeadline {
        target: AccountId,
    },
    /// Phase-2 kickoff: every participating bot schedules its burst.
    PushDirective,
    /// Deferred push-retweet choice (the target must exist first).
    PushRetweet,
    /// Chain keep-alive fired when an agent had nothing to act on.
    Idle {
        kind: ChainKind,
    },
}

/// Applies one logged action to a platform. Non-mutating actions are
/// no-ops. This is the whole replay semantics.
pub fn apply_action(
    platform: &mut Platform,
    actor: Actor,
    action: &Action,
    at: SimTime,
) -> Result<(), PlatformError> {
    let Actor::Account(account) = actor else {
        return Ok(());
    };
    match action {
        Action::Post {
            kind,
            descriptor,
            ref_post,
            ..
        } => {
            platform.submit_post(account, descriptor.clone(), *kind, *ref_post, at)?;
        }
        Action::Follow { target, .. } => {
            platform.set_follow(account, *target, at)?;
        }
        Action::Unfollow { target } => {
            platform.remove_follow(account, *target, at)?;
        }
        _ => {}
    }
    Ok(())
}

/// Rebuilds the final platform state from an initial state and an event
/// log, in `(fire_at, seq)` order.
pub fn replay_log(
    mut initial: Platform,
    log: &[EventRecord<Action>],
) -> Result<Platform, PlatformError> {
    for ev in log {
        apply_action(&mut initial, ev.actor, &ev.action, ev.fire_at)?;
    }
    Ok(initial)
}

struct HumanAgent {
    id: AccountId,
    profile: HumanProfile,
    post_rng: RandomStream,
    retweet_rng: RandomStream,
    fb_rng: RandomStream,
}

struct ScriptedBot {
    agent: BotAgent,
    group: usize,
    post_rng: RandomStream,
    retweet_rng: RandomStream,
    follow_rng: RandomStream,
    collect_rng: RandomStream,
}

struct ReactiveBot {
    id: AccountId,
    rules: ReactiveRules,
    coverage: f64,
    rng: RandomStream,
}

struct GroupRuntime {
    preset: BotPreset,
    members: Vec<AccountId>,
    /// Recent group posts, for roster-sourced retweeting.
    recent_posts: VecDeque<(PostId, SimTime, AccountId)>,
    joins_push: bool,
}

#[derive(Copy, Clone)]
enum Slot {
    Human(usize),
    Scripted(usize),
    Reactive,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("runtime: {0}")]
    Runtime(String),
}

impl From<PlatformError> for SimError {
    fn from(e: PlatformError) -> Self {
        SimError::Runtime(e.to_string())
    }
}

const ROSTER_RECENT_CAP: usize = 64;
const TIMELINE_PICK_DEPTH: usize = 50;

/// Shared per-locale runtime: generated hashtag pool and Zipf weights.
struct LocaleRuntime {
    name: Arc<str>,
    pool: Arc<[Arc<str>]>,
    zipf_cum: Arc<[f64]>,
    active_start: u32,
}

impl LocaleRuntime {
    fn draw_tag(&self, rng: &mut RandomStream) -> Arc<str> {
        let u = rng.uniform();
        let idx = self.zipf_cum.partition_point(|&c| c <= u);
        self.pool[idx.min(self.pool.len() - 1)].clone()
    }
}

pub struct Simulation {
    pub engine: Engine<Action>,
    pub platform: Platform,
    pub cfg: RunConfig,
    humans: Vec<HumanAgent>,
    bots: Vec<ScriptedBot>,
    reactive: Vec<ReactiveBot>,
    groups: Vec<GroupRuntime>,
    slots: Vec<Slot>,
    root_seed: u64,
    /// End of the account-history backfill; all activity starts here.
    start: SimTime,
    pub warnings: Vec<String>,
}

impl Simulation {
    /// Builds platform, population, and initial event chains.
    pub fn build(loaded: &LoadedConfig, seed_override: Option<u64>) -> Result<Simulation, SimError> {
        let cfg = loaded.cfg.clone();
        let seed = seed_override.unwrap_or(cfg.seed);
        let mut sim = Simulation::setup(&cfg, &loaded.content, seed)?;
        sim.seed_initial_events()?;
        Ok(sim)
    }

    /// The deterministic pre-activity platform (accounts, backfilled human
    /// graph, bot cliques) that an event-log replay starts from.
    pub fn initial_platform(loaded: &LoadedConfig, seed_override: Option<u64>) -> Result<Platform, SimError> {
        let cfg = loaded.cfg.clone();
        let seed = seed_override.unwrap_or(cfg.seed);
        Ok(Simulation::setup(&cfg, &loaded.content, seed)?.platform)
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    /// First instant of simulated activity (accounts are older).
    pub fn activity_start(&self) -> SimTime {
        self.start
    }

    pub fn setup_end(&self) -> SimTime {
        self.start + self.cfg.experiment.setup_days as u64 * SECS_PER_DAY
    }

    /// The documented growth window: `[setup end, setup end + productive days)`.
    pub fn productive_window(&self) -> (SimTime, SimTime) {
        let s = self.setup_end();
        (s, s + self.cfg.experiment.productive_days as u64 * SECS_PER_DAY)
    }

    pub fn phase2_window(&self) -> (SimTime, SimTime) {
        let (_, productive_end) = self.productive_window();
        (
            productive_end,
            productive_end + self.cfg.experiment.phase2_days as u64 * SECS_PER_DAY,
        )
    }

    pub fn end(&self) -> SimTime {
        self.phase2_window().1
    }

    /// The push burst `[start, end)`, when enabled.
    pub fn push_window(&self) -> Option<(SimTime, SimTime)> {
        let e = &self.cfg.experiment;
        if !e.push_enabled {
            return None;
        }
        let clock = parse_clock(&e.push_clock).expect("validated");
        let start = self.phase2_window().0
            + e.push_day_offset as u64 * SECS_PER_DAY
            + clock as u64;
        let end = start + (e.push_window_hours * 3_600.0) as u64;
        Some((start, end))
    }

    pub fn bot_ids(&self) -> Vec<AccountId> {
        self.bots.iter().map(|b| b.agent.id).collect()
    }

    pub fn hybrid_bot_ids(&self) -> Vec<AccountId> {
        self.bots
            .iter()
            .filter(|b| self.groups[b.group].preset == BotPreset::HybridNetwork)
            .map(|b| b.agent.id)
            .collect()
    }

    pub fn scripted_bots(&self) -> impl Iterator<Item = &BotAgent> {
        self.bots.iter().map(|b| &b.agent)
    }

    /// Runs every event up to and including `t_end`, leaving the clock there.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<(), SimError> {
        while let Some(ev) = self.engine.pop_next(t_end) {
            self.dispatch(ev)?;
        }
        self.engine
            .finish(t_end)
            .map_err(|e| SimError::Runtime(e.to_string()))
    }

    /// Runs to the end of the configured span (setup + productive + phase 2).
    pub fn run_all(&mut self) -> Result<(), SimError> {
        let end = self.end();
        self.run_until(end)
    }

    // ------------------------------------------------------------------
    // Population setup
    // ------------------------------------------------------------------

    fn setup(cfg: &RunConfig, content: &[Arc<ContentDb>], seed: u64) -> Result<Simulation, SimError> {
        if content.len() != cfg.bots.len() {
            return Err(SimError::Config(
                "content databases not resolved for every bot group".into(),
            ));
        }
        let start = SimTime::from_days(cfg.population.history_days as u64);
        let mut platform = Platform::new(cfg.platform.timeline_cap);
        let mut setup_rng = derive_stream(seed, "setup/population").map_err(|e| SimError::Config(e.to_string()))?;

        let locales: Vec<LocaleRuntime> = cfg
            .population
            .locales
            .iter()
            .map(|l| {
                let pool: Vec<Arc<str>> = (0..l.hashtag_pool_size)
                    .map(|i| Arc::from(format!("#{}_{i}", l.name).as_str()))
                    .collect();
                LocaleRuntime {
                    name: Arc::from(l.name.as_str()),
                    zipf_cum: zipf_cumulative(pool.len(), l.zipf_exponent),
                    pool: pool.into(),
                    active_start: parse_clock(&l.active_start).expect("validated"),
                }
            })
            .collect();

        // --- bots first: stable ids independent of population size ---
        let mut bots: Vec<ScriptedBot> = Vec::new();
        let mut reactive: Vec<ReactiveBot> = Vec::new();
        let mut groups: Vec<GroupRuntime> = Vec::new();
        let mut slots: Vec<Slot> = Vec::new();
        let mut bot_global = 0u32;
        for (gi, group) in cfg.bots.iter().enumerate() {
            let locale_idx = group
                .locale
                .as_ref()
                .map(|name| {
                    cfg.population
                        .locales
                        .iter()
                        .position(|l| &l.name == name)
                        .expect("validated")
                })
                .unwrap_or(0);
            let locale = &locales[locale_idx];
            let archetype = match group.preset {
                BotPreset::HybridNetwork => Archetype::HybridBot,
                BotPreset::NaiveBotArmy | BotPreset::Reactive => Archetype::NaiveBot,
            };
            let mut members = Vec::with_capacity(group.count as usize);
            for _ in 0..group.count {
                let completeness = group.profile_completeness.unwrap_or(match group.preset {
                    BotPreset::HybridNetwork => 0.85,
                    BotPreset::NaiveBotArmy => 0.10,
                    BotPreset::Reactive => 0.30,
                });
                let id = platform
                    .create_account(AccountSpec {
                        handle: format!("b{bot_global}"),
                        created_at: start,
                        profile_completeness: completeness,
                        locale: locale.name.clone(),
                        archetype,
                    })
                    .map_err(|e| SimError::Config(e.to_string()))?;
                members.push(id);
                bot_global += 1;
            }
            groups.push(GroupRuntime {
                preset: group.preset,
                members: members.clone(),
                recent_posts: VecDeque::new(),
                joins_push: group.preset == BotPreset::HybridNetwork,
            });

            for &id in &members {
                match group.preset {
                    BotPreset::Reactive => {
                        let keywords: BTreeSet<Arc<str>> = match &group.keywords {
                            Some(ks) => ks.iter().map(|k| Arc::from(k.as_str())).collect(),
                            // Track the locale's most popular tag so the
                            // listener actually sees traffic.
                            None => [locale.pool[0].clone()].into_iter().collect(),
                        };
                        slots.push(Slot::Reactive);
                        reactive.push(ReactiveBot {
                            id,
                            rules: ReactiveRules {
                                keywords,
                                reply: reactive_reply_descriptor(),
                                delay_secs: group.reply_delay_secs.unwrap_or(0),
                            },
                            coverage: group
                                .listener_coverage
                                .unwrap_or(cfg.platform.stream_coverage),
                            rng: stream(seed, &format!("bot/{}/reactive", id.0)),
                        });
                    }
                    BotPreset::HybridNetwork | BotPreset::NaiveBotArmy => {
                        let profile = build_bot_profile(
                            cfg,
                            group,
                            id,
                            seed,
                            locale,
                            content[gi].clone(),
                            &mut setup_rng,
                        )?;
                        let agent = BotAgent::new(id, profile, &members, start);
                        slots.push(Slot::Scripted(bots.len()));
                        bots.push(ScriptedBot {
                            agent,
                            group: gi,
                            post_rng: stream(seed, &format!("bot/{}/post", id.0)),
                            retweet_rng: stream(seed, &format!("bot/{}/retweet", id.0)),
                            follow_rng: stream(seed, &format!("bot/{}/follow", id.0)),
                            collect_rng: stream(seed, &format!("bot/{}/collect", id.0)),
                        });
                    }
                }
            }
        }

        // --- humans, with staggered account ages ---
        let n_humans = cfg.population.humans as usize;
        let mut humans: Vec<HumanAgent> = Vec::with_capacity(n_humans);
        let locale_cum: Vec<f64> = {
            let mut acc = 0.0;
            cfg.population
                .locales
                .iter()
                .map(|l| {
                    acc += l.fraction;
                    acc
                })
                .collect()
        };
        let history_secs = start.as_secs().saturating_sub(SECS_PER_DAY).max(1);
        let completeness_dist = Beta::new(5.0, 2.0).expect("valid beta");
        let rate_dist = LogNormal::new(
            cfg.population.post_rate_mean.max(1e-6).ln(),
            cfg.population.post_rate_sigma,
        )
        .expect("valid lognormal");
        for i in 0..n_humans {
            let u = setup_rng.uniform();
            let locale_idx = locale_cum.partition_point(|&c| c <= u).min(locales.len() - 1);
            let lcfg = &cfg.population.locales[locale_idx];
            let locale = &locales[locale_idx];
            let created_at = SimTime::from_secs((setup_rng.uniform() * history_secs as f64) as u64);
            let completeness = completeness_dist.sample(&mut setup_rng);
            let id = platform
                .create_account(AccountSpec {
                    handle: format!("u{i}"),
                    created_at,
                    profile_completeness: completeness,
                    locale: locale.name.clone(),
                    archetype: Archetype::Human,
                })
                .map_err(|e| SimError::Config(e.to_string()))?;

            let tz_shift = ((setup_rng.uniform() - 0.5) * lcfg.timezone_spread_hours * 3_600.0) as i64;
            let personal_shift = ((setup_rng.uniform() - 0.5) * 3_600.0) as i64;
            let window_start = ((locale.active_start as i64 + tz_shift + personal_shift)
                .rem_euclid(SECS_PER_DAY as i64)) as u32;
            let len_hours = (cfg.population.active_len_hours
                + (setup_rng.uniform() - 0.5) * 2.0 * cfg.population.active_len_jitter_hours)
                .clamp(4.0, 24.0);
            let schedule = DailySchedule::new(
                window_start,
                (len_hours * 3_600.0) as u32,
                vec![],
                0,
                (0, 0),
            )
            .map_err(|e| SimError::Config(e.to_string()))?;

            let post_rate = if cfg.population.post_rate_mean > 0.0 {
                rate_dist.sample(&mut setup_rng).clamp(0.2, 30.0)
            } else {
                0.0
            };
            let retweet_rate = post_rate * cfg.population.retweet_rate_fraction;
            let normal = |rng: &mut RandomStream, mean: f64, sd: f64| {
                Normal::new(mean, sd.max(1e-9)).expect("valid normal").sample(rng)
            };
            let content = ContentSampler {
                length_mean: normal(&mut setup_rng, lcfg.length_mean, lcfg.length_between_sd)
                    .clamp(10.0, 400.0),
                length_sd: lcfg.length_sd,
                entropy_mean: normal(&mut setup_rng, lcfg.entropy_mean, lcfg.entropy_between_sd)
                    .clamp(1.0, 7.0),
                entropy_sd: lcfg.entropy_sd,
                hashtag_rate: lcfg.hashtag_rate,
                hashtag_pool: locale.pool.clone(),
                zipf_cum: locale.zipf_cum.clone(),
                emoticon_rate: lcfg.emoticon_rate,
                polarity_mean: lcfg.polarity_mean,
                polarity_sd: lcfg.polarity_sd,
                slang_mean: normal(&mut setup_rng, lcfg.slang_mean, lcfg.slang_between_sd)
                    .clamp(0.0, 0.9),
                slang_sd: lcfg.slang_sd,
            };
            let profile = HumanProfile {
                post_rate,
                retweet_rate,
                schedule,
                follow_back_prob: cfg.population.follow_back_prob,
                balanced_ratio_band: (
                    cfg.population.balanced_ratio_band[0],
                    cfg.population.balanced_ratio_band[1],
                ),
                out_of_band_penalty: cfg.population.out_of_band_penalty,
                latency: LatencyParams {
                    median_secs: cfg.population.response_latency_median_hours * 3_600.0,
                    sigma: cfg.population.response_latency_sigma,
                    cap_secs: (cfg.population.response_latency_cap_hours * 3_600.0) as u64,
                },
                content,
            };
            slots.push(Slot::Human(humans.len()));
            humans.push(HumanAgent {
                id,
                profile,
                post_rng: stream(seed, &format!("human/{}/post", id.0)),
                retweet_rng: stream(seed, &format!("human/{}/retweet", id.0)),
                fb_rng: stream(seed, &format!("human/{}/followback", id.0)),
            });
        }

        // --- backfilled human-human follow graph ---
        let mut graph_rng = stream(seed, "setup/graph");
        let degree_dist = LogNormal::new(
            cfg.population.graph_out_degree_mean.max(1e-6).ln(),
            cfg.population.graph_out_degree_sigma,
        )
        .expect("valid lognormal");
        let mut edges: Vec<(SimTime, AccountId, AccountId)> = Vec::new();
        if n_humans > 1 {
            for h in &humans {
                let degree = degree_dist
                    .sample(&mut graph_rng)
                    .round()
                    .clamp(0.0, (n_humans - 1).min(200) as f64) as usize;
                let mut chosen: BTreeSet<AccountId> = BTreeSet::new();
                let mut attempts = 0;
                while chosen.len() < degree && attempts < degree * 4 {
                    attempts += 1;
                    let idx = (graph_rng.uniform() * n_humans as f64) as usize % n_humans;
                    let target = humans[idx].id;
                    if target != h.id {
                        chosen.insert(target);
                    }
                }
                for target in chosen {
                    let a = platform.account(h.id).expect("exists").created_at;
                    let b = platform.account(target).expect("exists").created_at;
                    let lo = a.max(b).as_secs();
                    let hi = start.as_secs();
                    let at = if hi > lo {
                        SimTime::from_secs(lo + (graph_rng.uniform() * (hi - lo) as f64) as u64)
                    } else {
                        start
                    };
                    edges.push((at, h.id, target));
                }
            }
        }
        edges.sort_by_key(|&(at, a, b)| (at, a, b));
        for (at, a, b) in edges {
            platform.set_follow(a, b, at).map_err(|e| SimError::Runtime(e.to_string()))?;
        }

        // --- mutual cliques inside each group's head ---
        for (gi, group) in cfg.bots.iter().enumerate() {
            let clique = &groups[gi].members[..group.clique as usize];
            for &a in clique {
                for &b in clique {
                    if a != b {
                        platform.set_follow(a, b, start).map_err(|e| SimError::Runtime(e.to_string()))?;
                    }
                }
            }
        }

        Ok(Simulation {
            engine: Engine::new(),
            platform,
            cfg: cfg.clone(),
            humans,
            bots,
            reactive,
            groups,
            slots,
            root_seed: seed,
            start,
            warnings: Vec::new(),
        })
    }

    /// Schedules every agent's first chain events.
    fn seed_initial_events(&mut self) -> Result<(), SimError> {
        let start = self.start;
        for i in 0..self.humans.len() {
            self.human_tick(i, start);
        }
        for i in 0..self.bots.len() {
            self.schedule_bot_post(i, start);
            self.schedule_bot_retweet(i, start);
            self.schedule_bot_follow(i, start);
        }
        if let Some((push_start, _)) = self.push_window() {
            self.engine
                .schedule(push_start, Actor::System, Action::PushDirective)
                .map_err(|e| SimError::Runtime(e.to_string()))?;
        }
        Ok(())
    }

    /// Schedules a human's next post and retweet chains from `now`.
    pub fn human_tick(&mut self, idx: usize, now: SimTime) {
        self.schedule_human_post(idx, now);
        self.schedule_human_retweet(idx, now);
    }

    // ------------------------------------------------------------------
    // Chain scheduling (decide now, fire later with a concrete payload)
    // ------------------------------------------------------------------

    fn schedule(&mut self, at: SimTime, actor: Actor, action: Action) {
        self.engine
            .schedule(at, actor, action)
            .expect("scheduling into the future");
    }

    fn schedule_human_post(&mut self, idx: usize, from: SimTime) {
        let h = &mut self.humans[idx];
        if h.profile.post_rate <= 0.0 {
            return;
        }
        let t = next_exponential_time(&h.profile.schedule, h.profile.post_rate, from, &mut h.post_rng)
            .expect("positive rate");
        let descriptor = h.profile.content.sample(&mut h.post_rng);
        let actor = Actor::Account(h.id);
        self.schedule(
            t,
            actor,
            Action::Post {
                kind: PostKind::Original,
                descriptor,
                ref_post: None,
                trigger: Trigger::Routine,
            },
        );
    }

    fn schedule_human_retweet(&mut self, idx: usize, from: SimTime) {
        let h = &mut self.humans[idx];
        if h.profile.retweet_rate <= 0.0 {
            return;
        }
        let t = next_exponential_time(
            &h.profile.schedule,
            h.profile.retweet_rate,
            from,
            &mut h.retweet_rng,
        )
        .expect("positive rate");
        let id = h.id;
        // Something seen recently that will still be fresh when the
        // retweet fires.
        let min_at = t.saturating_sub(self.cfg.platform.retweet_max_age_secs);
        let candidates: Vec<PostId> = self
            .platform
            .timeline(id)
            .rev()
            .take(TIMELINE_PICK_DEPTH)
            .filter(|pid| {
                let original = self.platform.resolve_original(*pid);
                self.platform
                    .post(original)
                    .is_some_and(|p| p.at >= min_at && p.author != id)
            })
            .collect();
        let h = &mut self.humans[idx];
        let actor = Actor::Account(id);
        if candidates.is_empty() {
            self.schedule(t, actor, Action::Idle { kind: ChainKind::Retweet });
            return;
        }
        let pick = candidates[(h.retweet_rng.uniform() * candidates.len() as f64) as usize % candidates.len()];
        let descriptor = self
            .platform
            .post(self.platform.resolve_original(pick))
            .expect("picked existing post")
            .descriptor
            .clone();
        self.schedule(
            t,
            actor,
            Action::Post {
                kind: PostKind::Retweet,
                descriptor,
                ref_post: Some(pick),
                trigger: Trigger::Routine,
            },
        );
    }

    fn schedule_bot_post(&mut self, idx: usize, from: SimTime) {
        let bot = &mut self.bots[idx];
        if bot.agent.profile.posts_per_day <= 0.0 {
            return;
        }
        let t = bot
            .agent
            .next_action_time(BotActionKind::Post, from, &mut bot.post_rng)
            .expect("positive rate");
        let actor = Actor::Account(bot.agent.id);
        match bot.agent.draw_post(&mut bot.post_rng) {
            Some((descriptor, kind)) => self.schedule(
                t,
                actor,
                Action::Post {
                    kind,
                    descriptor,
                    ref_post: None,
                    trigger: Trigger::Routine,
                },
            ),
            None => {
                // Posting stays disabled until a content db exists;
                // retweet and follow chains are unaffected.
                let id = bot.agent.id;
                self.warnings
                    .push(format!("bot {}: content database empty, posting disabled", id.0));
            }
        }
    }

    /// Samples the public stream since the bot's last collection and
    /// feeds candidates plus retweet material.
    fn bot_collect(&mut self, idx: usize, now: SimTime) {
        let bot = &mut self.bots[idx];
        let window = (bot.agent.last_collected_at, now);
        if window.0 >= window.1 {
            return;
        }
        bot.agent.last_collected_at = now;
        let topics = bot.agent.profile.topics.clone();
        let filter = if topics.is_empty() { None } else { Some(&topics) };
        let sampled = self
            .platform
            .sample_stream(
                filter,
                self.cfg.platform.stream_coverage,
                window,
                &mut bot.collect_rng,
            )
            .expect("validated coverage");
        if sampled.is_empty() {
            return;
        }
        let agent = &mut bot.agent;
        let candidates = collect_candidates(
            &self.platform,
            &sampled,
            &agent.profile.criteria,
            |a| !agent.may_follow(a),
            now,
        );
        agent.absorb_candidates(candidates);
        agent.absorb_collected(&self.platform, &sampled);
    }

    fn schedule_bot_retweet(&mut self, idx: usize, from: SimTime) {
        let now = self.engine.clock();
        if self.bots[idx].agent.profile.retweets_per_day <= 0.0 {
            return;
        }
        if self.bots[idx].agent.profile.retweet_source == RetweetSource::CollectedStream {
            self.bot_collect(idx, now);
        }
        let bot = &mut self.bots[idx];
        let t = bot
            .agent
            .next_action_time(BotActionKind::Retweet, from, &mut bot.retweet_rng)
            .expect("positive rate");
        let actor = Actor::Account(bot.agent.id);
        let pick = match bot.agent.profile.retweet_source {
            RetweetSource::CollectedStream => bot.agent.pick_retweet(t, &mut bot.retweet_rng),
            RetweetSource::Roster => {
                let group = &self.groups[bot.group];
                let min_at = t.saturating_sub(bot.agent.profile.retweet_max_age_secs);
                group
                    .recent_posts
                    .iter()
                    .rev()
                    .find(|(_, at, author)| *at >= min_at && *author != bot.agent.id)
                    .map(|(pid, _, _)| *pid)
            }
        };
        match pick {
            Some(pid) => {
                let descriptor = self
                    .platform
                    .post(self.platform.resolve_original(pid))
                    .expect("collected post exists")
                    .descriptor
                    .clone();
                self.schedule(
                    t,
                    actor,
                    Action::Post {
                        kind: PostKind::Retweet,
                        descriptor,
                        ref_post: Some(pid),
                        trigger: Trigger::Routine,
                    },
                );
            }
            None => self.schedule(t, actor, Action::Idle { kind: ChainKind::Retweet }),
        }
    }

    fn schedule_bot_follow(&mut self, idx: usize, from: SimTime) {
        let now = self.engine.clock();
        if self.bots[idx].agent.profile.follows_per_day <= 0.0 {
            return;
        }
        self.bot_collect(idx, now);
        // Resolve any due reactions before choosing the next target.
        let unfollows = self.bots[idx].agent.sweep_pending(now, &self.platform);
        let bot_id = self.bots[idx].agent.id;
        for target in unfollows {
            self.schedule(now, Actor::Account(bot_id), Action::Unfollow { target });
        }
        let bot = &mut self.bots[idx];
        let t = bot
            .agent
            .next_action_time(BotActionKind::Follow, from, &mut bot.follow_rng)
            .expect("positive rate");
        let actor = Actor::Account(bot.agent.id);
        match bot.agent.pick_follow_target(&self.platform, now) {
            Some(target) => {
                let deadline = bot.agent.stage_follow(target, t);
                self.schedule(
                    t,
                    actor,
                    Action::Follow {
                        target,
                        trigger: Trigger::Routine,
                    },
                );
                if let Some(d) = deadline {
                    self.schedule(d, actor, Action::FollowDeadline { target });
                }
            }
            None => self.schedule(t, actor, Action::Idle { kind: ChainKind::Follow }),
        }
    }

    // ------------------------------------------------------------------
    // Event dispatch
    // ------------------------------------------------------------------

    fn dispatch(&mut self, ev: EventRecord<Action>) -> Result<(), SimError> {
        let at = ev.fire_at;
        match ev.action {
            Action::Post {
                kind,
                ref descriptor,
                ref_post,
                trigger,
            } => {
                let Actor::Account(author) = ev.actor else {
                    return Err(SimError::Runtime("post without author".into()));
                };
                let pid = self
                    .platform
                    .submit_post(author, descriptor.clone(), kind, ref_post, at)?;
                self.after_post(author, pid, at);
                if trigger == Trigger::Routine {
                    match self.slots[author.index()] {
                        Slot::Human(i) => match kind {
                            PostKind::Retweet => self.schedule_human_retweet(i, at),
                            _ => self.schedule_human_post(i, at),
                        },
                        Slot::Scripted(i) => match kind {
                            PostKind::Retweet => self.schedule_bot_retweet(i, at),
                            _ => self.schedule_bot_post(i, at),
                        },
                        Slot::Reactive => {}
                    }
                }
            }
            Action::Follow { target, trigger } => {
                let Actor::Account(follower) = ev.actor else {
                    return Err(SimError::Runtime("follow without actor".into()));
                };
                self.platform.set_follow(follower, target, at)?;
                self.after_follow(follower, target, at);
                if trigger == Trigger::Routine {
                    if let Slot::Scripted(i) = self.slots[follower.index()] {
                        self.schedule_bot_follow(i, at);
                    }
                }
            }
            Action::Unfollow { target } => {
                let Actor::Account(follower) = ev.actor else {
                    return Err(SimError::Runtime("unfollow without actor".into()));
                };
                self.platform.remove_follow(follower, target, at)?;
            }
            Action::FollowDeadline { .. } => {
                let Actor::Account(bot_id) = ev.actor else {
                    return Err(SimError::Runtime("deadline without actor".into()));
                };
                if let Slot::Scripted(i) = self.slots[bot_id.index()] {
                    let unfollows = self.bots[i].agent.sweep_pending(at, &self.platform);
                    for target in unfollows {
                        self.schedule(at, Actor::Account(bot_id), Action::Unfollow { target });
                    }
                }
            }
            Action::PushDirective => self.start_push(at),
            Action::PushRetweet => {
                let Actor::Account(bot_id) = ev.actor else {
                    return Err(SimError::Runtime("push retweet without actor".into()));
                };
                self.push_retweet(bot_id, at);
            }
            Action::Idle { kind } => {
                let Actor::Account(id) = ev.actor else {
                    return Err(SimError::Runtime("idle without actor".into()));
                };
                match (self.slots[id.index()], kind) {
                    (Slot::Human(i), ChainKind::Retweet) => self.schedule_human_retweet(i, at),
                    (Slot::Human(i), ChainKind::Post) => self.schedule_human_post(i, at),
                    (Slot::Scripted(i), ChainKind::Retweet) => self.schedule_bot_retweet(i, at),
                    (Slot::Scripted(i), ChainKind::Post) => self.schedule_bot_post(i, at),
                    (Slot::Scripted(i), ChainKind::Follow) => self.schedule_bot_follow(i, at),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Post-application hooks: reactive listeners and roster bookkeeping.
    fn after_post(&mut self, author: AccountId, pid: PostId, at: SimTime) {
        let post = self.platform.post(pid).expect("just created");
        let post_kind = post.kind;
        // Reactive bots listen to the (coverage-limited) stream.
        let mut replies: Vec<(usize, crate::agents::bot::ReplyAction, u64)> = Vec::new();
        for (ri, r) in self.reactive.iter_mut().enumerate() {
            if let Some(action) = reactive_reply(post, &r.rules, r.id) {
                if r.rng.uniform() < r.coverage {
                    replies.push((ri, action, r.rules.delay_secs));
                }
            }
        }
        for (ri, action, delay) in replies {
            let rid = self.reactive[ri].id;
            self.schedule(
                at + delay,
                Actor::Account(rid),
                Action::Post {
                    kind: PostKind::Reply,
                    descriptor: action.descriptor,
                    ref_post: Some(action.ref_post),
                    trigger: Trigger::Reply,
                },
            );
        }
        // Roster recency for army-style retweeting.
        if let Slot::Scripted(i) = self.slots[author.index()] {
            if post_kind != PostKind::Reply {
                let g = self.bots[i].group;
                let group = &mut self.groups[g];
                group.recent_posts.push_back((pid, at, author));
                if group.recent_posts.len() > ROSTER_RECENT_CAP {
                    group.recent_posts.pop_front();
                }
            }
        }
    }

    /// Reciprocity hook: a newly followed human may follow back.
    fn after_follow(&mut self, follower: AccountId, followee: AccountId, at: SimTime) {
        let Slot::Human(i) = self.slots[followee.index()] else {
            return;
        };
        let requester = self
            .platform
            .snapshot_now(follower, at)
            .expect("follower exists");
        let h = &mut self.humans[i];
        match follow_back_decision(&h.profile, &requester, &mut h.fb_rng) {
            FollowBackDecision::Accept { latency_secs } => {
                let responder = h.id;
                self.schedule(
                    at + latency_secs,
                    Actor::Account(responder),
                    Action::Follow {
                        target: follower,
                        trigger: Trigger::FollowBack,
                    },
                );
            }
            FollowBackDecision::Decline => {}
        }
    }

    /// Phase-2 kickoff: every participating bot spreads its coordinated
    /// posts and retweet decisions over the burst window.
    fn start_push(&mut self, at: SimTime) {
        let Some((push_start, push_end)) = self.push_window() else {
            return;
        };
        debug_assert_eq!(at, push_start);
        let window = (push_end - push_start).max(1);
        let tags: Vec<Arc<str>> = self
            .cfg
            .experiment
            .push_hashtags
            .iter()
            .map(|t| Arc::from(t.as_str()))
            .collect();
        let posts_per_bot = self.cfg.experiment.push_posts_per_bot;
        let retweets_per_bot = self.cfg.experiment.push_retweets_per_bot;
        for idx in 0..self.bots.len() {
            if !self.groups[self.bots[idx].group].joins_push {
                continue;
            }
            let bot = &mut self.bots[idx];
            let actor = Actor::Account(bot.agent.id);
            let mut scheduled_any = false;
            for _ in 0..posts_per_bot {
                let offset = (bot.post_rng.uniform() * window as f64) as u64;
                if let Some((mut descriptor, kind)) = bot.agent.draw_post(&mut bot.post_rng) {
                    descriptor.hashtags = tags.clone();
                    self.engine
                        .schedule(
                            push_start + offset,
                            actor,
                            Action::Post {
                                kind,
                                descriptor,
                                ref_post: None,
                                trigger: Trigger::Push,
                            },
                        )
                        .expect("push in the future");
                    scheduled_any = true;
                }
            }
            if !scheduled_any && posts_per_bot > 0 {
                self.warnings.push(format!(
                    "bot {}: no content for the coordinated push",
                    bot.agent.id.0
                ));
            }
            for _ in 0..retweets_per_bot {
                // Leave the first tenth of the window to seed originals.
                let offset = window / 10
                    + (bot.retweet_rng.uniform() * (window - window / 10) as f64) as u64;
                self.engine
                    .schedule(push_start + offset, actor, Action::PushRetweet)
                    .expect("push in the future");
            }
        }
    }

    /// Picks an existing push post by someone else and retweets it now.
    fn push_retweet(&mut self, bot_id: AccountId, at: SimTime) {
        let Some((push_start, _)) = self.push_window() else {
            return;
        };
        let tags: BTreeSet<Arc<str>> = self
            .cfg
            .experiment
            .push_hashtags
            .iter()
            .map(|t| Arc::from(t.as_str()))
            .collect();
        let candidates: Vec<PostId> = self
            .platform
            .posts_in_window((push_start, at + 1))
            .iter()
            .filter(|p| p.author != bot_id && p.kind != PostKind::Retweet)
            .filter(|p| p.descriptor.has_any_hashtag(&tags))
            .map(|p| p.id)
            .collect();
        if candidates.is_empty() {
            return;
        }
        let Slot::Scripted(i) = self.slots[bot_id.index()] else {
            return;
        };
        let bot = &mut self.bots[i];
        let pick = candidates[(bot.retweet_rng.uniform() * candidates.len() as f64) as usize
            % candidates.len()];
        let descriptor = self
            .platform
            .post(pick)
            .expect("picked existing")
            .descriptor
            .clone();
        self.schedule(
            at,
            Actor::Account(bot_id),
            Action::Post {
                kind: PostKind::Retweet,
                descriptor,
                ref_post: Some(pick),
                trigger: Trigger::Push,
            },
        );
    }
}

fn stream(seed: u64, label: &str) -> RandomStream {
    derive_stream(seed, label).expect("non-empty label")
}

#[allow(clippy::too_many_arguments)]
fn build_bot_profile(
    cfg: &RunConfig,
    group: &crate::config::BotGroupConfig,
    id: AccountId,
    seed: u64,
    locale: &LocaleRuntime,
    content_db: Arc<ContentDb>,
    setup_rng: &mut RandomStream,
) -> Result<BotProfile, SimError> {
    let is_hybrid = group.preset == BotPreset::HybridNetwork;
    let individuality = group.rate_individuality.unwrap_or(if is_hybrid { 0.2 } else { 0.0 });
    let vary = |rng: &mut RandomStream, rate: f64| -> f64 {
        (rate * (1.0 + individuality * (2.0 * rng.uniform() - 1.0))).max(0.0)
    };

    let (posts, retweets, follows, jitter) = if is_hybrid {
        (
            group.posts_per_day.unwrap_or(6.0),
            group.retweets_per_day.unwrap_or(12.0),
            group.follows_per_day.unwrap_or(30.0),
            group.jitter.unwrap_or(0.35),
        )
    } else {
        (
            group.posts_per_day.unwrap_or(48.0),
            group.retweets_per_day.unwrap_or(24.0),
            group.follows_per_day.unwrap_or(100.0),
            group.jitter.unwrap_or(0.0),
        )
    };

    let schedule = if is_hybrid {
        let base_start = group
            .active_start
            .as_deref()
            .map(parse_clock)
            .transpose()
            .map_err(SimError::Config)?
            .unwrap_or(8 * 3_600);
        let base_end = group
            .active_end
            .as_deref()
            .map(parse_clock)
            .transpose()
            .map_err(SimError::Config)?
            .unwrap_or(23 * 3_600);
        // Individualize each bot's day by up to an hour.
        let shift = ((setup_rng.uniform() - 0.5) * 3_600.0) as i64;
        let start_sec = ((base_start as i64 + shift).rem_euclid(SECS_PER_DAY as i64)) as u32;
        let len = if base_end > base_start {
            base_end - base_start
        } else {
            SECS_PER_DAY as u32 - base_start + base_end
        };
        let rest = match &group.rest_periods {
            Some(periods) => periods
                .iter()
                .map(|[s, e]| {
                    Ok((
                        parse_clock(s).map_err(SimError::Config)?,
                        parse_clock(e).map_err(SimError::Config)?,
                    ))
                })
                .collect::<Result<Vec<_>, SimError>>()?,
            None => {
                // Default lunch break, shifted with the window.
                let lunch = ((13 * 3_600) as i64 + shift).rem_euclid(SECS_PER_DAY as i64) as u32;
                vec![(lunch, lunch + 40 * 60)]
            }
        };
        let window_jitter = group.window_jitter_minutes.unwrap_or(45) * 60;
        DailySchedule::new(start_sec, len, rest, window_jitter, (seed, id.0 as u64))
            .map_err(|e| SimError::Config(e.to_string()))?
    } else {
        DailySchedule::all_day()
    };

    let topics_n = group.topics_per_bot.unwrap_or(if is_hybrid { 3 } else { 2 }) as usize;
    let mut topics: BTreeSet<Arc<str>> = BTreeSet::new();
    let mut guard = 0;
    while topics.len() < topics_n.min(locale.pool.len()) && guard < 64 {
        guard += 1;
        topics.insert(locale.draw_tag(setup_rng));
    }

    let criteria = if is_hybrid {
        CandidateCriteria {
            ratio_band: group
                .ratio_band
                .map(|[lo, hi]| (lo, hi))
                .unwrap_or((0.5, 2.0)),
            min_activity: group.min_activity.unwrap_or(1),
            activity_lookback_secs: (group.activity_lookback_days.unwrap_or(7.0) * 86_400.0) as u64,
            prefer_popular: group.prefer_popular.unwrap_or(true),
        }
    } else {
        CandidateCriteria {
            ratio_band: group
                .ratio_band
                .map(|[lo, hi]| (lo, hi))
                .unwrap_or((1e-9, 1e9)),
            min_activity: group.min_activity.unwrap_or(0),
            activity_lookback_secs: (group.activity_lookback_days.unwrap_or(7.0) * 86_400.0) as u64,
            prefer_popular: group.prefer_popular.unwrap_or(false),
        }
    };

    let follow_policy = if is_hybrid {
        FollowPolicy::FollowForFollow {
            reciprocity_window_secs: (group.reciprocity_window_hours.unwrap_or(24.0) * 3_600.0)
                as u64,
        }
    } else {
        FollowPolicy::FireAndForget
    };

    let ratio_guard = match group.ratio_guard {
        Some([lo, hi]) => Some((lo, hi)),
        None if is_hybrid => Some((0.3, 3.0)),
        None => None,
    };

    Ok(BotProfile {
        schedule,
        posts_per_day: vary(setup_rng, posts),
        retweets_per_day: vary(setup_rng, retweets),
        follows_per_day: vary(setup_rng, follows),
        jitter,
        topics,
        criteria,
        follow_policy,
        retweet_source: if is_hybrid {
            RetweetSource::CollectedStream
        } else {
            RetweetSource::Roster
        },
        ratio_guard,
        content_db,
        retweet_max_age_secs: cfg.platform.retweet_max_age_secs,
    })
}
