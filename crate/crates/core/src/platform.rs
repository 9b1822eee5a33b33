//! The simulated microblogging service: accounts, the follow graph, posts
//! and retweets, a sampled public stream, and trending-topic computation.
//!
//! Platform state is owned by the simulation and mutated only from event
//! execution; snapshots and stream reads are plain `&self` queries. Every
//! mutation is also recorded append-only (posts, edge events), so any past
//! instant can be reconstructed for snapshots and detection features.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::ContentDescriptor;
use crate::rng::RandomStream;
use crate::time::SimTime;

#[derive(
    Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AccountId(pub u32);

#[derive(
    Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct PostId(pub u32);

impl AccountId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PostId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ground-truth label of an account. Assigned at creation, immutable, and
/// deliberately absent from everything the detection pipeline consumes.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Human,
    NaiveBot,
    HybridBot,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostKind {
    Original,
    Retweet,
    Reply,
    Media,
}

impl PostKind {
    fn slot(self) -> usize {
        match self {
            PostKind::Original => 0,
            PostKind::Retweet => 1,
            PostKind::Reply => 2,
            PostKind::Media => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Account {
    pub id: AccountId,
    pub handle: String,
    pub created_at: SimTime,
    pub profile_completeness: f64,
    pub locale: Arc<str>,
    pub archetype: Archetype,
}

/// Parameters for [`Platform::create_account`].
#[derive(Debug, Clone)]
pub struct AccountSpec {
    pub handle: String,
    pub created_at: SimTime,
    pub profile_completeness: f64,
    pub locale: Arc<str>,
    pub archetype: Archetype,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: PostId,
    pub author: AccountId,
    pub at: SimTime,
    pub kind: PostKind,
    pub descriptor: ContentDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_post: Option<PostId>,
    #[serde(default)]
    pub retweets_received: u32,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeEventKind {
    Created,
    Removed,
}

/// One change of the follow graph, kept append-only in time order.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub at: SimTime,
    pub follower: AccountId,
    pub followee: AccountId,
    pub kind: EdgeEventKind,
}

/// Public, detection-visible metadata of an account at an instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountSnapshot {
    pub id: AccountId,
    pub at: SimTime,
    pub followers: u32,
    pub following: u32,
    pub posts_original: u32,
    pub posts_retweet: u32,
    pub posts_reply: u32,
    pub posts_media: u32,
    pub age_secs: u64,
    pub profile_completeness: f64,
    pub locale: Arc<str>,
}

impl AccountSnapshot {
    pub fn posts_total(&self) -> u32 {
        self.posts_original + self.posts_retweet + self.posts_reply + self.posts_media
    }

    /// Raw following/follower ratio. An account that follows others while
    /// having no followers reads as infinitely imbalanced; a fully inert
    /// account reads as neutral.
    pub fn following_follower_ratio(&self) -> f64 {
        if self.followers > 0 {
            self.following as f64 / self.followers as f64
        } else if self.following == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    }

    /// Ratio smoothed by add-one on both sides; always finite. Used by
    /// detection features where unbounded values would break normalization.
    pub fn smoothed_ratio(&self) -> f64 {
        (self.following as f64 + 1.0) / (self.followers as f64 + 1.0)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum FollowOutcome {
    Created,
    AlreadyFollowing,
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum UnfollowOutcome {
    Removed,
    NotFollowing,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlatformError {
    #[error("handle `{0}` already taken")]
    DuplicateHandle(String),
    #[error("unknown account {0:?}")]
    UnknownAccount(AccountId),
    #[error("account {0:?} cannot follow itself")]
    SelfFollow(AccountId),
    #[error("post {kind:?} references missing post {reference:?}")]
    DanglingReference {
        kind: PostKind,
        reference: Option<PostId>,
    },
    #[error("stream coverage {0} outside [0, 1]")]
    InvalidCoverage(f64),
}

#[derive(Debug, Default, Clone)]
struct AccountState {
    following: BTreeMap<AccountId, SimTime>,
    followers: BTreeMap<AccountId, SimTime>,
    /// Authored posts, chronological.
    posts: Vec<PostId>,
    /// Indices into the global edge-event log, chronological.
    out_events: Vec<u32>,
    in_events: Vec<u32>,
    timeline: VecDeque<PostId>,
    post_counts: [u32; 4],
}

/// One hashtag's standing within a trending window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendingEntry {
    pub rank: u32,
    pub hashtag: Arc<str>,
    pub count: u32,
}

const DEFAULT_TIMELINE_CAP: usize = 1_000;

pub struct Platform {
    accounts: Vec<Account>,
    state: Vec<AccountState>,
    handles: HashMap<String, AccountId>,
    posts: Vec<Post>,
    edge_events: Vec<EdgeEvent>,
    timeline_cap: usize,
}

impl Default for Platform {
    fn default() -> Self {
        Self::new(DEFAULT_TIMELINE_CAP)
    }
}

impl Platform {
    pub fn new(timeline_cap: usize) -> Self {
        Platform {
            accounts: Vec::new(),
            state: Vec::new(),
            handles: HashMap::new(),
            posts: Vec::new(),
            edge_events: Vec::new(),
            timeline_cap,
        }
    }

    pub fn num_accounts(&self) -> usize {
        self.accounts.len()
    }

    pub fn num_posts(&self) -> usize {
        self.posts.len()
    }

    pub fn accounts(&self) -> &[Account] {
        &self.accounts
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn edge_events(&self) -> &[EdgeEvent] {
        &self.edge_events
    }

    pub fn account(&self, id: AccountId) -> Result<&Account, PlatformError> {
        self.accounts
            .get(id.index())
            .ok_or(PlatformError::UnknownAccount(id))
    }

    pub fn post(&self, id: PostId) -> Option<&Post> {
        self.posts.get(id.index())
    }

    pub fn create_account(&mut self, spec: AccountSpec) -> Result<AccountId, PlatformError> {
        if self.handles.contains_key(&spec.handle) {
            return Err(PlatformError::DuplicateHandle(spec.handle));
        }
        let id = AccountId(self.accounts.len() as u32);
        self.handles.insert(spec.handle.clone(), id);
        self.accounts.push(Account {
            id,
            handle: spec.handle,
            created_at: spec.created_at,
            profile_completeness: spec.profile_completeness,
            locale: spec.locale,
            archetype: spec.archetype,
        });
        self.state.push(AccountState::default());
        Ok(id)
    }

    pub fn follows(&self, follower: AccountId, followee: AccountId) -> bool {
        self.state
            .get(follower.index())
            .is_some_and(|s| s.following.contains_key(&followee))
    }

    pub fn set_follow(
        &mut self,
        follower: AccountId,
        followee: AccountId,
        at: SimTime,
    ) -> Result<FollowOutcome, PlatformError> {
        if follower == followee {
            return Err(PlatformError::SelfFollow(follower));
        }
        self.account(follower)?;
        self.account(followee)?;
        if self.follows(follower, followee) {
            return Ok(FollowOutcome::AlreadyFollowing);
        }
        self.state[follower.index()].following.insert(followee, at);
        self.state[followee.index()].followers.insert(follower, at);
        self.push_edge_event(EdgeEvent {
            at,
            follower,
            followee,
            kind: EdgeEventKind::Created,
        });
        Ok(FollowOutcome::Created)
    }

    pub fn remove_follow(
        &mut self,
        follower: AccountId,
        followee: AccountId,
        at: SimTime,
    ) -> Result<UnfollowOutcome, PlatformError> {
        if follower == followee {
            return Err(PlatformError::SelfFollow(follower));
        }
        self.account(follower)?;
        self.account(followee)?;
        if self.state[follower.index()].following.remove(&followee).is_none() {
            return Ok(UnfollowOutcome::NotFollowing);
        }
        self.state[followee.index()].followers.remove(&follower);
        self.push_edge_event(EdgeEvent {
            at,
            follower,
            followee,
            kind: EdgeEventKind::Removed,
        });
        Ok(UnfollowOutcome::Removed)
    }

    fn push_edge_event(&mut self, ev: EdgeEvent) {
        debug_assert!(self.edge_events.last().is_none_or(|last| last.at <= ev.at));
        let idx = self.edge_events.len() as u32;
        self.state[ev.follower.index()].out_events.push(idx);
        self.state[ev.followee.index()].in_events.push(idx);
        self.edge_events.push(ev);
    }

    /// Appends a post to the global timeline and delivers it to every
    /// follower's (capped) home timeline.
    ///
    /// Retweets always resolve to the earliest original in a retweet chain:
    /// the stored reference points at the original post, the descriptor is
    /// the original's, and the original's retweet counter is incremented.
    pub fn submit_post(
        &mut self,
        author: AccountId,
        descriptor: ContentDescriptor,
        kind: PostKind,
        ref_post: Option<PostId>,
        at: SimTime,
    ) -> Result<PostId, PlatformError> {
        self.account(author)?;
        debug_assert!(self.posts.last().is_none_or(|p| p.at <= at));
        let (descriptor, ref_post) = match kind {
            PostKind::Retweet => {
                let target = ref_post
                    .and_then(|r| self.posts.get(r.index()))
                    .ok_or(PlatformError::DanglingReference {
                        kind,
                        reference: ref_post,
                    })?;
                let original = self.resolve_original(target.id);
                (self.posts[original.index()].descriptor.clone(), Some(original))
            }
            PostKind::Reply => {
                if ref_post.and_then(|r| self.posts.get(r.index())).is_none() {
                    return Err(PlatformError::DanglingReference {
                        kind,
                        reference: ref_post,
                    });
                }
                (descriptor, ref_post)
            }
            PostKind::Original | PostKind::Media => (descriptor, None),
        };

        let id = PostId(self.posts.len() as u32);
        if kind == PostKind::Retweet {
            let original = ref_post.expect("retweet resolved above");
            self.posts[original.index()].retweets_received += 1;
        }
        self.posts.push(Post {
            id,
            author,
            at,
            kind,
            descriptor,
            ref_post,
            retweets_received: 0,
        });
        let author_state = &mut self.state[author.index()];
        author_state.posts.push(id);
        author_state.post_counts[kind.slot()] += 1;

        let followers: Vec<AccountId> =
            self.state[author.index()].followers.keys().copied().collect();
        for f in followers {
            let tl = &mut self.state[f.index()].timeline;
            tl.push_back(id);
            if tl.len() > self.timeline_cap {
                tl.pop_front();
            }
        }
        Ok(id)
    }

    /// Follows retweet references back to the first non-retweet post.
    pub fn resolve_original(&self, id: PostId) -> PostId {
        let mut cur = id;
        while let Some(post) = self.posts.get(cur.index()) {
            match (post.kind, post.ref_post) {
                (PostKind::Retweet, Some(r)) => cur = r,
                _ => break,
            }
        }
        cur
    }

    pub fn timeline(&self, id: AccountId) -> impl DoubleEndedIterator<Item = PostId> + '_ {
        self.state[id.index()].timeline.iter().copied()
    }

    /// Posts with `window.0 <= at < window.1`, as a slice of the global log.
    pub fn posts_in_window(&self, window: (SimTime, SimTime)) -> &[Post] {
        let lo = self.posts.partition_point(|p| p.at < window.0);
        let hi = self.posts.partition_point(|p| p.at < window.1);
        &self.posts[lo..hi]
    }

    /// The sampled public stream: every post in the window matching the
    /// hashtag filter (`None` matches everything) is included independently
    /// with probability `coverage`, drawn from the caller's stream.
    pub fn sample_stream(
        &self,
        filter: Option<&BTreeSet<Arc<str>>>,
        coverage: f64,
        window: (SimTime, SimTime),
        rng: &mut RandomStream,
    ) -> Result<Vec<PostId>, PlatformError> {
        if !(0.0..=1.0).contains(&coverage) {
            return Err(PlatformError::InvalidCoverage(coverage));
        }
        let mut out = Vec::new();
        for post in self.posts_in_window(window) {
            if let Some(tags) = filter {
                if !post.descriptor.has_any_hashtag(tags) {
                    continue;
                }
            }
            if rng.uniform() < coverage {
                out.push(post.id);
            }
        }
        Ok(out)
    }

    /// Hashtag counts within a window, ranked by descending count with
    /// lexicographic tie-break. A pure function of the post log.
    pub fn hashtag_ranking(&self, window: (SimTime, SimTime)) -> Vec<(Arc<str>, u32)> {
        let mut counts: BTreeMap<Arc<str>, u32> = BTreeMap::new();
        for post in self.posts_in_window(window) {
            for tag in &post.descriptor.hashtags {
                *counts.entry(tag.clone()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(Arc<str>, u32)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked
    }

    /// Top-k trending hashtags for the window.
    pub fn trending(&self, window: (SimTime, SimTime), k: usize) -> Vec<TrendingEntry> {
        self.hashtag_ranking(window)
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (hashtag, count))| TrendingEntry {
                rank: (i + 1) as u32,
                hashtag,
                count,
            })
            .collect()
    }

    /// 1-based rank of `tag` among all hashtags in the window, or `None`
    /// when the tag does not occur at all (an absent tag has no rank).
    pub fn hashtag_rank(&self, window: (SimTime, SimTime), tag: &str) -> Option<(u32, u32)> {
        self.hashtag_ranking(window)
            .iter()
            .position(|(t, _)| t.as_ref() == tag)
            .map(|i| ((i + 1) as u32, self.hashtag_ranking(window)[i].1))
    }

    /// Live-counter snapshot at the current instant `at` (O(1) per field).
    /// `at` is recorded in the snapshot and used only for the account age.
    pub fn snapshot_now(&self, id: AccountId, at: SimTime) -> Result<AccountSnapshot, PlatformError> {
        let meta = self.account(id)?;
        let st = &self.state[id.index()];
        Ok(AccountSnapshot {
            id,
            at,
            followers: st.followers.len() as u32,
            following: st.following.len() as u32,
            posts_original: st.post_counts[0],
            posts_retweet: st.post_counts[1],
            posts_reply: st.post_counts[2],
            posts_media: st.post_counts[3],
            age_secs: at.as_secs().saturating_sub(meta.created_at.as_secs()),
            profile_completeness: meta.profile_completeness,
            locale: meta.locale.clone(),
        })
    }

    /// Snapshot reconstructed for an arbitrary instant by replaying the
    /// account's recorded history up to `at`.
    pub fn account_snapshot(
        &self,
        id: AccountId,
        at: SimTime,
    ) -> Result<AccountSnapshot, PlatformError> {
        let meta = self.account(id)?;
        let st = &self.state[id.index()];
        let mut counts = [0u32; 4];
        for pid in &st.posts {
            let post = &self.posts[pid.index()];
            if post.at > at {
                break;
            }
            counts[post.kind.slot()] += 1;
        }
        let count_live = |events: &[u32]| -> u32 {
            let mut live = 0i64;
            for &idx in events {
                let ev = &self.edge_events[idx as usize];
                if ev.at > at {
                    break;
                }
                match ev.kind {
                    EdgeEventKind::Created => live += 1,
                    EdgeEventKind::Removed => live -= 1,
                }
            }
            live.max(0) as u32
        };
        Ok(AccountSnapshot {
            id,
            at,
            followers: count_live(&st.in_events),
            following: count_live(&st.out_events),
            posts_original: counts[0],
            posts_retweet: counts[1],
            posts_reply: counts[2],
            posts_media: counts[3],
            age_secs: at.as_secs().saturating_sub(meta.created_at.as_secs()),
            profile_completeness: meta.profile_completeness,
            locale: meta.locale.clone(),
        })
    }

    /// Authored posts of an account, chronological.
    pub fn posts_by(&self, id: AccountId) -> impl Iterator<Item = &Post> + '_ {
        self.state[id.index()].posts.iter().map(|p| &self.posts[p.index()])
    }

    /// Number of posts authored by `id` within `window`.
    pub fn post_count_in_window(&self, id: AccountId, window: (SimTime, SimTime)) -> u32 {
        let posts = &self.state[id.index()].posts;
        let at_of = |p: &PostId| self.posts[p.index()].at;
        let lo = posts.partition_point(|p| at_of(p) < window.0);
        let hi = posts.partition_point(|p| at_of(p) < window.1);
        (hi - lo) as u32
    }

    /// Edge events where `id` is the follower (initiated) side.
    pub fn initiated_edge_events(&self, id: AccountId) -> impl Iterator<Item = &EdgeEvent> + '_ {
        self.state[id.index()]
            .out_events
            .iter()
            .map(|&i| &self.edge_events[i as usize])
    }

    /// Edge events where `id` is the followee (received) side.
    pub fn received_edge_events(&self, id: AccountId) -> impl Iterator<Item = &EdgeEvent> + '_ {
        self.state[id.index()]
            .in_events
            .iter()
            .map(|&i| &self.edge_events[i as usize])
    }

    pub fn live_followees(&self, id: AccountId) -> impl Iterator<Item = AccountId> + '_ {
        self.state[id.index()].following.keys().copied()
    }

    pub fn live_followers(&self, id: AccountId) -> impl Iterator<Item = AccountId> + '_ {
        self.state[id.index()].followers.keys().copied()
    }

    /// Latest instant any recorded activity or account creation touches;
    /// the natural scoring time for an imported state export.
    pub fn last_activity(&self) -> SimTime {
        let post = self.posts.last().map(|p| p.at).unwrap_or(SimTime::ZERO);
        let edge = self.edge_events.last().map(|e| e.at).unwrap_or(SimTime::ZERO);
        let created = self
            .accounts
            .iter()
            .map(|a| a.created_at)
            .max()
            .unwrap_or(SimTime::ZERO);
        post.max(edge).max(created)
    }

    /// Full structural self-check; used by tests after every run.
    pub fn validate_consistency(&self) -> Result<(), String> {
        for (i, st) in self.state.iter().enumerate() {
            let id = AccountId(i as u32);
            let mut live_out: BTreeSet<AccountId> = BTreeSet::new();
            for &idx in &st.out_events {
                let ev = &self.edge_events[idx as usize];
                match ev.kind {
                    EdgeEventKind::Created => {
                        if !live_out.insert(ev.followee) {
                            return Err(format!("{id:?}: duplicate live edge to {:?}", ev.followee));
                        }
                    }
                    EdgeEventKind::Removed => {
                        if !live_out.remove(&ev.followee) {
                            return Err(format!("{id:?}: removal of absent edge to {:?}", ev.followee));
                        }
                    }
                }
            }
            let map_out: BTreeSet<AccountId> = st.following.keys().copied().collect();
            if live_out != map_out {
                return Err(format!("{id:?}: following set inconsistent with edge events"));
            }
            let mut counts = [0u32; 4];
            for pid in &st.posts {
                counts[self.posts[pid.index()].kind.slot()] += 1;
            }
            if counts != st.post_counts {
                return Err(format!("{id:?}: post counters inconsistent"));
            }
            if st.timeline.len() > self.timeline_cap {
                return Err(format!("{id:?}: timeline exceeds cap"));
            }
        }
        for post in &self.posts {
            if matches!(post.kind, PostKind::Retweet | PostKind::Reply) {
                match post.ref_post {
                    Some(r) if r.index() < self.posts.len() => {}
                    other => return Err(format!("post {:?}: dangling reference {other:?}", post.id)),
                }
            }
        }
        let mut rt_counts = vec![0u32; self.posts.len()];
        for post in &self.posts {
            if post.kind == PostKind::Retweet {
                rt_counts[post.ref_post.unwrap().index()] += 1;
            }
        }
        for post in &self.posts {
            if rt_counts[post.id.index()] != post.retweets_received {
                return Err(format!("post {:?}: retweet counter off", post.id));
            }
        }
        Ok(())
    }
}
