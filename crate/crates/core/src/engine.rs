//! Deterministic discrete-event engine.
//!
//! Events are executed in strict `(fire_at, seq)` order, where `seq` is the
//! monotone sequence number issued at schedule time. The tie-break makes
//! execution order independent of container iteration order, so two runs
//! with the same configuration and seed produce byte-identical logs.
//!
//! The engine is single-threaded and externally synchronized: one instance
//! per simulation run. Independent runs (different seeds) may execute in
//! parallel since they share no mutable state.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::AccountId;
use crate::time::SimTime;

/// Who an event is attributed to.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Actor {
    #[serde(with = "system_tag")]
    System,
    Account(AccountId),
}

mod system_tag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("system")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "system" {
            Ok(())
        } else {
            Err(D::Error::custom("expected the string \"system\""))
        }
    }
}

/// A scheduled (and later, executed) event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord<A> {
    pub seq: u64,
    pub fire_at: SimTime,
    pub actor: Actor,
    #[serde(flatten)]
    pub action: A,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("cannot schedule at t={fire_at:?}: clock already at t={clock:?}")]
    PastTime { fire_at: SimTime, clock: SimTime },
}

struct Queued<A>(EventRecord<A>);

impl<A> PartialEq for Queued<A> {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}
impl<A> Eq for Queued<A> {}

impl<A> Ord for Queued<A> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest
        // (fire_at, seq) on top.
        (other.0.fire_at, other.0.seq).cmp(&(self.0.fire_at, self.0.seq))
    }
}
impl<A> PartialOrd for Queued<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The event queue, clock, and append-only log of executed events.
pub struct Engine<A> {
    clock: SimTime,
    queue: BinaryHeap<Queued<A>>,
    next_seq: u64,
    log: Vec<EventRecord<A>>,
    record_log: bool,
}

impl<A: Clone> Engine<A> {
    pub fn new() -> Self {
        Engine {
            clock: SimTime::ZERO,
            queue: BinaryHeap::new(),
            next_seq: 0,
            log: Vec::new(),
            record_log: true,
        }
    }

    /// Disables log retention (long calibration sweeps that never persist
    /// or replay their logs run leaner this way).
    pub fn set_record_log(&mut self, record: bool) {
        self.record_log = record;
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Executed events so far, in execution order.
    pub fn log(&self) -> &[EventRecord<A>] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<EventRecord<A>> {
        std::mem::take(&mut self.log)
    }

    /// Enqueues an event. `fire_at` must not precede the current clock;
    /// `fire_at == clock` is allowed and executes before the clock advances.
    pub fn schedule(&mut self, fire_at: SimTime, actor: Actor, action: A) -> Result<u64, EngineError> {
        if fire_at < self.clock {
            return Err(EngineError::PastTime {
                fire_at,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(EventRecord {
            seq,
            fire_at,
            actor,
            action,
        }));
        Ok(seq)
    }

    /// Pops and executes the next event with `fire_at <= t_end`, advancing
    /// the clock to its fire time and appending it to the log. Returns
    /// `None` when no such event is pending (the clock is left untouched;
    /// call [`Engine::finish`] to advance it to `t_end`).
    pub fn pop_next(&mut self, t_end: SimTime) -> Option<EventRecord<A>> {
        match self.queue.peek() {
            Some(q) if q.0.fire_at <= t_end => {}
            _ => return None,
        }
        let ev = self.queue.pop().expect("peeked event vanished").0;
        debug_assert!(ev.fire_at >= self.clock);
        self.clock = ev.fire_at;
        if self.record_log {
            self.log.push(ev.clone());
        }
        Some(ev)
    }

    /// Advances the clock to `t_end` after all due events were drained.
    pub fn finish(&mut self, t_end: SimTime) -> Result<(), EngineError> {
        if t_end < self.clock {
            return Err(EngineError::PastTime {
                fire_at: t_end,
                clock: self.clock,
            });
        }
        self.clock = t_end;
        Ok(())
    }

    /// Runs every event with `fire_at <= t_end` in `(fire_at, seq)` order,
    /// invoking `handler` for each; the handler may schedule further events
    /// (including at the current instant). Afterwards the clock is exactly
    /// `t_end`. Returns the slice of the log executed by this call.
    pub fn run_until(
        &mut self,
        t_end: SimTime,
        mut handler: impl FnMut(&mut Engine<A>, &EventRecord<A>),
    ) -> Result<&[EventRecord<A>], EngineError> {
        if t_end < self.clock {
            return Err(EngineError::PastTime {
                fire_at: t_end,
                clock: self.clock,
            });
        }
        let start = self.log.len();
        while let Some(ev) = self.pop_next(t_end) {
            handler(self, &ev);
        }
        self.clock = t_end;
        Ok(&self.log[start..])
    }
}

impl<A: Clone> Default for Engine<A> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    struct Tag(u32);

    fn at(secs: u64) -> SimTime {
        SimTime::from_secs(secs)
    }

    #[test]
    fn seq_is_monotone_and_order_is_fire_at_then_seq() {
        let mut eng: Engine<Tag> = Engine::new();
        let s1 = eng.schedule(at(10), Actor::System, Tag(1)).unwrap();
        let s2 = eng.schedule(at(5), Actor::System, Tag(2)).unwrap();
        let s3 = eng.schedule(at(5), Actor::System, Tag(3)).unwrap();
        assert!(s1 < s2 && s2 < s3);
        let log = eng.run_until(at(100), |_, _| {}).unwrap();
        let tags: Vec<u32> = log.iter().map(|e| e.action.0).collect();
        // Equal fire times execute in schedule order.
        assert_eq!(tags, vec![2, 3, 1]);
        assert_eq!(eng.clock(), at(100));
    }

    #[test]
    fn past_time_rejected_after_clock_advances() {
        let mut eng: Engine<Tag> = Engine::new();
        eng.schedule(at(10), Actor::System, Tag(1)).unwrap();
        eng.run_until(at(10), |_, _| {}).unwrap();
        let err = eng.schedule(at(5), Actor::System, Tag(2)).unwrap_err();
        assert_eq!(
            err,
            EngineError::PastTime {
                fire_at: at(5),
                clock: at(10)
            }
        );
    }

    #[test]
    fn schedule_at_current_clock_executes_before_clock_advances() {
        let mut eng: Engine<Tag> = Engine::new();
        eng.schedule(at(7), Actor::System, Tag(1)).unwrap();
        let mut seen = Vec::new();
        eng.run_until(at(50), |eng, ev| {
            seen.push((ev.action.0, ev.fire_at));
            if ev.action.0 == 1 {
                // Same-instant follow-up: must fire at t=7 too.
                eng.schedule(eng.clock(), Actor::System, Tag(2)).unwrap();
            }
        })
        .unwrap();
        assert_eq!(seen, vec![(1, at(7)), (2, at(7))]);
    }

    #[test]
    fn empty_queue_run_until_advances_clock() {
        let mut eng: Engine<Tag> = Engine::new();
        let log = eng.run_until(at(100), |_, _| {}).unwrap();
        assert!(log.is_empty());
        assert_eq!(eng.clock(), at(100));
    }

    #[test]
    fn no_event_fires_after_clock_at_execution() {
        let mut eng: Engine<Tag> = Engine::new();
        for i in 0..100u64 {
            eng.schedule(at(i * 3 % 50), Actor::System, Tag(i as u32))
                .unwrap();
        }
        eng.run_until(at(60), |eng, ev| {
            assert!(ev.fire_at <= eng.clock());
        })
        .unwrap();
        let log = eng.log();
        // Lexicographic (fire_at, seq) order, verifiable by inspection.
        for w in log.windows(2) {
            assert!((w[0].fire_at, w[0].seq) < (w[1].fire_at, w[1].seq));
        }
    }

    /// Reference executor: a sorted insertion list instead of a heap.
    /// Events scheduled during execution are inserted in place.
    fn reference_run(seeds: &[(u64, u32, Option<(u64, u32)>)], t_end: u64) -> Vec<u32> {
        // (fire_at, seq, tag, spawn)
        let mut list: Vec<(u64, u64, u32, Option<(u64, u32)>)> = Vec::new();
        let mut next_seq = 0u64;
        for &(t, tag, spawn) in seeds {
            list.push((t, next_seq, tag, spawn));
            next_seq += 1;
        }
        let mut out = Vec::new();
        loop {
            list.sort_by_key(|e| (e.0, e.1));
            let Some(pos) = list.iter().position(|e| e.0 <= t_end) else {
                break;
            };
            let (t, _, tag, spawn) = list.remove(pos);
            out.push(tag);
            if let Some((dt, new_tag)) = spawn {
                list.push((t + dt, next_seq, new_tag, None));
                next_seq += 1;
            }
        }
        out
    }

    #[test]
    fn matches_reference_insertion_sort_executor() {
        // Deterministic pseudo-random scenario; some events spawn follow-ups
        // with fire times at or before t_end.
        let mut seeds = Vec::new();
        let mut x = 12345u64;
        for i in 0..100u32 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let t = x % 200;
            let spawn = if i % 3 == 0 {
                Some(((x >> 32) % 40, 1_000 + i))
            } else {
                None
            };
            seeds.push((t, i, spawn));
        }
        let expected = reference_run(&seeds, 150);

        #[derive(Clone)]
        struct Sp(u32, Option<(u64, u32)>);
        let mut eng: Engine<Sp> = Engine::new();
        for &(t, tag, spawn) in &seeds {
            eng.schedule(at(t), Actor::System, Sp(tag, spawn)).unwrap();
        }
        let mut got = Vec::new();
        eng.run_until(at(150), |eng, ev| {
            got.push(ev.action.0);
            if let Some((dt, tag)) = ev.action.1 {
                eng.schedule(ev.fire_at + dt, Actor::System, Sp(tag, None))
                    .unwrap();
            }
        })
        .unwrap();
        assert_eq!(got, expected);
    }
}
