//! Daily activity windows and action-time scheduling.
//!
//! Both humans and bots act inside a daily window (which may wrap past
//! midnight, e.g. for far-timezone accounts) with optional rest periods.
//! Bot windows additionally jitter day by day; the jitter is a pure
//! function of `(seed, entity, day)` so activity queries never depend on
//! evaluation order.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::rng::{mix64, RandomStream};
use crate::time::{SimTime, SECS_PER_DAY};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActivityError {
    #[error("action rate must be positive")]
    ZeroRate,
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
}

/// A recurring daily activity window with rest periods.
#[derive(Debug, Clone)]
pub struct DailySchedule {
    /// Window start, seconds of day.
    start: u32,
    /// Window length in seconds, `1..=86_400`; the window may wrap midnight.
    len: u32,
    /// Daily blackout intervals `(start, end)` in seconds of day, non-wrapping.
    rest: Vec<(u32, u32)>,
    /// Maximum shift applied independently to each day's window start and
    /// end, in seconds.
    window_jitter: u32,
    /// Key for the pure per-day jitter draw: (root seed, entity tag).
    jitter_key: (u64, u64),
}

impl DailySchedule {
    pub fn new(
        start: u32,
        len: u32,
        rest: Vec<(u32, u32)>,
        window_jitter: u32,
        jitter_key: (u64, u64),
    ) -> Result<Self, ActivityError> {
        if len == 0 || len as u64 > SECS_PER_DAY {
            return Err(ActivityError::BadSchedule(format!(
                "window length {len}s outside 1..=86400"
            )));
        }
        if start as u64 >= SECS_PER_DAY {
            return Err(ActivityError::BadSchedule(format!(
                "window start {start}s past midnight"
            )));
        }
        let mut rest_total = 0u64;
        for &(s, e) in &rest {
            if s >= e || e as u64 > SECS_PER_DAY {
                return Err(ActivityError::BadSchedule(format!(
                    "rest period ({s}, {e}) malformed"
                )));
            }
            // Rest must sit inside the (unjittered) active day.
            let offset = (e as u64 + SECS_PER_DAY - 1 - start as u64) % SECS_PER_DAY;
            if offset >= len as u64 {
                return Err(ActivityError::BadSchedule(format!(
                    "rest period ({s}, {e}) outside the active window"
                )));
            }
            rest_total += (e - s) as u64;
        }
        if rest_total >= len as u64 {
            return Err(ActivityError::BadSchedule(
                "rest periods cover the whole window".into(),
            ));
        }
        if window_jitter as u64 * 2 >= len as u64 {
            return Err(ActivityError::BadSchedule(
                "window jitter exceeds window length".into(),
            ));
        }
        Ok(DailySchedule {
            start,
            len,
            rest,
            window_jitter,
            jitter_key,
        })
    }

    /// Around-the-clock activity (no window, no rest).
    pub fn all_day() -> Self {
        DailySchedule {
            start: 0,
            len: SECS_PER_DAY as u32,
            rest: Vec::new(),
            window_jitter: 0,
            jitter_key: (0, 0),
        }
    }

    pub fn rest_periods(&self) -> &[(u32, u32)] {
        &self.rest
    }

    /// Mean seconds of activity per day (base window minus rest periods).
    pub fn active_secs_per_day(&self) -> u32 {
        let rest: u32 = self.rest.iter().map(|&(s, e)| e - s).sum();
        self.len - rest
    }

    /// The absolute `[start, end)` of the window anchored on `day`,
    /// including that day's jitter.
    fn day_window(&self, day: u64) -> (u64, u64) {
        let (ds, de) = if self.window_jitter == 0 {
            (0i64, 0i64)
        } else {
            let h = mix64(self.jitter_key.0, self.jitter_key.1, day);
            let m = (2 * self.window_jitter + 1) as u64;
            let ds = (h % m) as i64 - self.window_jitter as i64;
            let de = ((h >> 32) % m) as i64 - self.window_jitter as i64;
            (ds, de)
        };
        let start = (day * SECS_PER_DAY) as i64 + self.start as i64 + ds;
        let end = start + self.len as i64 + (de - ds);
        (start.max(0) as u64, end.max(0) as u64)
    }

    /// Absolute active sub-intervals of the window anchored on `day`,
    /// with rest periods carved out.
    fn active_pieces(&self, day: u64) -> Vec<(u64, u64)> {
        let (ws, we) = self.day_window(day);
        let mut pieces = vec![(ws, we)];
        // A wrapping window spills into the next day, so rest periods of
        // both calendar days can overlap it.
        for rest_day in day..=day + 1 {
            for &(s, e) in &self.rest {
                let rs = rest_day * SECS_PER_DAY + s as u64;
                let re = rest_day * SECS_PER_DAY + e as u64;
                let mut next = Vec::with_capacity(pieces.len() + 1);
                for (a, b) in pieces {
                    if re <= a || rs >= b {
                        next.push((a, b));
                    } else {
                        if rs > a {
                            next.push((a, rs));
                        }
                        if re < b {
                            next.push((re, b));
                        }
                    }
                }
                pieces = next;
            }
        }
        pieces
    }

    pub fn active_at(&self, t: SimTime) -> bool {
        let secs = t.as_secs();
        let day = t.day();
        for d in day.saturating_sub(1)..=day {
            for (a, b) in self.active_pieces(d) {
                if secs >= a && secs < b {
                    return true;
                }
            }
        }
        false
    }

    /// Earliest active instant at or after `t`.
    pub fn next_active(&self, t: SimTime) -> SimTime {
        let secs = t.as_secs();
        let day = t.day();
        let mut best: Option<u64> = None;
        for d in day.saturating_sub(1)..=day + 1 {
            for (a, b) in self.active_pieces(d) {
                if b <= secs {
                    continue;
                }
                let candidate = a.max(secs);
                best = Some(best.map_or(candidate, |x| x.min(candidate)));
            }
        }
        // Windows recur daily, so one of the three inspected days always
        // yields an instant.
        SimTime::from_secs(best.expect("daily window always recurs"))
    }
}

/// Next action time for a mean daily rate with uniform multiplicative
/// noise (bot-style scheduling).
///
/// The base interval is `active_seconds_per_day / rate`, scaled by a noise
/// factor uniform in `[1 - jitter, 1 + jitter]`. A result landing in a rest
/// period or outside the activity window is deferred to the next active
/// instant, smeared forward by a jitter-scaled offset.
pub fn next_action_time(
    schedule: &DailySchedule,
    rate_per_day: f64,
    jitter: f64,
    now: SimTime,
    rng: &mut RandomStream,
) -> Result<SimTime, ActivityError> {
    if rate_per_day <= 0.0 {
        return Err(ActivityError::ZeroRate);
    }
    let base = schedule.active_secs_per_day() as f64 / rate_per_day;
    let noise = 1.0 - jitter + 2.0 * jitter * rng.uniform();
    let interval = (base * noise).round().max(1.0) as u64;
    defer_into_window(schedule, now + interval, jitter * base, rng)
}

/// Next action time with exponential inter-arrival (human-style
/// scheduling): organic irregularity at the same mean daily rate.
pub fn next_exponential_time(
    schedule: &DailySchedule,
    rate_per_day: f64,
    now: SimTime,
    rng: &mut RandomStream,
) -> Result<SimTime, ActivityError> {
    if rate_per_day <= 0.0 {
        return Err(ActivityError::ZeroRate);
    }
    let base = schedule.active_secs_per_day() as f64 / rate_per_day;
    let exp = Exp::new(1.0 / base).expect("positive rate");
    let interval = exp.sample(rng).round().max(1.0) as u64;
    defer_into_window(schedule, now + interval, 0.0, rng)
}

fn defer_into_window(
    schedule: &DailySchedule,
    candidate: SimTime,
    smear: f64,
    rng: &mut RandomStream,
) -> Result<SimTime, ActivityError> {
    if schedule.active_at(candidate) {
        return Ok(candidate);
    }
    let resumed = schedule.next_active(candidate);
    if smear > 0.0 {
        let extra = (rng.random::<f64>() * smear) as u64;
        let shifted = resumed + extra;
        if schedule.active_at(shifted) {
            return Ok(shifted);
        }
    }
    Ok(resumed)
}
