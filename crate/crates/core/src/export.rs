//! File formats: JSON Lines event log and platform-state export, CSV
//! report writers, and atomic file writing (temp file + rename).
//!
//! Event log (`events.jsonl`) — one executed event per line with fixed
//! field order `seq, fire_at, actor, action, payload`:
//!
//! ```text
//! {"seq":17,"fire_at":31536642,"actor":3,"action":"post","payload":{...}}
//! ```
//!
//! State export (`state.jsonl`) — a `meta` line, then every account in id
//! order, every edge event in time order, every post in id order:
//!
//! ```text
//! {"record":"meta","version":1,"accounts":2,"edge_events":1,"posts":1}
//! {"record":"account","id":0,...}
//! {"record":"edge_event","at":9,...}
//! {"record":"post","id":0,...}
//! ```

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EventRecord;
use crate::experiment::runner::Action;
use crate::platform::{Account, AccountSpec, EdgeEvent, EdgeEventKind, Platform, Post};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("`{path}` line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> ExportError {
    ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to `path` atomically: a temp file in the same directory
/// is renamed into place, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Serializes an event log to JSON Lines bytes.
pub fn event_log_bytes(log: &[EventRecord<Action>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(log.len() * 128);
    for ev in log {
        serde_json::to_writer(&mut out, ev).expect("event serializes");
        out.push(b'\n');
    }
    out
}

pub fn write_event_log(path: &Path, log: &[EventRecord<Action>]) -> Result<(), ExportError> {
    atomic_write(path, &event_log_bytes(log))
}

pub fn read_event_log(path: &Path) -> Result<Vec<EventRecord<Action>>, ExportError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = serde_json::from_str(&line).map_err(|e| ExportError::Format {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(ev);
    }
    Ok(out)
}

pub const STATE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum StateLine {
    Meta {
        version: u32,
        accounts: usize,
        edge_events: usize,
        posts: usize,
    },
    Account(Account),
    EdgeEvent(EdgeEvent),
    Post(Post),
}

/// Serializes the full platform state (accounts, edge-event history,
/// posts) as deterministic JSON Lines.
pub fn state_bytes(platform: &Platform) -> Vec<u8> {
    let mut out = Vec::new();
    let mut push = |line: &StateLine| {
        serde_json::to_writer(&mut out, line).expect("state serializes");
        out.push(b'\n');
    };
    push(&StateLine::Meta {
        version: STATE_VERSION,
        accounts: platform.num_accounts(),
        edge_events: platform.edge_events().len(),
        posts: platform.num_posts(),
    });
    for account in platform.accounts() {
        push(&StateLine::Account(account.clone()));
    }
    for ev in platform.edge_events() {
        push(&StateLine::EdgeEvent(*ev));
    }
    for post in platform.posts() {
        push(&StateLine::Post(post.clone()));
    }
    out
}

pub fn write_state(path: &Path, platform: &Platform) -> Result<(), ExportError> {
    atomic_write(path, &state_bytes(platform))
}

/// Reconstructs a platform from an exported state file.
pub fn read_state(path: &Path, timeline_cap: usize) -> Result<Platform, ExportError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut platform = Platform::new(timeline_cap);
    let fmt = |line: usize, message: String| ExportError::Format {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut saw_meta = false;
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: StateLine =
            serde_json::from_str(&line).map_err(|e| fmt(i + 1, e.to_string()))?;
        match parsed {
            StateLine::Meta { version, .. } => {
                saw_meta = true;
                if version != STATE_VERSION {
                    return Err(fmt(i + 1, format!("unsupported state version {version}")));
                }
            }
            StateLine::Account(a) => {
                if !saw_meta {
                    return Err(fmt(i + 1, "missing meta line".into()));
                }
                let id = platform
                    .create_account(AccountSpec {
                        handle: a.handle,
                        created_at: a.created_at,
                        profile_completeness: a.profile_completeness,
                        locale: a.locale,
                        archetype: a.archetype,
                    })
                    .map_err(|e| fmt(i + 1, e.to_string()))?;
                if id != a.id {
                    return Err(fmt(i + 1, format!("account ids not contiguous at {:?}", a.id)));
                }
            }
            StateLine::EdgeEvent(ev) => {
                let r = match ev.kind {
                    EdgeEventKind::Created => platform
                        .set_follow(ev.follower, ev.followee, ev.at)
                        .map(|_| ()),
                    EdgeEventKind::Removed => platform
                        .remove_follow(ev.follower, ev.followee, ev.at)
                        .map(|_| ()),
                };
                r.map_err(|e| fmt(i + 1, e.to_string()))?;
            }
            StateLine::Post(p) => {
                // Retweet references are already resolved to originals in
                // exports, so resubmission reproduces counters exactly.
                let id = platform
                    .submit_post(p.author, p.descriptor, p.kind, p.ref_post, p.at)
                    .map_err(|e| fmt(i + 1, e.to_string()))?;
                if id != p.id {
                    return Err(fmt(i + 1, format!("post ids not contiguous at {:?}", p.id)));
                }
            }
        }
    }
    if !saw_meta {
        return Err(fmt(0, "state file has no meta line".into()));
    }
    Ok(platform)
}

/// Minimal CSV field quoting: quotes fields containing separators.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Writes rows (first row = header) as CSV bytes.
pub fn csv_bytes(rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), ExportError> {
    atomic_write(path, &csv_bytes(rows))
}

/// Reads a CSV written by [`write_csv`] (no embedded newlines).
pub fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, ExportError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        let mut fields = Vec::new();
        let mut cur = String::new();
        let mut in_quotes = false;
        let mut chars = line.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '"' if in_quotes && chars.peek() == Some(&'"') => {
                    chars.next();
                    cur.push('"');
                }
                '"' => in_quotes = !in_quotes,
                ',' if !in_quotes => fields.push(std::mem::take(&mut cur)),
                _ => cur.push(c),
            }
        }
        fields.push(cur);
        rows.push(fields);
    }
    Ok(rows)
}

/// Serializes any report as pretty JSON for `stats.json`-style outputs.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExportError> {
    atomic_write(path, &json_bytes(value))
}

/// Writer that buffers rows for the growth CSV:
/// `hour, bot_<id>..., total`.
pub fn growth_csv(curve: &crate::experiment::GrowthCurve) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(curve.total.len() + 1);
    let mut header = vec!["hour".to_owned()];
    header.extend(curve.bot_ids.iter().map(|b| format!("bot_{}", b.0)));
    header.push("total".to_owned());
    rows.push(header);
    for h in 0..curve.total.len() {
        let mut row = vec![h.to_string()];
        row.extend(curve.per_bot.iter().map(|c| c[h].to_string()));
        row.push(curve.total[h].to_string());
        rows.push(row);
    }
    rows
}

/// Rows for the scores CSV. The trailing `archetype` column is
/// ground-truth evaluation output, cleanly separated from the detector's
/// inputs (which never see it).
pub fn scores_csv(scored: &[crate::experiment::ScoredAccount]) -> Vec<Vec<String>> {
    let mut header = vec!["account_id".to_owned(), "locale".to_owned()];
    header.extend(crate::detection::CLASS_NAMES.iter().map(|c| c.to_string()));
    header.push("aggregate".to_owned());
    header.push("archetype".to_owned());
    let mut rows = vec![header];
    for s in scored {
        let mut row = vec![s.id.0.to_string(), s.locale.to_string()];
        row.extend(s.vector.as_array().iter().map(|v| format!("{v:.6}")));
        row.push(format!("{:.6}", s.aggregate));
        row.push(
            serde_json::to_value(s.archetype)
                .expect("archetype serializes")
                .as_str()
                .expect("archetype is a string")
                .to_owned(),
        );
        rows.push(row);
    }
    rows
}

/// Rows for the baseline CSV: `account_id, locale`.
pub fn baseline_csv(
    platform: &Platform,
    accounts: &std::collections::BTreeSet<crate::platform::AccountId>,
) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["account_id".to_owned(), "locale".to_owned()]];
    for &id in accounts {
        let locale = platform.account(id).expect("baseline account exists").locale.clone();
        rows.push(vec![id.0.to_string(), locale.to_string()]);
    }
    rows
}

/// Rows for the trending CSV: `window_start, hashtag, count, rank`
/// (empty rank = unranked/absent).
pub fn trending_csv(report: &crate::experiment::TrendReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "window_start".to_owned(),
        "hashtag".to_owned(),
        "count".to_owned(),
        "rank".to_owned(),
    ]];
    for e in &report.entries {
        rows.push(vec![
            e.window_start.as_secs().to_string(),
            e.hashtag.to_string(),
            e.count.to_string(),
            e.rank.map(|r| r.to_string()).unwrap_or_default(),
        ]);
    }
    rows
}
