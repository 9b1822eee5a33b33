//! Synthetic content descriptors and the bot content database.
//!
//! The simulator never generates natural language. A post carries a
//! [`ContentDescriptor`]: the summary statistics a detector would extract
//! from real text (length, a token-entropy proxy, hashtags, emoticons,
//! polarity, slang fraction), plus optional verbatim text for fixtures.

use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("content database `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("content database `{path}` line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("descriptor field {field} = {value} outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Observable statistics of one post's content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentDescriptor {
    /// Message length in characters.
    pub length: u32,
    /// Token-entropy proxy, in bits (>= 0).
    pub token_entropy: f64,
    #[serde(default)]
    pub hashtags: Vec<Arc<str>>,
    #[serde(default)]
    pub emoticon_count: u32,
    /// Sentiment polarity in [-1, 1].
    pub polarity: f64,
    /// Fraction of slang tokens, in [0, 1].
    pub slang_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<Arc<str>>,
}

impl ContentDescriptor {
    pub fn validate(&self) -> Result<(), ContentError> {
        if self.token_entropy < 0.0 {
            return Err(ContentError::OutOfRange {
                field: "token_entropy",
                value: self.token_entropy,
                range: ">= 0",
            });
        }
        if !(-1.0..=1.0).contains(&self.polarity) {
            return Err(ContentError::OutOfRange {
                field: "polarity",
                value: self.polarity,
                range: "[-1, 1]",
            });
        }
        if !(0.0..=1.0).contains(&self.slang_fraction) {
            return Err(ContentError::OutOfRange {
                field: "slang_fraction",
                value: self.slang_fraction,
                range: "[0, 1]",
            });
        }
        Ok(())
    }

    pub fn has_any_hashtag(&self, tags: &std::collections::BTreeSet<Arc<str>>) -> bool {
        self.hashtags.iter().any(|t| tags.contains(t))
    }
}

/// One prepared entry of a bot's content database.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentEntry {
    #[serde(flatten)]
    pub descriptor: ContentDescriptor,
    /// Marks entries posted with attached media.
    #[serde(default)]
    pub media: bool,
}

/// A fixed pool of human-prepared content a bot cycles through.
#[derive(Debug, Clone, Default)]
pub struct ContentDb {
    entries: Vec<ContentEntry>,
}

impl ContentDb {
    pub fn new(entries: Vec<ContentEntry>) -> Self {
        ContentDb { entries }
    }

    /// Loads a JSON Lines fixture (one [`ContentEntry`] object per line;
    /// blank lines and `#` comment lines are skipped).
    pub fn load(path: &Path) -> Result<Self, ContentError> {
        let display = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| ContentError::Io {
            path: display.clone(),
            source,
        })?;
        let mut entries = Vec::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| ContentError::Io {
                path: display.clone(),
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let entry: ContentEntry =
                serde_json::from_str(trimmed).map_err(|e| ContentError::Parse {
                    path: display.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            entry.descriptor.validate().map_err(|e| ContentError::Parse {
                path: display.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        Ok(ContentDb { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ContentEntry] {
        &self.entries
    }

    /// Uniform draw that never repeats the immediately preceding entry
    /// (when more than one entry exists).
    pub fn draw(&self, last: &mut Option<usize>, rng: &mut RandomStream) -> Option<&ContentEntry> {
        if self.entries.is_empty() {
            return None;
        }
        let n = self.entries.len();
        let idx = loop {
            let i = (rng.uniform() * n as f64) as usize % n;
            if n == 1 || Some(i) != *last {
                break i;
            }
        };
        *last = Some(idx);
        Some(&self.entries[idx])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn entry(len: u32) -> ContentEntry {
        ContentEntry {
            descriptor: ContentDescriptor {
                length: len,
                token_entropy: 4.0,
                hashtags: vec![],
                emoticon_count: 0,
                polarity: 0.0,
                slang_fraction: 0.1,
                text: None,
            },
            media: false,
        }
    }

    #[test]
    fn draw_never_repeats_immediately() {
        let db = ContentDb::new(vec![entry(1), entry(2), entry(3)]);
        let mut rng = derive_stream(1, "draw").unwrap();
        let mut last = None;
        let mut prev = None;
        for _ in 0..500 {
            let e = db.draw(&mut last, &mut rng).unwrap().descriptor.length;
            if let Some(p) = prev {
                assert_ne!(p, e);
            }
            prev = Some(e);
        }
    }

    #[test]
    fn empty_db_draws_nothing() {
        let db = ContentDb::default();
        let mut rng = derive_stream(1, "draw").unwrap();
        assert!(db.draw(&mut None, &mut rng).is_none());
    }

    #[test]
    fn descriptor_bounds_checked() {
        let mut d = entry(10).descriptor;
        d.polarity = 1.5;
        assert!(d.validate().is_err());
        d.polarity = 0.5;
        d.slang_fraction = -0.1;
        assert!(d.validate().is_err());
    }
}
