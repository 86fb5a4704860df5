//! Corpus ingestion: newline-delimited JSON tweets parsed into validated
//! records, then sliced by date range.
//!
//! One line is one tweet object with fields `id`, `user`, `text`,
//! `created_at`, plus optional `retweeted_user` and `hashtags`. Timestamps
//! are RFC 3339 strings or integer epoch seconds. The schema is documented
//! in `docs/formats.md`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// One tweet or retweet. `retweeted_author_id` is present iff the record is
/// a retweet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    /// Lowercased tags without the leading '#'.
    pub hashtags: Vec<String>,
    pub retweeted_author_id: Option<String>,
}

impl TweetRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweeted_author_id.is_some()
    }

    /// Serialize back to the one-line JSON wire form.
    pub fn to_json_line(&self) -> String {
        let raw = RawTweet {
            id: StringOrNumber(self.tweet_id.clone()),
            user: StringOrNumber(self.author_id.clone()),
            text: self.text.clone(),
            created_at: Timestamp(self.created_at),
            retweeted_user: self
                .retweeted_author_id
                .clone()
                .map(StringOrNumber),
            hashtags: Some(self.hashtags.clone()),
        };
        serde_json::to_string(&raw).expect("tweet record serializes")
    }
}

/// An ordered slice of records, all inside `date_range` (inclusive).
#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<TweetRecord>,
    pub date_range: (DateTime<Utc>, DateTime<Utc>),
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Per-file ingestion counters, reported next to the corpus.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct IngestStats {
    /// Records inside the date range, after deduplication.
    pub accepted: usize,
    /// Well-formed records outside the date range.
    pub out_of_range: usize,
    /// Lines that failed to parse or validate; `(line, message)` pairs.
    pub malformed: Vec<(usize, String)>,
    /// Duplicate tweet ids where a later occurrence replaced an earlier one.
    pub duplicates: usize,
    pub warnings: Vec<String>,
}

impl IngestStats {
    pub fn malformed_count(&self) -> usize {
        self.malformed.len()
    }
}

// Wire schema. Ids may arrive as JSON strings or numbers; both normalize to
// strings.
#[derive(Serialize, Deserialize)]
struct RawTweet {
    id: StringOrNumber,
    user: StringOrNumber,
    text: String,
    created_at: Timestamp,
    #[serde(skip_serializing_if = "Option::is_none")]
    retweeted_user: Option<StringOrNumber>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hashtags: Option<Vec<String>>,
}

struct StringOrNumber(String);

impl Serialize for StringOrNumber {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for StringOrNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = StringOrNumber;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a string or integer id")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                Ok(StringOrNumber(v.to_owned()))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(StringOrNumber(v.to_string()))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(StringOrNumber(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

struct Timestamp(DateTime<Utc>);

impl Serialize for Timestamp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.format("%Y-%m-%dT%H:%M:%SZ").to_string())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Timestamp;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an RFC 3339 timestamp or integer epoch seconds")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                DateTime::parse_from_rfc3339(v)
                    .map(|t| Timestamp(t.with_timezone(&Utc)))
                    .map_err(|e| E::custom(format!("invalid created_at: {e}")))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_i64(v as i64)
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Utc.timestamp_opt(v, 0)
                    .single()
                    .map(Timestamp)
                    .ok_or_else(|| E::custom("created_at out of range"))
            }
        }
        d.deserialize_any(V)
    }
}

/// Parse one JSONL line into a normalized record. `line_no` is 1-based and
/// only used for error reporting.
pub fn parse_tweet_record(line: &str, line_no: usize) -> Result<TweetRecord> {
    let raw: RawTweet = serde_json::from_str(line).map_err(|e| {
        if e.classify() == serde_json::error::Category::Data {
            Error::Schema {
                line: line_no,
                message: e.to_string(),
            }
        } else {
            Error::ParseLine {
                line: line_no,
                message: e.to_string(),
            }
        }
    })?;

    let schema_err = |message: String| Error::Schema {
        line: line_no,
        message,
    };

    if raw.id.0.is_empty() {
        return Err(schema_err("field `id` must be non-empty".into()));
    }
    if raw.user.0.is_empty() {
        return Err(schema_err("field `user` must be non-empty".into()));
    }
    let retweeted_author_id = match raw.retweeted_user {
        Some(StringOrNumber(s)) if s.is_empty() => {
            return Err(schema_err("field `retweeted_user` must be non-empty".into()))
        }
        Some(StringOrNumber(s)) => Some(s),
        None => None,
    };

    let hashtags = match raw.hashtags {
        Some(tags) => {
            let mut out = Vec::with_capacity(tags.len());
            for tag in tags {
                let norm = normalize_tag(&tag).ok_or_else(|| {
                    schema_err(format!("field `hashtags` contains invalid tag {tag:?}"))
                })?;
                out.push(norm);
            }
            out
        }
        None => extract_hashtags(&raw.text),
    };

    Ok(TweetRecord {
        tweet_id: raw.id.0,
        author_id: raw.user.0,
        text: raw.text,
        created_at: raw.created_at.0,
        hashtags,
        retweeted_author_id,
    })
}

// Lowercase and strip one leading '#'. None if the result is empty or still
// contains whitespace or '#'.
fn normalize_tag(tag: &str) -> Option<String> {
    let stripped = tag.strip_prefix('#').unwrap_or(tag);
    let folded = fold(stripped);
    if folded.is_empty() || folded.chars().any(|c| c.is_whitespace() || c == '#') {
        None
    } else {
        Some(folded)
    }
}

/// Unicode-aware case fold used for tags and query matching. Accents are
/// preserved.
pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// All maximal `#` + `[letter|digit|underscore]+` substrings, lowercased,
/// in text order, duplicates kept.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    let mut tags = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '#' {
            continue;
        }
        let mut tag = String::new();
        while let Some(&n) = chars.peek() {
            if n.is_alphanumeric() || n == '_' {
                tag.push(n);
                chars.next();
            } else {
                break;
            }
        }
        if !tag.is_empty() {
            tags.push(fold(&tag));
        }
    }
    tags
}

/// Read a JSONL file and keep records with `start <= created_at <= end`.
///
/// Malformed lines are counted, not fatal. Duplicate tweet ids keep the last
/// occurrence (stream replays produce duplicates). An empty result is a
/// warning, not an error.
pub fn load_corpus(
    path: impl AsRef<Path>,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Result<(Corpus, IngestStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_corpus_from_reader(file, start, end)
}

/// Same as [`load_corpus`] but over any reader (used by tests and stdin).
pub fn load_corpus_from_reader(
    reader: impl Read,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Result<(Corpus, IngestStats)> {
    if start > end {
        return Err(Error::Config(format!(
            "date range start {start} is after end {end}"
        )));
    }

    let mut stats = IngestStats::default();
    let mut records: Vec<Option<TweetRecord>> = Vec::new();
    let mut by_id: std::collections::HashMap<String, usize> = std::collections::HashMap::new();

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = match parse_tweet_record(&line, line_no) {
            Ok(r) => r,
            Err(e) => {
                stats.malformed.push((line_no, e.to_string()));
                continue;
            }
        };
        if record.created_at < start || record.created_at > end {
            stats.out_of_range += 1;
            continue;
        }
        match by_id.entry(record.tweet_id.clone()) {
            std::collections::hash_map::Entry::Occupied(mut slot) => {
                // Last occurrence wins: drop the earlier record, keep input
                // order for the survivor.
                stats.duplicates += 1;
                stats
                    .warnings
                    .push(format!("duplicate tweet id {} (line {line_no}), keeping last", record.tweet_id));
                records[*slot.get()] = None;
                slot.insert(records.len());
                records.push(Some(record));
            }
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(records.len());
                records.push(Some(record));
            }
        }
    }

    let records: Vec<TweetRecord> = records.into_iter().flatten().collect();
    stats.accepted = records.len();
    if records.is_empty() {
        stats.warnings.push("empty corpus: no records in range".into());
    }

    Ok((
        Corpus {
            records,
            date_range: (start, end),
        },
        stats,
    ))
}
