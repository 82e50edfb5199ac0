//! Post records, tokenization and time partitioning.
//!
//! Input is line-delimited JSON, one record per line:
//!
//! ```text
//! {"user_id":"alice","text":"Vote #MAGA today @bob","timestamp":1538352000}
//! {"user_id":"bob","text":"RT @alice","timestamp":"2018-10-01T00:00:05Z"}
//! ```
//!
//! Timestamps are UTC epoch seconds or RFC 3339 strings.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

/// UTC epoch seconds.
pub type Timestamp = i64;

/// Shipped English stop-word list, one word per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en_v1.txt");
pub const STOPWORDS_VERSION: &str = "en-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub user_id: String,
    pub text: String,
    pub timestamp: Timestamp,
}

impl Post {
    pub fn new(user_id: impl Into<String>, text: impl Into<String>, timestamp: Timestamp) -> Self {
        Post {
            user_id: user_id.into(),
            text: text.into(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPost {
    pub user_id: String,
    pub timestamp: Timestamp,
    /// Lowercase content words, hashtag bodies included, mentions excluded.
    pub tokens: Vec<String>,
    /// Mentioned handles, lowercase, deduplicated in order of appearance.
    pub mentions: Vec<String>,
    /// Hashtag bodies without the `#`, lowercase, every occurrence kept.
    pub hashtags: Vec<String>,
    pub is_null_text: bool,
}

#[derive(Debug, Clone, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The shipped list (`en-v1`).
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// One word per line; blank lines ignored; words lowercased.
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopWords(iter.into_iter().map(|w| w.into().to_lowercase()).collect())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedPosts {
    pub posts: Vec<Post>,
    /// Lines that were not valid records. Blank lines are not counted.
    pub malformed: usize,
}

/// Parse line-delimited JSON records. Malformed lines are skipped and
/// counted; only a failing reader is fatal.
pub fn parse_posts<R: BufRead>(reader: R) -> Result<ParsedPosts> {
    let mut out = ParsedPosts::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Some(post) => out.posts.push(post),
            None => {
                log::warn!("skipping malformed record on line {}", lineno + 1);
                out.malformed += 1;
            }
        }
    }
    Ok(out)
}

fn parse_record(line: &str) -> Option<Post> {
    let value: Value = serde_json::from_str(line).ok()?;
    let obj = value.as_object()?;
    let user_id = obj.get("user_id")?.as_str()?;
    if user_id.is_empty() {
        return None;
    }
    let text = obj.get("text")?.as_str()?;
    let timestamp = match obj.get("timestamp")? {
        Value::Number(n) => n.as_i64()?,
        Value::String(s) => parse_iso_timestamp(s)?,
        _ => return None,
    };
    if timestamp < 0 {
        return None;
    }
    Some(Post::new(user_id, text, timestamp))
}

/// RFC 3339 first; a zone-less `YYYY-MM-DDTHH:MM:SS` is read as UTC.
pub fn parse_iso_timestamp(s: &str) -> Option<Timestamp> {
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Write posts in the format [`parse_posts`] reads, integer timestamps.
pub fn write_posts<W: Write>(mut w: W, posts: &[Post]) -> Result<()> {
    for post in posts {
        serde_json::to_writer(&mut w, post)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

fn starts_with_url(chars: &[char]) -> bool {
    URL_PREFIXES.iter().any(|prefix| {
        let mut it = chars.iter();
        prefix.chars().all(|p| it.next() == Some(&p))
    })
}

fn is_handle_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn scan_while(chars: &[char], from: usize, pred: impl Fn(char) -> bool) -> usize {
    let mut j = from;
    while j < chars.len() && pred(chars[j]) {
        j += 1;
    }
    j
}

/// Split a post into content tokens, mentions and hashtags.
///
/// The text is NFC-normalized and lowercased. URLs (`http://`, `https://`,
/// `www.` up to the next whitespace) are dropped, `@handle` becomes a mention,
/// `#body` contributes `body` to the hashtags and to the tokens, and every
/// other alphanumeric run becomes a token unless it is a stop word.
pub fn tokenize(post: &Post, stopwords: &StopWords) -> TokenizedPost {
    let normalized: String = post.text.nfc().collect::<String>().to_lowercase();
    let chars: Vec<char> = normalized.chars().collect();

    let mut tokens = Vec::new();
    let mut mentions: Vec<String> = Vec::new();
    let mut hashtags = Vec::new();

    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if starts_with_url(&chars[i..]) {
            i = scan_while(&chars, i, |c| !c.is_whitespace());
        } else if c == '@' {
            let end = scan_while(&chars, i + 1, is_handle_char);
            if end > i + 1 {
                let handle: String = chars[i + 1..end].iter().collect();
                if !mentions.contains(&handle) {
                    mentions.push(handle);
                }
            }
            i = end.max(i + 1);
        } else if c == '#' {
            let end = scan_while(&chars, i + 1, char::is_alphanumeric);
            if end > i + 1 {
                let body: String = chars[i + 1..end].iter().collect();
                // a stop-word hashtag body stays a hashtag but not a token, so
                // re-tokenizing the token stream is stable
                if !stopwords.contains(&body) {
                    tokens.push(body.clone());
                }
                hashtags.push(body);
            }
            i = end.max(i + 1);
        } else if c.is_alphanumeric() {
            let end = scan_while(&chars, i, char::is_alphanumeric);
            let word: String = chars[i..end].iter().collect();
            if !stopwords.contains(&word) {
                tokens.push(word);
            }
            i = end;
        } else {
            i += 1;
        }
    }

    TokenizedPost {
        user_id: post.user_id.clone(),
        timestamp: post.timestamp,
        is_null_text: tokens.is_empty(),
        tokens,
        mentions,
        hashtags,
    }
}

/// Tokenize many posts in parallel, preserving order.
pub fn tokenize_all(posts: &[Post], stopwords: &StopWords) -> Vec<TokenizedPost> {
    posts.par_iter().map(|p| tokenize(p, stopwords)).collect()
}

/// Observation window cut into consecutive minimal analytic intervals (MAIs).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimePartition {
    pub window_start: Timestamp,
    pub window_end: Timestamp,
    pub mai_length: i64,
    /// Half-open `[start, end)` intervals; the last may be truncated.
    pub boundaries: Vec<(Timestamp, Timestamp)>,
}

impl TimePartition {
    pub fn new(window_start: Timestamp, window_end: Timestamp, mai_length: i64) -> Result<Self> {
        if window_start >= window_end {
            return Err(Error::InvalidParameter(format!(
                "window start {window_start} must precede window end {window_end}"
            )));
        }
        if mai_length <= 0 {
            return Err(Error::InvalidParameter(format!(
                "MAI length must be positive, got {mai_length}"
            )));
        }
        let mut boundaries = Vec::new();
        let mut start = window_start;
        while start < window_end {
            let end = start.saturating_add(mai_length).min(window_end);
            boundaries.push((start, end));
            start = end;
        }
        Ok(TimePartition {
            window_start,
            window_end,
            mai_length,
            boundaries,
        })
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    /// Index of the MAI containing `t`, if `t` is inside the window.
    pub fn mai_index(&self, t: Timestamp) -> Option<usize> {
        if t < self.window_start || t >= self.window_end {
            return None;
        }
        Some(((t - self.window_start) / self.mai_length) as usize)
    }
}

#[derive(Debug, Clone)]
pub struct Partitioned {
    pub partition: TimePartition,
    /// One bucket per MAI, posts in input order.
    pub buckets: Vec<Vec<TokenizedPost>>,
    /// Posts outside the window.
    pub dropped: usize,
}

/// Tokenize `posts` and bucket them into the MAIs of `[window_start, window_end)`.
pub fn partition(
    posts: &[Post],
    window_start: Timestamp,
    window_end: Timestamp,
    mai_length: i64,
    stopwords: &StopWords,
) -> Result<Partitioned> {
    let partition = TimePartition::new(window_start, window_end, mai_length)?;
    let mut buckets = vec![Vec::new(); partition.len()];
    let mut dropped = 0;
    for tokenized in tokenize_all(posts, stopwords) {
        match partition.mai_index(tokenized.timestamp) {
            Some(i) => buckets[i].push(tokenized),
            None => dropped += 1,
        }
    }
    Ok(Partitioned {
        partition,
        buckets,
        dropped,
    })
}
