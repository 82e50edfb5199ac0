//! Anomalous-user detection over a fixed period.
//!
//! 1. Restrict posts to the period, tally per-user counts, and mark as ETT
//!    every user whose count reaches `mean + δ·std` of the period population.
//! 2. Choose the narrowness method from the largest possible text matrix:
//!    exact (EM) when `N·D ≤ M`, randomized (RM) otherwise, where `N` is the
//!    largest post count and `D` the largest distinct-word count among all
//!    users. Score every ETT user with that method.
//! 3. Mark as anomalous every ETT user whose narrowness reaches
//!    `mean + λ·std` of the ETT scores.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Timestamp, TokenizedPost};
use crate::narrowness::{self, Method, NarrownessParams};
use crate::netgraph::Category;
use crate::stats;
use crate::{Error, Result};

pub const DEFAULT_DELTA: f64 = 1.5;
pub const DEFAULT_LAMBDA: f64 = 1.0;
/// 2,000 × 5,000 cells.
pub const DEFAULT_MATRIX_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmConfig {
    /// `None` selects `max(10, ⌈p/10⌉)` per user.
    pub k: Option<usize>,
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for RmConfig {
    fn default() -> Self {
        RmConfig {
            k: None,
            oversample: narrowness::DEFAULT_OVERSAMPLE,
            power_iters: narrowness::DEFAULT_POWER_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectConfig {
    /// Half-open `[start, end)`.
    pub period: (Timestamp, Timestamp),
    pub delta: f64,
    pub lambda: f64,
    pub matrix_budget: u64,
    pub d: f64,
    pub rm: RmConfig,
    pub seed: u64,
}

impl DetectConfig {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        DetectConfig {
            period: (start, end),
            delta: DEFAULT_DELTA,
            lambda: DEFAULT_LAMBDA,
            matrix_budget: DEFAULT_MATRIX_BUDGET,
            d: narrowness::DEFAULT_ENERGY_THRESHOLD,
            rm: RmConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.period.0 >= self.period.1 {
            return bad(format!(
                "empty period [{}, {})",
                self.period.0, self.period.1
            ));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be >= 0, got {}", self.delta));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.matrix_budget == 0 {
            return bad("matrix budget must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.d) {
            return bad(format!("d must be in [0,1], got {}", self.d));
        }
        if self.rm.k == Some(0) {
            return bad("rm k must be >= 1".into());
        }
        Ok(())
    }

    fn narrowness_params(&self, method: Method) -> NarrownessParams {
        match method {
            Method::Exact => NarrownessParams::Exact { d: self.d },
            Method::Randomized => NarrownessParams::Randomized {
                k: self.rm.k,
                oversample: self.rm.oversample,
                power_iters: self.rm.power_iters,
                global_seed: self.seed,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserRow {
    pub user_id: String,
    pub tweet_count: usize,
    pub distinct_words: usize,
    /// Only ETT users are scored.
    pub narrowness: Option<f64>,
    pub is_ett: bool,
    pub is_anomalous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalousReport {
    pub period: (Timestamp, Timestamp),
    /// Sorted by user id.
    pub rows: Vec<UserRow>,
    pub ett_threshold: Option<f64>,
    pub narrowness_threshold: Option<f64>,
    pub method: Option<Method>,
    pub max_tweet_count: usize,
    pub max_distinct_words: usize,
    pub n_users: usize,
    pub n_ett: usize,
    pub n_anomalous: usize,
    pub notices: Vec<String>,
}

impl AnomalousReport {
    pub fn anomalous_users(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.is_anomalous)
            .map(|r| r.user_id.as_str())
            .collect()
    }

    pub fn ett_users(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.is_ett)
            .map(|r| r.user_id.as_str())
            .collect()
    }

    /// Category of every posting user in the period.
    pub fn labels(&self) -> HashMap<String, Category> {
        self.rows
            .iter()
            .map(|r| {
                let c = if r.is_anomalous {
                    Category::Anomalous
                } else if r.is_ett {
                    Category::Ett
                } else {
                    Category::Regular
                };
                (r.user_id.clone(), c)
            })
            .collect()
    }

    pub fn narrowness_of(&self, user_id: &str) -> Option<f64> {
        self.rows
            .binary_search_by(|r| r.user_id.as_str().cmp(user_id))
            .ok()
            .and_then(|i| self.rows[i].narrowness)
    }
}

/// Run detection on tokenized posts; posts outside the period are ignored.
pub fn detect_anomalous(posts: &[TokenizedPost], config: &DetectConfig) -> Result<AnomalousReport> {
    config.validate()?;
    let (start, end) = config.period;

    // step 1
    let mut by_user: BTreeMap<&str, Vec<&TokenizedPost>> = BTreeMap::new();
    for post in posts
        .iter()
        .filter(|p| p.timestamp >= start && p.timestamp < end)
    {
        by_user.entry(&post.user_id).or_default().push(post);
    }
    let mut report = AnomalousReport {
        period: config.period,
        rows: Vec::with_capacity(by_user.len()),
        ett_threshold: None,
        narrowness_threshold: None,
        method: None,
        max_tweet_count: 0,
        max_distinct_words: 0,
        n_users: by_user.len(),
        n_ett: 0,
        n_anomalous: 0,
        notices: Vec::new(),
    };
    if by_user.is_empty() {
        report.notices.push("no posts in period".into());
        return Ok(report);
    }

    let counts: Vec<f64> = by_user.values().map(|p| p.len() as f64).collect();
    let ett_threshold =
        stats::selectivity_threshold(&counts, config.delta).expect("non-empty population");
    report.ett_threshold = Some(ett_threshold);

    for (user, user_posts) in &by_user {
        let distinct: HashSet<&str> = user_posts
            .iter()
            .flat_map(|p| p.tokens.iter().map(String::as_str))
            .collect();
        report.rows.push(UserRow {
            user_id: user.to_string(),
            tweet_count: user_posts.len(),
            distinct_words: distinct.len(),
            narrowness: None,
            is_ett: user_posts.len() as f64 >= ett_threshold,
            is_anomalous: false,
        });
    }

    // step 2
    report.max_tweet_count = report.rows.iter().map(|r| r.tweet_count).max().unwrap_or(0);
    report.max_distinct_words = report
        .rows
        .iter()
        .map(|r| r.distinct_words)
        .max()
        .unwrap_or(0);
    let cells = report.max_tweet_count as u128 * report.max_distinct_words as u128;
    let method = if cells <= u128::from(config.matrix_budget) {
        Method::Exact
    } else {
        Method::Randomized
    };
    report.method = Some(method);
    let params = config.narrowness_params(method);

    let ett_idx: Vec<usize> = (0..report.rows.len())
        .filter(|&i| report.rows[i].is_ett)
        .collect();
    report.n_ett = ett_idx.len();
    if ett_idx.is_empty() {
        report.notices.push("no ETT users in period".into());
        return Ok(report);
    }
    let scores: Vec<f64> = ett_idx
        .par_iter()
        .map(|&i| {
            let user_posts = &by_user[report.rows[i].user_id.as_str()];
            narrowness::score_user(user_posts, params).map(|s| s.value)
        })
        .collect::<Result<_>>()?;

    // step 3
    let nrw_threshold =
        stats::selectivity_threshold(&scores, config.lambda).expect("non-empty ETT set");
    report.narrowness_threshold = Some(nrw_threshold);
    for (&i, &score) in ett_idx.iter().zip(&scores) {
        let row = &mut report.rows[i];
        row.narrowness = Some(score);
        row.is_anomalous = score >= nrw_threshold;
    }
    report.n_anomalous = report.rows.iter().filter(|r| r.is_anomalous).count();
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// CSV with header
/// `user_id,tweet_count,distinct_words,narrowness,is_ett,is_anomalous`.
pub fn write_report_csv<W: Write>(w: W, report: &AnomalousReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "user_id",
        "tweet_count",
        "distinct_words",
        "narrowness",
        "is_ett",
        "is_anomalous",
    ])?;
    for r in &report.rows {
        out.write_record([
            r.user_id.as_str(),
            &r.tweet_count.to_string(),
            &r.distinct_words.to_string(),
            &opt(r.narrowness),
            &r.is_ett.to_string(),
            &r.is_anomalous.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    period_start: Timestamp,
    period_end: Timestamp,
    method: Option<Method>,
    ett_threshold: Option<f64>,
    narrowness_threshold: Option<f64>,
    max_tweet_count: usize,
    max_distinct_words: usize,
    n_users: usize,
    n_ett: usize,
    n_anomalous: usize,
    anomalous_users: Vec<&'a str>,
    notices: &'a [String],
}

/// Pretty JSON summary: thresholds, method, population sizes.
pub fn write_summary_json<W: Write>(mut w: W, report: &AnomalousReport) -> Result<()> {
    let summary = Summary {
        period_start: report.period.0,
        period_end: report.period.1,
        method: report.method,
        ett_threshold: report.ett_threshold,
        narrowness_threshold: report.narrowness_threshold,
        max_tweet_count: report.max_tweet_count,
        max_distinct_words: report.max_distinct_words,
        n_users: report.n_users,
        n_ett: report.n_ett,
        n_anomalous: report.n_anomalous,
        anomalous_users: report.anomalous_users(),
        notices: &report.notices,
    };
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.write_all(b"\n")?;
    Ok(())
}
