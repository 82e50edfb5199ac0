//! Tabular exports: ETT/AU percentages, null-text cohorts, hashtag
//! distributions and their statistics, histograms.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::corpus::TokenizedPost;
use crate::detect::AnomalousReport;
use crate::netgraph::Category;
use crate::stats;
use crate::{Error, Result};

pub const DEFAULT_NARROWNESS_CUT: f64 = 0.8;
pub const DEFAULT_NULL_FRACTION_CUT: f64 = 0.8;

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub period: String,
    pub users: usize,
    pub ett: usize,
    pub anomalous: usize,
}

impl SummaryRow {
    pub fn from_counts(
        period: impl Into<String>,
        users: usize,
        ett: usize,
        anomalous: usize,
    ) -> Self {
        SummaryRow {
            period: period.into(),
            users,
            ett,
            anomalous,
        }
    }

    /// ETT users as a percentage of users.
    pub fn ett_pct(&self) -> Option<f64> {
        pct(self.ett, self.users)
    }

    /// Anomalous users as a percentage of ETT users.
    pub fn au_pct(&self) -> Option<f64> {
        pct(self.anomalous, self.ett)
    }
}

pub fn summary_table<'a>(
    reports: impl IntoIterator<Item = (&'a str, &'a AnomalousReport)>,
) -> Vec<SummaryRow> {
    reports
        .into_iter()
        .map(|(period, r)| SummaryRow::from_counts(period, r.n_users, r.n_ett, r.n_anomalous))
        .collect()
}

/// Header `period,users_count,ett_pct_of_users,au_pct_of_ett`; percentages
/// with two decimals, `n/a` when the denominator is zero.
pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["period", "users_count", "ett_pct_of_users", "au_pct_of_ett"])?;
    for r in rows {
        out.write_record([
            r.period.as_str(),
            &r.users.to_string(),
            &fmt_pct(r.ett_pct()),
            &fmt_pct(r.au_pct()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullTextRow {
    pub period: String,
    pub users: Vec<String>,
    /// Total posts by the cohort.
    pub tweets: usize,
    /// Distinct users mentioned by the cohort.
    pub mentions: usize,
}

/// Users whose narrowness exceeds `narrowness_cut` and whose share of
/// null-text posts exceeds `null_fraction_cut`, with their post and
/// distinct-mention totals. `posts` are the period's posts.
pub fn null_text_row(
    period: impl Into<String>,
    report: &AnomalousReport,
    posts: &[TokenizedPost],
    narrowness_cut: f64,
    null_fraction_cut: f64,
) -> NullTextRow {
    let mut per_user: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for p in posts {
        let e = per_user.entry(&p.user_id).or_default();
        e.0 += 1;
        if p.is_null_text {
            e.1 += 1;
        }
    }
    let cohort: BTreeSet<&str> = per_user
        .iter()
        .filter(|(u, &(total, null))| {
            report.narrowness_of(u).is_some_and(|n| n > narrowness_cut)
                && null as f64 / total as f64 > null_fraction_cut
        })
        .map(|(u, _)| *u)
        .collect();
    let mut mentioned: HashSet<&str> = HashSet::new();
    let mut tweets = 0;
    for p in posts.iter().filter(|p| cohort.contains(p.user_id.as_str())) {
        tweets += 1;
        mentioned.extend(p.mentions.iter().map(String::as_str));
    }
    NullTextRow {
        period: period.into(),
        users: cohort.into_iter().map(String::from).collect(),
        tweets,
        mentions: mentioned.len(),
    }
}

/// Header `period,users_count,tweets_count,mentions_count`.
pub fn write_null_text_csv<W: Write>(w: W, rows: &[NullTextRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["period", "users_count", "tweets_count", "mentions_count"])?;
    for r in rows {
        out.write_record([
            r.period.as_str(),
            &r.users.len().to_string(),
            &r.tweets.to_string(),
            &r.mentions.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Whom a group member's hashtagged post was aimed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HashtagCategory {
    Group,
    Ett,
    Regular,
}

impl fmt::Display for HashtagCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HashtagCategory::Group => "group",
            HashtagCategory::Ett => "ett",
            HashtagCategory::Regular => "regular",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HashtagDistribution {
    pub category: HashtagCategory,
    pub counts: BTreeMap<String, u64>,
}

impl HashtagDistribution {
    fn new(category: HashtagCategory) -> Self {
        HashtagDistribution {
            category,
            counts: BTreeMap::new(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Share of each hashtag in the total; empty when the total is zero.
    pub fn percentages(&self) -> BTreeMap<String, f64> {
        let total = self.total();
        if total == 0 {
            return BTreeMap::new();
        }
        self.counts
            .iter()
            .map(|(h, &c)| (h.clone(), c as f64 / total as f64))
            .collect()
    }
}

/// Group, ETT and regular hashtag distributions of a group's posts.
///
/// Every post by a member that mentions someone adds its hashtags once to
/// each category present among the mentioned users: fellow members are
/// `Group`, non-anomalous ETT users `Ett`, regular or unlabeled users
/// `Regular`. Anomalous users outside the group fall in no category.
pub fn hashtag_distributions(
    members: &[String],
    posts: &[TokenizedPost],
    labels: &HashMap<String, Category>,
) -> [HashtagDistribution; 3] {
    let members: HashSet<&str> = members.iter().map(String::as_str).collect();
    let mut dists = [
        HashtagDistribution::new(HashtagCategory::Group),
        HashtagDistribution::new(HashtagCategory::Ett),
        HashtagDistribution::new(HashtagCategory::Regular),
    ];
    for post in posts
        .iter()
        .filter(|p| members.contains(p.user_id.as_str()))
    {
        if post.hashtags.is_empty() {
            continue;
        }
        let mut targets = [false; 3];
        for m in &post.mentions {
            let slot = if members.contains(m.as_str()) {
                Some(0)
            } else {
                match labels.get(m).copied().unwrap_or(Category::Regular) {
                    Category::Ett => Some(1),
                    Category::Regular => Some(2),
                    Category::Anomalous => None,
                }
            };
            if let Some(s) = slot {
                targets[s] = true;
            }
        }
        for (dist, _) in dists.iter_mut().zip(targets).filter(|(_, hit)| *hit) {
            for h in &post.hashtags {
                *dist.counts.entry(h.clone()).or_default() += 1;
            }
        }
    }
    dists
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HashtagStats {
    /// Correlation of group and ETT counts.
    pub coef1: Option<f64>,
    /// Correlation of group and regular counts.
    pub coef2: Option<f64>,
    pub stdev1: f64,
    pub stdev2: f64,
    pub stdev3: f64,
}

/// Pearson correlation of the raw counts and population standard deviation
/// of the percentage vectors, all aligned over the union of hashtags.
pub fn hashtag_stats(dists: &[HashtagDistribution; 3]) -> HashtagStats {
    let union: BTreeSet<&String> = dists.iter().flat_map(|d| d.counts.keys()).collect();
    let counts = |d: &HashtagDistribution| -> Vec<f64> {
        union
            .iter()
            .map(|h| d.counts.get(*h).copied().unwrap_or(0) as f64)
            .collect()
    };
    let stdev = |d: &HashtagDistribution| -> f64 {
        let pcts = d.percentages();
        let v: Vec<f64> = union
            .iter()
            .map(|h| pcts.get(*h).copied().unwrap_or(0.0))
            .collect();
        stats::mean_std(&v).map_or(0.0, |(_, s)| s)
    };
    let (g, e, r) = (counts(&dists[0]), counts(&dists[1]), counts(&dists[2]));
    HashtagStats {
        coef1: stats::pearson(&g, &e),
        coef2: stats::pearson(&g, &r),
        stdev1: stdev(&dists[0]),
        stdev2: stdev(&dists[1]),
        stdev3: stdev(&dists[2]),
    }
}

/// Header `period,coef1,coef2,stdev1,stdev2,stdev3`.
pub fn write_hashtag_stats_csv<W: Write>(w: W, rows: &[(String, HashtagStats)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["period", "coef1", "coef2", "stdev1", "stdev2", "stdev3"])?;
    for (period, s) in rows {
        out.write_record([
            period.as_str(),
            &fmt_opt(s.coef1),
            &fmt_opt(s.coef2),
            &s.stdev1.to_string(),
            &s.stdev2.to_string(),
            &s.stdev3.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Header `period,category,hashtag,count,percentage`.
pub fn write_hashtag_distributions_csv<W: Write>(
    w: W,
    rows: &[(String, [HashtagDistribution; 3])],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["period", "category", "hashtag", "count", "percentage"])?;
    for (period, dists) in rows {
        for d in dists {
            let pcts = d.percentages();
            for (h, c) in &d.counts {
                out.write_record([
                    period.as_str(),
                    &d.category.to_string(),
                    h,
                    &c.to_string(),
                    &pcts[h].to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12 + 0.0
}

/// Left-closed bins of width `bin_width`, as `(bin_start, count)`, covering
/// every bin from the lowest to the highest occupied one. Bin starts are
/// rounded to 12 decimal places.
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Vec<(f64, usize)>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be > 0, got {bin_width}"
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cannot bin non-finite value {v}"
        )));
    }
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        let mut b = (v / bin_width).floor() as i64;
        if v < b as f64 * bin_width {
            b -= 1;
        } else if v >= (b + 1) as f64 * bin_width {
            b += 1;
        }
        *bins.entry(b).or_default() += 1;
    }
    let (Some(&lo), Some(&hi)) = (bins.keys().next(), bins.keys().next_back()) else {
        return Ok(Vec::new());
    };
    Ok((lo..=hi)
        .map(|b| {
            (
                round12(b as f64 * bin_width),
                bins.get(&b).copied().unwrap_or(0),
            )
        })
        .collect())
}

/// Period-tagged series CSV with header `period,<x>,<y>`.
pub fn write_series_csv<W: Write, X: ToString, Y: ToString>(
    w: W,
    x_name: &str,
    y_name: &str,
    rows: &[(String, Vec<(X, Y)>)],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["period", x_name, y_name])?;
    for (period, series) in rows {
        for (x, y) in series {
            out.write_record([period.clone(), x.to_string(), y.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}
