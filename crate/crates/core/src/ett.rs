//! Extreme-tweeter (ETT) behavior per MAI and ETT interval summaries.

use std::collections::BTreeMap;
use std::io::Write;

use crate::corpus::{Partitioned, TokenizedPost};
use crate::stats;
use crate::{Error, Result};

/// Per-user post counts, one column per MAI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityMatrix {
    /// Sorted user ids; a user is present iff it posted at least once.
    pub users: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ActivityMatrix {
    pub fn from_buckets(buckets: &[Vec<TokenizedPost>]) -> Self {
        let n = buckets.len();
        let mut tallies: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        for (i, bucket) in buckets.iter().enumerate() {
            for post in bucket {
                tallies.entry(&post.user_id).or_insert_with(|| vec![0; n])[i] += 1;
            }
        }
        let (users, counts) = tallies.into_iter().map(|(u, c)| (u.to_string(), c)).unzip();
        ActivityMatrix { users, counts }
    }

    pub fn from_partition(p: &Partitioned) -> Self {
        Self::from_buckets(&p.buckets)
    }

    pub fn n_mais(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Non-zero counts in MAI `i`: the population of users active there.
    pub fn population(&self, i: usize) -> Vec<u64> {
        self.counts
            .iter()
            .map(|c| c[i])
            .filter(|&c| c > 0)
            .collect()
    }
}

/// `mean + delta * sqrt(var)` of the counts, population variance.
pub fn mai_threshold(counts_in_mai: &[u64], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let values: Vec<f64> = counts_in_mai.iter().map(|&c| c as f64).collect();
    stats::selectivity_threshold(&values, delta).ok_or(Error::EmptyPopulation)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "delta must be >= 0, got {delta}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EttClassification {
    pub delta: f64,
    /// `None` where the MAI had no active users.
    pub thresholds: Vec<Option<f64>>,
    /// `flags[u][i]` is true when user `u` shows ETT behavior in MAI `i`.
    pub flags: Vec<Vec<bool>>,
}

pub fn classify_ett(activity: &ActivityMatrix, delta: f64) -> Result<EttClassification> {
    check_delta(delta)?;
    let n = activity.n_mais();
    let thresholds: Vec<Option<f64>> = (0..n)
        .map(|i| match mai_threshold(&activity.population(i), delta) {
            Ok(t) => Ok(Some(t)),
            Err(Error::EmptyPopulation) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let flags = activity
        .counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&thresholds)
                .map(|(&c, t)| c > 0 && t.is_some_and(|t| c as f64 >= t))
                .collect()
        })
        .collect();
    Ok(EttClassification {
        delta,
        thresholds,
        flags,
    })
}

/// Maximal runs of flagged MAIs for one user.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EttIntervals {
    /// 1-based inclusive `(first, last)` MAI indices.
    pub runs: Vec<(usize, usize)>,
    pub letti: usize,
    pub tetti: usize,
}

impl EttIntervals {
    pub fn is_regular(&self) -> bool {
        self.tetti == 0
    }
}

pub fn ett_intervals(flags: &[bool]) -> EttIntervals {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i + 1),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, flags.len()));
    }
    let letti = runs.iter().map(|(a, b)| b - a + 1).max().unwrap_or(0);
    let tetti = runs.iter().map(|(a, b)| b - a + 1).sum();
    EttIntervals { runs, letti, tetti }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EttIntervalSummary {
    pub users: Vec<String>,
    pub intervals: Vec<EttIntervals>,
    pub flags: Vec<Vec<bool>>,
}

impl EttIntervalSummary {
    pub fn ett_users(&self) -> impl Iterator<Item = &str> {
        self.users
            .iter()
            .zip(&self.intervals)
            .filter(|(_, iv)| !iv.is_regular())
            .map(|(u, _)| u.as_str())
    }
}

pub fn summarize(
    activity: &ActivityMatrix,
    classification: &EttClassification,
) -> EttIntervalSummary {
    EttIntervalSummary {
        users: activity.users.clone(),
        intervals: classification
            .flags
            .iter()
            .map(|f| ett_intervals(f))
            .collect(),
        flags: classification.flags.clone(),
    }
}

/// CSV with header `user_id,tetti,letti,flags`; flags as a `0`/`1` string
/// in MAI order.
pub fn write_ett_csv<W: Write>(w: W, summary: &EttIntervalSummary) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["user_id", "tetti", "letti", "flags"])?;
    for ((user, iv), flags) in summary
        .users
        .iter()
        .zip(&summary.intervals)
        .zip(&summary.flags)
    {
        let bits: String = flags.iter().map(|&f| if f { '1' } else { '0' }).collect();
        out.write_record([
            user.as_str(),
            &iv.tetti.to_string(),
            &iv.letti.to_string(),
            &bits,
        ])?;
    }
    out.flush()?;
    Ok(())
}
