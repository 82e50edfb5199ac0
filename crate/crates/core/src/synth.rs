//! Seeded synthetic corpora with planted anomalous groups.
//!
//! Three populations share one window: many light regular users, diffuse
//! heavy users posting random vocabulary, and planted heavy users that post
//! from a low-rank topic model and mention each other round-robin.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{Post, Timestamp};
use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_regular: usize,
    pub n_diffuse: usize,
    pub n_planted: usize,
    pub window_start: Timestamp,
    pub window_length: i64,
    /// Regular users post `1 + Poisson(regular_rate)` times.
    pub regular_rate: f64,
    pub heavy_min: usize,
    pub heavy_max: usize,
    pub vocab_size: usize,
    pub words_per_post: usize,
    /// Number of topic word vectors; each planted post sums a random
    /// non-empty subset of them.
    pub topic_rank: usize,
    /// Per-word chance that a planted post's count moves by one up or down.
    pub noise: f64,
    pub regular_mention_prob: f64,
    pub regular_null_prob: f64,
    pub diffuse_mention_prob: f64,
    pub planted_outside_prob: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_regular: 1000,
            n_diffuse: 50,
            n_planted: 12,
            window_start: 1_601_510_400,
            window_length: 7 * 86_400,
            regular_rate: 2.0,
            heavy_min: 70,
            heavy_max: 100,
            vocab_size: 2000,
            words_per_post: 8,
            topic_rank: 2,
            noise: 0.05,
            regular_mention_prob: 0.2,
            regular_null_prob: 0.05,
            diffuse_mention_prob: 0.3,
            planted_outside_prob: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn window(&self) -> (Timestamp, Timestamp) {
        (self.window_start, self.window_start + self.window_length)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_regular == 0 || self.n_diffuse == 0 {
            return bad("n_regular and n_diffuse must be positive");
        }
        if self.n_planted < 3 {
            return bad("n_planted must be at least 3");
        }
        if self.window_length <= 0 {
            return bad("window_length must be positive");
        }
        if self.heavy_min == 0 || self.heavy_min > self.heavy_max {
            return bad("need 0 < heavy_min <= heavy_max");
        }
        if self.vocab_size < self.words_per_post || self.words_per_post == 0 {
            return bad("vocab_size must cover words_per_post > 0");
        }
        if !(1..=2).contains(&self.topic_rank) {
            return bad("topic_rank must be 1 or 2");
        }
        if !(self.regular_rate > 0.0 && self.regular_rate.is_finite()) {
            return bad("regular_rate must be positive");
        }
        for p in [
            self.noise,
            self.regular_mention_prob,
            self.regular_null_prob,
            self.diffuse_mention_prob,
            self.planted_outside_prob,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Regular,
    Diffuse,
    Planted,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Regular => "regular",
            Role::Diffuse => "diffuse",
            Role::Planted => "planted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub roles: BTreeMap<String, Role>,
    /// Sorted.
    pub planted: Vec<String>,
    pub expected_k1: usize,
}

impl GroundTruth {
    pub fn with_role(&self, role: Role) -> Vec<&str> {
        self.roles
            .iter()
            .filter(|(_, r)| **r == role)
            .map(|(u, _)| u.as_str())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// Ordered by timestamp, then user id.
    pub posts: Vec<Post>,
    pub truth: GroundTruth,
}

fn vocab_word(i: usize) -> String {
    format!("w{i:04}")
}

fn topic_word(topic: usize, j: usize) -> String {
    format!("topic{topic}x{j}")
}

/// Word counts of one planted topic: `words` occurrences over half as many
/// distinct words.
fn topic_vector(topic: usize, words: usize) -> Vec<(String, u32)> {
    let distinct = (words / 2).max(1);
    (0..distinct)
        .map(|j| {
            (
                topic_word(topic, j),
                (words / distinct + usize::from(j < words % distinct)) as u32,
            )
        })
        .collect()
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_total = config.n_regular + config.n_diffuse + config.n_planted;
    let width = n_total.to_string().len().max(4);
    let mut ids: Vec<String> = (0..n_total).map(|i| format!("u{i:0width$}")).collect();
    ids.shuffle(&mut rng);
    let (regular, rest) = ids.split_at(config.n_regular);
    let (diffuse, planted) = rest.split_at(config.n_diffuse);

    let (start, _) = config.window();
    let ts = |rng: &mut ChaCha8Rng| start + rng.random_range(0..config.window_length);
    let mut posts = Vec::new();

    let poisson = Poisson::new(config.regular_rate).map_err(|e| Error::Config(e.to_string()))?;
    for user in regular {
        let n = 1 + poisson.sample(&mut rng) as usize;
        for _ in 0..n {
            let mention = rng.random_bool(config.regular_mention_prob).then(|| {
                let other = &ids[rng.random_range(0..n_total)];
                (other != user).then(|| other.clone())
            });
            let text = if rng.random_bool(config.regular_null_prob) {
                format!(
                    "RT @{}",
                    mention.flatten().unwrap_or_else(|| regular[0].clone())
                )
            } else {
                let k = rng.random_range(3..=6).min(config.vocab_size);
                let mut words: Vec<String> = (0..k)
                    .map(|_| vocab_word(rng.random_range(0..config.vocab_size)))
                    .collect();
                if let Some(Some(m)) = mention {
                    words.push(format!("@{m}"));
                }
                words.join(" ")
            };
            posts.push(Post::new(user.clone(), text, ts(&mut rng)));
        }
    }

    let non_planted: Vec<&String> = regular.iter().chain(diffuse).collect();
    for user in diffuse {
        let n = rng.random_range(config.heavy_min..=config.heavy_max);
        for _ in 0..n {
            let mut words: Vec<String> = (0..config.words_per_post)
                .map(|_| vocab_word(rng.random_range(0..config.vocab_size)))
                .collect();
            if rng.random_bool(config.diffuse_mention_prob) {
                let other = non_planted[rng.random_range(0..non_planted.len())];
                if other != user {
                    words.push(format!("@{other}"));
                }
            }
            posts.push(Post::new(user.clone(), words.join(" "), ts(&mut rng)));
        }
    }

    let topics: Vec<Vec<(String, u32)>> = (0..config.topic_rank)
        .map(|t| topic_vector(t, config.words_per_post))
        .collect();
    for (i, user) in planted.iter().enumerate() {
        let n = rng.random_range(config.heavy_min..=config.heavy_max);
        for j in 0..n {
            let mask = rng.random_range(1..1u32 << topics.len());
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for (_, topic) in topics
                .iter()
                .enumerate()
                .filter(|(t, _)| mask >> t & 1 == 1)
            {
                for (w, c) in topic {
                    *counts.entry(w).or_default() += c;
                }
            }
            let mut words = Vec::new();
            for (w, c) in counts {
                let c = if rng.random_bool(config.noise) {
                    if rng.random_bool(0.5) {
                        c + 1
                    } else {
                        c - 1
                    }
                } else {
                    c
                };
                words.extend(std::iter::repeat_n(w.to_string(), c as usize));
            }
            if words.is_empty() {
                words.push(topics[0][0].0.clone());
            }
            words[0] = format!("#{}", words[0]);
            let offset = 1 + j % (planted.len() - 1);
            words.push(format!("@{}", planted[(i + offset) % planted.len()]));
            if rng.random_bool(config.planted_outside_prob) {
                words.push(format!(
                    "@{}",
                    non_planted[rng.random_range(0..non_planted.len())]
                ));
            }
            posts.push(Post::new(user.clone(), words.join(" "), ts(&mut rng)));
        }
    }

    check_separation(&posts, diffuse.iter().chain(planted))?;
    posts.sort_by(|a, b| (a.timestamp, &a.user_id).cmp(&(b.timestamp, &b.user_id)));

    let mut roles = BTreeMap::new();
    for (group, role) in [
        (regular, Role::Regular),
        (diffuse, Role::Diffuse),
        (planted, Role::Planted),
    ] {
        for u in group {
            roles.insert(u.clone(), role);
        }
    }
    let mut planted_sorted = planted.to_vec();
    planted_sorted.sort();
    Ok(SynthCorpus {
        posts,
        truth: GroundTruth {
            roles,
            planted: planted_sorted,
            expected_k1: config.n_planted.saturating_sub(1),
        },
    })
}

/// Heavy users must clear the population mean by three standard deviations.
fn check_separation<'a>(posts: &[Post], heavy: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in posts {
        *counts.entry(&p.user_id).or_default() += 1;
    }
    let values: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    let Some((mu, sigma)) = stats::mean_std(&values) else {
        return Ok(());
    };
    for h in heavy {
        let c = counts.get(h.as_str()).copied().unwrap_or(0) as f64;
        if c < mu + 3.0 * sigma {
            return Err(Error::Config(format!(
                "heavy user {h} posts {c} times, below mean + 3 std ({:.1}); add regular users or raise heavy_min",
                mu + 3.0 * sigma
            )));
        }
    }
    Ok(())
}

/// Header `user_id,role`.
pub fn write_ground_truth_csv<W: Write>(w: W, truth: &GroundTruth) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["user_id", "role"])?;
    for (u, r) in &truth.roles {
        out.write_record([u.as_str(), &r.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
