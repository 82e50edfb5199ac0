//! Interest narrowness of a user's bag-of-words text matrix.
//!
//! Two scores are supported:
//!
//! * **EM** (exact): `γ = 1 - K/p`, where `K` is the smallest number of
//!   leading singular components whose energy share reaches `d`.
//! * **RM** (randomized): `η = Σ_{j≤k} σ̃_j² / ‖M‖_F²` over the top-`k`
//!   randomized singular values.
//!
//! The two live on different scales; a run uses one method for every user.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::corpus::TokenizedPost;
use crate::linalg::{self, CsrMatrix, RsvdParams};
use crate::{Error, Result};

pub const DEFAULT_ENERGY_THRESHOLD: f64 = 0.8;
pub const DEFAULT_OVERSAMPLE: usize = 10;
pub const DEFAULT_POWER_ITERS: usize = 2;

/// Relative slack when comparing cumulative energy against `d`, so that
/// `0.1 + 0.1 + ...` style round-off cannot push `K` one step too far.
const ENERGY_SLACK: f64 = 1e-10;

/// Per-user bag-of-words counts: one row per post (timestamp order), one
/// column per distinct token.
#[derive(Debug, Clone, PartialEq)]
pub struct TextMatrix {
    pub user_id: String,
    /// Column index to token.
    pub vocab: Vec<String>,
    matrix: CsrMatrix,
}

impl TextMatrix {
    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn q(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn column_of(&self, token: &str) -> Option<usize> {
        self.vocab.iter().position(|t| t == token)
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.matrix.get(row, col) as u64
    }
}

/// Build the text matrix for one user's posts.
///
/// Null-text posts stay as zero rows, so they count towards `p`. Fails with
/// [`Error::NoContent`] when no post has a token.
pub fn build_text_matrix(posts: &[&TokenizedPost]) -> Result<TextMatrix> {
    let first = posts
        .first()
        .ok_or_else(|| Error::InvalidParameter("text matrix needs at least one post".into()))?;
    let user_id = first.user_id.clone();
    if let Some(other) = posts.iter().find(|p| p.user_id != user_id) {
        return Err(Error::InvalidParameter(format!(
            "posts from {} and {} mixed in one text matrix",
            user_id, other.user_id
        )));
    }

    let mut ordered: Vec<&TokenizedPost> = posts.to_vec();
    ordered.sort_by_key(|p| p.timestamp);

    let mut vocab: Vec<String> = Vec::new();
    let mut column: HashMap<&str, usize> = HashMap::new();
    let mut rows = Vec::with_capacity(ordered.len());
    for post in &ordered {
        let mut row = Vec::with_capacity(post.tokens.len());
        for tok in &post.tokens {
            let j = *column.entry(tok.as_str()).or_insert_with(|| {
                vocab.push(tok.clone());
                vocab.len() - 1
            });
            row.push((j, 1.0));
        }
        rows.push(row);
    }
    if vocab.is_empty() {
        return Err(Error::NoContent(user_id));
    }
    let matrix = CsrMatrix::from_rows(vocab.len(), rows)?;
    Ok(TextMatrix {
        user_id,
        vocab,
        matrix,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    /// Nonincreasing.
    pub values: Vec<f64>,
    /// `σ_j² / Σ σ_i²`.
    pub contributions: Vec<f64>,
}

impl SingularSpectrum {
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|s| s * s).sum()
    }
}

pub fn singular_values(m: &CsrMatrix) -> Result<SingularSpectrum> {
    let values = linalg::singular_values(m)?;
    let total: f64 = values.iter().map(|s| s * s).sum();
    let contributions = values
        .iter()
        .map(|s| if total > 0.0 { s * s / total } else { 0.0 })
        .collect();
    Ok(SingularSpectrum {
        values,
        contributions,
    })
}

fn check_energy_threshold(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "energy threshold d must be in [0,1], got {d}"
        )));
    }
    Ok(())
}

/// Smallest `K ≥ 1` whose leading components hold a `d` share of the energy.
pub fn components_needed(spectrum: &SingularSpectrum, d: f64) -> usize {
    let total = spectrum.energy();
    let target = d * total * (1.0 - ENERGY_SLACK);
    let mut acc = 0.0;
    for (j, s) in spectrum.values.iter().enumerate() {
        acc += s * s;
        if acc >= target {
            return j + 1;
        }
    }
    spectrum.values.len().max(1)
}

/// EM score `γ = 1 - K/p`.
pub fn exact_narrowness(m: &CsrMatrix, d: f64) -> Result<f64> {
    check_energy_threshold(d)?;
    if m.nrows() == 0 {
        return Err(Error::InvalidParameter("empty text matrix".into()));
    }
    let spectrum = singular_values(m)?;
    let k = components_needed(&spectrum, d);
    Ok(1.0 - k as f64 / m.nrows() as f64)
}

/// Default RM rank: `max(10, ⌈p/10⌉)` clamped to `min(p, q)`.
pub fn default_rank(p: usize, q: usize) -> usize {
    10usize.max(p.div_ceil(10)).min(p.min(q))
}

pub fn randomized_topk(
    m: &CsrMatrix,
    k: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    linalg::randomized_singular_values(
        m,
        RsvdParams {
            rank: k,
            oversample,
            power_iters,
        },
        seed,
    )
}

/// RM score `η`. `k = None` uses [`default_rank`]; a rank that covers
/// `min(p, q)` captures all the energy and gives exactly 1.
pub fn rm_narrowness(
    m: &CsrMatrix,
    k: Option<usize>,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<f64> {
    let full = m.nrows().min(m.ncols());
    if full == 0 {
        return Err(Error::InvalidParameter("empty text matrix".into()));
    }
    let k = k
        .unwrap_or_else(|| default_rank(m.nrows(), m.ncols()))
        .min(full);
    if k == 0 {
        return Err(Error::InvalidParameter("rank k must be >= 1".into()));
    }
    if k == full {
        return Ok(1.0);
    }
    let total = m.frobenius_sq();
    let top = randomized_topk(m, k, oversample, power_iters, seed)?;
    let captured: f64 = top.iter().map(|s| s * s).sum();
    Ok((captured / total).min(1.0))
}

/// Stable per-user seed: FNV-1a over the user id, folded with the global seed.
pub fn user_seed(user_id: &str, global_seed: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in global_seed.to_le_bytes().iter().chain(user_id.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "EM")]
    Exact,
    #[serde(rename = "RM")]
    Randomized,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "EM",
            Method::Randomized => "RM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NarrownessParams {
    Exact {
        d: f64,
    },
    Randomized {
        k: Option<usize>,
        oversample: usize,
        power_iters: usize,
        global_seed: u64,
    },
}

impl NarrownessParams {
    pub fn method(&self) -> Method {
        match self {
            NarrownessParams::Exact { .. } => Method::Exact,
            NarrownessParams::Randomized { .. } => Method::Randomized,
        }
    }

    fn describe(&self, p: usize, q: usize) -> String {
        match *self {
            NarrownessParams::Exact { d } => format!("d={d}"),
            NarrownessParams::Randomized {
                k,
                oversample,
                power_iters,
                ..
            } => {
                let k = k.unwrap_or_else(|| default_rank(p, q)).min(p.min(q));
                format!("k={k};s={oversample};t={power_iters}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarrownessScore {
    pub user_id: String,
    pub p: usize,
    pub q: usize,
    pub value: f64,
    pub params: NarrownessParams,
}

/// Score one user. A user with only null-text posts scores 1.0.
pub fn score_user(posts: &[&TokenizedPost], params: NarrownessParams) -> Result<NarrownessScore> {
    let user_id = posts.first().map(|p| p.user_id.clone()).unwrap_or_default();
    let tm = match build_text_matrix(posts) {
        Ok(tm) => tm,
        Err(Error::NoContent(_)) => {
            return Ok(NarrownessScore {
                user_id,
                p: posts.len(),
                q: 0,
                value: 1.0,
                params,
            })
        }
        Err(e) => return Err(e),
    };
    let value = match params {
        NarrownessParams::Exact { d } => exact_narrowness(tm.matrix(), d)?,
        NarrownessParams::Randomized {
            k,
            oversample,
            power_iters,
            global_seed,
        } => rm_narrowness(
            tm.matrix(),
            k,
            oversample,
            power_iters,
            user_seed(&user_id, global_seed),
        )?,
    };
    Ok(NarrownessScore {
        user_id,
        p: tm.p(),
        q: tm.q(),
        value,
        params,
    })
}

/// CSV with header `user_id,p,q,method,value,params`.
pub fn write_narrowness_csv<W: Write>(w: W, scores: &[NarrownessScore]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["user_id", "p", "q", "method", "value", "params"])?;
    for s in scores {
        out.write_record([
            s.user_id.as_str(),
            &s.p.to_string(),
            &s.q.to_string(),
            &s.params.method().to_string(),
            &s.value.to_string(),
            &s.params.describe(s.p, s.q),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn post(user: &str, t: i64, words: &str) -> TokenizedPost {
        let tokens: Vec<String> = words.split_whitespace().map(String::from).collect();
        TokenizedPost {
            user_id: user.into(),
            timestamp: t,
            is_null_text: tokens.is_empty(),
            tokens,
            mentions: vec![],
            hashtags: vec![],
        }
    }

    fn dense(rows: usize, cols: usize, data: &[f64]) -> CsrMatrix {
        CsrMatrix::from_dense(&DMatrix::from_row_slice(rows, cols, data))
    }

    #[test]
    fn text_matrix_counts() {
        let a = post("u", 2, "a");
        let b = post("u", 1, "a b");
        let tm = build_text_matrix(&[&a, &b]).unwrap();
        assert_eq!((tm.p(), tm.q()), (2, 2));
        assert_eq!(tm.vocab, vec!["a", "b"]);
        assert_eq!(
            tm.matrix().to_dense(),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0])
        );

        let c = post("u", 0, "a a a");
        let tm = build_text_matrix(&[&c]).unwrap();
        assert_eq!(tm.count(0, 0), 3);
        assert_eq!(tm.matrix().frobenius_sq(), 9.0);
    }

    #[test]
    fn text_matrix_repeated_rows_rank_one() {
        let posts: Vec<TokenizedPost> = (0..5).map(|t| post("u", t, "x y")).collect();
        let refs: Vec<&TokenizedPost> = posts.iter().collect();
        let tm = build_text_matrix(&refs).unwrap();
        let s = singular_values(tm.matrix()).unwrap();
        assert!(s.values[1] < 1e-12 * s.values[0]);
    }

    #[test]
    fn text_matrix_errors() {
        let n = post("u", 0, "");
        assert!(matches!(build_text_matrix(&[&n]), Err(Error::NoContent(_))));
        assert!(build_text_matrix(&[]).is_err());
        let other = post("v", 1, "x");
        assert!(build_text_matrix(&[&n, &other]).is_err());
    }

    #[test]
    fn null_text_rows_count_towards_p() {
        let a = post("u", 0, "x");
        let n = post("u", 1, "");
        let tm = build_text_matrix(&[&a, &n, &n.clone()]).unwrap();
        assert_eq!((tm.p(), tm.q()), (3, 1));
        assert!((exact_narrowness(tm.matrix(), 0.8).unwrap() - (1.0 - 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn spectrum_of_diagonal_and_identity() {
        let s = singular_values(&dense(2, 2, &[3.0, 0.0, 0.0, 1.0])).unwrap();
        assert!((s.values[0] - 3.0).abs() < 1e-12 && (s.values[1] - 1.0).abs() < 1e-12);
        assert!(
            (s.contributions[0] - 0.9).abs() < 1e-12 && (s.contributions[1] - 0.1).abs() < 1e-12
        );

        let id = CsrMatrix::from_dense(&DMatrix::identity(10, 10));
        let s = singular_values(&id).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(s.contributions.iter().all(|c| (c - 0.1).abs() < 1e-12));
    }

    #[test]
    fn exact_narrowness_values() {
        let rank1 = dense(
            5,
            3,
            &[1., 2., 0., 2., 4., 0., 1., 2., 0., 3., 6., 0., 1., 2., 0.],
        );
        for d in [0.0, 0.3, 0.8, 1.0] {
            assert_eq!(exact_narrowness(&rank1, d).unwrap(), 1.0 - 1.0 / 5.0);
        }
        let id = CsrMatrix::from_dense(&DMatrix::identity(10, 10));
        assert!((exact_narrowness(&id, 0.9).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(
            exact_narrowness(&dense(2, 2, &[3., 0., 0., 1.]), 0.9).unwrap(),
            0.5
        );
        assert!(exact_narrowness(&id, 1.5).is_err());
    }

    #[test]
    fn rm_narrowness_values() {
        let rank1 = dense(4, 3, &[1., 1., 0., 2., 2., 0., 0., 0., 0., 5., 5., 0.]);
        let eta = rm_narrowness(&rank1, Some(1), 10, 2, 3).unwrap();
        assert!((eta - 1.0).abs() < 1e-9);
        let top = randomized_topk(&rank1, 1, 10, 2, 3).unwrap();
        let exact = singular_values(&rank1).unwrap().values[0];
        assert!((top[0] - exact).abs() <= 1e-8 * exact);

        let id = CsrMatrix::from_dense(&DMatrix::identity(100, 100));
        let eta = rm_narrowness(&id, Some(10), 10, 2, 7).unwrap();
        assert!((eta - 0.1).abs() < 1e-9, "{eta}");
        assert!(randomized_topk(&id, 101, 10, 2, 7).is_err());
    }

    #[test]
    fn rm_identity_energy_bound() {
        let id = CsrMatrix::from_dense(&DMatrix::identity(100, 100));
        let s = randomized_topk(&id, 10, 10, 2, 11).unwrap();
        let e: f64 = s.iter().map(|v| v * v).sum();
        assert!((10.0 * (1.0 - 1e-2)..=10.0 + 1e-9).contains(&e), "{e}");
    }

    #[test]
    fn default_rank_heuristic() {
        assert_eq!(default_rank(50, 400), 10);
        assert_eq!(default_rank(101, 400), 11);
        assert_eq!(default_rank(300, 400), 30);
        assert_eq!(default_rank(5, 400), 5);
        assert_eq!(default_rank(500, 20), 20);
    }

    #[test]
    fn rm_clamped_rank_is_one() {
        let m = dense(3, 4, &[1., 0., 2., 0., 0., 1., 0., 3., 4., 0., 0., 1.]);
        assert_eq!(rm_narrowness(&m, None, 10, 2, 0).unwrap(), 1.0);
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(user_seed("alice", 7), user_seed("alice", 7));
        assert_ne!(user_seed("alice", 7), user_seed("alice", 8));
        assert_ne!(user_seed("alice", 7), user_seed("bob", 7));
    }

    #[test]
    fn score_null_text_user() {
        let n = post("u", 0, "");
        let s = score_user(&[&n, &n], NarrownessParams::Exact { d: 0.8 }).unwrap();
        assert_eq!((s.value, s.p, s.q), (1.0, 2, 0));
    }

    #[test]
    fn csv_export() {
        let a = post("u", 0, "x y");
        let scores = vec![
            score_user(&[&a], NarrownessParams::Exact { d: 0.8 }).unwrap(),
            score_user(
                &[&a],
                NarrownessParams::Randomized {
                    k: None,
                    oversample: 10,
                    power_iters: 2,
                    global_seed: 1,
                },
            )
            .unwrap(),
        ];
        let mut buf = Vec::new();
        write_narrowness_csv(&mut buf, &scores).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "user_id,p,q,method,value,params\nu,1,2,EM,0,d=0.8\nu,1,2,RM,1,k=1;s=10;t=2\n"
        );
    }

    fn small_matrix() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (1usize..8, 1usize..8).prop_flat_map(|(p, q)| {
            (
                Just(p),
                Just(q),
                proptest::collection::vec(0u8..4, p * q)
                    .prop_map(|v| v.into_iter().map(f64::from).collect()),
            )
        })
    }

    proptest! {
        #[test]
        fn narrowness_invariants((p, q, data) in small_matrix(), d1 in 0.0f64..1.0, d2 in 0.0f64..1.0, c in 0.5f64..20.0, seed in 0u64..1000) {
            prop_assume!(data.iter().any(|&v| v != 0.0));
            let m = dense(p, q, &data);
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let g_lo = exact_narrowness(&m, lo).unwrap();
            let g_hi = exact_narrowness(&m, hi).unwrap();
            prop_assert!(g_hi <= g_lo);
            prop_assert!((0.0..=1.0 - 1.0 / p as f64 + 1e-15).contains(&g_lo));

            // energy identity
            let s = singular_values(&m).unwrap();
            prop_assert!((s.energy() - m.frobenius_sq()).abs() <= 1e-8 * m.frobenius_sq());

            // permutation and scaling leave both scores unchanged
            let rows: Vec<usize> = (0..p).rev().collect();
            let cols: Vec<usize> = (0..q).map(|j| (j + seed as usize) % q).collect();
            let pm = m.permuted(&rows, &cols);
            prop_assert_eq!(exact_narrowness(&pm, lo).unwrap(), g_lo);
            prop_assert_eq!(exact_narrowness(&m.scaled(c), lo).unwrap(), g_lo);

            let k = 1 + (seed as usize) % p.min(q);
            let eta = rm_narrowness(&m, Some(k), 10, 2, seed).unwrap();
            prop_assert!(eta > 0.0 && eta <= 1.0);
            let eta_p = rm_narrowness(&pm, Some(k), 10, 2, seed).unwrap();
            let eta_s = rm_narrowness(&m.scaled(c), Some(k), 10, 2, seed).unwrap();
            // small matrices: the sketch covers min(p,q) columns, so the
            // randomized energies are exact up to round-off
            prop_assert!((eta - eta_p).abs() < 1e-9);
            prop_assert!((eta - eta_s).abs() < 1e-9);

            // randomized never exceeds exact
            let top = randomized_topk(&m, k, 10, 2, seed).unwrap();
            for (a, b) in top.iter().zip(&s.values) {
                prop_assert!(*a <= b + 1e-8 * (1.0 + b));
            }
            let rank = s.values.iter().filter(|&&v| v > 1e-9 * s.values[0]).count();
            if rank <= k {
                prop_assert!((eta - 1.0).abs() < 1e-9);
            }
        }
    }
}
