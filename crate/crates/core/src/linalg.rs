//! Sparse matrices and singular values.
//!
//! Exact singular values come from a dense SVD. The randomized variant
//! follows the Halko–Martinsson–Tropp scheme: a Gaussian sketch of the
//! range, `t` rounds of QR-stabilized power iteration, then a small dense
//! SVD of the projection `Qᵀ A`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Compressed sparse row matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row `(column, value)` lists. Zeros are dropped and
    /// duplicate columns within a row are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= ncols {
                    return Err(Error::InvalidParameter(format!(
                        "column {c} out of range for {ncols} columns"
                    )));
                }
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        let mut m = CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        };
        m.prune_zeros();
        Ok(m)
    }

    pub fn from_dense(dense: &DMatrix<f64>) -> Self {
        let rows = (0..dense.nrows())
            .map(|i| {
                (0..dense.ncols())
                    .filter(|&j| dense[(i, j)] != 0.0)
                    .map(|j| (j, dense[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.ncols(), rows).expect("columns in range")
    }

    fn prune_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr.push(indices.len());
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `A · X` for dense `X` with `ncols` rows.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(x.nrows(), self.ncols);
        let l = x.ncols();
        let mut out = DMatrix::zeros(self.nrows, l);
        for c in 0..l {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.nrows {
                let mut acc = 0.0;
                for (j, v) in self.row(i) {
                    acc += v * xc[j];
                }
                oc[i] = acc;
            }
        }
        out
    }

    /// `Aᵀ · X` for dense `X` with `nrows` rows.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(x.nrows(), self.nrows);
        let l = x.ncols();
        let mut out = DMatrix::zeros(self.ncols, l);
        for c in 0..l {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.nrows {
                let xi = xc[i];
                if xi == 0.0 {
                    continue;
                }
                for (j, v) in self.row(i) {
                    oc[j] += v * xi;
                }
            }
        }
        out
    }

    /// Same matrix with rows and columns reordered: row `i` of the result is
    /// row `row_perm[i]` of `self`, likewise for columns.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let mut inv_col = vec![0; self.ncols];
        for (new, &old) in col_perm.iter().enumerate() {
            inv_col[old] = new;
        }
        let rows = row_perm
            .iter()
            .map(|&old| self.row(old).map(|(j, v)| (inv_col[j], v)).collect())
            .collect();
        Self::from_rows(self.ncols, rows).expect("permutation keeps columns in range")
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= c);
        m.prune_zeros();
        m
    }
}

fn svd_values(m: DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = m
        .try_svd(false, false, f64::EPSILON, 100_000)
        .ok_or(Error::SvdNonConvergence)?;
    let mut values: Vec<f64> = svd.singular_values.iter().map(|v| v.abs()).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdNonConvergence);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// All `min(p, q)` singular values, nonincreasing.
pub fn singular_values(a: &CsrMatrix) -> Result<Vec<f64>> {
    svd_values(a.to_dense())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsvdParams {
    pub rank: usize,
    pub oversample: usize,
    pub power_iters: usize,
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Approximate top-`rank` singular values of `a`.
///
/// Every returned value is bounded above by the corresponding exact singular
/// value, since they are the singular values of an orthogonal projection of
/// `a`. Fully determined by `seed`.
pub fn randomized_singular_values(
    a: &CsrMatrix,
    params: RsvdParams,
    seed: u64,
) -> Result<Vec<f64>> {
    let max_rank = a.nrows().min(a.ncols());
    if params.rank == 0 || params.rank > max_rank {
        return Err(Error::InvalidParameter(format!(
            "rank {} outside 1..={max_rank}",
            params.rank
        )));
    }
    let sketch = (params.rank + params.oversample).min(max_rank);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(a.ncols(), sketch, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });

    let mut q = orthonormal_basis(a.mul_dense(&omega));
    for _ in 0..params.power_iters {
        let z = orthonormal_basis(a.tr_mul_dense(&q));
        q = orthonormal_basis(a.mul_dense(&z));
    }
    // B = Qᵀ A, formed as (Aᵀ Q)ᵀ
    let b = a.tr_mul_dense(&q).transpose();
    let mut values = svd_values(b)?;
    values.truncate(params.rank);
    Ok(values)
}
