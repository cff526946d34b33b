//! Invariant feature extraction for batches of group-structured tensors.
//!
//! A sample is an `n_feat x 1 x n` tensor over one finite group; a batch is a
//! list of samples sharing shape and group. [`fit_features`] maps a batch to a
//! dense design matrix whose columns are built from spectral quantities that
//! the left group action cannot change (Fourier powers, tube norms, singular
//! values), plus raw readouts of rows that are constant across the group axis.
//! The frozen extraction state lives in [`FeatureParams`] so held-out data can
//! be mapped through [`apply_features`] without refitting.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{build_group, FiniteGroup, GroupSpec};
use crate::gtensor::{fourier_blocks, GTensor};
use crate::irreps::IrrepTable;
use crate::linalg::{jacobi_svd, CMat};
use crate::parallel::par_map;
use crate::svd::starg_svd;

/// Rows whose variance over the group axis stays below this fraction of the
/// largest row variance are treated as invariant readouts.
const INVARIANT_ROW_TOL: f64 = 1e-8;

/// Columns whose standard deviation over the batch falls below this are
/// dropped as degenerate before standardization.
const DEGENERATE_COL_TOL: f64 = 1e-8;

/// Smallest singular value (relative to the largest) still counted when
/// forming the condition number of an unfolded sample.
const CONDITION_FLOOR: f64 = 1e-12;

/// Cap on the number of non-invariant rows that get per-irrep power columns.
const MAX_POWER_ROWS: usize = 14;

/// A batch of `n_feat x 1 x n` tensors over a common group.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub samples: Vec<GTensor>,
    pub group: Arc<FiniteGroup>,
}

impl SampleBatch {
    /// Wraps a non-empty list of single-column tensors with uniform shape and
    /// group.
    pub fn from_samples(samples: Vec<GTensor>) -> Result<SampleBatch> {
        let first = samples
            .first()
            .ok_or_else(|| Error::contract("sample batch needs at least one sample"))?;
        if first.cols != 1 {
            return Err(Error::contract(format!(
                "batch samples must have one column, got {}",
                first.cols
            )));
        }
        let rows = first.rows;
        let group = first.group.clone();
        for (i, s) in samples.iter().enumerate() {
            if s.rows != rows || s.cols != 1 {
                return Err(Error::contract(format!(
                    "sample {} has shape {}x{}, expected {}x1",
                    i, s.rows, s.cols, rows
                )));
            }
            if s.group.spec != group.spec {
                return Err(Error::contract(format!(
                    "sample {} lives over {}, expected {}",
                    i, s.group.spec, group.spec
                )));
            }
        }
        Ok(SampleBatch { samples, group })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_feat(&self) -> usize {
        self.samples.first().map_or(0, |s| s.rows)
    }

    pub fn group_order(&self) -> usize {
        self.group.order
    }

    /// Re-reads the same numeric payload as a batch over a different group of
    /// equal order. The group axis keeps its indexing; only the product and
    /// inverse structure attached to it changes.
    pub fn reinterpret(&self, spec: &GroupSpec) -> Result<SampleBatch> {
        if spec.order() != self.group.order {
            return Err(Error::contract(format!(
                "cannot reinterpret a batch over {} (order {}) as {} (order {})",
                self.group.spec,
                self.group.order,
                spec,
                spec.order()
            )));
        }
        let group = Arc::new(build_group(spec)?);
        let samples = self
            .samples
            .iter()
            .map(|s| GTensor {
                rows: s.rows,
                cols: s.cols,
                group: group.clone(),
                data: s.data.clone(),
            })
            .collect();
        Ok(SampleBatch { samples, group })
    }

    /// Applies the left action of element `g` to every sample.
    pub fn left_translate(&self, g: usize) -> SampleBatch {
        let samples = self
            .samples
            .iter()
            .map(|s| crate::gtensor::left_action(g, s))
            .collect();
        SampleBatch { samples, group: self.group.clone() }
    }

    /// Selects samples by index, preserving order and duplicates.
    pub fn subset(&self, idx: &[usize]) -> SampleBatch {
        let samples = idx.iter().map(|&i| self.samples[i].clone()).collect();
        SampleBatch { samples, group: self.group.clone() }
    }
}

/// Dense row-major matrix of extracted features; column 0 is the intercept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DesignMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Frozen extraction state: reshape dimensions, row classification, surviving
/// columns, and the standardization applied to them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureParams {
    /// Reshape of the leading rows into a `p x q` tensor for the tube-norm
    /// block.
    pub p: usize,
    pub q: usize,
    /// Number of tube norms emitted, `min(p, q)`.
    pub n_svd: usize,
    /// Per-row flag: true when the row was constant across the group axis on
    /// the first training sample.
    pub inv_mask: Vec<bool>,
    /// Non-invariant rows, in row order.
    pub eq_idx: Vec<usize>,
    /// How many of `eq_idx` receive per-irrep power columns.
    pub k: usize,
    /// Indices of raw columns that survived the degeneracy filter.
    pub keep: Vec<usize>,
    /// Per-kept-column mean and deviation scale used for standardization.
    pub mu: Vec<f64>,
    pub sd: Vec<f64>,
}

impl FeatureParams {
    pub fn n_feat(&self) -> usize {
        self.inv_mask.len()
    }

    /// Columns of the finished design matrix, intercept included.
    pub fn n_columns(&self) -> usize {
        self.keep.len() + 1
    }
}

/// Picks the `p x q` reshape of `n_feat` rows used for the tube-norm block:
/// maximize `min(p, q)` subject to `p * q <= n_feat`, break ties toward the
/// most square shape, then toward the smaller `p`.
pub fn best_reshape(n_feat: usize) -> (usize, usize) {
    let mut best = (1, 1);
    let mut best_key = (0usize, usize::MAX, usize::MAX);
    let mut p = 1;
    while p * p <= n_feat {
        for q in p..=n_feat {
            if p * q > n_feat {
                break;
            }
            let key = (p.min(q), q - p, p);
            if key.0 > best_key.0
                || (key.0 == best_key.0 && (key.1, key.2) < (best_key.1, best_key.2))
            {
                best_key = key;
                best = (p, q);
            }
        }
        p += 1;
    }
    best
}

fn population_mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn check_table(batch: &SampleBatch, table: &Arc<IrrepTable>) -> Result<()> {
    if table.spec != batch.group.spec {
        return Err(Error::contract(format!(
            "irrep table is for {} but the batch lives over {}",
            table.spec, batch.group.spec
        )));
    }
    Ok(())
}

/// Raw (pre-standardization) feature columns for one batch. The layout is
/// fixed: per-row group means, per-row group deviations, per-irrep total
/// power, per-(row, irrep) power for the first `k` non-invariant rows, tube
/// norms of the reshaped sample, identity-slice readouts of invariant rows,
/// and four spectral statistics of the row-by-group unfolding.
fn raw_matrix(
    batch: &SampleBatch,
    table: &Arc<IrrepTable>,
    p: usize,
    q: usize,
    n_svd: usize,
    power_rows: &[usize],
    inv_rows: &[usize],
) -> Result<(Vec<f64>, usize)> {
    let n_feat = batch.n_feat();
    let n = batch.group_order();
    let n_irreps = table.num_irreps();
    let width = 2 * n_feat + n_irreps + power_rows.len() * n_irreps + n_svd + inv_rows.len() + 4;
    let e = batch.group.identity;

    let rows: Vec<Result<Vec<f64>>> = par_map(batch.samples.iter().collect(), |sample| {
        let mut out = Vec::with_capacity(width);
        let hat = fourier_blocks(sample, table)?;
        for r in 0..n_feat {
            out.push(population_mean_std(sample.tube(r, 0)).0);
        }
        for r in 0..n_feat {
            out.push(population_mean_std(sample.tube(r, 0)).1);
        }
        for k in 0..n_irreps {
            let mut total = 0.0;
            for r in 0..n_feat {
                total += hat.block_power(k, r, 0);
            }
            out.push(total);
        }
        for &r in power_rows {
            for k in 0..n_irreps {
                out.push(hat.block_power(k, r, 0));
            }
        }
        let reshaped = GTensor::from_fn(p, q, sample.group.clone(), |i, j, g| {
            sample.at(i * q + j, 0, g)
        });
        let dec = starg_svd(&reshaped, table)?;
        for t in 0..n_svd {
            out.push(dec.tube_norms[t]);
        }
        for &r in inv_rows {
            out.push(sample.at(r, 0, e));
        }
        let unfolded = CMat::from_fn(n_feat, n, |r, g| {
            num_complex::Complex64::new(sample.at(r, 0, g), 0.0)
        });
        let spectrum = jacobi_svd(&unfolded)?;
        let sigma = &spectrum.sigma;
        let nuclear: f64 = sigma.iter().sum();
        let spectral = sigma.first().copied().unwrap_or(0.0);
        let condition = if spectral <= 0.0 {
            0.0
        } else {
            let floor = CONDITION_FLOOR * spectral;
            let smallest = sigma.iter().rev().find(|&&s| s > floor).copied().unwrap_or(spectral);
            spectral / smallest
        };
        let entropy = if nuclear <= 0.0 {
            0.0
        } else {
            -sigma
                .iter()
                .map(|&s| s / nuclear)
                .filter(|&w| w > 0.0)
                .map(|w| w * w.ln())
                .sum::<f64>()
        };
        out.extend_from_slice(&[nuclear, spectral, condition, entropy]);
        debug_assert_eq!(out.len(), width);
        for v in &mut out {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        Ok(out)
    });

    let mut data = Vec::with_capacity(batch.len() * width);
    for row in rows {
        data.extend_from_slice(&row?);
    }
    Ok((data, width))
}

fn standardize(
    raw: &[f64],
    rows: usize,
    width: usize,
    keep: &[usize],
    mu: &[f64],
    sd: &[f64],
) -> DesignMatrix {
    let cols = keep.len() + 1;
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        data.push(1.0);
        for (c, &j) in keep.iter().enumerate() {
            data.push((raw[i * width + j] - mu[c]) / sd[c]);
        }
    }
    DesignMatrix { rows, cols, data }
}

/// Fits the extraction state on a training batch and returns its design
/// matrix. Row classification comes from the first sample, the degeneracy
/// filter and standardization from column statistics over the whole batch.
pub fn fit_features(
    batch: &SampleBatch,
    table: &Arc<IrrepTable>,
) -> Result<(DesignMatrix, FeatureParams)> {
    check_table(batch, table)?;
    if batch.len() < 2 {
        return Err(Error::contract(format!(
            "feature fitting needs at least two samples, got {}",
            batch.len()
        )));
    }
    let n_feat = batch.n_feat();
    if n_feat == 0 {
        return Err(Error::contract("feature fitting needs at least one row"));
    }

    let first = &batch.samples[0];
    let row_vars: Vec<f64> = (0..n_feat)
        .map(|r| {
            let (_, sd) = population_mean_std(first.tube(r, 0));
            sd * sd
        })
        .collect();
    let max_var = row_vars.iter().cloned().fold(0.0, f64::max);
    let inv_mask: Vec<bool> = row_vars.iter().map(|&v| v <= INVARIANT_ROW_TOL * max_var).collect();
    let eq_idx: Vec<usize> =
        (0..n_feat).filter(|&r| !inv_mask[r]).collect();
    let k = eq_idx.len().min(MAX_POWER_ROWS);
    let inv_rows: Vec<usize> = (0..n_feat).filter(|&r| inv_mask[r]).collect();

    let (p, q) = best_reshape(n_feat);
    let n_svd = p.min(q);

    let (raw, width) = raw_matrix(batch, table, p, q, n_svd, &eq_idx[..k], &inv_rows)?;

    let n = batch.len();
    let mut keep = Vec::new();
    let mut mu = Vec::new();
    let mut sd = Vec::new();
    for j in 0..width {
        let col: Vec<f64> = (0..n).map(|i| raw[i * width + j]).collect();
        let (mean, dev) = population_mean_std(&col);
        if dev >= DEGENERATE_COL_TOL {
            keep.push(j);
            mu.push(mean);
            sd.push(dev.max(1.0));
        }
    }
    if keep.is_empty() {
        return Err(Error::contract(
            "every feature column is degenerate on this batch",
        ));
    }

    let params = FeatureParams { p, q, n_svd, inv_mask, eq_idx, k, keep, mu, sd };
    let design = standardize(&raw, n, width, &params.keep, &params.mu, &params.sd);
    Ok((design, params))
}

/// Maps a batch through a frozen extraction state. The batch must match the
/// row count the state was fitted on.
pub fn apply_features(
    batch: &SampleBatch,
    table: &Arc<IrrepTable>,
    params: &FeatureParams,
) -> Result<DesignMatrix> {
    check_table(batch, table)?;
    if batch.is_empty() {
        return Err(Error::contract("cannot featurize an empty batch"));
    }
    if batch.n_feat() != params.n_feat() {
        return Err(Error::contract(format!(
            "batch has {} rows but the extraction state was fitted on {}",
            batch.n_feat(),
            params.n_feat()
        )));
    }
    let inv_rows: Vec<usize> =
        (0..params.n_feat()).filter(|&r| params.inv_mask[r]).collect();
    let (raw, width) = raw_matrix(
        batch,
        table,
        params.p,
        params.q,
        params.n_svd,
        &params.eq_idx[..params.k],
        &inv_rows,
    )?;
    Ok(standardize(&raw, batch.len(), width, &params.keep, &params.mu, &params.sd))
}
