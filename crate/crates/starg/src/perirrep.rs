//! Per-irrep spectral analysis: how much of a tensor, and how much of a
//! regression target, lives in each irreducible channel.
//!
//! The power of an irrep in a tensor is the Plancherel-weighted squared norm
//! of its Fourier blocks, so the powers of all irreps sum to the squared
//! Frobenius norm and are unchanged by group translations. The per-channel
//! regression fits one ridge model per (target, irrep) pair on that irrep's
//! per-row powers alone, reusing the split, standardization, and penalty
//! protocol of the main pipeline, which makes the per-channel scores
//! directly comparable.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DesignMatrix, SampleBatch};
use crate::gtensor::{fourier_blocks, GTensor};
use crate::irreps::IrrepTable;
use crate::parallel::par_map;
use crate::regression::{r2_score, select_lambda, split_indices};

/// Columns whose population deviation falls below this are dropped before
/// the per-channel fit, matching the main feature pipeline.
const DEGENERATE_COL_TOL: f64 = 1e-8;

/// A channel whose mean test score falls at or below this is treated as
/// carrying no signal when forming ratios.
pub const RATIO_FLOOR: f64 = 0.02;

/// Total power of each irrep in a tensor: the Plancherel-weighted squared
/// block norms, summed over the tensor's entries. Ordered like
/// `table.irreps`.
pub fn per_irrep_power(t: &GTensor, table: &Arc<IrrepTable>) -> Result<Vec<f64>> {
    let fb = fourier_blocks(t, table)?;
    Ok((0..table.irreps.len())
        .map(|k| {
            let mut total = 0.0;
            for i in 0..t.rows {
                for j in 0..t.cols {
                    total += fb.block_power(k, i, j);
                }
            }
            total
        })
        .collect())
}

/// Scores of every (target, irrep) channel regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerIrrepReport {
    pub schema: u32,
    pub group: String,
    /// Irrep labels, in table order.
    pub irreps: Vec<String>,
    pub targets: Vec<String>,
    /// Mean over seeds of the held-out score; `r2[t][k]` is target `t`
    /// fitted on irrep `k` alone.
    pub r2: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
    /// Wall-clock for the whole run; excluded from determinism comparisons.
    pub wall_ms: u128,
}

impl PerIrrepReport {
    /// Score of one channel by labels.
    pub fn score(&self, target: &str, irrep: &str) -> Option<f64> {
        let t = self.targets.iter().position(|s| s == target)?;
        let k = self.irreps.iter().position(|s| s == irrep)?;
        Some(self.r2[t][k])
    }

    /// Ratio of two channel scores for a target, `None` when either label is
    /// missing or the denominator carries no signal (at or below
    /// [`RATIO_FLOOR`]).
    pub fn ratio(&self, target: &str, numerator: &str, denominator: &str) -> Option<f64> {
        let num = self.score(target, numerator)?;
        let den = self.score(target, denominator)?;
        if den <= RATIO_FLOOR {
            None
        } else {
            Some(num / den)
        }
    }

    /// The irrep label with the highest score for a target.
    pub fn argmax(&self, target: &str) -> Option<&str> {
        let t = self.targets.iter().position(|s| s == target)?;
        let mut best = 0;
        for k in 1..self.irreps.len() {
            if self.r2[t][k] > self.r2[t][best] {
                best = k;
            }
        }
        Some(&self.irreps[best])
    }

    /// One row per target, one column per irrep.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("target");
        for label in &self.irreps {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (t, name) in self.targets.iter().enumerate() {
            out.push_str(name);
            for v in &self.r2[t] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Standardization fitted on training rows: kept columns, means, deviations.
struct ColumnScaler {
    keep: Vec<usize>,
    mu: Vec<f64>,
    sd: Vec<f64>,
}

impl ColumnScaler {
    fn fit(raw: &[Vec<f64>], idx: &[usize], width: usize) -> ColumnScaler {
        let n = idx.len() as f64;
        let mut keep = Vec::new();
        let mut mu = Vec::new();
        let mut sd = Vec::new();
        for c in 0..width {
            let mean = idx.iter().map(|&i| raw[i][c]).sum::<f64>() / n;
            let var = idx.iter().map(|&i| (raw[i][c] - mean).powi(2)).sum::<f64>() / n;
            let dev = var.sqrt();
            if dev >= DEGENERATE_COL_TOL {
                keep.push(c);
                mu.push(mean);
                sd.push(dev.max(1.0));
            }
        }
        ColumnScaler { keep, mu, sd }
    }

    fn design(&self, raw: &[Vec<f64>], idx: &[usize]) -> DesignMatrix {
        let cols = self.keep.len() + 1;
        let mut data = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            data.push(1.0);
            for (slot, &c) in self.keep.iter().enumerate() {
                data.push((raw[i][c] - self.mu[slot]) / self.sd[slot]);
            }
        }
        DesignMatrix { rows: idx.len(), cols, data }
    }
}

/// Fits every (target, irrep) channel: each sample is reduced to its per-row
/// powers under one irrep, standardized on the training part, and fitted
/// with the shared split/penalty protocol. A channel whose powers are all
/// degenerate falls back to an intercept-only predictor, which scores at or
/// below zero unless the target is constant.
pub fn per_irrep_analysis(
    batch: &SampleBatch,
    targets: &[(String, Vec<f64>)],
    seeds: &[u64],
    lambda_grid: &[f64],
) -> Result<PerIrrepReport> {
    if targets.is_empty() {
        return Err(Error::contract("need at least one target"));
    }
    for (name, y) in targets {
        if y.len() != batch.len() {
            return Err(Error::contract(format!(
                "target {name:?} has {} entries for {} samples",
                y.len(),
                batch.len()
            )));
        }
    }
    if seeds.is_empty() {
        return Err(Error::contract("need at least one seed"));
    }
    let start = Instant::now();
    let table = Arc::new(crate::irreps::irrep_table(batch.group.clone())?);
    let n_irreps = table.irreps.len();
    let n_feat = batch.n_feat();

    // powers[s][k][i]: per-row power of irrep k in sample s.
    let powers: Vec<Vec<Vec<f64>>> = par_map(batch.samples.iter().collect(), |sample| {
        let fb = fourier_blocks(sample, &table)?;
        Ok((0..n_irreps)
            .map(|k| (0..n_feat).map(|i| fb.block_power(k, i, 0)).collect())
            .collect::<Vec<Vec<f64>>>())
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut r2 = vec![vec![0.0; n_irreps]; targets.len()];
    for &seed in seeds {
        let split = split_indices(batch.len(), seed)?;
        for k in 0..n_irreps {
            let raw: Vec<Vec<f64>> = powers.iter().map(|p| p[k].clone()).collect();
            let scaler = ColumnScaler::fit(&raw, &split.train, n_feat);
            for (t, (_, y)) in targets.iter().enumerate() {
                let y_train: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
                let y_val: Vec<f64> = split.val.iter().map(|&i| y[i]).collect();
                let y_test: Vec<f64> = split.test.iter().map(|&i| y[i]).collect();
                let score = if scaler.keep.is_empty() {
                    let mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
                    r2_score(&y_test, &vec![mean; y_test.len()])
                } else {
                    let x_train = scaler.design(&raw, &split.train);
                    let x_val = scaler.design(&raw, &split.val);
                    let x_test = scaler.design(&raw, &split.test);
                    let (model, _) =
                        select_lambda(&x_train, &y_train, &x_val, &y_val, lambda_grid)?;
                    r2_score(&y_test, &model.predict(&x_test)?)
                };
                r2[t][k] += score / seeds.len() as f64;
            }
        }
    }

    Ok(PerIrrepReport {
        schema: 1,
        group: batch.group.spec.to_string(),
        irreps: table.irreps.iter().map(|i| i.label.clone()).collect(),
        targets: targets.iter().map(|(n, _)| n.clone()).collect(),
        r2,
        seeds: seeds.to_vec(),
        wall_ms: start.elapsed().as_millis(),
    })
}
