//! Structure discovery: score candidate groups (or factorizations of one
//! group) by how well the invariant-feature pipeline explains a dataset when
//! the data is read over each candidate.
//!
//! Every candidate is evaluated with the same seeds, splits, and penalty
//! grid, so scores are comparable across candidates and runs are
//! deterministic. A candidate that cannot be evaluated at all (wrong order,
//! no geometric action, a degenerate fit) is recorded with its failure note
//! and sorts after every scored candidate.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{featurize_with_action, Molecule};
use crate::error::{Error, Result};
use crate::features::SampleBatch;
use crate::group::GroupSpec;
use crate::regression::run_pipeline;

/// Invariance defects below this floor are treated as identically zero when
/// normalizing the invariance term, so roundoff-level defects cannot reorder
/// candidates.
pub const NU_FLOOR: f64 = 1e-20;

/// All ways to read an order-`n` axis as a cyclic group or a product of two
/// cyclic factors: `Z_n` first, then `Z_a x Z_b` with `a*b = n` and
/// `2 <= a <= b`, ascending in `a`.
pub fn factorizations(n: usize) -> Result<Vec<GroupSpec>> {
    if n == 0 {
        return Err(Error::contract("group order must be at least 1"));
    }
    let mut out = vec![GroupSpec::Cyclic(n)];
    let mut a = 2;
    while a * a <= n {
        if n % a == 0 {
            out.push(GroupSpec::Product(
                Box::new(GroupSpec::Cyclic(a)),
                Box::new(GroupSpec::Cyclic(n / a)),
            ));
        }
        a += 1;
    }
    Ok(out)
}

/// Supported groups up to a maximum order, one per isomorphism class:
/// cyclic groups ascending, then the Klein four-group, the symmetric group
/// on three letters, the quaternion group, and dihedral groups from `D4` up
/// (smaller dihedral groups coincide with groups already listed).
pub fn small_groups(max_order: usize) -> Result<Vec<GroupSpec>> {
    if max_order == 0 {
        return Err(Error::contract("maximum order must be at least 1"));
    }
    let mut out: Vec<GroupSpec> = (1..=max_order).map(GroupSpec::Cyclic).collect();
    if max_order >= 4 {
        out.push(GroupSpec::Klein4);
    }
    if max_order >= 6 {
        out.push(GroupSpec::S3);
    }
    if max_order >= 8 {
        out.push(GroupSpec::Quaternion8);
    }
    let mut n = 4;
    while 2 * n <= max_order {
        out.push(GroupSpec::Dihedral(n));
        n += 1;
    }
    if max_order >= 24 {
        out.push(GroupSpec::Octahedral);
    }
    Ok(out)
}

/// One candidate's outcome. Failed candidates carry a note instead of
/// numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateScore {
    pub spec: String,
    pub r2: Option<f64>,
    pub rotation_variance: Option<f64>,
    pub score: Option<f64>,
    pub note: Option<String>,
}

/// Ranked candidates for one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub schema: u32,
    /// "tensor" when candidates reindex the group axis, "molecule" when they
    /// refeaturize geometries.
    pub mode: String,
    pub alpha: f64,
    pub seeds: Vec<u64>,
    /// Best candidate first; unevaluable candidates last, alphabetically.
    pub candidates: Vec<CandidateScore>,
    /// Wall-clock for the whole run; excluded from determinism comparisons.
    pub wall_ms: u128,
}

impl DiscoveryReport {
    pub fn best(&self) -> Option<&CandidateScore> {
        self.candidates.first().filter(|c| c.score.is_some())
    }

    pub fn candidate(&self, spec: &str) -> Option<&CandidateScore> {
        self.candidates.iter().find(|c| c.spec == spec)
    }
}

struct Evaluated {
    spec: String,
    outcome: Result<(f64, f64)>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::contract(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Turns raw per-candidate outcomes into the ranked report.
fn rank(
    evaluated: Vec<Evaluated>,
    mode: &str,
    alpha: f64,
    seeds: &[u64],
    start: Instant,
) -> DiscoveryReport {
    let nu_max = evaluated
        .iter()
        .filter_map(|e| e.outcome.as_ref().ok().map(|&(_, nu)| nu))
        .fold(0.0f64, f64::max)
        .max(NU_FLOOR);
    let mut candidates: Vec<CandidateScore> = evaluated
        .into_iter()
        .map(|e| match e.outcome {
            Ok((r2, nu)) => CandidateScore {
                spec: e.spec,
                r2: Some(r2),
                rotation_variance: Some(nu),
                score: Some(alpha * r2 + (1.0 - alpha) * (1.0 - nu / nu_max)),
                note: None,
            },
            Err(err) => CandidateScore {
                spec: e.spec,
                r2: None,
                rotation_variance: None,
                score: None,
                note: Some(err.to_string()),
            },
        })
        .collect();
    candidates.sort_by(|a, b| match (a.score, b.score) {
        (Some(x), Some(y)) => {
            y.partial_cmp(&x).expect("scores are finite").then_with(|| a.spec.cmp(&b.spec))
        }
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.spec.cmp(&b.spec),
    });
    DiscoveryReport {
        schema: 1,
        mode: mode.to_string(),
        alpha,
        seeds: seeds.to_vec(),
        candidates,
        wall_ms: start.elapsed().as_millis(),
    }
}

fn evaluate_batch(
    batch: &SampleBatch,
    y: &[f64],
    seeds: &[u64],
    lambda_grid: &[f64],
) -> Result<(f64, f64)> {
    let (report, _) = run_pipeline(batch, y, "target", seeds, lambda_grid)?;
    Ok((report.mean_test_r2, report.mean_rotation_variance))
}

/// Scores candidates by reinterpreting the group axis of an existing batch.
/// Candidates whose order differs from the batch's group axis fail and are
/// recorded as such.
pub fn discover_tensor(
    batch: &SampleBatch,
    y: &[f64],
    candidates: &[GroupSpec],
    seeds: &[u64],
    lambda_grid: &[f64],
    alpha: f64,
) -> Result<DiscoveryReport> {
    check_alpha(alpha)?;
    if candidates.is_empty() {
        return Err(Error::contract("candidate list is empty"));
    }
    let start = Instant::now();
    let evaluated = candidates
        .iter()
        .map(|spec| Evaluated {
            spec: spec.to_string(),
            outcome: batch
                .reinterpret(spec)
                .and_then(|b| evaluate_batch(&b, y, seeds, lambda_grid)),
        })
        .collect();
    Ok(rank(evaluated, "tensor", alpha, seeds, start))
}

/// Scores candidates by refeaturizing molecules under each candidate's
/// geometric action. Candidates without one (products) fail and are recorded
/// as such.
pub fn discover_molecules(
    molecules: &[Molecule],
    y: &[f64],
    candidates: &[GroupSpec],
    seeds: &[u64],
    lambda_grid: &[f64],
    alpha: f64,
) -> Result<DiscoveryReport> {
    check_alpha(alpha)?;
    if candidates.is_empty() {
        return Err(Error::contract("candidate list is empty"));
    }
    if molecules.len() != y.len() {
        return Err(Error::contract(format!(
            "{} molecules but {} target entries",
            molecules.len(),
            y.len()
        )));
    }
    let start = Instant::now();
    let evaluated = candidates
        .iter()
        .map(|spec| {
            let outcome = molecules
                .iter()
                .map(|m| featurize_with_action(m, spec))
                .collect::<Result<Vec<_>>>()
                .and_then(SampleBatch::from_samples)
                .and_then(|b| evaluate_batch(&b, y, seeds, lambda_grid));
            Evaluated { spec: spec.to_string(), outcome }
        })
        .collect();
    Ok(rank(evaluated, "molecule", alpha, seeds, start))
}
