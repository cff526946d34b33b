//! Singular value decomposition over the group algebra.
//!
//! A tensor factors as `A = U * S * V^T` (products over the group algebra),
//! with `U` and `V` having orthonormal columns in the algebra sense and `S`
//! f-diagonal: only its (t, t) tubes are nonzero. The factorization is
//! computed blockwise in the Fourier domain; within each irrep the singular
//! values are grouped into runs of length `d` so that dropping trailing tubes
//! drops exactly the smallest values of every block, which is what makes the
//! truncated reconstruction optimal among tube-rank-k competitors.
//!
//! Factors of a real tensor must themselves be real, which couples blocks of
//! conjugate irrep pairs. Each pair is decomposed once and the partner block
//! is filled in by the conjugation intertwiner; quaternionic blocks carry the
//! constraint inside a single irrep, forcing doubly degenerate singular
//! values whose vector pairs are rebuilt explicitly.

use crate::error::{Error, Result};
use crate::gtensor::{
    fourier_blocks, inverse_fourier, same_group, starg_product, starg_transpose, FourierBlocks,
    GTensor,
};
use crate::irreps::{Conjugation, IrrepTable};
use crate::linalg::{jacobi_svd, CMat};
use crate::parallel::par_map_idx;
use num_complex::Complex64;
use std::sync::Arc;

/// Orthonormality tolerance for rebuilt quaternionic singular vector pairs.
const PAIR_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct StarGSVD {
    /// Left factor, `rows x r` where `r = min(rows, cols)` of the input.
    pub u: GTensor,
    /// F-diagonal core, `r x r`.
    pub sigma: GTensor,
    /// Right factor, `cols x r`; reconstruction uses its transpose.
    pub v: GTensor,
    /// Weighted norm of each singular tube of `sigma`, non-increasing.
    pub tube_norms: Vec<f64>,
    /// Singular values of each irrep block, non-increasing per irrep.
    pub per_irrep_sigmas: Vec<Vec<f64>>,
    pub table: Arc<IrrepTable>,
}

struct BlockFactors {
    u: CMat,
    s: CMat,
    v: CMat,
    sigmas: Vec<f64>,
}

fn diag_real(vals: &[f64]) -> CMat {
    let mut m = CMat::zeros(vals.len(), vals.len());
    for (i, &x) in vals.iter().enumerate() {
        m[(i, i)] = Complex64::new(x, 0.0);
    }
    m
}

fn eye_kron(copies: usize, c: &CMat) -> CMat {
    CMat::identity(copies).kron(c)
}

/// The canonical 2x2 antisymmetric unitary every quaternionic intertwiner of
/// dimension two equals up to a global phase, which the intertwining relation
/// does not see.
fn symplectic_form(c: &CMat) -> Result<CMat> {
    if c.rows != 2 || c.cols != 2 {
        return Err(Error::contract(format!(
            "structured real factorization supports quaternionic irreps only in dimension 2, \
             got an intertwiner of dimension {}",
            c.rows
        )));
    }
    let off = c.get(0, 1).norm();
    if c.get(0, 0).norm() > PAIR_TOL
        || c.get(1, 1).norm() > PAIR_TOL
        || (c.get(0, 1) + c.get(1, 0)).norm() > PAIR_TOL
        || (off - 1.0).abs() > PAIR_TOL
    {
        return Err(Error::numerical(
            "quaternionic intertwiner is not antisymmetric unitary".to_string(),
        ));
    }
    let mut j = CMat::zeros(2, 2);
    j[(0, 1)] = Complex64::new(1.0, 0.0);
    j[(1, 0)] = Complex64::new(-1.0, 0.0);
    Ok(j)
}

/// Decomposes one self-conjugate quaternionic block. Singular values come in
/// equal pairs; each odd column is rebuilt from its partner so the block
/// satisfies the conjugation symmetry a real factor requires.
fn quaternionic_factors(block: &CMat, c: &CMat, l: usize, m: usize) -> Result<BlockFactors> {
    let j = symplectic_form(c)?;
    let jl = eye_kron(l, &j);
    let jm = eye_kron(m, &j);
    let svd = jacobi_svd(block)?;
    let r2 = l.min(m) * 2;
    let mut u = svd.u;
    let mut v = svd.v;
    let mut sigmas = Vec::with_capacity(r2);
    for t in 0..r2 / 2 {
        let bar = 0.5 * (svd.sigma[2 * t] + svd.sigma[2 * t + 1]);
        sigmas.push(bar);
        sigmas.push(bar);
        for (mat, jmat) in [(&mut u, &jl), (&mut v, &jm)] {
            let rows = mat.rows;
            let col: Vec<Complex64> = (0..rows).map(|i| mat.get(i, 2 * t)).collect();
            for i in 0..rows {
                let mut acc = Complex64::new(0.0, 0.0);
                for p in 0..rows {
                    acc += jmat.get(i, p) * col[p].conj();
                }
                mat[(i, 2 * t + 1)] = -acc;
            }
        }
    }
    for mat in [&u, &v] {
        let gram = mat.hermitian().mul(mat);
        let resid = gram.sub(&CMat::identity(gram.rows)).max_abs();
        if resid > PAIR_TOL {
            return Err(Error::numerical(format!(
                "quaternionic singular vector pairing lost orthogonality (residual {resid:.3e}); \
                 the block spectrum is degenerate beyond its forced pairing"
            )));
        }
    }
    Ok(BlockFactors { u, s: diag_real(&sigmas), v, sigmas })
}

/// Computes the decomposition of `a` using the irreps in `t`.
pub fn starg_svd(a: &GTensor, t: &Arc<IrrepTable>) -> Result<StarGSVD> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::contract("cannot decompose an empty tensor"));
    }
    if !same_group(&a.group, &t.group) {
        return Err(Error::contract(format!(
            "tensor over {} decomposed with a table for {}",
            a.group.spec, t.spec
        )));
    }
    for (k, conj) in t.conjugation.iter().enumerate() {
        if matches!(conj, Conjugation::ComplexRealType) {
            return Err(Error::contract(format!(
                "irrep {} ({}) is a conjugate-symmetric pair product; structured real \
                 factorizations decline this case",
                k, t.irreps[k].label
            )));
        }
    }
    let (l, m) = (a.rows, a.cols);
    let r = l.min(m);
    let fb = fourier_blocks(a, t)?;
    let nir = t.irreps.len();

    // Each conjugate pair is decomposed once, at its lower index.
    let primary: Vec<Result<Option<BlockFactors>>> = par_map_idx(nir, |k| match &t.conjugation[k] {
        Conjugation::PairedWith { partner, .. } if *partner < k => Ok(None),
        Conjugation::Quaternionic { c } => {
            Ok(Some(quaternionic_factors(&fb.blocks[k], c, l, m)?))
        }
        Conjugation::RealEntries => {
            // The block of a real tensor under a real-entried irrep is real
            // up to roundoff; projecting it keeps the factors of numerically
            // tiny blocks from picking up arbitrary phases.
            let svd = jacobi_svd(&fb.blocks[k].real_part())?;
            let sigmas = svd.sigma.clone();
            Ok(Some(BlockFactors { u: svd.u, s: diag_real(&svd.sigma), v: svd.v, sigmas }))
        }
        _ => {
            let svd = jacobi_svd(&fb.blocks[k])?;
            let sigmas = svd.sigma.clone();
            Ok(Some(BlockFactors { u: svd.u, s: diag_real(&svd.sigma), v: svd.v, sigmas }))
        }
    });

    let mut ublocks: Vec<Option<CMat>> = (0..nir).map(|_| None).collect();
    let mut sblocks: Vec<Option<CMat>> = (0..nir).map(|_| None).collect();
    let mut vblocks: Vec<Option<CMat>> = (0..nir).map(|_| None).collect();
    let mut per_irrep_sigmas: Vec<Vec<f64>> = vec![Vec::new(); nir];
    for (k, item) in primary.into_iter().enumerate() {
        let Some(factors) = item? else { continue };
        if let Conjugation::PairedWith { partner, c } = &t.conjugation[k] {
            // Mirror through the intertwiner so the partner blocks carry the
            // conjugate of these, which is what real factor tensors satisfy.
            let cl = eye_kron(l, c);
            let cr = eye_kron(r, c);
            let cm = eye_kron(m, c);
            ublocks[*partner] = Some(cl.hermitian().mul(&factors.u.conj()).mul(&cr));
            sblocks[*partner] = Some(cr.hermitian().mul(&factors.s).mul(&cr));
            vblocks[*partner] = Some(cm.hermitian().mul(&factors.v.conj()).mul(&cr));
            per_irrep_sigmas[*partner] = factors.sigmas.clone();
        }
        ublocks[k] = Some(factors.u);
        sblocks[k] = Some(factors.s);
        vblocks[k] = Some(factors.v);
        per_irrep_sigmas[k] = factors.sigmas;
    }

    let unwrap_all = |blocks: Vec<Option<CMat>>| -> Vec<CMat> {
        blocks.into_iter().map(|b| b.expect("every irrep block is filled")).collect()
    };
    let n = t.group.order as f64;
    let mut tube_norms = vec![0.0f64; r];
    for (k, irrep) in t.irreps.iter().enumerate() {
        let d = irrep.dim;
        let w = d as f64 / n;
        for (tube, norm) in tube_norms.iter_mut().enumerate() {
            for a_idx in 0..d {
                let s = per_irrep_sigmas[k][tube * d + a_idx];
                *norm += w * s * s;
            }
        }
    }
    for norm in &mut tube_norms {
        *norm = norm.sqrt();
    }

    let u = inverse_fourier(&FourierBlocks {
        rows: l,
        cols: r,
        table: t.clone(),
        blocks: unwrap_all(ublocks),
    })?;
    let sigma = inverse_fourier(&FourierBlocks {
        rows: r,
        cols: r,
        table: t.clone(),
        blocks: unwrap_all(sblocks),
    })?;
    let v = inverse_fourier(&FourierBlocks {
        rows: m,
        cols: r,
        table: t.clone(),
        blocks: unwrap_all(vblocks),
    })?;
    Ok(StarGSVD { u, sigma, v, tube_norms, per_irrep_sigmas, table: t.clone() })
}

impl StarGSVD {
    /// Number of singular tubes carried by the factors.
    pub fn num_tubes(&self) -> usize {
        self.tube_norms.len()
    }

    /// `U * S * V^T` over the group algebra.
    pub fn reconstruct(&self) -> Result<GTensor> {
        let us = starg_product(&self.u, &self.sigma, &self.table)?;
        starg_product(&us, &starg_transpose(&self.v), &self.table)
    }

    /// Keeps the leading `k` singular tubes, `1 <= k <= num_tubes`.
    pub fn truncate(&self, k: usize) -> Result<StarGSVD> {
        let r = self.num_tubes();
        if k == 0 || k > r {
            return Err(Error::contract(format!(
                "truncation rank {k} outside 1..={r}"
            )));
        }
        let per_irrep_sigmas = self
            .per_irrep_sigmas
            .iter()
            .zip(&self.table.irreps)
            .map(|(s, irrep)| s[..k * irrep.dim].to_vec())
            .collect();
        Ok(StarGSVD {
            u: self.u.slice_cols(k),
            sigma: self.sigma.slice_rows(k).slice_cols(k),
            v: self.v.slice_cols(k),
            tube_norms: self.tube_norms[..k].to_vec(),
            per_irrep_sigmas,
            table: self.table.clone(),
        })
    }

    /// Frobenius norm of the residual left by keeping `k` tubes, in closed
    /// form from the tube norms; `k = 0` gives the norm of the whole tensor.
    pub fn truncation_error(&self, k: usize) -> f64 {
        self.tube_norms
            .iter()
            .skip(k)
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }

    /// Number of tubes whose norm exceeds `tol` relative to the largest; the
    /// zero tensor has rank zero.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.tube_norms.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.tube_norms.iter().filter(|&&s| s > tol * top).count()
    }
}

/// Truncates a decomposition to its leading `k` tubes.
pub fn truncate(svd: &StarGSVD, k: usize) -> Result<StarGSVD> {
    svd.truncate(k)
}

/// Residual norm of the rank-`k` truncation in closed form.
pub fn truncation_error(svd: &StarGSVD, k: usize) -> f64 {
    svd.truncation_error(k)
}

/// Numerical tube rank at relative tolerance `tol`.
pub fn starg_rank(svd: &StarGSVD, tol: f64) -> usize {
    svd.rank(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtensor::{frobenius_norm, identity_tensor, starg_product_direct};
    use crate::linalg::sym_eigen;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shared_table(s: &str) -> Arc<IrrepTable> {
        IrrepTable::shared(&s.parse().unwrap()).unwrap()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, t: &Arc<IrrepTable>) -> GTensor {
        GTensor::from_fn(rows, cols, t.group.clone(), |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn recon_err(a: &GTensor, svd: &StarGSVD) -> f64 {
        frobenius_norm(&(a - &svd.reconstruct().unwrap())) / frobenius_norm(a).max(1e-300)
    }

    /// Mass of sigma outside its diagonal tubes.
    fn off_tube_mass(s: &GTensor) -> f64 {
        let mut acc = 0.0;
        for i in 0..s.rows {
            for j in 0..s.cols {
                if i == j {
                    continue;
                }
                acc += s.tube(i, j).iter().map(|x| x * x).sum::<f64>();
            }
        }
        acc.sqrt()
    }

    fn orthonormality_err(q: &GTensor, t: &Arc<IrrepTable>) -> f64 {
        let gram = starg_product(&starg_transpose(q), q, t).unwrap();
        frobenius_norm(&(&gram - &identity_tensor(q.cols, &t.group)))
    }

    #[test]
    fn identity_tensor_decomposes_to_unit_tubes() {
        let t = shared_table("S3");
        let eye = identity_tensor(3, &t.group);
        let svd = starg_svd(&eye, &t).unwrap();
        for s in &svd.tube_norms {
            assert!((s - 1.0).abs() <= 1e-12);
        }
        assert!(recon_err(&eye, &svd) <= 1e-12);
        assert_eq!(svd.rank(1e-8), 3);
        assert!(svd.truncation_error(3) <= 1e-12);
    }

    #[test]
    fn reconstruction_and_orthonormality_across_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in ["Z4", "Z12", "D4", "S3", "Q8", "K4", "Z6xZ4", "O"] {
            let t = shared_table(s);
            for (rows, cols) in [(3, 2), (2, 4)] {
                let a = random_tensor(&mut rng, rows, cols, &t);
                let svd = starg_svd(&a, &t).unwrap();
                assert!(recon_err(&a, &svd) <= 1e-9, "{s} {rows}x{cols} reconstruction");
                assert!(orthonormality_err(&svd.u, &t) <= 1e-9, "{s} left factor");
                assert!(orthonormality_err(&svd.v, &t) <= 1e-9, "{s} right factor");
                assert!(off_tube_mass(&svd.sigma) <= 1e-10, "{s} core is f-diagonal");
                for w in svd.tube_norms.windows(2) {
                    assert!(w[0] >= w[1] - 1e-12, "{s} tube norms ordered");
                }
            }
        }
    }

    #[test]
    fn block_singular_values_match_gram_eigenvalue_oracle() {
        let t = shared_table("D4");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_tensor(&mut rng, 3, 3, &t);
        let svd = starg_svd(&a, &t).unwrap();
        let fb = fourier_blocks(&a, &t).unwrap();
        for (k, block) in fb.blocks.iter().enumerate() {
            let gram = block.hermitian().mul(block);
            // Real embedding of the Hermitian Gram matrix; every eigenvalue
            // shows up twice.
            let n = gram.rows;
            let mut emb = vec![0.0; (2 * n) * (2 * n)];
            for i in 0..n {
                for j in 0..n {
                    let z = gram.get(i, j);
                    emb[i * 2 * n + j] = z.re;
                    emb[i * 2 * n + (n + j)] = -z.im;
                    emb[(n + i) * 2 * n + j] = z.im;
                    emb[(n + i) * 2 * n + (n + j)] = z.re;
                }
            }
            let (eigs, _) = sym_eigen(&emb, 2 * n).unwrap();
            let mut expect: Vec<f64> = eigs
                .iter()
                .rev()
                .step_by(2)
                .map(|&e| e.max(0.0).sqrt())
                .collect();
            expect.truncate(svd.per_irrep_sigmas[k].len());
            for (got, want) in svd.per_irrep_sigmas[k].iter().zip(&expect) {
                assert!((got - want).abs() <= 1e-9, "irrep {k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn truncation_error_matches_closed_form_and_decreases() {
        let t = shared_table("Z12");
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_tensor(&mut rng, 4, 3, &t);
        let svd = starg_svd(&a, &t).unwrap();
        assert!((svd.truncation_error(0) - frobenius_norm(&a)).abs() <= 1e-9);
        let mut prev = f64::INFINITY;
        for k in 1..=svd.num_tubes() {
            let trunc = svd.truncate(k).unwrap();
            let err = frobenius_norm(&(&a - &trunc.reconstruct().unwrap()));
            let closed = svd.truncation_error(k);
            assert!(
                (err - closed).abs() <= 1e-8 * frobenius_norm(&a),
                "k={k}: measured {err} vs closed form {closed}"
            );
            assert!(err <= prev + 1e-12);
            prev = err;
        }
        assert!(svd.truncate(0).is_err());
        assert!(svd.truncate(svd.num_tubes() + 1).is_err());
    }

    #[test]
    fn truncation_beats_random_competitors_of_equal_rank() {
        let t = shared_table("D4");
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_tensor(&mut rng, 4, 3, &t);
        let svd = starg_svd(&a, &t).unwrap();
        for k in 1..=2usize {
            let best = frobenius_norm(&(&a - &svd.truncate(k).unwrap().reconstruct().unwrap()));
            for trial in 0..40 {
                let x = random_tensor(&mut rng, 4, k, &t);
                let y = random_tensor(&mut rng, k, 3, &t);
                let competitor = starg_product_direct(&x, &y).unwrap();
                let err = frobenius_norm(&(&a - &competitor));
                assert!(best <= err + 1e-9, "k={k} trial={trial}: {best} > {err}");
            }
        }
    }

    #[test]
    fn quaternionic_blocks_average_kramers_pairs_and_stay_real() {
        let t = shared_table("Q8");
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_tensor(&mut rng, 3, 3, &t);
        let svd = starg_svd(&a, &t).unwrap();
        assert!(recon_err(&a, &svd) <= 1e-9);
        let quat = t
            .conjugation
            .iter()
            .position(|c| matches!(c, Conjugation::Quaternionic { .. }))
            .unwrap();
        let sig = &svd.per_irrep_sigmas[quat];
        assert_eq!(sig.len() % 2, 0);
        for pair in sig.chunks(2) {
            assert!((pair[0] - pair[1]).abs() <= 1e-10, "{pair:?}");
        }
        assert!(orthonormality_err(&svd.u, &t) <= 1e-9);
    }

    #[test]
    fn conjugate_pair_products_are_declined() {
        let t = shared_table("Q8xQ8");
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let a = random_tensor(&mut rng, 1, 1, &t);
        let err = starg_svd(&a, &t).unwrap_err();
        assert!(err.to_string().contains("decline"), "{err}");
    }

    #[test]
    fn wide_quaternionic_intertwiners_are_declined() {
        let t = shared_table("Q8xO");
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let a = random_tensor(&mut rng, 1, 1, &t);
        let err = starg_svd(&a, &t).unwrap_err();
        assert!(err.to_string().contains("dimension"), "{err}");
    }

    #[test]
    fn product_tensors_have_bounded_rank() {
        let t = shared_table("S3");
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let x = random_tensor(&mut rng, 4, 2, &t);
        let y = random_tensor(&mut rng, 2, 4, &t);
        let a = starg_product_direct(&x, &y).unwrap();
        let svd = starg_svd(&a, &t).unwrap();
        assert_eq!(svd.rank(1e-8), 2);
        let zero = GTensor::zeros(3, 3, t.group.clone());
        let zsvd = starg_svd(&zero, &t).unwrap();
        assert_eq!(zsvd.rank(1e-8), 0);
        assert!(zsvd.truncation_error(0) <= 1e-300);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn decomposition_is_exact_on_random_shapes(
            seed in 0u64..1u64 << 48,
            rows in 1usize..4,
            cols in 1usize..4,
            which in 0usize..3,
        ) {
            let t = shared_table(["Z3", "S3", "D4"][which]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tensor(&mut rng, rows, cols, &t);
            let svd = starg_svd(&a, &t).unwrap();
            prop_assert!(recon_err(&a, &svd) <= 1e-9);
            prop_assert!(off_tube_mass(&svd.sigma) <= 1e-9);
            let k = rows.min(cols);
            let full = svd.truncate(k).unwrap();
            prop_assert!(recon_err(&a, &full) <= 1e-9);
        }
    }
}
