//! Tensors over a group algebra: third-order real arrays whose last axis is
//! indexed by group elements, with scalar multiplication given by group
//! convolution.
//!
//! The matrix-like product of two such tensors is evaluated per irrep in the
//! Fourier domain (block matrix products) and transformed back; a literal
//! convolution implementation is kept alongside as the oracle the Fourier
//! path is tested against.

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::irreps::IrrepTable;
use crate::linalg::CMat;
use crate::parallel::par_map_idx;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Index, IndexMut, Sub};
use std::path::Path;
use std::sync::Arc;

/// Relative bound on the imaginary remainder of an inverse transform whose
/// blocks are supposed to carry a real tensor.
const IMAG_TOL: f64 = 1e-9;

/// A rows x cols x n real tensor over a finite group of order n, stored
/// row-major with the group index fastest.
#[derive(Debug, Clone)]
pub struct GTensor {
    pub rows: usize,
    pub cols: usize,
    pub group: Arc<FiniteGroup>,
    pub data: Vec<f64>,
}

pub(crate) fn same_group(a: &Arc<FiniteGroup>, b: &Arc<FiniteGroup>) -> bool {
    Arc::ptr_eq(a, b) || a.spec == b.spec
}

impl GTensor {
    pub fn zeros(rows: usize, cols: usize, group: Arc<FiniteGroup>) -> GTensor {
        let data = vec![0.0; rows * cols * group.order];
        GTensor { rows, cols, group, data }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        group: Arc<FiniteGroup>,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> GTensor {
        let n = group.order;
        let mut data = Vec::with_capacity(rows * cols * n);
        for i in 0..rows {
            for j in 0..cols {
                for g in 0..n {
                    data.push(f(i, j, g));
                }
            }
        }
        GTensor { rows, cols, group, data }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, g: usize) -> usize {
        (i * self.cols + j) * self.group.order + g
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, g: usize) -> f64 {
        self.data[self.offset(i, j, g)]
    }

    /// The length-n tube at matrix position (i, j).
    pub fn tube(&self, i: usize, j: usize) -> &[f64] {
        let start = self.offset(i, j, 0);
        &self.data[start..start + self.group.order]
    }

    /// Copy of the leading `count` rows. Panics if `count > rows`.
    pub fn slice_rows(&self, count: usize) -> GTensor {
        assert!(count <= self.rows, "row slice out of range");
        GTensor {
            rows: count,
            cols: self.cols,
            group: self.group.clone(),
            data: self.data[..count * self.cols * self.group.order].to_vec(),
        }
    }

    /// Copy of the leading `count` columns. Panics if `count > cols`.
    pub fn slice_cols(&self, count: usize) -> GTensor {
        assert!(count <= self.cols, "column slice out of range");
        GTensor::from_fn(self.rows, count, self.group.clone(), |i, j, g| self.at(i, j, g))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Serializes as `{"dims": [rows, cols, n], "group": "<spec>", "data": [...]}`.
    pub fn to_json_string(&self) -> Result<String> {
        let file = TensorFile {
            dims: [self.rows, self.cols, self.group.order],
            group: self.group.spec.to_string(),
            data: self.data.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json_str(s: &str) -> Result<GTensor> {
        let file: TensorFile = serde_json::from_str(s)?;
        let spec = file.group.parse()?;
        let group = Arc::new(crate::group::build_group(&spec)?);
        let [rows, cols, n] = file.dims;
        if n != group.order {
            return Err(Error::contract(format!(
                "tensor group dimension {n} does not match the order {} of {}",
                group.order, file.group
            )));
        }
        if file.data.len() != rows * cols * n {
            return Err(Error::contract(format!(
                "tensor data length {} does not match dims {rows}x{cols}x{n}",
                file.data.len()
            )));
        }
        if !file.data.iter().all(|v| v.is_finite()) {
            return Err(Error::contract("tensor data contains non-finite entries"));
        }
        Ok(GTensor { rows, cols, group, data: file.data })
    }

    pub fn write_json_file(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json_string()?)?)
    }

    pub fn read_json_file(path: &Path) -> Result<GTensor> {
        GTensor::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct TensorFile {
    dims: [usize; 3],
    group: String,
    data: Vec<f64>,
}

impl Index<(usize, usize, usize)> for GTensor {
    type Output = f64;
    fn index(&self, (i, j, g): (usize, usize, usize)) -> &f64 {
        &self.data[(i * self.cols + j) * self.group.order + g]
    }
}

impl IndexMut<(usize, usize, usize)> for GTensor {
    fn index_mut(&mut self, (i, j, g): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(i * self.cols + j) * self.group.order + g]
    }
}

fn zip_entries(a: &GTensor, b: &GTensor, f: impl Fn(f64, f64) -> f64) -> GTensor {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols), "tensor shapes must match");
    assert!(same_group(&a.group, &b.group), "tensor groups must match");
    GTensor {
        rows: a.rows,
        cols: a.cols,
        group: a.group.clone(),
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    }
}

impl Add for &GTensor {
    type Output = GTensor;
    fn add(self, other: &GTensor) -> GTensor {
        zip_entries(self, other, |x, y| x + y)
    }
}

impl Sub for &GTensor {
    type Output = GTensor;
    fn sub(self, other: &GTensor) -> GTensor {
        zip_entries(self, other, |x, y| x - y)
    }
}

/// Identity element of the tensor product: I(i,i,e) = 1, zero elsewhere.
pub fn identity_tensor(m: usize, group: &Arc<FiniteGroup>) -> GTensor {
    let mut t = GTensor::zeros(m, m, group.clone());
    for i in 0..m {
        t[(i, i, group.identity)] = 1.0;
    }
    t
}

pub fn frobenius_norm(a: &GTensor) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Left translation of the group axis: result(i,j,h) = a(i,j, g^{-1} h).
pub fn left_action(g: usize, a: &GTensor) -> GTensor {
    let ginv = a.group.inv[g];
    let group = a.group.clone();
    GTensor::from_fn(a.rows, a.cols, group.clone(), |i, j, h| a.at(i, j, group.mult[ginv][h]))
}

/// Right translation of the group axis: result(i,j,h) = a(i,j, h g).
pub fn right_action(g: usize, a: &GTensor) -> GTensor {
    let group = a.group.clone();
    GTensor::from_fn(a.rows, a.cols, group.clone(), |i, j, h| a.at(i, j, group.mult[h][g]))
}

/// Per-irrep Fourier transform of a tensor: for each irrep of dimension d,
/// a (rows*d) x (cols*d) complex matrix whose (i,j) block of size d x d is
/// `sum_g a(i,j,g) rho(g)`.
#[derive(Debug, Clone)]
pub struct FourierBlocks {
    pub rows: usize,
    pub cols: usize,
    pub table: Arc<IrrepTable>,
    pub blocks: Vec<CMat>,
}

impl FourierBlocks {
    /// Energy the (i, j) block of one irrep contributes to the squared
    /// Frobenius norm of the tensor: `(d/n) * ||block(i,j)||_F^2`.
    pub fn block_power(&self, irrep: usize, i: usize, j: usize) -> f64 {
        let d = self.table.irreps[irrep].dim;
        let n = self.table.group.order as f64;
        let m = &self.blocks[irrep];
        let mut acc = 0.0;
        for a in 0..d {
            for b in 0..d {
                acc += m.get(i * d + a, j * d + b).norm_sqr();
            }
        }
        acc * d as f64 / n
    }

    /// Total weighted block energy; equals the squared Frobenius norm of the
    /// underlying tensor by the transform's isometry.
    pub fn total_power(&self) -> f64 {
        let n = self.table.group.order as f64;
        self.blocks
            .iter()
            .zip(&self.table.irreps)
            .map(|(m, irrep)| {
                let fro2: f64 = (0..m.rows)
                    .flat_map(|r| (0..m.cols).map(move |c| (r, c)))
                    .map(|(r, c)| m.get(r, c).norm_sqr())
                    .sum();
                fro2 * irrep.dim as f64 / n
            })
            .sum()
    }
}

pub fn fourier_blocks(a: &GTensor, t: &Arc<IrrepTable>) -> Result<FourierBlocks> {
    if !same_group(&a.group, &t.group) {
        return Err(Error::contract(format!(
            "tensor over {} transformed with a table for {}",
            a.group.spec, t.spec
        )));
    }
    let n = a.group.order;
    let (rows, cols) = (a.rows, a.cols);
    let table = t.clone();
    let blocks = par_map_idx(t.irreps.len(), |k| {
        let irrep = &table.irreps[k];
        let d = irrep.dim;
        let mut m = CMat::zeros(rows * d, cols * d);
        for i in 0..rows {
            for j in 0..cols {
                let tube = a.tube(i, j);
                for (g, &w) in tube.iter().enumerate().take(n) {
                    if w == 0.0 {
                        continue;
                    }
                    let rho = &irrep.mats[g];
                    for p in 0..d {
                        for q in 0..d {
                            m[(i * d + p, j * d + q)] += rho.get(p, q) * w;
                        }
                    }
                }
            }
        }
        m
    });
    Ok(FourierBlocks { rows, cols, table: t.clone(), blocks })
}

/// Inverts the per-irrep transform:
/// `a(i,j,g) = sum_rho (d/n) Tr[block_rho(i,j) rho(g)^H]`.
///
/// The result of a transform of a real tensor (or of block operations that
/// preserve its conjugation symmetry) is real up to roundoff; the imaginary
/// remainder is checked against `1e-9` relative and discarded.
pub fn inverse_fourier(b: &FourierBlocks) -> Result<GTensor> {
    let t = &b.table;
    let n = t.group.order;
    let (rows, cols) = (b.rows, b.cols);
    for (k, irrep) in t.irreps.iter().enumerate() {
        let m = &b.blocks[k];
        if m.rows != rows * irrep.dim || m.cols != cols * irrep.dim {
            return Err(Error::contract(format!(
                "block {k} has shape {}x{} but the tensor dims imply {}x{}",
                m.rows,
                m.cols,
                rows * irrep.dim,
                cols * irrep.dim
            )));
        }
    }
    let entries: Vec<Vec<Complex64>> = par_map_idx(rows * cols, |pair| {
        let (i, j) = (pair / cols, pair % cols);
        let mut vals = vec![Complex64::new(0.0, 0.0); n];
        for (k, irrep) in t.irreps.iter().enumerate() {
            let d = irrep.dim;
            let weight = d as f64 / n as f64;
            let m = &b.blocks[k];
            for (g, val) in vals.iter_mut().enumerate() {
                let rho = &irrep.mats[g];
                let mut tr = Complex64::new(0.0, 0.0);
                for p in 0..d {
                    for q in 0..d {
                        tr += m.get(i * d + p, j * d + q) * rho.get(p, q).conj();
                    }
                }
                *val += tr * weight;
            }
        }
        vals
    });
    let mut data = Vec::with_capacity(rows * cols * n);
    let mut total_sq = 0.0f64;
    let mut imag_sq = 0.0f64;
    for vals in &entries {
        for z in vals {
            total_sq += z.norm_sqr();
            imag_sq += z.im * z.im;
            data.push(z.re);
        }
    }
    if imag_sq.sqrt() > IMAG_TOL * total_sq.sqrt() {
        return Err(Error::numerical(format!(
            "inverse transform left an imaginary remainder of {:.3e} (relative {:.3e}); \
             blocks do not describe a real tensor",
            imag_sq.sqrt(),
            imag_sq.sqrt() / total_sq.sqrt()
        )));
    }
    Ok(GTensor { rows, cols, group: t.group.clone(), data })
}

/// Tensor product via the Fourier domain: transforms both factors, multiplies
/// blockwise per irrep, and transforms back.
pub fn starg_product(a: &GTensor, b: &GTensor, t: &Arc<IrrepTable>) -> Result<GTensor> {
    if a.cols != b.rows {
        return Err(Error::contract(format!(
            "inner dimensions differ: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if !same_group(&a.group, &b.group) || !same_group(&a.group, &t.group) {
        return Err(Error::contract("tensor product requires matching groups"));
    }
    let fa = fourier_blocks(a, t)?;
    let fb = fourier_blocks(b, t)?;
    let blocks = par_map_idx(t.irreps.len(), |k| fa.blocks[k].mul(&fb.blocks[k]));
    inverse_fourier(&FourierBlocks { rows: a.rows, cols: b.cols, table: t.clone(), blocks })
}

/// Literal convolution evaluation of the tensor product:
/// `(a*b)(i,j,c) = sum_k sum_x a(i,k,x) b(k,j,x^{-1}c)`. Quadratic in the
/// group order; kept as the independent reference the Fourier path must match.
pub fn starg_product_direct(a: &GTensor, b: &GTensor) -> Result<GTensor> {
    if a.cols != b.rows {
        return Err(Error::contract(format!(
            "inner dimensions differ: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if !same_group(&a.group, &b.group) {
        return Err(Error::contract("tensor product requires matching groups"));
    }
    let group = a.group.clone();
    let n = group.order;
    let (rows, cols, inner) = (a.rows, b.cols, a.cols);
    let data: Vec<Vec<f64>> = par_map_idx(rows * cols, |pair| {
        let (i, j) = (pair / cols, pair % cols);
        let mut tube = vec![0.0f64; n];
        for k in 0..inner {
            let ta = a.tube(i, k);
            let tb = b.tube(k, j);
            for (x, &va) in ta.iter().enumerate() {
                if va == 0.0 {
                    continue;
                }
                let xinv = group.inv[x];
                for (c, out) in tube.iter_mut().enumerate() {
                    *out += va * tb[group.mult[xinv][c]];
                }
            }
        }
        tube
    });
    Ok(GTensor { rows, cols, group, data: data.into_iter().flatten().collect() })
}

/// Transpose over the group algebra: result(i,j,g) = a(j,i,g^{-1}). In the
/// Fourier domain this is the Hermitian transpose of every block.
pub fn starg_transpose(a: &GTensor) -> GTensor {
    let group = a.group.clone();
    GTensor::from_fn(a.cols, a.rows, group.clone(), |i, j, g| a.at(j, i, group.inv[g]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shared_table(s: &str) -> Arc<IrrepTable> {
        IrrepTable::shared(&s.parse().unwrap()).unwrap()
    }

    fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, t: &Arc<IrrepTable>) -> GTensor {
        GTensor::from_fn(rows, cols, t.group.clone(), |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn rel_err(a: &GTensor, b: &GTensor) -> f64 {
        frobenius_norm(&(a - b)) / frobenius_norm(b).max(1e-300)
    }

    #[test]
    fn z2_convolution_by_hand() {
        let t = shared_table("Z2");
        let a = GTensor::from_fn(1, 1, t.group.clone(), |_, _, g| [2.0, 3.0][g]);
        let b = GTensor::from_fn(1, 1, t.group.clone(), |_, _, g| [5.0, 7.0][g]);
        let direct = starg_product_direct(&a, &b).unwrap();
        assert_eq!(direct.at(0, 0, 0), 2.0 * 5.0 + 3.0 * 7.0);
        assert_eq!(direct.at(0, 0, 1), 2.0 * 7.0 + 3.0 * 5.0);
        let fourier = starg_product(&a, &b, &t).unwrap();
        assert!(rel_err(&fourier, &direct) <= 1e-12);
    }

    #[test]
    fn cyclic_product_is_circular_convolution_of_tubes() {
        let t = shared_table("Z12");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_tensor(&mut rng, 1, 1, &t);
        let b = random_tensor(&mut rng, 1, 1, &t);
        let prod = starg_product(&a, &b, &t).unwrap();
        for c in 0..12 {
            let mut expect = 0.0;
            for x in 0..12 {
                expect += a.at(0, 0, x) * b.at(0, 0, (12 + c - x) % 12);
            }
            assert!((prod.at(0, 0, c) - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn fourier_blocks_of_cyclic_tensor_are_dft_values() {
        let t = shared_table("Z6");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_tensor(&mut rng, 2, 2, &t);
        let fb = fourier_blocks(&a, &t).unwrap();
        for k in 0..6 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut expect = Complex64::new(0.0, 0.0);
                    for g in 0..6 {
                        let angle = 2.0 * std::f64::consts::PI * (k * g) as f64 / 6.0;
                        expect += Complex64::from_polar(a.at(i, j, g), angle);
                    }
                    assert!((fb.blocks[k].get(i, j) - expect).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_tensor_blocks_and_products() {
        let t = shared_table("D4");
        let eye = identity_tensor(3, &t.group);
        assert!((frobenius_norm(&eye) - 3f64.sqrt()).abs() <= 1e-15);
        let fb = fourier_blocks(&eye, &t).unwrap();
        for (k, irrep) in t.irreps.iter().enumerate() {
            let expect = CMat::identity(3 * irrep.dim);
            assert!(fb.blocks[k].sub(&expect).max_abs() <= 1e-12, "irrep {k}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_tensor(&mut rng, 3, 2, &t);
        let left = starg_product(&eye, &a, &t).unwrap();
        assert!(rel_err(&left, &a) <= 1e-12);
        let eye2 = identity_tensor(2, &t.group);
        let right = starg_product(&a, &eye2, &t).unwrap();
        assert!(rel_err(&right, &a) <= 1e-12);
    }

    #[test]
    fn round_trip_and_parseval_across_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for s in ["Z1", "Z4", "Z12", "D4", "S3", "Q8", "K4", "Z6xZ4", "O", "S3xZ2"] {
            let t = shared_table(s);
            let a = random_tensor(&mut rng, 3, 2, &t);
            let fb = fourier_blocks(&a, &t).unwrap();
            let back = inverse_fourier(&fb).unwrap();
            assert!(rel_err(&back, &a) <= 1e-10, "{s} round trip");
            let fro2 = frobenius_norm(&a).powi(2);
            assert!(
                (fb.total_power() - fro2).abs() <= 1e-10 * fro2,
                "{s} energy identity: {} vs {fro2}",
                fb.total_power()
            );
        }
    }

    #[test]
    fn zero_tensor_has_zero_blocks_and_products() {
        let t = shared_table("Q8");
        let zero = GTensor::zeros(2, 2, t.group.clone());
        let fb = fourier_blocks(&zero, &t).unwrap();
        assert!(fb.blocks.iter().all(|m| m.max_abs() == 0.0));
        assert_eq!(frobenius_norm(&inverse_fourier(&fb).unwrap()), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_tensor(&mut rng, 2, 2, &t);
        let prod = starg_product_direct(&a, &zero).unwrap();
        assert_eq!(frobenius_norm(&prod), 0.0);
    }

    #[test]
    fn fourier_path_matches_direct_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for s in ["Z4", "D4", "S3", "Q8", "K4", "Z6xZ4", "O"] {
            let t = shared_table(s);
            for _ in 0..5 {
                let a = random_tensor(&mut rng, 2, 3, &t);
                let b = random_tensor(&mut rng, 3, 2, &t);
                let fast = starg_product(&a, &b, &t).unwrap();
                let slow = starg_product_direct(&a, &b).unwrap();
                assert!(rel_err(&fast, &slow) <= 1e-10, "{s}");
            }
        }
    }

    #[test]
    fn transpose_properties() {
        let t = shared_table("D4");
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_tensor(&mut rng, 2, 3, &t);
        let att = starg_transpose(&starg_transpose(&a));
        assert_eq!(att.data, a.data);
        let eye = identity_tensor(3, &t.group);
        assert_eq!(starg_transpose(&eye).data, eye.data);

        let fa = fourier_blocks(&a, &t).unwrap();
        let fat = fourier_blocks(&starg_transpose(&a), &t).unwrap();
        for k in 0..t.irreps.len() {
            assert!(fat.blocks[k].sub(&fa.blocks[k].hermitian()).max_abs() <= 1e-12);
        }

        let b = random_tensor(&mut rng, 3, 2, &t);
        let lhs = starg_transpose(&starg_product(&a, &b, &t).unwrap());
        let rhs = starg_product(&starg_transpose(&b), &starg_transpose(&a), &t).unwrap();
        assert!(rel_err(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn associativity_and_distributivity() {
        let t = shared_table("S3");
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..5 {
            let a = random_tensor(&mut rng, 2, 2, &t);
            let b = random_tensor(&mut rng, 2, 2, &t);
            let c = random_tensor(&mut rng, 2, 2, &t);
            let ab_c = starg_product(&starg_product(&a, &b, &t).unwrap(), &c, &t).unwrap();
            let a_bc = starg_product(&a, &starg_product(&b, &c, &t).unwrap(), &t).unwrap();
            assert!(rel_err(&ab_c, &a_bc) <= 1e-10);
            let lhs = starg_product(&a, &(&b + &c), &t).unwrap();
            let rhs = &starg_product(&a, &b, &t).unwrap() + &starg_product(&a, &c, &t).unwrap();
            assert!(rel_err(&lhs, &rhs) <= 1e-10);

            let direct = starg_product_direct(&starg_product_direct(&a, &b).unwrap(), &c).unwrap();
            assert!(rel_err(&direct, &ab_c) <= 1e-10);
        }
    }

    #[test]
    fn group_action_equivariance_both_sides() {
        let t = shared_table("S3");
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_tensor(&mut rng, 2, 2, &t);
        let b = random_tensor(&mut rng, 2, 2, &t);
        let ab = starg_product(&a, &b, &t).unwrap();
        for g in 0..t.group.order {
            let lhs = starg_product(&left_action(g, &a), &b, &t).unwrap();
            let rhs = left_action(g, &ab);
            assert!(rel_err(&lhs, &rhs) <= 1e-12, "left action at {g}");
            let lhs = starg_product(&a, &right_action(g, &b), &t).unwrap();
            let rhs = right_action(g, &ab);
            assert!(rel_err(&lhs, &rhs) <= 1e-12, "right action at {g}");
            let moved = frobenius_norm(&left_action(g, &a));
            assert!((moved - frobenius_norm(&a)).abs() <= 1e-12);
        }
        assert_eq!(left_action(t.group.identity, &a).data, a.data);
        let g = 4;
        let back = left_action(g, &left_action(t.group.inv[g], &a));
        assert_eq!(back.data, a.data);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let t = shared_table("Z6xZ4");
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = random_tensor(&mut rng, 2, 3, &t);
        let s = a.to_json_string().unwrap();
        let back = GTensor::from_json_str(&s).unwrap();
        assert_eq!(back.rows, 2);
        assert_eq!(back.cols, 3);
        assert_eq!(back.group.spec, a.group.spec);
        assert_eq!(back.data, a.data);
    }

    #[test]
    fn json_rejects_malformed_input() {
        assert!(GTensor::from_json_str("{").is_err());
        assert!(
            GTensor::from_json_str(r#"{"dims":[1,1,3],"group":"Z2","data":[1,2,3]}"#).is_err(),
            "dims inconsistent with group order"
        );
        assert!(
            GTensor::from_json_str(r#"{"dims":[1,1,2],"group":"Z2","data":[1.0]}"#).is_err(),
            "data length mismatch"
        );
        assert!(
            GTensor::from_json_str(r#"{"dims":[1,1,2],"group":"Z2","data":[1.0,null]}"#).is_err(),
            "non-finite entry"
        );
    }

    #[test]
    fn mismatched_operands_are_contract_errors() {
        let t4 = shared_table("Z4");
        let t5 = shared_table("Z5");
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let a = random_tensor(&mut rng, 2, 2, &t4);
        let b = random_tensor(&mut rng, 2, 2, &t5);
        assert!(starg_product_direct(&a, &b).is_err());
        assert!(starg_product(&a, &b, &t4).is_err());
        let c = random_tensor(&mut rng, 2, 3, &t4);
        assert!(starg_product(&a, &c, &t4).is_ok());
        let d = random_tensor(&mut rng, 2, 3, &t4);
        assert!(starg_product(&d, &d, &t4).is_err(), "inner dimension mismatch");
        assert!(fourier_blocks(&b, &t4).is_err());
    }
}
