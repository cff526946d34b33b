//! Small dense linear algebra over `Complex64`, sized for per-irrep blocks
//! (a few tens of rows). Everything here is deterministic: fixed sweep
//! orders, no pivot randomization, stable tie-breaking.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C_ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        CMat {
            rows,
            cols,
            data: entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C_ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Kronecker product, row-major block layout.
    pub fn kron(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_entrywise_real(&self, tol: f64) -> bool {
        self.max_imag_abs() <= tol
    }

    /// Drops the imaginary parts of every entry.
    pub fn real_part(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| Complex64::new(self.get(i, j).re, 0.0))
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin SVD `A = U diag(sigma) V^H` with `r = min(rows, cols)` columns in
/// both factors, singular values sorted descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

/// A column whose squared norm sits this far below its pair partner's, while
/// still registering as correlated with it, is numerically dead: its entries
/// are roundoff left over from earlier rotations, and rotating the pair again
/// only regenerates them. Such columns are zeroed outright, which drops mass
/// of at most a few ulps of the larger column and lets sweeps terminate on
/// rank-deficient input.
const COLUMN_DEATH: f64 = 64.0 * f64::EPSILON * f64::EPSILON;

/// One-sided Jacobi SVD over `Complex64`.
///
/// Deterministic by construction: row-cyclic sweep order, no pivoting, and a
/// fixed phase convention (the largest-magnitude entry of each left singular
/// vector is made real and positive; ties resolved by lowest row index).
/// Columns belonging to zero singular values are completed to an orthonormal
/// set from standard basis vectors so `U^H U = I` holds at every rank.
pub fn jacobi_svd(a: &CMat) -> Result<Svd> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::contract("jacobi_svd: empty matrix"));
    }
    if a.rows >= a.cols {
        jacobi_svd_tall(a)
    } else {
        let s = jacobi_svd_tall(&a.hermitian())?;
        Ok(Svd { u: s.v, sigma: s.sigma, v: s.u })
    }
}

fn jacobi_svd_tall(a: &CMat) -> Result<Svd> {
    let (m, n) = (a.rows, a.cols);
    debug_assert!(m >= n);
    let mut g = a.clone();
    let mut v = CMat::identity(n);

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = C_ZERO;
                for i in 0..m {
                    let gp = g.get(i, p);
                    let gq = g.get(i, q);
                    app += gp.norm_sqr();
                    aqq += gq.norm_sqr();
                    apq += gp.conj() * gq;
                }
                let mag = apq.norm();
                if mag <= JACOBI_TOL * (app * aqq).sqrt() || app == 0.0 || aqq == 0.0 {
                    continue;
                }
                if aqq <= COLUMN_DEATH * app {
                    for i in 0..m {
                        g[(i, q)] = C_ZERO;
                    }
                    continue;
                }
                if app <= COLUMN_DEATH * aqq {
                    for i in 0..m {
                        g[(i, p)] = C_ZERO;
                    }
                    continue;
                }
                rotated = true;
                // Rotate the phase out of a_pq, then a real Jacobi rotation
                // orthogonalizes the column pair.
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = phase.conj();
                for i in 0..m {
                    let gp = g.get(i, p);
                    let gq = g.get(i, q) * ph;
                    g[(i, p)] = gp * c - gq * s;
                    g[(i, q)] = gp * s + gq * c;
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q) * ph;
                    v[(i, p)] = vp * c - vq * s;
                    v[(i, q)] = vp * s + vq * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        // One last check: accept if residual correlations are at noise level.
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = C_ZERO;
                for i in 0..m {
                    app += g.get(i, p).norm_sqr();
                    aqq += g.get(i, q).norm_sqr();
                    apq += g.get(i, p).conj() * g.get(i, q);
                }
                if app == 0.0 || aqq == 0.0 || aqq <= COLUMN_DEATH * app || app <= COLUMN_DEATH * aqq
                {
                    continue;
                }
                let denom = (app * aqq).sqrt();
                if denom > 0.0 && denom.is_finite() {
                    worst = worst.max(apq.norm() / denom);
                }
            }
        }
        if worst > 1e-10 {
            return Err(Error::numerical(format!(
                "jacobi_svd did not converge in {MAX_SWEEPS} sweeps (residual {worst:.3e})"
            )));
        }
    }

    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| g.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let sigma_max = norms.iter().cloned().fold(0.0, f64::max);
    let dead = if sigma_max == 0.0 { f64::INFINITY } else { sigma_max * 1e-290 };

    let mut u = CMat::zeros(m, n);
    let mut vv = CMat::zeros(n, n);
    let mut sigma = vec![0.0; n];
    let mut live_cols: Vec<usize> = Vec::new();
    for (out_j, &src) in order.iter().enumerate() {
        sigma[out_j] = norms[src];
        for i in 0..n {
            vv[(i, out_j)] = v.get(i, src);
        }
        if norms[src] > dead && norms[src] > 0.0 {
            let inv = 1.0 / norms[src];
            for i in 0..m {
                u[(i, out_j)] = g.get(i, src) * inv;
            }
            live_cols.push(out_j);
        } else {
            sigma[out_j] = 0.0;
            norms[src] = 0.0;
        }
    }

    // Complete columns of zero singular values against the live ones.
    let mut cand = 0usize;
    for j in 0..n {
        if live_cols.contains(&j) {
            continue;
        }
        loop {
            if cand >= m {
                return Err(Error::numerical("jacobi_svd: basis completion exhausted"));
            }
            let mut w = vec![C_ZERO; m];
            w[cand] = C_ONE;
            cand += 1;
            for &k in &live_cols {
                let dot: Complex64 = (0..m).map(|i| u.get(i, k).conj() * w[i]).sum();
                for i in 0..m {
                    let uk = u.get(i, k);
                    w[i] -= uk * dot;
                }
            }
            let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nw > 0.5 {
                let inv = 1.0 / nw;
                for i in 0..m {
                    u[(i, j)] = w[i] * inv;
                }
                live_cols.push(j);
                break;
            }
        }
    }

    // Phase convention: largest-magnitude entry of each left singular vector
    // real and positive; the matching right column absorbs the same phase.
    for j in 0..n {
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for i in 0..m {
            let mag = u.get(i, j).norm();
            if mag > best_mag + 1e-300 && mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag <= 0.0 {
            continue;
        }
        let z = u.get(best, j);
        let ph = (z / z.norm()).conj();
        for i in 0..m {
            u[(i, j)] *= ph;
        }
        for i in 0..n {
            vv[(i, j)] *= ph;
        }
    }

    Ok(Svd { u, sigma, v: vv })
}

/// Eigendecomposition of a real symmetric matrix (row-major, n x n) by
/// cyclic Jacobi. Returns eigenvalues ascending with matching orthonormal
/// eigenvector columns. Deterministic sweep order.
pub fn sym_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let mut converged = n < 2;
    for _sweep in 0..MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::numerical("sym_eigen did not converge"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap().then(i.cmp(&j)));
    let vals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (out_j, &src) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + out_j] = v[i * n + src];
        }
    }
    Ok((vals, vecs))
}

/// Solve `A x = b` for real square `A` by Gaussian elimination with partial
/// pivoting. Fails with a numerical error on an effectively zero pivot.
pub fn solve_real(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for r in (col + 1)..n {
            let v = m[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= 1e-14 * scale {
            return Err(Error::numerical(
                "solve_real: singular system (consider a positive ridge penalty)",
            ));
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in (col + 1)..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Ok(x)
}
