//! Irreducible unitary representations, the generalized Fourier matrix, and
//! character-based multiplicity computations.
//!
//! Each supported group gets a complete table of unitary irreps with a fixed
//! deterministic ordering (trivial irrep first). The table also records how
//! complex conjugation acts on each irrep, which is what lets the tensor SVD
//! return real factors: conjugating a real tensor's Fourier blocks permutes
//! and twists the irrep blocks in a way captured by [`Conjugation`].

use crate::error::{Error, Result};
use crate::group::{build_group, FiniteGroup, GroupSpec};
use crate::linalg::{sym_eigen, CMat};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// One irreducible unitary representation: a d x d matrix per group element.
#[derive(Debug, Clone)]
pub struct Irrep {
    pub dim: usize,
    pub label: String,
    pub mats: Vec<CMat>,
}

/// How entrywise complex conjugation acts on an irrep, up to the recorded
/// change of basis. For conjugation-stable realizations there is nothing to
/// do; otherwise `conj(rho_i(g)) = C rho_j(g) C^H` for a partner `j` (which
/// may equal `i`).
#[derive(Debug, Clone)]
pub enum Conjugation {
    /// All matrices are entrywise real.
    RealEntries,
    /// Conjugation lands on a different irrep: `conj(rho_i) = C rho_partner C^H`.
    PairedWith { partner: usize, c: CMat },
    /// Self-conjugate through an antisymmetric intertwiner (`C conj(C) = -I`),
    /// so singular values come in exactly degenerate pairs.
    Quaternionic { c: CMat },
    /// Self-conjugate through a symmetric intertwiner but realized with
    /// complex entries (arises for products of two quaternionic factors).
    /// Structured real factorizations decline this case.
    ComplexRealType,
}

/// Complete irrep table for one group, with characters and the conjugation
/// structure of every irrep.
#[derive(Debug, Clone)]
pub struct IrrepTable {
    pub spec: GroupSpec,
    pub group: Arc<FiniteGroup>,
    pub irreps: Vec<Irrep>,
    pub characters: Vec<Vec<Complex64>>,
    pub conjugation: Vec<Conjugation>,
}

impl IrrepTable {
    /// Builds the group and its table in one step.
    pub fn for_spec(spec: &GroupSpec) -> Result<IrrepTable> {
        irrep_table(Arc::new(build_group(spec)?))
    }

    /// Like [`IrrepTable::for_spec`] but wrapped for sharing across tensors
    /// and worker threads.
    pub fn shared(spec: &GroupSpec) -> Result<Arc<IrrepTable>> {
        Ok(Arc::new(Self::for_spec(spec)?))
    }

    pub fn num_irreps(&self) -> usize {
        self.irreps.len()
    }

    /// JSON form (dims, labels, matrices as [re, im] pairs) for inspection.
    pub fn to_json(&self) -> serde_json::Value {
        let irreps: Vec<serde_json::Value> = self
            .irreps
            .iter()
            .map(|irrep| {
                let mats: Vec<Vec<Vec<[f64; 2]>>> = irrep
                    .mats
                    .iter()
                    .map(|m| {
                        (0..irrep.dim)
                            .map(|a| {
                                (0..irrep.dim)
                                    .map(|b| {
                                        let z = m.get(a, b);
                                        [z.re, z.im]
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                serde_json::json!({
                    "label": irrep.label,
                    "dim": irrep.dim,
                    "mats": mats,
                })
            })
            .collect();
        serde_json::json!({
            "group": self.spec.to_string(),
            "order": self.group.order,
            "irreps": irreps,
        })
    }
}

/// Builds the complete irrep table for a built group (the group records its
/// own spec).
///
/// Orderings are fixed: cyclic irreps by frequency `k`, dihedral as the
/// one-dimensional characters then the rotation/reflection pairs, products
/// row-major over (left irrep, right irrep), and the octahedral group as
/// A1, A2, E, T1, T2.
pub fn irrep_table(group: Arc<FiniteGroup>) -> Result<IrrepTable> {
    let spec = group.spec.clone();
    let irreps = match &spec {
        GroupSpec::Cyclic(n) => cyclic_irreps(*n),
        GroupSpec::Dihedral(n) => dihedral_irreps(*n),
        GroupSpec::S3 => dihedral_irreps(3),
        GroupSpec::Klein4 => klein4_irreps(),
        GroupSpec::Quaternion8 => quaternion_irreps(),
        GroupSpec::Octahedral => octahedral_irreps(&group)?,
        GroupSpec::Product(l, r) => product_irreps(l, r)?,
    };
    let dim_sum: usize = irreps.iter().map(|i| i.dim * i.dim).sum();
    if dim_sum != group.order {
        return Err(Error::numerical(format!(
            "irrep dimension formula violated: sum of squares {dim_sum} != order {}",
            group.order
        )));
    }
    let characters: Vec<Vec<Complex64>> = irreps
        .iter()
        .map(|irrep| irrep.mats.iter().map(CMat::trace).collect())
        .collect();
    let conjugation = classify_conjugation(&group, &irreps, &characters)?;
    Ok(IrrepTable { spec, group, irreps, characters, conjugation })
}

fn cyclic_irreps(n: usize) -> Vec<Irrep> {
    (0..n)
        .map(|k| {
            let mats = (0..n)
                .map(|g| {
                    let angle = 2.0 * PI * (k * g % n) as f64 / n as f64;
                    CMat::from_fn(1, 1, |_, _| Complex64::from_polar(1.0, angle))
                })
                .collect();
            Irrep { dim: 1, label: format!("k={k}"), mats }
        })
        .collect()
}

fn rotation_mat(angle: f64, reflect: bool) -> CMat {
    let (s, c) = angle.sin_cos();
    let m = if reflect { [[c, s], [s, -c]] } else { [[c, -s], [s, c]] };
    CMat::from_fn(2, 2, |i, j| Complex64::new(m[i][j], 0.0))
}

/// Dihedral irreps over the element indexing `s*n + r`: one-dimensional
/// characters first (two for odd n, four for even n), then the
/// two-dimensional irreps `rho_h((r,s)) = Rot(2*pi*h*r/n) * Reflect^s`.
fn dihedral_irreps(n: usize) -> Vec<Irrep> {
    let order = 2 * n;
    let sign_char = |f: &dyn Fn(usize, usize) -> f64, label: &str| -> Irrep {
        let mats = (0..order)
            .map(|idx| {
                let (r, s) = (idx % n, idx / n);
                CMat::from_fn(1, 1, |_, _| Complex64::new(f(r, s), 0.0))
            })
            .collect();
        Irrep { dim: 1, label: label.into(), mats }
    };
    let mut irreps = vec![
        sign_char(&|_, _| 1.0, "A1"),
        sign_char(&|_, s| if s == 0 { 1.0 } else { -1.0 }, "A2"),
    ];
    if n % 2 == 0 {
        irreps.push(sign_char(&|r, _| if r % 2 == 0 { 1.0 } else { -1.0 }, "B1"));
        irreps.push(sign_char(&|r, s| if (r + s) % 2 == 0 { 1.0 } else { -1.0 }, "B2"));
    }
    let h_max = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
    for h in 1..=h_max {
        let mats = (0..order)
            .map(|idx| {
                let (r, s) = (idx % n, idx / n);
                rotation_mat(2.0 * PI * (h * r) as f64 / n as f64, s == 1)
            })
            .collect();
        let label = if h_max == 1 { "E".to_string() } else { format!("E{h}") };
        irreps.push(Irrep { dim: 2, label, mats });
    }
    irreps
}

/// Klein four-group characters, indexed by (p, q) over elements (i, j) as
/// built from Z2 x Z2: chi(i, j) = (-1)^(p*i + q*j).
fn klein4_irreps() -> Vec<Irrep> {
    [(0usize, 0usize, "A"), (0, 1, "B1"), (1, 0, "B2"), (1, 1, "B3")]
        .into_iter()
        .map(|(p, q, label)| {
            let mats = (0..4)
                .map(|idx| {
                    let (i, j) = (idx / 2, idx % 2);
                    let v = if (p * i + q * j) % 2 == 0 { 1.0 } else { -1.0 };
                    CMat::from_fn(1, 1, |_, _| Complex64::new(v, 0.0))
                })
                .collect();
            Irrep { dim: 1, label: label.into(), mats }
        })
        .collect()
}

/// Quaternion irreps over the indexing 1, -1, i, -i, j, -j, k, -k: the
/// trivial character, three sign characters (one per kernel {±1, ±u}), and
/// the two-dimensional irrep generated by i -> diag(i, -i), j -> [[0,1],[-1,0]].
fn quaternion_irreps() -> Vec<Irrep> {
    let mut irreps: Vec<Irrep> = Vec::with_capacity(5);
    // sign[u] per unit axis {1, i, j, k}; element 2u + neg has character sign[u].
    let chars: [([f64; 4], &str); 4] = [
        ([1.0, 1.0, 1.0, 1.0], "A"),
        ([1.0, 1.0, -1.0, -1.0], "B1"),
        ([1.0, -1.0, 1.0, -1.0], "B2"),
        ([1.0, -1.0, -1.0, 1.0], "B3"),
    ];
    for (signs, label) in chars {
        let mats = (0..8)
            .map(|idx| CMat::from_fn(1, 1, |_, _| Complex64::new(signs[idx / 2], 0.0)))
            .collect();
        irreps.push(Irrep { dim: 1, label: label.into(), mats });
    }
    let i_mat = CMat::from_fn(2, 2, |a, b| match (a, b) {
        (0, 0) => Complex64::new(0.0, 1.0),
        (1, 1) => Complex64::new(0.0, -1.0),
        _ => Complex64::new(0.0, 0.0),
    });
    let j_mat = CMat::from_fn(2, 2, |a, b| match (a, b) {
        (0, 1) => Complex64::new(1.0, 0.0),
        (1, 0) => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 0.0),
    });
    let k_mat = i_mat.mul(&j_mat);
    let units = [CMat::identity(2), i_mat, j_mat, k_mat];
    let mats = (0..8)
        .map(|idx| {
            let m = &units[idx / 2];
            if idx % 2 == 0 { m.clone() } else { m.scale(Complex64::new(-1.0, 0.0)) }
        })
        .collect();
    irreps.push(Irrep { dim: 2, label: "E".into(), mats });
    irreps
}

/// Orthonormal basis of symmetric traceless 3x3 matrices used to carry the
/// five-dimensional rotation representation that splits into E and T2.
const SYM_TRACELESS_BASIS: [[[f64; 3]; 3]; 5] = {
    const R2: f64 = std::f64::consts::FRAC_1_SQRT_2;
    // 1/sqrt(6) written as a const expression.
    const R6: f64 = 0.408248290463863016366214012450981898660991246776111688072;
    [
        [[R2, 0.0, 0.0], [0.0, -R2, 0.0], [0.0, 0.0, 0.0]],
        [[-R6, 0.0, 0.0], [0.0, -R6, 0.0], [0.0, 0.0, 2.0 * R6]],
        [[0.0, R2, 0.0], [R2, 0.0, 0.0], [0.0, 0.0, 0.0]],
        [[0.0, 0.0, R2], [0.0, 0.0, 0.0], [R2, 0.0, 0.0]],
        [[0.0, 0.0, 0.0], [0.0, 0.0, R2], [0.0, R2, 0.0]],
    ]
};

fn octahedral_irreps(group: &FiniteGroup) -> Result<Vec<Irrep>> {
    let rots = group
        .rotations
        .as_ref()
        .ok_or_else(|| Error::contract("octahedral group must carry rotation matrices"))?;
    let n = group.order;

    let a1 = Irrep {
        dim: 1,
        label: "A1".into(),
        mats: (0..n).map(|_| CMat::identity(1)).collect(),
    };

    // A2: parity of the permutation each rotation induces on the four body
    // diagonals {(1,1,1), (1,1,-1), (1,-1,1), (1,-1,-1)} taken up to sign.
    let diagonals: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [1.0, -1.0, -1.0]];
    let a2_mats: Result<Vec<CMat>> = rots
        .iter()
        .map(|r| {
            let mut perm = [0usize; 4];
            for (t, d) in diagonals.iter().enumerate() {
                let img = [
                    r[0][0] * d[0] + r[0][1] * d[1] + r[0][2] * d[2],
                    r[1][0] * d[0] + r[1][1] * d[1] + r[1][2] * d[2],
                    r[2][0] * d[0] + r[2][1] * d[1] + r[2][2] * d[2],
                ];
                let pos = diagonals
                    .iter()
                    .position(|e| {
                        (e[0] - img[0]).abs() < 0.5 && (e[1] - img[1]).abs() < 0.5 && (e[2] - img[2]).abs() < 0.5
                            || (e[0] + img[0]).abs() < 0.5
                                && (e[1] + img[1]).abs() < 0.5
                                && (e[2] + img[2]).abs() < 0.5
                    })
                    .ok_or_else(|| Error::numerical("rotation does not permute the body diagonals"))?;
                perm[t] = pos;
            }
            let mut sign = 1.0;
            for t in 0..4 {
                for u in (t + 1)..4 {
                    if perm[t] > perm[u] {
                        sign = -sign;
                    }
                }
            }
            Ok(CMat::from_fn(1, 1, |_, _| Complex64::new(sign, 0.0)))
        })
        .collect();
    let a2 = Irrep { dim: 1, label: "A2".into(), mats: a2_mats? };

    let t1 = Irrep {
        dim: 3,
        label: "T1".into(),
        mats: rots
            .iter()
            .map(|r| CMat::from_fn(3, 3, |i, j| Complex64::new(r[i][j], 0.0)))
            .collect(),
    };

    // Five-dimensional action X -> R X R^T on symmetric traceless matrices,
    // expressed in the orthonormal basis above; splits as E + T2.
    let rho5: Vec<Vec<f64>> = rots
        .iter()
        .map(|r| {
            let mut m = vec![0.0f64; 25];
            for a in 0..5 {
                // image = R B_a R^T
                let ba = &SYM_TRACELESS_BASIS[a];
                let mut img = [[0.0f64; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        let mut acc = 0.0;
                        for p in 0..3 {
                            for q in 0..3 {
                                acc += r[i][p] * ba[p][q] * r[j][q];
                            }
                        }
                        img[i][j] = acc;
                    }
                }
                for b in 0..5 {
                    let bb = &SYM_TRACELESS_BASIS[b];
                    let mut dot = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            dot += bb[i][j] * img[i][j];
                        }
                    }
                    m[b * 5 + a] = dot;
                }
            }
            m
        })
        .collect();

    // Split by diagonalizing a generic element of the commutant; its 2- and
    // 3-dimensional eigenspaces carry E and T2.
    let mut split: Option<(Vec<usize>, Vec<usize>, Vec<f64>)> = None;
    for seed in [[1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 4.0, 9.0, 16.0, 25.0]] {
        let mut comm = vec![0.0f64; 25];
        for m in &rho5 {
            for i in 0..5 {
                for j in 0..5 {
                    let mut acc = 0.0;
                    for k in 0..5 {
                        acc += m[i * 5 + k] * seed[k] * m[j * 5 + k];
                    }
                    comm[i * 5 + j] += acc / n as f64;
                }
            }
        }
        let (eigs, vecs) = sym_eigen(&comm, 5)?;
        let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
        for i in 1..5 {
            if (eigs[i] - eigs[i - 1]).abs() > 1e-6 {
                clusters.push(Vec::new());
            }
            clusters.last_mut().expect("non-empty").push(i);
        }
        let mut sizes: Vec<usize> = clusters.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        if sizes == [2, 3] {
            let two = clusters.iter().find(|c| c.len() == 2).expect("checked").clone();
            let three = clusters.iter().find(|c| c.len() == 3).expect("checked").clone();
            split = Some((two, three, vecs));
            break;
        }
    }
    let (e_cols, t2_cols, vecs) =
        split.ok_or_else(|| Error::numerical("could not split the 5-dimensional rotation action into E and T2"))?;

    let restrict = |cols: &[usize], label: &str| -> Irrep {
        let d = cols.len();
        let mats = rho5
            .iter()
            .map(|m| {
                CMat::from_fn(d, d, |i, j| {
                    let mut acc = 0.0;
                    for p in 0..5 {
                        for q in 0..5 {
                            acc += vecs[p * 5 + cols[i]] * m[p * 5 + q] * vecs[q * 5 + cols[j]];
                        }
                    }
                    Complex64::new(acc, 0.0)
                })
            })
            .collect();
        Irrep { dim: d, label: label.into(), mats }
    };
    let e = restrict(&e_cols, "E");
    let t2 = restrict(&t2_cols, "T2");

    Ok(vec![a1, a2, e, t1, t2])
}

fn product_irreps(left: &GroupSpec, right: &GroupSpec) -> Result<Vec<Irrep>> {
    let lt = IrrepTable::for_spec(left)?;
    let rt = IrrepTable::for_spec(right)?;
    let (nl, nr) = (lt.group.order, rt.group.order);
    let mut irreps = Vec::with_capacity(lt.irreps.len() * rt.irreps.len());
    for li in &lt.irreps {
        for ri in &rt.irreps {
            let mats = (0..nl)
                .flat_map(|il| (0..nr).map(move |ir| (il, ir)))
                .map(|(il, ir)| li.mats[il].kron(&ri.mats[ir]))
                .collect();
            irreps.push(Irrep {
                dim: li.dim * ri.dim,
                label: format!("({},{})", li.label, ri.label),
                mats,
            });
        }
    }
    Ok(irreps)
}

/// Finds, for each irrep, how conjugation acts on it: fixed entrywise,
/// mapped onto a partner irrep, or self-conjugate through an antisymmetric
/// intertwiner. Partners are located by matching conjugated characters and
/// the intertwiner is computed by group averaging.
fn classify_conjugation(
    group: &FiniteGroup,
    irreps: &[Irrep],
    characters: &[Vec<Complex64>],
) -> Result<Vec<Conjugation>> {
    let l = irreps.len();
    let mut out = Vec::with_capacity(l);
    for i in 0..l {
        if irreps[i].mats.iter().all(|m| m.max_imag_abs() <= 1e-12) {
            out.push(Conjugation::RealEntries);
            continue;
        }
        let partner = (0..l)
            .find(|&j| {
                irreps[j].dim == irreps[i].dim
                    && characters[i]
                        .iter()
                        .zip(&characters[j])
                        .all(|(a, b)| (a.conj() - b).norm() <= 1e-8)
            })
            .ok_or_else(|| Error::numerical("conjugate character matches no irrep in the table"))?;
        let c = conj_intertwiner(group, &irreps[i], &irreps[partner])?;
        if partner != i {
            out.push(Conjugation::PairedWith { partner, c });
        } else {
            let s = c.mul(&c.conj());
            let d = irreps[i].dim;
            let minus_i = CMat::identity(d).scale(Complex64::new(-1.0, 0.0));
            if s.sub(&minus_i).max_abs() <= 1e-8 {
                out.push(Conjugation::Quaternionic { c });
            } else if s.sub(&CMat::identity(d)).max_abs() <= 1e-8 {
                out.push(Conjugation::ComplexRealType);
            } else {
                return Err(Error::numerical(
                    "self-conjugate intertwiner is neither symmetric nor antisymmetric",
                ));
            }
        }
    }
    Ok(out)
}

/// Unitary C with `conj(a(g)) = C b(g) C^H` for all g, phase-normalized so
/// its largest entry is real and positive. Built by averaging
/// `conj(a(g)) X b(g)^H` over the group for a fixed generic seed X.
fn conj_intertwiner(group: &FiniteGroup, a: &Irrep, b: &Irrep) -> Result<CMat> {
    let d = a.dim;
    let n = group.order;
    for attempt in 0..3u32 {
        // Quadratic phases keep the seed from lying in any structured
        // subspace that a particular intertwiner could be orthogonal to.
        let x = CMat::from_fn(d, d, |r, c| {
            let t = (r * d + c) as f64;
            Complex64::from_polar(1.0 + 0.1 * t, 1.7 * t + 0.3 * t * t + 0.83 * f64::from(attempt))
        });
        let mut c0 = CMat::zeros(d, d);
        for g in 0..n {
            c0 = c0.add(&a.mats[g].conj().mul(&x).mul(&b.mats[g].hermitian()));
        }
        c0 = c0.scale(Complex64::new(1.0 / n as f64, 0.0));
        let norm2 = c0.hermitian().mul(&c0).trace().re / d as f64;
        if norm2 <= 1e-8 {
            continue;
        }
        let mut c = c0.scale(Complex64::new(1.0 / norm2.sqrt(), 0.0));
        // Phase convention: largest-magnitude entry (first in row-major order
        // on ties) is made real positive.
        let mut best = (0.0f64, Complex64::new(1.0, 0.0));
        for r in 0..d {
            for s in 0..d {
                let z = c.get(r, s);
                if z.norm() > best.0 + 1e-12 {
                    best = (z.norm(), z / z.norm());
                }
            }
        }
        c = c.scale(best.1.conj());
        let unitary_residual = c.hermitian().mul(&c).sub(&CMat::identity(d)).max_abs();
        let intertwine_residual = (0..n)
            .map(|g| a.mats[g].conj().sub(&c.mul(&b.mats[g]).mul(&c.hermitian())).max_abs())
            .fold(0.0, f64::max);
        if unitary_residual <= 1e-8 && intertwine_residual <= 1e-8 {
            return Ok(c);
        }
    }
    Err(Error::numerical("failed to construct a conjugation intertwiner"))
}

/// Generalized Fourier matrix: row g is the concatenation of the
/// row-vectorized irrep matrices at g, with a layout map from column index
/// to (irrep, row, col). The inverse comes in closed form from Schur
/// orthogonality: `F^{-1} = diag(d_col / n) F^H`.
///
/// For product groups this layout makes F equal the Kronecker product of the
/// factor Fourier matrices entrywise whenever all factor irreps are
/// one-dimensional, and equal up to a column relabeling otherwise.
#[derive(Debug, Clone)]
pub struct FourierMatrix {
    pub f: CMat,
    pub layout: Vec<(usize, usize, usize)>,
    pub inv: CMat,
}

pub fn fourier_matrix(t: &IrrepTable) -> Result<FourierMatrix> {
    let n = t.group.order;
    let mut layout = Vec::with_capacity(n);
    for (k, irrep) in t.irreps.iter().enumerate() {
        for a in 0..irrep.dim {
            for b in 0..irrep.dim {
                layout.push((k, a, b));
            }
        }
    }
    let f = CMat::from_fn(n, n, |g, col| {
        let (k, a, b) = layout[col];
        t.irreps[k].mats[g].get(a, b)
    });
    let inv = CMat::from_fn(n, n, |col, g| {
        let d = t.irreps[layout[col].0].dim as f64;
        f.get(g, col).conj() * (d / n as f64)
    });
    let residual = f.mul(&inv).sub(&CMat::identity(n)).max_abs();
    if residual > 1e-10 {
        return Err(Error::numerical(format!(
            "Fourier matrix failed to invert: max residual {residual:.3e} (table is inconsistent)"
        )));
    }
    Ok(FourierMatrix { f, layout, inv })
}

/// Multiplicity of irrep k inside the tensor product of irreps i and j,
/// via the character inner product (1/n) sum_g chi_i chi_j conj(chi_k).
pub fn cg_multiplicity(t: &IrrepTable, i: usize, j: usize, k: usize) -> Result<usize> {
    let chi_i = t.characters.get(i).ok_or_else(|| Error::contract("irrep index out of range"))?;
    let chi_j = t.characters.get(j).ok_or_else(|| Error::contract("irrep index out of range"))?;
    let prod: Vec<Complex64> = chi_i.iter().zip(chi_j).map(|(a, b)| a * b).collect();
    multiplicity_from_character(t, &prod, k)
}

/// Multiplicity of irrep k inside the symmetric square of irrep i, using
/// chi_sym2(g) = (chi_i(g)^2 + chi_i(g^2)) / 2.
pub fn sym2_multiplicity(t: &IrrepTable, i: usize, k: usize) -> Result<usize> {
    let chi = t.characters.get(i).ok_or_else(|| Error::contract("irrep index out of range"))?;
    let sym2: Vec<Complex64> = (0..t.group.order)
        .map(|g| (chi[g] * chi[g] + chi[t.group.mult[g][g]]) * 0.5)
        .collect();
    multiplicity_from_character(t, &sym2, k)
}

fn multiplicity_from_character(t: &IrrepTable, chi: &[Complex64], k: usize) -> Result<usize> {
    let chi_k = t.characters.get(k).ok_or_else(|| Error::contract("irrep index out of range"))?;
    let n = t.group.order as f64;
    let m: Complex64 = chi.iter().zip(chi_k).map(|(a, b)| a * b.conj()).sum::<Complex64>() / n;
    let rounded = m.re.round();
    if (m.re - rounded).abs() > 1e-8 || m.im.abs() > 1e-8 || rounded < -0.5 {
        return Err(Error::numerical(format!(
            "character multiplicity {m} is not a nonnegative integer"
        )));
    }
    Ok(rounded as usize)
}

/// Residuals for every representation-theoretic identity the table promises.
#[derive(Debug, Clone)]
pub struct IrrepReport {
    pub order: usize,
    pub dim_sum_sq: usize,
    pub identity_residual: f64,
    pub homomorphism_residual: f64,
    pub unitarity_residual: f64,
    pub character_orthogonality_residual: f64,
    pub fourier_residual: f64,
}

impl IrrepReport {
    pub const TOL: f64 = 1e-10;

    pub fn all_pass(&self) -> bool {
        self.dim_sum_sq == self.order
            && self.identity_residual <= Self::TOL
            && self.homomorphism_residual <= Self::TOL
            && self.unitarity_residual <= Self::TOL
            && self.character_orthogonality_residual <= Self::TOL
            && self.fourier_residual <= Self::TOL
    }
}

/// Recomputes every invariant of the table directly: homomorphism property,
/// unitarity, identity image, dimension formula, character orthogonality,
/// and invertibility of the Fourier matrix.
pub fn verify_irreps(t: &IrrepTable) -> IrrepReport {
    let n = t.group.order;
    let mut identity_residual = 0.0f64;
    let mut hom = 0.0f64;
    let mut unit = 0.0f64;
    for irrep in &t.irreps {
        let eye = CMat::identity(irrep.dim);
        identity_residual = identity_residual.max(irrep.mats[t.group.identity].sub(&eye).max_abs());
        for g in 0..n {
            unit = unit.max(irrep.mats[g].mul(&irrep.mats[g].hermitian()).sub(&eye).max_abs());
            for h in 0..n {
                let gh = t.group.mult[g][h];
                hom = hom.max(irrep.mats[g].mul(&irrep.mats[h]).sub(&irrep.mats[gh]).max_abs());
            }
        }
    }
    let l = t.irreps.len();
    let mut ortho = 0.0f64;
    for i in 0..l {
        for j in 0..l {
            let inner: Complex64 = (0..n)
                .map(|g| t.characters[i][g] * t.characters[j][g].conj())
                .sum::<Complex64>()
                / n as f64;
            let expect = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            ortho = ortho.max((inner - expect).norm());
        }
    }
    let fourier_residual = match fourier_matrix(t) {
        Ok(fm) => fm.f.mul(&fm.inv).sub(&CMat::identity(n)).max_abs(),
        Err(_) => f64::INFINITY,
    };
    IrrepReport {
        order: n,
        dim_sum_sq: t.irreps.iter().map(|i| i.dim * i.dim).sum(),
        identity_residual,
        homomorphism_residual: hom,
        unitarity_residual: unit,
        character_orthogonality_residual: ortho,
        fourier_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(s: &str) -> IrrepTable {
        IrrepTable::for_spec(&s.parse().unwrap()).unwrap()
    }

    const SUPPORTED: &[&str] = &[
        "Z1", "Z2", "Z4", "Z5", "Z12", "D3", "D4", "D5", "D6", "K4", "Q8", "S3", "O", "Z6xZ4",
        "Z3xZ8", "Z2xZ2xZ3", "S3xZ2", "Q8xZ3",
    ];

    #[test]
    fn trivial_group_has_unit_fourier_matrix() {
        let t = table("Z1");
        assert_eq!(t.irreps.len(), 1);
        let fm = fourier_matrix(&t).unwrap();
        assert!(fm.f.sub(&CMat::identity(1)).max_abs() == 0.0);
    }

    #[test]
    fn cyclic_fourier_matrix_is_the_dft() {
        let t = table("Z4");
        let fm = fourier_matrix(&t).unwrap();
        for g in 0..4 {
            for k in 0..4 {
                let expect = Complex64::from_polar(1.0, 2.0 * PI * (g * k) as f64 / 4.0);
                assert!((fm.f.get(g, k) - expect).norm() <= 1e-12, "entry ({g},{k})");
            }
        }
    }

    #[test]
    fn every_supported_table_passes_verification() {
        for s in SUPPORTED {
            let t = table(s);
            assert_eq!(
                t.irreps.iter().map(|i| i.dim * i.dim).sum::<usize>(),
                t.group.order,
                "{s} dimension formula"
            );
            let report = verify_irreps(&t);
            assert!(report.all_pass(), "{s} failed verification: {report:?}");
        }
    }

    #[test]
    fn layout_map_matches_matrix_entries() {
        for s in SUPPORTED {
            let t = table(s);
            let fm = fourier_matrix(&t).unwrap();
            assert_eq!(fm.layout.len(), t.group.order);
            for g in 0..t.group.order {
                for (col, &(k, a, b)) in fm.layout.iter().enumerate() {
                    assert_eq!(fm.f.get(g, col), t.irreps[k].mats[g].get(a, b));
                }
            }
        }
    }

    #[test]
    fn fourier_inverse_matches_schur_orthogonality() {
        // Independent route: F^H F must be diag(n / d_col) exactly when the
        // closed-form inverse diag(d/n) F^H is correct.
        for s in ["Z6", "D4", "Q8", "O", "S3xZ2"] {
            let t = table(s);
            let fm = fourier_matrix(&t).unwrap();
            let n = t.group.order;
            let gram = fm.f.hermitian().mul(&fm.f);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j {
                        Complex64::new(n as f64 / t.irreps[fm.layout[i].0].dim as f64, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    assert!(
                        (gram.get(i, j) - expect).norm() <= 1e-10 * n as f64,
                        "{s} gram ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn product_of_small_cyclic_groups_multiplies_characters() {
        let t = table("Z2xZ3");
        let z2 = table("Z2");
        let z3 = table("Z3");
        assert_eq!(t.irreps.len(), 6);
        for (k, irrep) in t.irreps.iter().enumerate() {
            assert_eq!(irrep.dim, 1);
            let (k1, k2) = (k / 3, k % 3);
            for il in 0..2 {
                for ir in 0..3 {
                    let expect = z2.characters[k1][il] * z3.characters[k2][ir];
                    assert!((t.characters[k][il * 3 + ir] - expect).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn abelian_product_fourier_is_exact_kronecker() {
        for (prod, l, r) in [("Z6xZ4", "Z6", "Z4"), ("Z2xZ2", "Z2", "Z2"), ("Z3xZ8", "Z3", "Z8")] {
            let fp = fourier_matrix(&table(prod)).unwrap();
            let fl = fourier_matrix(&table(l)).unwrap();
            let fr = fourier_matrix(&table(r)).unwrap();
            let kron = fl.f.kron(&fr.f);
            assert!(fp.f.sub(&kron).max_abs() <= 1e-12, "{prod}");
        }
    }

    #[test]
    fn nonabelian_product_fourier_is_kronecker_up_to_column_relabeling() {
        let t = table("S3xZ2");
        let fp = fourier_matrix(&t).unwrap();
        let fl = fourier_matrix(&table("S3")).unwrap();
        let fr = fourier_matrix(&table("Z2")).unwrap();
        let kron = fl.f.kron(&fr.f);
        let (n2, l2) = (2usize, 2usize);
        for (col, &(k, a, b)) in fp.layout.iter().enumerate() {
            let (k1, k2) = (k / l2, k % l2);
            let (d1, d2) = (fl.layout.iter().filter(|e| e.0 == k1).count(), 1usize);
            let d1 = (d1 as f64).sqrt() as usize;
            let (a1, a2) = (a / d2, a % d2);
            let (b1, b2) = (b / d2, b % d2);
            let c1 = fl.layout.iter().position(|&e| e == (k1, a1, b1)).unwrap();
            let c2 = fr.layout.iter().position(|&e| e == (k2, a2, b2)).unwrap();
            let _ = d1;
            for g in 0..t.group.order {
                assert_eq!(fp.f.get(g, col), kron.get(g, c1 * n2 + c2));
            }
        }
    }

    #[test]
    fn octahedral_table_matches_the_standard_character_table() {
        let t = table("O");
        let dims: Vec<usize> = t.irreps.iter().map(|i| i.dim).collect();
        assert_eq!(dims, vec![1, 1, 2, 3, 3]);
        let labels: Vec<&str> = t.irreps.iter().map(|i| i.label.as_str()).collect();
        assert_eq!(labels, vec!["A1", "A2", "E", "T1", "T2"]);

        // Element classes in construction order: identity; face 90/270 (6C4)
        // at 1,3,4,6,7,9; face 180 (3C2) at 2,5,8; vertex (8C3) at 10..18;
        // edge (6C2') at 18..24.
        let class_of = |g: usize| -> usize {
            match g {
                0 => 0,
                1 | 3 | 4 | 6 | 7 | 9 => 1,
                2 | 5 | 8 => 2,
                10..=17 => 3,
                _ => 4,
            }
        };
        // Rows: A1, A2, E, T1, T2; columns: E, 6C4, 3C2, 8C3, 6C2'.
        let expected: [[f64; 5]; 5] = [
            [1.0, 1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, 1.0, -1.0],
            [2.0, 0.0, 2.0, -1.0, 0.0],
            [3.0, 1.0, -1.0, 0.0, -1.0],
            [3.0, -1.0, -1.0, 0.0, 1.0],
        ];
        for (i, chi) in t.characters.iter().enumerate() {
            for g in 0..24 {
                let want = expected[i][class_of(g)];
                assert!(
                    (chi[g] - Complex64::new(want, 0.0)).norm() <= 1e-10,
                    "irrep {i} element {g}: got {}, want {want}",
                    chi[g]
                );
            }
        }
        // T1 is the defining rotation representation itself.
        let rots = t.group.rotations.as_ref().unwrap();
        for g in 0..24 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(t.irreps[3].mats[g].get(i, j), Complex64::new(rots[g][i][j], 0.0));
                }
            }
        }
    }

    #[test]
    fn octahedral_selection_rules() {
        let t = table("O");
        for rho in 0..5 {
            assert_eq!(cg_multiplicity(&t, 0, rho, rho).unwrap(), 1, "A1 x rho = rho");
        }
        let t1 = 3;
        assert_eq!(cg_multiplicity(&t, t1, t1, 0).unwrap(), 1);
        assert_eq!(sym2_multiplicity(&t, t1, t1).unwrap(), 0);
        assert_eq!(sym2_multiplicity(&t, t1, 0).unwrap(), 1);
        assert_eq!(sym2_multiplicity(&t, 0, 0).unwrap(), 1);
        // Multiplicities weighted by dimension recover the product dimension.
        for i in 0..5 {
            for j in 0..5 {
                let total: usize = (0..5)
                    .map(|k| cg_multiplicity(&t, i, j, k).unwrap() * t.irreps[k].dim)
                    .sum();
                assert_eq!(total, t.irreps[i].dim * t.irreps[j].dim);
            }
        }
    }

    #[test]
    fn cyclic_cg_is_frequency_addition() {
        let t = table("Z6");
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..6 {
                    let expect = usize::from((i + j) % 6 == k);
                    assert_eq!(cg_multiplicity(&t, i, j, k).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn perturbed_irrep_matrix_is_flagged() {
        let mut t = table("D4");
        let last = t.irreps.len() - 1;
        let m = &mut t.irreps[last].mats[1];
        m[(0, 1)] += Complex64::new(1e-3, 0.0);
        let report = verify_irreps(&t);
        assert!(report.homomorphism_residual > 1e-4);
        assert!(!report.all_pass());
    }

    #[test]
    fn conjugation_structure_is_correct_per_group() {
        let z5 = table("Z5");
        assert!(matches!(z5.conjugation[0], Conjugation::RealEntries));
        for (i, j) in [(1usize, 4usize), (2, 3), (3, 2), (4, 1)] {
            match &z5.conjugation[i] {
                Conjugation::PairedWith { partner, c } => {
                    assert_eq!(*partner, j);
                    assert!((c.get(0, 0) - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
                }
                other => panic!("Z5 irrep {i}: unexpected {other:?}"),
            }
        }
        for s in ["D4", "D5", "K4", "S3", "O"] {
            let t = table(s);
            for (i, c) in t.conjugation.iter().enumerate() {
                assert!(matches!(c, Conjugation::RealEntries), "{s} irrep {i}: {c:?}");
            }
        }
        let q8 = table("Q8");
        match &q8.conjugation[4] {
            Conjugation::Quaternionic { c } => {
                let expect =
                    CMat::from_fn(2, 2, |i, j| match (i, j) {
                        (0, 1) => Complex64::new(1.0, 0.0),
                        (1, 0) => Complex64::new(-1.0, 0.0),
                        _ => Complex64::new(0.0, 0.0),
                    });
                assert!(c.sub(&expect).max_abs() <= 1e-10, "canonical antisymmetric form");
            }
            other => panic!("Q8 E irrep: unexpected {other:?}"),
        }
    }

    fn check_intertwiner(t: &IrrepTable, i: usize, j: usize, c: &CMat, s: &str) {
        for g in 0..t.group.order {
            let lhs = t.irreps[i].mats[g].conj();
            let rhs = c.mul(&t.irreps[j].mats[g]).mul(&c.hermitian());
            assert!(lhs.sub(&rhs).max_abs() <= 1e-10, "{s} irrep {i} element {g}");
        }
    }

    #[test]
    fn conjugation_intertwiners_satisfy_their_defining_identity() {
        for s in SUPPORTED {
            let t = table(s);
            for (i, conj) in t.conjugation.iter().enumerate() {
                match conj {
                    Conjugation::RealEntries => {
                        for m in &t.irreps[i].mats {
                            assert!(m.max_imag_abs() <= 1e-12, "{s} irrep {i}");
                        }
                    }
                    Conjugation::PairedWith { partner, c } => {
                        check_intertwiner(&t, i, *partner, c, s);
                    }
                    Conjugation::Quaternionic { c } => {
                        check_intertwiner(&t, i, i, c, s);
                    }
                    Conjugation::ComplexRealType => panic!("{s} should not hit the declined case"),
                }
            }
        }
    }

    #[test]
    fn quaternionic_pair_product_is_complex_real_type() {
        let t = table("Q8xQ8");
        let ee = 4 * 5 + 4;
        assert!(matches!(t.conjugation[ee], Conjugation::ComplexRealType));
        assert!(verify_irreps(&t).all_pass());
    }

    #[test]
    fn irrep_json_export_round_trips_shape() {
        let t = table("Q8");
        let v = t.to_json();
        assert_eq!(v["order"], 8);
        assert_eq!(v["irreps"].as_array().unwrap().len(), 5);
        assert_eq!(v["irreps"][4]["dim"], 2);
        assert_eq!(v["irreps"][4]["mats"].as_array().unwrap().len(), 8);
    }
}
