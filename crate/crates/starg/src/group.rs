//! Finite group construction and verification.
//!
//! A group is described symbolically by a [`GroupSpec`], built into an
//! explicit multiplication table as a [`FiniteGroup`], and expanded on demand
//! into the sparse [`ConvTensor`] whose entries `T(a,b,c) = 1` iff `ab = c`.
//! That tensor is the scalar multiplication rule of the group-algebra tensor
//! product implemented in the rest of the crate.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Symbolic description of a supported finite group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    /// Cyclic group `Z_n`, `n >= 1`.
    Cyclic(usize),
    /// Dihedral group `D_n` of order `2n`, `n >= 2`.
    Dihedral(usize),
    /// Klein four-group (`Z2 x Z2` with its own label).
    Klein4,
    /// Quaternion group of order 8.
    Quaternion8,
    /// Symmetric group on three letters (same table as `D3`).
    S3,
    /// Chiral octahedral group: the 24 rotation symmetries of the cube.
    Octahedral,
    /// Direct product; elements are ordered row-major over (left, right).
    Product(Box<GroupSpec>, Box<GroupSpec>),
}

impl GroupSpec {
    /// Order of the group this spec describes.
    pub fn order(&self) -> usize {
        match self {
            GroupSpec::Cyclic(n) => *n,
            GroupSpec::Dihedral(n) => 2 * n,
            GroupSpec::Klein4 => 4,
            GroupSpec::Quaternion8 => 8,
            GroupSpec::S3 => 6,
            GroupSpec::Octahedral => 24,
            GroupSpec::Product(l, r) => l.order() * r.order(),
        }
    }

    /// Convenience constructor for a two-factor product.
    pub fn product(left: GroupSpec, right: GroupSpec) -> GroupSpec {
        GroupSpec::Product(Box::new(left), Box::new(right))
    }

    fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::Cyclic(0) => Err(Error::contract("cyclic group requires n >= 1")),
            GroupSpec::Dihedral(n) if *n < 2 => {
                Err(Error::contract("dihedral group requires n >= 2"))
            }
            GroupSpec::Product(l, r) => {
                l.validate()?;
                r.validate()
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic(n) => write!(f, "Z{n}"),
            GroupSpec::Dihedral(n) => write!(f, "D{n}"),
            GroupSpec::Klein4 => write!(f, "K4"),
            GroupSpec::Quaternion8 => write!(f, "Q8"),
            GroupSpec::S3 => write!(f, "S3"),
            GroupSpec::Octahedral => write!(f, "O24"),
            GroupSpec::Product(l, r) => write!(f, "{l}x{r}"),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses the compact grammar `"Zn" | "Dn" | "K4" | "Q8" | "S3" | "O" |
    /// "A x B"`. Whitespace is ignored, names are case-insensitive, and
    /// products fold left so `"Z2xZ2xZ3"` means `(Z2 x Z2) x Z3`.
    fn from_str(s: &str) -> Result<GroupSpec> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::contract("empty group spec"));
        }
        let mut parts = compact.split(['x', 'X']).map(parse_atom);
        let first = parts.next().expect("split yields at least one token")?;
        let spec = parts.try_fold(first, |acc, part| {
            Ok::<_, Error>(GroupSpec::product(acc, part?))
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_atom(tok: &str) -> Result<GroupSpec> {
    let upper = tok.to_ascii_uppercase();
    match upper.as_str() {
        "K4" => return Ok(GroupSpec::Klein4),
        "Q8" => return Ok(GroupSpec::Quaternion8),
        "S3" => return Ok(GroupSpec::S3),
        "O" | "O24" => return Ok(GroupSpec::Octahedral),
        _ => {}
    }
    let bad = || Error::contract(format!("unrecognized group spec token {tok:?}"));
    if upper.len() < 2 {
        return Err(bad());
    }
    let (kind, digits) = upper.split_at(1);
    let n: usize = digits.parse().map_err(|_| bad())?;
    match kind {
        "Z" => Ok(GroupSpec::Cyclic(n)),
        "D" => Ok(GroupSpec::Dihedral(n)),
        _ => Err(bad()),
    }
}

/// A finite group as an explicit multiplication table.
///
/// Element `0` is always the identity. `mult[a][b]` is the index of the
/// product `ab`, and `inv[a]` the index of `a^{-1}`. For the octahedral group
/// the defining 3x3 rotation matrices are attached in element order. The
/// originating spec is kept so downstream objects can name and rebuild the
/// group (two groups are interchangeable iff their specs are equal, since
/// construction is deterministic).
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    pub spec: GroupSpec,
    pub order: usize,
    pub labels: Vec<String>,
    pub mult: Vec<Vec<usize>>,
    pub identity: usize,
    pub inv: Vec<usize>,
    pub rotations: Option<Vec<[[f64; 3]; 3]>>,
}

impl FiniteGroup {
    /// Product of two elements by index.
    pub fn op(&self, a: usize, b: usize) -> usize {
        self.mult[a][b]
    }

    /// Inverse of an element by index.
    pub fn inverse(&self, a: usize) -> usize {
        self.inv[a]
    }
}

/// Builds the explicit multiplication table for a spec.
///
/// Element orderings are deterministic: cyclic groups by exponent, dihedral
/// groups as rotations `r0..r{n-1}` then reflections `s·r0..`, products
/// row-major over (left, right), and the octahedral group as identity, nine
/// face-axis rotations (x, y, z by 90/180/270 degrees), eight body-diagonal
/// rotations (each diagonal by 120 then 240 degrees), and six edge rotations.
pub fn build_group(spec: &GroupSpec) -> Result<FiniteGroup> {
    spec.validate()?;
    let mut g = match spec {
        GroupSpec::Cyclic(n) => cyclic_group(*n),
        GroupSpec::Dihedral(n) => dihedral_group(*n),
        GroupSpec::S3 => dihedral_group(3),
        GroupSpec::Klein4 => klein4_group()?,
        GroupSpec::Quaternion8 => quaternion_group(),
        GroupSpec::Octahedral => octahedral_group()?,
        GroupSpec::Product(l, r) => product_group(&build_group(l)?, &build_group(r)?),
    };
    g.spec = spec.clone();
    g.inv = inverse_table(&g.mult, g.identity)?;
    Ok(g)
}

fn inverse_table(mult: &[Vec<usize>], identity: usize) -> Result<Vec<usize>> {
    mult.iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter().position(|&p| p == identity).ok_or_else(|| {
                Error::numerical(format!("element {a} has no inverse in the built table"))
            })
        })
        .collect()
}

fn cyclic_group(n: usize) -> FiniteGroup {
    let mult = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
    FiniteGroup {
        spec: GroupSpec::Cyclic(n),
        order: n,
        labels: (0..n).map(|a| a.to_string()).collect(),
        mult,
        identity: 0,
        inv: Vec::new(),
        rotations: None,
    }
}

/// Dihedral elements are pairs (r, s) with r a rotation exponent and s a
/// reflection bit, indexed as `s*n + r`, multiplying by
/// `(r1,s1)(r2,s2) = (r1 + (-1)^{s1} r2 mod n, s1 xor s2)`.
fn dihedral_group(n: usize) -> FiniteGroup {
    let order = 2 * n;
    let idx = |r: usize, s: usize| s * n + r;
    let mut mult = vec![vec![0usize; order]; order];
    for s1 in 0..2 {
        for r1 in 0..n {
            for s2 in 0..2 {
                for r2 in 0..n {
                    let r = if s1 == 0 { (r1 + r2) % n } else { (r1 + n - r2) % n };
                    mult[idx(r1, s1)][idx(r2, s2)] = idx(r, s1 ^ s2);
                }
            }
        }
    }
    let mut labels = Vec::with_capacity(order);
    for s in 0..2 {
        for r in 0..n {
            labels.push(if s == 0 { format!("r{r}") } else { format!("sr{r}") });
        }
    }
    FiniteGroup {
        spec: GroupSpec::Dihedral(n),
        order,
        labels,
        mult,
        identity: 0,
        inv: Vec::new(),
        rotations: None,
    }
}

fn klein4_group() -> Result<FiniteGroup> {
    let z2 = cyclic_group(2);
    let mut g = product_group(&z2, &z2);
    g.labels = ["e", "a", "b", "ab"].map(String::from).to_vec();
    Ok(g)
}

/// Quaternion elements are (sign, axis) pairs over the units {1, i, j, k},
/// indexed as `2*axis + (sign < 0)`, so the order is 1, -1, i, -i, j, -j, k, -k.
fn quaternion_group() -> FiniteGroup {
    // unit_mult[u][v] = (axis of uv, sign of uv) for u, v in {1, i, j, k}.
    const UNIT_MULT: [[(usize, i8); 4]; 4] = [
        [(0, 1), (1, 1), (2, 1), (3, 1)],
        [(1, 1), (0, -1), (3, 1), (2, -1)],
        [(2, 1), (3, -1), (0, -1), (1, 1)],
        [(3, 1), (2, 1), (1, -1), (0, -1)],
    ];
    let order = 8;
    let mut mult = vec![vec![0usize; order]; order];
    for a in 0..order {
        for b in 0..order {
            let (ua, sa) = (a / 2, if a % 2 == 0 { 1i8 } else { -1 });
            let (ub, sb) = (b / 2, if b % 2 == 0 { 1i8 } else { -1 });
            let (uc, sc) = UNIT_MULT[ua][ub];
            let sign = sa * sb * sc;
            mult[a][b] = 2 * uc + usize::from(sign < 0);
        }
    }
    let labels = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"].map(String::from).to_vec();
    FiniteGroup {
        spec: GroupSpec::Quaternion8,
        order,
        labels,
        mult,
        identity: 0,
        inv: Vec::new(),
        rotations: None,
    }
}

fn product_group(left: &FiniteGroup, right: &FiniteGroup) -> FiniteGroup {
    let (nl, nr) = (left.order, right.order);
    let order = nl * nr;
    let idx = |il: usize, ir: usize| il * nr + ir;
    let mut mult = vec![vec![0usize; order]; order];
    let mut labels = Vec::with_capacity(order);
    for il in 0..nl {
        for ir in 0..nr {
            labels.push(format!("({},{})", left.labels[il], right.labels[ir]));
            for jl in 0..nl {
                for jr in 0..nr {
                    mult[idx(il, ir)][idx(jl, jr)] = idx(left.mult[il][jl], right.mult[ir][jr]);
                }
            }
        }
    }
    FiniteGroup {
        spec: GroupSpec::product(left.spec.clone(), right.spec.clone()),
        order,
        labels,
        mult,
        identity: idx(left.identity, right.identity),
        inv: Vec::new(),
        rotations: None,
    }
}

type IMat = [[i64; 3]; 3];

fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let mut c = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn imat_transpose(a: &IMat) -> IMat {
    let mut t = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// The 24 rotation matrices of the cube as exact integer matrices, in the
/// documented order: identity; face-axis rotations about x, y, z by 90, 180,
/// 270 degrees; body-diagonal rotations by 120 and 240 degrees for each of
/// the diagonals (1,1,1), (1,1,-1), (1,-1,1), (1,-1,-1); edge rotations by
/// 180 degrees about (1,1,0), (1,-1,0), (1,0,1), (1,0,-1), (0,1,1), (0,1,-1).
fn octahedral_matrices() -> Vec<(IMat, String)> {
    let mut out: Vec<(IMat, String)> = Vec::with_capacity(24);
    let id: IMat = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    out.push((id, "e".into()));

    let face: [(IMat, char); 3] = [
        ([[1, 0, 0], [0, 0, -1], [0, 1, 0]], 'x'),
        ([[0, 0, 1], [0, 1, 0], [-1, 0, 0]], 'y'),
        ([[0, -1, 0], [1, 0, 0], [0, 0, 1]], 'z'),
    ];
    for (quarter, axis) in &face {
        let mut r = *quarter;
        for angle in [90, 180, 270] {
            out.push((r, format!("{axis}{angle}")));
            r = imat_mul(&r, quarter);
        }
    }

    // 120-degree rotation about (1,1,1): cyclically permutes x -> y -> z -> x.
    let p: IMat = [[0, 0, 1], [1, 0, 0], [0, 1, 0]];
    let diagonals: [[i64; 3]; 4] = [[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]];
    for d in &diagonals {
        let s: IMat = [[d[0], 0, 0], [0, d[1], 0], [0, 0, d[2]]];
        let r = imat_mul(&imat_mul(&s, &p), &s);
        let tag: String = d.iter().map(|&c| if c > 0 { '+' } else { '-' }).collect();
        out.push((r, format!("v{tag}:120")));
        out.push((imat_transpose(&r), format!("v{tag}:240")));
    }

    let edges: [[i64; 3]; 6] =
        [[1, 1, 0], [1, -1, 0], [1, 0, 1], [1, 0, -1], [0, 1, 1], [0, 1, -1]];
    for u in &edges {
        // 180-degree rotation about the unit vector u/sqrt(2) is 2*uu^T/2 - I.
        let mut r = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = u[i] * u[j] - i64::from(i == j);
            }
        }
        let tag: String = u
            .iter()
            .map(|&c| match c {
                1 => '+',
                -1 => '-',
                _ => '0',
            })
            .collect();
        out.push((r, format!("e{tag}")));
    }
    out
}

fn octahedral_group() -> Result<FiniteGroup> {
    let mats = octahedral_matrices();
    let order = mats.len();
    let mut mult = vec![vec![0usize; order]; order];
    for a in 0..order {
        for b in 0..order {
            let prod = imat_mul(&mats[a].0, &mats[b].0);
            mult[a][b] = mats
                .iter()
                .position(|(m, _)| *m == prod)
                .ok_or_else(|| Error::numerical("octahedral product left the element list"))?;
        }
    }
    let labels = mats.iter().map(|(_, l)| l.clone()).collect();
    let rotations = mats
        .iter()
        .map(|(m, _)| {
            let mut f = [[0.0f64; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    f[i][j] = m[i][j] as f64;
                }
            }
            f
        })
        .collect();
    Ok(FiniteGroup {
        spec: GroupSpec::Octahedral,
        order,
        labels,
        mult,
        identity: 0,
        inv: Vec::new(),
        rotations: Some(rotations),
    })
}

/// Sparse indicator of the multiplication table: triples `(a, b, c)` with
/// `ab = c`, each carrying value 1. A group of order n yields exactly n²
/// triples, and the slice at any fixed `a` is a permutation matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvTensor {
    pub order: usize,
    pub triples: Vec<(usize, usize, usize)>,
}

/// Expands a group's table into its convolution tensor, triples ordered
/// row-major over (a, b).
pub fn convolution_tensor(g: &FiniteGroup) -> ConvTensor {
    let mut triples = Vec::with_capacity(g.order * g.order);
    for a in 0..g.order {
        for b in 0..g.order {
            triples.push((a, b, g.mult[a][b]));
        }
    }
    ConvTensor { order: g.order, triples }
}

/// Per-axiom verification result, with the first counterexample found.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub order: usize,
    pub identity_ok: bool,
    pub inverses_ok: bool,
    pub associativity_ok: bool,
    pub permutation_slices_ok: bool,
    /// Present only when rotation matrices are attached to the group.
    pub rotations_ok: Option<bool>,
    pub counterexample: Option<String>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.identity_ok
            && self.inverses_ok
            && self.associativity_ok
            && self.permutation_slices_ok
            && self.rotations_ok.unwrap_or(true)
    }
}

/// Checks the group axioms directly on the stored table: identity, inverses,
/// associativity (exhaustive up to order 128, deterministically sampled
/// above), the permutation property of every table row and column, and, when
/// rotation matrices are present, that the table matches matrix products.
pub fn verify_group(g: &FiniteGroup) -> AxiomReport {
    let n = g.order;
    let mut report = AxiomReport {
        order: n,
        identity_ok: true,
        inverses_ok: true,
        associativity_ok: true,
        permutation_slices_ok: true,
        rotations_ok: g.rotations.as_ref().map(|_| true),
        counterexample: None,
    };
    let witness = |flag: &mut bool, msg: String, counterexample: &mut Option<String>| {
        *flag = false;
        counterexample.get_or_insert(msg);
    };

    let shape_ok = g.mult.len() == n
        && g.mult.iter().all(|row| row.len() == n && row.iter().all(|&e| e < n))
        && g.identity < n
        && g.inv.len() == n
        && g.inv.iter().all(|&e| e < n);
    if !shape_ok {
        return AxiomReport {
            identity_ok: false,
            inverses_ok: false,
            associativity_ok: false,
            permutation_slices_ok: false,
            rotations_ok: report.rotations_ok.map(|_| false),
            counterexample: Some("table shape or index range is malformed".into()),
            ..report
        };
    }

    let e = g.identity;
    for a in 0..n {
        if g.mult[e][a] != a || g.mult[a][e] != a {
            witness(
                &mut report.identity_ok,
                format!("identity fails at a={a}: e*a={}, a*e={}", g.mult[e][a], g.mult[a][e]),
                &mut report.counterexample,
            );
            break;
        }
    }
    for a in 0..n {
        let b = g.inv[a];
        if g.mult[a][b] != e || g.mult[b][a] != e {
            witness(
                &mut report.inverses_ok,
                format!("inverse fails at a={a}: a*inv(a)={}", g.mult[a][b]),
                &mut report.counterexample,
            );
            break;
        }
    }

    let check_assoc = |a: usize, b: usize, c: usize| -> bool {
        g.mult[g.mult[a][b]][c] == g.mult[a][g.mult[b][c]]
    };
    if n <= 128 {
        'outer: for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if !check_assoc(a, b, c) {
                        witness(
                            &mut report.associativity_ok,
                            format!(
                                "associativity fails at ({a},{b},{c}): (ab)c={}, a(bc)={}",
                                g.mult[g.mult[a][b]][c],
                                g.mult[a][g.mult[b][c]]
                            ),
                            &mut report.counterexample,
                        );
                        break 'outer;
                    }
                }
            }
        }
    } else {
        // Deterministic stand-in for exhaustive checking on large products.
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..500_000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (state >> 40) as usize % n;
            let b = (state >> 20) as usize % n;
            let c = state as usize % n;
            if !check_assoc(a, b, c) {
                witness(
                    &mut report.associativity_ok,
                    format!("associativity fails at ({a},{b},{c})"),
                    &mut report.counterexample,
                );
                break;
            }
        }
    }

    'perm: for a in 0..n {
        let mut row_seen = vec![false; n];
        let mut col_seen = vec![false; n];
        for b in 0..n {
            let rv = g.mult[a][b];
            let cv = g.mult[b][a];
            if row_seen[rv] || col_seen[cv] {
                witness(
                    &mut report.permutation_slices_ok,
                    format!("row or column {a} of the table repeats an element"),
                    &mut report.counterexample,
                );
                break 'perm;
            }
            row_seen[rv] = true;
            col_seen[cv] = true;
        }
    }

    if let Some(rots) = &g.rotations {
        let mut ok = rots.len() == n;
        'rot: for a in 0..n {
            if !ok {
                break;
            }
            for b in 0..n {
                let c = g.mult[a][b];
                for i in 0..3 {
                    for j in 0..3 {
                        let prod: f64 =
                            (0..3).map(|k| rots[a][i][k] * rots[b][k][j]).sum();
                        if (prod - rots[c][i][j]).abs() > 1e-12 {
                            ok = false;
                            report.counterexample.get_or_insert(format!(
                                "rotation product mismatch at ({a},{b}) entry ({i},{j})"
                            ));
                            break 'rot;
                        }
                    }
                }
            }
        }
        report.rotations_ok = Some(ok);
    }

    report
}
