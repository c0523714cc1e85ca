//! Exact integer and rational linear algebra for rational subspaces of ℝⁿ.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, binomial, subset_rank, subsets};
use crate::error::{Error, Result};

pub type IntegerVector = Vec<BigInt>;

pub fn int_vec(xs: &[i64]) -> IntegerVector {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

/// Flip the sign so that the first nonzero entry is positive.
pub fn canonical_sign(v: &mut [BigInt]) {
    if let Some(x) = v.iter().find(|x| !x.is_zero()) {
        if x.is_negative() {
            for y in v.iter_mut() {
                *y = -std::mem::take(y);
            }
        }
    }
}

pub fn primitive_part(v: &[BigInt]) -> Result<IntegerVector> {
    let g = arith::gcd_all(v);
    if g.is_zero() {
        return Err(Error::ZeroVector);
    }
    let mut out: Vec<BigInt> = if g.is_one() { v.to_vec() } else { v.iter().map(|x| x / &g).collect() };
    canonical_sign(&mut out);
    Ok(out)
}

/// Matrix with rational entries, stored by columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    columns: Vec<Vec<BigRational>>,
}

impl RationalMatrix {
    pub fn from_columns(columns: Vec<Vec<BigRational>>) -> Result<Self> {
        let rows = columns.first().map(|c| c.len()).unwrap_or(0);
        if rows == 0 || columns.is_empty() {
            return Err(Error::Invalid("matrix dimensions must be positive".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch { expected: rows, got: c.len() });
        }
        Ok(RationalMatrix { rows, columns })
    }

    pub fn from_int_columns(columns: &[IntegerVector]) -> Result<Self> {
        Self::from_columns(
            columns.iter().map(|c| c.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect(),
        )
    }

    pub fn from_i64_columns(columns: &[&[i64]]) -> Result<Self> {
        let cols: Vec<IntegerVector> = columns.iter().map(|c| int_vec(c)).collect();
        Self::from_int_columns(&cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[BigRational] {
        &self.columns[j]
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigRational {
        &self.columns[j][i]
    }

    /// Each column scaled by the lcm of its denominators.
    pub fn integer_columns(&self) -> Vec<IntegerVector> {
        self.columns
            .iter()
            .map(|c| {
                let l = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                c.iter().map(|x| x.numer() * (&l / x.denom())).collect()
            })
            .collect()
    }
}

/// Determinant that first expands along rows or columns with a single nonzero entry.
pub fn det_sparse(m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    if n == 2 {
        return arith::mul(&m[0][0], &m[1][1]) - arith::mul(&m[0][1], &m[1][0]);
    }
    for i in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&j| !m[i][j].is_zero()).collect();
        if nz.is_empty() {
            return BigInt::zero();
        }
        if nz.len() == 1 {
            let j = nz[0];
            let pivot = m[i][j].clone();
            let sub = minor_matrix(&m, i, j);
            let d = arith::mul(&det_sparse(sub), &pivot);
            return if (i + j) % 2 == 1 { -d } else { d };
        }
    }
    for j in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&i| !m[i][j].is_zero()).collect();
        if nz.is_empty() {
            return BigInt::zero();
        }
        if nz.len() == 1 {
            let i = nz[0];
            let pivot = m[i][j].clone();
            let sub = minor_matrix(&m, i, j);
            let d = arith::mul(&det_sparse(sub), &pivot);
            return if (i + j) % 2 == 1 { -d } else { d };
        }
    }
    arith::det(m)
}

fn minor_matrix(m: &[Vec<BigInt>], r: usize, c: usize) -> Vec<Vec<BigInt>> {
    m.iter()
        .enumerate()
        .filter(|&(i, _)| i != r)
        .map(|(_, row)| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, x)| x.clone()).collect())
        .collect()
}

/// All e×e minors of the e vectors `rows` (length n), coordinate subsets in lexicographic order.
pub fn wedge_coords(rows: &[IntegerVector], n: usize) -> Vec<BigInt> {
    let e = rows.len();
    if e == 1 {
        return rows[0].clone();
    }
    subsets(n, e)
        .into_iter()
        .map(|cols| det_sparse(rows.iter().map(|r| cols.iter().map(|&c| r[c].clone()).collect()).collect()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlueckerVector {
    pub n: usize,
    pub e: usize,
    pub coords: Vec<BigInt>,
}

impl PlueckerVector {
    pub fn norm_sq(&self) -> BigInt {
        arith::norm_sq(&self.coords)
    }

    pub fn coord(&self, subset: &[usize]) -> &BigInt {
        &self.coords[subset_rank(self.n, subset)]
    }
}

pub fn pluecker(basis: &RationalMatrix) -> Result<PlueckerVector> {
    let cols = basis.integer_columns();
    let n = basis.rows();
    if cols.len() > n {
        return Err(Error::DegenerateBasis);
    }
    let raw = wedge_coords(&cols, n);
    let coords = primitive_part(&raw).map_err(|_| Error::DegenerateBasis)?;
    Ok(PlueckerVector { n, e: cols.len(), coords })
}

/// Row Hermite normal form of an integer matrix; zero rows are dropped.
/// Pivot columns strictly increase, pivots are positive, entries above a pivot lie in [0, pivot).
pub fn hnf_rows(rows: &[IntegerVector]) -> Vec<IntegerVector> {
    let Some(n) = rows.first().map(|r| r.len()) else {
        return Vec::new();
    };
    let mut m: Vec<IntegerVector> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    let mut r = 0;
    for c in 0..n {
        if r == m.len() {
            break;
        }
        loop {
            let nz: Vec<usize> = (r..m.len()).filter(|&i| !m[i][c].is_zero()).collect();
            if nz.len() <= 1 {
                if let Some(&p) = nz.first() {
                    m.swap(r, p);
                }
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| m[i][c].magnitude().clone()).unwrap();
            for &i in &nz {
                if i == p {
                    continue;
                }
                let q = m[i][c].div_floor(&m[p][c]);
                let prow = m[p].clone();
                for (x, y) in m[i].iter_mut().zip(&prow) {
                    if !y.is_zero() {
                        *x -= &q * y;
                    }
                }
            }
        }
        if r < m.len() && !m[r][c].is_zero() {
            if m[r][c].is_negative() {
                for x in m[r].iter_mut() {
                    *x = -std::mem::take(x);
                }
            }
            let piv = m[r][c].clone();
            let prow = m[r].clone();
            for i in 0..r {
                let q = m[i][c].div_floor(&piv);
                if !q.is_zero() {
                    for (x, y) in m[i].iter_mut().zip(&prow) {
                        if !y.is_zero() {
                            *x -= &q * y;
                        }
                    }
                }
            }
            r += 1;
        }
    }
    m.truncate(r);
    m.retain(|row| row.iter().any(|x| !x.is_zero()));
    m
}

/// Z-basis of {x ∈ Zⁿ : M x = 0} for M given by rows of length n.
pub fn integer_kernel(rows: &[IntegerVector], n: usize) -> Vec<IntegerVector> {
    let r = rows.len();
    if r == 0 {
        return (0..n).map(|i| unit(n, i)).collect();
    }
    // [Mᵀ | I] reduced on the left block; zero left parts carry kernel vectors.
    let aug: Vec<IntegerVector> = (0..n)
        .map(|i| {
            let mut row: IntegerVector = rows.iter().map(|mr| mr[i].clone()).collect();
            row.extend(unit(n, i));
            row
        })
        .collect();
    let h = hnf_rows(&aug);
    let mut ker: Vec<IntegerVector> = h.into_iter().filter(|row| row[..r].iter().all(|x| x.is_zero())).map(|row| row[r..].to_vec()).collect();
    if ker.is_empty() {
        return ker;
    }
    ker = hnf_rows(&ker);
    ker
}

pub fn unit(n: usize, i: usize) -> IntegerVector {
    (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()
}

/// A rational subspace represented by the canonical Z-basis of B ∩ Zⁿ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalSubspace {
    n: usize,
    zbasis: Vec<IntegerVector>,
    pluecker: PlueckerVector,
    height_sq: BigInt,
}

impl RationalSubspace {
    /// Subspace spanned by integer vectors, saturating only when the vectors are not already a Z-basis.
    pub fn from_integer_rows(rows: &[IntegerVector]) -> Result<Self> {
        let n = rows.first().map(|r| r.len()).ok_or(Error::DegenerateBasis)?;
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        if rows.len() > n {
            return Err(Error::DegenerateBasis);
        }
        let raw = wedge_coords(rows, n);
        let g = arith::gcd_all(&raw);
        if g.is_zero() {
            return Err(Error::DegenerateBasis);
        }
        if g.is_one() {
            let mut coords = raw;
            canonical_sign(&mut coords);
            return Ok(Self::assemble(n, hnf_rows(rows), coords));
        }
        let equations = integer_kernel(rows, n);
        let zrows = integer_kernel(&equations, n);
        let mut coords = wedge_coords(&zrows, n);
        if !arith::gcd_all(&coords).is_one() {
            return Err(Error::Verification("saturated basis has non-unit Plücker gcd".into()));
        }
        canonical_sign(&mut coords);
        Ok(Self::assemble(n, zrows, coords))
    }

    fn assemble(n: usize, zbasis: Vec<IntegerVector>, coords: Vec<BigInt>) -> Self {
        let e = zbasis.len();
        let height_sq = arith::norm_sq(&coords);
        RationalSubspace { n, zbasis, pluecker: PlueckerVector { n, e, coords }, height_sq }
    }

    /// Span of possibly dependent integer vectors; None for the zero space.
    pub fn span(rows: &[IntegerVector]) -> Result<Option<Self>> {
        let h = hnf_rows(rows);
        if h.is_empty() {
            return Ok(None);
        }
        Self::from_integer_rows(&h).map(Some)
    }

    pub fn full(n: usize) -> Self {
        Self::assemble(n, (0..n).map(|i| unit(n, i)).collect(), vec![BigInt::one()])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.zbasis.len()
    }

    pub fn zbasis(&self) -> &[IntegerVector] {
        &self.zbasis
    }

    pub fn pluecker(&self) -> &PlueckerVector {
        &self.pluecker
    }

    pub fn height_sq(&self) -> &BigInt {
        &self.height_sq
    }

    /// log₂ H(B).
    pub fn log2_height(&self) -> f64 {
        0.5 * arith::log2_abs(&self.height_sq)
    }

    /// Linear forms c_I with c_I·Y the I-th coordinate of Y ∧ Z₁ ∧ … ∧ Z_e, one per (e+1)-subset I.
    pub fn wedge_forms(&self) -> Vec<Vec<(usize, BigInt)>> {
        let e = self.dim();
        subsets(self.n, e + 1)
            .into_iter()
            .map(|set| {
                let mut form = Vec::new();
                for (p, &i) in set.iter().enumerate() {
                    let rest: Vec<usize> = set.iter().copied().filter(|&x| x != i).collect();
                    let c = self.pluecker.coord(&rest);
                    if c.is_zero() {
                        continue;
                    }
                    form.push((i, if p % 2 == 1 { -c.clone() } else { c.clone() }));
                }
                form
            })
            .collect()
    }

    /// Coordinates of Y ∧ Z₁ ∧ … ∧ Z_e, up to a global sign.
    pub fn wedge_with(&self, y: &[BigInt]) -> Result<Vec<BigInt>> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: y.len() });
        }
        Ok(self.wedge_forms().iter().map(|f| f.iter().map(|(i, c)| c * &y[*i]).sum()).collect())
    }

    pub fn to_json(&self) -> SubspaceJson {
        SubspaceJson {
            n: self.n,
            e: self.dim(),
            zbasis: self.zbasis.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect(),
        }
    }

    pub fn from_json(j: &SubspaceJson) -> Result<Self> {
        let rows: Vec<IntegerVector> = j
            .zbasis
            .iter()
            .map(|r| r.iter().map(|s| s.parse::<BigInt>().map_err(|e| Error::Invalid(format!("{s}: {e}")))).collect())
            .collect::<Result<_>>()?;
        if rows.len() != j.e {
            return Err(Error::DimensionMismatch { expected: j.e, got: rows.len() });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != j.n) {
            return Err(Error::DimensionMismatch { expected: j.n, got: r.len() });
        }
        if rows.len() == j.n {
            return Ok(Self::full(j.n));
        }
        Self::from_integer_rows(&rows)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceJson {
    pub n: usize,
    pub e: usize,
    pub zbasis: Vec<Vec<String>>,
}

pub fn saturate(basis: &RationalMatrix) -> Result<RationalSubspace> {
    let cols = basis.integer_columns();
    if cols.len() == basis.rows() {
        if arith::det(cols.clone()).is_zero() {
            return Err(Error::DegenerateBasis);
        }
        return Ok(RationalSubspace::full(basis.rows()));
    }
    RationalSubspace::from_integer_rows(&cols)
}

pub fn height_sq(b: &RationalSubspace) -> BigInt {
    b.height_sq.clone()
}

pub fn orthogonal_complement(b: &RationalSubspace) -> Result<RationalSubspace> {
    if b.dim() == 0 || b.dim() >= b.n {
        return Err(Error::TrivialComplement);
    }
    let k = integer_kernel(&b.zbasis, b.n);
    RationalSubspace::from_integer_rows(&k)
}

pub fn contains(y: &[BigInt], b: &RationalSubspace) -> Result<bool> {
    if b.dim() == b.n {
        if y.len() != b.n {
            return Err(Error::DimensionMismatch { expected: b.n, got: y.len() });
        }
        return Ok(true);
    }
    Ok(b.wedge_with(y)?.iter().all(|x| x.is_zero()))
}

fn support_within(b: &RationalSubspace, lo: usize, hi: usize) -> bool {
    b.zbasis.iter().all(|r| r.iter().enumerate().all(|(i, x)| x.is_zero() || (lo..hi).contains(&i)))
}

/// B ⊕ C for B supported on the first k coordinates and C on the remaining ones.
pub fn block_direct_sum(b: &RationalSubspace, c: &RationalSubspace, k: usize) -> Result<RationalSubspace> {
    if b.n != c.n {
        return Err(Error::DimensionMismatch { expected: b.n, got: c.n });
    }
    let n = b.n;
    if k > n || !support_within(b, 0, k) || !support_within(c, k, n) {
        return Err(Error::NotCoordinateDisjoint);
    }
    direct_sum_disjoint(&[b, c])
}

/// Direct sum of subspaces with pairwise disjoint coordinate supports.
/// Plücker coordinates factor blockwise, so no minors of the combined basis are needed.
pub fn direct_sum_disjoint(parts: &[&RationalSubspace]) -> Result<RationalSubspace> {
    let n = parts.first().ok_or(Error::DegenerateBasis)?.n;
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (p, b) in parts.iter().enumerate() {
        if b.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.n });
        }
        for row in &b.zbasis {
            for (i, x) in row.iter().enumerate() {
                if !x.is_zero() {
                    match owner[i] {
                        Some(q) if q != p => return Err(Error::NotCoordinateDisjoint),
                        _ => owner[i] = Some(p),
                    }
                }
            }
        }
    }
    let e: usize = parts.iter().map(|b| b.dim()).sum();
    let mut rows: Vec<IntegerVector> = parts.iter().flat_map(|b| b.zbasis.iter().cloned()).collect();
    if e == n {
        return Ok(RationalSubspace::full(n));
    }
    // Unowned coordinates go to the first block; they carry zero Plücker weight.
    let supp: Vec<Vec<usize>> = (0..parts.len())
        .map(|p| (0..n).filter(|&i| owner[i] == Some(p) || (owner[i].is_none() && p == 0)).collect())
        .collect();
    let mut coords = vec![BigInt::zero(); binomial(n, e)];
    for (r, set) in subsets(n, e).into_iter().enumerate() {
        let mut prod = BigInt::one();
        let mut inv = 0usize;
        let mut ok = true;
        for (p, b) in parts.iter().enumerate() {
            let part: Vec<usize> = set.iter().copied().filter(|i| supp[p].contains(i)).collect();
            if part.len() != b.dim() {
                ok = false;
                break;
            }
            if b.dim() == b.n {
                continue;
            }
            prod *= b.pluecker.coord(&part);
            if prod.is_zero() {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        // sign of the permutation sorting the block-ordered column list
        let order: Vec<usize> = (0..parts.len()).flat_map(|p| set.iter().copied().filter(|i| supp[p].contains(i)).collect::<Vec<_>>()).collect();
        for a in 0..order.len() {
            for bb in a + 1..order.len() {
                if order[a] > order[bb] {
                    inv += 1;
                }
            }
        }
        coords[r] = if inv % 2 == 1 { -prod } else { prod };
    }
    canonical_sign(&mut coords);
    rows = hnf_rows(&rows);
    Ok(RationalSubspace::assemble(n, rows, coords))
}

/// (H(ker p ∩ B)², H(p(B))²) for the coordinate projection p onto the indices in `idx`.
pub fn coordinate_projection_heights(b: &RationalSubspace, idx: &[usize]) -> Result<(BigInt, BigInt)> {
    let n = b.n;
    if let Some(&i) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { j: i, max: n - 1 });
    }
    let keep: Vec<bool> = (0..n).map(|i| idx.contains(&i)).collect();
    let projected: Vec<IntegerVector> = b
        .zbasis
        .iter()
        .map(|r| r.iter().enumerate().map(|(i, x)| if keep[i] { x.clone() } else { BigInt::zero() }).collect())
        .collect();
    let image = RationalSubspace::span(&projected)?;
    // combinations of the Z-basis whose projection vanishes
    let e = b.dim();
    let eqs: Vec<IntegerVector> = idx.iter().map(|&i| (0..e).map(|j| b.zbasis[j][i].clone()).collect()).collect();
    let combos = integer_kernel(&eqs, e);
    let kernel_rows: Vec<IntegerVector> = combos
        .iter()
        .map(|c| (0..n).map(|i| (0..e).map(|j| &c[j] * &b.zbasis[j][i]).sum()).collect())
        .collect();
    let kernel = RationalSubspace::span(&kernel_rows)?;
    let h = |s: Option<RationalSubspace>| s.map(|s| s.height_sq).unwrap_or_else(BigInt::one);
    Ok((h(kernel), h(image)))
}

/// Laplace expansion of det(M) along the column set J, compared with a direct determinant.
pub fn laplace_identity_check(m: &RationalMatrix, cols_j: &[usize]) -> Result<bool> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.cols() });
    }
    let r = cols_j.len();
    if r == 0 || r >= n || cols_j.iter().any(|&j| j >= n) {
        return Err(Error::Invalid("column subset must have size in 1..n-1".into()));
    }
    let l = m.columns.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let a: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| m.entry(i, j).numer() * (&l / m.entry(i, j).denom())).collect()).collect();
    let mut jset = cols_j.to_vec();
    jset.sort_unstable();
    jset.dedup();
    if jset.len() != r {
        return Err(Error::Invalid("repeated column index".into()));
    }
    let jbar: Vec<usize> = (0..n).filter(|j| !jset.contains(j)).collect();
    let sub = |rows: &[usize], cols: &[usize]| -> Vec<Vec<BigInt>> { rows.iter().map(|&i| cols.iter().map(|&j| a[i][j].clone()).collect()).collect() };
    let sj: usize = jset.iter().sum();
    let mut total = BigInt::zero();
    for iset in subsets(n, r) {
        let ibar: Vec<usize> = (0..n).filter(|i| !iset.contains(i)).collect();
        let term = arith::det(sub(&iset, &jset)) * arith::det(sub(&ibar, &jbar));
        let si: usize = iset.iter().sum();
        if (si + sj) % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
    }
    Ok(total == arith::det(a))
}

/// Cache-free helper: subspaces keyed by canonical basis, first occurrence kept.
pub fn dedup_subspaces(items: Vec<RationalSubspace>) -> Vec<RationalSubspace> {
    let mut seen: HashMap<Vec<IntegerVector>, ()> = HashMap::new();
    let mut out = Vec::new();
    for b in items {
        if seen.insert(b.zbasis.clone(), ()).is_none() {
            out.push(b);
        }
    }
    out
}
