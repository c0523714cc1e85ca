//! Oracles and exponent estimation: enumeration by height, best-approximation records,
//! slope fits, Minkowski checks and direct-sum verification.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angles::{g_index, principal_sines, PrecisionContext, SubspaceRealization};
use crate::arith;
use crate::constructions::SumConstruction;
use crate::error::{Error, Result};
use crate::lattice::{canonical_sign, hnf_rows, orthogonal_complement, IntegerVector, RationalSubspace};
use crate::scalar::{Field, MpFloat, Real};
use crate::target::{Measured, SeriesTarget};

/// Anything ψ_j can be measured against.
pub trait ApproxTarget: Sync {
    fn ambient(&self) -> usize;
    fn dim(&self) -> usize;
    fn measure(&self, b: &RationalSubspace, j: usize, ctx: &PrecisionContext) -> Result<Measured>;
}

impl ApproxTarget for SeriesTarget {
    fn ambient(&self) -> usize {
        self.n
    }
    fn dim(&self) -> usize {
        self.d()
    }
    fn measure(&self, b: &RationalSubspace, j: usize, ctx: &PrecisionContext) -> Result<Measured> {
        self.psi(b, j, ctx)
    }
}

/// A target given by fixed real generators, optionally known to be a rational subspace.
#[derive(Clone, Debug)]
pub struct FixedTarget {
    pub realization: SubspaceRealization<MpFloat>,
    pub exact: Option<RationalSubspace>,
}

impl FixedTarget {
    pub fn real(generators: Vec<Vec<MpFloat>>) -> Result<Self> {
        Ok(FixedTarget { realization: SubspaceRealization::new(generators, crate::angles::Provenance::Exact)?, exact: None })
    }

    pub fn rational(a: RationalSubspace, ctx: &PrecisionContext) -> Result<Self> {
        Ok(FixedTarget { realization: SubspaceRealization::from_subspace(&a, ctx)?, exact: Some(a) })
    }

    /// The line through (1, √s) at the working precision of `ctx`.
    pub fn sqrt_line(s: u64, ctx: &PrecisionContext) -> Result<Self> {
        let bits = ctx.working();
        Self::real(vec![vec![MpFloat::from_i64(1, bits), MpFloat::from_i64(s as i64, bits).sqrt()]])
    }
}

/// dim(A ∩ B) for rational A, B.
pub fn intersection_dim(a: &RationalSubspace, b: &RationalSubspace) -> usize {
    let mut rows = a.zbasis().to_vec();
    rows.extend_from_slice(b.zbasis());
    a.dim() + b.dim() - hnf_rows(&rows).len()
}

impl ApproxTarget for FixedTarget {
    fn ambient(&self) -> usize {
        self.realization.n
    }
    fn dim(&self) -> usize {
        self.realization.dim()
    }
    fn measure(&self, b: &RationalSubspace, j: usize, ctx: &PrecisionContext) -> Result<Measured> {
        let (d, e, n) = (self.dim(), b.dim(), self.ambient());
        let t = d.min(e);
        let g = g_index(d, e, n);
        if j == 0 || j + g > t {
            return Err(Error::IndexOutOfRange { j, max: t.saturating_sub(g) });
        }
        let bits = ctx.working();
        if let Some(a) = &self.exact {
            if intersection_dim(a, b) >= j + g {
                let z = MpFloat::from_i64(0, bits);
                return Ok(Measured { value: z.clone(), error_radius: z, bits });
            }
        }
        let rb = SubspaceRealization::from_subspace(b, ctx)?;
        let spec = principal_sines(&self.realization, &rb, ctx)?;
        Ok(Measured { value: spec.psi(j)?, error_radius: spec.error_radius, bits })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Constructed,
    Enumerated,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Constructed => "constructed",
            Source::Enumerated => "enumerated",
        }
    }
}

/// A labelled candidate subspace (label: N, an N-tuple, or an enumeration id).
#[derive(Clone, Debug)]
pub struct Candidate {
    pub label: String,
    pub subspace: RationalSubspace,
}

impl Candidate {
    pub fn new(label: impl Into<String>, subspace: RationalSubspace) -> Self {
        Candidate { label: label.into(), subspace }
    }
}

#[derive(Clone, Debug)]
pub struct ApproximationRecord {
    pub label: String,
    pub subspace: RationalSubspace,
    pub height_sq: BigInt,
    pub psi: Measured,
    pub slope: f64,
}

impl ApproximationRecord {
    pub fn log10_height(&self) -> f64 {
        0.5 * arith::log2_abs(&self.height_sq) * std::f64::consts::LOG10_2
    }
}

#[derive(Clone, Debug)]
pub struct RecordSequence {
    pub target: String,
    pub e: usize,
    pub j: usize,
    pub source: Source,
    pub mode_flags: String,
    pub records: Vec<ApproximationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordJson {
    pub source: String,
    pub label: String,
    pub e: usize,
    pub j: usize,
    pub height_sq: String,
    pub log10_height: String,
    pub psi: String,
    pub psi_error_radius: String,
    pub precision_bits: u32,
    pub slope: String,
    pub mode_flags: String,
    pub zbasis: Vec<Vec<String>>,
}

pub const CSV_HEADER: &str = "source,N_or_id,H_sq_decimal,log10_H,psi_decimal,slope,mode_flags";

impl RecordSequence {
    pub fn slopes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.slope).collect()
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{:.6},{},{:.6},{}",
                    self.source.as_str(),
                    r.label,
                    r.height_sq,
                    r.log10_height(),
                    r.psi.value.to_sci_string(20),
                    r.slope,
                    self.mode_flags
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for row in self.csv_rows() {
            s.push_str(&row);
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Vec<RecordJson> {
        self.records
            .iter()
            .map(|r| RecordJson {
                source: self.source.as_str().into(),
                label: r.label.clone(),
                e: self.e,
                j: self.j,
                height_sq: r.height_sq.to_string(),
                log10_height: format!("{:.12}", r.log10_height()),
                psi: r.psi.value.to_sci_string(40),
                psi_error_radius: r.psi.error_radius.to_sci_string(6),
                precision_bits: r.psi.bits,
                slope: format!("{:.12}", r.slope),
                mode_flags: self.mode_flags.clone(),
                zbasis: r.subspace.zbasis().iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect(),
            })
            .collect()
    }
}

/// −log ψ / log H.
pub fn record_slope(psi: &Measured, height_sq: &BigInt) -> f64 {
    crate::target::slope(psi.log2(), height_sq)
}

const MAX_RETRY_BITS: u32 = 1 << 16;

/// ψ_j with the exact-intersection rule: values under 4·radius are retried at doubled
/// precision, and `None` marks an exactly vanishing ψ.
fn measure_resolved<T: ApproxTarget + ?Sized>(a: &T, b: &RationalSubspace, j: usize, ctx: &PrecisionContext) -> Result<Option<Measured>> {
    let mut c = *ctx;
    loop {
        let m = a.measure(b, j, &c)?;
        if m.value.is_zero_value() && m.error_radius.is_zero_value() {
            return Ok(None);
        }
        let four_r = m.error_radius.clone() * MpFloat::from_i64(4, m.bits);
        if m.value > four_r {
            return Ok(Some(m));
        }
        if c.bits >= MAX_RETRY_BITS {
            return Err(Error::Precision { suggested_bits: c.bits * 2 });
        }
        c = PrecisionContext::new(c.bits * 2);
    }
}

fn sort_key(b: &RationalSubspace) -> (BigInt, Vec<BigInt>) {
    (b.height_sq().clone(), b.pluecker().coords.clone())
}

fn measure_all<T: ApproxTarget + ?Sized>(a: &T, cands: &[Candidate], j: usize, ctx: &PrecisionContext) -> Result<Vec<Option<Measured>>> {
    cands.par_iter().map(|c| measure_resolved(a, &c.subspace, j, ctx)).collect()
}

fn check_dims<T: ApproxTarget + ?Sized>(a: &T, cands: &[Candidate]) -> Result<usize> {
    let e = cands.first().map(|c| c.subspace.dim()).ok_or(Error::Invalid("empty candidate family".into()))?;
    for c in cands {
        if c.subspace.n() != a.ambient() {
            return Err(Error::DimensionMismatch { expected: a.ambient(), got: c.subspace.n() });
        }
        if c.subspace.dim() != e {
            return Err(Error::DimensionMismatch { expected: e, got: c.subspace.dim() });
        }
    }
    Ok(e)
}

/// Strict ψ_j minima by increasing height. Height-one candidates carry no slope and are skipped.
pub fn records<T: ApproxTarget + ?Sized>(a: &T, mut cands: Vec<Candidate>, j: usize, ctx: &PrecisionContext, target: &str, mode_flags: &str) -> Result<RecordSequence> {
    let e = check_dims(a, &cands)?;
    cands.retain(|c| !c.subspace.height_sq().is_one());
    cands.sort_by_cached_key(|c| sort_key(&c.subspace));
    cands.dedup_by(|x, y| x.subspace.pluecker() == y.subspace.pluecker());
    let vals = measure_all(a, &cands, j, ctx)?;
    let mut best: Option<MpFloat> = None;
    let mut out = Vec::new();
    let items: Vec<(Candidate, Measured)> = cands.into_iter().zip(vals).filter_map(|(c, m)| m.map(|m| (c, m))).collect();
    // within one height only the smallest ψ can improve on all lower heights
    let mut i = 0;
    while i < items.len() {
        let mut end = i + 1;
        while end < items.len() && items[end].0.subspace.height_sq() == items[i].0.subspace.height_sq() {
            end += 1;
        }
        let pick = (i..end).min_by(|&x, &y| items[x].1.value.partial_cmp(&items[y].1.value).unwrap_or(std::cmp::Ordering::Equal)).unwrap();
        let better = match &best {
            None => true,
            Some(b) => items[pick].1.value.clone() + items[pick].1.error_radius.clone() < *b,
        };
        if better {
            let (c, m) = items[pick].clone();
            best = Some(m.value.clone());
            let slope = record_slope(&m, c.subspace.height_sq());
            out.push(ApproximationRecord { label: c.label, height_sq: c.subspace.height_sq().clone(), subspace: c.subspace, psi: m, slope });
        }
        i = end;
    }
    Ok(RecordSequence { target: target.into(), e, j, source: Source::Enumerated, mode_flags: mode_flags.into(), records: out })
}

/// Every member of a constructed family, measured in the given order.
pub fn family_sequence<T: ApproxTarget + ?Sized>(a: &T, cands: Vec<Candidate>, j: usize, ctx: &PrecisionContext, target: &str, mode_flags: &str) -> Result<RecordSequence> {
    let e = check_dims(a, &cands)?;
    let vals = measure_all(a, &cands, j, ctx)?;
    let mut out = Vec::new();
    for (c, m) in cands.into_iter().zip(vals) {
        let m = m.ok_or_else(|| Error::Verification(format!("family member {} meets the target exactly", c.label)))?;
        let slope = record_slope(&m, c.subspace.height_sq());
        out.push(ApproximationRecord { label: c.label, height_sq: c.subspace.height_sq().clone(), subspace: c.subspace, psi: m, slope });
    }
    Ok(RecordSequence { target: target.into(), e, j, source: Source::Constructed, mode_flags: mode_flags.into(), records: out })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub slopes: Vec<f64>,
    pub log10_heights: Vec<f64>,
    pub window: usize,
    pub estimate: f64,
}

/// Max of the slopes over the last `window` records (default: the last half).
pub fn exponent_estimate(seq: &RecordSequence, window: Option<usize>) -> Result<Estimate> {
    let n = seq.records.len();
    if n < 2 {
        return Err(Error::TooFewRecords(n));
    }
    let w = window.unwrap_or(n.div_ceil(2)).clamp(1, n);
    let slopes = seq.slopes();
    let estimate = slopes[n - w..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Estimate { log10_heights: seq.records.iter().map(|r| r.log10_height()).collect(), slopes, window: w, estimate })
}

/// Primitive sign-canonical vectors of Zⁿ with ‖v‖² ≤ `height_sq_bound`, sorted by (‖v‖², v).
pub fn enumerate_line_vectors(n: usize, height_sq_bound: u64) -> Vec<Vec<i64>> {
    if n == 0 || height_sq_bound == 0 {
        return Vec::new();
    }
    let r = (height_sq_bound as f64).sqrt().floor() as i64 + 1;
    let r = (-r..=r).rev().find(|x| (x * x) as u64 <= height_sq_bound).unwrap_or(0);
    let mut out: Vec<Vec<i64>> = (0..=r)
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut found = Vec::new();
            let mut cur = vec![first];
            fill(n, first * first, height_sq_bound, r, first == 0, &mut cur, &mut found);
            found
        })
        .collect();
    out.sort_by_key(|v| (v.iter().map(|x| (x * x) as u64).sum::<u64>(), v.clone()));
    out
}

fn fill(n: usize, acc: i64, bound: u64, r: i64, leading_zero: bool, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if cur.len() == n {
        if acc > 0 && cur.iter().fold(0i64, |g, &x| num_integer::gcd(g, x)) == 1 {
            out.push(cur.clone());
        }
        return;
    }
    let lo = if leading_zero { 0 } else { -r };
    for x in lo..=r {
        let a = acc + x * x;
        if a as u64 > bound {
            continue;
        }
        cur.push(x);
        fill(n, a, bound, r, leading_zero && x == 0, cur, out);
        cur.pop();
    }
}

/// Every rational line of height ≤ √`height_sq_bound`, each exactly once.
pub fn enumerate_lines(n: usize, height_sq_bound: u64) -> Vec<RationalSubspace> {
    enumerate_line_vectors(n, height_sq_bound)
        .into_par_iter()
        .map(|v| RationalSubspace::from_integer_rows(&[v.iter().map(|&x| BigInt::from(x)).collect()]).expect("primitive vector"))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationMode {
    ExactLines,
    DualHyperplanes,
    CandidateSubspaces,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationConfig {
    pub n: usize,
    pub e: usize,
    pub height_sq_bound: u64,
}

impl EnumerationConfig {
    pub fn mode(&self) -> EnumerationMode {
        if self.e == 1 {
            EnumerationMode::ExactLines
        } else if self.e + 1 == self.n {
            EnumerationMode::DualHyperplanes
        } else {
            EnumerationMode::CandidateSubspaces
        }
    }

    /// Only the line and hyperplane modes are complete.
    pub fn complete(&self) -> bool {
        self.mode() != EnumerationMode::CandidateSubspaces
    }
}

/// Hermite-type constant c_e = (4/3)^{(e−1)/4}·(1+10⁻⁹).
pub fn minkowski_constant(e: usize) -> f64 {
    (4.0f64 / 3.0).powf((e as f64 - 1.0) / 4.0) * (1.0 + 1e-9)
}

/// Rational subspaces of dimension e and height² ≤ bound, sorted by (H², Plücker vector).
/// Intermediate dimensions are candidate-complete only: spans of e primitive vectors of norm
/// at most 2·c_e·√bound.
pub fn enumerate_subspaces(cfg: &EnumerationConfig) -> Result<Vec<RationalSubspace>> {
    let EnumerationConfig { n, e, height_sq_bound } = cfg.clone();
    if e == 0 || e > n {
        return Err(Error::OutOfRange(format!("e = {e} not in [1, {n}]")));
    }
    let mut out = match cfg.mode() {
        _ if e == n => vec![RationalSubspace::full(n)],
        EnumerationMode::ExactLines => enumerate_lines(n, height_sq_bound),
        EnumerationMode::DualHyperplanes => enumerate_lines(n, height_sq_bound).par_iter().map(orthogonal_complement).collect::<Result<Vec<_>>>()?,
        EnumerationMode::CandidateSubspaces => {
            let c = 2.0 * minkowski_constant(e);
            let vec_bound = (c * c * height_sq_bound as f64).floor() as u64;
            let vecs: Vec<IntegerVector> = enumerate_line_vectors(n, vec_bound).iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect();
            let hb = BigInt::from(height_sq_bound);
            let tuples = arith::subsets(vecs.len(), e);
            let found: Vec<RationalSubspace> = tuples
                .par_iter()
                .filter_map(|t| {
                    let rows: Vec<IntegerVector> = t.iter().map(|&i| vecs[i].clone()).collect();
                    let w = crate::lattice::wedge_coords(&rows, n);
                    if w.iter().all(|x| x.is_zero()) || arith::norm_sq(&w) > &hb * &hb * BigInt::from(1u64 << 20) {
                        return None;
                    }
                    let b = RationalSubspace::from_integer_rows(&rows).ok()?;
                    (b.height_sq() <= &hb).then_some(b)
                })
                .collect();
            let mut seen = HashSet::new();
            found.into_iter().filter(|b| seen.insert(b.pluecker().coords.clone())).collect()
        }
    };
    out.sort_by_cached_key(sort_key);
    out.dedup_by(|x, y| x.pluecker() == y.pluecker());
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiReport {
    pub e: usize,
    pub height_sq: String,
    pub shortest: Vec<String>,
    pub shortest_norm_sq: String,
    pub bound: f64,
    pub passed: bool,
}

/// Exact LLL (δ = 3/4) on integer row vectors.
pub fn lll_reduce(basis: &[IntegerVector]) -> Vec<IntegerVector> {
    let mut b: Vec<IntegerVector> = basis.to_vec();
    let k_max = b.len();
    if k_max < 2 {
        return b;
    }
    let gso = |b: &[IntegerVector]| -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
        let m = b.len();
        let mut bstar: Vec<Vec<BigRational>> = Vec::with_capacity(m);
        let mut mu = vec![vec![BigRational::zero(); m]; m];
        let mut norms = Vec::with_capacity(m);
        for i in 0..m {
            let mut v: Vec<BigRational> = b[i].iter().map(|x| BigRational::from_integer(x.clone())).collect();
            for k in 0..i {
                let num: BigRational = b[i].iter().zip(&bstar[k]).map(|(x, y)| BigRational::from_integer(x.clone()) * y).sum();
                mu[i][k] = num / &norms[k];
                for (vi, bk) in v.iter_mut().zip(&bstar[k]) {
                    *vi -= &mu[i][k] * bk;
                }
            }
            norms.push(v.iter().map(|x| x * x).sum::<BigRational>());
            bstar.push(v);
        }
        (mu, norms)
    };
    let delta = BigRational::new(3.into(), 4.into());
    let half = BigRational::new(1.into(), 2.into());
    let mut k = 1;
    while k < k_max {
        for jj in (0..k).rev() {
            let (mu, _) = gso(&b);
            if mu[k][jj].abs() > half {
                let r = mu[k][jj].round().to_integer();
                let bj = b[jj].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= &r * y;
                }
            }
        }
        let (mu, norms) = gso(&b);
        if norms[k] >= (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    b
}

/// Shortest nonzero vector of the lattice spanned by `basis` (exact norms, f64 pruning with slack).
pub fn shortest_vector(basis: &[IntegerVector]) -> IntegerVector {
    let b = lll_reduce(basis);
    let e = b.len();
    let gram: Vec<Vec<f64>> = (0..e).map(|i| (0..e).map(|j| arith::dot(&b[i], &b[j]).to_f64().unwrap_or(f64::INFINITY)).collect()).collect();
    // Cholesky: q(x) = Σ_i r_ii (x_i + Σ_{j>i} m_ij x_j)²
    let mut m = vec![vec![0.0; e]; e];
    let mut r = vec![0.0; e];
    for i in 0..e {
        let mut s = gram[i][i];
        for k in 0..i {
            s -= m[k][i] * m[k][i] * r[k];
        }
        r[i] = s;
        for j in i + 1..e {
            let mut t = gram[i][j];
            for k in 0..i {
                t -= m[k][i] * m[k][j] * r[k];
            }
            m[i][j] = t / r[i];
        }
    }
    let mut best = b[0].clone();
    let mut best_norm = arith::norm_sq(&best);
    let mut radius = best_norm.to_f64().unwrap() * (1.0 + 1e-6) + 1e-6;
    let mut x = vec![0i64; e];
    fn rec(i: usize, e: usize, partial: f64, x: &mut [i64], m: &[Vec<f64>], r: &[f64], radius: &mut f64, b: &[IntegerVector], best: &mut IntegerVector, best_norm: &mut BigInt) {
        let c: f64 = -(i + 1..e).map(|j| m[i][j] * x[j] as f64).sum::<f64>();
        let span = ((*radius - partial) / r[i]).max(0.0).sqrt();
        let lo = (c - span).ceil() as i64;
        let hi = (c + span).floor() as i64;
        for xi in lo..=hi {
            x[i] = xi;
            let p = partial + r[i] * (xi as f64 - c) * (xi as f64 - c);
            if p > *radius {
                continue;
            }
            if i == 0 {
                if x.iter().all(|&v| v == 0) {
                    continue;
                }
                let n = b[0].len();
                let v: IntegerVector = (0..n).map(|t| (0..e).map(|k| BigInt::from(x[k]) * &b[k][t]).sum()).collect();
                let nv = arith::norm_sq(&v);
                if nv < *best_norm {
                    *radius = nv.to_f64().unwrap() * (1.0 + 1e-6) + 1e-6;
                    *best = v;
                    *best_norm = nv;
                }
            } else {
                rec(i - 1, e, p, x, m, r, radius, b, best, best_norm);
            }
        }
        x[i] = 0;
    }
    rec(e - 1, e, 0.0, &mut x, &m, &r, &mut radius, &b, &mut best, &mut best_norm);
    let mut best = best;
    canonical_sign(&mut best);
    best
}

/// A nonzero v ∈ B ∩ Zⁿ with ‖v‖ ≤ c_e·H(B)^{1/e}, found by exhaustive shortest-vector search.
pub fn minkowski_check(b: &RationalSubspace) -> Result<MinkowskiReport> {
    let e = b.dim();
    if e == 0 {
        return Err(Error::Invalid("trivial subspace".into()));
    }
    let v = shortest_vector(b.zbasis());
    let nv = arith::norm_sq(&v);
    let c = minkowski_constant(e);
    let lh = arith::log2_abs(b.height_sq());
    // ‖v‖^{2e} ≤ c^{2e} H²
    let passed = e as f64 * arith::log2_abs(&nv) <= 2.0 * e as f64 * c.log2() + lh;
    Ok(MinkowskiReport {
        e,
        height_sq: b.height_sq().to_string(),
        shortest: v.iter().map(|x| x.to_string()).collect(),
        shortest_norm_sq: nv.to_string(),
        bound: c * (lh / (2.0 * e as f64)).exp2(),
        passed,
    })
}

/// Best-approximation records of a line target in ℝ² among all rational lines of height
/// ≤ √`height_sq_bound`. A first pass keeps the two nearest lattice lines per abscissa; each gap
/// between consecutive records is then certified, and widened by brute force where the
/// certificate fails, until the record list is stable.
pub fn planar_records(a: &FixedTarget, height_sq_bound: u64, ctx: &PrecisionContext, mode_flags: &str) -> Result<RecordSequence> {
    if a.ambient() != 2 || a.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 2, got: a.ambient() });
    }
    let bits = ctx.working();
    let g = &a.realization.generators[0];
    let swap = g[0].abs() < g[1].abs();
    let (x0, y0) = if swap { (g[1].clone(), g[0].clone()) } else { (g[0].clone(), g[1].clone()) };
    let ratio = y0.clone() / x0.clone();
    let lead = x0.abs() / (x0.clone() * x0.clone() + y0.clone() * y0.clone()).sqrt();
    let hmax = (height_sq_bound as f64).sqrt().floor() as i64;
    let hb = height_sq_bound as i128;
    let to_line = |p: i64, q: i64| -> Option<(i64, i64)> {
        let (p, q) = if swap { (q, p) } else { (p, q) };
        let g = num_integer::gcd(p, q);
        if g != 1 || (p as i128 * p as i128 + q as i128 * q as i128) > hb {
            return None;
        }
        Some(if p < 0 || (p == 0 && q < 0) { (-p, -q) } else { (p, q) })
    };
    let mut pool: HashSet<(i64, i64)> = HashSet::new();
    let pass1: Vec<(i64, i64)> = (0..=hmax)
        .into_par_iter()
        .flat_map_iter(|p| {
            let c = (MpFloat::from_i64(p, bits) * ratio.clone()).floor().to_int().to_i64().unwrap_or(i64::MAX / 2);
            [to_line(p, c), to_line(p, c + 1)].into_iter().flatten().collect::<Vec<_>>()
        })
        .collect();
    pool.extend(pass1);
    pool.insert(if swap { (1, 0) } else { (0, 1) });
    let make = |pool: &HashSet<(i64, i64)>| -> Result<RecordSequence> {
        let cands: Vec<Candidate> = pool
            .iter()
            .map(|&(p, q)| Candidate::new(format!("({p},{q})"), RationalSubspace::from_integer_rows(&[vec![BigInt::from(p), BigInt::from(q)]]).expect("primitive")))
            .collect();
        records(a, cands, 1, ctx, "planar", mode_flags)
    };
    let mut seq = make(&pool)?;
    let mut certified: HashSet<usize> = HashSet::new();
    loop {
        let mut widened = false;
        let hs: Vec<f64> = seq.records.iter().map(|r| 0.5 * arith::log2_abs(&r.height_sq)).map(f64::exp2).collect();
        for i in 0..seq.records.len() {
            let upper = if i + 1 < hs.len() { hs[i + 1] } else { hmax as f64 + 1.0 };
            let key = (upper * 1e3) as usize ^ i;
            if certified.contains(&key) {
                continue;
            }
            // a line off the two nearest has |x·q − y·p| ≥ |x|, so ψ ≥ lead/H
            let psi = seq.records[i].psi.value.to_f64();
            let lower = hs[i];
            if lead.to_f64() / upper > psi * (1.0 + 1e-9) {
                certified.insert(key);
                continue;
            }
            let w = (psi * upper / lead.to_f64()).ceil() as i64 + 1;
            let pmax = (upper.floor() as i64).min(hmax);
            let extra: Vec<(i64, i64)> = (0..=pmax)
                .into_par_iter()
                .flat_map_iter(|p| {
                    let c = (MpFloat::from_i64(p, bits) * ratio.clone()).floor().to_int().to_i64().unwrap_or(i64::MAX / 2);
                    (c - w..=c + w + 1)
                        .filter_map(|q| {
                            let h2 = (p as i128 * p as i128 + q as i128 * q as i128) as f64;
                            (h2 > lower * lower * (1.0 - 1e-12) && h2 <= upper * upper * (1.0 + 1e-12)).then(|| to_line(p, q)).flatten()
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let before = pool.len();
            pool.extend(extra);
            certified.insert(key);
            if pool.len() != before {
                widened = true;
            }
        }
        if !widened {
            break;
        }
        seq = make(&pool)?;
    }
    Ok(seq)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubsetEstimate {
    pub blocks: Vec<usize>,
    pub index: usize,
    pub estimate: f64,
    pub predicted: String,
}

#[derive(Clone, Debug)]
pub struct DirectSumReport {
    pub e: usize,
    pub k: usize,
    pub left: RecordSequence,
    pub left_estimate: f64,
    pub right: Vec<SubsetEstimate>,
    pub right_max: f64,
    pub predicted: Option<BigRational>,
    pub relative_gap: f64,
}

/// Compares the estimate of μ(A|e)_k (records against ∪_J C^J_N) with the maximum of the
/// per-subset estimates μ(A_J|e) over J of size k + g(A, e).
pub fn verify_direct_sum(sum: &SumConstruction, e: usize, k: usize, max_bits: f64, window: Option<usize>, ctx: &PrecisionContext) -> Result<DirectSumReport> {
    let d = sum.d;
    let g = g_index(d, e, sum.n);
    let size = k + g;
    if size == 0 || size > d {
        return Err(Error::OutOfRange(format!("k + g = {size} not in [1, {d}]")));
    }
    let flags = sum.hyp.flags();
    let mut all = Vec::new();
    let mut right = Vec::new();
    for blocks in arith::subsets(d, size) {
        let schedule = sum.diagonal_schedule(&blocks, e, max_bits)?;
        let cands: Vec<Candidate> = schedule
            .iter()
            .map(|ns| Ok(Candidate::new(format!("J{:?}N{:?}", blocks, ns).replace(' ', ""), sum.cjn(&blocks, ns, e)?)))
            .collect::<Result<_>>()?;
        let sub = sum.sub_target(&blocks);
        let idx = size - g_index(size, e, sum.n);
        let seq = records(&sub, cands.clone(), idx, ctx, &format!("A_J{blocks:?}"), &flags)?;
        let est = exponent_estimate(&seq, window)?;
        right.push(SubsetEstimate {
            predicted: crate::series::format_rational(&sum.predicted_subset_exponent(&blocks, e)?),
            blocks,
            index: idx,
            estimate: est.estimate,
        });
        all.extend(cands);
    }
    let left = records(&sum.target, all, k, ctx, "A", &flags)?;
    let left_estimate = exponent_estimate(&left, window)?.estimate;
    let right_max = right.iter().map(|r| r.estimate).fold(f64::NEG_INFINITY, f64::max);
    let predicted = if g == 0 { sum.predicted_sum_exponent(e, k).ok() } else { None };
    Ok(DirectSumReport { e, k, left, left_estimate, right, right_max, predicted, relative_gap: (left_estimate - right_max).abs() / right_max })
}

/// ψ_j(A, B) and ψ_j(A⊥, B⊥) for rational A, B.
pub fn duality_pair(a: &RationalSubspace, b: &RationalSubspace, j: usize, ctx: &PrecisionContext) -> Result<(Measured, Measured)> {
    let fa = FixedTarget::rational(a.clone(), ctx)?;
    let fd = FixedTarget::rational(orthogonal_complement(a)?, ctx)?;
    Ok((fa.measure(b, j, ctx)?, fd.measure(&orthogonal_complement(b)?, j, ctx)?))
}

/// Estimate of μ(A|e)_j computed on the dual side: records of A⊥ (A a rational truncation)
/// against the complements of the candidates. Exact only up to the truncation of A.
pub fn duality_exponent(a_truncated: &RationalSubspace, cands: Vec<Candidate>, j: usize, window: Option<usize>, ctx: &PrecisionContext) -> Result<Estimate> {
    let dual = FixedTarget::rational(orthogonal_complement(a_truncated)?, ctx)?;
    let duals: Vec<Candidate> = cands.into_iter().map(|c| Ok(Candidate::new(c.label, orthogonal_complement(&c.subspace)?))).collect::<Result<_>>()?;
    let seq = family_sequence(&dual, duals, j, ctx, "dual", "")?;
    exponent_estimate(&seq, window)
}
