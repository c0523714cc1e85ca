//! Targets A = Vect(Y₁,…,Y_d) whose generators are lacunary series
//! Y_j = base_j + Σ_k θ^{−⌊α_k⌋} g_{j,k}, and their angles to rational subspaces.
//!
//! Each wedge coordinate c_I·Y_j (with c_I built from the Plücker vector of B) is summed
//! exactly in integer clusters: consecutive terms are merged at a common θ-scale until the
//! next gap dwarfs the current partial sum, so cancellation between the truncation of Y_j
//! and B is resolved exactly no matter how many bits it spans.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::angles::{g_index, singular_values, AngleSpectrum, PrecisionContext, Provenance, SubspaceRealization};
use crate::arith;
use crate::error::{Error, Result};
use crate::lattice::RationalSubspace;
use crate::scalar::{Field, MpFloat, Real};
use crate::series::{floor_alphas_u64, BetaSchedule, USequence};

/// Largest exponent kept in a term table; deeper terms are never needed below 2^40-bit heights.
const MAX_EXPONENT: u64 = 1 << 52;
/// Precision ceiling for the adaptive loop.
pub const DEFAULT_MAX_BITS: u32 = 1 << 18;

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerm {
    pub exponent: u64,
    pub entries: Vec<(usize, i64)>,
}

/// One generator: integer base vector plus θ-adic terms with strictly increasing exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesColumn {
    pub base: Vec<(usize, i64)>,
    pub terms: Vec<SeriesTerm>,
    /// Coordinates that carry series terms (used for exact-zero detection).
    pub line_coords: Vec<usize>,
    pub max_u: i64,
    pub cache: ScaledCache,
}

/// Memo of scaled truncations, shared between clones.
#[derive(Clone, Default)]
pub struct ScaledCache(Arc<Mutex<HashMap<(usize, u64, usize), Vec<BigInt>>>>);

impl std::fmt::Debug for ScaledCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScaledCache({} entries)", self.0.lock().unwrap().len())
    }
}

impl PartialEq for ScaledCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl SeriesColumn {
    /// Column driven by a β-schedule and a u-sequence: term k sits on coordinate
    /// `coord_of_line[line]` for each line with u(line, j, k) ≠ 0.
    pub fn from_schedule(
        base: Vec<(usize, i64)>,
        schedule: &BetaSchedule,
        u: &USequence,
        j: usize,
        coord_of_line: &[usize],
        theta: u64,
    ) -> Result<Self> {
        let mut kmax = 8usize;
        let floors = loop {
            let f = floor_alphas_u64(schedule, kmax);
            match f {
                Ok(f) if *f.last().unwrap() < MAX_EXPONENT / 64 => kmax *= 2,
                Ok(f) => break f,
                Err(_) => {
                    kmax = (kmax * 3) / 4;
                    if let Ok(f) = floor_alphas_u64(schedule, kmax) {
                        break f;
                    }
                }
            }
            if kmax > 4096 {
                break floor_alphas_u64(schedule, kmax)?;
            }
        };
        let limit = MAX_EXPONENT as f64 / (theta as f64).log2();
        let mut terms = Vec::new();
        for (k, &a) in floors.iter().enumerate() {
            if a as f64 > limit {
                break;
            }
            let entries: Vec<(usize, i64)> = (0..coord_of_line.len())
                .filter_map(|line| {
                    let v = u.u(line, j, k as u64);
                    (v != 0).then(|| (coord_of_line[line], v))
                })
                .collect();
            terms.push(SeriesTerm { exponent: a, entries });
        }
        Ok(SeriesColumn { base, terms, line_coords: coord_of_line.to_vec(), max_u: u.max_u(), cache: ScaledCache::default() })
    }

    /// Exact truncation Σ_{k ≤ depth} as a rational vector.
    pub fn truncation(&self, n: usize, theta: u64, depth: usize) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); n];
        for &(c, x) in &self.base {
            v[c] += BigRational::from_integer(x.into());
        }
        let th = BigInt::from(theta);
        for t in self.terms.iter().take(depth + 1) {
            let den = th.pow(t.exponent as u32);
            for &(c, x) in &t.entries {
                v[c] += BigRational::new(x.into(), den.clone());
            }
        }
        v
    }

    /// θ^{a_N}·(truncation at depth N), an integer vector.
    pub fn scaled_truncation(&self, n: usize, theta: u64, depth: usize) -> Vec<BigInt> {
        let key = (n, theta, depth.min(self.terms.len()));
        if let Some(v) = self.cache.0.lock().unwrap().get(&key) {
            return v.clone();
        }
        let v = self.compute_scaled(n, theta, depth);
        self.cache.0.lock().unwrap().insert(key, v.clone());
        v
    }

    fn compute_scaled(&self, n: usize, theta: u64, depth: usize) -> Vec<BigInt> {
        let mut pow_cache: HashMap<u64, BigInt> = HashMap::new();
        let mut pw = |e: u64| pow_cache.entry(e).or_insert_with(|| arith::pow(theta, e)).clone();
        let mut v = vec![BigInt::zero(); n];
        // Horner per coordinate over the terms at depth ≤ N
        let mut prev = 0u64;
        for t in self.terms.iter().take(depth + 1) {
            let gap = t.exponent - prev;
            if gap > 0 {
                let p = pw(gap);
                for x in v.iter_mut() {
                    if !x.is_zero() {
                        *x = arith::mul(x, &p);
                    }
                }
            }
            for &(c, u) in &t.entries {
                v[c] += u;
            }
            prev = t.exponent;
        }
        let scale = pw(prev);
        for &(c, x) in &self.base {
            v[c] += arith::mul(&scale, &BigInt::from(x));
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTarget {
    pub n: usize,
    pub theta: u64,
    pub columns: Vec<SeriesColumn>,
}

#[derive(Clone, Debug)]
pub struct Measured {
    pub value: MpFloat,
    pub error_radius: MpFloat,
    pub bits: u32,
}

impl Measured {
    pub fn log2(&self) -> f64 {
        self.value.log2_abs()
    }
}

struct PowCache {
    theta: u64,
    map: Mutex<HashMap<u64, BigInt>>,
}

impl PowCache {
    fn new(theta: u64) -> Self {
        PowCache { theta, map: Mutex::new(HashMap::new()) }
    }

    fn get(&self, e: u64) -> Result<BigInt> {
        if let Some(v) = self.map.lock().unwrap().get(&e) {
            return Ok(v.clone());
        }
        if u32::try_from(e).is_err() {
            return Err(Error::OutOfRange(format!("θ^{e} is too large to form exactly")));
        }
        let v = arith::pow(self.theta, e);
        self.map.lock().unwrap().insert(e, v.clone());
        Ok(v)
    }
}

/// An exactly summed value S·θ^{−exp} (S = 0 means the value is exactly zero).
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterValue {
    pub s: BigInt,
    pub exp: u64,
}

impl SeriesTarget {
    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn truncation_rows(&self, depth: usize) -> Vec<Vec<BigRational>> {
        self.columns.iter().map(|c| c.truncation(self.n, self.theta, depth)).collect()
    }

    /// Dense realization from the depth-M truncation, with its tail bound recorded.
    pub fn realize(&self, depth: usize, ctx: &PrecisionContext) -> Result<SubspaceRealization<MpFloat>> {
        let rows = self.truncation_rows(depth);
        let mut r = SubspaceRealization::<MpFloat>::from_rational_rows(&rows, ctx)?;
        let tail = self
            .columns
            .iter()
            .filter_map(|c| c.terms.get(depth + 1).map(|t| (c.max_u as f64).log2() + 2.0 - t.exponent as f64 * (self.theta as f64).log2()))
            .fold(f64::NEG_INFINITY, f64::max);
        r.provenance = Provenance::Truncated { depth, tail_log2: tail };
        Ok(r)
    }

    /// Floating generators accurate to about `bits` bits relative to the base entries.
    fn float_rows(&self, bits: u32) -> Vec<Vec<MpFloat>> {
        let lt = (self.theta as f64).log2();
        let th = MpFloat::from_i64(self.theta as i64, bits);
        self.columns
            .iter()
            .map(|c| {
                let mut v: Vec<MpFloat> = vec![MpFloat::from_i64(0, bits); self.n];
                for &(i, x) in &c.base {
                    v[i] = v[i].clone() + MpFloat::from_i64(x, bits);
                }
                for t in &c.terms {
                    if t.exponent as f64 * lt > bits as f64 + 64.0 {
                        break;
                    }
                    let scale = MpFloat::from_i64(1, bits) / th.powu(t.exponent);
                    for &(i, x) in &t.entries {
                        v[i] = v[i].clone() + MpFloat::from_i64(x, bits) * scale.clone();
                    }
                }
                v
            })
            .collect()
    }

    /// Σ over the column of form·(term), summed exactly in clusters until the remaining tail
    /// is below 2^{−bits} relative to the accumulated value.
    fn cluster_sum(&self, form: &[(usize, BigInt)], col: &SeriesColumn, bits: u32, pows: &PowCache) -> Result<ClusterValue> {
        let coef: HashMap<usize, &BigInt> = form.iter().map(|(i, c)| (*i, c)).collect();
        let base: BigInt = col.base.iter().filter_map(|(i, x)| coef.get(i).map(|c| *c * *x)).sum();
        let touches_lines = col.line_coords.iter().any(|i| coef.contains_key(i));
        if !touches_lines {
            return Ok(ClusterValue { s: base, exp: 0 });
        }
        let t_max: BigInt = col.line_coords.iter().filter_map(|i| coef.get(i)).map(|c| c.abs()).sum::<BigInt>() * col.max_u;
        let log_t = arith::log2_abs(&t_max);
        let lt = (self.theta as f64).log2();
        let tail_factor = (self.theta as f64 / (self.theta as f64 - 1.0)).log2();
        let mut s = base;
        let mut exp = 0u64;
        for term in &col.terms {
            let t: BigInt = term.entries.iter().filter_map(|(i, x)| coef.get(i).map(|c| *c * *x)).sum();
            if t.is_zero() {
                continue;
            }
            if s.is_zero() {
                s = t;
                exp = term.exponent;
                continue;
            }
            let gap = term.exponent - exp;
            let slack = gap as f64 * lt - (log_t + tail_factor - arith::log2_abs(&s));
            if slack > bits as f64 + 8.0 {
                return Ok(ClusterValue { s, exp });
            }
            s = arith::mul(&s, &pows.get(gap)?) + t;
            exp = term.exponent;
        }
        // terms exhausted: whatever follows is below θ^{−last exponent} in absolute size
        let last = col.terms.last().map_or(0, |t| t.exponent);
        if last as f64 * lt > bits as f64 + log_t + tail_factor + 64.0 + arith::log2_abs(&s).max(0.0) {
            return Ok(ClusterValue { s, exp });
        }
        Err(Error::Precision { suggested_bits: bits })
    }

    /// Wedge-coordinate matrix entries (c_I·Y_j) for all (e+1)-subsets I and columns j.
    pub fn wedge_matrix(&self, b: &RationalSubspace, bits: u32) -> Result<Vec<Vec<ClusterValue>>> {
        let forms = b.wedge_forms();
        let pows = PowCache::new(self.theta);
        let jobs: Vec<(usize, usize)> = (0..forms.len()).flat_map(|f| (0..self.d()).map(move |j| (f, j))).collect();
        let vals: Vec<Result<ClusterValue>> = jobs.par_iter().map(|&(f, j)| self.cluster_sum(&forms[f], &self.columns[j], bits, &pows)).collect();
        let mut out = vec![Vec::with_capacity(self.d()); forms.len()];
        for ((f, _), v) in jobs.iter().zip(vals) {
            out[*f].push(v?);
        }
        Ok(out)
    }

    fn spectrum_at(&self, b: &RationalSubspace, wm: &[Vec<ClusterValue>], bits: u32) -> Result<Vec<MpFloat>> {
        let d = self.d();
        let th = MpFloat::from_i64(self.theta as i64, bits);
        let mut inv_pow: HashMap<u64, MpFloat> = HashMap::new();
        let mut to_float = |v: &ClusterValue| -> MpFloat {
            if v.s.is_zero() {
                return MpFloat::from_i64(0, bits);
            }
            let ip = inv_pow.entry(v.exp).or_insert_with(|| MpFloat::from_i64(1, bits) / th.powu(v.exp)).clone();
            MpFloat::from_int(&v.s, bits) * ip
        };
        let m: Vec<Vec<MpFloat>> = wm.iter().map(|row| row.iter().map(&mut to_float).collect()).collect();
        // Cholesky of the Gram matrix of the generators
        let y = self.float_rows(bits);
        let mut r = vec![vec![MpFloat::from_i64(0, bits); d]; d];
        for j in 0..d {
            for i in 0..=j {
                let mut s = y[i].iter().zip(&y[j]).fold(MpFloat::from_i64(0, bits), |acc, (a, c)| acc + a.clone() * c.clone());
                for k in 0..i {
                    s = s - r[k][i].clone() * r[k][j].clone();
                }
                if i == j {
                    if s <= MpFloat::from_i64(0, bits) {
                        return Err(Error::DegenerateBasis);
                    }
                    r[i][j] = s.sqrt();
                } else {
                    r[i][j] = s / r[i][i].clone();
                }
            }
        }
        // W = M R⁻¹, column by column
        let rows = m.len();
        let mut w: Vec<Vec<MpFloat>> = Vec::with_capacity(d);
        for j in 0..d {
            let mut col: Vec<MpFloat> = (0..rows).map(|f| m[f][j].clone()).collect();
            for i in 0..j {
                for f in 0..rows {
                    col[f] = col[f].clone() - w[i][f].clone() * r[i][j].clone();
                }
            }
            let inv = MpFloat::from_i64(1, bits) / r[j][j].clone();
            w.push(col.into_iter().map(|x| x * inv.clone()).collect());
        }
        let h = MpFloat::from_int(b.height_sq(), bits).sqrt();
        let mut sv: Vec<MpFloat> = singular_values(w, bits).into_iter().map(|s| s / h.clone()).collect();
        for s in sv.iter_mut() {
            if *s > MpFloat::from_i64(1, bits) {
                *s = MpFloat::from_i64(1, bits);
            }
        }
        Ok(sv)
    }

    /// Principal sines between A and B. Precision is raised until each requested ψ index
    /// agrees between two working precisions to `ctx.bits / 2` relative bits.
    pub fn sines_against(&self, b: &RationalSubspace, ctx: &PrecisionContext, want: &[usize], max_bits: u32) -> Result<AngleSpectrum<MpFloat>> {
        if b.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: b.n() });
        }
        let (d, e, n) = (self.d(), b.dim(), self.n);
        let t = d.min(e);
        let g = g_index(d, e, n);
        if e == n {
            let bits = ctx.working();
            return Ok(AngleSpectrum { t, g, sines: vec![MpFloat::from_i64(0, bits); t], error_radius: MpFloat::pow2(-(bits as i64), bits) });
        }
        let check: Vec<usize> = if want.is_empty() { (g..t).collect() } else { want.iter().map(|j| j + g - 1).collect() };
        let rel = (ctx.bits / 2).max(32) as i64;
        let mut p = ctx.working();
        loop {
            // the exact sums are taken once at the higher precision and rounded at both
            let q = (p * 2).min(max_bits).max(p);
            let wm = self.wedge_matrix(b, q)?;
            let lo = self.spectrum_at(b, &wm, p)?;
            let sv = self.spectrum_at(b, &wm, q)?;
            let mut worst = MpFloat::from_i64(0, q);
            let mut ok = q > p;
            for &i in &check {
                let diff = (sv[i].clone() - lo[i].clone()).abs();
                if diff > worst {
                    worst = diff.clone();
                }
                let bound = sv[i].abs() * MpFloat::pow2(-rel, q);
                if diff > bound || sv[i].is_zero() {
                    ok = false;
                }
            }
            if ok {
                let top = check.iter().map(|&i| sv[i].abs()).fold(MpFloat::from_i64(0, q), |a, b| if b > a { b } else { a });
                let floor = top * MpFloat::pow2(-(p as i64) + 16, q);
                let radius = if worst > floor { worst } else { floor };
                return Ok(AngleSpectrum { t, g, sines: sv.into_iter().take(t).collect(), error_radius: radius });
            }
            if q >= max_bits {
                return Err(Error::Precision { suggested_bits: q.saturating_mul(2) });
            }
            p = q;
        }
    }

    /// ψ_j(A, B) with its certified-by-doubling error radius.
    pub fn psi(&self, b: &RationalSubspace, j: usize, ctx: &PrecisionContext) -> Result<Measured> {
        let t = self.d().min(b.dim());
        let g = g_index(self.d(), b.dim(), self.n);
        if j == 0 || j + g > t {
            return Err(Error::IndexOutOfRange { j, max: t.saturating_sub(g) });
        }
        let spec = self.sines_against(b, ctx, &[j], DEFAULT_MAX_BITS)?;
        let value = spec.psi(j)?;
        let bits = value.precision() as u32;
        Ok(Measured { value, error_radius: spec.error_radius, bits })
    }
}

/// Exact helper: log₂ of an exact integer ratio, for slopes.
pub fn slope(psi_log2: f64, height_sq: &BigInt) -> f64 {
    let lh = 0.5 * arith::log2_abs(height_sq);
    -psi_log2 / lh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::{principal_sines, PrecisionContext};
    use crate::lattice::int_vec;
    use crate::series::{choose_u, SupportAssignment};

    fn ch5_line(n: usize, betas: &[i64], seed: u64) -> SeriesTarget {
        let s = BetaSchedule::from_ints(betas).unwrap();
        let u = choose_u(seed, SupportAssignment::Ch5 { n }, &[1, 2]).unwrap();
        let coords: Vec<usize> = (1..n).collect();
        let col = SeriesColumn::from_schedule(vec![(0, 1)], &s, &u, 1, &coords, 5).unwrap();
        SeriesTarget { n, theta: 5, columns: vec![col] }
    }

    #[test]
    fn agrees_with_dense_truncation() {
        let a = ch5_line(3, &[3, 4], 11);
        let ctx = PrecisionContext::new(256);
        let dense = a.realize(8, &PrecisionContext::new(4096)).unwrap();
        for rows in [vec![int_vec(&[3, 1, 0])], vec![int_vec(&[1, 0, 2]), int_vec(&[0, 1, 1])], vec![int_vec(&[125, 26, 1])]] {
            let b = RationalSubspace::from_integer_rows(&rows).unwrap();
            let m = a.psi(&b, 1, &ctx).unwrap();
            let bd = SubspaceRealization::<MpFloat>::from_subspace(&b, &PrecisionContext::new(4096)).unwrap();
            let s = principal_sines(&dense, &bd, &PrecisionContext::new(4096)).unwrap();
            let rel = (m.value.to_f64() - s.psi(1).unwrap().to_f64()).abs() / m.value.to_f64();
            assert!(rel < 1e-12, "rel {rel}");
        }
    }

    #[test]
    fn scaled_truncation_matches_rational() {
        let a = ch5_line(3, &[3, 4], 5);
        let c = &a.columns[0];
        let x = c.scaled_truncation(3, 5, 3);
        let q = c.truncation(3, 5, 3);
        let scale = BigInt::from(5).pow(c.terms[3].exponent as u32);
        for i in 0..3 {
            assert_eq!(BigRational::from_integer(x[i].clone()), &q[i] * BigRational::from_integer(scale.clone()));
        }
    }

    #[test]
    fn exact_cancellation_is_resolved() {
        // B spanned by the depth-4 scaled truncation: ψ is tiny but computed exactly.
        let a = ch5_line(2, &[3], 1);
        let x = a.columns[0].scaled_truncation(2, 5, 4);
        let b = RationalSubspace::from_integer_rows(&[x]).unwrap();
        let m = a.psi(&b, 1, &PrecisionContext::new(128)).unwrap();
        let lt = 5f64.log2();
        // ψ ≈ θ^{−a_5}·θ^{a_4}/H with a_k = 3^k
        let predicted = -(243.0 - 81.0) * lt - b.log2_height();
        assert!((m.log2() - predicted).abs() < 4.0, "{} vs {}", m.log2(), predicted);
    }
}
