//! Explicit target spaces with prescribed exponents and their best rational approximations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{direct_sum_disjoint, unit, wedge_coords, IntegerVector, RationalSubspace};
use crate::series::{
    alpha, check_theta, choose_u, exceeds_golden_bound, format_rational, golden_bound_f64, BetaSchedule, SupportAssignment,
    USequence,
};
use crate::target::{SeriesColumn, SeriesTarget};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Theorem,
    Relaxed,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Theorem => "theorem",
            Mode::Relaxed => "relaxed",
        }
    }
}

/// Hypothesis bookkeeping: theorem mode rejects violations, relaxed mode records them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub mode: Mode,
    pub violations: Vec<String>,
    pub caveats: Vec<String>,
}

impl Hypotheses {
    pub fn new(mode: Mode) -> Self {
        Hypotheses { mode, violations: Vec::new(), caveats: Vec::new() }
    }

    fn require(&mut self, ok: bool, msg: impl Into<String>) -> Result<()> {
        if ok {
            return Ok(());
        }
        let msg = msg.into();
        match self.mode {
            Mode::Theorem => Err(Error::Hypothesis(msg)),
            Mode::Relaxed => {
                self.violations.push(msg);
                Ok(())
            }
        }
    }

    fn warn(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.violations.push(msg.into());
        }
    }

    /// "theorem", "relaxed", or "relaxed+violated".
    pub fn flags(&self) -> String {
        let mut s = self.mode.as_str().to_string();
        if !self.violations.is_empty() {
            s.push_str("+violated");
        }
        s
    }
}

fn r2f(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

fn ln_rat(x: &BigRational) -> f64 {
    crate::arith::log2_ratio(x.numer(), x.denom()) * std::f64::consts::LN_2
}

/// Depth needed to cover families up to N_max with dimension up to e_max.
pub fn deep_depth(n_max: usize, e_max: usize) -> usize {
    n_max + e_max + 2
}

/// β_j = γ_j/γ_{j−1}, padded to period 2(n−1) with min β (which keeps every window product
/// bounded by a window inside the prescribed part).
pub fn gamma_to_beta(gammas: &[BigRational]) -> Result<BetaSchedule> {
    if gammas.is_empty() {
        return Err(Error::Invalid("need at least one γ".into()));
    }
    if !exceeds_golden_bound(&gammas[0]) {
        return Err(Error::Hypothesis(format!("γ₁ = {} < 2+(√5−1)/2", format_rational(&gammas[0]))));
    }
    let mut betas = Vec::with_capacity(2 * gammas.len());
    let mut prev = BigRational::one();
    for (i, g) in gammas.iter().enumerate() {
        let b = g / &prev;
        if !exceeds_golden_bound(&b) {
            return Err(Error::Hypothesis(format!("γ_{} < (2+(√5−1)/2)·γ_{}", i + 1, i)));
        }
        betas.push(b);
        prev = g.clone();
    }
    let len = gammas.len();
    for i in 1..=len {
        for j in 1..=len - i {
            if gammas[i + j - 1] > &gammas[i - 1] * &gammas[j - 1] {
                return Err(Error::Hypothesis(format!("γ_{} > γ_{}·γ_{}", i + j, i, j)));
            }
        }
    }
    let pad = betas.iter().min().unwrap().clone();
    for _ in 0..len {
        betas.push(pad.clone());
    }
    BetaSchedule::new(betas)
}

fn line_column(base: usize, coords: Vec<usize>, schedule: &BetaSchedule, u: &USequence, j: usize, theta: u64) -> Result<SeriesColumn> {
    SeriesColumn::from_schedule(vec![(base, 1)], schedule, u, j, &coords, theta)
}

fn subspace_checked(rows: &[IntegerVector], e: usize) -> Result<RationalSubspace> {
    let b = RationalSubspace::from_integer_rows(rows)?;
    if b.dim() != e {
        return Err(Error::Verification(format!("expected dimension {e}, got {}", b.dim())));
    }
    Ok(b)
}

/// ‖∧ rows‖², the squared covolume of the lattice the rows generate.
pub fn wedge_norm_sq(rows: &[IntegerVector]) -> BigInt {
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    wedge_coords(rows, n).iter().map(|x| x * x).sum()
}

/// A line Vect(Y), Y = (1, σ₀, …, σ_{n−2}).
#[derive(Clone, Debug)]
pub struct LineConstruction {
    pub n: usize,
    pub theta: u64,
    pub schedule: BetaSchedule,
    pub u: USequence,
    pub target: SeriesTarget,
    pub hyp: Hypotheses,
}

pub fn build_line(n: usize, theta: u64, schedule: BetaSchedule, seed: u64, mode: Mode) -> Result<LineConstruction> {
    if n < 2 {
        return Err(Error::Invalid("n must be at least 2".into()));
    }
    check_theta(theta)?;
    let mut hyp = Hypotheses::new(mode);
    if let Some(b) = schedule.golden_violation() {
        hyp.require(false, format!("β = {} < 2+(√5−1)/2", format_rational(b)))?;
    }
    let u = choose_u(seed, SupportAssignment::Ch5 { n }, &[1, 2])?;
    let col = line_column(0, (1..n).collect(), &schedule, &u, 1, theta)?;
    Ok(LineConstruction { n, theta, schedule, u, target: SeriesTarget { n, theta, columns: vec![col] }, hyp })
}

impl LineConstruction {
    pub fn alpha(&self, k: usize) -> BigRational {
        alpha(&self.schedule, k)
    }

    pub fn xn(&self, big_n: usize) -> IntegerVector {
        self.target.columns[0].scaled_truncation(self.n, self.theta, big_n)
    }

    /// Canonical unit vector v_k carrying the k-th series term.
    pub fn vk(&self, k: usize) -> IntegerVector {
        unit(self.n, 1 + k % (self.n - 1))
    }

    /// X_N, v_{N+1}, …, v_{N+e−1}.
    pub fn bne_basis(&self, big_n: usize, e: usize) -> Vec<IntegerVector> {
        let mut rows = vec![self.xn(big_n)];
        rows.extend((1..e).map(|i| self.vk(big_n + i)));
        rows
    }

    pub fn bne(&self, big_n: usize, e: usize) -> Result<RationalSubspace> {
        if e == 0 || e >= self.n {
            return Err(Error::OutOfRange(format!("e = {e} not in [1, {}]", self.n - 1)));
        }
        subspace_checked(&self.bne_basis(big_n, e), e)
    }

    pub fn predicted(&self, e: usize) -> BigRational {
        self.schedule.max_window_product(e)
    }
}

pub fn predicted_line_exponent(schedule: &BetaSchedule, e: usize) -> BigRational {
    schedule.max_window_product(e)
}

/// Direct sum of d block lines in ℝ^{(m+1)d}.
#[derive(Clone, Debug)]
pub struct SumConstruction {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub theta: u64,
    /// The given β_{i,1..m}.
    pub beta_table: Vec<Vec<BigRational>>,
    /// Period-2m schedules (β_{i,1..m}, β_{i,m+1} repeated m times).
    pub schedules: Vec<BetaSchedule>,
    pub u: USequence,
    pub target: SeriesTarget,
    pub hyp: Hypotheses,
}

pub fn build_sum(d: usize, m: usize, theta: u64, beta_table: Vec<Vec<BigRational>>, seed: u64, mode: Mode, c2: f64) -> Result<SumConstruction> {
    check_theta(theta)?;
    if d == 0 || m == 0 {
        return Err(Error::Invalid("d and m must be positive".into()));
    }
    if beta_table.len() != d || beta_table.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: d * m, got: beta_table.iter().map(|r| r.len()).sum() });
    }
    let n = (m + 1) * d;
    let mut hyp = Hypotheses::new(mode);
    let c1 = (1.0 + 1.0 / m as f64).powf(1.0 / d as f64);
    hyp.require(c2 > 1.0 && c2 < c1, format!("c₂ = {c2} not in (1, {c1:.6})"))?;
    let lmin: Vec<f64> = beta_table.iter().map(|r| r.iter().map(ln_rat).fold(f64::INFINITY, f64::min)).collect();
    let lmax: Vec<f64> = beta_table.iter().map(|r| r.iter().map(ln_rat).fold(f64::NEG_INFINITY, f64::max)).collect();
    let bound = c2 / (c2 - 1.0) * (3.0 * d as f64).ln();
    hyp.require(lmin[0] > bound, format!("min β₁,ℓ = {:.6} ≤ (3d)^(c₂/(c₂−1)) = {:.6e}", lmin[0].exp(), bound.exp()))?;
    hyp.require(lmin[0] >= lmax[0] * c2 / c1, "min β₁,ℓ < (max β₁,ℓ)^(c₂/c₁)")?;
    for i in 0..d - 1 {
        hyp.require(lmin[i] * c1 >= lmax[i + 1], format!("(min β_{},ℓ)^c₁ < max β_{},ℓ", i + 1, i + 2))?;
        hyp.require(lmin[i + 1] >= lmax[i] * c2, format!("min β_{},ℓ < (max β_{},ℓ)^c₂", i + 2, i + 1))?;
    }
    hyp.caveats.push("β_{i,m+1} = min_ℓ β_{i,ℓ}; log-ratio linear independence not certified".into());
    let mut schedules = Vec::with_capacity(d);
    for row in &beta_table {
        let ext = row.iter().min().unwrap().clone();
        let mut betas = row.clone();
        betas.extend(std::iter::repeat(ext).take(m));
        let s = BetaSchedule::new(betas)?;
        if let Some(b) = s.golden_violation() {
            hyp.require(false, format!("β = {} < 2+(√5−1)/2", format_rational(b)))?;
        }
        schedules.push(s);
    }
    let u = choose_u(seed, SupportAssignment::Ch5 { n: m + 1 }, &[1, 2])?;
    let columns = (0..d)
        .map(|i| {
            let off = i * (m + 1);
            line_column(off, (off + 1..off + m + 1).collect(), &schedules[i], &u, i + 1, theta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SumConstruction { d, m, n, theta, beta_table, schedules, u, target: SeriesTarget { n, theta, columns }, hyp })
}

/// Split e = kv + u into v_q = v+1 for q ≤ u and v otherwise.
pub fn v_split(e: usize, k: usize) -> Vec<usize> {
    let (v, u) = (e / k, e % k);
    (0..k).map(|q| if q < u { v + 1 } else { v }).collect()
}

impl SumConstruction {
    /// K_{i,v} (block i 0-based) = max_{ℓ ∈ [0, m+1−v]} β_{i,ℓ+1}…β_{i,ℓ+v}.
    pub fn k_value(&self, i: usize, v: usize) -> BigRational {
        (0..=self.m + 1 - v.min(self.m + 1)).map(|l| self.schedules[i].window_product(l, v)).max().unwrap_or_else(BigRational::one)
    }

    pub fn alpha(&self, i: usize, k: usize) -> BigRational {
        alpha(&self.schedules[i], k)
    }

    /// X_{N,i} embedded in ℝⁿ.
    pub fn xni(&self, i: usize, big_n: usize) -> IntegerVector {
        self.target.columns[i].scaled_truncation(self.n, self.theta, big_n)
    }

    fn vki(&self, i: usize, k: usize) -> IntegerVector {
        unit(self.n, i * (self.m + 1) + 1 + k % self.m)
    }

    /// B^i_{N,v} in ℝⁿ (the whole block when v = m+1).
    pub fn block_bnv(&self, i: usize, big_n: usize, v: usize) -> Result<RationalSubspace> {
        if v == 0 || v > self.m + 1 {
            return Err(Error::OutOfRange(format!("v = {v} not in [1, {}]", self.m + 1)));
        }
        if v == self.m + 1 {
            let off = i * (self.m + 1);
            return subspace_checked(&(off..off + self.m + 1).map(|c| unit(self.n, c)).collect::<Vec<_>>(), v);
        }
        let mut rows = vec![self.xni(i, big_n)];
        rows.extend((1..v).map(|k| self.vki(i, big_n + k)));
        subspace_checked(&rows, v)
    }

    fn check_range(&self, blocks: &[usize], e: usize) -> Result<()> {
        let k = blocks.len();
        if k == 0 || blocks.windows(2).any(|w| w[0] >= w[1]) || blocks.iter().any(|&b| b >= self.d) {
            return Err(Error::Invalid("block subset must be nonempty, sorted and in range".into()));
        }
        if e < k || e >= k * (self.m + 1) {
            return Err(Error::OutOfRange(format!("e = {e} outside [{k}, {}]: formula out of validity range", k * (self.m + 1) - 1)));
        }
        Ok(())
    }

    /// C^J_N = ⊕_q B^{j_q}_{N_q, v_q}.
    pub fn cjn(&self, blocks: &[usize], ns: &[usize], e: usize) -> Result<RationalSubspace> {
        self.check_range(blocks, e)?;
        if ns.len() != blocks.len() {
            return Err(Error::DimensionMismatch { expected: blocks.len(), got: ns.len() });
        }
        let v = v_split(e, blocks.len());
        let parts: Vec<RationalSubspace> = blocks.iter().zip(ns).zip(&v).map(|((&i, &nn), &vq)| self.block_bnv(i, nn, vq)).collect::<Result<_>>()?;
        let refs: Vec<&RationalSubspace> = parts.iter().collect();
        let c = direct_sum_disjoint(&refs)?;
        if c.dim() != e {
            return Err(Error::Verification(format!("C^J_N has dimension {} instead of {e}", c.dim())));
        }
        Ok(c)
    }

    /// Block heights² of the summands of C^J_N.
    pub fn block_heights_sq(&self, blocks: &[usize], ns: &[usize], e: usize) -> Result<Vec<BigInt>> {
        self.check_range(blocks, e)?;
        let v = v_split(e, blocks.len());
        blocks.iter().zip(ns).zip(&v).map(|((&i, &nn), &vq)| Ok(self.block_bnv(i, nn, vq)?.height_sq().clone())).collect()
    }

    /// (Σ_{q > f} 1/K_{j_q, v_q})^{−1} for the subspace A_J.
    pub fn predicted_subset_exponent(&self, blocks: &[usize], e: usize) -> Result<BigRational> {
        self.check_range(blocks, e)?;
        let k = blocks.len();
        let f = e.saturating_sub(self.m * k);
        let v = v_split(e, k);
        let s: BigRational = (f..k).map(|q| BigRational::one() / self.k_value(blocks[q], v[q])).sum();
        Ok(BigRational::one() / s)
    }

    /// μ_n(A|e)_{k−g} from the top k blocks.
    pub fn predicted_sum_exponent(&self, e: usize, k: usize) -> Result<BigRational> {
        if k == 0 || k > self.d {
            return Err(Error::OutOfRange(format!("k = {k} not in [1, {}]", self.d)));
        }
        let blocks: Vec<usize> = (self.d - k..self.d).collect();
        self.predicted_subset_exponent(&blocks, e)
    }

    pub fn sub_target(&self, blocks: &[usize]) -> SeriesTarget {
        SeriesTarget { n: self.n, theta: self.theta, columns: blocks.iter().map(|&i| self.target.columns[i].clone()).collect() }
    }

    /// Diagonal depth tuples: the first non-saturated block steps through N, the others take the
    /// depth that best balances α_{q, N_q+v_q} against it. Tuples whose deepest series exponent
    /// exceeds `max_bits` bits are dropped.
    pub fn diagonal_schedule(&self, blocks: &[usize], e: usize, max_bits: f64) -> Result<Vec<Vec<usize>>> {
        self.check_range(blocks, e)?;
        let k = blocks.len();
        let f = e.saturating_sub(self.m * k);
        let v = v_split(e, k);
        let lt = (self.theta as f64).log2();
        let la = |q: usize, nn: usize| ln_rat(&self.alpha(blocks[q], nn + v[q]));
        let mut out: Vec<Vec<usize>> = Vec::new();
        for lead in 0..64 {
            let t = la(f, lead);
            let mut ns = vec![0usize; k];
            ns[f] = lead;
            for q in f + 1..k {
                ns[q] = (0..64).min_by(|&a, &b| (la(q, a) - t).abs().total_cmp(&(la(q, b) - t).abs())).unwrap();
            }
            let cost = (f..k).map(|q| r2f(&self.alpha(blocks[q], ns[q] + v[q])) * lt).fold(0.0, f64::max);
            if cost > max_bits {
                break;
            }
            if !out.contains(&ns) {
                out.push(ns);
            }
        }
        Ok(out)
    }
}

/// d generators Y_j = e_j + Σ σ_{i,j} e_{d+i} with Ch8 supports and α_k = α^k.
#[derive(Clone, Debug)]
pub struct LastAngleConstruction {
    pub d: usize,
    pub q: usize,
    pub n: usize,
    pub theta: u64,
    pub alpha: BigRational,
    pub schedule: BetaSchedule,
    pub u: USequence,
    pub target: SeriesTarget,
    pub hyp: Hypotheses,
}

pub fn build_last_angle(d: usize, q: usize, theta: u64, alpha_value: BigRational, seed: u64, mode: Mode) -> Result<LastAngleConstruction> {
    check_theta(theta)?;
    if d == 0 || q == 0 {
        return Err(Error::Invalid("d and q must be positive".into()));
    }
    let n = (q + 1) * d;
    let mut hyp = Hypotheses::new(mode);
    let need = BigRational::from_integer(BigInt::from(3 * d * (d + 4)));
    hyp.require(alpha_value >= need, format!("α = {} < 3d(d+4) = {}", format_rational(&alpha_value), need))?;
    let schedule = BetaSchedule::constant(alpha_value.clone())?;
    if schedule.golden_violation().is_some() {
        hyp.require(false, format!("α = {} < 2+(√5−1)/2", format_rational(&alpha_value)))?;
    }
    let u = choose_u(seed, SupportAssignment::Ch8 { d, q }, &[2, 3])?;
    let columns = (0..d)
        .map(|j| line_column(j, (d..n).collect(), &schedule, &u, j + 1, theta))
        .collect::<Result<Vec<_>>>()?;
    Ok(LastAngleConstruction { d, q, n, theta, alpha: alpha_value, schedule, u, target: SeriesTarget { n, theta, columns }, hyp })
}

impl LastAngleConstruction {
    /// X_N^j for j ∈ [1, d].
    pub fn xnj(&self, big_n: usize, j: usize) -> IntegerVector {
        self.target.columns[j - 1].scaled_truncation(self.n, self.theta, big_n)
    }

    /// V_k^j, the unit vector carrying the k-th term of Y_j.
    pub fn vkj(&self, k: usize, j: usize) -> IntegerVector {
        let line = self.u.support.line_of(j, k as u64);
        unit(self.n, self.d + line)
    }

    pub fn bnv_basis(&self, big_n: usize, v: usize) -> Vec<IntegerVector> {
        let mut rows: Vec<IntegerVector> = (1..=self.d).map(|j| self.xnj(big_n, j)).collect();
        for k in big_n + 1..big_n + v {
            rows.extend((1..=self.d).map(|j| self.vkj(k, j)));
        }
        rows
    }

    pub fn bnv(&self, big_n: usize, v: usize) -> Result<RationalSubspace> {
        if v == 0 || v > self.q {
            return Err(Error::OutOfRange(format!("v = {v} not in [1, {}]", self.q)));
        }
        subspace_checked(&self.bnv_basis(big_n, v), self.d * v)
    }

    /// C_{N,e} = B_{N+1,q_e} + Vect(X_N^1, …, X_N^{r_e}) for e ∈ [d, qd].
    pub fn cne(&self, big_n: usize, e: usize) -> Result<RationalSubspace> {
        if e < self.d || e > self.q * self.d {
            return Err(Error::OutOfRange(format!("e = {e} not in [{}, {}]", self.d, self.q * self.d)));
        }
        let (qe, re) = (e / self.d, e % self.d);
        let mut rows = self.bnv_basis(big_n + 1, qe);
        rows.extend((1..=re).map(|j| self.xnj(big_n, j)));
        subspace_checked(&rows, e)
    }

    /// D_{N,e} = Vect(X_N^1, …, X_N^e) for e ∈ [1, d].
    pub fn dne(&self, big_n: usize, e: usize) -> Result<RationalSubspace> {
        if e == 0 || e > self.d {
            return Err(Error::OutOfRange(format!("e = {e} not in [1, {}]", self.d)));
        }
        subspace_checked(&(1..=e).map(|j| self.xnj(big_n, j)).collect::<Vec<_>>(), e)
    }

    /// The approximating family used for dimension e.
    pub fn family(&self, big_n: usize, e: usize) -> Result<RationalSubspace> {
        if e < self.d {
            self.dne(big_n, e)
        } else {
            self.cne(big_n, e)
        }
    }

    pub fn predicted(&self, e: usize) -> Result<BigRational> {
        predicted_last_exponent(self.d, self.q, &self.alpha, e)
    }
}

pub fn predicted_last_exponent(d: usize, q: usize, alpha_value: &BigRational, e: usize) -> Result<BigRational> {
    if e == 0 || e > q * d {
        return Err(Error::OutOfRange(format!("e = {e} not in [1, {}]", q * d)));
    }
    if e < d {
        return Ok(alpha_value / BigRational::from_integer(BigInt::from(e)));
    }
    let (qe, re) = (e / d, e % d);
    let num = num_traits::pow(alpha_value.clone(), qe + 1);
    let den = BigRational::from_integer(BigInt::from(re)) + BigRational::from_integer(BigInt::from(d - re)) * alpha_value;
    Ok(num / den)
}

/// C_d with C₁ = 2+(√5−1)/2 and C_d = 5n²C_{d−1}^{2n}; overflows to +∞ quickly.
pub fn cd_constant(n: usize, d: usize) -> f64 {
    10f64.powf(cd_log10(n, d))
}

pub fn cd_log10(n: usize, d: usize) -> f64 {
    let mut l = golden_bound_f64().log10();
    for _ in 1..d {
        l = (5.0 * (n * n) as f64).log10() + 2.0 * n as f64 * l;
    }
    l
}

/// Recursive construction: Y_1 carries the prescribed β on the last n−d coordinates, and
/// Y_j (j ≥ 2) is the first generator of the level-(d−j+1) construction with a constant β.
#[derive(Clone, Debug)]
pub struct FirstAngleConstruction {
    pub n: usize,
    pub d: usize,
    pub theta: u64,
    pub betas: Vec<BigRational>,
    /// Schedule of column j (index j−1).
    pub schedules: Vec<BetaSchedule>,
    pub us: Vec<USequence>,
    pub target: SeriesTarget,
    pub hyp: Hypotheses,
}

/// `level_betas[ℓ−1]` is the constant β of the level-ℓ generator for ℓ < d; when absent,
/// theorem mode uses ⌈C_ℓ⌉ and relaxed mode uses 3.
pub fn build_first_angle(
    n: usize,
    d: usize,
    theta: u64,
    betas: Vec<BigRational>,
    level_betas: Option<Vec<BigRational>>,
    seed: u64,
    mode: Mode,
) -> Result<FirstAngleConstruction> {
    check_theta(theta)?;
    if d == 0 || d >= n {
        return Err(Error::Invalid(format!("d = {d} not in [1, {}]", n - 1)));
    }
    if betas.len() != n - d {
        return Err(Error::DimensionMismatch { expected: n - d, got: betas.len() });
    }
    let mut hyp = Hypotheses::new(mode);
    let cd = cd_constant(n, d);
    if d > 1 {
        // theorem constants are out of reach for d ≥ 2, so this is recorded rather than enforced
        hyp.warn(betas.iter().all(|b| r2f(b) >= cd), format!("β below C_{d} ≈ {cd:.4e}"));
    }
    let pad = betas.iter().min().unwrap().clone();
    for b in &betas {
        if !exceeds_golden_bound(b) {
            hyp.require(false, format!("β = {} < 2+(√5−1)/2", format_rational(b)))?;
        }
    }
    let mut top = betas.clone();
    top.extend(std::iter::repeat(pad).take(n - d));
    let mut schedules = vec![BetaSchedule::new(top)?];
    let lower = match level_betas {
        Some(v) => {
            if v.len() != d - 1 {
                return Err(Error::DimensionMismatch { expected: d - 1, got: v.len() });
            }
            v
        }
        None => (1..d)
            .map(|l| match mode {
                Mode::Theorem => {
                    let c = cd_constant(n, l).ceil();
                    if c.is_finite() && c < 1e15 {
                        Ok(BigRational::from_integer(BigInt::from(c as u64)))
                    } else {
                        Err(Error::OutOfRange(format!("C_{l} is not representable")))
                    }
                }
                Mode::Relaxed => Ok(BigRational::from_integer(BigInt::from(3))),
            })
            .collect::<Result<Vec<_>>>()?,
    };
    for j in 2..=d {
        let level = d - j + 1;
        schedules.push(BetaSchedule::constant(lower[level - 1].clone())?);
    }
    let mut us = Vec::with_capacity(d);
    let mut columns = Vec::with_capacity(d);
    for j in 1..=d {
        let level = d - j + 1;
        let u = choose_u(seed.wrapping_add(j as u64 - 1), SupportAssignment::Ch6 { n, d: level }, &[1, 2])?;
        columns.push(line_column(0, (level..n).collect(), &schedules[j - 1], &u, j, theta)?);
        us.push(u);
    }
    Ok(FirstAngleConstruction { n, d, theta, betas, schedules, us, target: SeriesTarget { n, theta, columns }, hyp })
}

impl FirstAngleConstruction {
    /// max_{i ∈ [0, n−d−e]} β_{i+1}…β_{i+e} for e ∈ [1, n−d].
    pub fn predicted(&self, e: usize) -> Result<BigRational> {
        let len = self.n - self.d;
        if e == 0 || e > len {
            return Err(Error::OutOfRange(format!("e = {e} not in [1, {len}]")));
        }
        Ok((0..=len - e).map(|i| self.betas[i..i + e].iter().fold(BigRational::one(), |a, b| a * b)).max().unwrap())
    }

    /// X_N for the first generator.
    pub fn xn(&self, big_n: usize) -> IntegerVector {
        self.target.columns[0].scaled_truncation(self.n, self.theta, big_n)
    }

    /// B_{N,e} = Vect(X_N, v_{N+1}, …, v_{N+e−1}) for the first generator.
    pub fn bne(&self, big_n: usize, e: usize) -> Result<RationalSubspace> {
        let len = self.n - self.d;
        if e == 0 || e > len {
            return Err(Error::OutOfRange(format!("e = {e} not in [1, {len}]")));
        }
        let mut rows = vec![self.xn(big_n)];
        rows.extend((1..e).map(|i| unit(self.n, self.d + (big_n + i) % len)));
        subspace_checked(&rows, e)
    }
}

/// Serializable description of a construction, extending the series config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub variant: String,
    pub n: usize,
    pub theta: u64,
    pub seed: u64,
    pub mode: Mode,
    pub betas: Vec<Vec<String>>,
    pub value_set: Vec<i64>,
    pub support_variant: SupportAssignment,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    pub violations: Vec<String>,
    pub caveats: Vec<String>,
    /// (e, predicted exponent) pairs.
    pub predictions: Vec<(usize, String)>,
}

fn fmt_sched(s: &BetaSchedule) -> Vec<String> {
    s.betas().iter().map(format_rational).collect()
}

impl LineConstruction {
    pub fn descriptor(&self) -> Descriptor {
        Descriptor {
            variant: "ch5".into(),
            n: self.n,
            theta: self.theta,
            seed: self.u.seed,
            mode: self.hyp.mode,
            betas: vec![fmt_sched(&self.schedule)],
            value_set: self.u.value_set.clone(),
            support_variant: self.u.support,
            d: 1,
            m: None,
            q: None,
            alpha: None,
            violations: self.hyp.violations.clone(),
            caveats: self.hyp.caveats.clone(),
            predictions: (1..self.n).map(|e| (e, format_rational(&self.predicted(e)))).collect(),
        }
    }
}

impl SumConstruction {
    pub fn descriptor(&self) -> Descriptor {
        let preds = (1..self.n)
            .filter_map(|e| self.predicted_sum_exponent(e, self.d).ok().map(|p| (e, format_rational(&p))))
            .collect();
        Descriptor {
            variant: "ch7".into(),
            n: self.n,
            theta: self.theta,
            seed: self.u.seed,
            mode: self.hyp.mode,
            betas: self.schedules.iter().map(fmt_sched).collect(),
            value_set: self.u.value_set.clone(),
            support_variant: self.u.support,
            d: self.d,
            m: Some(self.m),
            q: None,
            alpha: None,
            violations: self.hyp.violations.clone(),
            caveats: self.hyp.caveats.clone(),
            predictions: preds,
        }
    }
}

impl LastAngleConstruction {
    pub fn descriptor(&self) -> Descriptor {
        Descriptor {
            variant: "ch8".into(),
            n: self.n,
            theta: self.theta,
            seed: self.u.seed,
            mode: self.hyp.mode,
            betas: vec![fmt_sched(&self.schedule)],
            value_set: self.u.value_set.clone(),
            support_variant: self.u.support,
            d: self.d,
            m: None,
            q: Some(self.q),
            alpha: Some(format_rational(&self.alpha)),
            violations: self.hyp.violations.clone(),
            caveats: self.hyp.caveats.clone(),
            predictions: (1..=self.q * self.d).map(|e| (e, format_rational(&self.predicted(e).unwrap()))).collect(),
        }
    }
}

impl FirstAngleConstruction {
    pub fn descriptor(&self) -> Descriptor {
        Descriptor {
            variant: "ch6".into(),
            n: self.n,
            theta: self.theta,
            seed: self.us[0].seed,
            mode: self.hyp.mode,
            betas: self.schedules.iter().map(fmt_sched).collect(),
            value_set: self.us[0].value_set.clone(),
            support_variant: self.us[0].support,
            d: self.d,
            m: None,
            q: None,
            alpha: None,
            violations: self.hyp.violations.clone(),
            caveats: self.hyp.caveats.clone(),
            predictions: (1..=self.n - self.d).map(|e| (e, format_rational(&self.predicted(e).unwrap()))).collect(),
        }
    }
}
