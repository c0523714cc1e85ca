//! β/α schedules, support maps, u-sequences and the lacunary series σ(θ,u,α).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};
use crate::scalar::{Field, MpFloat};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Parse "p/q" or an integer or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| Error::Invalid(format!("bad rational {s}")))?;
        let q: BigInt = q.trim().parse().map_err(|_| Error::Invalid(format!("bad rational {s}")))?;
        if q.is_zero() {
            return Err(Error::Invalid(format!("zero denominator in {s}")));
        }
        return Ok(BigRational::new(p, q));
    }
    crate::scalar::parse_decimal(s).ok_or_else(|| Error::Invalid(format!("bad rational {s}")))
}

pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// β ≥ 2 + (√5−1)/2 = (3+√5)/2, decided exactly: 2β−3 ≥ 0 and (2β−3)² ≥ 5.
pub fn exceeds_golden_bound(beta: &BigRational) -> bool {
    let t = beta * BigRational::from_integer(2.into()) - BigRational::from_integer(3.into());
    !t.is_negative() && &t * &t >= BigRational::from_integer(5.into())
}

pub fn golden_bound_f64() -> f64 {
    2.0 + (5f64.sqrt() - 1.0) / 2.0
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaSchedule {
    betas: Vec<BigRational>,
}

impl BetaSchedule {
    pub fn new(betas: Vec<BigRational>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Invalid("empty β period".into()));
        }
        if let Some(b) = betas.iter().find(|b| *b <= &BigRational::one()) {
            return Err(Error::Invalid(format!("β = {} must exceed 1", format_rational(b))));
        }
        Ok(BetaSchedule { betas })
    }

    pub fn constant(beta: BigRational) -> Result<Self> {
        Self::new(vec![beta])
    }

    pub fn from_ints(betas: &[i64]) -> Result<Self> {
        Self::new(betas.iter().map(|&b| BigRational::from_integer(b.into())).collect())
    }

    pub fn period(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[BigRational] {
        &self.betas
    }

    /// β_k for k ≥ 1 by periodic extension.
    pub fn beta(&self, k: usize) -> &BigRational {
        assert!(k >= 1, "β is indexed from 1");
        &self.betas[(k - 1) % self.betas.len()]
    }

    /// First β below the golden bound, if any.
    pub fn golden_violation(&self) -> Option<&BigRational> {
        self.betas.iter().find(|b| !exceeds_golden_bound(b))
    }

    /// max over window starts i ∈ [0, T−1] of β_{i+1}⋯β_{i+e}.
    pub fn max_window_product(&self, e: usize) -> BigRational {
        (0..self.period()).map(|i| self.window_product(i, e)).max().unwrap()
    }

    pub fn window_product(&self, start: usize, e: usize) -> BigRational {
        (1..=e).fold(BigRational::one(), |acc, j| acc * self.beta(start + j))
    }
}

pub fn alpha(s: &BetaSchedule, k: usize) -> BigRational {
    (1..=k).fold(BigRational::one(), |acc, j| acc * s.beta(j))
}

pub fn floor_alpha(s: &BetaSchedule, k: usize) -> BigInt {
    alpha(s, k).floor().to_integer()
}

/// α₀..α_K in one pass.
pub fn alphas(s: &BetaSchedule, kmax: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut a = BigRational::one();
    out.push(a.clone());
    for k in 1..=kmax {
        a = a * s.beta(k);
        out.push(a.clone());
    }
    out
}

/// ⌊α₀⌋..⌊α_K⌋ as machine integers; errors when they overflow.
pub fn floor_alphas_u64(s: &BetaSchedule, kmax: usize) -> Result<Vec<u64>> {
    alphas(s, kmax)
        .iter()
        .map(|a| a.floor().to_integer().to_u64().ok_or_else(|| Error::OutOfRange("⌊α_k⌋ exceeds 64 bits".into())))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum SupportAssignment {
    /// One u-sequence per coordinate line i ∈ [0, n−2]; u^i_k ≠ 0 iff k ≡ i mod (n−1).
    Ch5 { n: usize },
    /// u^i_k ≠ 0 iff k ≡ i mod (n−d).
    Ch6 { n: usize, d: usize },
    /// u^{(i,j)}_k ≠ 0 iff i ≡ k + (j−1)q mod qd, for i ∈ [0, qd−1], j ∈ [1, d].
    Ch8 { d: usize, q: usize },
}

impl SupportAssignment {
    pub fn lines(&self) -> usize {
        match *self {
            SupportAssignment::Ch5 { n } => n - 1,
            SupportAssignment::Ch6 { n, d } => n - d,
            SupportAssignment::Ch8 { d, q } => q * d,
        }
    }

    pub fn is_supported(&self, line: usize, j: usize, k: u64) -> bool {
        match *self {
            SupportAssignment::Ch5 { n } => k % (n as u64 - 1) == line as u64,
            SupportAssignment::Ch6 { n, d } => k % ((n - d) as u64) == line as u64,
            SupportAssignment::Ch8 { d, q } => {
                let m = (q * d) as u64;
                (k + ((j - 1) * q) as u64) % m == line as u64
            }
        }
    }

    /// The line carrying the nonzero term at step k (Ch5/Ch6; column j for Ch8).
    pub fn line_of(&self, j: usize, k: u64) -> usize {
        match *self {
            SupportAssignment::Ch5 { n } => (k % (n as u64 - 1)) as usize,
            SupportAssignment::Ch6 { n, d } => (k % ((n - d) as u64)) as usize,
            SupportAssignment::Ch8 { d, q } => ((k + ((j - 1) * q) as u64) % ((q * d) as u64)) as usize,
        }
    }
}

/// Deterministic pseudo-random u-values on a support, random access in (line, j, k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct USequence {
    pub seed: u64,
    pub value_set: Vec<i64>,
    pub support: SupportAssignment,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl USequence {
    pub fn u(&self, line: usize, j: usize, k: u64) -> i64 {
        if !self.support.is_supported(line, j, k) {
            return 0;
        }
        let key = splitmix(splitmix(splitmix(self.seed) ^ line as u64) ^ ((j as u64) << 32) ^ k);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        self.value_set[rng.gen_range(0..self.value_set.len())]
    }

    pub fn max_u(&self) -> i64 {
        self.value_set.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

pub fn choose_u(seed: u64, support: SupportAssignment, value_set: &[i64]) -> Result<USequence> {
    let mut vs = value_set.to_vec();
    vs.sort_unstable();
    vs.dedup();
    if vs.len() < 2 {
        return Err(Error::Invalid("value set needs at least two elements".into()));
    }
    if vs.contains(&0) {
        return Err(Error::Invalid("value set must not contain 0".into()));
    }
    Ok(USequence { seed, value_set: vs, support })
}

pub fn check_theta(theta: u64) -> Result<()> {
    if theta < 5 || !arith::is_small_prime(theta) {
        return Err(Error::Invalid(format!("θ = {theta} must be a prime ≥ 5")));
    }
    Ok(())
}

/// Σ_{k=0}^{N} u_k / θ^{⌊α_k⌋} exactly.
pub fn sigma_trunc(theta: u64, u: &[i64], s: &BetaSchedule) -> BigRational {
    let fl = alphas(s, u.len().saturating_sub(1));
    let th = BigInt::from(theta);
    let mut acc = BigRational::zero();
    for (k, &uk) in u.iter().enumerate() {
        if uk == 0 {
            continue;
        }
        let e = fl[k].floor().to_integer().to_u32().expect("exponent fits u32");
        acc += BigRational::new(BigInt::from(uk), th.pow(e));
    }
    acc
}

/// θ^{⌊α_N⌋}·σ_N as an exact integer, by Horner evaluation over the gaps.
pub fn scaled_sigma(theta: u64, u: &[i64], floors: &[u64]) -> BigInt {
    let th = BigInt::from(theta);
    let mut acc = BigInt::zero();
    let mut prev = 0u64;
    for (k, &uk) in u.iter().enumerate() {
        let gap = floors[k] - prev;
        if !acc.is_zero() && gap > 0 {
            acc *= th.pow(gap as u32);
        }
        acc += uk;
        prev = floors[k];
    }
    acc
}

/// Bound c·θ^{−α_{N+1}} with c = max_u·θ²/(θ−1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailBound {
    pub factor: BigRational,
    pub theta: u64,
    pub exponent: BigRational,
}

impl TailBound {
    pub fn log2(&self) -> f64 {
        let lf = arith::log2_ratio(self.factor.numer(), self.factor.denom());
        let le = arith::log2_ratio(self.exponent.numer(), self.exponent.denom()).exp2();
        lf - le * (self.theta as f64).log2()
    }

    /// Rational lower bound on the tail bound (θ^{−⌈α⌉} ≤ θ^{−α}).
    pub fn rational_lower(&self) -> BigRational {
        let c = self.exponent.ceil().to_integer().to_u32().expect("exponent fits u32");
        &self.factor / BigRational::from_integer(BigInt::from(self.theta).pow(c))
    }

    pub fn to_mp(&self, bits: u32) -> MpFloat {
        let fl = self.exponent.floor().to_integer().to_u64().expect("exponent fits u64");
        let frac = &self.exponent - BigRational::from_integer(self.exponent.floor().to_integer());
        let th = MpFloat::from_i64(self.theta as i64, bits);
        let mut v = MpFloat::from_ratio(&self.factor, bits) / th.powu(fl);
        if !frac.is_zero() {
            let f = MpFloat::from_ratio(&frac, bits);
            v = v / (f * th.ln()).exp();
        }
        v
    }
}

pub fn tail_bound(theta: u64, s: &BetaSchedule, n: usize, max_u: i64) -> TailBound {
    let t = BigInt::from(theta);
    let factor = BigRational::new(BigInt::from(max_u) * &t * &t, t - 1);
    TailBound { factor, theta, exponent: alpha(s, n + 1) }
}

/// Admissibility: ⌊α_{k+1}⌋ − ⌊α_k⌋ ≥ 1 up to depth K.
pub fn floor_gaps_ok(s: &BetaSchedule, kmax: usize) -> bool {
    let a = alphas(s, kmax);
    a.windows(2).all(|w| w[1].floor() - w[0].floor() >= BigRational::one())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub theta: u64,
    pub betas: Vec<String>,
    #[serde(default)]
    pub period: Option<usize>,
    pub support_variant: SupportAssignment,
    pub seed: u64,
    pub value_set: Vec<i64>,
}

impl SeriesConfig {
    pub fn schedule(&self) -> Result<BetaSchedule> {
        let betas: Vec<BigRational> = self.betas.iter().map(|b| parse_rational(b)).collect::<Result<_>>()?;
        if let Some(p) = self.period {
            if p != betas.len() {
                return Err(Error::Invalid(format!("period {p} does not match {} betas", betas.len())));
            }
        }
        BetaSchedule::new(betas)
    }

    pub fn u_sequence(&self) -> Result<USequence> {
        check_theta(self.theta)?;
        choose_u(self.seed, self.support_variant, &self.value_set)
    }
}

pub fn denominator_divides(x: &BigRational, theta: u64, e: u32) -> bool {
    (BigInt::from(theta).pow(e)).is_multiple_of(x.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        let s = BetaSchedule::from_ints(&[3]).unwrap();
        let a: Vec<BigInt> = (0..4).map(|k| floor_alpha(&s, k)).collect();
        assert_eq!(a, vec![1.into(), 3.into(), 9.into(), 27.into()]);
        let s = BetaSchedule::from_ints(&[3, 4]).unwrap();
        assert_eq!(alpha(&s, 2), rat(12, 1));
        assert_eq!(alpha(&s, 3), rat(36, 1));
        let s = BetaSchedule::constant(rat(5, 2)).unwrap();
        assert_eq!(alpha(&s, 2), rat(25, 4));
        assert_eq!(floor_alpha(&s, 2), BigInt::from(6));
    }

    #[test]
    fn sigma_examples() {
        let s = BetaSchedule::from_ints(&[3]).unwrap();
        assert_eq!(sigma_trunc(5, &[1], &s), rat(1, 5));
        assert_eq!(sigma_trunc(5, &[1, 1, 1], &s), BigRational::new(406251.into(), BigInt::from(5).pow(9)));
        assert_eq!(sigma_trunc(5, &[0, 0, 0], &s), BigRational::zero());
        assert_eq!(scaled_sigma(5, &[1, 1, 1], &[1, 3, 9]), BigInt::from(406251));
    }

    #[test]
    fn tail_examples() {
        let s = BetaSchedule::from_ints(&[3]).unwrap();
        let t = tail_bound(5, &s, 1, 2);
        assert_eq!(t.factor, rat(25, 2));
        assert_eq!(t.exponent, rat(9, 1));
        assert!((t.log2() - (12.5f64.log2() - 9.0 * 5f64.log2())).abs() < 1e-12);
        assert!(tail_bound(5, &s, 2, 2).log2() < t.log2());
    }

    #[test]
    fn golden_bound() {
        assert!(exceeds_golden_bound(&rat(3, 1)));
        assert!(exceeds_golden_bound(&rat(8, 3)));
        assert!(!exceeds_golden_bound(&rat(2, 1)));
        assert!(!exceeds_golden_bound(&rat(2618, 1000)));
        assert!(exceeds_golden_bound(&rat(2619, 1000)));
    }

    #[test]
    fn ch5_support_parity() {
        let u = choose_u(7, SupportAssignment::Ch5 { n: 3 }, &[1, 2]).unwrap();
        for k in 0..40 {
            assert_eq!(u.u(0, 1, k) != 0, k % 2 == 0);
            assert_eq!(u.u(1, 1, k) != 0, k % 2 == 1);
        }
    }

    #[test]
    fn ch8_support_uniqueness_d1_q3() {
        let sup = SupportAssignment::Ch8 { d: 1, q: 3 };
        for i in 0..3 {
            for n in 0..3u64 {
                let hits = (0..3u64).filter(|k| sup.is_supported(i, 1, n + k)).count();
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn determinism() {
        let a = choose_u(42, SupportAssignment::Ch5 { n: 4 }, &[1, 2]).unwrap();
        let b = choose_u(42, SupportAssignment::Ch5 { n: 4 }, &[2, 1]).unwrap();
        let xs: Vec<i64> = (0..50).map(|k| a.u((k % 3) as usize, 1, k)).collect();
        let ys: Vec<i64> = (0..50).map(|k| b.u((k % 3) as usize, 1, k)).collect();
        assert_eq!(xs, ys);
        assert!(choose_u(1, SupportAssignment::Ch5 { n: 3 }, &[1]).is_err());
    }

    #[test]
    fn theta_check() {
        assert!(check_theta(5).is_ok());
        assert!(check_theta(7).is_ok());
        assert!(check_theta(9).is_err());
        assert!(check_theta(3).is_err());
    }
}
