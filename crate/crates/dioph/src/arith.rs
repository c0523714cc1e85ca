//! Integer helpers shared by the exact and floating layers.

use dashu_base::Sign as DSign;
use dashu_int::{IBig, UBig};
use malachite_base::num::arithmetic::traits::{Gcd, Pow, Square};
use malachite_nz::integer::Integer as MInteger;
use malachite_nz::natural::Natural;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Below this size the schoolbook gcd in num-integer is fine.
const SMALL_GCD_BITS: u64 = 4096;

fn to_natural(x: &BigUint) -> Natural {
    Natural::from_owned_limbs_asc(x.to_u64_digits())
}

fn from_natural(x: &Natural) -> BigUint {
    let limbs = x.to_limbs_asc();
    let mut words = Vec::with_capacity(limbs.len() * 2);
    for w in limbs {
        words.push(w as u32);
        words.push((w >> 32) as u32);
    }
    BigUint::new(words)
}

pub fn gcd_uint(a: &BigUint, b: &BigUint) -> BigUint {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let (small, large) = if a.bits() <= b.bits() { (a, b) } else { (b, a) };
    if small.bits() <= 64 {
        let s = small.to_u64().unwrap();
        let r = (large % s).to_u64().unwrap();
        return BigUint::from(Integer::gcd(&r, &s));
    }
    if large.bits() <= SMALL_GCD_BITS {
        return Integer::gcd(small, large);
    }
    from_natural(&Gcd::gcd(to_natural(a), to_natural(b)))
}

/// Operands above this size are multiplied with malachite's FFT routines.
const BIG_MUL_BITS: u64 = 1 << 16;

fn to_minteger(x: &BigInt) -> MInteger {
    let n = MInteger::from(to_natural(x.magnitude()));
    if x.sign() == Sign::Minus {
        -n
    } else {
        n
    }
}

fn from_minteger(x: &MInteger) -> BigInt {
    let m = BigInt::from(from_natural(x.unsigned_abs_ref()));
    if *x < 0 {
        -m
    } else {
        m
    }
}

pub fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    if a.bits().min(b.bits()) < BIG_MUL_BITS {
        return a * b;
    }
    from_minteger(&(to_minteger(a) * to_minteger(b)))
}

pub fn square(a: &BigInt) -> BigInt {
    if a.bits() < BIG_MUL_BITS {
        return a * a;
    }
    BigInt::from(from_natural(&to_natural(a.magnitude()).square()))
}

/// base^exp, through malachite for large results.
pub fn pow(base: u64, exp: u64) -> BigInt {
    if (exp as f64) * (base as f64).log2() < BIG_MUL_BITS as f64 {
        return BigInt::from(base).pow(exp as u32);
    }
    BigInt::from(from_natural(&Natural::from(base).pow(exp)))
}

/// Exponent k with |x| = p^k, if any.
pub fn prime_power_exponent(x: &BigInt, p: u64) -> Option<u64> {
    if x.is_zero() || p < 2 {
        return None;
    }
    let small = BigUint::from(p);
    if x.magnitude().is_one() {
        return Some(0);
    }
    if !(x.magnitude() % &small).is_zero() {
        return None;
    }
    let k = (log2_abs(x) / (p as f64).log2()).round() as u64;
    (k > 0 && pow(p, k).magnitude() == x.magnitude()).then_some(k)
}

/// Cheap coprimality certificate: some entry is ±p^k for a small prime p and another entry is
/// not divisible by p.
pub fn coprime_by_prime_power(xs: &[BigInt]) -> bool {
    const PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];
    for (i, x) in xs.iter().enumerate() {
        for &p in &PRIMES {
            if prime_power_exponent(x, p).is_some() {
                let pb = BigInt::from(p);
                if xs.iter().enumerate().any(|(j, y)| j != i && !(y % &pb).is_zero()) {
                    return true;
                }
            }
        }
        if x.magnitude().is_one() {
            return true;
        }
    }
    false
}

pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    BigInt::from(gcd_uint(a.magnitude(), b.magnitude()))
}

/// Gcd of a list, smallest entries first so that the common unit case exits early.
pub fn gcd_all(xs: &[BigInt]) -> BigInt {
    if xs.iter().any(|x| x.bits() > SMALL_GCD_BITS) && coprime_by_prime_power(xs) {
        return BigInt::one();
    }
    let mut idx: Vec<usize> = (0..xs.len()).filter(|&i| !xs[i].is_zero()).collect();
    idx.sort_by_key(|&i| xs[i].bits());
    let mut g = BigUint::zero();
    for i in idx {
        g = gcd_uint(&g, xs[i].magnitude());
        if g.is_one() {
            break;
        }
    }
    BigInt::from(g)
}

pub fn to_ibig(x: &BigInt) -> IBig {
    let mag = UBig::from_words(&x.magnitude().to_u64_digits());
    let sign = if x.sign() == Sign::Minus { DSign::Negative } else { DSign::Positive };
    IBig::from_parts(sign, mag)
}

pub fn from_ibig(x: &IBig) -> BigInt {
    let (sign, words) = x.as_sign_words();
    let mut digits = Vec::with_capacity(words.len() * 2);
    for &w in words {
        digits.push(w as u32);
        digits.push((w >> 32) as u32);
    }
    let mag = BigUint::new(digits);
    if sign == DSign::Negative {
        -BigInt::from(mag)
    } else {
        BigInt::from(mag)
    }
}

/// log₂|x| from the top 64 bits; −∞ for zero.
pub fn log2_abs(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x.magnitude() >> shift).to_f64().unwrap();
    top.log2() + shift as f64
}

pub fn log2_ratio(num: &BigInt, den: &BigInt) -> f64 {
    log2_abs(num) - log2_abs(den)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// All k-subsets of 0..n in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Rank of a subset in the lexicographic list of k-subsets of 0..n.
pub fn subset_rank(n: usize, subset: &[usize]) -> usize {
    let k = subset.len();
    let mut rank = 0;
    let mut prev = 0usize;
    for (i, &s) in subset.iter().enumerate() {
        for v in prev..s {
            rank += binomial(n - v - 1, k - i - 1);
        }
        prev = s + 1;
    }
    rank
}

/// Fraction-free determinant.
pub fn det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).filter(|&r| !m[r][k].is_zero()).min_by_key(|&r| m[r][k].bits()) else {
            return BigInt::zero();
        };
        if p != k {
            m.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = mul(&m[k][k], &m[i][j]) - mul(&m[i][k], &m[k][j]);
                m[i][j] = v / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

pub fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[BigInt]) -> BigInt {
    a.iter().map(square).sum()
}

pub fn is_small_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn abs_cmp(a: &BigInt, b: &BigInt) -> std::cmp::Ordering {
    a.abs().cmp(&b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_lexicographic() {
        let s = subsets(4, 2);
        assert_eq!(s, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        for (r, sub) in s.iter().enumerate() {
            assert_eq!(subset_rank(4, sub), r);
        }
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn det_small() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(3), BigInt::from(2)],
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(2)],
        ];
        assert_eq!(det(m.clone()), BigInt::from(6));
        let mut sing = m;
        sing[2] = sing[0].clone();
        assert_eq!(det(sing), BigInt::zero());
    }

    #[test]
    fn big_gcd_matches_euclid() {
        let a = BigInt::from(5).pow(3000) * BigInt::from(7);
        let b = BigInt::from(5).pow(2000) * BigInt::from(11);
        assert_eq!(gcd(&a, &b), BigInt::from(5).pow(2000));
        assert_eq!(gcd_all(&[a.clone(), b, BigInt::from(3)]), BigInt::one());
    }

    #[test]
    fn malachite_ops_match() {
        let a = BigInt::from(7).pow(40000) - 1;
        let b = -BigInt::from(3).pow(50000);
        assert_eq!(mul(&a, &b), &a * &b);
        assert_eq!(pow(5, 30000), BigInt::from(5).pow(30000));
        assert_eq!(prime_power_exponent(&BigInt::from(5).pow(30000), 5), Some(30000));
        assert_eq!(prime_power_exponent(&(BigInt::from(5).pow(300) * 2), 5), None);
        let big = BigInt::from(5).pow(3000);
        assert_eq!(gcd_all(&[big.clone(), &big * 3 + 1]), BigInt::one());
        assert_eq!(gcd_all(&[big.clone(), &big * 3]), big);
    }

    #[test]
    fn ibig_round_trip() {
        for x in [BigInt::from(-17), BigInt::from(3).pow(200), -BigInt::from(7).pow(90)] {
            assert_eq!(from_ibig(&to_ibig(&x)), x);
        }
    }
}
