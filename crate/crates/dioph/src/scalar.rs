//! Scalar abstraction: one generic code path for f32, f64, multiprecision floats
//! and (where no square roots are needed) exact rationals.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use dashu_base::{BitTest, SquareRoot, UnsignedAbs};
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::arith;

/// Precision used when an [`MpFloat`] is created without an explicit one.
pub const DEFAULT_BITS: u32 = 256;

/// A number type closed under the four operations. Exact types qualify.
pub trait Field: Num + Clone + Debug + PartialOrd + Neg<Output = Self> + Send + Sync {
    /// Lift an integer; `bits` is ignored by fixed-precision and exact types.
    fn from_int(x: &BigInt, bits: u32) -> Self;

    fn from_ratio(x: &BigRational, bits: u32) -> Self {
        Self::from_int(x.numer(), bits) / Self::from_int(x.denom(), bits)
    }

    fn from_i64(x: i64, bits: u32) -> Self {
        Self::from_int(&BigInt::from(x), bits)
    }
}

/// A field with square roots and a notion of working precision.
pub trait Real: Field {
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// log₂|x|, −∞ at zero; finite even when `to_f64` would underflow.
    fn log2_abs(&self) -> f64;
    fn from_f64(x: f64, bits: u32) -> Self;
    /// Effective mantissa precision for a requested working precision.
    fn mantissa_bits(bits: u32) -> u32;
    /// 2^e at the given precision.
    fn pow2(e: i64, bits: u32) -> Self;
}

impl Field for BigRational {
    fn from_int(x: &BigInt, _bits: u32) -> Self {
        BigRational::from_integer(x.clone())
    }
    fn from_ratio(x: &BigRational, _bits: u32) -> Self {
        x.clone()
    }
}

macro_rules! impl_prim_float {
    ($t:ty, $mant:expr) => {
        impl Field for $t {
            fn from_int(x: &BigInt, _bits: u32) -> Self {
                x.to_f64().unwrap_or(f64::INFINITY) as $t
            }
            fn from_ratio(x: &BigRational, _bits: u32) -> Self {
                let l = arith::log2_ratio(x.numer(), x.denom());
                if l.abs() < 900.0 && x.numer().bits() < 1000 && x.denom().bits() < 1000 {
                    (x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()) as $t
                } else {
                    let s = if x.is_negative() { -1.0 } else { 1.0 };
                    (s * l.exp2()) as $t
                }
            }
        }
        impl Real for $t {
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn log2_abs(&self) -> f64 {
                (<$t>::abs(*self) as f64).log2()
            }
            fn from_f64(x: f64, _bits: u32) -> Self {
                x as $t
            }
            fn mantissa_bits(_bits: u32) -> u32 {
                $mant
            }
            fn pow2(e: i64, _bits: u32) -> Self {
                (e as f64).exp2() as $t
            }
        }
    };
}

impl_prim_float!(f32, 24);
impl_prim_float!(f64, 53);

type Raw = FBig<HalfEven, 2>;

/// Binary floating point with arbitrary mantissa and machine-word exponent.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct MpFloat(Raw);

impl MpFloat {
    pub fn from_raw(x: Raw, bits: u32) -> Self {
        MpFloat(x.with_precision(bits as usize).value())
    }

    pub fn raw(&self) -> &Raw {
        &self.0
    }

    pub fn precision(&self) -> usize {
        self.0.precision()
    }

    pub fn with_bits(&self, bits: u32) -> Self {
        MpFloat(self.0.clone().with_precision(bits as usize).value())
    }

    /// m·2^e exactly, then rounded to `bits`.
    pub fn from_parts(m: &BigInt, e: i64, bits: u32) -> Self {
        MpFloat::from_raw(Raw::from_parts(arith::to_ibig(m), e as isize), bits)
    }

    pub fn is_zero_value(&self) -> bool {
        self.0.repr().is_zero()
    }

    /// Multiply by 2^k exactly.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero_value() {
            return self.clone();
        }
        let (m, e) = self.0.repr().clone().into_parts();
        let p = self.precision().max(1);
        MpFloat(Raw::from_parts(m, e + k as isize).with_precision(p).value())
    }

    /// Integer power by binary exponentiation at the working precision.
    pub fn powu(&self, mut k: u64) -> Self {
        let bits = self.precision().max(64) as u32;
        let mut base = self.clone();
        let mut acc = MpFloat::from_i64(1, bits);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    pub fn ln(&self) -> Self {
        MpFloat(self.0.ln())
    }

    pub fn exp(&self) -> Self {
        MpFloat(self.0.exp())
    }

    pub fn floor(&self) -> Self {
        MpFloat(self.0.floor())
    }

    pub fn to_int(&self) -> BigInt {
        arith::from_ibig(&self.0.to_int().value())
    }

    /// Scientific notation with `digits` significant decimal digits, valid for any exponent.
    pub fn to_sci_string(&self, digits: usize) -> String {
        if self.is_zero_value() {
            return "0".to_string();
        }
        let (m, e) = self.0.repr().clone().into_parts();
        let neg = m < IBig::ZERO;
        let work = (digits as u32) * 4 + 96 + 64;
        let mag = m.clone().unsigned_abs();
        let mbits = mag.bit_len() as i64;
        // |x| = f · 2^(e + mbits), f ∈ [1/2, 1)
        let f = MpFloat::from_raw(Raw::from_parts(IBig::from(mag), -(mbits as isize)), work);
        let two_exp = e as i64 + mbits;
        let ln2 = MpFloat::from_i64(2, work).ln();
        let ln10 = MpFloat::from_i64(10, work).ln();
        let lg = (f.ln() + MpFloat::from_i64(two_exp, work) * ln2) / ln10.clone();
        let mut k = lg.floor().to_int();
        let mut frac = lg - MpFloat::from_int(&k, work);
        let mut mant = (frac.clone() * ln10.clone()).exp();
        let scale = BigInt::from(10).pow(digits as u32 - 1);
        let mut digs = (mant.clone() * MpFloat::from_int(&scale, work) + MpFloat::from_ratio(&BigRational::new(1.into(), 2.into()), work))
            .floor()
            .to_int();
        if digs >= scale.clone() * 10 {
            k += 1;
            frac = frac - MpFloat::from_i64(1, work);
            mant = (frac * ln10).exp();
            digs = (mant * MpFloat::from_int(&scale, work)).floor().to_int();
        }
        let s = digs.to_string();
        let (head, tail) = s.split_at(1);
        let tail = tail.trim_end_matches('0');
        let sign = if neg { "-" } else { "" };
        if tail.is_empty() {
            format!("{sign}{head}e{k}")
        } else {
            format!("{sign}{head}.{tail}e{k}")
        }
    }
}

fn top_bit(x: &Raw) -> Option<isize> {
    let r = x.repr();
    (!r.is_zero()).then(|| r.exponent() + r.digits() as isize)
}

/// The side of a sum that absorbs the other: dashu aligns operands exactly, which for a gap of
/// millions of bits allocates the whole gap.
fn absorbing(a: &Raw, b: &Raw) -> Option<(bool, usize)> {
    let (ta, tb) = (top_bit(a)?, top_bit(b)?);
    let p = a.precision().max(b.precision());
    if p == 0 {
        return None;
    }
    let margin = p as isize + 4;
    if ta - tb > margin && a.precision() != 0 {
        Some((true, p))
    } else if tb - ta > margin && b.precision() != 0 {
        Some((false, p))
    } else {
        None
    }
}

impl Add for MpFloat {
    type Output = MpFloat;
    fn add(self, rhs: MpFloat) -> MpFloat {
        match absorbing(&self.0, &rhs.0) {
            Some((true, p)) => MpFloat(self.0.with_precision(p).value()),
            Some((false, p)) => MpFloat(rhs.0.with_precision(p).value()),
            None => MpFloat(self.0 + rhs.0),
        }
    }
}

impl Sub for MpFloat {
    type Output = MpFloat;
    fn sub(self, rhs: MpFloat) -> MpFloat {
        match absorbing(&self.0, &rhs.0) {
            Some((true, p)) => MpFloat(self.0.with_precision(p).value()),
            Some((false, p)) => MpFloat(-rhs.0.with_precision(p).value()),
            None => MpFloat(self.0 - rhs.0),
        }
    }
}

impl Mul for MpFloat {
    type Output = MpFloat;
    fn mul(self, rhs: MpFloat) -> MpFloat {
        MpFloat(self.0 * rhs.0)
    }
}

fn limited(x: Raw) -> Raw {
    if x.precision() == 0 {
        x.with_precision(DEFAULT_BITS as usize).value()
    } else {
        x
    }
}

impl Div for MpFloat {
    type Output = MpFloat;
    fn div(self, rhs: MpFloat) -> MpFloat {
        if self.0.precision() == 0 && rhs.0.precision() == 0 {
            return MpFloat(limited(self.0) / rhs.0);
        }
        MpFloat(self.0 / rhs.0)
    }
}

impl Rem for MpFloat {
    type Output = MpFloat;
    fn rem(self, rhs: MpFloat) -> MpFloat {
        let q = MpFloat((self.clone() / rhs.clone()).0.trunc());
        self - q * rhs
    }
}

impl Neg for MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat(-self.0)
    }
}

impl Zero for MpFloat {
    fn zero() -> Self {
        MpFloat(Raw::ZERO)
    }
    fn is_zero(&self) -> bool {
        self.is_zero_value()
    }
}

impl One for MpFloat {
    fn one() -> Self {
        MpFloat(Raw::ONE)
    }
}

impl Num for MpFloat {
    type FromStrRadixErr = String;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, String> {
        if radix != 10 {
            return Err(format!("unsupported radix {radix}"));
        }
        let q = parse_decimal(s).ok_or_else(|| format!("not a decimal: {s}"))?;
        Ok(MpFloat::from_ratio(&q, DEFAULT_BITS))
    }
}

/// Exact value of a decimal literal such as "-12.5e-3".
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        BigRational::from_integer(num * ten.pow(shift as u32))
    } else {
        BigRational::new(num, ten.pow((-shift) as u32))
    })
}

impl Field for MpFloat {
    fn from_int(x: &BigInt, bits: u32) -> Self {
        MpFloat::from_parts(x, 0, bits)
    }
}

impl Real for MpFloat {
    fn sqrt(&self) -> Self {
        if self.is_zero_value() {
            return self.clone();
        }
        MpFloat(limited(self.0.clone()).sqrt())
    }
    fn abs(&self) -> Self {
        if self.0 < Raw::ZERO {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn to_f64(&self) -> f64 {
        let l = self.log2_abs();
        if l < -1070.0 {
            return 0.0;
        }
        if l > 1023.0 {
            return if self.0 < Raw::ZERO { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        self.0.to_f64().value()
    }
    fn log2_abs(&self) -> f64 {
        if self.is_zero_value() {
            return f64::NEG_INFINITY;
        }
        let (m, e) = self.0.repr().clone().into_parts();
        arith::log2_abs(&arith::from_ibig(&m)) + e as f64
    }
    fn from_f64(x: f64, bits: u32) -> Self {
        if x == 0.0 {
            return MpFloat::from_i64(0, bits);
        }
        let b = x.to_bits();
        let sign = if b >> 63 == 1 { -1i64 } else { 1 };
        let exp = ((b >> 52) & 0x7ff) as i64;
        let frac = (b & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
        MpFloat::from_parts(&BigInt::from(sign * m), e, bits)
    }
    fn mantissa_bits(bits: u32) -> u32 {
        bits
    }
    fn pow2(e: i64, bits: u32) -> Self {
        MpFloat::from_parts(&BigInt::one(), e, bits)
    }
}

/// Total order on reals that treats NaN as largest; used for sorting sines.
pub fn cmp_real<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Greater)
}
