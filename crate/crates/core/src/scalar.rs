//! Scalar backends.
//!
//! [`Rational`] is an exact, always-reduced ratio of big integers. [`Float`]
//! is a binary float whose working precision is a process-wide setting
//! (default 100 significant decimal digits). The two never mix: every
//! generic routine is instantiated with exactly one of them.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use core::str::FromStr;
use core::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use dashu_float::round::mode::HalfAway;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

/// Which arithmetic a value lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Field operations shared by both backends.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(r: &Rational) -> Self;
    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// Square root; the exact backend only answers for perfect squares.
    fn sqrt(&self) -> Option<Self>;
    /// Parse `p/q`, an integer, or a decimal literal with optional exponent.
    fn parse(s: &str) -> Option<Self>;

    fn from_frac(n: i64, d: i64) -> Self {
        Self::from_ratio(&Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn from_usize(v: usize) -> Self {
        Self::from_i64(v as i64)
    }

    /// Equality up to `tol`; the exact backend ignores `tol`.
    fn approx_eq(&self, other: &Self, tol: &Self) -> bool {
        if Self::BACKEND == Backend::Exact {
            self == other
        } else {
            (self.clone() - other).abs() <= *tol
        }
    }

    fn powi(&self, e: u32) -> Self {
        let mut out = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out * &base;
            }
            base = base.clone() * &base;
            e >>= 1;
        }
        out
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_ratio(r: &Rational) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn sqrt(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        if &(&n * &n) == self.numer() && &(&d * &d) == self.denom() {
            Some(Rational::new(n, d))
        } else {
            None
        }
    }
    fn parse(s: &str) -> Option<Self> {
        parse_rational(s)
    }
}

/// Parse an exact rational from `p/q`, `p`, or a decimal such as `-1.25e-3`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if s.contains('/') {
        return Rational::from_str(s).ok();
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(i) => (&digits[..i], &digits[i + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut all = String::with_capacity(int_part.len() + frac_part.len());
    all.push_str(int_part);
    all.push_str(frac_part);
    let mut num = BigInt::from_str(&all).ok()?;
    if neg {
        num = -num;
    }
    let shift = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Some(if shift >= 0 {
        Rational::from_integer(num * scale)
    } else {
        Rational::new(num, scale)
    })
}

static PRECISION_BITS: AtomicUsize = AtomicUsize::new(bits_for_digits(100));

const fn bits_for_digits(digits: usize) -> usize {
    // log2(10) < 3.3220; sixteen guard bits on top.
    (digits * 33220).div_ceil(10000) + 16
}

/// Set the working precision of [`Float`] in significant decimal digits.
pub fn set_float_digits(digits: usize) {
    PRECISION_BITS.store(bits_for_digits(digits.max(1)), AtomicOrdering::Relaxed);
}

/// Current working precision of [`Float`] in decimal digits.
pub fn float_digits() -> usize {
    (PRECISION_BITS.load(AtomicOrdering::Relaxed) - 16) * 10000 / 33220
}

fn precision_bits() -> usize {
    PRECISION_BITS.load(AtomicOrdering::Relaxed)
}

type Raw = FBig<HalfAway, 2>;

/// High-precision binary float.
#[derive(Clone)]
pub struct Float(Raw);

fn to_ibig(b: &BigInt) -> IBig {
    let (sign, bytes) = b.to_bytes_le();
    let mag = IBig::from(UBig::from_le_bytes(&bytes));
    if sign == Sign::Minus {
        -mag
    } else {
        mag
    }
}

impl Float {
    fn wrap(x: Raw) -> Float {
        let p = precision_bits();
        if x.precision() == p {
            Float(x)
        } else {
            Float(x.with_precision(p).value())
        }
    }

    fn from_ibig(i: IBig) -> Float {
        Float(Raw::from(i).with_precision(precision_bits()).value())
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        if Scalar::is_zero(self) {
            return "0".to_string();
        }
        let d = self.0.to_decimal().value();
        d.with_precision(digits).value().to_string()
    }
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Float({})", self.to_decimal_string(30))
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string(float_digits()))
    }
}

impl PartialEq for Float {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Float {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! float_binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident) => {
        impl $tr for Float {
            type Output = Float;
            fn $m(self, rhs: Float) -> Float {
                Float::wrap($tr::$m(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a Float> for Float {
            type Output = Float;
            fn $m(self, rhs: &'a Float) -> Float {
                Float::wrap($tr::$m(self.0, &rhs.0))
            }
        }
        impl<'a> $tr<&'a Float> for &'a Float {
            type Output = Float;
            fn $m(self, rhs: &'a Float) -> Float {
                Float::wrap($tr::$m(&self.0, &rhs.0))
            }
        }
        impl $atr for Float {
            fn $am(&mut self, rhs: Float) {
                let lhs = core::mem::replace(&mut self.0, Raw::ZERO);
                *self = Float::wrap($tr::$m(lhs, rhs.0));
            }
        }
    };
}

float_binop!(Add, add, AddAssign, add_assign);
float_binop!(Sub, sub, SubAssign, sub_assign);
float_binop!(Mul, mul, MulAssign, mul_assign);

impl Div for Float {
    type Output = Float;
    fn div(self, rhs: Float) -> Float {
        Float::wrap(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a Float> for Float {
    type Output = Float;
    fn div(self, rhs: &'a Float) -> Float {
        Float::wrap(self.0 / &rhs.0)
    }
}

impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}

impl Scalar for Float {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        Float::from_ibig(IBig::ZERO)
    }
    fn one() -> Self {
        Float::from_ibig(IBig::ONE)
    }
    fn from_i64(v: i64) -> Self {
        Float::from_ibig(IBig::from(v))
    }
    fn from_ratio(r: &Rational) -> Self {
        let n = Float::from_ibig(to_ibig(r.numer()));
        if r.denom().is_one() {
            n
        } else {
            n / Float::from_ibig(to_ibig(r.denom()))
        }
    }
    fn is_zero(&self) -> bool {
        self.0 == Raw::ZERO
    }
    fn abs(&self) -> Self {
        if self.0 < Raw::ZERO {
            Float(-self.0.clone())
        } else {
            self.clone()
        }
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn sqrt(&self) -> Option<Self> {
        if self.0 < Raw::ZERO {
            None
        } else if Scalar::is_zero(self) {
            Some(self.clone())
        } else {
            Some(Float::wrap(self.0.sqrt()))
        }
    }
    fn parse(s: &str) -> Option<Self> {
        parse_rational(s).map(|r| Float::from_ratio(&r))
    }
}

/// Binomial coefficient C(n, k) as a scalar.
pub fn binomial<F: Scalar>(n: usize, k: usize) -> F {
    if k > n {
        return F::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    F::from_ratio(&Rational::from_integer(num / den))
}

/// Row `n` of Pascal's triangle.
pub fn binomial_row<F: Scalar>(n: usize) -> Vec<F> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigInt::one();
    row.push(F::one());
    for k in 1..=n {
        c = c * BigInt::from(n + 1 - k) / BigInt::from(k);
        row.push(F::from_ratio(&Rational::from_integer(c.clone())));
    }
    row
}

/// π, from Machin's formula.
pub fn pi<F: Scalar>() -> F {
    fn arctan_inv<F: Scalar>(x: i64, eps: &F) -> F {
        let x2 = F::from_i64(x * x);
        let mut term = F::one() / F::from_i64(x);
        let mut sum = term.clone();
        let mut k = 1i64;
        loop {
            term = term / &x2;
            let t = term.clone() / F::from_i64(2 * k + 1);
            if t.abs() < *eps {
                break;
            }
            if k % 2 == 1 {
                sum -= t;
            } else {
                sum += t;
            }
            k += 1;
        }
        sum
    }
    let eps = epsilon::<F>();
    F::from_i64(16) * arctan_inv(5, &eps) - F::from_i64(4) * arctan_inv(239, &eps)
}

/// A value well below the working precision of `F` (zero for exact).
pub fn epsilon<F: Scalar>() -> F {
    match F::BACKEND {
        Backend::Exact => F::zero(),
        Backend::Float => {
            let bits = precision_bits() as u32;
            F::one() / F::from_i64(2).powi(bits + 8)
        }
    }
}

/// (cos x, sin x) by Taylor series after halving the argument.
pub fn cos_sin<F: Scalar>(x: &F) -> (F, F) {
    let mut halvings = 0u32;
    let mut y = x.clone();
    let quarter = F::from_frac(1, 4);
    while y.abs() > quarter {
        y = y / F::from_i64(2);
        halvings += 1;
    }
    let eps = epsilon::<F>();
    let y2 = y.clone() * &y;
    let mut c = F::one();
    let mut s = y.clone();
    let mut tc = F::one();
    let mut ts = y.clone();
    let mut k = 1i64;
    loop {
        tc = -(tc * &y2) / F::from_i64((2 * k - 1) * (2 * k));
        ts = -(ts * &y2) / F::from_i64((2 * k) * (2 * k + 1));
        c += tc.clone();
        s += ts.clone();
        if tc.abs() < eps && ts.abs() < eps {
            break;
        }
        k += 1;
    }
    for _ in 0..halvings {
        let s2 = F::from_i64(2) * &s * &c;
        let c2 = c.clone() * &c - s.clone() * &s;
        s = s2;
        c = c2;
    }
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parse_is_exact() {
        let r = parse_rational("-1.25e-3").unwrap();
        assert_eq!(r, Rational::new(BigInt::from(-1), BigInt::from(800)));
        assert_eq!(parse_rational("3/6").unwrap(), Rational::new(1.into(), 2.into()));
        assert!(parse_rational("1.2.3").is_none());
    }

    #[test]
    fn float_third_has_full_precision() {
        let third = Float::from_frac(1, 3);
        let back = third * Float::from_i64(3);
        let err = (back - Float::one()).abs();
        assert!(err < Float::parse("1e-99").unwrap());
    }

    #[test]
    fn pi_digits() {
        let p: Float = pi();
        let s = p.to_decimal_string(40);
        assert!(s.starts_with("3.14159265358979323846264338327950288419"), "{s}");
    }

    #[test]
    fn cos_sin_identity() {
        let x = Float::from_frac(7, 3);
        let (c, s) = cos_sin(&x);
        let one = c.clone() * &c + s.clone() * &s;
        assert!((one - Float::one()).abs() < Float::parse("1e-95").unwrap());
    }

    #[test]
    fn rational_sqrt_only_for_squares() {
        assert_eq!(Rational::from_frac(9, 4).sqrt(), Some(Rational::from_frac(3, 2)));
        assert_eq!(Rational::from_frac(2, 1).sqrt(), None);
    }

    #[test]
    fn float_roundtrip_through_decimal() {
        let x = Float::from_frac(-22, 7);
        let y = Float::parse(&x.to_string()).unwrap();
        assert!((x - y).abs() < Float::parse("1e-98").unwrap());
    }
}
