//! Exact scalars: arbitrary-precision rationals, single quadratic extensions
//! Q(sqrt d), complex floating values, and rational recognition.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision rational, always kept in lowest terms by `num-rational`.
pub type Rational = BigRational;

/// Complex double used for every numeric evaluation.
pub type CScalar = Complex64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("incompatible radicals sqrt({0}) and sqrt({1})")]
    IncompatibleRadicals(i64, i64),
    #[error("division by zero")]
    DivisionByZero,
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large magnitudes: fall back to a ratio of truncated floats.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Parse "p/q" or "p".
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(Rational::new(p, q))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Split `n` as `s^2 * f` with `f` square-free (sign kept in `f`).
pub fn square_free_part(n: i64) -> (i64, i64) {
    if n == 0 {
        return (0, 0);
    }
    let sign = n.signum();
    let mut m = n.unsigned_abs();
    let mut s: u64 = 1;
    let mut f: u64 = 1;
    let mut p: u64 = 2;
    while p * p <= m {
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            f *= p;
        }
        p += 1;
    }
    f *= m;
    (s as i64, sign * f as i64)
}

/// The value `a + b*sqrt(d)`.
///
/// Normal form: `d` square-free and different from 1; `b == 0` implies `d == 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadExt {
    a: Rational,
    b: Rational,
    d: i64,
}

impl QuadExt {
    pub fn new(a: Rational, b: Rational, d: i64) -> Self {
        if b.is_zero() || d == 0 {
            return QuadExt { a, b: Rational::zero(), d: 0 };
        }
        let (s, f) = square_free_part(d);
        let b = b * rat_int(s);
        if f == 1 {
            QuadExt { a: a + b, b: Rational::zero(), d: 0 }
        } else {
            QuadExt { a, b, d: f }
        }
    }

    pub fn from_rational(a: Rational) -> Self {
        QuadExt { a, b: Rational::zero(), d: 0 }
    }

    pub fn int(n: i64) -> Self {
        Self::from_rational(rat_int(n))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::from_rational(rat(n, d))
    }

    /// `sqrt(d)` itself.
    pub fn sqrt_of(d: i64) -> Self {
        Self::new(Rational::zero(), Rational::one(), d)
    }

    pub fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// Radicand; 0 for a pure rational.
    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.b.is_zero() && self.a.is_one()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        if self.b.is_zero() {
            Some(&self.a)
        } else {
            None
        }
    }

    /// Integer value, if this is a rational with denominator 1.
    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_rational().filter(|r| r.is_integer()).map(|r| r.to_integer())
    }

    fn common_d(&self, other: &Self) -> Result<i64, ExactError> {
        match (self.d, other.d) {
            (0, d) | (d, 0) => Ok(d),
            (d1, d2) if d1 == d2 => Ok(d1),
            (d1, d2) => Err(ExactError::IncompatibleRadicals(d1, d2)),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ExactError> {
        let d = self.common_d(other)?;
        Ok(Self::new(&self.a + &other.a, &self.b + &other.b, d))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ExactError> {
        let d = self.common_d(other)?;
        Ok(Self::new(&self.a - &other.a, &self.b - &other.b, d))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ExactError> {
        let d = self.common_d(other)?;
        if self.b.is_zero() {
            return Ok(Self::new(&self.a * &other.a, &self.a * &other.b, d));
        }
        if other.b.is_zero() {
            return Ok(Self::new(&self.a * &other.a, &self.b * &other.a, d));
        }
        let a = &self.a * &other.a + &self.b * &other.b * rat_int(d);
        let b = &self.a * &other.b + &self.b * &other.a;
        Ok(Self::new(a, b, d))
    }

    /// Field norm `a^2 - d b^2`.
    pub fn norm(&self) -> Rational {
        &self.a * &self.a - &self.b * &self.b * rat_int(self.d)
    }

    /// Galois conjugate `a - b sqrt(d)`.
    pub fn conj(&self) -> Self {
        Self::new(self.a.clone(), -self.b.clone(), self.d)
    }

    pub fn inv(&self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        if self.b.is_zero() {
            return Ok(Self::from_rational(self.a.recip()));
        }
        let n = self.norm();
        Ok(Self::new(&self.a / &n, -(&self.b / &n), self.d))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, ExactError> {
        self.checked_mul(&other.inv()?)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Square root inside the same field, or a new radical for a rational.
    pub fn sqrt(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        if let Some(r) = self.as_rational() {
            return sqrt_rational(r);
        }
        // (p + q sqrt d)^2 = p^2 + d q^2 + 2 p q sqrt d
        let d = rat_int(self.d);
        let disc = &self.a * &self.a - &self.b * &self.b * &d;
        let s = rational_sqrt_exact(&disc)?;
        for sign in [1, -1] {
            let p2 = (&self.a + &s * rat_int(sign)) / rat_int(2);
            if let Some(p) = rational_sqrt_exact(&p2) {
                if p.is_zero() {
                    continue;
                }
                let q = &self.b / (rat_int(2) * &p);
                let cand = Self::new(p, q, self.d);
                if &(&cand * &cand) == self {
                    return Some(cand);
                }
            }
        }
        None
    }

    pub fn to_complex(&self) -> CScalar {
        embed_numeric(self)
    }

    /// Numeric sign of the real embedding, for real values.
    pub fn signum_real(&self) -> Option<i32> {
        if self.d < 0 && !self.b.is_zero() {
            return None;
        }
        let v = embed_numeric(self).re;
        if self.is_zero() {
            Some(0)
        } else {
            Some(if v > 0.0 { 1 } else { -1 })
        }
    }
}

fn rational_sqrt_exact(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &n * &n == *r.numer() && &d * &d == *r.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// `sqrt(r)` for rational `r`, as a rational or `s*sqrt(f)` with small `f`.
pub fn sqrt_rational(r: &Rational) -> Option<QuadExt> {
    if let Some(s) = rational_sqrt_exact(r) {
        return Some(QuadExt::from_rational(s));
    }
    // r = n/d = n*d / d^2
    let nd = r.numer() * r.denom();
    let m = nd.to_i64()?;
    let (s, f) = square_free_part(m);
    let coeff = Rational::new(BigInt::from(s), r.denom().clone());
    Some(QuadExt::new(Rational::zero(), coeff, f))
}

impl Default for QuadExt {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for QuadExt {
    fn from(n: i64) -> Self {
        Self::int(n)
    }
}

impl From<Rational> for QuadExt {
    fn from(r: Rational) -> Self {
        Self::from_rational(r)
    }
}

macro_rules! quad_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a> $tr<&'a QuadExt> for &'a QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: &'a QuadExt) -> QuadExt {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: QuadExt) -> QuadExt {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $method(self, rhs: &'a QuadExt) -> QuadExt {
                (&self).$method(rhs)
            }
        }
    };
}

quad_binop!(Add, add, checked_add);
quad_binop!(Sub, sub, checked_sub);
quad_binop!(Mul, mul, checked_mul);
quad_binop!(Div, div, checked_div);

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt { a: -self.a, b: -self.b, d: self.d }
    }
}

impl Neg for &QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        -self.clone()
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let rad = format!("sqrt({})", self.d);
        let bpart = if self.b.is_one() {
            rad
        } else if (-&self.b).is_one() {
            format!("-{rad}")
        } else {
            format!("{}*{rad}", self.b)
        };
        if self.a.is_zero() {
            write!(f, "{bpart}")
        } else if bpart.starts_with('-') {
            write!(f, "{} - {}", self.a, &bpart[1..])
        } else {
            write!(f, "{} + {bpart}", self.a)
        }
    }
}

impl fmt::Debug for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct QuadExtJson {
    a: String,
    b: String,
    d: i64,
}

impl Serialize for QuadExt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QuadExtJson { a: self.a.to_string(), b: self.b.to_string(), d: self.d }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadExt {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let j = QuadExtJson::deserialize(de)?;
        let a = parse_rational(&j.a).ok_or_else(|| serde::de::Error::custom("bad rational a"))?;
        let b = parse_rational(&j.b).ok_or_else(|| serde::de::Error::custom("bad rational b"))?;
        Ok(QuadExt::new(a, b, j.d))
    }
}

/// JSON form `[re, im]` of a complex value.
pub fn cscalar_json(z: CScalar) -> serde_json::Value {
    serde_json::json!([z.re, z.im])
}

/// Numeric embedding with the principal square root.
///
/// When `a` and `b sqrt(d)` have opposite signs the value is evaluated as
/// `(a^2 - d b^2) / (a - b sqrt(d))` so that cancellation does not cost accuracy.
pub fn embed_numeric(x: &QuadExt) -> CScalar {
    let a = rat_to_f64(&x.a);
    if x.b.is_zero() {
        return CScalar::new(a, 0.0);
    }
    let b = rat_to_f64(&x.b);
    if x.d < 0 {
        return CScalar::new(a, b * ((-x.d) as f64).sqrt());
    }
    let r = (x.d as f64).sqrt();
    let br = b * r;
    if a == 0.0 || (a > 0.0) == (br > 0.0) {
        CScalar::new(a + br, 0.0)
    } else {
        let n = rat_to_f64(&x.norm());
        CScalar::new(n / (a - br), 0.0)
    }
}

/// Smallest-denominator rational within `tol` of `x`, if its denominator is at most `max_den`.
pub fn recognize_rational(x: CScalar, max_den: u64, tol: f64) -> Option<Rational> {
    if !(x.re.is_finite() && x.im.is_finite()) || x.im.abs() > tol || max_den == 0 {
        return None;
    }
    let lo = Rational::from_float(x.re - tol)?;
    let hi = Rational::from_float(x.re + tol)?;
    let q = simplest_in_interval(&lo, &hi);
    if q.denom() <= &BigInt::from(max_den) {
        Some(q)
    } else {
        None
    }
}

/// The rational with smallest denominator (then smallest numerator) in `[lo, hi]`.
pub fn simplest_in_interval(lo: &Rational, hi: &Rational) -> Rational {
    debug_assert!(lo <= hi);
    if !lo.is_positive() && !hi.is_negative() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_in_interval(&-hi.clone(), &-lo.clone());
    }
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    let next = &fl + Rational::one();
    if &next <= hi {
        return next;
    }
    let inner = simplest_in_interval(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + inner.recip()
}

/// Integer gcd helper exposed for content computations.
pub fn big_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s5() -> QuadExt {
        QuadExt::sqrt_of(5)
    }

    #[test]
    fn difference_of_squares() {
        let one = QuadExt::one();
        let p = (&one + &s5()) * (&one - &s5());
        assert_eq!(p, QuadExt::int(-4));
    }

    #[test]
    fn rationalize() {
        let q = QuadExt::one() / s5();
        assert_eq!(q, QuadExt::new(Rational::zero(), rat(1, 5), 5));
    }

    #[test]
    fn delta_multipliers_are_reciprocal() {
        let a = QuadExt::new(rat(7, 2), rat(3, 2), 5);
        let b = QuadExt::new(rat(7, 2), rat(-3, 2), 5);
        assert_eq!(a * b, QuadExt::one());
    }

    #[test]
    fn mixing_radicals_is_an_error() {
        let e = QuadExt::sqrt_of(5).checked_add(&QuadExt::sqrt_of(3));
        assert_eq!(e, Err(ExactError::IncompatibleRadicals(5, 3)));
        assert_eq!(QuadExt::one().checked_div(&QuadExt::zero()), Err(ExactError::DivisionByZero));
    }

    #[test]
    fn normal_form_pulls_squares() {
        let x = QuadExt::new(Rational::zero(), Rational::one(), 12);
        assert_eq!(x, QuadExt::new(Rational::zero(), rat_int(2), 3));
        assert_eq!(QuadExt::sqrt_of(4), QuadExt::int(2));
        assert_eq!(QuadExt::sqrt_of(-3).d(), -3);
    }

    #[test]
    fn embeddings() {
        assert_eq!(embed_numeric(&QuadExt::frac(1, 2)), CScalar::new(0.5, 0.0));
        let i3 = embed_numeric(&QuadExt::sqrt_of(-3));
        assert_eq!(i3.re, 0.0);
        assert!((i3.im - 3f64.sqrt()).abs() < 1e-15);
        // (3/2)(sqrt5 - 1) = 1.854101966249684544613760503096914353161...
        let v = embed_numeric(&QuadExt::new(rat(-3, 2), rat(3, 2), 5)).re;
        let oracle = 1.854_101_966_249_684_5_f64;
        assert!((v - oracle).abs() <= 2.0 * f64::EPSILON * oracle);
    }

    #[test]
    fn embedding_survives_cancellation() {
        // 161 - 72 sqrt 5 = 1/(161 + 72 sqrt 5) ~ 3.1056e-5
        let x = QuadExt::new(rat_int(161), rat_int(-72), 5);
        let v = embed_numeric(&x).re;
        let oracle = 1.0 / (161.0 + 72.0 * 5f64.sqrt());
        assert!(((v - oracle) / oracle).abs() < 1e-14);
    }

    #[test]
    fn recognition() {
        assert_eq!(recognize_rational(CScalar::new(2.9999999997, 0.0), 64, 1e-8), Some(rat_int(3)));
        assert_eq!(recognize_rational(CScalar::new(0.333333333, 0.0), 10, 1e-6), Some(rat(1, 3)));
        assert_eq!(recognize_rational(CScalar::new(1.7320508, 0.0), 1000, 1e-9), None);
        assert_eq!(recognize_rational(CScalar::new(0.5, 1e-3), 10, 1e-6), None);
        assert_eq!(recognize_rational(CScalar::new(-2.5, 0.0), 10, 1e-9), Some(rat(-5, 2)));
    }

    #[test]
    fn recognition_matches_exhaustive_scan() {
        // Oracle: scan every denominator up to the bound.
        let x = 3f64.sqrt();
        for q in 1..=1000i64 {
            let p = (x * q as f64).round();
            assert!((x - p / q as f64).abs() > 1e-9);
        }
    }

    #[test]
    fn square_roots() {
        // sqrt((81/2)(3 - sqrt 5)) = (9/2)(sqrt 5 - 1)
        let x = QuadExt::new(rat(243, 2), rat(-81, 2), 5);
        let r = x.sqrt().unwrap();
        assert_eq!(&r * &r, x);
        assert_eq!(sqrt_rational(&rat(-3, 4)).unwrap(), QuadExt::new(Rational::zero(), rat(1, 2), -3));
        assert!(QuadExt::new(rat_int(1), rat_int(1), 5).sqrt().is_none());
    }

    #[test]
    fn json_round_trip() {
        let x = QuadExt::new(rat(7, 2), rat(-3, 2), 5);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"a":"7/2","b":"-3/2","d":5}"#);
        let y: QuadExt = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
    }

    fn small_rat() -> impl Strategy<Value = Rational> {
        (-40i64..40, 1i64..12).prop_map(|(n, d)| rat(n, d))
    }

    fn quad(d: i64) -> impl Strategy<Value = QuadExt> {
        (small_rat(), small_rat()).prop_map(move |(a, b)| QuadExt::new(a, b, d))
    }

    proptest! {
        #[test]
        fn field_axioms(x in quad(5), y in quad(5), z in quad(5)) {
            prop_assert_eq!((&x + &y) + z.clone(), x.clone() + (&y + &z));
            prop_assert_eq!((&x * &y) * z.clone(), x.clone() * (&y * &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            if !x.is_zero() {
                prop_assert_eq!(&x * &x.inv().unwrap(), QuadExt::one());
            }
        }

        #[test]
        fn field_axioms_imaginary(x in quad(-3), y in quad(-3)) {
            prop_assert_eq!(&x * &y, &y * &x);
            if !y.is_zero() {
                prop_assert_eq!(&(&x / &y) * &y, x);
            }
        }

        #[test]
        fn normalize_idempotent(x in quad(12)) {
            let again = QuadExt::new(x.a().clone(), x.b().clone(), x.d());
            prop_assert_eq!(again, x);
        }

        #[test]
        fn embedding_is_homomorphism(x in quad(3), y in quad(3)) {
            let ex = embed_numeric(&x);
            let ey = embed_numeric(&y);
            let s = embed_numeric(&(&x + &y));
            let p = embed_numeric(&(&x * &y));
            let scale = 1.0 + ex.norm() * ey.norm() + ex.norm() + ey.norm();
            prop_assert!((s - (ex + ey)).norm() <= 4.0 * f64::EPSILON * scale);
            prop_assert!((p - ex * ey).norm() <= 4.0 * f64::EPSILON * scale * 4.0);
        }

        #[test]
        fn recognition_inverts_embedding(n in -500i64..500, d in 1i64..200) {
            let r = rat(n, d);
            let z = embed_numeric(&QuadExt::from_rational(r.clone()));
            prop_assert_eq!(recognize_rational(z, 200, 1e-12), Some(r));
        }
    }
}
