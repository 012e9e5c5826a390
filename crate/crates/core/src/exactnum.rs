//! Exact scalars: rationals with a machine-word fast path, p-adic valuations
//! and residues in prime fields.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("{value} has negative {prime}-adic valuation")]
    NotPAdmissible { value: String, prime: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("residues modulo different primes ({0} and {1})")]
    PrimeMismatch(u64, u64),
    #[error("cannot parse scalar {0:?}")]
    Parse(String),
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_prime(p: u64) -> Result<(), NumError> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(NumError::NotPrime(p))
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

const SMALL_MAX: i128 = i64::MAX as i128;

/// Exact rational number in lowest terms with positive denominator.
///
/// Values whose numerator and denominator fit in an `i64` are kept inline;
/// everything else falls back to a heap-allocated big rational.
#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Clone)]
enum Repr {
    Small(i64, i64),
    Big(Box<BigRational>),
}

impl Rational {
    pub fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }

    pub fn from_int(n: i64) -> Self {
        if n == i64::MIN {
            return Self::from_big(BigRational::from_integer(BigInt::from(n)));
        }
        Rational(Repr::Small(n, 1))
    }

    /// `num/den`, reduced. Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i128(num as i128, den as i128)
    }

    pub fn try_new(num: i64, den: i64) -> Result<Self, NumError> {
        if den == 0 {
            return Err(NumError::DivisionByZero);
        }
        Ok(Self::from_i128(num as i128, den as i128))
    }

    fn from_i128(mut num: i128, mut den: i128) -> Self {
        debug_assert!(den != 0);
        if num == 0 {
            return Self::zero();
        }
        if den < 0 {
            if num == i128::MIN || den == i128::MIN {
                return Self::from_big(BigRational::new(BigInt::from(num), BigInt::from(den)));
            }
            num = -num;
            den = -den;
        }
        let g = gcd_u128(num.unsigned_abs(), den as u128);
        if g > 1 {
            num /= g as i128;
            den /= g as i128;
        }
        if num.abs() <= SMALL_MAX && den <= SMALL_MAX {
            Rational(Repr::Small(num as i64, den as i64))
        } else {
            Rational(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(num),
                BigInt::from(den),
            ))))
        }
    }

    /// Canonicalizes a reduced big rational, demoting it when it fits.
    pub fn from_big(r: BigRational) -> Self {
        let r = if r.denom().is_negative() || !r.numer().gcd(r.denom()).is_one() {
            BigRational::new(r.numer().clone(), r.denom().clone())
        } else {
            r
        };
        if r.numer().is_zero() {
            return Self::zero();
        }
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            if n != i64::MIN {
                return Rational(Repr::Small(n, d));
            }
        }
        Rational(Repr::Big(Box::new(r)))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_big(&self) -> bool {
        matches!(self.0, Repr::Big(_))
    }

    pub fn recip(&self) -> Result<Self, NumError> {
        match &self.0 {
            Repr::Small(0, _) => Err(NumError::DivisionByZero),
            Repr::Small(n, d) => Ok(Self::from_i128(*d as i128, *n as i128)),
            Repr::Big(b) => Ok(Self::from_big(b.recip())),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Exponent of `p` in this rational; `None` stands for the zero value.
    fn valuation_raw(&self, p: u64) -> Option<i64> {
        match &self.0 {
            Repr::Small(0, _) => None,
            Repr::Small(n, d) => Some(int_val(n.unsigned_abs(), p) - int_val(*d as u64, p)),
            Repr::Big(b) => Some(big_val(b.numer(), p) - big_val(b.denom(), p)),
        }
    }

    /// Residue modulo `p` assuming the denominator is prime to `p`.
    fn residue_raw(&self, p: u64) -> Option<u64> {
        let (n, d) = match &self.0 {
            Repr::Small(n, d) => (
                (*n as i128).rem_euclid(p as i128) as u64,
                (*d as i128).rem_euclid(p as i128) as u64,
            ),
            Repr::Big(b) => {
                let pb = BigInt::from(p);
                (
                    b.numer().mod_floor(&pb).to_u64().unwrap(),
                    b.denom().mod_floor(&pb).to_u64().unwrap(),
                )
            }
        };
        let inv = inv_mod(d, p)?;
        Some(mul_mod(n, inv, p))
    }
}

fn int_val(mut n: u64, p: u64) -> i64 {
    let mut k = 0;
    while n != 0 && n.is_multiple_of(p) {
        n /= p;
        k += 1;
    }
    k
}

fn big_val(n: &BigInt, p: u64) -> i64 {
    let pb = BigInt::from(p);
    let mut n = n.abs();
    let mut k = 0;
    while !n.is_zero() && (&n % &pb).is_zero() {
        n /= &pb;
        k += 1;
    }
    k
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> Option<u64> {
    if a.is_multiple_of(p) {
        None
    } else {
        Some(pow_mod(a, p - 2, p))
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::zero()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl<'a> Add<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    Rational::from_i128(*a as i128 + *c as i128, *b as i128)
                } else {
                    Rational::from_i128(
                        *a as i128 * *d as i128 + *c as i128 * *b as i128,
                        *b as i128 * *d as i128,
                    )
                }
            }
            _ => Rational::from_big(self.to_big() + rhs.to_big()),
        }
    }
}

impl<'a> Mul<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                Rational::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => Rational::from_big(self.to_big() * rhs.to_big()),
        }
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(-*n, *d)),
            Repr::Big(b) => Rational::from_big(-(**b).clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

impl<'a> Sub<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        self + &(-rhs)
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        &self + &rhs
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        &self - &rhs
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        &self * &rhs
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = &*self + rhs;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        *self = &*self * rhs;
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = NumError;

    /// Accepts `n/d` and plain integers.
    fn from_str(s: &str) -> Result<Self, NumError> {
        let bad = || NumError::Parse(s.to_string());
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(Rational::from_big(BigRational::new(n, d)))
    }
}

impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A p-adic valuation; `Infinite` only for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PValuation {
    Finite(i64),
    Infinite,
}

impl PValuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            PValuation::Finite(k) => Some(k),
            PValuation::Infinite => None,
        }
    }

    pub fn is_nonnegative(self) -> bool {
        match self {
            PValuation::Finite(k) => k >= 0,
            PValuation::Infinite => true,
        }
    }
}

impl PartialOrd for PValuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PValuation {
    fn cmp(&self, other: &Self) -> Ordering {
        use PValuation::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => Ordering::Less,
            (Infinite, Finite(_)) => Ordering::Greater,
            (Infinite, Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for PValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PValuation::Finite(k) => write!(f, "{k}"),
            PValuation::Infinite => write!(f, "inf"),
        }
    }
}

pub fn pval(q: &Rational, p: u64) -> Result<PValuation, NumError> {
    check_prime(p)?;
    Ok(match q.valuation_raw(p) {
        Some(k) => PValuation::Finite(k),
        None => PValuation::Infinite,
    })
}

pub fn reduce_mod_p(q: &Rational, p: u64) -> Result<FpScalar, NumError> {
    check_prime(p)?;
    match q.residue_raw(p) {
        Some(r) => Ok(FpScalar { residue: r, prime: p }),
        None => Err(NumError::NotPAdmissible { value: q.to_string(), prime: p }),
    }
}

/// Element of the prime field with `prime` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpScalar {
    residue: u64,
    prime: u64,
}

impl FpScalar {
    pub fn new(n: i64, p: u64) -> Result<Self, NumError> {
        check_prime(p)?;
        Ok(Self::new_unchecked(n, p))
    }

    pub(crate) fn new_unchecked(n: i64, p: u64) -> Self {
        FpScalar { residue: (n as i128).rem_euclid(p as i128) as u64, prime: p }
    }

    pub fn residue(self) -> u64 {
        self.residue
    }

    pub fn prime(self) -> u64 {
        self.prime
    }

    pub fn zero(p: u64) -> Self {
        FpScalar { residue: 0, prime: p }
    }

    pub fn one(p: u64) -> Self {
        FpScalar { residue: 1 % p, prime: p }
    }

    pub fn is_zero(self) -> bool {
        self.residue == 0
    }

    fn same(self, o: Self) -> Result<(), NumError> {
        if self.prime == o.prime {
            Ok(())
        } else {
            Err(NumError::PrimeMismatch(self.prime, o.prime))
        }
    }

    pub fn checked_add(self, o: Self) -> Result<Self, NumError> {
        self.same(o)?;
        Ok(FpScalar { residue: (self.residue + o.residue) % self.prime, prime: self.prime })
    }

    pub fn checked_mul(self, o: Self) -> Result<Self, NumError> {
        self.same(o)?;
        Ok(FpScalar { residue: mul_mod(self.residue, o.residue, self.prime), prime: self.prime })
    }

    pub fn checked_div(self, o: Self) -> Result<Self, NumError> {
        self.same(o)?;
        self.checked_mul(o.inv()?)
    }

    pub fn inv(self) -> Result<Self, NumError> {
        let r = inv_mod(self.residue, self.prime).ok_or(NumError::DivisionByZero)?;
        Ok(FpScalar { residue: r, prime: self.prime })
    }

    /// Smallest nonnegative integer representative, as a rational.
    pub fn lift(self) -> Rational {
        Rational::from_int(self.residue as i64)
    }
}

impl Add for FpScalar {
    type Output = FpScalar;
    fn add(self, o: FpScalar) -> FpScalar {
        self.checked_add(o).expect("prime mismatch")
    }
}

impl Sub for FpScalar {
    type Output = FpScalar;
    fn sub(self, o: FpScalar) -> FpScalar {
        self + (-o)
    }
}

impl Mul for FpScalar {
    type Output = FpScalar;
    fn mul(self, o: FpScalar) -> FpScalar {
        self.checked_mul(o).expect("prime mismatch")
    }
}

impl Neg for FpScalar {
    type Output = FpScalar;
    fn neg(self) -> FpScalar {
        FpScalar { residue: (self.prime - self.residue) % self.prime, prime: self.prime }
    }
}

impl fmt::Display for FpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}
