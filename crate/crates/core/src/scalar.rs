//! Exact arithmetic in the real quadratic field Q(√d).
//!
//! A [`Scalar`] is `a + b√d` with `a`, `b` exact rationals and `d` a fixed
//! square-free positive integer. `d = 1` collapses to plain rationals and is
//! stored with `b = 0`. Sign and zero tests are exact, which is what the
//! isotropic-vector searches rely on.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct Scalar {
    pub a: BigRational,
    pub b: BigRational,
    /// Square-free radicand; 1 means the value is rational (then `b = 0`).
    pub d: u64,
}

pub fn is_square_free(d: u64) -> bool {
    if d == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= d {
        if d % (p * p) == 0 {
            return false;
        }
        p += 1;
    }
    true
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { a: BigRational::zero(), b: BigRational::zero(), d: 1 }
    }

    pub fn one() -> Self {
        Scalar { a: BigRational::one(), b: BigRational::zero(), d: 1 }
    }

    pub fn from_int(n: i64) -> Self {
        Scalar { a: BigRational::from_integer(BigInt::from(n)), b: BigRational::zero(), d: 1 }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar {
            a: BigRational::new(BigInt::from(num), BigInt::from(den)),
            b: BigRational::zero(),
            d: 1,
        }
    }

    pub fn rational(a: BigRational) -> Self {
        Scalar { a, b: BigRational::zero(), d: 1 }
    }

    pub fn new(a: BigRational, b: BigRational, d: u64) -> Result<Self> {
        if !is_square_free(d) {
            return Err(Error::Domain(format!("radicand {d} is not square-free")));
        }
        let mut s = Scalar { a, b, d };
        s.canonicalize();
        Ok(s)
    }

    /// `p/q + (p'/q')·√d`.
    pub fn quad(p: i64, q: i64, pp: i64, qq: i64, d: u64) -> Result<Self> {
        if q == 0 || qq == 0 {
            return Err(Error::Domain("zero denominator in scalar literal".into()));
        }
        Scalar::new(
            BigRational::new(BigInt::from(p), BigInt::from(q)),
            BigRational::new(BigInt::from(pp), BigInt::from(qq)),
            d,
        )
    }

    fn canonicalize(&mut self) {
        if self.d == 1 && !self.b.is_zero() {
            // √1 = 1: fold into the rational part.
            self.a = &self.a + &self.b;
            self.b = BigRational::zero();
        }
        if self.b.is_zero() {
            // A rational value carries no radicand.
            self.d = 1;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Common radicand for a binary operation; mixing two distinct
    /// irrational radicands is a domain error.
    pub fn join_radicand(&self, other: &Scalar) -> Result<u64> {
        if self.b.is_zero() {
            return Ok(if other.b.is_zero() { self.d.max(other.d) } else { other.d });
        }
        if other.b.is_zero() {
            return Ok(self.d);
        }
        if self.d == other.d {
            Ok(self.d)
        } else {
            Err(Error::Domain(format!("mixed radicands {} and {}", self.d, other.d)))
        }
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        let d = self.join_radicand(other)?;
        Scalar::new(&self.a + &other.a, &self.b + &other.b, d)
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        let d = self.join_radicand(other)?;
        Scalar::new(&self.a - &other.a, &self.b - &other.b, d)
    }

    pub fn neg(&self) -> Scalar {
        Scalar { a: -self.a.clone(), b: -self.b.clone(), d: self.d }
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        let d = self.join_radicand(other)?;
        let dd = BigRational::from_integer(BigInt::from(d));
        let a = &self.a * &other.a + (&self.b * &other.b) * &dd;
        let b = &self.a * &other.b + &self.b * &other.a;
        Scalar::new(a, b, d)
    }

    pub fn mul_rat(&self, r: &BigRational) -> Scalar {
        Scalar { a: &self.a * r, b: &self.b * r, d: self.d }
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        if other.is_zero() {
            return Err(Error::Domain("division by zero scalar".into()));
        }
        let d = self.join_radicand(other)?;
        let dd = BigRational::from_integer(BigInt::from(d));
        // 1/(c + e√d) = (c − e√d)/(c² − e²d); the norm is nonzero since √d
        // is irrational for square-free d > 1.
        let norm = &other.a * &other.a - (&other.b * &other.b) * &dd;
        if norm.is_zero() {
            return Err(Error::Domain("division by zero norm".into()));
        }
        let conj = Scalar { a: other.a.clone(), b: -other.b.clone(), d };
        let num = self.mul(&conj)?;
        Ok(Scalar { a: num.a / &norm, b: num.b / &norm, d })
    }

    /// Exact sign: -1, 0, or +1.
    pub fn signum(&self) -> i32 {
        if self.b.is_zero() {
            return rat_sign(&self.a);
        }
        if self.a.is_zero() {
            return rat_sign(&self.b);
        }
        let sa = rat_sign(&self.a);
        let sb = rat_sign(&self.b);
        if sa == sb {
            return sa;
        }
        // Opposite signs: the term with larger square magnitude wins.
        let dd = BigRational::from_integer(BigInt::from(self.d));
        let lhs = &self.a * &self.a;
        let rhs = (&self.b * &self.b) * &dd;
        match lhs.cmp(&rhs) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.signum() < 0 {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn cmp_exact(&self, other: &Scalar) -> Result<Ordering> {
        let diff = self.sub(other)?;
        Ok(match diff.signum() {
            s if s > 0 => Ordering::Greater,
            0 => Ordering::Equal,
            _ => Ordering::Less,
        })
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        if self.b.is_zero() {
            a
        } else {
            a + self.b.to_f64().unwrap_or(f64::NAN) * (self.d as f64).sqrt()
        }
    }

    /// Natural log of |self|, computed from big-integer parts so that values
    /// far outside the f64 range still give a finite log.
    pub fn log_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let f = self.to_f64();
        if f.is_finite() && f != 0.0 {
            return f.abs().ln();
        }
        // Fall back to log of the rational part alone (the value is
        // dominated by whichever part is huge).
        let la = rat_log_abs(&self.a);
        let lb = rat_log_abs(&self.b) + 0.5 * (self.d as f64).ln();
        la.max(lb)
    }
}

fn rat_sign(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

fn rat_log_abs(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    let num = r.numer();
    let den = r.denom();
    big_log_abs(num) - big_log_abs(den)
}

fn big_log_abs(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 52 {
        return n.to_f64().map(|x| x.abs().ln()).unwrap_or(f64::NEG_INFINITY);
    }
    let shift = bits - 52;
    let top: BigInt = n >> shift;
    top.to_f64().map(|x| x.abs().ln()).unwrap_or(0.0) + (shift as f64) * std::f64::consts::LN_2
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{} + {}·√{}", self.a, self.b, self.d)
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
