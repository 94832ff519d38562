//! Exact rationals for rotation numbers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::Turn;

/// Exact rational `p/q` with `q > 0`, kept in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rational {
    p: BigInt,
    q: BigInt,
}

impl Rational {
    pub fn new(p: BigInt, q: BigInt) -> Result<Rational> {
        if q.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let g = p.gcd(&q);
        let (mut p, mut q) = if g.is_zero() { (p, q) } else { (p / &g, q / &g) };
        if q.is_negative() {
            p = -p;
            q = -q;
        }
        Ok(Rational { p, q })
    }

    pub fn from_ints(p: i64, q: i64) -> Result<Rational> {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    pub fn zero() -> Rational {
        Rational {
            p: BigInt::zero(),
            q: BigInt::from(1u8),
        }
    }

    pub fn numer(&self) -> &BigInt {
        &self.p
    }

    pub fn denom(&self) -> &BigInt {
        &self.q
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero()
    }

    pub fn to_turn(&self) -> Turn {
        Turn::from_ratio(&self.p, &self.q)
    }

    pub fn to_f64(&self) -> f64 {
        let (p, q) = (self.p.to_f64().unwrap_or(f64::NAN), self.q.to_f64().unwrap_or(f64::NAN));
        if p.is_finite() && q.is_finite() {
            p / q
        } else {
            f64::NAN
        }
    }

    /// `self + s/d`.
    pub fn add_ratio(&self, s: &BigInt, d: &BigInt) -> Result<Rational> {
        Rational::new(&self.p * d + s * &self.q, &self.q * d)
    }

    pub fn mul_int(&self, k: &BigInt) -> Result<Rational> {
        Rational::new(&self.p * k, self.q.clone())
    }

    /// The angle `j·p/q mod 1`, rounded exactly like [`Turn::from_ratio`].
    pub fn multiple_turn(&self, j: u64) -> Turn {
        match (self.q.to_u64(), self.p.mod_floor(&self.q).to_u64()) {
            (Some(q), Some(p)) => {
                let r = (p as u128 * j as u128 % q as u128) as u64;
                Turn::from_small_ratio(r, q)
            }
            _ => Turn::from_ratio(&(&self.p * BigInt::from(j)), &self.q),
        }
    }

    pub fn to_strings(&self) -> (String, String) {
        (self.p.to_string(), self.q.to_string())
    }

    pub fn parse(p: &str, q: &str) -> Result<Rational> {
        let p: BigInt = p
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad integer `{p}`")))?;
        let q: BigInt = q
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad integer `{q}`")))?;
        Rational::new(p, q)
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    p: String,
    q: String,
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalRepr {
            p: self.p.to_string(),
            q: self.q.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RationalRepr::deserialize(d)?;
        Rational::parse(&r.p, &r.q).map_err(serde::de::Error::custom)
    }
}
