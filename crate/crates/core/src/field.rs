//! Arithmetic in a prime field `F_p` with `p < 2^63`.
//!
//! Elements are plain residues ([`Fe`]); the modulus travels separately in a
//! [`PrimeField`] handle so polynomials and programs can carry it around
//! without every coefficient paying for it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `2^62 - 57`, the largest prime below `2^62`.
pub const DEFAULT_PRIME: u64 = 4_611_686_018_427_387_847;

/// A residue in `0..p`. Only meaningful together with its [`PrimeField`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    p: u64,
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField { p: DEFAULT_PRIME }
    }
}

impl TryFrom<u64> for PrimeField {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        PrimeField::new(p)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.p
    }
}

impl PrimeField {
    /// Checks primality once; every later operation trusts it.
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 63 {
            return Err(Error::Validation(format!("modulus {p} must be below 2^63")));
        }
        if !primal_check::miller_rabin(p) {
            return Err(Error::Validation(format!("modulus {p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(self) -> u64 {
        self.p
    }

    pub fn elem(self, v: u64) -> Fe {
        Fe(v % self.p)
    }

    pub fn from_i64(self, v: i64) -> Fe {
        let r = (v as i128).rem_euclid(self.p as i128);
        Fe(r as u64)
    }

    /// The representative of `a` in `(-p/2, p/2]`.
    pub fn centered(self, a: Fe) -> i128 {
        if a.0 > self.p / 2 {
            a.0 as i128 - self.p as i128
        } else {
            a.0 as i128
        }
    }

    pub fn parse(self, s: &str) -> Result<Fe> {
        let s = s.trim();
        let (neg, digits) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let v = u128::from_str(digits).map_err(|e| Error::Parse(format!("coefficient {s:?}: {e}")))?;
        let r = Fe((v % self.p as u128) as u64);
        Ok(if neg { self.neg(r) } else { r })
    }

    pub fn add(self, a: Fe, b: Fe) -> Fe {
        let s = a.0 + b.0;
        Fe(if s >= self.p { s - self.p } else { s })
    }

    pub fn sub(self, a: Fe, b: Fe) -> Fe {
        if a.0 >= b.0 {
            Fe(a.0 - b.0)
        } else {
            Fe(a.0 + self.p - b.0)
        }
    }

    pub fn neg(self, a: Fe) -> Fe {
        if a.0 == 0 {
            a
        } else {
            Fe(self.p - a.0)
        }
    }

    pub fn mul(self, a: Fe, b: Fe) -> Fe {
        Fe(((a.0 as u128 * b.0 as u128) % self.p as u128) as u64)
    }

    pub fn pow(self, mut base: Fe, mut exp: u64) -> Fe {
        let mut acc = Fe::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }

    pub fn random<R: Rng + ?Sized>(self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(0..self.p))
    }

    pub fn random_nonzero<R: Rng + ?Sized>(self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(1..self.p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_prime_is_prime_and_large() {
        let f = PrimeField::default();
        assert!(f.modulus() > 1 << 61);
        assert!(PrimeField::new(DEFAULT_PRIME).is_ok());
    }

    #[test]
    fn rejects_composite_and_oversized() {
        assert!(PrimeField::new(15).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(u64::MAX - 58).is_err());
    }

    #[test]
    fn small_field_arithmetic() {
        let f = PrimeField::new(7).unwrap();
        assert_eq!(f.add(f.elem(5), f.elem(4)), f.elem(2));
        assert_eq!(f.sub(f.elem(2), f.elem(5)), f.elem(4));
        assert_eq!(f.mul(f.elem(3), f.elem(5)), f.elem(1));
        assert_eq!(f.inv(f.elem(3)), Some(f.elem(5)));
        assert_eq!(f.inv(Fe::ZERO), None);
        assert_eq!(f.from_i64(-1), f.elem(6));
        assert_eq!(f.centered(f.elem(6)), -1);
        assert_eq!(f.parse("-2").unwrap(), f.elem(5));
    }

    #[test]
    fn inverse_round_trips_in_default_field() {
        let f = PrimeField::default();
        for v in [1u64, 2, 3, 12345, DEFAULT_PRIME - 1] {
            let a = f.elem(v);
            assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
        }
    }
}
