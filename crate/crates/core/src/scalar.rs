//! Integer scalar abstraction.
//!
//! Every exact structure in the crate (ring elements, matrices, lattices) is
//! generic over the integer type holding its coefficients. `BigInt` is the
//! default used by the crate-root aliases and the CLI; fixed-width integers
//! work for small inputs and panic on overflow in debug builds.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

/// Exact signed integer usable as a coefficient type.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + Eq
    + Ord
    + Hash
    + Integer
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    fn from_u64_exact(v: u64) -> Self {
        Self::from_u64(v).expect("scalar type cannot represent u64 value")
    }

    fn from_i64_exact(v: i64) -> Self {
        Self::from_i64(v).expect("scalar type cannot represent i64 value")
    }

    /// Residue in `0..q`.
    fn mod_u64(&self, q: u64) -> u64 {
        let qq = Self::from_u64_exact(q);
        self.mod_floor(&qq)
            .to_u64()
            .expect("residue fits in u64")
    }

    /// Approximate `ln |self|`, robust for values far outside the f64 range.
    fn ln_abs(&self) -> f64 {
        if let Some(f) = self.to_f64() {
            if f.is_finite() && f != 0.0 {
                return f.abs().ln();
            }
        }
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        // Halve until representable; count the shifts.
        let mut v = self.abs();
        let two = Self::from_u64_exact(2);
        let mut shifts = 0u64;
        let big = Self::from_u64_exact(1u64 << 52);
        while v > big {
            v = v.div_floor(&two);
            shifts += 1;
        }
        v.to_f64().unwrap().ln() + shifts as f64 * std::f64::consts::LN_2
    }
}

impl<T> Scalar for T where
    T: Clone
        + Debug
        + Display
        + Eq
        + Ord
        + Hash
        + Integer
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// `a^e mod q` for word-sized moduli.
pub fn pow_mod(mut a: u64, mut e: u64, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    let mut acc = 1u64;
    a %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, q);
        }
        a = mul_mod(a, a, q);
        e >>= 1;
    }
    acc
}

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// Inverse of `a` modulo `q`, if it exists.
pub fn inv_mod(a: u64, q: u64) -> Option<u64> {
    if q == 1 {
        return Some(0);
    }
    let ext = (a as i128 % q as i128).extended_gcd(&(q as i128));
    if ext.gcd != 1 {
        return None;
    }
    Some(ext.x.rem_euclid(q as i128) as u64)
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

/// Distinct prime divisors in increasing order.
pub fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && prime_divisors(n) == [n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn modular_helpers() {
        assert_eq!(inv_mod(2, 3), Some(2));
        assert_eq!(inv_mod(2, 4), None);
        assert_eq!(pow_mod(2, 10, 1000), 24);
        assert_eq!(prime_divisors(360), vec![2, 3, 5]);
        assert!(is_prime(997));
        assert!(!is_prime(1));
    }

    #[test]
    fn ln_abs_handles_huge_values() {
        let big = num_traits::pow(BigInt::from(2), 5000);
        let got = big.ln_abs();
        assert!((got - 5000.0 * std::f64::consts::LN_2).abs() < 1e-6);
        assert_eq!((-7i64).mod_u64(5), 3);
    }
}
