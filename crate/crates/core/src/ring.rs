//! Exact arithmetic in `B = Z[θ][1/m]` and its finite quotients `O/rO`.
//!
//! `O = Z[θ]` is given by a monic integer polynomial `f` of degree `d`; an
//! element of `B` is a coefficient vector in the power basis `1, θ, …, θ^(d−1)`
//! over a denominator `m^k`. Elements are kept in canonical form: the
//! denominator exponent is as small as possible, so equality is structural.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{gcd_u64, inv_mod, mul_mod, prime_divisors, Scalar};

/// `(Σ coeffs[i]·θ^i) / m^denom_exp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingElement<T> {
    coeffs: Vec<T>,
    denom_exp: u32,
}

impl<T: Scalar> RingElement<T> {
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn denom_exp(&self) -> u32 {
        self.denom_exp
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.denom_exp == 0
            && self.coeffs[0].is_one()
            && self.coeffs[1..].iter().all(Zero::is_zero)
    }
}

/// The ring `B = Z[θ][1/m]` with `θ` a root of `min_poly`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring<T> {
    min_poly: Vec<T>,
    modulus: u64,
    modulus_primes: Vec<u64>,
}

impl<T: Scalar> Ring<T> {
    /// `min_poly` lists coefficients low to high and must be monic of degree ≥ 1.
    pub fn new(min_poly: Vec<T>, inverted_modulus: u64) -> Result<Self> {
        if min_poly.len() < 2 {
            return Err(Error::InvalidInput("minimal polynomial must have degree >= 1".into()));
        }
        if !min_poly.last().unwrap().is_one() {
            return Err(Error::InvalidInput("minimal polynomial must be monic".into()));
        }
        if inverted_modulus == 0 {
            return Err(Error::InvalidInput("inverted modulus must be positive".into()));
        }
        Ok(Ring {
            min_poly,
            modulus: inverted_modulus,
            modulus_primes: prime_divisors(inverted_modulus),
        })
    }

    /// `Z[1/m]`, with `θ = 0`.
    pub fn rationals_localized(m: u64) -> Self {
        Ring::new(vec![T::zero(), T::one()], m).expect("valid ring")
    }

    /// `Z[i][1/m]`.
    pub fn gaussian(m: u64) -> Self {
        Ring::new(vec![T::one(), T::zero(), T::one()], m).expect("valid ring")
    }

    pub fn degree(&self) -> usize {
        self.min_poly.len() - 1
    }

    pub fn min_poly(&self) -> &[T] {
        &self.min_poly
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn modulus_primes(&self) -> &[u64] {
        &self.modulus_primes
    }

    fn m(&self) -> T {
        T::from_u64_exact(self.modulus)
    }

    /// Build an element from raw parts, normalizing to canonical form.
    pub fn element(&self, mut coeffs: Vec<T>, denom_exp: u32) -> Result<RingElement<T>> {
        let d = self.degree();
        if coeffs.len() > d {
            if coeffs[d..].iter().any(|c| !c.is_zero()) {
                return Err(Error::InvalidInput(format!(
                    "element has {} coefficients but the ring has degree {d}",
                    coeffs.len()
                )));
            }
            coeffs.truncate(d);
        }
        coeffs.resize(d, T::zero());
        if self.modulus == 1 && denom_exp > 0 {
            return Err(Error::InvalidInput("denominator exponent must be 0 when m = 1".into()));
        }
        Ok(self.normalize(RingElement { coeffs, denom_exp }))
    }

    pub fn zero(&self) -> RingElement<T> {
        RingElement { coeffs: vec![T::zero(); self.degree()], denom_exp: 0 }
    }

    pub fn one(&self) -> RingElement<T> {
        self.int(1)
    }

    pub fn int(&self, v: i64) -> RingElement<T> {
        self.scalar(T::from_i64_exact(v))
    }

    pub fn scalar(&self, v: T) -> RingElement<T> {
        let mut coeffs = vec![T::zero(); self.degree()];
        coeffs[0] = v;
        RingElement { coeffs, denom_exp: 0 }
    }

    /// `a / m^k` for an integer `a`.
    pub fn fraction(&self, a: i64, k: u32) -> RingElement<T> {
        let mut e = self.int(a);
        if self.modulus > 1 {
            e.denom_exp = k;
        }
        self.normalize(e)
    }

    pub fn theta(&self) -> RingElement<T> {
        if self.degree() == 1 {
            return self.scalar(-self.min_poly[0].clone());
        }
        let mut coeffs = vec![T::zero(); self.degree()];
        coeffs[1] = T::one();
        RingElement { coeffs, denom_exp: 0 }
    }

    /// Strip common factors of `m` from the numerator.
    pub fn normalize(&self, mut e: RingElement<T>) -> RingElement<T> {
        if e.coeffs.iter().all(Zero::is_zero) {
            e.denom_exp = 0;
            return e;
        }
        if self.modulus == 1 {
            e.denom_exp = 0;
            return e;
        }
        let m = self.m();
        while e.denom_exp > 0 && e.coeffs.iter().all(|c| c.is_multiple_of(&m)) {
            for c in e.coeffs.iter_mut() {
                *c = c.div_floor(&m);
            }
            e.denom_exp -= 1;
        }
        e
    }

    fn numerator_at(&self, e: &RingElement<T>, k: u32) -> Vec<T> {
        debug_assert!(k >= e.denom_exp);
        let scale = num_traits::pow(self.m(), (k - e.denom_exp) as usize);
        e.coeffs.iter().map(|c| c.clone() * scale.clone()).collect()
    }

    pub fn add(&self, a: &RingElement<T>, b: &RingElement<T>) -> RingElement<T> {
        let k = a.denom_exp.max(b.denom_exp);
        let na = self.numerator_at(a, k);
        let nb = self.numerator_at(b, k);
        let coeffs = na.into_iter().zip(nb).map(|(x, y)| x + y).collect();
        self.normalize(RingElement { coeffs, denom_exp: k })
    }

    pub fn neg(&self, a: &RingElement<T>) -> RingElement<T> {
        RingElement {
            coeffs: a.coeffs.iter().map(|c| -c.clone()).collect(),
            denom_exp: a.denom_exp,
        }
    }

    pub fn sub(&self, a: &RingElement<T>, b: &RingElement<T>) -> RingElement<T> {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &RingElement<T>, b: &RingElement<T>) -> RingElement<T> {
        let coeffs = self.poly_mul(&a.coeffs, &b.coeffs);
        self.normalize(RingElement { coeffs, denom_exp: a.denom_exp + b.denom_exp })
    }

    /// Multiply by a rational integer.
    pub fn mul_int(&self, a: &RingElement<T>, q: &T) -> RingElement<T> {
        let coeffs = a.coeffs.iter().map(|c| c.clone() * q.clone()).collect();
        self.normalize(RingElement { coeffs, denom_exp: a.denom_exp })
    }

    fn poly_mul(&self, a: &[T], b: &[T]) -> Vec<T> {
        let d = self.degree();
        let mut prod = vec![T::zero(); 2 * d - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                prod[i + j] = prod[i + j].clone() + x.clone() * y.clone();
            }
        }
        // θ^d = −Σ f_i θ^i
        for top in (d..prod.len()).rev() {
            let c = std::mem::replace(&mut prod[top], T::zero());
            if c.is_zero() {
                continue;
            }
            for i in 0..d {
                prod[top - d + i] = prod[top - d + i].clone() - c.clone() * self.min_poly[i].clone();
            }
        }
        prod.truncate(d);
        prod
    }

    /// Integer matrix of multiplication by the numerator of `a`; column `j` is `a·θ^j`.
    fn mult_matrix(&self, a: &[T]) -> Vec<Vec<T>> {
        let d = self.degree();
        let mut cols = Vec::with_capacity(d);
        let theta = self.theta().coeffs;
        let mut basis = self.one().coeffs;
        for _ in 0..d {
            cols.push(self.poly_mul(a, &basis));
            basis = self.poly_mul(&basis, &theta);
        }
        // transpose columns into rows
        (0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect()
    }

    /// Exact field norm as `(numerator, power of m in the denominator)`.
    pub fn norm(&self, a: &RingElement<T>) -> (T, u32) {
        let det = bareiss_det(self.mult_matrix(&a.coeffs));
        (det, a.denom_exp * self.degree() as u32)
    }

    /// Exact inverse in `B`; fails when the inverse in the fraction field
    /// has a denominator with a prime not dividing `m`.
    pub fn inv(&self, a: &RingElement<T>) -> Result<RingElement<T>> {
        if a.is_zero() {
            return Err(Error::NotAUnit);
        }
        let mat = self.mult_matrix(&a.coeffs);
        let det = bareiss_det(mat.clone());
        let d = self.degree();
        // Cramer's rule for mat·y = e_0.
        let mut nums = Vec::with_capacity(d);
        for i in 0..d {
            let mut mi = mat.clone();
            for (row, r) in mi.iter_mut().enumerate() {
                r[i] = if row == 0 { T::one() } else { T::zero() };
            }
            nums.push(bareiss_det(mi));
        }
        let (mut nums, denom) = if det.is_negative() {
            (nums.into_iter().map(|x| -x).collect::<Vec<_>>(), -det)
        } else {
            (nums, det)
        };
        let g = nums.iter().fold(denom.clone(), |g, x| g.gcd(x));
        nums.iter_mut().for_each(|x| *x = x.div_floor(&g));
        let denom = denom.div_floor(&g);
        let (scale, j) = self.absorb_denominator(&denom).ok_or(Error::NotAUnit)?;
        let coeffs = nums.into_iter().map(|x| x * scale.clone()).collect();
        let inv_num = RingElement { coeffs, denom_exp: j };
        // (c/m^k)^{-1} = m^k · c^{-1}
        let mk = num_traits::pow(self.m(), a.denom_exp as usize);
        Ok(self.mul_int(&inv_num, &mk))
    }

    /// Returns `(m^j / q, j)` when `q > 0` divides some power of `m`.
    fn absorb_denominator(&self, q: &T) -> Option<(T, u32)> {
        if q.is_one() {
            return Some((T::one(), 0));
        }
        if self.modulus == 1 {
            return None;
        }
        let m = self.m();
        let mut rest = q.clone();
        for &p in &self.modulus_primes {
            let pp = T::from_u64_exact(p);
            while rest.is_multiple_of(&pp) {
                rest = rest.div_floor(&pp);
            }
        }
        if !rest.is_one() {
            return None;
        }
        let mut j = 0u32;
        let mut mj = T::one();
        while !mj.is_multiple_of(q) {
            mj = mj * m.clone();
            j += 1;
        }
        Some((mj.div_floor(q), j))
    }

    /// `e / q` if it lies in `B`.
    pub fn div_int(&self, e: &RingElement<T>, q: &T) -> Option<RingElement<T>> {
        if q.is_zero() {
            return None;
        }
        if e.is_zero() {
            return Some(self.zero());
        }
        let (mut coeffs, q) = if q.is_negative() {
            (e.coeffs.iter().map(|c| -c.clone()).collect::<Vec<_>>(), -q.clone())
        } else {
            (e.coeffs.clone(), q.clone())
        };
        let g = coeffs.iter().fold(q.clone(), |g, c| g.gcd(c));
        coeffs.iter_mut().for_each(|c| *c = c.div_floor(&g));
        let rest = q.div_floor(&g);
        let (scale, j) = self.absorb_denominator(&rest)?;
        let coeffs = coeffs.into_iter().map(|c| c * scale.clone()).collect();
        Some(self.normalize(RingElement { coeffs, denom_exp: e.denom_exp + j }))
    }

    pub fn pow(&self, a: &RingElement<T>, e: i64) -> Result<RingElement<T>> {
        let base = if e < 0 { self.inv(a)? } else { a.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = self.one();
        let mut sq = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &sq);
            }
            k >>= 1;
            if k > 0 {
                sq = self.mul(&sq, &sq);
            }
        }
        Ok(acc)
    }

    pub fn check_level(&self, q: u64) -> Result<()> {
        if q == 0 {
            return Err(Error::InvalidInput("level must be positive".into()));
        }
        if gcd_u64(q, self.modulus) != 1 {
            return Err(Error::LevelNotCoprime { level: q, modulus: self.modulus });
        }
        Ok(())
    }

    pub fn is_coprime_level(&self, q: u64) -> bool {
        q > 0 && gcd_u64(q, self.modulus) == 1
    }

    /// Image of `e` in `O/rO` as a coefficient vector mod `r`.
    pub fn reduce_mod_level(&self, e: &RingElement<T>, r: u64) -> Result<Vec<u64>> {
        self.check_level(r)?;
        Ok(self.reduce_unchecked(e, r))
    }

    pub(crate) fn reduce_unchecked(&self, e: &RingElement<T>, r: u64) -> Vec<u64> {
        if r == 1 {
            return vec![0; self.degree()];
        }
        let minv = inv_mod(self.modulus % r, r).expect("level coprime to m");
        let scale = crate::scalar::pow_mod(minv, e.denom_exp as u64, r);
        e.coeffs.iter().map(|c| mul_mod(c.mod_u64(r), scale, r)).collect()
    }

    /// `e ∈ qB`.
    pub fn divides_level(&self, e: &RingElement<T>, q: u64) -> Result<bool> {
        Ok(self.reduce_mod_level(e, q)?.iter().all(|&c| c == 0))
    }

    pub fn residue_ring(&self, r: u64) -> Result<ResidueRing> {
        self.check_level(r)?;
        if r == 1 {
            return Err(Error::DegenerateLevel(1));
        }
        let d = self.degree();
        let reduction = self.min_poly[..d].iter().map(|c| (r - c.mod_u64(r)) % r).collect();
        Ok(ResidueRing { r, d, reduction })
    }
}

/// Fraction-free determinant.
pub(crate) fn bareiss_det<T: Scalar>(mut a: Vec<Vec<T>>) -> T {
    let n = a.len();
    if n == 0 {
        return T::one();
    }
    let mut sign = T::one();
    let mut prev = T::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return T::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i][j].clone() * a[k][k].clone() - a[i][k].clone() * a[k][j].clone();
                a[i][j] = v.div_floor(&prev);
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// The finite ring `O/rO`, elements as coefficient vectors mod `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueRing {
    r: u64,
    d: usize,
    /// `θ^d ≡ Σ reduction[i]·θ^i`.
    reduction: Vec<u64>,
}

impl ResidueRing {
    pub fn level(&self) -> u64 {
        self.r
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn cardinality(&self) -> u128 {
        (self.r as u128).pow(self.d as u32)
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.d]
    }

    pub fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.d];
        v[0] = 1 % self.r;
        v
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.r).collect()
    }

    pub fn add_into(&self, acc: &mut [u64], b: &[u64]) {
        for (x, y) in acc.iter_mut().zip(b) {
            *x = (*x + y) % self.r;
        }
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.d;
        let r = self.r;
        if d == 1 {
            return vec![mul_mod(a[0], b[0], r)];
        }
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + mul_mod(x, y, r)) % r;
            }
        }
        for top in (d..prod.len()).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            for i in 0..d {
                prod[top - d + i] = (prod[top - d + i] + mul_mod(c, self.reduction[i], r)) % r;
            }
        }
        prod.truncate(d);
        prod
    }

    fn mult_matrix_i128(&self, a: &[u64]) -> Vec<Vec<i128>> {
        let d = self.d;
        let mut cols = Vec::with_capacity(d);
        let mut basis = self.one();
        let theta = {
            let mut t = vec![0; d];
            if d > 1 {
                t[1] = 1;
            } else {
                t[0] = self.reduction[0];
            }
            t
        };
        for _ in 0..d {
            cols.push(self.mul(a, &basis));
            basis = self.mul(&basis, &theta);
        }
        (0..d).map(|i| (0..d).map(|j| cols[j][i] as i128).collect()).collect()
    }

    /// `u` is a unit iff multiplication by `u` is bijective, iff its determinant is a unit mod `r`.
    pub fn is_unit(&self, a: &[u64]) -> bool {
        let det = bareiss_det(self.mult_matrix_i128(a));
        gcd_u64(det.rem_euclid(self.r as i128) as u64, self.r) == 1
    }

    pub fn inverse(&self, a: &[u64]) -> Option<Vec<u64>> {
        let mat = self.mult_matrix_i128(a);
        let det = bareiss_det(mat.clone());
        let det_inv = inv_mod(det.rem_euclid(self.r as i128) as u64, self.r)?;
        let d = self.d;
        let mut out = Vec::with_capacity(d);
        for i in 0..d {
            let mut mi = mat.clone();
            for (row, r) in mi.iter_mut().enumerate() {
                r[i] = if row == 0 { 1 } else { 0 };
            }
            let num = bareiss_det(mi).rem_euclid(self.r as i128) as u64;
            out.push(mul_mod(num, det_inv, self.r));
        }
        Some(out)
    }

    /// All `r^d` residues in lexicographic order of coefficient vectors.
    pub fn elements(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let total = self.cardinality();
        let r = self.r;
        let d = self.d;
        (0..total).map(move |mut idx| {
            let mut v = vec![0u64; d];
            for c in v.iter_mut() {
                *c = (idx % r as u128) as u64;
                idx /= r as u128;
            }
            v
        })
    }

    pub fn units(&self) -> Vec<Vec<u64>> {
        self.elements().filter(|e| self.is_unit(e)).collect()
    }
}
