//! Finite matrix groups over `O/rO`.
//!
//! Reduced matrices are flat vectors: entry `(i, j)` occupies the `d`
//! coordinates starting at `(i·n + j)·d`.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::matrix::{GroupWord, Matrix};
use crate::ring::{ResidueRing, Ring};
use crate::scalar::{lcm_u64, Scalar};
use crate::units::RingSpec;

pub const DEFAULT_CLOSURE_BUDGET: usize = 1_000_000;

pub type ResidueMatrix = Vec<u64>;

/// `M_n(O/rO)`.
#[derive(Clone, Debug)]
pub struct ResidueMatrices {
    rr: ResidueRing,
    n: usize,
}

impl ResidueMatrices {
    pub fn new<T: Scalar>(ring: &Ring<T>, n: usize, r: u64) -> Result<Self> {
        ring.check_level(r)?;
        Ok(ResidueMatrices { rr: ring.residue_ring(r)?, n })
    }

    pub fn level(&self) -> u64 {
        self.rr.level()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn residue_ring(&self) -> &ResidueRing {
        &self.rr
    }

    fn d(&self) -> usize {
        self.rr.degree()
    }

    pub fn entry<'a>(&self, a: &'a [u64], i: usize, j: usize) -> &'a [u64] {
        let d = self.d();
        let o = (i * self.n + j) * d;
        &a[o..o + d]
    }

    pub fn identity(&self) -> ResidueMatrix {
        let d = self.d();
        let one = self.rr.one();
        let mut out = vec![0; self.n * self.n * d];
        for i in 0..self.n {
            let o = (i * self.n + i) * d;
            out[o..o + d].copy_from_slice(&one);
        }
        out
    }

    pub fn reduce<T: Scalar>(&self, ring: &Ring<T>, a: &Matrix<T>) -> Result<ResidueMatrix> {
        if a.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: a.dim() });
        }
        Ok(a.entries().iter().flat_map(|e| ring.reduce_unchecked(e, self.level())).collect())
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> ResidueMatrix {
        let (n, d) = (self.n, self.d());
        let mut out = vec![0; n * n * d];
        for i in 0..n {
            for k in 0..n {
                let x = self.entry(a, i, k);
                if x.iter().all(|&c| c == 0) {
                    continue;
                }
                for j in 0..n {
                    let y = self.entry(b, k, j);
                    if y.iter().all(|&c| c == 0) {
                        continue;
                    }
                    let p = self.rr.mul(x, y);
                    let o = (i * n + j) * d;
                    self.rr.add_into(&mut out[o..o + d], &p);
                }
            }
        }
        out
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> ResidueMatrix {
        let mut acc = self.identity();
        let mut base = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn is_identity(&self, a: &[u64]) -> bool {
        a == self.identity().as_slice()
    }

    /// Least `k ≥ 1` with `a^k = I`; `None` past `cap` steps.
    pub fn order_capped(&self, a: &[u64], cap: u64) -> Option<u64> {
        let id = self.identity();
        let mut cur = a.to_vec();
        for k in 1..=cap {
            if cur == id {
                return Some(k);
            }
            cur = self.mul(&cur, a);
        }
        None
    }

    /// `element_order`. The caller guarantees `a` is invertible.
    pub fn order(&self, a: &[u64]) -> u64 {
        self.order_capped(a, u64::MAX).expect("invertible elements have finite order")
    }

    pub fn is_invertible<T: Scalar>(&self, ring: &Ring<T>, a: &Matrix<T>) -> bool {
        let det = ring.reduce_unchecked(&a.determinant(ring), self.level());
        self.rr.is_unit(&det)
    }

    /// Smallest `k ≥ 1` with `a^k ∈ sub` (sub a subgroup).
    pub fn relative_order(&self, a: &[u64], sub: &FiniteClosure) -> u64 {
        let mut cur = a.to_vec();
        let mut k = 1;
        while !sub.contains(&cur) {
            cur = self.mul(&cur, a);
            k += 1;
        }
        k
    }

    pub fn inverse(&self, a: &[u64]) -> ResidueMatrix {
        let o = self.order(a);
        self.pow(a, o - 1)
    }
}

/// `element_order` of a matrix over `B` reduced mod `r`.
pub fn element_order<T: Scalar>(ring: &Ring<T>, a: &Matrix<T>, r: u64) -> Result<u64> {
    let mr = ResidueMatrices::new(ring, a.dim(), r)?;
    if !mr.is_invertible(ring, a) {
        return Err(Error::NonInvertible);
    }
    Ok(mr.order(&mr.reduce(ring, a)?))
}

/// A subgroup of `GL_n(O/rO)` enumerated by breadth-first search, with the
/// search tree recording a word for every element.
#[derive(Clone, Debug)]
pub struct FiniteClosure {
    arith: ResidueMatrices,
    generators: Vec<ResidueMatrix>,
    elements: Vec<ResidueMatrix>,
    index: HashMap<ResidueMatrix, usize>,
    /// `(parent element, generator)`; the root has no parent.
    parent: Vec<Option<(usize, usize)>>,
    budget: usize,
}

impl FiniteClosure {
    pub fn trivial(arith: ResidueMatrices, budget: usize) -> Self {
        let id = arith.identity();
        let mut index = HashMap::new();
        index.insert(id.clone(), 0);
        FiniteClosure { arith, generators: vec![], elements: vec![id], index, parent: vec![None], budget }
    }

    pub fn generate(arith: ResidueMatrices, gens: Vec<ResidueMatrix>, budget: usize) -> Result<Self> {
        let mut c = FiniteClosure::trivial(arith, budget);
        for g in gens {
            c.adjoin(g)?;
        }
        Ok(c)
    }

    pub fn arith(&self) -> &ResidueMatrices {
        &self.arith
    }

    pub fn level(&self) -> u64 {
        self.arith.level()
    }

    pub fn generators(&self) -> &[ResidueMatrix] {
        &self.generators
    }

    pub fn elements(&self) -> &[ResidueMatrix] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, a: &[u64]) -> bool {
        self.index.contains_key(a)
    }

    /// Adds a generator and extends the closure. Generator indices follow
    /// insertion order, including generators that were already members.
    pub fn adjoin(&mut self, g: ResidueMatrix) -> Result<()> {
        let gi = self.generators.len();
        self.generators.push(g);
        let mut queue: VecDeque<(usize, Option<usize>)> = (0..self.elements.len()).map(|i| (i, Some(gi))).collect();
        while let Some((i, only)) = queue.pop_front() {
            let range: Vec<usize> = match only {
                Some(k) => vec![k],
                None => (0..self.generators.len()).collect(),
            };
            for k in range {
                let p = self.arith.mul(&self.elements[i], &self.generators[k]);
                if self.index.contains_key(&p) {
                    continue;
                }
                if self.elements.len() >= self.budget {
                    return Err(Error::ClosureBudgetExceeded { partial: self.elements.len(), budget: self.budget });
                }
                let idx = self.elements.len();
                self.index.insert(p.clone(), idx);
                self.elements.push(p);
                self.parent.push(Some((i, k)));
                queue.push_back((idx, None));
            }
        }
        Ok(())
    }

    /// Element index to a positive word in the generators.
    pub fn word_of_index(&self, mut i: usize) -> GroupWord {
        let mut rev = Vec::new();
        while let Some((p, g)) = self.parent[i] {
            rev.push(g);
            i = p;
        }
        GroupWord::from_syllables(rev.into_iter().rev().map(|g| (g, 1)))
    }

    pub fn word(&self, a: &[u64]) -> Option<GroupWord> {
        self.index.get(a).map(|&i| self.word_of_index(i))
    }

    /// Normal closure of this subgroup under conjugation by `conjugators`.
    pub fn normalize_under(&mut self, conjugators: &[ResidueMatrix]) -> Result<()> {
        let invs: Vec<ResidueMatrix> = conjugators.iter().map(|t| self.arith.inverse(t)).collect();
        loop {
            let mut missing = None;
            'scan: for g in &self.generators {
                for (t, ti) in conjugators.iter().zip(&invs) {
                    let c = self.arith.mul(&self.arith.mul(ti, g), t);
                    if !self.contains(&c) {
                        missing = Some(c);
                        break 'scan;
                    }
                }
            }
            match missing {
                Some(c) => self.adjoin(c)?,
                None => return Ok(()),
            }
        }
    }

    /// Exponent of `self / sub` as a set of cosets: lcm of relative orders.
    pub fn exponent_over(&self, sub: &FiniteClosure) -> u64 {
        self.elements.iter().fold(1, |acc, e| lcm_u64(acc, self.arith.relative_order(e, sub)))
    }
}

/// `closure(gens, r)`.
pub fn closure<T: Scalar>(ring: &Ring<T>, n: usize, gens: &[Matrix<T>], r: u64, budget: usize) -> Result<FiniteClosure> {
    let arith = ResidueMatrices::new(ring, n, r)?;
    let reduced = gens
        .iter()
        .map(|g| {
            if !arith.is_invertible(ring, g) {
                return Err(Error::NonInvertible);
            }
            arith.reduce(ring, g)
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteClosure::generate(arith, reduced, budget)
}

/// `quotient_separates`: is the image of `x` outside the image of `⟨S⟩`?
pub fn quotient_separates<T: Scalar>(
    ring: &Ring<T>,
    s_gens: &[Matrix<T>],
    x: &Matrix<T>,
    r: u64,
    budget: usize,
) -> Result<bool> {
    let c = closure(ring, x.dim(), s_gens, r, budget)?;
    Ok(!c.contains(&c.arith().reduce(ring, x)?))
}

/// Every element of `T_n(O/rO)`: unit diagonals and arbitrary strictly upper entries.
pub fn triangular_group_elements(arith: &ResidueMatrices, budget: usize) -> Result<Vec<ResidueMatrix>> {
    let rr = arith.residue_ring();
    let n = arith.dim();
    let d = rr.degree();
    let units = rr.units();
    let upper = n * (n - 1) / 2;
    let total = (units.len() as u128).pow(n as u32) * rr.cardinality().pow(upper as u32);
    if total > budget as u128 {
        return Err(Error::BudgetExceeded { what: "triangular group over residue ring", budget });
    }
    let elems: Vec<Vec<u64>> = rr.elements().collect();
    let mut out = Vec::with_capacity(total as usize);
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut diag_idx = vec![0usize; n];
    loop {
        let mut up_idx = vec![0usize; upper];
        loop {
            let mut m = vec![0u64; n * n * d];
            for i in 0..n {
                let o = (i * n + i) * d;
                m[o..o + d].copy_from_slice(&units[diag_idx[i]]);
            }
            for (s, &(i, j)) in slots.iter().enumerate() {
                let o = (i * n + j) * d;
                m[o..o + d].copy_from_slice(&elems[up_idx[s]]);
            }
            out.push(m);
            if !odometer(&mut up_idx, elems.len()) {
                break;
            }
        }
        if !odometer(&mut diag_idx, units.len()) {
            break;
        }
    }
    Ok(out)
}

fn odometer(idx: &mut [usize], base: usize) -> bool {
    for x in idx.iter_mut() {
        *x += 1;
        if *x < base {
            return true;
        }
        *x = 0;
    }
    false
}

/// `f(r)`: exponent of `T_n(O/rO)` by full enumeration.
pub fn group_exponent_f<T: Scalar>(spec: &RingSpec<T>, n: usize, r: u64, budget: usize) -> Result<u64> {
    if r < 2 {
        return Err(Error::DegenerateLevel(r));
    }
    let arith = ResidueMatrices::new(&spec.ring, n, r)?;
    let all = triangular_group_elements(&arith, budget)?;
    Ok(all.iter().fold(1, |acc, g| lcm_u64(acc, arith.order(g))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    type R = Ring<BigInt>;

    fn u(ring: &R, b: i64) -> Matrix<BigInt> {
        Matrix::from_ints(ring, &[&[1, b], &[0, 1]]).unwrap()
    }

    #[test]
    fn closure_examples() {
        let z = R::rationals_localized(1);
        let c = closure(&z, 2, &[u(&z, 2)], 4, DEFAULT_CLOSURE_BUDGET).unwrap();
        assert_eq!(c.order(), 2);
        assert_eq!(closure(&z, 2, &[], 7, DEFAULT_CLOSURE_BUDGET).unwrap().order(), 1);
        let c = closure(&z, 2, &[u(&z, 1)], 5, DEFAULT_CLOSURE_BUDGET).unwrap();
        assert_eq!(c.order(), 5);
        for (i, e) in c.elements().iter().enumerate() {
            let w = c.word_of_index(i);
            let m = w.eval(&z, &[u(&z, 1)], 2).unwrap();
            assert_eq!(&c.arith().reduce(&z, &m).unwrap(), e);
        }
        let err = closure(&z, 2, &[u(&z, 1)], 5, 3).unwrap_err();
        assert_eq!(err, Error::ClosureBudgetExceeded { partial: 3, budget: 3 });
        let zh = R::rationals_localized(2);
        assert_eq!(closure(&zh, 2, &[u(&zh, 1)], 4, 10).unwrap_err(), Error::LevelNotCoprime { level: 4, modulus: 2 });
    }

    #[test]
    fn order_examples() {
        let z = R::rationals_localized(1);
        assert_eq!(element_order(&z, &u(&z, 1), 5).unwrap(), 5);
        assert_eq!(element_order(&z, &Matrix::identity(&z, 3), 6).unwrap(), 1);
        let d3 = Matrix::diagonal(&z, vec![z.int(3), z.one()]);
        assert_eq!(element_order(&z, &d3, 4).unwrap(), 2);
        assert_eq!(element_order(&z, &d3, 3), Err(Error::NonInvertible));
    }

    /// Orders over `Z/r` by a direct 2×2 integer loop.
    fn naive_exponent_z2(r: i64) -> u64 {
        let mut f = 1;
        for a in 0..r {
            for c in 0..r {
                if num_integer::Integer::gcd(&a, &r) != 1 || num_integer::Integer::gcd(&c, &r) != 1 {
                    continue;
                }
                for b in 0..r {
                    let (mut x, mut y, mut z) = (a, b, c);
                    let mut k = 1;
                    while !(x % r == 1 % r && y % r == 0 && z % r == 1 % r) {
                        let nx = x * a % r;
                        let ny = (x * b + y * c) % r;
                        let nz = z * c % r;
                        x = nx;
                        y = ny;
                        z = nz;
                        k += 1;
                    }
                    f = num_integer::Integer::lcm(&f, &k);
                }
            }
        }
        f
    }

    #[test]
    fn exponent_examples() {
        let s = RingSpec::<BigInt>::integers();
        for (r, f) in [(2, 2), (3, 6), (4, 4)] {
            assert_eq!(group_exponent_f(&s, 2, r, DEFAULT_CLOSURE_BUDGET).unwrap(), f);
            assert_eq!(naive_exponent_z2(r as i64), f);
        }
        for r in 5..12 {
            assert_eq!(group_exponent_f(&s, 2, r, DEFAULT_CLOSURE_BUDGET).unwrap(), naive_exponent_z2(r as i64));
        }
        assert!(matches!(group_exponent_f(&s, 3, 50, 1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn exponent_is_minimal() {
        let s = RingSpec::<BigInt>::gaussian_integers();
        for r in [2u64, 3, 5] {
            let arith = ResidueMatrices::new(&s.ring, 2, r).unwrap();
            let all = triangular_group_elements(&arith, DEFAULT_CLOSURE_BUDGET).unwrap();
            let f = group_exponent_f(&s, 2, r, DEFAULT_CLOSURE_BUDGET).unwrap();
            assert!(all.iter().all(|g| arith.is_identity(&arith.pow(g, f))));
            for p in crate::scalar::prime_divisors(f) {
                assert!(all.iter().any(|g| !arith.is_identity(&arith.pow(g, f / p))));
            }
        }
    }

    #[test]
    fn separation_examples() {
        let z = R::rationals_localized(1);
        let s = [u(&z, 2)];
        assert!(quotient_separates(&z, &s, &u(&z, 1), 2, 100).unwrap());
        assert!(!quotient_separates(&z, &s, &u(&z, 1), 3, 100).unwrap());
        assert!(!quotient_separates(&z, &s, &u(&z, 2), 5, 100).unwrap());
    }

    #[test]
    fn normal_closure_and_relative_exponent() {
        let z = R::rationals_localized(1);
        let arith = ResidueMatrices::new(&z, 2, 3).unwrap();
        let dm = arith.reduce(&z, &Matrix::diagonal(&z, vec![z.int(-1), z.one()])).unwrap();
        let um = arith.reduce(&z, &u(&z, 1)).unwrap();
        let mut h = FiniteClosure::generate(arith.clone(), vec![dm.clone()], 100).unwrap();
        assert_eq!(h.order(), 2);
        let f = FiniteClosure::generate(arith, vec![dm, um.clone()], 100).unwrap();
        assert_eq!(f.order(), 6);
        assert_eq!(f.exponent_over(&h), 6);
        h.normalize_under(&[um]).unwrap();
        assert_eq!(h.order(), 6);
        assert_eq!(f.exponent_over(&h), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn closures_are_subgroups(vals in prop::collection::vec(-3i64..=3, 6), r in 2u64..6) {
            let z = R::rationals_localized(1);
            let dg = |v: i64| if v >= 0 { 1 } else { -1 };
            let g1 = Matrix::from_ints(&z, &[&[dg(vals[0]), vals[1]], &[0, dg(vals[2])]]).unwrap();
            let g2 = Matrix::from_ints(&z, &[&[dg(vals[3]), vals[4]], &[0, dg(vals[5])]]).unwrap();
            let c = closure(&z, 2, &[g1, g2], r, 1000).unwrap();
            let arith = c.arith().clone();
            prop_assert!(c.contains(&arith.identity()));
            if c.order() <= 200 {
                for a in c.elements() {
                    prop_assert!(c.contains(&arith.inverse(a)));
                    for b in c.elements() {
                        prop_assert!(c.contains(&arith.mul(a, b)));
                    }
                }
            }
            let whole = triangular_group_elements(&arith, 100_000).unwrap().len();
            prop_assert_eq!(whole % c.order(), 0);
        }

        #[test]
        fn reduction_commutes_with_product(a in prop::collection::vec(-20i64..=20, 4), b in prop::collection::vec(-20i64..=20, 4), r in 2u64..30) {
            let z = R::gaussian(1);
            let mk = |v: &[i64]| Matrix::from_rows(vec![
                vec![z.element(vec![BigInt::from(v[0]), BigInt::from(v[1])], 0).unwrap(), z.int(v[2])],
                vec![z.int(v[3]), z.one()],
            ]).unwrap();
            let (x, y) = (mk(&a), mk(&b));
            let arith = ResidueMatrices::new(&z, 2, r).unwrap();
            let lhs = arith.reduce(&z, &x.mul(&z, &y).unwrap()).unwrap();
            let rhs = arith.mul(&arith.reduce(&z, &x).unwrap(), &arith.reduce(&z, &y).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn separation_persists_at_multiples(b in 1i64..6, x in 1i64..6, r in 2u64..6, k in 2u64..4) {
            let z = R::rationals_localized(1);
            let s = [u(&z, b)];
            if quotient_separates(&z, &s, &u(&z, x), r, 1000).unwrap() {
                prop_assert!(quotient_separates(&z, &s, &u(&z, x), r * k, 1000).unwrap());
            }
        }
    }
}
