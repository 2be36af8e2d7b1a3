//! Integer lattices in `Z^k`, kept in row Hermite normal form.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(g, s, t)` with `s·a + t·b = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd<T: Scalar>(a: &T, b: &T) -> (T, T, T) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (T::one(), T::zero());
    let (mut old_t, mut t) = (T::zero(), T::one());
    while !r.is_zero() {
        let q = old_r.div_floor(&r);
        let nr = old_r - q.clone() * r.clone();
        old_r = std::mem::replace(&mut r, nr);
        let ns = old_s - q.clone() * s.clone();
        old_s = std::mem::replace(&mut s, ns);
        let nt = old_t - q * t.clone();
        old_t = std::mem::replace(&mut t, nt);
    }
    if old_r.is_negative() {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

fn axpy<T: Scalar>(dst: &mut [T], c: &T, src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = d.clone() + c.clone() * s.clone();
    }
}

/// Row HNF of `rows` together with the unimodular `U` such that `U·A = H`.
///
/// `H` keeps every row (zero rows last); the rows of `U` matching zero rows of
/// `H` span the left kernel of `A`.
pub fn hnf_with_transform<T: Scalar>(rows: &[Vec<T>], dim: usize) -> (Vec<Vec<T>>, Vec<Vec<T>>, usize) {
    let nrows = rows.len();
    let mut h: Vec<Vec<T>> = rows.to_vec();
    let mut u: Vec<Vec<T>> = (0..nrows)
        .map(|i| (0..nrows).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let mut p = 0usize;
    for col in 0..dim {
        if p == nrows {
            break;
        }
        for i in p + 1..nrows {
            if h[i][col].is_zero() {
                continue;
            }
            let (g, s, t) = ext_gcd(&h[p][col], &h[i][col]);
            let a = h[p][col].div_floor(&g);
            let b = h[i][col].div_floor(&g);
            let combine = |m: &mut Vec<Vec<T>>| {
                let rp = m[p].clone();
                let ri = m[i].clone();
                m[p] = rp.iter().zip(&ri).map(|(x, y)| s.clone() * x.clone() + t.clone() * y.clone()).collect();
                m[i] = rp.iter().zip(&ri).map(|(x, y)| a.clone() * y.clone() - b.clone() * x.clone()).collect();
            };
            combine(&mut h);
            combine(&mut u);
        }
        if h[p][col].is_zero() {
            continue;
        }
        if h[p][col].is_negative() {
            h[p].iter_mut().for_each(|x| *x = -x.clone());
            u[p].iter_mut().for_each(|x| *x = -x.clone());
        }
        let piv = h[p][col].clone();
        for i in 0..p {
            let q = h[i][col].div_floor(&piv);
            if !q.is_zero() {
                let neg = -q;
                let (hp, up) = (h[p].clone(), u[p].clone());
                axpy(&mut h[i], &neg, &hp);
                axpy(&mut u[i], &neg, &up);
            }
        }
        p += 1;
    }
    (h, u, p)
}

/// A sublattice of `Z^dim` stored by its HNF basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice<T> {
    dim: usize,
    basis: Vec<Vec<T>>,
}

impl<T: Scalar> Lattice<T> {
    pub fn new(dim: usize, gens: Vec<Vec<T>>) -> Result<Self> {
        for g in &gens {
            if g.len() != dim {
                return Err(Error::AmbientMismatch { left: dim, right: g.len() });
            }
        }
        let (h, _, rank) = hnf_with_transform(&gens, dim);
        Ok(Lattice { dim, basis: h.into_iter().take(rank).collect() })
    }

    pub fn zero(dim: usize) -> Self {
        Lattice { dim, basis: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Lattice { dim, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    fn check(&self, other: usize) -> Result<()> {
        if other != self.dim {
            return Err(Error::AmbientMismatch { left: self.dim, right: other });
        }
        Ok(())
    }

    /// Coefficients of `v` in the HNF basis, if `v` lies in the lattice.
    pub fn coords(&self, v: &[T]) -> Result<Option<Vec<T>>> {
        self.check(v.len())?;
        let mut rest = v.to_vec();
        let mut out = Vec::with_capacity(self.basis.len());
        for row in &self.basis {
            let col = row.iter().position(|x| !x.is_zero()).expect("nonzero basis row");
            if rest[..col].iter().any(|x| !x.is_zero()) {
                return Ok(None);
            }
            let (q, r) = rest[col].div_mod_floor(&row[col]);
            if !r.is_zero() {
                return Ok(None);
            }
            axpy(&mut rest, &(-q.clone()), row);
            out.push(q);
        }
        Ok(if rest.iter().all(Zero::is_zero) { Some(out) } else { None })
    }

    pub fn member(&self, v: &[T]) -> Result<bool> {
        Ok(self.coords(v)?.is_some())
    }

    pub fn contains(&self, other: &Lattice<T>) -> Result<bool> {
        self.check(other.dim)?;
        for b in &other.basis {
            if !self.member(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn scale(&self, r: &T) -> Lattice<T> {
        let gens = self.basis.iter().map(|b| b.iter().map(|x| x.clone() * r.clone()).collect()).collect();
        Lattice::new(self.dim, gens).expect("same ambient dimension")
    }

    pub fn sum(&self, other: &Lattice<T>) -> Result<Lattice<T>> {
        self.check(other.dim)?;
        let gens = self.basis.iter().chain(&other.basis).cloned().collect();
        Lattice::new(self.dim, gens)
    }

    pub fn with_vectors(&self, extra: &[Vec<T>]) -> Result<Lattice<T>> {
        let gens = self.basis.iter().chain(extra).cloned().collect();
        Lattice::new(self.dim, gens)
    }

    /// Exact intersection: the second block of rows of `[[A, A], [B, 0]]`
    /// whose first block vanishes.
    pub fn intersect(&self, other: &Lattice<T>) -> Result<Lattice<T>> {
        self.check(other.dim)?;
        let d = self.dim;
        let mut rows = Vec::new();
        for a in &self.basis {
            rows.push(a.iter().chain(a.iter()).cloned().collect::<Vec<_>>());
        }
        for b in &other.basis {
            rows.push(b.iter().cloned().chain(std::iter::repeat(T::zero()).take(d)).collect());
        }
        let (h, _, rank) = hnf_with_transform(&rows, 2 * d);
        let gens = h
            .into_iter()
            .take(rank)
            .filter(|r| r[..d].iter().all(Zero::is_zero))
            .map(|r| r[d..].to_vec())
            .collect();
        Lattice::new(d, gens)
    }

    /// `[Z^dim : L]` when the lattice has full rank.
    pub fn index(&self) -> Option<T> {
        if self.rank() < self.dim {
            return None;
        }
        Some(self.basis.iter().enumerate().fold(T::one(), |acc, (i, row)| acc * row[i].clone()))
    }

    /// Invariant factors of `Z^dim / L`; free summands appear as zeros.
    pub fn invariant_factors(&self) -> Vec<T> {
        let mut f = smith_diagonal(&self.basis, self.dim);
        f.retain(|x| !x.is_zero());
        let mut out: Vec<T> = f.into_iter().filter(|x| !x.is_one()).collect();
        out.extend(std::iter::repeat(T::zero()).take(self.dim - self.rank()));
        out
    }

    /// Exponent of the finite quotient `Z^dim / L`, `None` if infinite.
    pub fn quotient_exponent(&self) -> Option<T> {
        if self.rank() < self.dim {
            return None;
        }
        Some(self.invariant_factors().into_iter().fold(T::one(), |a, b| a.lcm(&b)))
    }
}

/// Integer combination of `gens` (in order) equal to `target`.
pub fn solve_combination<T: Scalar>(gens: &[Vec<T>], target: &[T]) -> Result<Option<Vec<T>>> {
    let dim = target.len();
    for g in gens {
        if g.len() != dim {
            return Err(Error::AmbientMismatch { left: dim, right: g.len() });
        }
    }
    let (h, u, rank) = hnf_with_transform(gens, dim);
    let lat = Lattice { dim, basis: h[..rank].to_vec() };
    let Some(c) = lat.coords(target)? else { return Ok(None) };
    let mut out = vec![T::zero(); gens.len()];
    for (ci, urow) in c.iter().zip(&u) {
        axpy(&mut out, ci, urow);
    }
    Ok(Some(out))
}

/// Basis of the left kernel `{c : Σ c_i·rows_i = 0}`.
pub fn left_kernel<T: Scalar>(rows: &[Vec<T>], dim: usize) -> Vec<Vec<T>> {
    let (_, u, rank) = hnf_with_transform(rows, dim);
    u.into_iter().skip(rank).collect()
}

/// Diagonal of the Smith normal form (unordered divisibility not guaranteed
/// by construction, but the multiset of nonzero entries is normalized).
fn smith_diagonal<T: Scalar>(rows: &[Vec<T>], dim: usize) -> Vec<T> {
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let nr = a.len();
    let mut diag = Vec::new();
    let mut t = 0;
    while t < nr.min(dim) {
        // pivot: smallest nonzero |entry| in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..nr {
            for j in t..dim {
                if !a[i][j].is_zero() && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let piv = a[t][t].clone();
            let mut dirty = false;
            for i in t + 1..nr {
                let q = a[i][t].div_floor(&piv);
                if !q.is_zero() {
                    let rt = a[t].clone();
                    axpy(&mut a[i], &(-q), &rt);
                }
                if !a[i][t].is_zero() {
                    dirty = true;
                }
            }
            for j in t + 1..dim {
                let q = a[t][j].div_floor(&piv);
                if !q.is_zero() {
                    for row in a.iter_mut() {
                        let v = row[j].clone() - q.clone() * row[t].clone();
                        row[j] = v;
                    }
                }
                if !a[t][j].is_zero() {
                    dirty = true;
                }
            }
            if !dirty {
                // divisibility of the trailing block by the pivot
                let bad = (t + 1..nr).find(|&i| (t + 1..dim).any(|j| !a[i][j].is_multiple_of(&piv)));
                match bad {
                    Some(i) => {
                        let ri = a[i].clone();
                        axpy(&mut a[t], &T::one(), &ri);
                        continue;
                    }
                    None => break,
                }
            }
            // move the smallest entry of row/col t to the pivot
            let mut best = (t, t);
            for i in t..nr {
                if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..dim {
                if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            if best.0 != t {
                a.swap(t, best.0);
            }
            if best.1 != t {
                for row in a.iter_mut() {
                    row.swap(t, best.1);
                }
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn v(x: &[i64]) -> Vec<BigInt> {
        x.iter().map(|&a| BigInt::from(a)).collect()
    }

    fn lat(dim: usize, gens: &[&[i64]]) -> Lattice<BigInt> {
        Lattice::new(dim, gens.iter().map(|g| v(g)).collect()).unwrap()
    }

    #[test]
    fn membership_examples() {
        let l = lat(2, &[&[1, 1], &[0, 2]]);
        assert!(l.member(&v(&[2, 0])).unwrap());
        let even = lat(2, &[&[2, 0], &[0, 2]]);
        assert!(!even.member(&v(&[1, 0])).unwrap());
        assert!(l.contains(&l).unwrap());
        assert!(l.contains(&even).unwrap());
        assert!(!even.contains(&l).unwrap());
        assert_eq!(
            l.member(&v(&[1, 2, 3])),
            Err(Error::AmbientMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn intersection_of_cyclic_lattices() {
        let a = lat(1, &[&[2]]);
        let b = lat(1, &[&[3]]);
        assert_eq!(a.intersect(&b).unwrap(), lat(1, &[&[6]]));
        let c = lat(2, &[&[1, 1]]);
        let d = lat(2, &[&[1, 0]]);
        assert_eq!(c.intersect(&d).unwrap().rank(), 0);
    }

    #[test]
    fn kernel_and_solve() {
        let rows = vec![v(&[2, 0]), v(&[0, 3]), v(&[4, 6])];
        let ker = left_kernel(&rows, 2);
        assert_eq!(ker.len(), 1);
        let c = &ker[0];
        let combo: Vec<BigInt> = (0..2)
            .map(|j| (0..3).map(|i| c[i].clone() * rows[i][j].clone()).sum())
            .collect();
        assert!(combo.iter().all(|x| x.is_zero()));
        let sol = solve_combination(&rows, &v(&[6, 9])).unwrap().unwrap();
        let got: Vec<BigInt> = (0..2)
            .map(|j| (0..3).map(|i| sol[i].clone() * rows[i][j].clone()).sum())
            .collect();
        assert_eq!(got, v(&[6, 9]));
        assert_eq!(solve_combination(&rows, &v(&[1, 0])).unwrap(), None);
    }

    #[test]
    fn invariant_factors_of_quotients() {
        let l = lat(2, &[&[2, 0], &[0, 3]]);
        assert_eq!(l.invariant_factors(), v(&[6]));
        assert_eq!(l.quotient_exponent(), Some(BigInt::from(6)));
        let l = lat(2, &[&[2, 0], &[0, 4]]);
        let mut f = l.invariant_factors();
        f.sort();
        assert_eq!(f, v(&[2, 4]));
        assert_eq!(l.index(), Some(BigInt::from(8)));
        let l = lat(2, &[&[2, 0]]);
        assert_eq!(l.quotient_exponent(), None);
    }

    proptest! {
        #[test]
        fn hnf_preserves_lattice(gens in prop::collection::vec(prop::collection::vec(-6i64..6, 3), 1..5)) {
            let gv: Vec<Vec<BigInt>> = gens.iter().map(|g| v(g)).collect();
            let l = Lattice::new(3, gv.clone()).unwrap();
            for g in &gv {
                prop_assert!(l.member(g).unwrap());
            }
            for b in l.basis() {
                prop_assert!(solve_combination(&gv, b).unwrap().is_some());
            }
            let (h, u, _) = hnf_with_transform(&gv, 3);
            for (hr, ur) in h.iter().zip(&u) {
                let combo: Vec<BigInt> = (0..3)
                    .map(|j| (0..gv.len()).map(|i| ur[i].clone() * gv[i][j].clone()).sum())
                    .collect();
                prop_assert_eq!(&combo, hr);
            }
        }

        #[test]
        fn intersection_is_exact(a in prop::collection::vec(prop::collection::vec(-5i64..5, 2), 1..3),
                                 b in prop::collection::vec(prop::collection::vec(-5i64..5, 2), 1..3),
                                 probe in prop::collection::vec(-12i64..12, 2)) {
            let la = Lattice::new(2, a.iter().map(|g| v(g)).collect()).unwrap();
            let lb = Lattice::new(2, b.iter().map(|g| v(g)).collect()).unwrap();
            let li = la.intersect(&lb).unwrap();
            let p = v(&probe);
            prop_assert_eq!(li.member(&p).unwrap(), la.member(&p).unwrap() && lb.member(&p).unwrap());
        }
    }
}
