//! The unit group of `B` as an explicit finitely generated abelian group.
//!
//! A unit is written `ζ^a · Π g_i^(b_i)` for the configured torsion generator
//! `ζ` (of order `w`) and free generators `g_i`. Subgroups of units, and of
//! diagonal matrices over units, live in these exponent coordinates as
//! integer lattices that always contain the torsion relations `w·e_j`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, SpanFailure};
use crate::lattice::{solve_combination, Lattice};
use crate::ring::{ResidueRing, Ring, RingElement};
use crate::scalar::{prime_divisors, Scalar};

/// Largest unit group of `O/αO` the kernel computation will tabulate.
const KERNEL_TABLE_BUDGET: usize = 4_000_000;

/// `ζ^torsion · Π g_i^(free_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentVector {
    pub torsion: u64,
    pub free: Vec<i64>,
}

impl ExponentVector {
    pub fn identity(rank: usize) -> Self {
        ExponentVector { torsion: 0, free: vec![0; rank] }
    }

    pub fn to_lattice_vector<T: Scalar>(&self) -> Vec<T> {
        std::iter::once(T::from_u64_exact(self.torsion))
            .chain(self.free.iter().map(|&b| T::from_i64_exact(b)))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct UnitGroupBasis<T> {
    torsion_gen: RingElement<T>,
    torsion_order: u64,
    free: Vec<RingElement<T>>,
    free_inv: Vec<RingElement<T>>,
}

impl<T: Scalar> UnitGroupBasis<T> {
    /// Validates the torsion order and that every generator is a unit, and
    /// rejects bases where a free generator is a short product of the others.
    pub fn new(
        ring: &Ring<T>,
        torsion_gen: RingElement<T>,
        torsion_order: u64,
        free: Vec<RingElement<T>>,
    ) -> Result<Self> {
        if torsion_order == 0 {
            return Err(Error::InvalidInput("torsion order must be positive".into()));
        }
        let mut acc = ring.one();
        for j in 1..=torsion_order {
            acc = ring.mul(&acc, &torsion_gen);
            if acc.is_one() != (j == torsion_order) {
                return Err(Error::InvalidInput(format!(
                    "torsion generator does not have order {torsion_order}"
                )));
            }
        }
        let free_inv = free
            .iter()
            .map(|g| ring.inv(g))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::InvalidInput("free unit generator is not a unit of the ring".into()))?;
        let basis = UnitGroupBasis { torsion_gen, torsion_order, free, free_inv };
        for i in 0..basis.free.len() {
            let mut others = basis.clone();
            others.free.remove(i);
            others.free_inv.remove(i);
            if others.search(ring, &basis.free[i], 3).is_some() {
                return Err(Error::InvalidInput(format!(
                    "free unit generator {i} is dependent on the others"
                )));
            }
        }
        Ok(basis)
    }

    pub fn torsion_gen(&self) -> &RingElement<T> {
        &self.torsion_gen
    }

    pub fn torsion_order(&self) -> u64 {
        self.torsion_order
    }

    pub fn free_gens(&self) -> &[RingElement<T>] {
        &self.free
    }

    /// Free rank `t`.
    pub fn free_rank(&self) -> usize {
        self.free.len()
    }

    /// `1 + t`.
    pub fn coordinate_count(&self) -> usize {
        1 + self.free.len()
    }

    pub fn canonical(&self, torsion: i64, free: Vec<i64>) -> ExponentVector {
        ExponentVector { torsion: torsion.rem_euclid(self.torsion_order as i64) as u64, free }
    }

    pub fn exp(&self, ring: &Ring<T>, v: &ExponentVector) -> RingElement<T> {
        let mut acc = ring.pow(&self.torsion_gen, v.torsion as i64).expect("torsion power");
        for (i, &b) in v.free.iter().enumerate() {
            let base = if b < 0 { &self.free_inv[i] } else { &self.free[i] };
            acc = ring.mul(&acc, &ring.pow(base, b.abs()).expect("nonnegative power"));
        }
        acc
    }

    /// Exponent vector from lattice coordinates (torsion reduced mod `w`).
    pub fn vector_from_lattice(&self, v: &[T]) -> ExponentVector {
        let w = T::from_u64_exact(self.torsion_order);
        ExponentVector {
            torsion: v[0].mod_floor(&w).to_u64().unwrap(),
            free: v[1..].iter().map(|x| x.to_i64().expect("exponent fits in i64")).collect(),
        }
    }

    fn torsion_table(&self, ring: &Ring<T>) -> Vec<RingElement<T>> {
        let mut out = Vec::with_capacity(self.torsion_order as usize);
        let mut acc = ring.one();
        for _ in 0..self.torsion_order {
            out.push(acc.clone());
            acc = ring.mul(&acc, &self.torsion_gen);
        }
        out
    }

    fn free_product(&self, ring: &Ring<T>, b: &[i64]) -> RingElement<T> {
        self.exp(ring, &ExponentVector { torsion: 0, free: b.to_vec() })
    }

    fn torsion_part(&self, ring: &Ring<T>, table: &[RingElement<T>], u: &RingElement<T>, b: &[i64]) -> Option<u64> {
        let inv = self.free_product(ring, &b.iter().map(|x| -x).collect::<Vec<_>>());
        let q = ring.mul(u, &inv);
        table.iter().position(|z| *z == q).map(|a| a as u64)
    }

    fn search(&self, ring: &Ring<T>, u: &RingElement<T>, bound: u64) -> Option<ExponentVector> {
        let table = self.torsion_table(ring);
        let t = self.free.len();
        if t == 0 {
            return self.torsion_part(ring, &table, u, &[]).map(|a| ExponentVector { torsion: a, free: vec![] });
        }
        if let Some(guess) = self.guided_guess(ring, u) {
            for delta in neighbourhood(t, 1) {
                let b: Vec<i64> = guess.iter().zip(&delta).map(|(g, d)| g + d).collect();
                if let Some(a) = self.torsion_part(ring, &table, u, &b) {
                    return Some(ExponentVector { torsion: a, free: b });
                }
            }
        }
        // exhaustive box, innermost shells first
        let mut candidates = neighbourhood(t, bound as i64);
        candidates.sort_by_key(|b| b.iter().map(|x| x.abs()).max().unwrap_or(0));
        for b in candidates {
            if let Some(a) = self.torsion_part(ring, &table, u, &b) {
                return Some(ExponentVector { torsion: a, free: b });
            }
        }
        None
    }

    /// Least-squares solve in logarithmic coordinates: archimedean absolute
    /// values, the norm, and valuations of the norm at primes dividing `m`.
    fn guided_guess(&self, ring: &Ring<T>, u: &RingElement<T>) -> Option<Vec<i64>> {
        let roots = poly_roots(ring.min_poly())?;
        let primes = ring.modulus_primes().to_vec();
        let feats = |e: &RingElement<T>| log_features(ring, &roots, &primes, e);
        let target = feats(u);
        let cols: Vec<Vec<Option<f64>>> = self.free.iter().map(feats).collect();
        let rows: Vec<usize> = (0..target.len())
            .filter(|&i| target[i].is_some() && cols.iter().all(|c| c[i].is_some()))
            .collect();
        if rows.len() < self.free.len() {
            return None;
        }
        let a = DMatrix::from_fn(rows.len(), self.free.len(), |i, j| cols[j][rows[i]].unwrap());
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|&i| target[i].unwrap()));
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        if smax == 0.0 || svd.singular_values.iter().any(|&s| s < 1e-9 * smax) {
            return None;
        }
        let x = svd.solve(&b, 1e-12).ok()?;
        x.iter()
            .map(|&v| if v.is_finite() && v.abs() < 1e15 { Some(v.round() as i64) } else { None })
            .collect()
    }

    /// Discrete log of `u`.
    pub fn log(&self, ring: &Ring<T>, u: &RingElement<T>, bound: u64) -> Result<ExponentVector> {
        if ring.inv(u).is_err() {
            return Err(Error::NotInSpan(SpanFailure::NotAUnit));
        }
        self.search(ring, u, bound).ok_or(Error::NotInSpan(SpanFailure::BoundExhausted))
    }

    /// An `r`-th root of the unit with exponents `v`, if one exists in the unit group.
    pub fn root(&self, v: &ExponentVector, r: u64) -> Option<ExponentVector> {
        let k = self.coordinate_count();
        let layout = TorsionLayout::units(self.torsion_order);
        let mut gens: Vec<Vec<T>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { T::from_u64_exact(r) } else { T::zero() }).collect())
            .collect();
        gens.extend(layout.relations(k));
        let c = solve_combination(&gens, &v.to_lattice_vector::<T>()).ok()??;
        Some(self.vector_from_lattice(&c[..k]))
    }
}

fn neighbourhood(t: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..t {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-radius..=radius).map(move |d| {
                    let mut q = p.clone();
                    q.push(d);
                    q
                })
            })
            .collect();
    }
    out
}

fn poly_roots<T: Scalar>(f: &[T]) -> Option<Vec<nalgebra::Complex<f64>>> {
    let d = f.len() - 1;
    let coeffs: Vec<f64> = f.iter().map(|c| c.to_f64()).collect::<Option<_>>()?;
    if d == 1 {
        return Some(vec![nalgebra::Complex::new(-coeffs[0], 0.0)]);
    }
    let companion = DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -coeffs[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    Some(companion.complex_eigenvalues().iter().cloned().collect())
}

fn log_features<T: Scalar>(
    ring: &Ring<T>,
    roots: &[nalgebra::Complex<f64>],
    primes: &[u64],
    e: &RingElement<T>,
) -> Vec<Option<f64>> {
    let ln_m = (ring.modulus() as f64).ln();
    let k = e.denom_exp() as f64;
    let logs: Vec<f64> = e.coeffs().iter().map(|c| c.ln_abs()).collect();
    let scale = logs.iter().cloned().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    for alpha in roots {
        let mut sum = nalgebra::Complex::new(0.0, 0.0);
        let mut mag = 0.0;
        let mut pow = nalgebra::Complex::new(1.0, 0.0);
        for (c, l) in e.coeffs().iter().zip(&logs) {
            if l.is_finite() {
                let s = if c.is_negative() { -1.0 } else { 1.0 };
                let term = pow * (s * (l - scale).exp());
                mag += term.norm();
                sum += term;
            }
            pow *= alpha;
        }
        out.push(if sum.norm() > 1e-7 * mag { Some(sum.norm().ln() + scale - k * ln_m) } else { None });
    }
    let (num, den_exp) = ring.norm(e);
    out.push(Some(num.ln_abs() - den_exp as f64 * ln_m));
    for &p in primes {
        let pp = T::from_u64_exact(p);
        let mut v = 0i64;
        let mut x = num.clone();
        while !x.is_zero() && x.is_multiple_of(&pp) {
            x = x.div_floor(&pp);
            v += 1;
        }
        let mut mm = ring.modulus();
        let mut vpm = 0i64;
        while mm % p == 0 {
            mm /= p;
            vpm += 1;
        }
        out.push(Some((v - den_exp as i64 * vpm) as f64));
    }
    out
}

/// Where torsion coordinates sit and their orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionLayout {
    pub coords: Vec<(usize, u64)>,
}

impl TorsionLayout {
    pub fn units(w: u64) -> Self {
        TorsionLayout { coords: vec![(0, w)] }
    }

    /// `n` diagonal blocks of `1 + t` coordinates each.
    pub fn diagonal(n: usize, block: usize, w: u64) -> Self {
        TorsionLayout { coords: (0..n).map(|j| (j * block, w)).collect() }
    }

    pub fn relations<T: Scalar>(&self, dim: usize) -> Vec<Vec<T>> {
        self.coords
            .iter()
            .map(|&(c, w)| (0..dim).map(|j| if j == c { T::from_u64_exact(w) } else { T::zero() }).collect())
            .collect()
    }
}

/// A subgroup of a unit-coordinate group: a lattice containing the torsion relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentLattice<T> {
    lattice: Lattice<T>,
    layout: TorsionLayout,
}

impl<T: Scalar> ExponentLattice<T> {
    pub fn new(dim: usize, layout: TorsionLayout, gens: Vec<Vec<T>>) -> Result<Self> {
        let mut all = gens;
        all.extend(layout.relations(dim));
        Ok(ExponentLattice { lattice: Lattice::new(dim, all)?, layout })
    }

    pub fn full(dim: usize, layout: TorsionLayout) -> Self {
        ExponentLattice { lattice: Lattice::full(dim), layout }
    }

    /// Just the torsion relations: the trivial subgroup.
    pub fn trivial(dim: usize, layout: TorsionLayout) -> Self {
        Self::new(dim, layout, vec![]).expect("relations have ambient dimension")
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn layout(&self) -> &TorsionLayout {
        &self.layout
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    /// Free rank of the subgroup (rank of the lattice beyond the torsion relations).
    pub fn group_rank(&self) -> usize {
        self.lattice.rank() - self.layout.coords.len()
    }

    fn check(&self, other: &ExponentLattice<T>) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::AmbientMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn member(&self, v: &[T]) -> Result<bool> {
        self.lattice.member(v)
    }

    /// The subgroup of `r`-th powers.
    pub fn scale(&self, r: u64) -> ExponentLattice<T> {
        let scaled = self.lattice.scale(&T::from_u64_exact(r));
        ExponentLattice::new(self.dim(), self.layout.clone(), scaled.basis().to_vec())
            .expect("same ambient dimension")
    }

    pub fn intersect(&self, other: &ExponentLattice<T>) -> Result<ExponentLattice<T>> {
        self.check(other)?;
        Ok(ExponentLattice { lattice: self.lattice.intersect(&other.lattice)?, layout: self.layout.clone() })
    }

    pub fn contains(&self, other: &ExponentLattice<T>) -> Result<bool> {
        self.check(other)?;
        self.lattice.contains(&other.lattice)
    }
}

/// Relation lattice of `images` inside the finite group of units of `rr`.
///
/// Generators are adjoined one at a time; the least power of each new image
/// landing in the subgroup tabulated so far gives one relation, and these
/// relations form a triangular basis of the kernel.
fn relation_lattice<T: Scalar>(rr: &ResidueRing, images: &[Vec<u64>]) -> Result<Vec<Vec<T>>> {
    let k = images.len();
    let mut table: HashMap<Vec<u64>, Vec<i64>> = HashMap::new();
    table.insert(rr.one(), vec![0; k]);
    let mut rels = Vec::with_capacity(k);
    for (j, h) in images.iter().enumerate() {
        let mut cur = h.clone();
        let mut e = 1i64;
        while !table.contains_key(&cur) {
            cur = rr.mul(&cur, h);
            e += 1;
        }
        let mut rel: Vec<T> = table[&cur].iter().map(|&x| T::from_i64_exact(-x)).collect();
        rel[j] = rel[j].clone() + T::from_i64_exact(e);
        rels.push(rel);
        if e > 1 {
            if table.len().saturating_mul(e as usize) > KERNEL_TABLE_BUDGET {
                return Err(Error::BudgetExceeded { what: "residue unit group", budget: KERNEL_TABLE_BUDGET });
            }
            let old: Vec<(Vec<u64>, Vec<i64>)> = table.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
            let mut hp = h.clone();
            for p in 1..e {
                for (elem, vec) in &old {
                    let mut v = vec.clone();
                    v[j] += p;
                    table.insert(rr.mul(elem, &hp), v);
                }
                hp = rr.mul(&hp, h);
            }
        }
    }
    Ok(rels)
}

/// Exponent vectors in the unit coordinates whose unit is `≡ 1 mod α`.
pub fn unit_congruence_kernel<T: Scalar>(
    ring: &Ring<T>,
    basis: &UnitGroupBasis<T>,
    alpha: u64,
) -> Result<ExponentLattice<T>> {
    ring.check_level(alpha)?;
    let k = basis.coordinate_count();
    let layout = TorsionLayout::units(basis.torsion_order());
    if alpha == 1 {
        return Ok(ExponentLattice::full(k, layout));
    }
    let rr = ring.residue_ring(alpha)?;
    let images: Vec<Vec<u64>> = std::iter::once(basis.torsion_gen())
        .chain(basis.free_gens())
        .map(|g| ring.reduce_unchecked(g, alpha))
        .collect();
    let rels = relation_lattice::<T>(&rr, &images)?;
    ExponentLattice::new(k, layout, rels)
}

/// `congruence_kernel_lattice`: the kernel intersected with `sub`.
pub fn congruence_kernel_lattice<T: Scalar>(
    ring: &Ring<T>,
    basis: &UnitGroupBasis<T>,
    alpha: u64,
    sub: &ExponentLattice<T>,
) -> Result<ExponentLattice<T>> {
    if sub.dim() % basis.coordinate_count() != 0 {
        return Err(Error::AmbientMismatch { left: basis.coordinate_count(), right: sub.dim() });
    }
    let blocks = sub.dim() / basis.coordinate_count();
    let kernel = if blocks == 1 {
        unit_congruence_kernel(ring, basis, alpha)?
    } else {
        diagonal_congruence_kernel(ring, basis, alpha, blocks)?
    };
    kernel.intersect(sub)
}

/// Block-diagonal kernel for `D_n` coordinates.
pub fn diagonal_congruence_kernel<T: Scalar>(
    ring: &Ring<T>,
    basis: &UnitGroupBasis<T>,
    alpha: u64,
    n: usize,
) -> Result<ExponentLattice<T>> {
    let single = unit_congruence_kernel(ring, basis, alpha)?;
    let b = basis.coordinate_count();
    let dim = n * b;
    let mut gens = Vec::new();
    for blk in 0..n {
        for row in single.lattice().basis() {
            let mut v = vec![T::zero(); dim];
            v[blk * b..(blk + 1) * b].clone_from_slice(row);
            gens.push(v);
        }
    }
    ExponentLattice::new(dim, TorsionLayout::diagonal(n, b, basis.torsion_order()), gens)
}

/// Does every unit `≡ 1 mod α` admit an `r`-th root among units?
pub fn alpha_qualifies<T: Scalar>(ring: &Ring<T>, basis: &UnitGroupBasis<T>, r: u64, alpha: u64) -> Result<bool> {
    let kernel = unit_congruence_kernel(ring, basis, alpha)?;
    let k = basis.coordinate_count();
    let powers = ExponentLattice::full(k, TorsionLayout::units(basis.torsion_order())).scale(r);
    powers.contains(&kernel)
}

/// Least level `α` coprime to `m` at which every unit `≡ 1 mod α` is an `r`-th power.
pub fn chevalley_alpha<T: Scalar>(
    ring: &Ring<T>,
    basis: &UnitGroupBasis<T>,
    r: u64,
    search_bound: u64,
) -> Result<u64> {
    if r == 0 {
        return Err(Error::InvalidInput("r must be positive".into()));
    }
    for alpha in (1..=search_bound).filter(|&a| ring.is_coprime_level(a)) {
        if alpha_qualifies(ring, basis, r, alpha)? {
            return Ok(alpha);
        }
    }
    Err(Error::SearchExhausted { what: "Chevalley level", bound: search_bound })
}

/// The ring together with its configured unit group.
#[derive(Clone, Debug)]
pub struct RingSpec<T> {
    pub ring: Ring<T>,
    pub units: UnitGroupBasis<T>,
}

impl<T: Scalar> RingSpec<T> {
    pub fn new(ring: Ring<T>, units: UnitGroupBasis<T>) -> Self {
        RingSpec { ring, units }
    }

    /// `Z[1/m]` with units `{−1; primes dividing m}`.
    pub fn integers_localized(m: u64) -> Self {
        let ring = Ring::rationals_localized(m);
        let free = prime_divisors(m).into_iter().map(|p| ring.int(p as i64)).collect();
        let units = UnitGroupBasis::new(&ring, ring.int(-1), 2, free).expect("standard basis");
        RingSpec { ring, units }
    }

    pub fn integers() -> Self {
        Self::integers_localized(1)
    }

    /// `Z[i]` with units `{i}`.
    pub fn gaussian_integers() -> Self {
        let ring = Ring::gaussian(1);
        let units = UnitGroupBasis::new(&ring, ring.theta(), 4, vec![]).expect("standard basis");
        RingSpec { ring, units }
    }

    /// `Z[√2]` with units `{−1; 1+√2}`.
    pub fn real_quadratic_sqrt2() -> Self {
        let ring = Ring::new(vec![T::from_i64_exact(-2), T::zero(), T::one()], 1).expect("valid ring");
        let fundamental = ring.add(&ring.one(), &ring.theta());
        let units = UnitGroupBasis::new(&ring, ring.int(-1), 2, vec![fundamental]).expect("standard basis");
        RingSpec { ring, units }
    }

    pub fn degree(&self) -> usize {
        self.ring.degree()
    }

    pub fn modulus(&self) -> u64 {
        self.ring.modulus()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    type Spec = RingSpec<BigInt>;

    fn lv(x: &[i64]) -> Vec<BigInt> {
        x.iter().map(|&a| BigInt::from(a)).collect()
    }

    #[test]
    fn unit_log_examples() {
        let s = Spec::integers_localized(2);
        let v = s.units.log(&s.ring, &s.ring.int(-8), 40).unwrap();
        assert_eq!(v, ExponentVector { torsion: 1, free: vec![3] });
        let v = s.units.log(&s.ring, &s.ring.one(), 40).unwrap();
        assert_eq!(v, ExponentVector::identity(1));
        let v = s.units.log(&s.ring, &s.ring.fraction(1, 2), 40).unwrap();
        assert_eq!(v, ExponentVector { torsion: 0, free: vec![-2] });
        assert_eq!(
            s.units.log(&s.ring, &s.ring.int(3), 40),
            Err(Error::NotInSpan(SpanFailure::NotAUnit))
        );
    }

    #[test]
    fn unit_log_bound_exhaustion_is_distinguished() {
        // Basis {−1} over Z[1/2] misses the unit 2.
        let ring = Ring::<BigInt>::rationals_localized(2);
        let basis = UnitGroupBasis::new(&ring, ring.int(-1), 2, vec![]).unwrap();
        assert_eq!(
            basis.log(&ring, &ring.int(2), 5),
            Err(Error::NotInSpan(SpanFailure::BoundExhausted))
        );
    }

    #[test]
    fn unit_log_in_real_quadratic_field() {
        let s = Spec::real_quadratic_sqrt2();
        let g = &s.units.free_gens()[0];
        for b in [-25i64, -3, 0, 7, 30] {
            let u = s.ring.mul(&s.ring.int(-1), &s.ring.pow(g, b).unwrap());
            let v = s.units.log(&s.ring, &u, 2).unwrap();
            assert_eq!(v, ExponentVector { torsion: 1, free: vec![b] });
        }
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let ring = Ring::<BigInt>::rationals_localized(6);
        let err = UnitGroupBasis::new(&ring, ring.int(-1), 2, vec![ring.int(2), ring.int(4)]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let err = UnitGroupBasis::new(&ring, ring.int(-1), 3, vec![]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn congruence_kernel_examples() {
        let s = Spec::integers_localized(2);
        let full = ExponentLattice::full(2, TorsionLayout::units(2));
        let k3 = congruence_kernel_lattice(&s.ring, &s.units, 3, &full).unwrap();
        assert!(k3.member(&lv(&[1, 1])).unwrap());
        let k1 = congruence_kernel_lattice(&s.ring, &s.units, 1, &full).unwrap();
        assert_eq!(k1, full);
        let k15 = congruence_kernel_lattice(&s.ring, &s.units, 15, &full).unwrap();
        let expected = ExponentLattice::new(2, TorsionLayout::units(2), vec![lv(&[0, 4]), lv(&[2, 0])]).unwrap();
        assert_eq!(k15, expected);
        assert_eq!(
            congruence_kernel_lattice(&s.ring, &s.units, 4, &full),
            Err(Error::LevelNotCoprime { level: 4, modulus: 2 })
        );
    }

    #[test]
    fn chevalley_examples() {
        let z = Spec::integers();
        assert_eq!(chevalley_alpha(&z.ring, &z.units, 2, 100).unwrap(), 3);
        assert_eq!(chevalley_alpha(&z.ring, &z.units, 3, 100).unwrap(), 1);
        let zh = Spec::integers_localized(2);
        assert_eq!(chevalley_alpha(&zh.ring, &zh.units, 2, 100).unwrap(), 15);
        assert_eq!(chevalley_alpha(&zh.ring, &zh.units, 3, 100).unwrap(), 7);
        assert!(alpha_qualifies(&zh.ring, &zh.units, 3, 9).unwrap());
        assert_eq!(
            chevalley_alpha(&zh.ring, &zh.units, 2, 14),
            Err(Error::SearchExhausted { what: "Chevalley level", bound: 14 })
        );
    }

    #[test]
    fn kernel_decreases_along_multiples() {
        let s = Spec::integers_localized(2);
        for (a, b) in [(3u64, 9u64), (3, 15), (5, 15), (7, 21), (1, 11)] {
            let ka = unit_congruence_kernel(&s.ring, &s.units, a).unwrap();
            let kb = unit_congruence_kernel(&s.ring, &s.units, b).unwrap();
            assert!(ka.contains(&kb).unwrap(), "{a} | {b}");
        }
    }

    #[test]
    fn gaussian_unit_kernel() {
        let s = Spec::gaussian_integers();
        // i ≡ 1 mod α never for α ≥ 2 coprime... except the kernel contains 4·e0 always
        let k = unit_congruence_kernel(&s.ring, &s.units, 3).unwrap();
        assert!(k.member(&lv(&[4])).unwrap());
        assert!(!k.member(&lv(&[2])).unwrap());
        let k2 = unit_congruence_kernel(&s.ring, &s.units, 2).unwrap();
        // −1 ≡ 1 mod 2
        assert!(k2.member(&lv(&[2])).unwrap());
    }

    proptest! {
        #[test]
        fn log_exp_round_trip(a in 0u64..2, b in -5i64..=5, c in -5i64..=5) {
            let s = Spec::integers_localized(6);
            let v = ExponentVector { torsion: a, free: vec![b, c] };
            let u = s.units.exp(&s.ring, &v);
            prop_assert_eq!(s.units.log(&s.ring, &u, 40).unwrap(), v);
        }
    }
}
