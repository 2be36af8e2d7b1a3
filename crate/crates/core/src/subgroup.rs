//! Finitely generated triangular subgroups: the `Δ`-image lattice, the
//! unipotent kernel `S ∩ UT_n(B)`, and exact membership.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{left_kernel, solve_combination};
use crate::matrix::{GroupWord, Matrix, WordCertificate};
use crate::scalar::Scalar;
use crate::unipotent::{Conjugator, UnipotentPc, WordTerm};
use crate::units::{ExponentLattice, TorsionLayout, RingSpec};

/// Search and enumeration limits shared by the pipeline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bounds {
    pub search_level: u64,
    pub closure_budget: usize,
    pub lattice_iterations: usize,
    pub unit_log_bound: u64,
    pub max_dimension: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            search_level: 1000,
            closure_budget: crate::finite::DEFAULT_CLOSURE_BUDGET,
            lattice_iterations: 50,
            unit_log_bound: 40,
            max_dimension: crate::matrix::DEFAULT_MAX_DIMENSION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    Member(WordCertificate),
    NonMember(NonMemberReason),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonMemberReason {
    /// `Δ(x)` is outside `Δ(S)`.
    Diagonal,
    /// `Δ(x)` is matched but the unitriangular remainder is outside `S ∩ UT_n`.
    Unipotent,
}

#[derive(Debug)]
pub struct SubgroupData<T> {
    spec: RingSpec<T>,
    n: usize,
    generators: Vec<Matrix<T>>,
    delta_vectors: Vec<Vec<T>>,
    delta_lattice: ExponentLattice<T>,
    bounds: Bounds,
    kernel: OnceLock<Result<UnipotentPc<T>>>,
}

impl<T: Scalar> Clone for SubgroupData<T> {
    fn clone(&self) -> Self {
        let kernel = OnceLock::new();
        if let Some(k) = self.kernel.get() {
            let _ = kernel.set(k.clone());
        }
        SubgroupData {
            spec: self.spec.clone(),
            n: self.n,
            generators: self.generators.clone(),
            delta_vectors: self.delta_vectors.clone(),
            delta_lattice: self.delta_lattice.clone(),
            bounds: self.bounds.clone(),
            kernel,
        }
    }
}

/// Unit-group coordinates of the diagonal of a triangular matrix.
pub fn delta_coordinates<T: Scalar>(spec: &RingSpec<T>, x: &Matrix<T>, bound: u64) -> Result<Vec<T>> {
    if !x.is_triangular() {
        return Err(Error::NotTriangular);
    }
    let mut out = Vec::new();
    for e in x.diagonal_entries() {
        out.extend(spec.units.log(&spec.ring, &e, bound)?.to_lattice_vector::<T>());
    }
    Ok(out)
}

pub fn diagonal_layout<T: Scalar>(spec: &RingSpec<T>, n: usize) -> TorsionLayout {
    TorsionLayout::diagonal(n, spec.units.coordinate_count(), spec.units.torsion_order())
}

impl<T: Scalar> SubgroupData<T> {
    pub fn new(spec: &RingSpec<T>, n: usize, generators: Vec<Matrix<T>>, bounds: &Bounds) -> Result<Self> {
        if n == 0 || n > bounds.max_dimension {
            return Err(Error::InvalidInput(format!("dimension {n} outside 1..={}", bounds.max_dimension)));
        }
        let mut delta_vectors = Vec::with_capacity(generators.len());
        for g in &generators {
            if g.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: g.dim() });
            }
            delta_vectors.push(delta_coordinates(spec, g, bounds.unit_log_bound).map_err(|e| match e {
                Error::NotInSpan(crate::error::SpanFailure::NotAUnit) => Error::NonInvertible,
                other => other,
            })?);
        }
        let dim = n * spec.units.coordinate_count();
        let delta_lattice = ExponentLattice::new(dim, diagonal_layout(spec, n), delta_vectors.clone())?;
        Ok(SubgroupData {
            spec: spec.clone(),
            n,
            generators,
            delta_vectors,
            delta_lattice,
            bounds: bounds.clone(),
            kernel: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &RingSpec<T> {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Matrix<T>] {
        &self.generators
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn delta_vectors(&self) -> &[Vec<T>] {
        &self.delta_vectors
    }

    pub fn delta_lattice(&self) -> &ExponentLattice<T> {
        &self.delta_lattice
    }

    pub fn delta_coordinates(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        delta_coordinates(&self.spec, x, self.bounds.unit_log_bound)
    }

    pub fn eval(&self, w: &GroupWord) -> Result<Matrix<T>> {
        w.eval(&self.spec.ring, &self.generators, self.n)
    }

    pub fn eval_certificate(&self, c: &WordCertificate) -> Result<Matrix<T>> {
        c.eval(&self.spec.ring, &self.generators, self.n)
    }

    /// Generator exponent vectors `c` with `Π Δ(g_i)^(c_i) = I`, as a lattice basis.
    pub fn delta_relations(&self) -> Vec<Vec<T>> {
        let s = self.generators.len();
        let dim = self.delta_lattice.dim();
        let mut rows = self.delta_vectors.clone();
        rows.extend(self.delta_lattice.layout().relations(dim));
        left_kernel(&rows, dim)
            .into_iter()
            .map(|v| v[..s].to_vec())
            .filter(|c| c.iter().any(|x| !x.is_zero()))
            .collect()
    }

    fn word_from_coeffs(c: &[T]) -> Result<GroupWord> {
        let syl = c
            .iter()
            .enumerate()
            .map(|(i, x)| x.to_i64().map(|e| (i, e)).ok_or(Error::BudgetExceeded { what: "exponent outside i64", budget: i64::MAX as usize }))
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupWord::from_syllables(syl))
    }

    pub fn conjugators(&self) -> Result<Vec<Conjugator<T>>> {
        self.generators
            .iter()
            .enumerate()
            .map(|(i, g)| Conjugator::new(&self.spec.ring, g.clone(), WordTerm::generator(i)))
            .collect()
    }

    fn build_kernel(&self) -> Result<UnipotentPc<T>> {
        let ring = &self.spec.ring;
        let mut seeds = Vec::new();
        for c in self.delta_relations() {
            let w = Self::word_from_coeffs(&c)?;
            let m = self.eval(&w)?;
            debug_assert!(m.is_unitriangular());
            seeds.push((m, WordTerm::leaf(w)));
        }
        let s = self.generators.len();
        for i in 0..s {
            for j in i + 1..s {
                let w = GroupWord::generator(i).commutator(&GroupWord::generator(j));
                seeds.push((self.eval(&w)?, WordTerm::leaf(w)));
            }
        }
        UnipotentPc::generate(ring, self.n, seeds, &self.conjugators()?, self.bounds.lattice_iterations)
    }

    /// The polycyclic sequence of `S ∩ UT_n(B)`, computed on first use.
    pub fn kernel(&self) -> Result<&UnipotentPc<T>> {
        self.kernel.get_or_init(|| self.build_kernel()).as_ref().map_err(|e| e.clone())
    }

    /// `unipotent_kernel_gens`: the sequence elements with their words.
    pub fn unipotent_kernel_gens(&self) -> Result<Vec<(Matrix<T>, WordCertificate)>> {
        self.kernel()?
            .elements()
            .into_iter()
            .map(|e| Ok((e.matrix.clone(), e.word.certificate()?)))
            .collect()
    }

    /// Free rank of `Δ(S)` plus the Hirsch length of `S ∩ UT_n`.
    pub fn hirsch_length(&self) -> Result<usize> {
        Ok(self.delta_lattice.group_rank() + self.kernel()?.hirsch_length())
    }

    pub fn is_abelian(&self) -> Result<bool> {
        let ring = &self.spec.ring;
        for (i, a) in self.generators.iter().enumerate() {
            for b in &self.generators[i + 1..] {
                if a.mul(ring, b)? != b.mul(ring, a)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// A word `w` with `Δ(eval(w)) = Δ(x)`, if `Δ(x) ∈ Δ(S)`.
    pub fn delta_word(&self, x: &Matrix<T>) -> Result<Option<GroupWord>> {
        self.delta_word_for_vector(&self.delta_coordinates(x)?, 1)
    }

    /// A word `w` with `Δ(eval(w))^scale` having coordinates `target`.
    pub fn delta_word_for_vector(&self, target: &[T], scale: u64) -> Result<Option<GroupWord>> {
        let dim = self.delta_lattice.dim();
        let sc = T::from_u64_exact(scale);
        let mut gens: Vec<Vec<T>> =
            self.delta_vectors.iter().map(|v| v.iter().map(|x| x.clone() * sc.clone()).collect()).collect();
        gens.extend(self.delta_lattice.layout().relations(dim));
        let Some(c) = solve_combination(&gens, target)? else { return Ok(None) };
        Ok(Some(Self::word_from_coeffs(&c[..self.generators.len()])?))
    }

    /// `triangular_membership`.
    pub fn membership(&self, x: &Matrix<T>) -> Result<Membership> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.dim() });
        }
        let ring = &self.spec.ring;
        let Some(w) = self.delta_word(x)? else {
            return Ok(Membership::NonMember(NonMemberReason::Diagonal));
        };
        let rest = self.eval(&w)?.inverse(ring)?.mul(ring, x)?;
        match self.kernel()?.membership(&rest)? {
            Some(k) => Ok(Membership::Member(WordTerm::leaf(w).mul(&k).certificate()?)),
            None => Ok(Membership::NonMember(NonMemberReason::Unipotent)),
        }
    }

    pub fn contains(&self, x: &Matrix<T>) -> Result<bool> {
        Ok(matches!(self.membership(x)?, Membership::Member(_)))
    }
}
