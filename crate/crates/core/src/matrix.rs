//! Square matrices over `B`, their triangular shapes, the diagonal map `Δ`,
//! strip coordinates of unitriangular matrices, and words in generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{Ring, RingElement};
use crate::scalar::Scalar;

/// Default cap on the matrix dimension.
pub const DEFAULT_MAX_DIMENSION: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    General,
    Triangular,
    Unitriangular,
    Diagonal,
}

/// Classification plus the 1-based positions `(i, j)`, `i > j`, of nonzero
/// below-diagonal entries (empty unless `General`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    pub class: ShapeClass,
    pub below_support: Vec<(usize, usize)>,
}

/// Row-major `n × n` matrix with canonical entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    n: usize,
    entries: Vec<RingElement<T>>,
    shape: ShapeClass,
}

fn classify<T: Scalar>(n: usize, e: &[RingElement<T>]) -> (ShapeClass, Vec<(usize, usize)>) {
    let below: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .filter(|&(i, j)| !e[i * n + j].is_zero())
        .map(|(i, j)| (i + 1, j + 1))
        .collect();
    if !below.is_empty() {
        return (ShapeClass::General, below);
    }
    let unipotent = (0..n).all(|i| e[i * n + i].is_one());
    let diagonal = (0..n).all(|i| (i + 1..n).all(|j| e[i * n + j].is_zero()));
    let class = match (unipotent, diagonal) {
        (true, _) => ShapeClass::Unitriangular,
        (false, true) => ShapeClass::Diagonal,
        (false, false) => ShapeClass::Triangular,
    };
    (class, below)
}

impl<T: Scalar> Matrix<T> {
    pub fn from_entries(n: usize, entries: Vec<RingElement<T>>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        let shape = classify(n, &entries).0;
        Ok(Matrix { n, entries, shape })
    }

    pub fn from_rows(rows: Vec<Vec<RingElement<T>>>) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        Self::from_entries(n, rows.into_iter().flatten().collect())
    }

    /// Integer matrix.
    pub fn from_ints(ring: &Ring<T>, rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| ring.int(v)).collect()).collect())
    }

    pub fn identity(ring: &Ring<T>, n: usize) -> Self {
        let entries = (0..n * n).map(|k| if k % (n + 1) == 0 { ring.one() } else { ring.zero() }).collect();
        Matrix { n, entries, shape: ShapeClass::Unitriangular }
    }

    pub fn diagonal(ring: &Ring<T>, diag: Vec<RingElement<T>>) -> Self {
        let n = diag.len();
        let mut m = Self::identity(ring, n);
        for (i, d) in diag.into_iter().enumerate() {
            m.entries[i * n + i] = d;
        }
        m.reclassify()
    }

    /// `I + value·E_ij` (0-based).
    pub fn elementary(ring: &Ring<T>, n: usize, i: usize, j: usize, value: RingElement<T>) -> Self {
        let mut m = Self::identity(ring, n);
        m.entries[i * n + j] = ring.add(&m.entries[i * n + j], &value);
        m.reclassify()
    }

    fn reclassify(mut self) -> Self {
        self.shape = classify(self.n, &self.entries).0;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[RingElement<T>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &RingElement<T> {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<RingElement<T>>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn shape_class(&self) -> ShapeClass {
        self.shape
    }

    pub fn shape(&self) -> Shape {
        let (class, below_support) = classify(self.n, &self.entries);
        Shape { class, below_support }
    }

    pub fn is_triangular(&self) -> bool {
        self.shape != ShapeClass::General
    }

    pub fn is_unitriangular(&self) -> bool {
        self.shape == ShapeClass::Unitriangular
    }

    pub fn is_diagonal(&self) -> bool {
        self.shape == ShapeClass::Diagonal
            || (self.shape == ShapeClass::Unitriangular && self.strips_zero())
    }

    fn strips_zero(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j).is_zero()))
    }

    pub fn is_identity(&self) -> bool {
        self.is_unitriangular() && self.strips_zero()
    }

    pub fn mul(&self, ring: &Ring<T>, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let n = self.n;
        let both_upper = self.is_triangular() && other.is_triangular();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ring.zero();
                let (lo, hi) = if both_upper { (i, j + 1) } else { (0, n) };
                for k in lo..hi {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = ring.add(&acc, &ring.mul(a, b));
                    }
                }
                entries.push(acc);
            }
        }
        Matrix::from_entries(n, entries)
    }

    pub fn determinant(&self, ring: &Ring<T>) -> RingElement<T> {
        let idx: Vec<usize> = (0..self.n).collect();
        det_minor(ring, self, &idx, &idx)
    }

    pub fn inverse(&self, ring: &Ring<T>) -> Result<Matrix<T>> {
        let n = self.n;
        if self.is_triangular() {
            let diag_inv = (0..n)
                .map(|i| ring.inv(self.get(i, i)).map_err(|_| Error::NonInvertible))
                .collect::<Result<Vec<_>>>()?;
            // back substitution, column by column
            let mut out = vec![ring.zero(); n * n];
            for j in 0..n {
                out[j * n + j] = diag_inv[j].clone();
                for i in (0..j).rev() {
                    let mut acc = ring.zero();
                    for k in i + 1..=j {
                        acc = ring.add(&acc, &ring.mul(self.get(i, k), &out[k * n + j]));
                    }
                    out[i * n + j] = ring.neg(&ring.mul(&diag_inv[i], &acc));
                }
            }
            return Matrix::from_entries(n, out);
        }
        let det_inv = ring.inv(&self.determinant(ring)).map_err(|_| Error::NonInvertible)?;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let minor = det_minor(ring, self, &rows, &cols);
                let cof = if (i + j) % 2 == 0 { minor } else { ring.neg(&minor) };
                out.push(ring.mul(&cof, &det_inv));
            }
        }
        Matrix::from_entries(n, out)
    }

    pub fn pow(&self, ring: &Ring<T>, e: i64) -> Result<Matrix<T>> {
        let mut base = if e < 0 { self.inverse(ring)? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Matrix::identity(ring, self.n);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(ring, &base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(ring, &base)?;
            }
        }
        Ok(acc)
    }

    /// `a⁻¹ b⁻¹ a b`.
    pub fn commutator(&self, ring: &Ring<T>, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.inverse(ring)?.mul(ring, &other.inverse(ring)?)?.mul(ring, self)?.mul(ring, other)
    }

    /// `Δ(a)`: the diagonal of a triangular matrix.
    pub fn delta(&self, ring: &Ring<T>) -> Result<Matrix<T>> {
        if !self.is_triangular() {
            return Err(Error::NotTriangular);
        }
        Ok(Matrix::diagonal(ring, self.diagonal_entries()))
    }

    pub fn diagonal_entries(&self) -> Vec<RingElement<T>> {
        (0..self.n).map(|i| self.get(i, i).clone()).collect()
    }

    /// Entries of the `k`-th superdiagonal (1-based `k`), length `n − k`.
    pub fn strip(&self, k: usize) -> Result<Vec<RingElement<T>>> {
        if !self.is_unitriangular() {
            return Err(Error::NotUnitriangular);
        }
        if k == 0 || k >= self.n.max(1) {
            return Err(Error::DimensionMismatch { expected: self.n.saturating_sub(1), got: k });
        }
        Ok((0..self.n - k).map(|i| self.get(i, i + k).clone()).collect())
    }

    /// Does every entry of `a − I` lie in `qB`?
    pub fn congruent_identity(&self, ring: &Ring<T>, q: u64) -> Result<bool> {
        let id = Matrix::identity(ring, self.n);
        for (a, b) in self.entries.iter().zip(&id.entries) {
            if !ring.divides_level(&ring.sub(a, b), q)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn det_minor<T: Scalar>(ring: &Ring<T>, a: &Matrix<T>, rows: &[usize], cols: &[usize]) -> RingElement<T> {
    match rows.len() {
        0 => ring.one(),
        1 => a.get(rows[0], cols[0]).clone(),
        _ => {
            let mut acc = ring.zero();
            for (k, &c) in cols.iter().enumerate() {
                let x = a.get(rows[0], c);
                if x.is_zero() {
                    continue;
                }
                let sub_cols: Vec<usize> = cols.iter().cloned().filter(|&cc| cc != c).collect();
                let term = ring.mul(x, &det_minor(ring, a, &rows[1..], &sub_cols));
                acc = if k % 2 == 0 { ring.add(&acc, &term) } else { ring.sub(&acc, &term) };
            }
            acc
        }
    }
}

/// A freely reduced word `Π g_(gen)^(exp)` in indexed generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupWord {
    syllables: Vec<(usize, i64)>,
}

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord::default()
    }

    pub fn generator(i: usize) -> Self {
        GroupWord { syllables: vec![(i, 1)] }
    }

    pub fn from_syllables(s: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut w = GroupWord::identity();
        for (g, e) in s {
            w.push(g, e);
        }
        w
    }

    pub fn syllables(&self) -> &[(usize, i64)] {
        &self.syllables
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Total number of generator letters.
    pub fn letter_count(&self) -> u64 {
        self.syllables.iter().map(|(_, e)| e.unsigned_abs()).sum()
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.syllables.iter().map(|s| s.0).max()
    }

    fn push(&mut self, g: usize, e: i64) {
        if e == 0 {
            return;
        }
        if let Some(last) = self.syllables.last_mut() {
            if last.0 == g {
                last.1 += e;
                if last.1 == 0 {
                    self.syllables.pop();
                }
                return;
            }
        }
        self.syllables.push((g, e));
    }

    pub fn mul(&self, other: &GroupWord) -> GroupWord {
        let mut w = self.clone();
        for &(g, e) in &other.syllables {
            w.push(g, e);
        }
        w
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord { syllables: self.syllables.iter().rev().map(|&(g, e)| (g, -e)).collect() }
    }

    pub fn pow(&self, e: i64) -> GroupWord {
        if self.syllables.len() == 1 {
            let (g, x) = self.syllables[0];
            return GroupWord::from_syllables([(g, x * e)]);
        }
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut w = GroupWord::identity();
        for _ in 0..e.unsigned_abs() {
            w = w.mul(&base);
        }
        w
    }

    /// `a⁻¹ b⁻¹ a b`.
    pub fn commutator(&self, other: &GroupWord) -> GroupWord {
        self.inverse().mul(&other.inverse()).mul(self).mul(other)
    }

    /// Replace each generator `i` by the word `images[i]`.
    pub fn substitute(&self, images: &[GroupWord]) -> GroupWord {
        let mut w = GroupWord::identity();
        for &(g, e) in &self.syllables {
            w = w.mul(&images[g].pow(e));
        }
        w
    }

    /// Evaluate with caller-supplied group operations.
    pub fn eval_with<G, F>(&self, identity: G, mut power: F, mul: impl Fn(&G, &G) -> G) -> G
    where
        F: FnMut(usize, i64) -> G,
    {
        let mut acc = identity;
        for &(g, e) in &self.syllables {
            acc = mul(&acc, &power(g, e));
        }
        acc
    }

    pub fn eval<T: Scalar>(&self, ring: &Ring<T>, gens: &[Matrix<T>], n: usize) -> Result<Matrix<T>> {
        if let Some(g) = self.max_generator() {
            if g >= gens.len() {
                return Err(Error::InvalidInput(format!("word uses generator {g} of {}", gens.len())));
            }
        }
        let inverses = gens
            .iter()
            .enumerate()
            .map(|(i, g)| if self.syllables.iter().any(|s| s.0 == i && s.1 < 0) { g.inverse(ring).map(Some) } else { Ok(None) })
            .collect::<Result<Vec<_>>>()?;
        let mut acc = Matrix::identity(ring, n);
        for &(g, e) in &self.syllables {
            let base = if e < 0 { inverses[g].as_ref().unwrap() } else { &gens[g] };
            acc = acc.mul(ring, &base.pow(ring, e.abs())?)?;
        }
        Ok(acc)
    }
}

/// One step of a [`WordProgram`]; operands refer to earlier steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordStep {
    Word(GroupWord),
    Mul(usize, usize),
    Pow(usize, i64),
}

/// A straight-line program for a word: the value of the last step. Used
/// when the flattened word would be too long to write down.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordProgram {
    steps: Vec<WordStep>,
}

impl WordProgram {
    /// Checks that every operand refers to an earlier step.
    pub fn new(steps: Vec<WordStep>) -> Result<Self> {
        for (i, st) in steps.iter().enumerate() {
            let ok = match *st {
                WordStep::Word(_) => true,
                WordStep::Mul(a, b) => a < i && b < i,
                WordStep::Pow(a, _) => a < i,
            };
            if !ok {
                return Err(Error::InvalidInput(format!("program step {i} refers forward")));
            }
        }
        Ok(WordProgram { steps })
    }

    pub fn steps(&self) -> &[WordStep] {
        &self.steps
    }

    fn run<V>(&self, leaf: impl Fn(&GroupWord) -> Result<V>, mul: impl Fn(&V, &V) -> Result<V>, pow: impl Fn(&V, i64) -> Result<V>, identity: V) -> Result<V>
    where
        V: Clone,
    {
        let mut vals: Vec<V> = Vec::with_capacity(self.steps.len());
        for (i, st) in self.steps.iter().enumerate() {
            let v = match *st {
                WordStep::Word(ref w) => leaf(w)?,
                WordStep::Mul(a, b) if a < i && b < i => mul(&vals[a], &vals[b])?,
                WordStep::Pow(a, e) if a < i => pow(&vals[a], e)?,
                _ => return Err(Error::InvalidInput(format!("program step {i} refers forward"))),
            };
            vals.push(v);
        }
        Ok(vals.pop().unwrap_or(identity))
    }

    pub fn eval<T: Scalar>(&self, ring: &Ring<T>, gens: &[Matrix<T>], n: usize) -> Result<Matrix<T>> {
        self.run(
            |w| w.eval(ring, gens, n),
            |a, b| a.mul(ring, b),
            |a, e| a.pow(ring, e),
            Matrix::identity(ring, n),
        )
    }

    /// Exponent sum of each of `gens` generators: the image in `Z^gens`.
    pub fn exponent_sums<T: Scalar>(&self, gens: usize) -> Result<Vec<T>> {
        self.run(
            |w| Ok(word_exponent_sums(w, gens)),
            |a, b| Ok(a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()),
            |a, e| Ok(a.iter().map(|x| x.clone() * T::from_i64_exact(e)).collect()),
            vec![T::zero(); gens],
        )
    }
}

fn word_exponent_sums<T: Scalar>(w: &GroupWord, gens: usize) -> Vec<T> {
    let mut v = vec![T::zero(); gens];
    for &(g, e) in w.syllables() {
        if g < gens {
            v[g] = v[g].clone() + T::from_i64_exact(e);
        }
    }
    v
}

/// A membership certificate: a flat word when it fits, else a program.
/// Serialized untagged: a word is a list of pairs, a program a list of steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordCertificate {
    Word(GroupWord),
    Program(WordProgram),
}

impl WordCertificate {
    pub fn eval<T: Scalar>(&self, ring: &Ring<T>, gens: &[Matrix<T>], n: usize) -> Result<Matrix<T>> {
        match self {
            WordCertificate::Word(w) => w.eval(ring, gens, n),
            WordCertificate::Program(p) => p.eval(ring, gens, n),
        }
    }

    pub fn exponent_sums<T: Scalar>(&self, gens: usize) -> Result<Vec<T>> {
        match self {
            WordCertificate::Word(w) => Ok(word_exponent_sums(w, gens)),
            WordCertificate::Program(p) => p.exponent_sums(gens),
        }
    }

    pub fn as_word(&self) -> Option<&GroupWord> {
        match self {
            WordCertificate::Word(w) => Some(w),
            WordCertificate::Program(_) => None,
        }
    }
}

impl From<GroupWord> for WordCertificate {
    fn from(w: GroupWord) -> Self {
        WordCertificate::Word(w)
    }
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

    fn d(ring: &R, a: i64, b: i64) -> Matrix<BigInt> {
        Matrix::diagonal(ring, vec![ring.int(a), ring.int(b)])
    }

    #[test]
    fn arithmetic_examples() {
        let z = R::rationals_localized(1);
        assert_eq!(u(&z, 1).mul(&z, &u(&z, 2)).unwrap(), u(&z, 3));
        let zh = R::rationals_localized(2);
        let inv = d(&zh, 2, 1).inverse(&zh).unwrap();
        assert_eq!(inv, Matrix::diagonal(&zh, vec![zh.fraction(1, 1), zh.one()]));
        assert_eq!(d(&z, 2, 1).inverse(&z), Err(Error::NonInvertible));
        let g = Matrix::from_ints(&z, &[&[2, 1], &[1, 1]]).unwrap();
        let gi = g.inverse(&z).unwrap();
        assert!(g.mul(&z, &gi).unwrap().is_identity());
        assert_eq!(Matrix::from_ints(&z, &[&[2, 0], &[0, 1]]).unwrap().determinant(&z), z.int(2));
    }

    #[test]
    fn shape_examples() {
        let z = R::rationals_localized(1);
        let s = Matrix::from_ints(&z, &[&[1, 0], &[1, 1]]).unwrap().shape();
        assert_eq!(s, Shape { class: ShapeClass::General, below_support: vec![(2, 1)] });
        assert_eq!(u(&z, 5).shape_class(), ShapeClass::Unitriangular);
        assert_eq!(d(&z, -1, 1).shape_class(), ShapeClass::Diagonal);
        let t = Matrix::from_ints(&z, &[&[-1, 3], &[0, 1]]).unwrap();
        assert_eq!(t.shape_class(), ShapeClass::Triangular);
        assert!(Matrix::identity(&z, 3).is_diagonal());
    }

    #[test]
    fn delta_and_strips() {
        let z = R::rationals_localized(1);
        let a = Matrix::from_ints(&z, &[&[2, 7], &[0, 3]]).unwrap();
        assert_eq!(a.delta(&z).unwrap(), d(&z, 2, 3));
        assert!(u(&z, 9).delta(&z).unwrap().is_identity());
        let g = Matrix::from_ints(&z, &[&[1, 0], &[1, 1]]).unwrap();
        assert_eq!(g.delta(&z), Err(Error::NotTriangular));
        let x = Matrix::from_ints(&z, &[&[1, 4, 8], &[0, 1, 4], &[0, 0, 1]]).unwrap();
        assert_eq!(x.strip(1).unwrap(), vec![z.int(4), z.int(4)]);
        assert_eq!(x.strip(2).unwrap(), vec![z.int(8)]);
        let id = Matrix::identity(&z, 3);
        assert!(id.strip(1).unwrap().iter().all(|e| e.is_zero()));
        assert_eq!(a.strip(1), Err(Error::NotUnitriangular));
    }

    #[test]
    fn words_reduce_and_evaluate() {
        let z = R::rationals_localized(1);
        let w = GroupWord::from_syllables([(0, 2), (1, 1), (1, -1), (0, -1)]);
        assert_eq!(w.syllables(), &[(0, 1)]);
        let gens = vec![u(&z, 1), d(&z, -1, 1)];
        let w = GroupWord::generator(0).pow(3).mul(&GroupWord::generator(1)).mul(&GroupWord::generator(0).inverse());
        let got = w.eval(&z, &gens, 2).unwrap();
        let direct = u(&z, 3).mul(&z, &d(&z, -1, 1)).unwrap().mul(&z, &u(&z, -1)).unwrap();
        assert_eq!(got, direct);
        assert!(w.mul(&w.inverse()).is_identity());
        assert!(GroupWord::generator(5).eval(&z, &gens, 2).is_err());
    }

    fn arb_tri(n: usize) -> impl Strategy<Value = (Vec<i64>, Vec<bool>, Vec<u32>)> {
        (
            prop::collection::vec(-4i64..=4, n * n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(0u32..3, n),
        )
    }

    fn build(ring: &R, n: usize, spec: &(Vec<i64>, Vec<bool>, Vec<u32>)) -> Matrix<BigInt> {
        let (off, signs, pows) = spec;
        let mut rows = vec![vec![ring.zero(); n]; n];
        for i in 0..n {
            let mut dgl = ring.pow(&ring.int(2), pows[i] as i64 - 1).unwrap();
            if signs[i] {
                dgl = ring.neg(&dgl);
            }
            rows[i][i] = dgl;
            for j in i + 1..n {
                rows[i][j] = ring.fraction(off[i * n + j], (off[j * n + i].unsigned_abs() % 2) as u32);
            }
        }
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn program_matches_flattened_word() {
        let z = R::rationals_localized(1);
        let gens = [u(&z, 1), d(&z, -1, 1)];
        let base = GroupWord::from_syllables([(0, 2), (1, 1)]);
        let prog = WordProgram::new(vec![
            WordStep::Word(base.clone()),
            WordStep::Pow(0, 3),
            WordStep::Mul(1, 0),
        ])
        .unwrap();
        let flat: Vec<(usize, i64)> = std::iter::repeat(base.syllables().to_vec()).take(4).flatten().collect();
        let flat = GroupWord::from_syllables(flat);
        assert_eq!(prog.eval(&z, &gens, 2).unwrap(), flat.eval(&z, &gens, 2).unwrap());
        assert_eq!(prog.exponent_sums::<BigInt>(2).unwrap(), vec![BigInt::from(8), BigInt::from(4)]);
        assert!(WordProgram::new(vec![WordStep::Mul(0, 1)]).is_err());

        let cert = WordCertificate::Program(prog);
        let back: WordCertificate = serde_json::from_str(&serde_json::to_string(&cert).unwrap()).unwrap();
        assert_eq!(back, cert);
        let word: WordCertificate = flat.into();
        let back: WordCertificate = serde_json::from_str(&serde_json::to_string(&word).unwrap()).unwrap();
        assert_eq!(back, word);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn group_axioms_and_delta(a in arb_tri(3), b in arb_tri(3), c in arb_tri(3)) {
            let ring = R::rationals_localized(2);
            let (a, b, c) = (build(&ring, 3, &a), build(&ring, 3, &b), build(&ring, 3, &c));
            let ab = a.mul(&ring, &b).unwrap();
            prop_assert_eq!(ab.mul(&ring, &c).unwrap(), a.mul(&ring, &b.mul(&ring, &c).unwrap()).unwrap());
            prop_assert!(a.mul(&ring, &a.inverse(&ring).unwrap()).unwrap().is_identity());
            let dab = ab.delta(&ring).unwrap();
            prop_assert_eq!(&dab, &a.delta(&ring).unwrap().mul(&ring, &b.delta(&ring).unwrap()).unwrap());
            prop_assert_eq!(dab.is_identity(), ab.is_unitriangular());
        }

        #[test]
        fn first_strip_is_additive(x in prop::collection::vec(-9i64..=9, 6), y in prop::collection::vec(-9i64..=9, 6)) {
            let ring = R::rationals_localized(1);
            let mk = |v: &[i64]| Matrix::from_ints(&ring, &[&[1, v[0], v[1]], &[0, 1, v[2]], &[0, 0, 1]]).unwrap();
            let (a, b) = (mk(&x), mk(&y));
            let s = a.mul(&ring, &b).unwrap().strip(1).unwrap();
            let expected: Vec<_> = a.strip(1).unwrap().iter().zip(b.strip(1).unwrap()).map(|(p, q)| ring.add(p, &q)).collect();
            prop_assert_eq!(s, expected);
        }

        #[test]
        fn general_inverse(v in prop::collection::vec(-3i64..=3, 9)) {
            let ring = R::rationals_localized(1);
            let a = Matrix::from_ints(&ring, &[&v[0..3], &v[3..6], &v[6..9]]).unwrap();
            let det = a.determinant(&ring);
            match a.inverse(&ring) {
                Ok(ai) => prop_assert!(ai.mul(&ring, &a).unwrap().is_identity()),
                Err(e) => {
                    prop_assert_eq!(e, Error::NonInvertible);
                    prop_assert!(det != ring.one() && det != ring.int(-1));
                }
            }
        }
    }
}
