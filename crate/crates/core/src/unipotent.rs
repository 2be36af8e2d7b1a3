//! Subgroups of `UT_n(B)` through their strip filtration.
//!
//! `K_k` is the set of elements of `K` whose strips below `k` vanish. On
//! `K_k` the `k`-th strip is additive, so `K_k / K_(k+1)` embeds in the
//! additive group of strip vectors, a lattice after scaling by `m^E`. A
//! sequence stores, per level, elements whose strips form an echelon basis
//! of that lattice; every element of `K` is then uniquely an ordered product
//! of their powers, read off level by level ("sifting").

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::{GroupWord, Matrix, WordCertificate, WordProgram, WordStep};
use crate::ring::Ring;
use crate::scalar::Scalar;

/// Longest flattened word the crate will materialize.
pub const WORD_LENGTH_CAP: usize = 1 << 20;

#[derive(Debug)]
enum WordNode {
    Leaf(GroupWord),
    Mul(WordTerm, WordTerm),
    Pow(WordTerm, i64),
}

#[derive(Debug)]
struct Node {
    kind: WordNode,
    /// Upper bound on the flattened syllable count.
    len: u64,
}

/// A word kept as a shared expression; flattening is deferred until a
/// certificate is actually requested.
#[derive(Clone, Debug)]
pub struct WordTerm(Arc<Node>);

impl WordTerm {
    pub fn leaf(w: GroupWord) -> Self {
        let len = w.syllables().len() as u64;
        WordTerm(Arc::new(Node { kind: WordNode::Leaf(w), len }))
    }

    pub fn identity() -> Self {
        Self::leaf(GroupWord::identity())
    }

    pub fn generator(i: usize) -> Self {
        Self::leaf(GroupWord::generator(i))
    }

    pub fn mul(&self, other: &WordTerm) -> Self {
        if self.0.len == 0 {
            return other.clone();
        }
        if other.0.len == 0 {
            return self.clone();
        }
        let len = self.0.len.saturating_add(other.0.len);
        WordTerm(Arc::new(Node { kind: WordNode::Mul(self.clone(), other.clone()), len }))
    }

    pub fn pow(&self, e: i64) -> Self {
        if e == 1 {
            return self.clone();
        }
        let len = match (e, self.0.len) {
            (0, _) => 0,
            (_, l) if l <= 1 => l,
            (_, l) => l.saturating_mul(e.unsigned_abs()),
        };
        WordTerm(Arc::new(Node { kind: WordNode::Pow(self.clone(), e), len }))
    }

    pub fn inverse(&self) -> Self {
        self.pow(-1)
    }

    /// Upper bound on the length of [`flatten`](Self::flatten).
    pub fn len_bound(&self) -> u64 {
        self.0.len
    }

    /// The flat word if it fits under [`WORD_LENGTH_CAP`], else a program.
    pub fn certificate(&self) -> Result<WordCertificate> {
        if self.len_bound() <= WORD_LENGTH_CAP as u64 {
            return self.flatten().map(WordCertificate::Word);
        }
        match self.flatten() {
            Ok(w) => Ok(WordCertificate::Word(w)),
            Err(e) if e.is_budget() => Ok(WordCertificate::Program(self.program())),
            Err(e) => Err(e),
        }
    }

    /// The expression as a straight-line program, shared subterms once.
    pub fn program(&self) -> WordProgram {
        let mut steps = Vec::new();
        let mut memo = HashMap::new();
        self.emit(&mut steps, &mut memo);
        WordProgram::new(steps).expect("operands precede their uses")
    }

    fn emit(&self, steps: &mut Vec<WordStep>, memo: &mut HashMap<usize, usize>) -> usize {
        let key = Arc::as_ptr(&self.0) as usize;
        if let Some(&i) = memo.get(&key) {
            return i;
        }
        let st = match &self.0.kind {
            WordNode::Leaf(w) => WordStep::Word(w.clone()),
            WordNode::Mul(a, b) => {
                let (a, b) = (a.emit(steps, memo), b.emit(steps, memo));
                WordStep::Mul(a, b)
            }
            WordNode::Pow(a, e) => WordStep::Pow(a.emit(steps, memo), *e),
        };
        steps.push(st);
        memo.insert(key, steps.len() - 1);
        steps.len() - 1
    }

    pub fn flatten(&self) -> Result<GroupWord> {
        let mut memo = HashMap::new();
        self.flatten_memo(&mut memo)
    }

    fn flatten_memo(&self, memo: &mut HashMap<usize, GroupWord>) -> Result<GroupWord> {
        let key = Arc::as_ptr(&self.0) as usize;
        if let Some(w) = memo.get(&key) {
            return Ok(w.clone());
        }
        let w = match &self.0.kind {
            WordNode::Leaf(w) => w.clone(),
            WordNode::Mul(a, b) => {
                let (a, b) = (a.flatten_memo(memo)?, b.flatten_memo(memo)?);
                if a.syllables().len() + b.syllables().len() > WORD_LENGTH_CAP {
                    return Err(Error::BudgetExceeded { what: "membership word length", budget: WORD_LENGTH_CAP });
                }
                a.mul(&b)
            }
            WordNode::Pow(a, e) => {
                let a = a.flatten_memo(memo)?;
                if a.syllables().len() > 1
                    && (a.syllables().len() as u128) * (e.unsigned_abs() as u128) > WORD_LENGTH_CAP as u128
                {
                    return Err(Error::BudgetExceeded { what: "membership word length", budget: WORD_LENGTH_CAP });
                }
                a.pow(*e)
            }
        };
        memo.insert(key, w.clone());
        Ok(w)
    }
}

#[derive(Clone, Debug)]
pub struct PcElement<T> {
    pub matrix: Matrix<T>,
    pub inverse: Matrix<T>,
    pub word: WordTerm,
}

impl<T: Scalar> PcElement<T> {
    fn power(&self, ring: &Ring<T>, k: i64) -> Result<Self> {
        Ok(match k {
            1 => self.clone(),
            -1 => PcElement { matrix: self.inverse.clone(), inverse: self.matrix.clone(), word: self.word.inverse() },
            _ => PcElement {
                matrix: pow_with_inverse(ring, self, k)?,
                inverse: pow_with_inverse(ring, self, -k)?,
                word: self.word.pow(k),
            },
        })
    }

    fn times(&self, ring: &Ring<T>, other: &Self) -> Result<Self> {
        Ok(PcElement {
            matrix: self.matrix.mul(ring, &other.matrix)?,
            inverse: other.inverse.mul(ring, &self.inverse)?,
            word: self.word.mul(&other.word),
        })
    }
}

#[derive(Clone, Debug)]
struct StripLevel<T> {
    scale_exp: u32,
    rows: Vec<Vec<T>>,
    elems: Vec<PcElement<T>>,
}

impl<T: Scalar> StripLevel<T> {
    /// Brings entries above each pivot into `(-pivot/2, pivot/2]`.
    fn reduce(&mut self, ring: &Ring<T>) -> Result<()> {
        for j in 0..self.rows.len() {
            let p = pivot(&self.rows[j]);
            let d = self.rows[j][p].clone();
            for i in 0..j {
                let q = centered_quotient(&self.rows[i][p], &d);
                if q.is_zero() {
                    continue;
                }
                self.rows[i] = combine(&self.rows[i], &T::one(), &self.rows[j], &-q.clone());
                let e = self.elems[j].power(ring, -to_exponent(&q)?)?;
                self.elems[i] = self.elems[i].times(ring, &e)?;
            }
        }
        Ok(())
    }
}

/// Result of sifting: coefficients per level passed, and the leftover
/// element with the level where it first failed, if any.
#[derive(Clone, Debug)]
pub struct SiftTrace<T> {
    pub coeffs: Vec<Vec<T>>,
    pub residual: Option<(usize, Matrix<T>)>,
}

/// A conjugating element with its inverse and word.
#[derive(Clone, Debug)]
pub struct Conjugator<T> {
    pub matrix: Matrix<T>,
    pub inverse: Matrix<T>,
    pub word: WordTerm,
}

impl<T: Scalar> Conjugator<T> {
    pub fn new(ring: &Ring<T>, matrix: Matrix<T>, word: WordTerm) -> Result<Self> {
        let inverse = matrix.inverse(ring)?;
        Ok(Conjugator { matrix, inverse, word })
    }
}

#[derive(Clone, Debug)]
pub struct UnipotentPc<T> {
    ring: Ring<T>,
    n: usize,
    levels: Vec<StripLevel<T>>,
}

fn to_exponent<T: Scalar>(c: &T) -> Result<i64> {
    c.to_i64().ok_or(Error::BudgetExceeded { what: "exponent outside i64", budget: i64::MAX as usize })
}

impl<T: Scalar> UnipotentPc<T> {
    pub fn trivial(ring: &Ring<T>, n: usize) -> Self {
        let levels = (1..n.max(1)).map(|_| StripLevel { scale_exp: 0, rows: vec![], elems: vec![] }).collect();
        UnipotentPc { ring: ring.clone(), n, levels }
    }

    /// The subgroup generated by `seeds`, closed under conjugation by
    /// `conjugators` (so it is their normal closure when the conjugators
    /// generate an overgroup).
    pub fn generate(
        ring: &Ring<T>,
        n: usize,
        seeds: Vec<(Matrix<T>, WordTerm)>,
        conjugators: &[Conjugator<T>],
        max_rounds: usize,
    ) -> Result<Self> {
        let mut pc = Self::trivial(ring, n);
        for (m, w) in seeds {
            pc.insert(m, w)?;
        }
        pc.saturate(conjugators, max_rounds)?;
        Ok(pc)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> &Ring<T> {
        &self.ring
    }

    pub fn hirsch_length(&self) -> usize {
        self.levels.iter().map(|l| l.rows.len()).sum()
    }

    pub fn level_ranks(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.rows.len()).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.hirsch_length() == 0
    }

    /// Elements in level order; for an abelian group these form a basis.
    pub fn elements(&self) -> Vec<&PcElement<T>> {
        self.levels.iter().flat_map(|l| l.elems.iter()).collect()
    }

    /// `(scale exponent E, echelon rows)` of strip `k` (1-based), rows scaled by `m^E`.
    pub fn strip_lattice(&self, k: usize) -> (u32, &[Vec<T>]) {
        let l = &self.levels[k - 1];
        (l.scale_exp, &l.rows)
    }

    pub fn is_abelian(&self) -> Result<bool> {
        let els = self.elements();
        for (i, a) in els.iter().enumerate() {
            for b in &els[i + 1..] {
                if a.matrix.mul(&self.ring, &b.matrix)? != b.matrix.mul(&self.ring, &a.matrix)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn strip_vector(&self, u: &Matrix<T>, level: usize) -> Result<(Vec<T>, u32)> {
        let strip = u.strip(level + 1)?;
        let need = strip.iter().map(|e| e.denom_exp()).max().unwrap_or(0);
        let scale = need.max(self.levels[level].scale_exp);
        let m = T::from_u64_exact(self.ring.modulus());
        let mut v = Vec::with_capacity(strip.len() * self.ring.degree());
        for e in &strip {
            let f = num_traits::pow(m.clone(), (scale - e.denom_exp()) as usize);
            v.extend(e.coeffs().iter().map(|c| c.clone() * f.clone()));
        }
        Ok((v, scale))
    }

    fn rescale(&mut self, level: usize, scale: u32) {
        let l = &mut self.levels[level];
        if scale > l.scale_exp {
            let f = num_traits::pow(T::from_u64_exact(self.ring.modulus()), (scale - l.scale_exp) as usize);
            for row in &mut l.rows {
                for x in row.iter_mut() {
                    *x = x.clone() * f.clone();
                }
            }
            l.scale_exp = scale;
        }
    }

    /// Coefficients of `v` (scaled by `m^scale`, `scale` at least the level's) in the level's rows.
    fn solve_level(&self, level: usize, v: &[T], scale: u32) -> Option<Vec<T>> {
        let l = &self.levels[level];
        if scale == l.scale_exp {
            return reduce_against(&l.rows, v.to_vec());
        }
        let f = num_traits::pow(T::from_u64_exact(self.ring.modulus()), (scale - l.scale_exp) as usize);
        let rows: Vec<Vec<T>> = l.rows.iter().map(|r| r.iter().map(|x| x.clone() * f.clone()).collect()).collect();
        reduce_against(&rows, v.to_vec())
    }

    fn product(&self, level: usize, coeffs: &[T]) -> Result<(Matrix<T>, Matrix<T>, WordTerm)> {
        let mut mat = Matrix::identity(&self.ring, self.n);
        let mut word = WordTerm::identity();
        for (c, e) in coeffs.iter().zip(&self.levels[level].elems) {
            if c.is_zero() {
                continue;
            }
            let k = to_exponent(c)?;
            mat = mat.mul(&self.ring, &pow_with_inverse(&self.ring, e, k)?)?;
            word = word.mul(&e.word.pow(k));
        }
        let inv = mat.inverse(&self.ring)?;
        Ok((mat, inv, word))
    }

    pub fn sift(&self, u: &Matrix<T>) -> Result<SiftTrace<T>> {
        if !u.is_unitriangular() {
            return Err(Error::NotUnitriangular);
        }
        let mut cur = u.clone();
        let mut coeffs = Vec::new();
        for level in 0..self.levels.len() {
            let (v, scale) = self.strip_vector(&cur, level)?;
            if v.iter().all(|x| x.is_zero()) {
                coeffs.push(vec![T::zero(); self.levels[level].elems.len()]);
                continue;
            }
            match self.solve_level(level, &v, scale) {
                Some(c) => {
                    let (_, inv, _) = self.product(level, &c)?;
                    cur = inv.mul(&self.ring, &cur)?;
                    coeffs.push(c);
                }
                None => return Ok(SiftTrace { coeffs, residual: Some((level, cur)) }),
            }
        }
        debug_assert!(cur.is_identity());
        Ok(SiftTrace { coeffs, residual: None })
    }

    pub fn contains(&self, u: &Matrix<T>) -> Result<bool> {
        Ok(self.sift(u)?.residual.is_none())
    }

    /// A word for `u` in the element words, if `u` is a member.
    pub fn membership(&self, u: &Matrix<T>) -> Result<Option<WordTerm>> {
        let trace = self.sift(u)?;
        if trace.residual.is_some() {
            return Ok(None);
        }
        let mut word = WordTerm::identity();
        for (level, c) in trace.coeffs.iter().enumerate() {
            word = word.mul(&self.product(level, c)?.2);
        }
        Ok(Some(word))
    }

    /// Concatenated level coefficients of a member.
    pub fn coordinates(&self, u: &Matrix<T>) -> Result<Option<Vec<T>>> {
        let trace = self.sift(u)?;
        if trace.residual.is_some() {
            return Ok(None);
        }
        Ok(Some(trace.coeffs.into_iter().flatten().collect()))
    }

    /// Adjoins `u`; returns whether the generated group grew.
    ///
    /// A candidate that agrees with a sequence element modulo deeper levels
    /// but has a shorter word replaces it; the quotient is pushed deeper.
    pub fn insert(&mut self, u: Matrix<T>, word: WordTerm) -> Result<bool> {
        let mut queue = vec![(u, word)];
        let mut changed = false;
        'outer: while let Some((mut cur, mut w)) = queue.pop() {
            for level in 0..self.levels.len() {
                let (v, scale) = self.strip_vector(&cur, level)?;
                if v.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let Some(c) = self.solve_level(level, &v, scale) else {
                    changed = true;
                    queue.extend(self.add_at_level(level, cur, w)?);
                    self.normalize()?;
                    continue 'outer;
                };
                if let Some((i, sign)) = unit_coefficient(&c) {
                    if w.len_bound() < self.levels[level].elems[i].word.len_bound() {
                        let inv = cur.inverse(&self.ring)?;
                        let (matrix, inverse) = if sign > 0 { (cur, inv) } else { (inv, cur) };
                        let word = w.pow(sign);
                        let rest = inverse.mul(&self.ring, &self.levels[level].elems[i].matrix)?;
                        let rest_word = word.inverse().mul(&self.levels[level].elems[i].word);
                        self.levels[level].elems[i] = PcElement { matrix, inverse, word };
                        if !rest.is_identity() {
                            queue.push((rest, rest_word));
                        }
                        self.normalize()?;
                        continue 'outer;
                    }
                }
                let (_, inv, pw) = self.product(level, &c)?;
                cur = inv.mul(&self.ring, &cur)?;
                w = pw.inverse().mul(&w);
            }
        }
        Ok(changed)
    }

    /// Folds a new element into one level's echelon basis by 2×2 unimodular
    /// steps, keeping exponents as small as the pivots allow. What is left
    /// once every pivot is cleared lies deeper and is returned.
    fn add_at_level(&mut self, level: usize, u: Matrix<T>, word: WordTerm) -> Result<Vec<(Matrix<T>, WordTerm)>> {
        let (_, scale) = self.strip_vector(&u, level)?;
        self.rescale(level, scale);
        let (mut v, _) = self.strip_vector(&u, level)?;
        let inverse = u.inverse(&self.ring)?;
        let mut cand = PcElement { matrix: u, inverse, word };
        let ring = self.ring.clone();
        let l = &mut self.levels[level];
        for p in 0..v.len() {
            if v[p].is_zero() {
                continue;
            }
            let k = l.rows.iter().position(|r| pivot(r) >= p);
            let Some(k) = k.filter(|&k| pivot(&l.rows[k]) == p) else {
                if v[p].is_negative() {
                    v = v.iter().map(|x| -x.clone()).collect();
                    cand = cand.power(&ring, -1)?;
                }
                let at = k.unwrap_or(l.rows.len());
                l.rows.insert(at, v);
                l.elems.insert(at, cand);
                l.reduce(&ring)?;
                return Ok(vec![]);
            };
            let a = l.rows[k][p].clone();
            let b = v[p].clone();
            let row = l.rows[k].clone();
            let el = l.elems[k].clone();
            if b.is_multiple_of(&a) {
                let q = b.div_floor(&a);
                v = combine(&v, &T::one(), &row, &-q.clone());
                cand = cand.times(&ring, &el.power(&ring, -to_exponent(&q)?)?)?;
            } else if a.is_multiple_of(&b) {
                let sgn = if b.is_negative() { -T::one() } else { T::one() };
                let new_row: Vec<T> = v.iter().map(|x| x.clone() * sgn.clone()).collect();
                let new_el = cand.power(&ring, to_exponent(&sgn)?)?;
                let q = a.div_floor(&b.abs());
                v = combine(&row, &T::one(), &new_row, &-q.clone());
                cand = el.times(&ring, &new_el.power(&ring, -to_exponent(&q)?)?)?;
                l.rows[k] = new_row;
                l.elems[k] = new_el;
            } else {
                let (g, s_, t_) = crate::lattice::ext_gcd(&a, &b);
                let (ag, bg) = (a.div_floor(&g), b.div_floor(&g));
                let new_row = combine(&row, &s_, &v, &t_);
                let new_el = el.power(&ring, to_exponent(&s_)?)?.times(&ring, &cand.power(&ring, to_exponent(&t_)?)?)?;
                v = combine(&v, &ag, &row, &-bg.clone());
                cand = cand.power(&ring, to_exponent(&ag)?)?.times(&ring, &el.power(&ring, -to_exponent(&bg)?)?)?;
                l.rows[k] = new_row;
                l.elems[k] = new_el;
            }
        }
        debug_assert!(v.iter().all(|x| x.is_zero()));
        l.reduce(&ring)?;
        if cand.matrix.is_identity() {
            Ok(vec![])
        } else {
            Ok(vec![(cand.matrix, cand.word)])
        }
    }

    /// Size-reduces the deeper strips of every element against the deeper
    /// levels, deepest level first. The generated group is unchanged.
    fn normalize(&mut self) -> Result<()> {
        for level in (0..self.levels.len()).rev() {
            for i in 0..self.levels[level].elems.len() {
                let e = self.size_reduce(self.levels[level].elems[i].clone(), level)?;
                self.levels[level].elems[i] = e;
            }
        }
        Ok(())
    }

    fn size_reduce(&self, mut e: PcElement<T>, level: usize) -> Result<PcElement<T>> {
        let m = T::from_u64_exact(self.ring.modulus());
        for deeper in level + 1..self.levels.len() {
            let l = &self.levels[deeper];
            if l.rows.is_empty() {
                continue;
            }
            let (mut v, scale) = self.strip_vector(&e.matrix, deeper)?;
            if v.iter().all(|x| x.is_zero()) {
                continue;
            }
            let f = num_traits::pow(m.clone(), (scale - l.scale_exp) as usize);
            for (row, el) in l.rows.iter().zip(&l.elems) {
                let row: Vec<T> = row.iter().map(|x| x.clone() * f.clone()).collect();
                let p = pivot(&row);
                let q = centered_quotient(&v[p], &row[p]);
                if q.is_zero() {
                    continue;
                }
                v = combine(&v, &T::one(), &row, &-q.clone());
                e = e.times(&self.ring, &el.power(&self.ring, -to_exponent(&q)?)?)?;
            }
        }
        Ok(e)
    }

    /// Closes under mutual conjugation of the elements and conjugation by
    /// `conjugators`, one full pass per round until a pass adds nothing.
    pub fn saturate(&mut self, conjugators: &[Conjugator<T>], max_rounds: usize) -> Result<()> {
        for _ in 0..max_rounds.max(1) {
            self.normalize()?;
            let snapshot: Vec<PcElement<T>> = self.elements().into_iter().cloned().collect();
            let mut changed = false;
            let others = snapshot
                .iter()
                .map(|a| Conjugator { matrix: a.matrix.clone(), inverse: a.inverse.clone(), word: a.word.clone() })
                .chain(conjugators.iter().cloned())
                .collect::<Vec<_>>();
            for b in &snapshot {
                for a in &others {
                    let fwd = a.matrix.mul(&self.ring, &b.matrix)?.mul(&self.ring, &a.inverse)?;
                    if !fwd.is_identity() && fwd != b.matrix {
                        let w = a.word.mul(&b.word).mul(&a.word.inverse());
                        changed |= self.insert(fwd, w)?;
                    }
                    let back = a.inverse.mul(&self.ring, &b.matrix)?.mul(&self.ring, &a.matrix)?;
                    if !back.is_identity() && back != b.matrix {
                        let w = a.word.inverse().mul(&b.word).mul(&a.word);
                        changed |= self.insert(back, w)?;
                    }
                }
            }
            if !changed {
                return self.normalize();
            }
        }
        Err(Error::NonPolycyclicSuspected { iterations: max_rounds })
    }
}

fn pow_with_inverse<T: Scalar>(ring: &Ring<T>, e: &PcElement<T>, k: i64) -> Result<Matrix<T>> {
    if k < 0 {
        e.inverse.pow(ring, -k)
    } else {
        e.matrix.pow(ring, k)
    }
}

/// `q` with `x − q·d` in `(-d/2, d/2]`, for `d > 0`.
fn centered_quotient<T: Scalar>(x: &T, d: &T) -> T {
    let q = x.div_floor(d);
    if (x.clone() - q.clone() * d.clone()) * T::from_u64_exact(2) > *d {
        q + T::one()
    } else {
        q
    }
}

fn pivot<T: Scalar>(row: &[T]) -> usize {
    row.iter().position(|x| !x.is_zero()).expect("echelon rows are nonzero")
}

/// `x·a + y·b`.
fn combine<T: Scalar>(a: &[T], x: &T, b: &[T], y: &T) -> Vec<T> {
    a.iter().zip(b).map(|(p, q)| p.clone() * x.clone() + q.clone() * y.clone()).collect()
}

/// `(i, ±1)` when `c` is a signed unit vector.
fn unit_coefficient<T: Scalar>(c: &[T]) -> Option<(usize, i64)> {
    let mut hit = None;
    for (i, x) in c.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        if hit.is_some() || !x.abs().is_one() {
            return None;
        }
        hit = Some((i, if x.is_positive() { 1 } else { -1 }));
    }
    hit
}

/// Exact reduction against echelon rows (pivots strictly increasing).
fn reduce_against<T: Scalar>(rows: &[Vec<T>], mut v: Vec<T>) -> Option<Vec<T>> {
    let mut coeffs = Vec::with_capacity(rows.len());
    for row in rows {
        let p = row.iter().position(|x| !x.is_zero()).expect("echelon rows are nonzero");
        if v[..p].iter().any(|x| !x.is_zero()) {
            return None;
        }
        let (q, rem) = v[p].div_rem(&row[p]);
        if !rem.is_zero() {
            return None;
        }
        for (x, y) in v.iter_mut().zip(row) {
            *x = x.clone() - q.clone() * y.clone();
        }
        coeffs.push(q);
    }
    if v.iter().all(|x| x.is_zero()) {
        Some(coeffs)
    } else {
        None
    }
}

/// `y` with `y^r = x` in `UT_n(B)`, if the strip-by-strip solve stays in `B`.
///
/// With the strips of `N = y − I` below `k` fixed, the `k`-th strip of
/// `(I + N)^r` is that of `(I + N_(<k))^r` plus `r·N_k`.
pub fn unipotent_root_exact<T: Scalar>(ring: &Ring<T>, x: &Matrix<T>, r: u64) -> Result<Option<Matrix<T>>> {
    if !x.is_unitriangular() {
        return Err(Error::NotUnitriangular);
    }
    let n = x.dim();
    let rr = T::from_u64_exact(r);
    let mut rows = Matrix::identity(ring, n).rows();
    for k in 1..n {
        let partial = Matrix::from_rows(rows.clone())?.pow(ring, r as i64)?;
        for i in 0..n - k {
            let diff = ring.sub(x.get(i, i + k), partial.get(i, i + k));
            match ring.div_int(&diff, &rr) {
                Some(q) => rows[i][i + k] = q,
                None => return Ok(None),
            }
        }
    }
    let y = Matrix::from_rows(rows)?;
    debug_assert_eq!(&y.pow(ring, r as i64)?, x);
    Ok(Some(y))
}

/// `unipotent_root(x, r, s)`: requires `x ≡ I mod r²s`, returns `y ≡ I mod rs` with `y^r = x`.
pub fn unipotent_root<T: Scalar>(ring: &Ring<T>, x: &Matrix<T>, r: u64, s: u64) -> Result<Matrix<T>> {
    if r == 0 || s == 0 {
        return Err(Error::InvalidInput("r and s must be positive".into()));
    }
    if !x.is_unitriangular() {
        return Err(Error::NotUnitriangular);
    }
    let q = r.checked_mul(r).and_then(|v| v.checked_mul(s)).ok_or(Error::InvalidInput("r²s overflows".into()))?;
    if !x.congruent_identity(ring, q)? {
        return Err(Error::PreconditionViolated(format!("x is not congruent to I modulo r²s = {q}")));
    }
    let y = unipotent_root_exact(ring, x, r)?
        .ok_or_else(|| Error::PreconditionViolated("strip solve left the ring".into()))?;
    if y.pow(ring, r as i64)? != *x || !y.congruent_identity(ring, r * s)? {
        return Err(Error::PreconditionViolated("root failed verification".into()));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    type R = Ring<BigInt>;

    fn ut3(ring: &R, a: i64, b: i64, c: i64) -> Matrix<BigInt> {
        Matrix::from_ints(ring, &[&[1, a, c], &[0, 1, b], &[0, 0, 1]]).unwrap()
    }

    fn seeds(ms: Vec<Matrix<BigInt>>) -> Vec<(Matrix<BigInt>, WordTerm)> {
        ms.into_iter().enumerate().map(|(i, m)| (m, WordTerm::generator(i))).collect()
    }

    #[test]
    fn root_examples() {
        let z = R::rationals_localized(1);
        let u4 = Matrix::from_ints(&z, &[&[1, 4], &[0, 1]]).unwrap();
        assert_eq!(unipotent_root(&z, &u4, 2, 1).unwrap(), Matrix::from_ints(&z, &[&[1, 2], &[0, 1]]).unwrap());
        let x = ut3(&z, 4, 4, 8);
        assert_eq!(unipotent_root(&z, &x, 2, 1).unwrap(), ut3(&z, 2, 2, 2));
        let bad = ut3(&z, 2, 2, 0);
        assert!(matches!(unipotent_root(&z, &bad, 2, 1), Err(Error::PreconditionViolated(_))));
        assert_eq!(unipotent_root_exact(&z, &bad, 2).unwrap(), None);
        // the only rational root has a half-integer corner
        let zh = R::rationals_localized(2);
        let y = unipotent_root_exact(&zh, &ut3(&zh, 2, 2, 0), 2).unwrap().unwrap();
        assert_eq!(y.get(0, 2), &zh.fraction(-1, 1));
        // below-precondition corner case: x ≡ I mod r²s fails on one entry
        assert!(matches!(unipotent_root(&z, &ut3(&z, 4, 4, 6), 2, 1), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn heisenberg_sequence() {
        let z = R::rationals_localized(1);
        let pc = UnipotentPc::generate(&z, 3, seeds(vec![ut3(&z, 1, 0, 0), ut3(&z, 0, 1, 0)]), &[], 10).unwrap();
        assert_eq!(pc.level_ranks(), vec![2, 1]);
        assert!(pc.contains(&ut3(&z, 0, 0, 1)).unwrap());
        assert!(!pc.is_abelian().unwrap());
        let x = ut3(&z, 3, -2, 7);
        let w = pc.membership(&x).unwrap().unwrap().flatten().unwrap();
        assert_eq!(w.eval(&z, &[ut3(&z, 1, 0, 0), ut3(&z, 0, 1, 0)], 3).unwrap(), x);
    }

    #[test]
    fn proper_sublattices() {
        let z = R::rationals_localized(1);
        let pc = UnipotentPc::generate(&z, 3, seeds(vec![ut3(&z, 2, 0, 0), ut3(&z, 0, 3, 0)]), &[], 10).unwrap();
        assert!(pc.contains(&ut3(&z, 0, 0, 6)).unwrap());
        assert!(!pc.contains(&ut3(&z, 0, 0, 3)).unwrap());
        assert!(!pc.contains(&ut3(&z, 1, 0, 0)).unwrap());
        let abelian = UnipotentPc::generate(&z, 3, seeds(vec![ut3(&z, 0, 0, 5), ut3(&z, 2, 0, 1)]), &[], 10).unwrap();
        assert!(abelian.is_abelian().unwrap());
        assert_eq!(abelian.hirsch_length(), 2);
    }

    #[test]
    fn conjugation_saturation() {
        let z = R::rationals_localized(1);
        let u1 = Matrix::from_ints(&z, &[&[1, 1], &[0, 1]]).unwrap();
        let d = Matrix::from_ints(&z, &[&[-1, 0], &[0, 1]]).unwrap();
        let conj = Conjugator::new(&z, d, WordTerm::generator(1)).unwrap();
        let pc = UnipotentPc::generate(&z, 2, seeds(vec![u1.clone()]), &[conj], 10).unwrap();
        assert_eq!(pc.hirsch_length(), 1);
        assert!(pc.contains(&u1.pow(&z, -3).unwrap()).unwrap());
        // halving conjugation never stabilizes
        let zh = R::rationals_localized(2);
        let u1 = Matrix::from_ints(&zh, &[&[1, 1], &[0, 1]]).unwrap();
        let d2 = Matrix::diagonal(&zh, vec![zh.int(2), zh.one()]);
        let conj = Conjugator::new(&zh, d2, WordTerm::generator(1)).unwrap();
        let err = UnipotentPc::generate(&zh, 2, seeds(vec![u1]), &[conj], 8).unwrap_err();
        assert_eq!(err, Error::NonPolycyclicSuspected { iterations: 8 });
    }

    #[test]
    fn fractional_strips() {
        let zh = R::rationals_localized(2);
        let a = Matrix::from_rows(vec![vec![zh.one(), zh.fraction(3, 2)], vec![zh.zero(), zh.one()]]).unwrap();
        let pc = UnipotentPc::generate(&zh, 2, seeds(vec![a.clone()]), &[], 5).unwrap();
        assert!(pc.contains(&a.pow(&zh, 4).unwrap()).unwrap());
        let third = Matrix::from_rows(vec![vec![zh.one(), zh.fraction(1, 2)], vec![zh.zero(), zh.one()]]).unwrap();
        assert!(!pc.contains(&third).unwrap());
    }

    fn arb_unitriangular(n: usize, lo: i64, hi: i64) -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(lo..=hi, n * (n - 1) / 2)
    }

    fn build(ring: &R, n: usize, v: &[i64], scale: i64) -> Matrix<BigInt> {
        let mut m = Matrix::identity(ring, n).rows();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                m[i][j] = ring.int(v[k] * scale);
                k += 1;
            }
        }
        Matrix::from_rows(m).unwrap()
    }

    proptest! {
        #[test]
        fn root_round_trip(v in arb_unitriangular(4, -6, 6), r in 2u64..=3, s in 1u64..=2) {
            let z = R::rationals_localized(1);
            let y = build(&z, 4, &v, (r * s) as i64);
            let x = y.pow(&z, r as i64).unwrap();
            let root = unipotent_root(&z, &x, r, s).unwrap();
            prop_assert_eq!(root, y);
        }

        #[test]
        fn sifted_words_evaluate(a in arb_unitriangular(3, -3, 3), b in arb_unitriangular(3, -3, 3), e in prop::collection::vec(-3i64..=3, 4)) {
            let z = R::rationals_localized(1);
            let gens = vec![build(&z, 3, &a, 1), build(&z, 3, &b, 1)];
            let pc = UnipotentPc::generate(&z, 3, seeds(gens.clone()), &[], 20).unwrap();
            let w = GroupWord::from_syllables([(0, e[0]), (1, e[1]), (0, e[2]), (1, e[3])]);
            let x = w.eval(&z, &gens, 3).unwrap();
            let found = pc.membership(&x).unwrap().expect("words in the generators are members");
            prop_assert_eq!(found.flatten().unwrap().eval(&z, &gens, 3).unwrap(), x);
        }
    }
}
