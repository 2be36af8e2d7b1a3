//! Congruence levels controlling `r`-th powers: `α` for units, `μ` for
//! diagonal groups, `ν` for unipotent groups, and the combined level `M`
//! below which every congruence element of a triangular group is a product
//! of `r`-th powers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::{group_exponent_f, FiniteClosure, ResidueMatrices};
use crate::matrix::{GroupWord, Matrix, WordCertificate};
use crate::ring::Ring;
use crate::scalar::{prime_divisors, Scalar};
use crate::subgroup::{Membership, SubgroupData};
use crate::unipotent::{unipotent_root_exact, UnipotentPc};
use crate::units::{chevalley_alpha, diagonal_congruence_kernel, ExponentLattice, RingSpec};

/// Schreier generators examined per candidate level in sampled mode.
const SCHREIER_SAMPLE_CAP: usize = 64;
/// Extra random products of Schreier generators per candidate level.
const RANDOM_PRODUCTS: usize = 32;
const SAMPLER_SEED: u64 = 0x5eed_1e7e;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelKind {
    Alpha,
    Mu,
    Nu,
    M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelMode {
    Certified,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedLevel {
    pub level: u64,
    pub reason: String,
}

/// The three factors of `M = ν · μ(r·f(ν))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MComponents {
    pub nu: Box<LevelCertificate>,
    pub f: u64,
    pub mu: Box<LevelCertificate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCertificate {
    pub kind: LevelKind,
    pub value: u64,
    pub r: u64,
    pub subgroup: String,
    pub mode: LevelMode,
    /// Smaller candidates and why each failed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<RejectedLevel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<MComponents>,
}

impl LevelCertificate {
    fn new(kind: LevelKind, value: u64, r: u64, subgroup: impl Into<String>, mode: LevelMode) -> Self {
        LevelCertificate {
            kind,
            value,
            r,
            subgroup: subgroup.into(),
            mode,
            rejected: vec![],
            trace: vec![],
            components: None,
        }
    }
}

fn require_coprime<T: Scalar>(ring: &Ring<T>, r: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidInput("r must be positive".into()));
    }
    if !ring.is_coprime_level(r) {
        return Err(Error::LevelNotCoprime { level: r, modulus: ring.modulus() });
    }
    Ok(())
}

/// `α(r)` wrapped as a certificate.
pub fn alpha_level<T: Scalar>(spec: &RingSpec<T>, r: u64, bound: u64) -> Result<LevelCertificate> {
    let value = chevalley_alpha(&spec.ring, &spec.units, r, bound)?;
    let mut c = LevelCertificate::new(LevelKind::Alpha, value, r, "unit group", LevelMode::Certified);
    c.trace.push(format!("units congruent to 1 mod {value} lie in the r-th powers (lattice containment)"));
    Ok(c)
}

/// `mu_level`: least `μ` coprime to `m` with `ker(μ) ∩ N ⊆ rN`.
pub fn mu_level<T: Scalar>(
    spec: &RingSpec<T>,
    n: usize,
    sub: &ExponentLattice<T>,
    r: u64,
    bound: u64,
) -> Result<LevelCertificate> {
    if r == 0 {
        return Err(Error::InvalidInput("r must be positive".into()));
    }
    let powers = sub.scale(r);
    let mut cert = LevelCertificate::new(LevelKind::Mu, 0, r, "diagonal lattice", LevelMode::Certified);
    for mu in (1..=bound).filter(|&q| spec.ring.is_coprime_level(q)) {
        let kernel = diagonal_congruence_kernel(&spec.ring, &spec.units, mu, n)?.intersect(sub)?;
        if powers.contains(&kernel)? {
            cert.value = mu;
            cert.trace.push(format!("kernel at {mu} intersected with N lies in rN"));
            return Ok(cert);
        }
        cert.rejected.push(RejectedLevel { level: mu, reason: "congruence kernel meets N outside rN".into() });
    }
    Err(Error::SearchExhausted { what: "mu level", bound })
}

/// What `ν` is computed for.
#[derive(Clone, Copy, Debug)]
pub enum NuTarget<'a, T> {
    /// All of `UT_n(B)`.
    FullUnitriangular(usize),
    /// A finitely generated subgroup of `UT_n(B)`.
    Generated(&'a UnipotentPc<T>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuChoice {
    /// Least qualifying multiple of `r`.
    #[default]
    Minimal,
    /// `r²`, checked.
    Conservative,
    /// A given level, checked.
    Fixed(u64),
}

/// `I + level·J`, `J` the shift matrix: a root of it exists in `UT_n(B)`
/// exactly when every full-group candidate test passes.
pub fn shift_counterexample<T: Scalar>(ring: &Ring<T>, n: usize, level: u64) -> Matrix<T> {
    let mut rows = Matrix::identity(ring, n).rows();
    for (i, row) in rows.iter_mut().enumerate().take(n.saturating_sub(1)) {
        row[i + 1] = ring.int(level as i64);
    }
    Matrix::from_rows(rows).expect("square")
}

/// Does every element `≡ I mod level` of `UT_n(B)` have an `r`-th root there?
///
/// The root is `Σ_k binom(1/r, k)·(x − I)^k`; on `I + level·J` the powers
/// of `J` are independent, so the test `binom(1/r, k)·level^k ∈ B` for
/// `k < n` is both necessary and sufficient.
fn full_ut_level_works<T: Scalar>(ring: &Ring<T>, n: usize, r: u64, level: u64) -> bool {
    use num_bigint::BigInt;
    use num_integer::Integer;
    // binom(1/r, k)·level^k = Π_(j<k) (1 − j r) · level^k / (r^k · k!)
    let mut num = BigInt::from(1);
    let mut den = BigInt::from(1);
    for k in 1..n as u64 {
        num *= BigInt::from(1) - BigInt::from((k - 1) * r);
        num *= BigInt::from(level);
        den *= BigInt::from(r * k);
        let g = num.gcd(&den);
        num /= &g;
        den /= &g;
        if !denominator_in_modulus(&den, ring.modulus()) {
            return false;
        }
    }
    true
}

fn denominator_in_modulus(den: &num_bigint::BigInt, m: u64) -> bool {
    use num_bigint::BigInt;
    use num_integer::Integer;
    let mut d = den.clone();
    for p in prime_divisors(m) {
        let pp = BigInt::from(p);
        while d.is_multiple_of(&pp) {
            d /= &pp;
        }
    }
    d == BigInt::from(1)
}

fn nu_candidates<T: Scalar>(ring: &Ring<T>, r: u64, bound: u64, choice: NuChoice) -> Result<Vec<u64>> {
    Ok(match choice {
        NuChoice::Minimal => (1..=bound / r).map(|j| j * r).filter(|&v| ring.is_coprime_level(v)).collect(),
        NuChoice::Conservative => vec![r * r],
        NuChoice::Fixed(v) => {
            if v == 0 || v % r != 0 || !ring.is_coprime_level(v) {
                return Err(Error::PreconditionViolated(format!("fixed level {v} must be a multiple of r coprime to m")));
            }
            vec![v]
        }
    })
}

/// `nu_level`.
pub fn nu_level<T: Scalar>(
    spec: &RingSpec<T>,
    target: NuTarget<'_, T>,
    r: u64,
    bound: u64,
    choice: NuChoice,
    budget: usize,
) -> Result<LevelCertificate> {
    let ring = &spec.ring;
    require_coprime(ring, r)?;
    match target {
        NuTarget::FullUnitriangular(n) => {
            let mut cert = LevelCertificate::new(LevelKind::Nu, 0, r, format!("UT_{n}"), LevelMode::Certified);
            for level in nu_candidates(ring, r, bound.max(r * r), choice)? {
                if full_ut_level_works(ring, n, r, level) {
                    cert.value = level;
                    cert.trace.push(format!("strip-by-strip solve stays integral for every x = I mod {level}"));
                    return Ok(cert);
                }
                let x = shift_counterexample(ring, n, level);
                cert.rejected.push(RejectedLevel {
                    level,
                    reason: format!("I + {level}·J has no r-th root ({} strips)", x.dim().saturating_sub(1)),
                });
                if choice != NuChoice::Minimal {
                    return Err(Error::PreconditionViolated(format!("level {level} admits elements without roots")));
                }
            }
            Err(Error::SearchExhausted { what: "nu level", bound })
        }
        NuTarget::Generated(pc) => nu_generated(ring, pc, r, bound, choice, budget),
    }
}

fn nu_generated<T: Scalar>(
    ring: &Ring<T>,
    pc: &UnipotentPc<T>,
    r: u64,
    bound: u64,
    choice: NuChoice,
    budget: usize,
) -> Result<LevelCertificate> {
    let n = pc.dim();
    let mut cert = LevelCertificate::new(LevelKind::Nu, 0, r, format!("subgroup of UT_{n}, Hirsch length {}", pc.hirsch_length()), LevelMode::Certified);
    if r == 1 {
        cert.value = 1;
        cert.trace.push("every element is a first power".into());
        return Ok(cert);
    }
    if pc.is_trivial() {
        let v = match choice {
            NuChoice::Minimal => r,
            NuChoice::Conservative => r * r,
            NuChoice::Fixed(v) => nu_candidates(ring, r, bound, choice)?[0].max(v),
        };
        cert.value = v;
        cert.trace.push("trivial group: the condition is vacuous".into());
        return Ok(cert);
    }
    let abelian = pc.is_abelian()?;
    if !abelian {
        cert.mode = LevelMode::Sampled;
    }
    for level in nu_candidates(ring, r, bound, choice)? {
        let verdict = if abelian { abelian_level_check(ring, pc, r, level, budget)? } else { sampled_level_check(ring, pc, r, level, budget)? };
        match verdict {
            None => {
                cert.value = level;
                cert.trace.push(if abelian {
                    format!("index of the r-th powers matches the quotient count at {level}")
                } else {
                    format!("all sampled congruence elements at {level} have roots in the group")
                });
                return Ok(cert);
            }
            Some(reason) => {
                cert.rejected.push(RejectedLevel { level, reason });
                if choice != NuChoice::Minimal {
                    return Err(Error::PreconditionViolated(format!("level {level} fails the root condition")));
                }
            }
        }
    }
    Err(Error::SearchExhausted { what: "nu level", bound })
}

fn reduced_closure<T: Scalar>(ring: &Ring<T>, mats: &[Matrix<T>], level: u64, budget: usize) -> Result<FiniteClosure> {
    let arith = ResidueMatrices::new(ring, mats.first().map(|m| m.dim()).unwrap_or(1), level)?;
    let gens = mats.iter().map(|m| arith.reduce(ring, m)).collect::<Result<Vec<_>>>()?;
    FiniteClosure::generate(arith, gens, budget)
}

/// For abelian `K ≅ Z^h`: `K ∩ Γ(ν) ⊆ K^r` iff `|K̄| / |K^r mod ν| = r^h`.
fn abelian_level_check<T: Scalar>(ring: &Ring<T>, pc: &UnipotentPc<T>, r: u64, level: u64, budget: usize) -> Result<Option<String>> {
    let basis: Vec<Matrix<T>> = pc.elements().iter().map(|e| e.matrix.clone()).collect();
    let powers: Vec<Matrix<T>> = basis.iter().map(|b| b.pow(ring, r as i64)).collect::<Result<_>>()?;
    let whole = reduced_closure(ring, &basis, level, budget)?.order() as u128;
    let sub = reduced_closure(ring, &powers, level, budget)?.order() as u128;
    let need = (r as u128).pow(pc.hirsch_length() as u32);
    if whole == need * sub {
        Ok(None)
    } else {
        Ok(Some(format!("quotient count {whole}/{sub} differs from r^h = {need}")))
    }
}

/// Root test on Schreier generators of `K ∩ Γ(ν)` and random products of them.
fn sampled_level_check<T: Scalar>(ring: &Ring<T>, pc: &UnipotentPc<T>, r: u64, level: u64, budget: usize) -> Result<Option<String>> {
    let basis: Vec<Matrix<T>> = pc.elements().iter().map(|e| e.matrix.clone()).collect();
    let closure = reduced_closure(ring, &basis, level, budget)?;
    let arith = closure.arith();
    let mut samples: Vec<Matrix<T>> = Vec::new();
    'outer: for i in 0..closure.order() {
        let wi = closure.word_of_index(i);
        for (k, g) in closure.generators().iter().enumerate() {
            let p = arith.mul(&closure.elements()[i], g);
            let wj = closure.word(&p).expect("closed");
            let s = wi.mul(&GroupWord::generator(k)).mul(&wj.inverse());
            if s.is_identity() {
                continue;
            }
            let m = s.eval(ring, &basis, pc.dim())?;
            if !m.is_identity() {
                samples.push(m);
                if samples.len() >= SCHREIER_SAMPLE_CAP {
                    break 'outer;
                }
            }
        }
    }
    for b in &basis {
        samples.push(b.pow(ring, closure.arith().order(&arith.reduce(ring, b)?) as i64)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLER_SEED ^ level);
    let base = samples.len();
    if base > 0 {
        for _ in 0..RANDOM_PRODUCTS {
            let mut m = Matrix::identity(ring, pc.dim());
            for _ in 0..3 {
                let pick = &samples[rng.gen_range(0..base)];
                let e = if rng.gen_bool(0.5) { 1 } else { -1 };
                m = m.mul(ring, &pick.pow(ring, e)?)?;
            }
            samples.push(m);
        }
    }
    for x in &samples {
        let ok = match unipotent_root_exact(ring, x, r)? {
            Some(y) => pc.contains(&y)?,
            None => false,
        };
        if !ok {
            return Ok(Some("a congruence element has no r-th root in the group".into()));
        }
    }
    Ok(None)
}

/// `congruence_level_M`: `M = ν(r) · μ(r·f(ν(r)))` for `G`.
pub fn congruence_level_m<T: Scalar>(
    g: &SubgroupData<T>,
    r: u64,
    choice: NuChoice,
) -> Result<LevelCertificate> {
    let spec = g.spec();
    require_coprime(&spec.ring, r)?;
    let bounds = g.bounds();
    let nu = nu_level(spec, NuTarget::Generated(g.kernel()?), r, bounds.search_level, choice, bounds.closure_budget)?;
    let f = if nu.value == 1 { 1 } else { group_exponent_f(spec, g.dim(), nu.value, bounds.closure_budget)? };
    let mu = mu_level(spec, g.dim(), g.delta_lattice(), r * f, bounds.search_level)?;
    let value = nu.value.checked_mul(mu.value).ok_or(Error::InvalidInput("level overflow".into()))?;
    debug_assert!(spec.ring.is_coprime_level(value));
    let mut cert = LevelCertificate::new(LevelKind::M, value, r, format!("triangular group on {} generators", g.generators().len()), nu.mode);
    cert.trace.push(format!("nu = {}, f(nu) = {f}, mu(r f) = {}", nu.value, mu.value));
    cert.components = Some(MComponents { nu: Box::new(nu), f, mu: Box::new(mu) });
    Ok(cert)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionRoute {
    /// `Δ(g) = Δ(z)^(r f)`, `k = z^f`, `h^r = g⁻¹ k^r`.
    CongruenceLevel,
    /// `Δ(g) = Δ(k)^r` directly, for `g` not congruent to `I` at the level.
    DiagonalRoot,
}

/// `g = k^r · h^(−r)` with both factors certified in `G` by words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition<T> {
    pub k: Matrix<T>,
    pub h: Matrix<T>,
    pub k_word: GroupWord,
    pub h_word: WordCertificate,
    pub route: DecompositionRoute,
}

/// `power_decompose`.
pub fn power_decompose<T: Scalar>(
    group: &SubgroupData<T>,
    g: &Matrix<T>,
    r: u64,
    level: &LevelCertificate,
) -> Result<Decomposition<T>> {
    let ring = &group.spec().ring;
    if !matches!(group.membership(g)?, Membership::Member(_)) {
        return Err(Error::PreconditionViolated("g is not in G".into()));
    }
    let f = level.components.as_ref().map(|c| c.f).unwrap_or(1);
    let target = group.delta_coordinates(g)?;
    let (route, z_word, z_pow) = if g.congruent_identity(ring, level.value)? {
        let w = group
            .delta_word_for_vector(&target, r * f)?
            .ok_or_else(|| Error::DecompositionFailed("diagonal of g is not an (r f)-th power in the diagonal group".into()))?;
        (DecompositionRoute::CongruenceLevel, w, f)
    } else {
        let w = group
            .delta_word_for_vector(&target, r)?
            .ok_or_else(|| Error::DecompositionFailed("diagonal of g is not an r-th power in the diagonal group".into()))?;
        (DecompositionRoute::DiagonalRoot, w, 1)
    };
    let k_word = z_word.pow(z_pow as i64);
    let k = group.eval(&k_word)?;
    let kr = k.pow(ring, r as i64)?;
    let x = g.inverse(ring)?.mul(ring, &kr)?;
    let h = unipotent_root_exact(ring, &x, r)?
        .ok_or_else(|| Error::DecompositionFailed("unipotent remainder has no r-th root over the ring".into()))?;
    let h_word = group
        .kernel()?
        .membership(&h)?
        .ok_or_else(|| Error::DecompositionFailed("root of the unipotent remainder lies outside G".into()))?
        .certificate()?;
    if kr.mul(ring, &h.pow(ring, -(r as i64))?)? != *g {
        return Err(Error::DecompositionFailed("k^r h^-r does not reproduce g".into()));
    }
    Ok(Decomposition { k, h, k_word, h_word, route })
}

/// A random element of `G ∩ Γ(level)`: a product of words raised to their orders mod `level`.
pub fn random_congruence_element<T: Scalar, R: Rng>(
    group: &SubgroupData<T>,
    level: u64,
    rng: &mut R,
    factors: usize,
    word_len: usize,
) -> Result<Matrix<T>> {
    let ring = &group.spec().ring;
    let n = group.dim();
    let s = group.generators().len();
    let mut acc = Matrix::identity(ring, n);
    if s == 0 {
        return Ok(acc);
    }
    let arith = ResidueMatrices::new(ring, n, level)?;
    for _ in 0..factors {
        let w = GroupWord::from_syllables((0..word_len).map(|_| (rng.gen_range(0..s), rng.gen_range(-2i64..=2))));
        let m = group.eval(&w)?;
        let o = arith.order(&arith.reduce(ring, &m)?);
        let e = o as i64 * if rng.gen_bool(0.5) { 1 } else { -1 };
        acc = acc.mul(ring, &m.pow(ring, e)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subgroup::Bounds;
    use crate::units::TorsionLayout;
    use num_bigint::BigInt;

    type Spec = RingSpec<BigInt>;

    fn u(spec: &Spec, b: i64) -> Matrix<BigInt> {
        Matrix::from_ints(&spec.ring, &[&[1, b], &[0, 1]]).unwrap()
    }

    fn d(spec: &Spec, a: i64, b: i64) -> Matrix<BigInt> {
        Matrix::diagonal(&spec.ring, vec![spec.ring.int(a), spec.ring.int(b)])
    }

    fn lattice_of(spec: &Spec, gens: Vec<Matrix<BigInt>>) -> crate::units::ExponentLattice<BigInt> {
        SubgroupData::new(spec, 2, gens, &Bounds::default()).unwrap().delta_lattice().clone()
    }

    #[test]
    fn mu_examples() {
        let z = Spec::integers();
        let n = lattice_of(&z, vec![d(&z, -1, 1)]);
        assert_eq!(mu_level(&z, 2, &n, 2, 100).unwrap().value, 3);
        let triv = crate::units::ExponentLattice::trivial(2, TorsionLayout::diagonal(2, 1, 2));
        assert_eq!(mu_level(&z, 2, &triv, 5, 100).unwrap().value, 1);
        let zh = Spec::integers_localized(2);
        let n = lattice_of(&zh, vec![d(&zh, 2, 1)]);
        let c = mu_level(&zh, 2, &n, 3, 100).unwrap();
        assert_eq!(c.value, 7);
        assert_eq!(c.rejected.iter().map(|x| x.level).collect::<Vec<_>>(), vec![1, 3, 5]);
    }

    #[test]
    fn nu_full_examples() {
        let z = Spec::integers();
        let c = nu_level(&z, NuTarget::FullUnitriangular(3), 2, 100, NuChoice::Minimal, 1000).unwrap();
        assert_eq!(c.value, 4);
        assert_eq!(c.rejected[0].level, 2);
        assert_eq!(nu_level(&z, NuTarget::FullUnitriangular(2), 2, 100, NuChoice::Minimal, 1000).unwrap().value, 2);
        assert_eq!(nu_level(&z, NuTarget::FullUnitriangular(4), 1, 100, NuChoice::Minimal, 1000).unwrap().value, 1);
        // r² always suffices
        for n in 2..=5 {
            for r in [2u64, 3, 5] {
                assert!(full_ut_level_works(&z.ring, n, r, r * r));
            }
        }
        let x = shift_counterexample(&z.ring, 3, 2);
        assert_eq!(unipotent_root_exact(&z.ring, &x, 2).unwrap(), None);
    }

    #[test]
    fn nu_generated_examples() {
        let z = Spec::integers();
        let b = Bounds::default();
        let g = SubgroupData::new(&z, 2, vec![u(&z, 1)], &b).unwrap();
        let c = nu_level(&z, NuTarget::Generated(g.kernel().unwrap()), 2, 100, NuChoice::Minimal, 1000).unwrap();
        assert_eq!((c.value, c.mode), (2, LevelMode::Certified));
        let z3 = |a: i64, bb: i64, cc: i64| Matrix::from_ints(&z.ring, &[&[1, a, cc], &[0, 1, bb], &[0, 0, 1]]).unwrap();
        let h = SubgroupData::new(&z, 3, vec![z3(1, 0, 0), z3(0, 1, 0)], &b).unwrap();
        let c = nu_level(&z, NuTarget::Generated(h.kernel().unwrap()), 2, 100, NuChoice::Minimal, 100_000).unwrap();
        assert_eq!((c.value, c.mode), (4, LevelMode::Sampled));
        assert_eq!(c.rejected[0].level, 2);
    }

    #[test]
    fn m_examples() {
        let z = Spec::integers();
        let b = Bounds::default();
        let g = SubgroupData::new(&z, 2, vec![u(&z, 1)], &b).unwrap();
        let m = congruence_level_m(&g, 2, NuChoice::Minimal).unwrap();
        assert_eq!(m.value, 2);
        let comp = m.components.as_ref().unwrap();
        assert_eq!((comp.nu.value, comp.f, comp.mu.value), (2, 2, 1));
        let m = congruence_level_m(&g, 2, NuChoice::Conservative).unwrap();
        let comp = m.components.as_ref().unwrap();
        assert_eq!((comp.nu.value, comp.f, comp.mu.value, m.value), (4, 4, 1, 4));
        let g = SubgroupData::new(&z, 2, vec![d(&z, -1, 1)], &b).unwrap();
        let m = congruence_level_m(&g, 2, NuChoice::Minimal).unwrap();
        let comp = m.components.as_ref().unwrap();
        assert_eq!((comp.nu.value, comp.f, comp.mu.value, m.value), (2, 2, 3, 6));
        let g = SubgroupData::new(&z, 2, vec![d(&z, -1, 1), u(&z, 1)], &b).unwrap();
        assert_eq!(congruence_level_m(&g, 2, NuChoice::Minimal).unwrap().value, 6);
        let zh = Spec::integers_localized(2);
        let g = SubgroupData::new(&zh, 2, vec![u(&zh, 1)], &b).unwrap();
        assert_eq!(congruence_level_m(&g, 2, NuChoice::Minimal).unwrap_err(), Error::LevelNotCoprime { level: 2, modulus: 2 });
    }

    #[test]
    fn decomposition_examples() {
        let z = Spec::integers();
        let b = Bounds::default();
        let g = SubgroupData::new(&z, 2, vec![u(&z, 1)], &b).unwrap();
        let m = congruence_level_m(&g, 2, NuChoice::Conservative).unwrap();
        let dec = power_decompose(&g, &u(&z, 4), 2, &m).unwrap();
        assert!(dec.k.is_identity());
        assert_eq!(dec.h, u(&z, -2));
        let dec = power_decompose(&g, &Matrix::identity(&z.ring, 2), 2, &m).unwrap();
        assert!(dec.k.is_identity() && dec.h.is_identity());
        assert!(matches!(power_decompose(&g, &u(&z, 3).mul(&z.ring, &d(&z, -1, 1)).unwrap(), 2, &m), Err(Error::PreconditionViolated(_))));

        let z3 = Spec::integers_localized(3);
        let g = SubgroupData::new(&z3, 2, vec![d(&z3, 3, 1)], &b).unwrap();
        let m = congruence_level_m(&g, 2, NuChoice::Minimal).unwrap();
        let dec = power_decompose(&g, &d(&z3, 9, 1), 2, &m).unwrap();
        assert_eq!(dec.k, d(&z3, 3, 1));
        assert!(dec.h.is_identity());
        assert_eq!(dec.route, DecompositionRoute::DiagonalRoot);
    }

    #[test]
    fn decomposition_on_random_congruence_elements() {
        let z = Spec::integers();
        let g = SubgroupData::new(&z, 2, vec![d(&z, -1, 1), u(&z, 1)], &Bounds::default()).unwrap();
        let m = congruence_level_m(&g, 2, NuChoice::Minimal).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = random_congruence_element(&g, m.value, &mut rng, 2, 4).unwrap();
            let dec = power_decompose(&g, &x, 2, &m).unwrap();
            assert_eq!(g.eval(&dec.k_word).unwrap(), dec.k);
            assert_eq!(g.eval_certificate(&dec.h_word).unwrap(), dec.h);
            let back = dec.k.pow(&z.ring, 2).unwrap().mul(&z.ring, &dec.h.pow(&z.ring, -2).unwrap()).unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn mu_certificate_bounded_check() {
        // every bounded vector of N whose units are 1 mod μ lies in rN
        let zh = Spec::integers_localized(2);
        let n = lattice_of(&zh, vec![d(&zh, 2, 1), d(&zh, -1, 2)]);
        let r = 3;
        let mu = mu_level(&zh, 2, &n, r, 200).unwrap().value;
        let powers = n.scale(r);
        let units = &zh.units;
        let is_one = |v: &[BigInt]| {
            let e = units.exp(&zh.ring, &units.vector_from_lattice(v));
            zh.ring.divides_level(&zh.ring.sub(&e, &zh.ring.one()), mu).unwrap()
        };
        for t0 in 0..2i64 {
            for t1 in 0..2i64 {
                for a in -8i64..=8 {
                    for b in -8i64..=8 {
                        let v: Vec<BigInt> = [t0, a, t1, b].iter().map(|&x| BigInt::from(x)).collect();
                        if n.member(&v).unwrap() && is_one(&v[0..2]) && is_one(&v[2..4]) {
                            assert!(powers.member(&v).unwrap(), "{v:?}");
                        }
                    }
                }
            }
        }
    }
}
