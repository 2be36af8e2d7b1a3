//! End-to-end separation of an element `x` from a triangular subgroup `S`
//! in a congruence quotient `GL_n(B/qB)`.
//!
//! Order of work: a below-diagonal entry of `x` separates at a small prime;
//! otherwise membership is decided exactly; a nonmember is then separated by
//! an ascending level search, and, when `⟨x, S⟩` has a finite quotient of
//! exponent prime to `m` that keeps `x` away from `S`, by the congruence
//! level `M` attached to that exponent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::{closure, FiniteClosure, ResidueMatrices};
use crate::lattice::{left_kernel, Lattice};
use crate::levels::{congruence_level_m, LevelCertificate, NuChoice};
use crate::matrix::{GroupWord, Matrix, WordCertificate};
use crate::scalar::{is_prime, Scalar};
use crate::subgroup::{Bounds, Membership, NonMemberReason, SubgroupData};
use crate::unipotent::{Conjugator, UnipotentPc, WordTerm};
use crate::units::RingSpec;

pub const HYPOTHESIS_SUSPECT: &str = "HYPOTHESIS_SUSPECT";
pub const BUDGET_EXHAUSTED: &str = "BUDGET_EXHAUSTED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Separated,
    Member,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationMethod {
    /// `x` is not triangular modulo a prime while the image of `S` is.
    BelowDiagonal,
    /// First level found by the ascending search.
    LevelSearch,
    /// The congruence level `M`, verified by closure.
    CongruenceBound,
}

/// The level `M` for a finite quotient of `⟨x, S⟩` of exponent `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedBound {
    pub r: u64,
    /// How the quotient was found.
    pub quotient: String,
    pub certificate: LevelCertificate,
    /// Result of the closure check at `M`.
    pub separates: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAdjustment<T> {
    pub p: u64,
    /// Index of the first derived layer with infinite abelianization (0 when `T` is finite).
    pub layer: usize,
    pub layer_ranks: Vec<usize>,
    /// `[W : W_p]`.
    pub w_index: u64,
    /// Level at which `W ∩ Γ(q) ⊆ W_p` was confirmed.
    pub level: u64,
    /// `[T : N]`.
    pub n_index: u64,
    /// Generators and index of `N ∩ H` when `T` is abelian.
    pub h1_generators: Option<Vec<Matrix<T>>>,
    pub h1_index: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationWitness<T> {
    pub verdict: Verdict,
    pub level: Option<u64>,
    pub method: Option<SeparationMethod>,
    pub word: Option<WordCertificate>,
    pub nonmember_reason: Option<NonMemberReason>,
    pub certified_bound: Option<CertifiedBound>,
    pub closure_size: Option<usize>,
    pub p_adjustment: Option<PAdjustment<T>>,
    pub diagnostics: Vec<String>,
}

impl<T> SeparationWitness<T> {
    fn empty(verdict: Verdict) -> Self {
        SeparationWitness {
            verdict,
            level: None,
            method: None,
            word: None,
            nonmember_reason: None,
            certified_bound: None,
            closure_size: None,
            p_adjustment: None,
            diagnostics: vec![],
        }
    }

    pub fn has_diagnostic(&self, code: &str) -> bool {
        self.diagnostics.iter().any(|d| d == code || d.starts_with(&format!("{code}:")))
    }
}

/// Smallest prime `q ∤ m` not dividing some below-diagonal entry of `x`.
pub fn below_diagonal_level<T: Scalar>(spec: &RingSpec<T>, x: &Matrix<T>) -> Result<u64> {
    let support = x.shape().below_support;
    if support.is_empty() {
        return Err(Error::NotBelowDiagonal);
    }
    let ring = &spec.ring;
    (2u64..)
        .filter(|&q| is_prime(q) && ring.is_coprime_level(q))
        .find_map(|q| {
            let hit = support.iter().any(|&(i, j)| !ring.divides_level(x.get(i - 1, j - 1), q).unwrap_or(true));
            hit.then_some(q)
        })
        .ok_or(Error::NotBelowDiagonal)
}

fn check_input<T: Scalar>(s: &SubgroupData<T>, x: &Matrix<T>) -> Result<()> {
    if x.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: x.dim() });
    }
    let ring = &s.spec().ring;
    ring.inv(&x.determinant(ring)).map_err(|_| Error::NonInvertible)?;
    Ok(())
}

/// `separate`.
pub fn separate<T: Scalar>(s: &SubgroupData<T>, x: &Matrix<T>, bounds: &Bounds) -> Result<SeparationWitness<T>> {
    check_input(s, x)?;
    let spec = s.spec();
    let ring = &spec.ring;
    if !x.is_triangular() {
        let q = below_diagonal_level(spec, x)?;
        let mut w = SeparationWitness::empty(Verdict::Separated);
        w.level = Some(q);
        w.method = Some(SeparationMethod::BelowDiagonal);
        return Ok(w);
    }

    let mut diagnostics = Vec::new();
    let mut reason = None;
    match s.membership(x) {
        Ok(Membership::Member(word)) => {
            let mut w = SeparationWitness::empty(Verdict::Member);
            w.word = Some(word);
            return Ok(w);
        }
        Ok(Membership::NonMember(r)) => reason = Some(r),
        Err(e @ Error::NonPolycyclicSuspected { .. }) => diagnostics.push(format!("{HYPOTHESIS_SUSPECT}: {e}")),
        Err(e) => return Err(e),
    }

    let mut found: Option<(u64, usize)> = None;
    let mut budget_hit = false;
    for q in (2..=bounds.search_level).filter(|&q| ring.is_coprime_level(q)) {
        match closure(ring, s.dim(), s.generators(), q, bounds.closure_budget) {
            Ok(c) => {
                if !c.contains(&c.arith().reduce(ring, x)?) {
                    found = Some((q, c.order()));
                    break;
                }
            }
            Err(e) if e.is_budget() => {
                diagnostics.push(format!("{BUDGET_EXHAUSTED}: level {q}: {e}"));
                budget_hit = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let mut p_adjustment = None;
    let mut bound = None;
    if reason.is_some() {
        match certified_bound(s, x, found.map(|f| f.0), bounds) {
            Ok(out) => {
                diagnostics.extend(out.diagnostics);
                p_adjustment = out.p_adjustment;
                bound = out.bound;
            }
            Err(e) => diagnostics.push(format!("CONGRUENCE_BOUND_UNAVAILABLE: {e}")),
        }
    }

    let mut w = SeparationWitness::empty(Verdict::Inconclusive);
    w.nonmember_reason = reason;
    w.p_adjustment = p_adjustment;
    if let Some((q, size)) = found {
        w.verdict = Verdict::Separated;
        w.level = Some(q);
        w.method = Some(SeparationMethod::LevelSearch);
        w.closure_size = Some(size);
    } else if let Some(b) = bound.as_ref().filter(|b| b.separates) {
        w.verdict = Verdict::Separated;
        w.level = Some(b.certificate.value);
        w.method = Some(SeparationMethod::CongruenceBound);
    } else if budget_hit {
        diagnostics.push(BUDGET_EXHAUSTED.into());
    } else {
        diagnostics.push(HYPOTHESIS_SUSPECT.into());
    }
    w.certified_bound = bound;
    w.diagnostics = diagnostics;
    Ok(w)
}

struct BoundOutcome<T> {
    bound: Option<CertifiedBound>,
    p_adjustment: Option<PAdjustment<T>>,
    diagnostics: Vec<String>,
}

fn smallest_prime_outside<T: Scalar>(spec: &RingSpec<T>) -> u64 {
    (2u64..).find(|&p| is_prime(p) && spec.ring.is_coprime_level(p)).expect("primes are unbounded")
}

/// Finds the quotient exponent `r` and, when `r` is prime to `m`, the certified level.
fn certified_bound<T: Scalar>(
    s: &SubgroupData<T>,
    x: &Matrix<T>,
    searched: Option<u64>,
    bounds: &Bounds,
) -> Result<BoundOutcome<T>> {
    let spec = s.spec();
    let ring = &spec.ring;
    let mut gens = vec![x.clone()];
    gens.extend(s.generators().iter().cloned());
    let t = SubgroupData::new(spec, s.dim(), gens, bounds)?;
    let mut out = BoundOutcome { bound: None, p_adjustment: None, diagnostics: vec![] };

    let (r, quotient, coprime) = if t.is_abelian()? {
        let coords = AbelianCoordinates::new(&t)?;
        let g = t.generators().len();
        let mut sub: Vec<Vec<T>> = (1..g).map(|i| unit_vector(g, i)).collect();
        sub.extend(coords.relations.basis().iter().cloned());
        let base = Lattice::new(g, sub)?;
        let x_vec = unit_vector::<T>(g, 0);
        if base.member(&x_vec)? {
            return Err(Error::DecompositionFailed("x lies in S by the abelian lattice".into()));
        }
        let find = |coprime_only: bool| -> Result<Option<(u64, u64)>> {
            for e in 2..=bounds.search_level {
                if coprime_only && !ring.is_coprime_level(e) {
                    continue;
                }
                let h = base.scale(&T::one()).sum(&Lattice::full(g).scale(&T::from_u64_exact(e)))?;
                if !h.member(&x_vec)? {
                    let r = h.quotient_exponent().and_then(|v| v.to_u64()).expect("finite quotient");
                    return Ok(Some((e, r)));
                }
            }
            Ok(None)
        };
        match find(true)? {
            Some((e, r)) => (r, format!("abelian quotient by S + {e}T"), true),
            None => match find(false)? {
                Some((e, r)) => (r, format!("abelian quotient by S + {e}T"), false),
                None => return Ok(out),
            },
        }
    } else {
        let Some(q) = searched else { return Ok(out) };
        let arith = ResidueMatrices::new(ring, s.dim(), q)?;
        let reduce = |ms: &[Matrix<T>]| ms.iter().map(|m| arith.reduce(ring, m)).collect::<Result<Vec<_>>>();
        let whole = FiniteClosure::generate(arith.clone(), reduce(t.generators())?, bounds.closure_budget)?;
        let mut normal = FiniteClosure::generate(arith.clone(), reduce(s.generators())?, bounds.closure_budget)?;
        normal.normalize_under(whole.generators())?;
        if normal.contains(&arith.reduce(ring, x)?) {
            out.diagnostics.push(format!("NORMAL_CLOSURE_CONTAINS_X: level {q}"));
            return Ok(out);
        }
        let r = whole.exponent_over(&normal);
        (r, format!("quotient by the normal closure of S at level {q}"), ring.is_coprime_level(r))
    };

    if !coprime {
        let p = smallest_prime_outside(spec);
        out.diagnostics.push(format!("{HYPOTHESIS_SUSPECT}: quotient exponent {r} shares a prime with {}", spec.modulus()));
        match p_adjust(&t, s.generators(), p, bounds) {
            Ok(adj) => out.p_adjustment = Some(adj),
            Err(e) => out.diagnostics.push(format!("P_ADJUST_FAILED: {e}")),
        }
        return Ok(out);
    }
    let cert = congruence_level_m(&t, r, NuChoice::Minimal)?;
    match closure(ring, s.dim(), s.generators(), cert.value, bounds.closure_budget) {
        Ok(c) => {
            let separates = !c.contains(&c.arith().reduce(ring, x)?);
            if !separates {
                out.diagnostics.push(format!("CONGRUENCE_BOUND_FAILED: level {}", cert.value));
            }
            out.bound = Some(CertifiedBound { r, quotient, certificate: cert, separates });
        }
        Err(e) if e.is_budget() => {
            out.diagnostics.push(format!("CONGRUENCE_BOUND_UNVERIFIED: level {}: {e}", cert.value));
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn unit_vector<T: Scalar>(g: usize, i: usize) -> Vec<T> {
    (0..g).map(|j| if j == i { T::one() } else { T::zero() }).collect()
}

/// For abelian `T = ⟨t_1..t_g⟩`: the relation lattice `Λ ⊆ Z^g` with `T ≅ Z^g / Λ`.
struct AbelianCoordinates<T> {
    relations: Lattice<T>,
}

impl<T: Scalar> AbelianCoordinates<T> {
    fn new(t: &SubgroupData<T>) -> Result<Self> {
        let g = t.generators().len();
        let delta_rel = t.delta_relations();
        let kernel = t.kernel()?;
        let h = kernel.hirsch_length();
        let mut rels = Vec::new();
        if h == 0 {
            rels = delta_rel;
        } else if !delta_rel.is_empty() {
            let images = delta_rel
                .iter()
                .map(|c| {
                    let w = GroupWord::from_syllables(c.iter().enumerate().map(|(i, v)| (i, v.to_i64().expect("small exponent"))));
                    let u = t.eval(&w)?;
                    kernel.coordinates(&u)?.ok_or(Error::DecompositionFailed("relation word outside the kernel".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            for y in left_kernel(&images, h) {
                let mut v = vec![T::zero(); g];
                for (yj, b) in y.iter().zip(&delta_rel) {
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi = vi.clone() + yj.clone() * bi.clone();
                    }
                }
                rels.push(v);
            }
        }
        Ok(AbelianCoordinates { relations: Lattice::new(g, rels)? })
    }

    /// Coordinates of a member of `T`: exponent sums of its membership word.
    fn coordinates(t: &SubgroupData<T>, m: &Matrix<T>) -> Result<Vec<T>> {
        let Membership::Member(w) = t.membership(m)? else {
            return Err(Error::PreconditionViolated("element is not in T".into()));
        };
        w.exponent_sums(t.generators().len())
    }
}

fn derived_series<T: Scalar>(t: &SubgroupData<T>, bounds: &Bounds) -> Result<Vec<UnipotentPc<T>>> {
    let ring = &t.spec().ring;
    let n = t.dim();
    let gens = t.generators();
    let mut seeds = Vec::new();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let word = GroupWord::generator(i).commutator(&GroupWord::generator(j));
            seeds.push((gens[i].commutator(ring, &gens[j])?, WordTerm::leaf(word)));
        }
    }
    let conj = t.conjugators()?;
    let first = UnipotentPc::generate(ring, n, seeds, &conj, bounds.lattice_iterations)
        .map_err(|e| Error::LayerNotComputable(e.to_string()))?;
    let mut series = vec![first];
    while !series.last().unwrap().is_trivial() {
        if series.len() > n {
            return Err(Error::LayerNotComputable("derived series did not terminate".into()));
        }
        let cur = series.last().unwrap();
        let els = cur.elements();
        // words are irrelevant below the first layer
        let mut seeds = Vec::new();
        for i in 0..els.len() {
            for j in i + 1..els.len() {
                seeds.push((els[i].matrix.commutator(ring, &els[j].matrix)?, WordTerm::identity()));
            }
        }
        let conj: Vec<Conjugator<T>> =
            els.iter().map(|e| Conjugator { matrix: e.matrix.clone(), inverse: e.inverse.clone(), word: e.word.clone() }).collect();
        let next = UnipotentPc::generate(ring, n, seeds, &conj, bounds.lattice_iterations)
            .map_err(|e| Error::LayerNotComputable(e.to_string()))?;
        series.push(next);
    }
    Ok(series)
}

/// `p_adjust`: the subgroup `N ∩ H` of index divisible by `p`, where `N` is
/// normal of finite index with `N ∩ W = W^p` on the first infinite derived
/// layer `W` (which must be abelian).
pub fn p_adjust<T: Scalar>(
    t: &SubgroupData<T>,
    h_gens: &[Matrix<T>],
    p: u64,
    bounds: &Bounds,
) -> Result<PAdjustment<T>> {
    let spec = t.spec();
    let ring = &spec.ring;
    if !is_prime(p) || !ring.is_coprime_level(p) {
        return Err(Error::PreconditionViolated(format!("{p} must be a prime not dividing {}", spec.modulus())));
    }
    let series = derived_series(t, bounds)?;
    let kernel_h = t.kernel().map_err(|e| Error::LayerNotComputable(e.to_string()))?.hirsch_length();
    let mut ranks = vec![t.delta_lattice().group_rank() + kernel_h - series[0].hirsch_length()];
    for w in series.windows(2) {
        ranks.push(w[0].hirsch_length() - w[1].hirsch_length());
    }
    let layer = ranks.iter().position(|&r| r > 0).unwrap_or(0);
    let n = t.dim();

    let (w_gens, w_index, abelian_t) = if layer == 0 {
        if !t.is_abelian()? {
            return Err(Error::LayerNotComputable("first infinite layer is the nonabelian group itself".into()));
        }
        let coords = AbelianCoordinates::new(t)?;
        let index = coords
            .relations
            .invariant_factors()
            .iter()
            .map(|d| if d.is_zero() { p } else { crate::scalar::gcd_u64(d.to_u64().unwrap_or(0), p) })
            .product::<u64>();
        (t.generators().to_vec(), index, Some(coords))
    } else {
        let w = &series[layer - 1];
        if !w.is_abelian()? {
            return Err(Error::LayerNotComputable(format!("derived layer {layer} is not abelian")));
        }
        let gens: Vec<Matrix<T>> = w.elements().iter().map(|e| e.matrix.clone()).collect();
        (gens, p.pow(w.hirsch_length() as u32), None)
    };
    let wp: Vec<Matrix<T>> = w_gens.iter().map(|g| g.pow(ring, p as i64)).collect::<Result<_>>()?;

    let mut level = None;
    for q in (2..=bounds.search_level).filter(|&q| ring.is_coprime_level(q)) {
        let whole = closure(ring, n, &w_gens, q, bounds.closure_budget)?;
        let sub = closure(ring, n, &wp, q, bounds.closure_budget)?;
        if whole.order() as u64 == w_index * sub.order() as u64 {
            let t_bar = closure(ring, n, t.generators(), q, bounds.closure_budget)?;
            level = Some((q, (t_bar.order() / sub.order()) as u64));
            break;
        }
    }
    let Some((level, n_index)) = level else {
        return Err(Error::SearchExhausted { what: "level realizing W_p", bound: bounds.search_level });
    };

    let (h1_generators, h1_index) = match abelian_t {
        Some(coords) => {
            let g = t.generators().len();
            let mut n_rows: Vec<Vec<T>> = (0..g).map(|i| unit_vector::<T>(g, i).into_iter().map(|v| v * T::from_u64_exact(p)).collect()).collect();
            n_rows.extend(coords.relations.basis().iter().cloned());
            let n_lat = Lattice::new(g, n_rows)?;
            let mut h_rows = h_gens.iter().map(|m| AbelianCoordinates::coordinates(t, m)).collect::<Result<Vec<_>>>()?;
            h_rows.extend(coords.relations.basis().iter().cloned());
            let h1 = n_lat.intersect(&Lattice::new(g, h_rows)?)?;
            let index = h1.index().and_then(|v| v.to_u64());
            let gens = h1
                .basis()
                .iter()
                .map(|c| {
                    let w = GroupWord::from_syllables(c.iter().enumerate().map(|(i, v)| (i, v.to_i64().expect("small exponent"))));
                    t.eval(&w)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|m| !m.is_identity())
                .fold(Vec::new(), |mut acc: Vec<Matrix<T>>, m| {
                    if !acc.contains(&m) {
                        acc.push(m);
                    }
                    acc
                });
            (Some(gens), index)
        }
        None => (None, None),
    };
    Ok(PAdjustment { p, layer, layer_ranks: ranks, w_index, level, n_index, h1_generators, h1_index })
}

/// `verify_witness`: independent replay; false on any mismatch or error.
pub fn verify_witness<T: Scalar>(w: &SeparationWitness<T>, s: &SubgroupData<T>, x: &Matrix<T>, budget: usize) -> bool {
    let ring = &s.spec().ring;
    match w.verdict {
        Verdict::Inconclusive => false,
        Verdict::Member => match &w.word {
            Some(word) => s.eval_certificate(word).map(|m| m == *x).unwrap_or(false),
            None => false,
        },
        Verdict::Separated => {
            let Some(level) = w.level else { return false };
            if w.method == Some(SeparationMethod::BelowDiagonal) {
                let Ok(arith) = ResidueMatrices::new(ring, x.dim(), level) else { return false };
                let Ok(xr) = arith.reduce(ring, x) else { return false };
                let below = (0..x.dim()).any(|i| (0..i).any(|j| arith.entry(&xr, i, j).iter().any(|&c| c != 0)));
                return below && s.generators().iter().all(|g| g.is_triangular());
            }
            match closure(ring, x.dim(), s.generators(), level, budget) {
                Ok(c) => c.arith().reduce(ring, x).map(|xr| !c.contains(&xr)).unwrap_or(false),
                Err(_) => false,
            }
        }
    }
}

/// Convenience: build the subgroup and run the pipeline.
pub fn separate_generators<T: Scalar>(
    spec: &RingSpec<T>,
    n: usize,
    generators: Vec<Matrix<T>>,
    x: &Matrix<T>,
    bounds: &Bounds,
) -> Result<(SubgroupData<T>, SeparationWitness<T>)> {
    let s = SubgroupData::new(spec, n, generators, bounds)?;
    let w = separate(&s, x, bounds)?;
    Ok((s, w))
}
