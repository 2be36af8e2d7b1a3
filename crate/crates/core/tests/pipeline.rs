mod common;

use common::*;
use polysep::matrix::Matrix;
use polysep::separator::{separate, verify_witness, SeparationMethod, Verdict};
use polysep::subgroup::{Bounds, SubgroupData};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_instance(seed: u64, n: usize, member: bool) -> Result<Verdict, String> {
    let z = Spec::integers();
    let bounds = Bounds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (gens, x) = random_instance(&z, n, member, &mut rng);
    let s = SubgroupData::new(&z, n, gens, &bounds).map_err(|e| e.to_string())?;
    let w = separate(&s, &x, &bounds).map_err(|e| e.to_string())?;
    match w.verdict {
        Verdict::Separated if member => return Err("word in S reported separated".into()),
        Verdict::Inconclusive if member => return Err("word in S reported inconclusive".into()),
        Verdict::Member if s.eval_certificate(w.word.as_ref().unwrap()).unwrap() != x => return Err("wrong word".into()),
        _ => {}
    }
    if w.verdict != Verdict::Inconclusive && !verify_witness(&w, &s, &x, bounds.closure_budget) {
        return Err(format!("witness does not verify: {w:?}"));
    }
    if let Some(b) = &w.certified_bound {
        if b.separates && w.method != Some(SeparationMethod::BelowDiagonal) && w.level.unwrap() > b.certificate.value {
            return Err("search level exceeds the certified level".into());
        }
    }
    Ok(w.verdict)
}

#[test]
#[ignore]
fn stress() {
    let mut failures = Vec::new();
    for seed in 0..600u64 {
        let n = 2 + (seed % 3) as usize;
        if let Err(e) = check_instance(seed, n, seed % 2 == 0) {
            failures.push(format!("seed {seed} n {n}: {e}"));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
    #[test]
    fn random_instances_are_sound(seed in 0u64..1_000_000, n in 2usize..=3, member: bool) {
        if let Err(e) = check_instance(seed, n, member) {
            return Err(proptest::test_runner::TestCaseError::fail(format!("seed {seed} n {n}: {e}")));
        }
    }
}

fn theta_translation(spec: &Spec) -> Mat {
    let r = &spec.ring;
    Matrix::from_rows(vec![vec![r.one(), r.theta()], vec![r.zero(), r.one()]]).unwrap()
}

fn separates_theta_translation(spec: Spec) {
    let bounds = Bounds::default();
    let s = SubgroupData::new(&spec, 2, vec![u(&spec, 1)], &bounds).unwrap();
    let x = theta_translation(&spec);
    let w = separate(&s, &x, &bounds).unwrap();
    assert_eq!(w.verdict, Verdict::Separated, "{w:?}");
    assert!(verify_witness(&w, &s, &x, bounds.closure_budget));
    let member = u(&spec, 1).pow(&spec.ring, -5).unwrap();
    let w = separate(&s, &member, &bounds).unwrap();
    assert_eq!(w.verdict, Verdict::Member);
    assert_eq!(s.eval_certificate(w.word.as_ref().unwrap()).unwrap(), member);
}

#[test]
fn gaussian_translation_is_separated() {
    separates_theta_translation(Spec::gaussian_integers());
}

#[test]
fn sqrt2_translation_is_separated() {
    separates_theta_translation(Spec::real_quadratic_sqrt2());
}
