#![allow(dead_code)]

use num_bigint::BigInt;
use polysep::matrix::{GroupWord, Matrix};
use polysep::units::RingSpec;
use rand::Rng;

pub type Spec = RingSpec<BigInt>;
pub type Mat = Matrix<BigInt>;

pub fn upper(spec: &Spec, rows: &[&[i64]]) -> Mat {
    Matrix::from_ints(&spec.ring, rows).unwrap()
}

pub fn u(spec: &Spec, b: i64) -> Mat {
    upper(spec, &[&[1, b], &[0, 1]])
}

pub fn d(spec: &Spec, a: i64, b: i64) -> Mat {
    upper(spec, &[&[a, 0], &[0, b]])
}

/// Triangular over `Z`: diagonal `±1`, strictly upper entries in `[-3, 3]`.
pub fn random_triangular<R: Rng>(spec: &Spec, n: usize, rng: &mut R) -> Mat {
    let mut rows = vec![vec![0i64; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = if rng.gen_bool(0.3) { -1 } else { 1 };
        for v in row.iter_mut().skip(i + 1) {
            *v = rng.gen_range(-3..=3);
        }
    }
    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    upper(spec, &refs)
}

pub fn random_word<R: Rng>(gens: usize, len: usize, rng: &mut R) -> GroupWord {
    GroupWord::from_syllables((0..len).map(|_| (rng.gen_range(0..gens), rng.gen_range(-2i64..=2))))
}

/// A random instance over `Z`: generators and `x`, with `x` a word in the
/// generators when `member` holds and a perturbed word otherwise.
pub fn random_instance<R: Rng>(spec: &Spec, n: usize, member: bool, rng: &mut R) -> (Vec<Mat>, Mat) {
    let ring = &spec.ring;
    let k = rng.gen_range(1..=n);
    let gens: Vec<Mat> = (0..k).map(|_| random_triangular(spec, n, rng)).collect();
    let len = rng.gen_range(0..=4);
    let x = random_word(k, len, rng).eval(ring, &gens, n).unwrap();
    if member {
        return (gens, x);
    }
    let mut e = vec![vec![0i64; n]; n];
    for (i, row) in e.iter_mut().enumerate() {
        row[i] = 1;
    }
    let i = rng.gen_range(0..n - 1);
    let j = rng.gen_range(i + 1..n);
    if rng.gen_bool(0.15) {
        e[j][i] = rng.gen_range(1..=3);
    } else {
        e[i][j] = if rng.gen_bool(0.5) { 1 } else { -1 };
    }
    let refs: Vec<&[i64]> = e.iter().map(|r| r.as_slice()).collect();
    let x = x.mul(ring, &upper(spec, &refs)).unwrap();
    (gens, x)
}
