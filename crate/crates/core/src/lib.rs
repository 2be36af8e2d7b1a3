//! Exact separation of elements from solvable triangular matrix groups over
//! localized number rings, by congruence quotients.

pub mod cli;
pub mod error;
pub mod finite;
pub mod io;
pub mod lattice;
pub mod levels;
pub mod matrix;
pub mod ring;
pub mod scalar;
pub mod separator;
pub mod subgroup;
pub mod unipotent;
pub mod units;

use num_bigint::BigInt;

pub use error::{Error, Result, SpanFailure};
pub use scalar::Scalar;

pub type Int = BigInt;
pub type Element = ring::RingElement<BigInt>;
pub type Ring = ring::Ring<BigInt>;
pub type IntLattice = lattice::Lattice<BigInt>;
pub type ExponentLattice = units::ExponentLattice<BigInt>;
pub type UnitGroupBasis = units::UnitGroupBasis<BigInt>;
pub type RingSpec = units::RingSpec<BigInt>;
pub type Matrix = matrix::Matrix<BigInt>;
pub type SubgroupData = subgroup::SubgroupData<BigInt>;
pub type SeparationWitness = separator::SeparationWitness<BigInt>;

pub use matrix::GroupWord;
pub use separator::{separate, verify_witness, Verdict};
pub use subgroup::{Bounds, Membership};
