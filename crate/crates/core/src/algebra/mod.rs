//! Machine-precision algebra of topological factors.

pub mod character;
pub mod pauli;
pub mod perm;
pub mod rep;
pub mod section;
pub mod semidirect;
pub mod su2;
pub mod word;

pub use character::{classify_characters, Character, CharacterFamily, GroupPresentation};
pub use pauli::{commutant_is_scalar, CommutantReport, PauliPotential};
pub use perm::Perm;
pub use rep::{check_parallel_constancy, CMatrix, UnitaryRep};
pub use section::{compose_section, fermion_factor, twisted_law_residual, PeriodicitySection};
pub use semidirect::{perm_operator, semidirect_mul, SemidirectElement};
pub use su2::{aharonov_casher_factor, dot_sigma, expm, su2_rotation};
pub use word::Word;
