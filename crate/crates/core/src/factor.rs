//! Topological factors attached to the deck group of a scenario.

use num_complex::Complex64;

use crate::algebra::rep::{identity, CMatrix, UnitaryRep};
use crate::algebra::section::PeriodicitySection;
use crate::algebra::Character;
use crate::error::{Error, Result};

/// The scalar or matrix factor relating wave values across the covering
/// fiber: gamma_sigma, Gamma_sigma, or a full periodicity section.
#[derive(Debug, Clone)]
pub enum TopologicalFactor {
    Character(Character),
    UnitaryRep(UnitaryRep),
    Section(PeriodicitySection),
}

impl TopologicalFactor {
    /// Character of the deck group Z with generator phase e^{i beta}.
    pub fn phase(beta: f64) -> Self {
        TopologicalFactor::Character(Character::cyclic(beta))
    }

    pub fn trivial() -> Self {
        TopologicalFactor::phase(0.0)
    }

    /// Matrix of the single deck generator, promoted to the requested fiber
    /// dimension. This is what enters the wraparound stencil of the PDE
    /// scenarios (deck group Z).
    pub fn generator_matrix(&self, fiber_dim: usize) -> Result<CMatrix> {
        match self {
            TopologicalFactor::Character(c) => {
                let z = *c
                    .phases
                    .first()
                    .ok_or_else(|| Error::UnknownGenerator("deck generator".into()))?;
                if (z.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::Presentation("character phase not unit modulus".into()));
                }
                Ok(identity(fiber_dim) * z)
            }
            TopologicalFactor::UnitaryRep(rep) => {
                if rep.dim != fiber_dim {
                    return Err(Error::Presentation(format!(
                        "factor dimension {} does not match fiber dimension {fiber_dim}",
                        rep.dim
                    )));
                }
                rep.matrices
                    .first()
                    .cloned()
                    .ok_or_else(|| Error::UnknownGenerator("deck generator".into()))
            }
            TopologicalFactor::Section(PeriodicitySection::Rep(rep)) => {
                TopologicalFactor::UnitaryRep(rep.clone()).generator_matrix(fiber_dim)
            }
            TopologicalFactor::Section(PeriodicitySection::Fermion { .. }) => {
                Err(Error::Presentation(
                    "fermion-bundle sections are exercised algebraically, not as PDE factors"
                        .into(),
                ))
            }
        }
    }

    /// Scalar phase when the factor is (equivalent to) a character.
    pub fn scalar_phase(&self) -> Option<Complex64> {
        match self {
            TopologicalFactor::Character(c) => c.phases.first().copied(),
            _ => None,
        }
    }
}
