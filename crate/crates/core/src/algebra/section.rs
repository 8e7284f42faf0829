//! Periodicity sections: families of unitary fiber endomorphisms indexed by
//! deck elements, obeying the holonomy-twisted composition law.

use num_complex::Complex64;

use crate::algebra::character::Character;
use crate::algebra::rep::{identity, CMatrix, UnitaryRep};
use crate::algebra::semidirect::{perm_operator, semidirect_mul, SemidirectElement};
use crate::error::{Error, Result};
use crate::geometry::CoverPoint;

/// Topological factor data for a fiber dimension > 1 (or a character seen as
/// a 1x1 section).
///
/// `Rep` is the trivial-bundle case: the holonomy is trivial and the base
/// matrices form an ordinary unitary representation. `Fermion` is the
/// N-particle bundle with fiber W^{otimes N}, whose holonomy is the
/// tensor-factor permutation action of the loop class.
#[derive(Debug, Clone)]
pub enum PeriodicitySection {
    Rep(UnitaryRep),
    Fermion { n: usize, single: UnitaryRep },
}

impl PeriodicitySection {
    pub fn from_character(c: &Character, dim: usize) -> Result<Self> {
        if !c.is_unitary(1e-12) {
            return Err(Error::Presentation("character is not unit modulus".into()));
        }
        let mats = c
            .phases
            .iter()
            .map(|&z| identity(dim) * z)
            .collect();
        Ok(PeriodicitySection::Rep(UnitaryRep::new(mats)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            PeriodicitySection::Rep(rep) => rep.dim,
            PeriodicitySection::Fermion { n, single } => single.dim.pow(*n as u32),
        }
    }

    fn expected_n(&self) -> usize {
        match self {
            PeriodicitySection::Rep(_) => 1,
            PeriodicitySection::Fermion { n, .. } => *n,
        }
    }

    /// Gamma_sigma at the base fiber.
    pub fn base_matrix(&self, sigma: &SemidirectElement) -> Result<CMatrix> {
        if sigma.n() != self.expected_n() {
            return Err(Error::Presentation(format!(
                "deck element has {} slots, section expects {}",
                sigma.n(),
                self.expected_n()
            )));
        }
        match self {
            PeriodicitySection::Rep(rep) => {
                if !sigma.perm.is_identity() {
                    return Err(Error::Presentation(
                        "trivial-bundle section takes plain deck words".into(),
                    ));
                }
                rep.eval(&sigma.tuple[0])
            }
            PeriodicitySection::Fermion { n, single } => {
                let mut out = single.eval(&sigma.tuple[0])?;
                for j in 1..*n {
                    out = out.kronecker(&single.eval(&sigma.tuple[j])?);
                }
                let sgn = Complex64::new(sigma.perm.sign() as f64, 0.0);
                Ok(out * sgn)
            }
        }
    }

    /// Holonomy endomorphism of the loop class picked out by `sigma`.
    pub fn holonomy(&self, sigma: &SemidirectElement) -> Result<CMatrix> {
        if sigma.n() != self.expected_n() {
            return Err(Error::Presentation(format!(
                "deck element has {} slots, section expects {}",
                sigma.n(),
                self.expected_n()
            )));
        }
        match self {
            PeriodicitySection::Rep(rep) => Ok(identity(rep.dim)),
            PeriodicitySection::Fermion { single, .. } => {
                Ok(perm_operator(&sigma.perm, single.dim))
            }
        }
    }
}

/// Gamma_{sigma1 sigma2} computed through the twisted law
/// h_{alpha2} Gamma_{sigma1} h_{alpha2}^-1 Gamma_{sigma2}.
pub fn compose_section(
    section: &PeriodicitySection,
    sigma1: &SemidirectElement,
    sigma2: &SemidirectElement,
) -> Result<CMatrix> {
    let h2 = section.holonomy(sigma2)?;
    let g1 = section.base_matrix(sigma1)?;
    let g2 = section.base_matrix(sigma2)?;
    Ok(&h2 * g1 * h2.adjoint() * g2)
}

/// The N-fermion topological factor at a cover point off the extended
/// diagonal: sgn(p) times the slot-wise tensor product of single-particle
/// factors.
pub fn fermion_factor(
    sigma: &SemidirectElement,
    single: &UnitaryRep,
    points: &[CoverPoint],
) -> Result<CMatrix> {
    if points.len() != sigma.n() {
        return Err(Error::Presentation(format!(
            "configuration has {} particles, deck element {}",
            points.len(),
            sigma.n()
        )));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let a = points[i].base;
            let b = points[j].base;
            if (a.r - b.r).abs() < 1e-12 && (a.theta - b.theta).abs() < 1e-12 {
                return Err(Error::Geometry(
                    "configuration lies on the extended diagonal".into(),
                ));
            }
        }
    }
    let section = PeriodicitySection::Fermion {
        n: sigma.n(),
        single: single.clone(),
    };
    section.base_matrix(sigma)
}

/// Max residual of the twisted-law chain over the direct evaluation,
/// for a list of element pairs.
pub fn twisted_law_residual(
    section: &PeriodicitySection,
    pairs: &[(SemidirectElement, SemidirectElement)],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (a, b) in pairs {
        let direct = section.base_matrix(&semidirect_mul(a, b)?)?;
        let chained = compose_section(section, a, b)?;
        worst = worst.max((direct - chained).norm());
    }
    Ok(worst)
}
