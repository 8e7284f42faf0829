//! Finite-dimensional unitary representations of presented groups.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::character::GroupPresentation;
use crate::algebra::word::Word;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn identity(dim: usize) -> CMatrix {
    DMatrix::identity(dim, dim)
}

/// Frobenius norm of U^dagger U - I.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    (u.adjoint() * u - identity(u.nrows())).norm()
}

/// One unitary matrix per generator of the deck group (trivial-bundle case).
#[derive(Debug, Clone)]
pub struct UnitaryRep {
    pub dim: usize,
    pub matrices: Vec<CMatrix>,
}

impl UnitaryRep {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        let dim = matrices.first().map_or(0, |m| m.nrows());
        for (i, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Presentation(format!(
                    "generator matrix {i} is not {dim}x{dim}"
                )));
            }
            let defect = unitarity_defect(m);
            if defect > 1e-12 {
                return Err(Error::Presentation(format!(
                    "generator matrix {i} is not unitary (defect {defect:.3e})"
                )));
            }
        }
        Ok(UnitaryRep { dim, matrices })
    }

    /// Scalar representation of Z with generator phase e^{i beta}.
    pub fn cyclic_phase(beta: f64) -> Self {
        let m = DMatrix::from_element(1, 1, Complex64::cis(beta));
        UnitaryRep {
            dim: 1,
            matrices: vec![m],
        }
    }

    pub fn eval(&self, w: &Word) -> Result<CMatrix> {
        let mut out = identity(self.dim);
        for &(g, e) in w.factors() {
            let m = self
                .matrices
                .get(g)
                .ok_or_else(|| Error::UnknownGenerator(format!("generator #{g}")))?;
            let step = if e >= 0 { m.clone() } else { m.adjoint() };
            for _ in 0..e.unsigned_abs() {
                out *= &step;
            }
        }
        Ok(out)
    }

    /// Max residual of the defining relations under this assignment.
    pub fn relation_defect(&self, p: &GroupPresentation) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in &p.relations {
            let m = self.eval(r)?;
            worst = worst.max((m - identity(self.dim)).norm());
        }
        Ok(worst)
    }
}

/// Position-independence check for a section given on several base points:
/// true iff all sampled matrices agree within `tol`. On a trivial bundle a
/// parallel section is constant.
pub fn check_parallel_constancy(samples: &[CMatrix], tol: f64) -> bool {
    match samples.split_first() {
        None => true,
        Some((first, rest)) => rest.iter().all(|m| (m - first).norm() <= tol),
    }
}
