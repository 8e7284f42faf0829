//! Pauli matrices and small-matrix exponentials.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::rep::CMatrix;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn pauli_x() -> CMatrix {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// n . sigma for a real 3-vector n.
pub fn dot_sigma(n: [f64; 3]) -> CMatrix {
    let [x, y, z] = n;
    pauli_x() * Complex64::new(x, 0.0)
        + pauli_y() * Complex64::new(y, 0.0)
        + pauli_z() * Complex64::new(z, 0.0)
}

/// Matrix exponential by scaling and squaring with a Taylor series summed to
/// machine precision. Intended for small matrices (fiber dimensions).
pub fn expm(a: &CMatrix) -> CMatrix {
    let norm = a.norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / Complex64::new(f64::powi(2.0, s as i32), 0.0);
    let dim = a.nrows();
    let mut result = DMatrix::identity(dim, dim);
    let mut term: CMatrix = DMatrix::identity(dim, dim);
    for k in 1..64 {
        term = (&term * &scaled) / Complex64::new(k as f64, 0.0);
        result += &term;
        if term.norm() < 1e-16 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// exp(-i alpha (e . sigma)) for a unit axis e.
pub fn su2_rotation(alpha: f64, axis: [f64; 3]) -> Result<CMatrix> {
    let norm2 = axis.iter().map(|x| x * x).sum::<f64>();
    if (norm2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::Geometry(format!(
            "axis must be a unit vector, |axis| = {}",
            norm2.sqrt()
        )));
    }
    Ok(expm(&(dot_sigma(axis) * (-I * Complex64::new(alpha, 0.0)))))
}

/// Topological factor of the Aharonov-Casher setting for a neutral spin-1/2
/// magnetic moment mu encircling a wire of line charge lambda:
/// exp(-4 pi i (mu lambda / hbar) e . sigma).
pub fn aharonov_casher_factor(mu_lambda_over_hbar: f64, axis: [f64; 3]) -> Result<CMatrix> {
    su2_rotation(4.0 * std::f64::consts::PI * mu_lambda_over_hbar, axis)
}
