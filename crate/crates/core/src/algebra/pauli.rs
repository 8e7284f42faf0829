//! Pauli-type potentials on the N-particle spin fiber and the commutant
//! computation behind character rigidity: a topological factor that commutes
//! with the potentials of all magnetic fields must be a scalar.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::rep::{identity, CMatrix};
use crate::algebra::su2::dot_sigma;
use crate::error::{Error, Result};

/// V(q) = -mu sum_q B(q) . sigma_q on the tensor fiber (C^2)^{otimes N}.
#[derive(Debug, Clone)]
pub struct PauliPotential {
    pub n: usize,
    pub spin_dim: usize,
    pub mu: f64,
    /// Per sampled configuration, one magnetic vector per particle.
    pub field_samples: Vec<Vec<[f64; 3]>>,
}

impl PauliPotential {
    pub fn new(n: usize, field_samples: Vec<Vec<[f64; 3]>>) -> Result<Self> {
        for (i, s) in field_samples.iter().enumerate() {
            if s.len() != n {
                return Err(Error::Presentation(format!(
                    "sample {i} has {} field vectors for {n} particles",
                    s.len()
                )));
            }
        }
        Ok(PauliPotential {
            n,
            spin_dim: 2,
            mu: 1.0,
            field_samples,
        })
    }

    /// Default sampling budget: unit-normal components, mu = 1.
    pub fn random(n: usize, n_samples: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field_samples = (0..n_samples)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        [
                            StandardNormal.sample(&mut rng),
                            StandardNormal.sample(&mut rng),
                            StandardNormal.sample(&mut rng),
                        ]
                    })
                    .collect()
            })
            .collect();
        PauliPotential {
            n,
            spin_dim: 2,
            mu: 1.0,
            field_samples,
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.spin_dim.pow(self.n as u32)
    }

    /// Potential matrix for one field sample.
    pub fn matrix(&self, sample: usize) -> CMatrix {
        let d = self.fiber_dim();
        let mut v = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for (slot, &b) in self.field_samples[sample].iter().enumerate() {
            let mut term = if slot == 0 {
                dot_sigma(b)
            } else {
                identity(self.spin_dim)
            };
            for j in 1..self.n {
                let factor = if j == slot {
                    dot_sigma(b)
                } else {
                    identity(self.spin_dim)
                };
                term = term.kronecker(&factor);
            }
            v += term;
        }
        v * Complex64::new(-self.mu, 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct CommutantReport {
    /// True iff the joint commutant of all sampled potentials is exactly the
    /// scalar multiples of the identity.
    pub scalar: bool,
    pub null_dim: usize,
    /// Non-scalar commuting matrix when `scalar` is false.
    pub witness: Option<CMatrix>,
    /// Fewer samples than the recommended dim^2 budget.
    pub sample_deficit: bool,
}

/// Solves [V_s, X] = 0 over all samples by a null-space computation on the
/// d^2-dimensional matrix space. Singular values below 1e-8 of the largest
/// count as zero.
pub fn commutant_is_scalar(pot: &PauliPotential) -> Result<CommutantReport> {
    if pot.spin_dim != 2 {
        return Err(Error::Presentation(
            "only spin 1/2 fibers are supported".into(),
        ));
    }
    if pot.field_samples.is_empty() {
        return Err(Error::TooFewSamples);
    }
    let d = pot.fiber_dim();
    let d2 = d * d;
    // Stacked commutator operators: vec([V,X]) = (I (x) V - V^T (x) I) vec(X).
    let n_samples = pot.field_samples.len();
    let mut stacked = DMatrix::from_element(n_samples * d2, d2, Complex64::new(0.0, 0.0));
    for s in 0..n_samples {
        let v = pot.matrix(s);
        let op = identity(d).kronecker(&v) - v.transpose().kronecker(&identity(d));
        stacked.view_mut((s * d2, 0), (d2, d2)).copy_from(&op);
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = 1e-8 * max_sv.max(f64::EPSILON);

    let mut null_vectors: Vec<DVector<Complex64>> = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv < cutoff {
            null_vectors.push(v_t.row(i).adjoint());
        }
    }
    let null_dim = null_vectors.len();

    // Identity direction, normalized under the Frobenius inner product.
    let mut id_vec = DVector::from_element(d2, Complex64::new(0.0, 0.0));
    for k in 0..d {
        id_vec[k * d + k] = Complex64::new(1.0, 0.0);
    }
    id_vec /= Complex64::new((d as f64).sqrt(), 0.0);

    let mut witness = None;
    for v in &null_vectors {
        let overlap = id_vec.dotc(v);
        let residual = v - &id_vec * overlap;
        if residual.norm() > 1e-6 {
            let w = DMatrix::from_fn(d, d, |i, j| residual[j * d + i]);
            witness = Some(w / Complex64::new(residual.norm(), 0.0));
            break;
        }
    }

    let scalar = null_dim == 1 && witness.is_none();
    Ok(CommutantReport {
        scalar,
        null_dim,
        witness,
        sample_deficit: pot.field_samples.len() < d2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::su2::pauli_z;

    fn commutes_with_all(pot: &PauliPotential, x: &CMatrix, tol: f64) -> bool {
        (0..pot.field_samples.len()).all(|s| {
            let v = pot.matrix(s);
            (&v * x - x * &v).norm() < tol
        })
    }

    #[test]
    fn two_spins_random_fields_commutant_is_scalar() {
        let pot = PauliPotential::random(2, 20, 42);
        let report = commutant_is_scalar(&pot).unwrap();
        assert!(report.scalar);
        assert_eq!(report.null_dim, 1);
        assert!(report.witness.is_none());
    }

    #[test]
    fn zero_field_single_sample_commutes_with_everything() {
        let pot = PauliPotential::new(2, vec![vec![[0.0; 3]; 2]]).unwrap();
        let report = commutant_is_scalar(&pot).unwrap();
        assert!(!report.scalar);
        assert_eq!(report.null_dim, 16);
        let w = report.witness.expect("non-scalar witness");
        assert!(commutes_with_all(&pot, &w, 1e-10));
    }

    #[test]
    fn parallel_fields_leave_sigma_z() {
        let samples = (0..8)
            .map(|k| vec![[0.0, 0.0, 1.0 + 0.3 * k as f64]])
            .collect();
        let pot = PauliPotential::new(1, samples).unwrap();
        let report = commutant_is_scalar(&pot).unwrap();
        assert!(!report.scalar);
        let w = report.witness.expect("witness");
        assert!(commutes_with_all(&pot, &w, 1e-9));
        // sigma_z itself is in the commutant
        assert!(commutes_with_all(&pot, &pauli_z(), 1e-12));
    }

    #[test]
    fn empty_samples_reported_not_guessed() {
        let pot = PauliPotential::new(2, Vec::new()).unwrap();
        assert!(matches!(
            commutant_is_scalar(&pot),
            Err(Error::TooFewSamples)
        ));
    }

    #[test]
    fn dense_residual_oracle_agrees() {
        // independent route: scan a spanning set of the 16-dim matrix space
        // and count directions that commute with every sample.
        let pot = PauliPotential::random(2, 12, 7);
        let report = commutant_is_scalar(&pot).unwrap();
        let mut commuting_basis_count = 0;
        for a in 0..4 {
            for b in 0..4 {
                let mut e = DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
                e[(a, b)] = Complex64::new(1.0, 0.0);
                if commutes_with_all(&pot, &e, 1e-10) {
                    commuting_basis_count += 1;
                }
            }
        }
        // only multiples of the identity commute, and no single elementary
        // matrix does except via the scalar combination: none individually.
        assert_eq!(commuting_basis_count, 0);
        assert!(report.scalar);
        assert!(commutes_with_all(&pot, &identity(4), 1e-12));
    }
}
