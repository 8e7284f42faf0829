//! The deck group of N identical particles: the semidirect product of S_N
//! with the N-fold product of the single-particle deck group.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::algebra::perm::Perm;
use crate::algebra::rep::CMatrix;
use crate::algebra::word::Word;
use crate::error::{Error, Result};
use crate::geometry::{CoverPoint, DeckElement};

/// sigma = p sigma-tilde: a permutation together with one single-particle
/// deck word per particle slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemidirectElement {
    pub perm: Perm,
    pub tuple: Vec<Word>,
}

impl SemidirectElement {
    pub fn new(perm: Perm, tuple: Vec<Word>) -> Result<Self> {
        if perm.len() != tuple.len() {
            return Err(Error::Presentation(format!(
                "permutation degree {} does not match tuple length {}",
                perm.len(),
                tuple.len()
            )));
        }
        Ok(SemidirectElement { perm, tuple })
    }

    pub fn identity(n: usize) -> Self {
        SemidirectElement {
            perm: Perm::identity(n),
            tuple: vec![Word::identity(); n],
        }
    }

    /// Deck group Z case: windings per slot.
    pub fn from_windings(perm: Perm, windings: &[i64]) -> Result<Self> {
        let tuple = windings.iter().map(|&w| Word::power(0, w)).collect();
        SemidirectElement::new(perm, tuple)
    }

    pub fn n(&self) -> usize {
        self.tuple.len()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.is_identity() && self.tuple.iter().all(|w| w.is_identity())
    }

    /// p_2^{-1} sigma-tilde p_2: slot j receives the word of slot p_2(j).
    fn conjugate_tuple(tuple: &[Word], p: &Perm) -> Vec<Word> {
        (0..tuple.len()).map(|j| tuple[p.apply(j)].clone()).collect()
    }

    pub fn inverse(&self) -> SemidirectElement {
        let pinv = self.perm.inverse();
        let inverted: Vec<Word> = self.tuple.iter().map(|w| w.inverse()).collect();
        SemidirectElement {
            tuple: Self::conjugate_tuple(&inverted, &pinv),
            perm: pinv,
        }
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize, max_winding: i64) -> SemidirectElement {
        let perm = Perm::random(rng, n);
        let windings: Vec<i64> = (0..n)
            .map(|_| rng.random_range(-max_winding..=max_winding))
            .collect();
        SemidirectElement::from_windings(perm, &windings).expect("lengths match")
    }

    /// Action on an N-tuple of cover points of a deck-group-Z geometry:
    /// component i of sigma q is sigma^{(p^-1(i))} applied to q_{p^-1(i)}.
    pub fn act_points(&self, points: &[CoverPoint]) -> Result<Vec<CoverPoint>> {
        if points.len() != self.n() {
            return Err(Error::Presentation(format!(
                "expected {} points, got {}",
                self.n(),
                points.len()
            )));
        }
        let pinv = self.perm.inverse();
        Ok((0..self.n())
            .map(|i| {
                let src = pinv.apply(i);
                let shift = DeckElement(self.tuple[src].exponent_sum(0));
                crate::geometry::deck_act(shift, &points[src])
            })
            .collect())
    }
}

/// Product law of the semidirect decomposition:
/// (p1, t1)(p2, t2) = (p1 p2, p2^-1 t1 p2 . t2).
pub fn semidirect_mul(a: &SemidirectElement, b: &SemidirectElement) -> Result<SemidirectElement> {
    if a.n() != b.n() {
        return Err(Error::Presentation(format!(
            "mismatched particle counts {} and {}",
            a.n(),
            b.n()
        )));
    }
    let conj = SemidirectElement::conjugate_tuple(&a.tuple, &b.perm);
    let tuple = conj
        .iter()
        .zip(&b.tuple)
        .map(|(x, y)| x.concat(y))
        .collect();
    Ok(SemidirectElement {
        perm: a.perm.compose(&b.perm),
        tuple,
    })
}

/// Permutation of tensor factors on W^{otimes N}: P_p (v_1 x ... x v_N) has
/// v_{p(j)} in slot j, so that P_p (A_1 x ... x A_N) P_p^-1 = x_j A_{p(j)}.
pub fn perm_operator(p: &Perm, w_dim: usize) -> CMatrix {
    let n = p.len();
    let dim = w_dim.pow(n as u32);
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    let mut col_digits = vec![0usize; n];
    for col in 0..dim {
        // decode column multi-index, slot 0 most significant
        let mut rem = col;
        for j in (0..n).rev() {
            col_digits[j] = rem % w_dim;
            rem /= w_dim;
        }
        let mut row = 0usize;
        for j in 0..n {
            row = row * w_dim + col_digits[p.apply(j)];
        }
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    m
}
