//! Minimal complex sparse-matrix support and an unpreconditioned BiCGStab
//! solver, enough for the Crank-Nicolson updates on the twisted grids.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Triplets {
    pub n: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: Complex64) {
        debug_assert!(row < self.n && col < self.n);
        if val != Complex64::new(0.0, 0.0) {
            self.entries.push((row, col, val));
        }
    }

    pub fn to_csr(mut self) -> Csr {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col = merged.iter().map(|&(_, c, _)| c).collect();
        let val = merged.iter().map(|&(_, _, v)| v).collect();
        Csr {
            n: self.n,
            row_ptr,
            col,
            val,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<Complex64>,
}

impl Csr {
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            y[i] = acc;
        }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col[k], self.val[k]))
        })
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves A x = b for a general operator given as a matvec closure.
/// Unpreconditioned BiCGStab; the Crank-Nicolson matrices here are
/// well-conditioned shifts of the identity.
pub fn bicgstab<F>(apply: F, b: &[Complex64], x0: &[Complex64], tol: f64, max_iter: usize) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let mut x = x0.to_vec();
    let mut r = vec![Complex64::new(0.0, 0.0); n];
    apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    if norm(&r) / b_norm <= tol {
        return Ok(x);
    }
    let r0 = r.clone();
    let mut rho = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega = Complex64::new(1.0, 0.0);
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    let mut t = vec![Complex64::new(0.0, 0.0); n];
    let mut residual = norm(&r) / b_norm;
    for iter in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.norm() < 1e-300 {
            return Err(Error::SolverStalled {
                residual,
                iters: iter,
                tol,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply(&p, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / b_norm <= tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok(x);
        }
        apply(&s, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        residual = norm(&r) / b_norm;
        if residual <= tol {
            return Ok(x);
        }
    }
    Err(Error::SolverStalled {
        residual,
        iters: max_iter,
        tol,
    })
}
