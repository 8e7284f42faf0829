//! Twisted-grid Hamiltonians, Crank-Nicolson evolution and stationary
//! spectra.
//!
//! The wave is stored on one fundamental domain; the periodicity condition
//! enters through the theta-wraparound stencil entries, which carry the
//! generator factor on one orientation and its adjoint on the other. The
//! resulting operator is Hermitian with respect to the quadrature inner
//! product.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::rep::{identity, CMatrix};
use crate::error::{Error, Result};
use crate::factor::TopologicalFactor;
use crate::geometry::{build_grid, Geometry, GridSpec};
use crate::sparse::{bicgstab, Csr, Triplets};

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex field over the discretized fundamental domain, values indexed
/// node-major: `values[node * fiber_dim + component]`.
#[derive(Debug, Clone)]
pub struct CoveringWave {
    pub geometry: Geometry,
    pub grid: GridSpec,
    pub fiber_dim: usize,
    pub factor: TopologicalFactor,
    pub values: Vec<Complex64>,
    pub time: f64,
}

impl CoveringWave {
    pub fn zero(geometry: Geometry, factor: TopologicalFactor) -> Result<Self> {
        let grid = build_grid(&geometry)?;
        let fiber_dim = geometry.fiber_dim();
        let values = vec![C_ZERO; grid.n_nodes() * fiber_dim];
        Ok(CoveringWave {
            geometry,
            grid,
            fiber_dim,
            factor,
            values,
            time: 0.0,
        })
    }

    /// Pointwise fiber density (psi, psi) at a node.
    pub fn density(&self, node: usize) -> f64 {
        let f = self.fiber_dim;
        (0..f).map(|s| self.values[node * f + s].norm_sqr()).sum()
    }

    pub fn densities(&self) -> Vec<f64> {
        (0..self.grid.n_nodes()).map(|n| self.density(n)).collect()
    }

    /// Quadrature norm: integral over the fundamental domain of (psi, psi).
    pub fn norm(&self) -> f64 {
        (0..self.grid.n_nodes())
            .map(|n| self.grid.weights[n] * self.density(n))
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        let inv = Complex64::new(1.0 / n, 0.0);
        for v in &mut self.values {
            *v *= inv;
        }
        Ok(())
    }

    /// Gaussian-like packet centered at (r0, theta0) with the given widths
    /// and momenta, wrapped periodically in theta, zero at radial walls.
    pub fn gaussian_packet(
        geometry: Geometry,
        factor: TopologicalFactor,
        center: (f64, f64),
        width: (f64, f64),
        momentum: (f64, f64),
    ) -> Result<Self> {
        let mut wave = CoveringWave::zero(geometry, factor)?;
        let grid = wave.grid.clone();
        let period = grid.theta_period;
        let f = wave.fiber_dim;
        for i in 0..grid.n_r {
            let in_wall = geometry.has_radial_extent() && !grid.interior_rows.contains(&i);
            for j in 0..grid.n_theta {
                if in_wall {
                    continue;
                }
                let r = grid.r_nodes[i];
                let theta = grid.theta_nodes[j];
                // periodic distance in theta
                let mut dth = theta - center.1;
                dth -= (dth / period).round() * period;
                let dr = r - center.0;
                let envelope = (-0.5 * (dth / width.1).powi(2)
                    - if geometry.has_radial_extent() {
                        0.5 * (dr / width.0).powi(2)
                    } else {
                        0.0
                    })
                .exp();
                let phase = Complex64::cis(momentum.1 * theta + momentum.0 * r);
                wave.values[grid.idx(i, j) * f] = phase * Complex64::new(envelope, 0.0);
            }
        }
        if f == 1 {
            wave.align_with_twist()?;
        }
        wave.normalize()?;
        Ok(wave)
    }

    /// Packet that is radially quiet: sine profile vanishing at the walls
    /// (the radial ground-state shape) times a periodic theta Gaussian with
    /// angular momentum. Keeps radial probability flux small, so wall drops
    /// stay within budget on annulus-type geometries.
    pub fn annular_packet(
        geometry: Geometry,
        factor: TopologicalFactor,
        theta_center: f64,
        theta_width: f64,
        angular_momentum: f64,
    ) -> Result<Self> {
        let mut wave = CoveringWave::zero(geometry, factor)?;
        let grid = wave.grid.clone();
        let period = grid.theta_period;
        let f = wave.fiber_dim;
        let span = geometry.r_out - geometry.r_in;
        for i in 0..grid.n_r {
            if !grid.interior_rows.contains(&i) {
                continue;
            }
            let radial = (std::f64::consts::PI * (grid.r_nodes[i] - geometry.r_in) / span).sin();
            for j in 0..grid.n_theta {
                let theta = grid.theta_nodes[j];
                let mut dth = theta - theta_center;
                dth -= (dth / period).round() * period;
                let envelope = radial * (-0.5 * (dth / theta_width).powi(2)).exp();
                wave.values[grid.idx(i, j) * f] =
                    Complex64::cis(angular_momentum * theta) * Complex64::new(envelope, 0.0);
            }
        }
        if f == 1 {
            wave.align_with_twist()?;
        }
        wave.normalize()?;
        Ok(wave)
    }

    /// Multiplies each theta column by `Gamma^{theta/period}` so that the
    /// factor-continued wave is smooth across the domain seam even though the
    /// stored profile is plain-periodic. Without this a twisted packet
    /// centered near theta = 0 carries a phase kink of `Gamma` right at its
    /// maximum, which the stencil resolves as a spurious excitation.
    fn align_with_twist(&mut self) -> Result<()> {
        let gamma = self.factor.generator_matrix(self.fiber_dim)?;
        if (&gamma - identity(self.fiber_dim)).norm() < 1e-15 {
            return Ok(());
        }
        let f = self.fiber_dim;
        let grid = self.grid.clone();
        for j in 0..grid.n_theta {
            let m = unitary_fractional_power(&gamma, grid.theta_nodes[j] / grid.theta_period);
            for i in 0..grid.n_r {
                let node = grid.idx(i, j);
                let vin: Vec<Complex64> = self.values[node * f..(node + 1) * f].to_vec();
                for s in 0..f {
                    self.values[node * f + s] = (0..f).map(|t| m[(s, t)] * vin[t]).sum();
                }
            }
        }
        Ok(())
    }

    /// Constant spinor tensor the scalar profile, then twist-aligned so the
    /// result is seam-smooth under a matrix factor.
    pub fn with_spinor(mut self, spinor: [Complex64; 2]) -> Self {
        assert_eq!(self.fiber_dim, 2);
        let scalar: Vec<Complex64> = (0..self.grid.n_nodes())
            .map(|n| self.values[n * 2])
            .collect();
        for (n, &z) in scalar.iter().enumerate() {
            self.values[n * 2] = z * spinor[0];
            self.values[n * 2 + 1] = z * spinor[1];
        }
        self.align_with_twist()
            .expect("factor consistent with a 2-dim fiber");
        self
    }
}

/// Hermitian fiber endomorphism per grid node (scalar for fiber 1).
#[derive(Debug, Clone)]
pub enum PotentialField {
    Zero,
    /// Real scalar value per full-grid node.
    Scalar(Vec<f64>),
    /// Hermitian fiber block per full-grid node.
    Matrix(Vec<CMatrix>),
}

impl PotentialField {
    pub fn radial(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let mut vals = vec![0.0; grid.n_nodes()];
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                vals[grid.idx(i, j)] = f(grid.r_nodes[i]);
            }
        }
        PotentialField::Scalar(vals)
    }

    pub fn block(&self, node: usize, fiber_dim: usize) -> CMatrix {
        match self {
            PotentialField::Zero => DMatrix::from_element(fiber_dim, fiber_dim, C_ZERO),
            PotentialField::Scalar(v) => identity(fiber_dim) * Complex64::new(v[node], 0.0),
            PotentialField::Matrix(m) => m[node].clone(),
        }
    }

    pub fn hermiticity_defect(&self, n_nodes: usize, fiber_dim: usize) -> f64 {
        (0..n_nodes)
            .map(|n| {
                let b = self.block(n, fiber_dim);
                (&b - b.adjoint()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Sparse -hbar^2/(2m) Laplacian + V on the twisted grid, restricted to the
/// nodes that carry unknowns (Dirichlet walls eliminated).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub grid: GridSpec,
    pub fiber_dim: usize,
    pub has_radial: bool,
    mat: Csr,
    /// Full-grid node index per active node.
    pub active_nodes: Vec<usize>,
    /// Active index per full-grid node; `None` on Dirichlet walls.
    pub active_of_full: Vec<Option<usize>>,
    /// Quadrature weight per active node.
    pub weights: Vec<f64>,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.active_nodes.len() * self.fiber_dim
    }

    pub fn n_active(&self) -> usize {
        self.active_nodes.len()
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.mat.matvec(x, y);
    }

    /// Active-subspace vector from full-grid wave values.
    pub fn extract(&self, wave_values: &[Complex64]) -> Vec<Complex64> {
        let f = self.fiber_dim;
        let mut out = vec![C_ZERO; self.dim()];
        for (a, &node) in self.active_nodes.iter().enumerate() {
            for s in 0..f {
                out[a * f + s] = wave_values[node * f + s];
            }
        }
        out
    }

    pub fn scatter(&self, active: &[Complex64], wave_values: &mut [Complex64]) {
        let f = self.fiber_dim;
        for (a, &node) in self.active_nodes.iter().enumerate() {
            for s in 0..f {
                wave_values[node * f + s] = active[a * f + s];
            }
        }
    }

    /// Max relative defect of W H - (W H)^dagger under the quadrature
    /// weights.
    pub fn hermiticity_residual(&self) -> f64 {
        let f = self.fiber_dim;
        let mut map: HashMap<(usize, usize), Complex64> = HashMap::with_capacity(self.mat.nnz());
        let mut scale: f64 = 0.0;
        for (a, b, v) in self.mat.iter_entries() {
            let w = self.weights[a / f];
            map.insert((a, b), v * w);
            scale = scale.max((v * w).norm());
        }
        let mut worst: f64 = 0.0;
        for (&(a, b), &wv) in &map {
            let other = map.get(&(b, a)).copied().unwrap_or(C_ZERO);
            worst = worst.max((wv - other.conj()).norm());
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }

    /// Dense symmetrized operator D^{1/2} H D^{-1/2} (plain-Hermitian).
    pub fn to_dense_symmetrized(&self) -> DMatrix<Complex64> {
        let f = self.fiber_dim;
        let dim = self.dim();
        let mut dense = DMatrix::from_element(dim, dim, C_ZERO);
        for (a, b, v) in self.mat.iter_entries() {
            let wa = self.weights[a / f].sqrt();
            let wb = self.weights[b / f].sqrt();
            dense[(a, b)] = v * Complex64::new(wa / wb, 0.0);
        }
        dense
    }
}

/// Smooth unitary path `U(frac)` with `U(0) = Id` and `U(1) = u`, for the
/// fiber dimensions in use (1 and 2). For 2x2 the matrix is split as
/// `e^{i phi} (cos a Id - i sin a n.sigma)` and both angles are scaled.
pub(crate) fn unitary_fractional_power(u: &CMatrix, frac: f64) -> CMatrix {
    let dim = u.nrows();
    if dim == 1 {
        let mut out = identity(1);
        out[(0, 0)] = Complex64::cis(u[(0, 0)].arg() * frac);
        return out;
    }
    assert_eq!(dim, 2, "fractional powers only needed for fiber dims 1 and 2");
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let phi = det.arg() / 2.0;
    // strip the overall phase: v is in SU(2) up to roundoff
    let v = u * Complex64::cis(-phi);
    let cos_a = 0.5 * (v[(0, 0)] + v[(1, 1)]).re;
    // v - v^H = -2 i sin(a) n.sigma
    let k = (&v - v.adjoint()) * Complex64::new(0.0, 0.5);
    let sin_a = (0.5 * (&k * &k).trace().re).max(0.0).sqrt();
    let a = sin_a.atan2(cos_a);
    let mut out = identity(2) * Complex64::new((a * frac).cos(), 0.0);
    if sin_a > 1e-14 {
        out -= &k * Complex64::new(0.0, (a * frac).sin() / sin_a);
    } else if a.abs() > 1e-14 {
        // u = -Id up to phase: rotation axis is arbitrary, pick z
        let s = Complex64::new(0.0, (a * frac).sin());
        out[(0, 0)] -= s;
        out[(1, 1)] += s;
    }
    out * Complex64::cis(phi * frac)
}

pub(crate) fn factor_power(gamma: &CMatrix, w: i64) -> CMatrix {
    match w {
        0 => identity(gamma.nrows()),
        1 => gamma.clone(),
        -1 => gamma.adjoint(),
        _ => {
            let mut out = identity(gamma.nrows());
            let step = if w > 0 { gamma.clone() } else { gamma.adjoint() };
            for _ in 0..w.unsigned_abs() {
                out *= &step;
            }
            out
        }
    }
}

/// Assembly over an explicit grid; `gamma` is the fiber matrix of the deck
/// generator entering the theta wraparound.
pub(crate) fn assemble_on_grid(
    grid: &GridSpec,
    has_radial: bool,
    fiber_dim: usize,
    gamma: &CMatrix,
    pot: &PotentialField,
) -> Result<Hamiltonian> {
    let n_theta = grid.n_theta;
    let kin = 0.5 / grid.mass;

    // admissibility: V must commute with the factor nodewise
    let vdefect = pot.hermiticity_defect(grid.n_nodes(), fiber_dim);
    if vdefect > 1e-12 {
        return Err(Error::Presentation(format!(
            "potential is not Hermitian (defect {vdefect:.3e})"
        )));
    }
    if fiber_dim > 1 {
        let mut worst: f64 = 0.0;
        for node in 0..grid.n_nodes() {
            let v = pot.block(node, fiber_dim);
            worst = worst.max((&v * gamma - gamma * &v).norm());
        }
        if worst > 1e-12 {
            return Err(Error::Inadmissible(worst));
        }
    }

    let rows: Vec<usize> = if has_radial {
        grid.interior_rows.clone().collect()
    } else {
        vec![0]
    };
    let mut active_nodes = Vec::with_capacity(rows.len() * n_theta);
    let mut active_of_full = vec![None; grid.n_nodes()];
    for &i in &rows {
        for j in 0..n_theta {
            active_of_full[grid.idx(i, j)] = Some(active_nodes.len());
            active_nodes.push(grid.idx(i, j));
        }
    }

    let f = fiber_dim;
    let dim = active_nodes.len() * f;
    let mut trip = Triplets::new(dim);
    let mut push_block = |a: usize, b: usize, m: &CMatrix| {
        for s in 0..f {
            for t in 0..f {
                let v = m[(s, t)];
                if v != C_ZERO {
                    trip.push(a * f + s, b * f + t, v);
                }
            }
        }
    };

    for (a, &node) in active_nodes.iter().enumerate() {
        let i = node / n_theta;
        let j = node % n_theta;
        let r = grid.metric_r[i];
        let c_theta = kin / (r * r * grid.dtheta * grid.dtheta);
        let mut diag = 2.0 * c_theta;

        for dj in [-1isize, 1] {
            let (jw, w) = grid.wrap_theta(j as isize + dj);
            let neighbor = active_of_full[grid.idx(i, jw)].expect("same row is active");
            let hop = factor_power(gamma, w) * Complex64::new(-c_theta, 0.0);
            push_block(a, neighbor, &hop);
        }

        if has_radial {
            let c_r = kin / (grid.dr * grid.dr);
            let c_first = kin / (2.0 * r * grid.dr);
            diag += 2.0 * c_r;
            for di in [-1isize, 1] {
                let ii = i as isize + di;
                if ii < 0 || ii as usize >= grid.n_r {
                    continue;
                }
                // Dirichlet walls: dropped couplings
                if let Some(neighbor) = active_of_full[grid.idx(ii as usize, j)] {
                    let coeff = -c_r - di as f64 * c_first;
                    push_block(a, neighbor, &(identity(f) * Complex64::new(coeff, 0.0)));
                }
            }
        }

        let vblock = pot.block(node, f) + identity(f) * Complex64::new(diag, 0.0);
        push_block(a, a, &vblock);
    }

    let weights = active_nodes.iter().map(|&n| grid.weights[n]).collect();
    Ok(Hamiltonian {
        grid: grid.clone(),
        fiber_dim,
        has_radial,
        mat: trip.to_csr(),
        active_nodes,
        active_of_full,
        weights,
    })
}

/// Builds the twisted Hamiltonian for a geometry, potential and factor.
/// Rejects inadmissible (V, Gamma) pairs.
pub fn assemble_hamiltonian(
    geometry: &Geometry,
    pot: &PotentialField,
    factor: &TopologicalFactor,
) -> Result<Hamiltonian> {
    let grid = build_grid(geometry)?;
    let fiber_dim = geometry.fiber_dim();
    let gamma = factor.generator_matrix(fiber_dim)?;
    assemble_on_grid(&grid, geometry.has_radial_extent(), fiber_dim, &gamma, pot)
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// One Crank-Nicolson step: (I + i dt H / 2) psi' = (I - i dt H / 2) psi.
/// Unconditionally stable and norm-preserving on the Hermitian operator.
pub fn evolve_step(
    psi: &CoveringWave,
    h: &Hamiltonian,
    dt: f64,
    opts: SolverOptions,
) -> Result<CoveringWave> {
    let x = h.extract(&psi.values);
    let half = Complex64::new(0.0, 0.5 * dt);
    let n = x.len();
    let mut hx = vec![C_ZERO; n];
    h.apply(&x, &mut hx);
    let rhs: Vec<Complex64> = (0..n).map(|i| x[i] - half * hx[i]).collect();
    let apply = |v: &[Complex64], out: &mut [Complex64]| {
        h.apply(v, out);
        for i in 0..n {
            out[i] = v[i] + half * out[i];
        }
    };
    let sol = bicgstab(apply, &rhs, &rhs, opts.tol, opts.max_iter)?;
    let mut next = psi.clone();
    h.scatter(&sol, &mut next.values);
    next.time += dt;
    Ok(next)
}

pub fn evolve_n_steps(
    psi: &CoveringWave,
    h: &Hamiltonian,
    dt: f64,
    steps: usize,
    opts: SolverOptions,
) -> Result<CoveringWave> {
    let mut cur = psi.clone();
    for _ in 0..steps {
        cur = evolve_step(&cur, h, dt, opts)?;
    }
    Ok(cur)
}

/// The k lowest eigenpairs (energies ascending, eigenvectors on the full
/// grid, normalized under the quadrature norm).
pub fn spectrum(h: &Hamiltonian, k: usize) -> Result<Vec<(f64, Vec<Complex64>)>> {
    let dim = h.dim();
    if k > dim {
        return Err(Error::Eigen(format!("requested {k} pairs from a {dim}-dim operator")));
    }
    if dim > 6000 {
        return Err(Error::Eigen(format!(
            "dense eigensolve limited to 6000 unknowns, got {dim}"
        )));
    }
    let dense = h.to_dense_symmetrized();
    let eig = dense.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let f = h.fiber_dim;
    let n_full = h.grid.n_nodes() * f;
    let mut out = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let y = eig.eigenvectors.column(idx);
        // undo the symmetrization: x = D^{-1/2} y
        let mut active = vec![C_ZERO; dim];
        for a in 0..dim {
            active[a] = y[a] / Complex64::new(h.weights[a / f].sqrt(), 0.0);
        }
        let norm: f64 = active
            .iter()
            .enumerate()
            .map(|(a, v)| h.weights[a / f] * v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let inv = Complex64::new(1.0 / norm, 0.0);
        let mut full = vec![C_ZERO; n_full];
        for (a, &node) in h.active_nodes.iter().enumerate() {
            for s in 0..f {
                full[node * f + s] = active[a * f + s] * inv;
            }
        }
        out.push((eig.eigenvalues[idx], full));
    }
    Ok(out)
}

/// Convenience: normalized eigenstate `index` of the scenario operator.
pub fn eigenstate(
    geometry: &Geometry,
    pot: &PotentialField,
    factor: &TopologicalFactor,
    index: usize,
) -> Result<CoveringWave> {
    let h = assemble_hamiltonian(geometry, pot, factor)?;
    let pairs = spectrum(&h, index + 1)?;
    let (_, values) = pairs.into_iter().nth(index).ok_or_else(|| {
        Error::Eigen(format!("eigenstate index {index} out of range"))
    })?;
    let mut wave = CoveringWave::zero(*geometry, factor.clone())?;
    wave.values = values;
    Ok(wave)
}

/// Doubled-cover companion of a wave: two fundamental domains glued with the
/// generator factor; going once around the doubled domain applies the factor
/// squared.
pub struct DoubledCover {
    pub grid: GridSpec,
    pub hamiltonian: Hamiltonian,
    pub gamma: CMatrix,
}

pub(crate) fn doubled_grid(grid: &GridSpec) -> GridSpec {
    let n_theta = grid.n_theta * 2;
    let mut theta_nodes = grid.theta_nodes.clone();
    theta_nodes.extend(grid.theta_nodes.iter().map(|&t| t + grid.theta_period));
    let mut weights = Vec::with_capacity(grid.n_r * n_theta);
    for i in 0..grid.n_r {
        let row = &grid.weights[i * grid.n_theta..(i + 1) * grid.n_theta];
        weights.extend_from_slice(row);
        weights.extend_from_slice(row);
    }
    GridSpec {
        n_r: grid.n_r,
        n_theta,
        dr: grid.dr,
        dtheta: grid.dtheta,
        r_nodes: grid.r_nodes.clone(),
        theta_nodes,
        weights,
        interior_rows: grid.interior_rows.clone(),
        theta_period: grid.theta_period * 2.0,
        mass: grid.mass,
        metric_r: grid.metric_r.clone(),
    }
}

fn doubled_potential(pot: &PotentialField, grid: &GridSpec) -> PotentialField {
    let tile = |src: &[f64]| {
        let mut out = Vec::with_capacity(src.len() * 2);
        for i in 0..grid.n_r {
            let row = &src[i * grid.n_theta..(i + 1) * grid.n_theta];
            out.extend_from_slice(row);
            out.extend_from_slice(row);
        }
        out
    };
    match pot {
        PotentialField::Zero => PotentialField::Zero,
        PotentialField::Scalar(v) => PotentialField::Scalar(tile(v)),
        PotentialField::Matrix(m) => {
            let mut out = Vec::with_capacity(m.len() * 2);
            for i in 0..grid.n_r {
                let row = &m[i * grid.n_theta..(i + 1) * grid.n_theta];
                out.extend_from_slice(row);
                out.extend_from_slice(row);
            }
            PotentialField::Matrix(out)
        }
    }
}

/// Doubled-domain sample of the lifted wave: first sheet is a copy, second
/// sheet carries psi(sigma q) = Glue psi(q).
pub(crate) fn double_wave_values(psi: &CoveringWave, glue: &CMatrix) -> Vec<Complex64> {
    let f = psi.fiber_dim;
    let n_theta = psi.grid.n_theta;
    let n_theta2 = n_theta * 2;
    let mut values2 = vec![C_ZERO; psi.grid.n_r * n_theta2 * f];
    for i in 0..psi.grid.n_r {
        for j in 0..n_theta {
            let src = psi.grid.idx(i, j);
            let dst_a = i * n_theta2 + j;
            let dst_b = i * n_theta2 + n_theta + j;
            for s in 0..f {
                values2[dst_a * f + s] = psi.values[src * f + s];
                let mut acc = C_ZERO;
                for t in 0..f {
                    acc += glue[(s, t)] * psi.values[src * f + t];
                }
                values2[dst_b * f + s] = acc;
            }
        }
    }
    values2
}

impl DoubledCover {
    /// Glue factor defaults to the wave's own generator factor; passing a
    /// different matrix deliberately breaks the periodicity (negative
    /// controls).
    pub fn build(
        psi: &CoveringWave,
        pot: &PotentialField,
        glue_override: Option<&CMatrix>,
    ) -> Result<(DoubledCover, Vec<Complex64>)> {
        let gamma = psi.factor.generator_matrix(psi.fiber_dim)?;
        let glue = glue_override.unwrap_or(&gamma).clone();
        let grid2 = doubled_grid(&psi.grid);
        let gamma2 = &glue * &glue;
        let pot2 = doubled_potential(pot, &psi.grid);
        let h2 = assemble_on_grid(
            &grid2,
            psi.geometry.has_radial_extent(),
            psi.fiber_dim,
            &gamma2,
            &pot2,
        )?;
        let values2 = double_wave_values(psi, &glue);
        Ok((
            DoubledCover {
                grid: grid2,
                hamiltonian: h2,
                gamma: glue,
            },
            values2,
        ))
    }
}

/// Evolves the single-domain wave with the factor baked into the stencil and
/// compares against the doubled-cover evolution restricted back to the first
/// sheet: the sup-norm of the difference after `steps` Crank-Nicolson steps.
pub fn check_periodicity_preserved(
    psi0: &CoveringWave,
    pot: &PotentialField,
    dt: f64,
    steps: usize,
    opts: SolverOptions,
) -> Result<f64> {
    let h = assemble_hamiltonian(&psi0.geometry, pot, &psi0.factor)?;
    let single = evolve_n_steps(psi0, &h, dt, steps, opts)?;

    let (doubled, mut v2) = DoubledCover::build(psi0, pot, None)?;
    let h2 = &doubled.hamiltonian;
    let mut active = h2.extract(&v2);
    let half = |dtv: f64| Complex64::new(0.0, 0.5 * dtv);
    for _ in 0..steps {
        let n = active.len();
        let mut hx = vec![C_ZERO; n];
        h2.apply(&active, &mut hx);
        let rhs: Vec<Complex64> = (0..n).map(|i| active[i] - half(dt) * hx[i]).collect();
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            h2.apply(v, out);
            for i in 0..n {
                out[i] = v[i] + half(dt) * out[i];
            }
        };
        active = bicgstab(apply, &rhs, &rhs, opts.tol, opts.max_iter)?;
    }
    h2.scatter(&active, &mut v2);

    let f = psi0.fiber_dim;
    let n_theta = psi0.grid.n_theta;
    let mut worst: f64 = 0.0;
    for i in 0..psi0.grid.n_r {
        for j in 0..n_theta {
            let src = psi0.grid.idx(i, j);
            let dst = i * doubled.grid.n_theta + j;
            for s in 0..f {
                worst = worst.max((single.values[src * f + s] - v2[dst * f + s]).norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn ring_hamiltonian(n: usize, beta: f64) -> Hamiltonian {
        let g = Geometry::ring(1.0, n);
        assemble_hamiltonian(&g, &PotentialField::Zero, &TopologicalFactor::phase(beta)).unwrap()
    }

    #[test]
    fn ring_untwisted_is_circulant_second_difference() {
        let h = ring_hamiltonian(8, 0.0);
        let dth = TAU / 8.0;
        let c = 0.5 / (dth * dth);
        let dense = h.to_dense_symmetrized();
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j {
                    2.0 * c
                } else if (i + 1) % 8 == j || (j + 1) % 8 == i {
                    -c
                } else {
                    0.0
                };
                assert!(
                    (dense[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-12,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn hermitian_under_weighted_inner_product() {
        for (g, factor) in [
            (Geometry::ring(1.0, 64), TopologicalFactor::phase(1.1)),
            (Geometry::annulus(1.0, 2.0, 16, 24), TopologicalFactor::phase(0.7)),
            (
                Geometry::spin_annulus(1.0, 2.0, 12, 16),
                TopologicalFactor::UnitaryRep(
                    crate::algebra::UnitaryRep::new(vec![crate::algebra::su2_rotation(
                        PI / 2.0,
                        [0.0, 0.0, 1.0],
                    )
                    .unwrap()])
                    .unwrap(),
                ),
            ),
        ] {
            let h = assemble_hamiltonian(&g, &PotentialField::Zero, &factor).unwrap();
            assert!(h.hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn twisted_ring_spectrum_matches_closed_form() {
        // E_k = (k + beta/2pi)^2 / 2
        let n = 512;
        for beta in [0.0, PI / 3.0, PI] {
            let h = ring_hamiltonian(n, beta);
            let pairs = spectrum(&h, 6).unwrap();
            let mut exact: Vec<f64> = (-6..=6i64)
                .map(|k| {
                    let kappa = k as f64 + beta / TAU;
                    0.5 * kappa * kappa
                })
                .collect();
            exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (m, (e, _)) in pairs.iter().enumerate() {
                let target = exact[m];
                let err = if target.abs() < 1e-9 {
                    (e - target).abs()
                } else {
                    (e - target).abs() / target
                };
                assert!(err < 1e-3, "beta={beta} level={m}: {e} vs {target}");
            }
        }
    }

    #[test]
    fn ring_beta_pi_lowest_pair() {
        let h = ring_hamiltonian(512, PI);
        let pairs = spectrum(&h, 3).unwrap();
        assert!((pairs[0].0 - 0.125).abs() < 1e-3);
        assert!((pairs[1].0 - 0.125).abs() < 1e-3);
        assert!((pairs[2].0 - 1.125).abs() < 2e-2);
    }

    #[test]
    fn spectrum_convergence_is_second_order() {
        let beta = PI / 3.0;
        let kappa = 1.0 + beta / TAU;
        let exact = 0.5 * kappa * kappa;
        let mut errs = Vec::new();
        for n in [64usize, 128, 256, 512] {
            let h = ring_hamiltonian(n, beta);
            let pairs = spectrum(&h, 4).unwrap();
            let e = pairs
                .iter()
                .map(|(e, _)| (e - exact).abs())
                .fold(f64::INFINITY, f64::min);
            errs.push((n as f64, e));
        }
        let slope = ((errs[0].1 / errs[3].1).ln()) / ((errs[3].0 / errs[0].0).ln());
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn annulus_dirichlet_energies_positive() {
        let g = Geometry::annulus(1.0, 2.0, 12, 16);
        let h = assemble_hamiltonian(&g, &PotentialField::Zero, &TopologicalFactor::phase(1.3))
            .unwrap();
        let pairs = spectrum(&h, 5).unwrap();
        for (e, _) in pairs {
            assert!(e > 0.0);
        }
    }

    #[test]
    fn eigenstate_evolves_by_phase() {
        let g = Geometry::ring(1.0, 256);
        let factor = TopologicalFactor::phase(PI / 3.0);
        let h = assemble_hamiltonian(&g, &PotentialField::Zero, &factor).unwrap();
        let pairs = spectrum(&h, 2).unwrap();
        let (energy, values) = &pairs[1];
        let mut psi = CoveringWave::zero(g, factor).unwrap();
        psi.values = values.clone();
        let dt = 1e-3;
        let out = evolve_step(&psi, &h, dt, SolverOptions::default()).unwrap();
        // Crank-Nicolson phase: exact propagator phase agrees to O(dt^3 E^3)
        let phase = Complex64::cis(-energy * dt);
        let mut worst: f64 = 0.0;
        for (a, b) in out.values.iter().zip(&psi.values) {
            worst = worst.max((a - b * phase).norm());
        }
        assert!(worst < 1e-8, "worst {worst:.3e}");
    }

    #[test]
    fn fractional_power_endpoints_and_unitarity() {
        let cases = [
            crate::algebra::su2_rotation(1.3, [0.0, 1.0, 0.0]).unwrap(),
            crate::algebra::su2_rotation(2.9, [0.6, 0.0, 0.8]).unwrap()
                * Complex64::cis(0.7),
            // -Id: degenerate axis branch
            identity(2) * Complex64::new(-1.0, 0.0),
        ];
        for u in &cases {
            assert!((unitary_fractional_power(u, 0.0) - identity(2)).norm() < 1e-12);
            assert!((unitary_fractional_power(u, 1.0) - u).norm() < 1e-12);
            // half power squares back to u, and every sample is unitary
            let h = unitary_fractional_power(u, 0.5);
            assert!((&h * &h - u).norm() < 1e-12);
            for frac in [0.21, 0.5, 0.83] {
                let m = unitary_fractional_power(u, frac);
                assert!((m.adjoint() * &m - identity(2)).norm() < 1e-12);
            }
        }
        let mut scalar = identity(1);
        scalar[(0, 0)] = Complex64::cis(1.7);
        let half = unitary_fractional_power(&scalar, 0.5);
        assert!((half[(0, 0)] - Complex64::cis(0.85)).norm() < 1e-15);
    }

    #[test]
    fn twisted_packet_is_seam_smooth() {
        // factor-continued jump across the seam stays comparable to an
        // interior increment instead of carrying the full twist kink
        let g = Geometry::annulus(1.0, 2.0, 16, 32);
        let psi =
            CoveringWave::annular_packet(g, TopologicalFactor::phase(1.7), 0.0, 0.8, 2.0).unwrap();
        let gamma = psi.factor.generator_matrix(1).unwrap()[(0, 0)];
        let grid = &psi.grid;
        let i = 8;
        let seam_jump =
            (gamma * psi.values[grid.idx(i, 0)] - psi.values[grid.idx(i, grid.n_theta - 1)]).norm();
        let interior_jump =
            (psi.values[grid.idx(i, 1)] - psi.values[grid.idx(i, 0)]).norm();
        assert!(
            seam_jump < 3.0 * interior_jump,
            "seam {seam_jump:.3e} vs interior {interior_jump:.3e}"
        );
    }

    #[test]
    fn constant_wave_is_stationary_on_ring() {
        let g = Geometry::ring(1.0, 64);
        let factor = TopologicalFactor::trivial();
        let h = assemble_hamiltonian(&g, &PotentialField::Zero, &factor).unwrap();
        let mut psi = CoveringWave::zero(g, factor).unwrap();
        psi.values.fill(Complex64::new(1.0, 0.0));
        psi.normalize().unwrap();
        let out = evolve_n_steps(&psi, &h, 1e-3, 50, SolverOptions::default()).unwrap();
        for (a, b) in out.values.iter().zip(&psi.values) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn norm_preserved_over_many_steps() {
        let g = Geometry::ring(1.0, 128);
        let factor = TopologicalFactor::phase(1.0);
        let h = assemble_hamiltonian(&g, &PotentialField::Zero, &factor).unwrap();
        let psi = CoveringWave::gaussian_packet(
            g,
            factor,
            (1.0, PI),
            (0.3, 0.5),
            (0.0, 2.0),
        )
        .unwrap();
        let before = psi.norm();
        let out = evolve_n_steps(&psi, &h, 1e-3, 1000, SolverOptions::default()).unwrap();
        assert!((out.norm() - before).abs() < 1e-7);
    }

    #[test]
    fn gauge_covariance_on_ring() {
        // conjugating the twisted operator by the gauge phase exp(-i beta
        // theta / 2pi) yields the uniform Peierls-hopping operator; spectra
        // must agree node by node.
        let n = 128;
        let beta = 1.3;
        let h = ring_hamiltonian(n, beta);
        let spec_twisted = spectrum(&h, 8).unwrap();

        let g = Geometry::ring(1.0, n);
        let grid = build_grid(&g).unwrap();
        let c = 0.5 / (grid.dtheta * grid.dtheta);
        let hop = Complex64::cis(beta * grid.dtheta / TAU);
        let mut dense = DMatrix::from_element(n, n, C_ZERO);
        for j in 0..n {
            dense[(j, j)] = Complex64::new(2.0 * c, 0.0);
            dense[(j, (j + 1) % n)] = -hop.conj() * c;
            dense[((j + 1) % n, j)] = -hop * c;
        }
        let mut peierls: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().cloned().collect();
        peierls.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (m, (e, _)) in spec_twisted.iter().enumerate() {
            assert!((e - peierls[m]).abs() < 1e-9, "level {m}");
        }
    }

    #[test]
    fn inadmissible_pair_rejected() {
        let g = Geometry::spin_annulus(1.0, 2.0, 12, 16);
        let grid = build_grid(&g).unwrap();
        // non-scalar V that fails to commute with an x-axis SU(2) factor
        let vmat: Vec<CMatrix> = (0..grid.n_nodes())
            .map(|_| crate::algebra::su2::pauli_z())
            .collect();
        let factor = TopologicalFactor::UnitaryRep(
            crate::algebra::UnitaryRep::new(vec![
                crate::algebra::su2_rotation(0.8, [1.0, 0.0, 0.0]).unwrap()
            ])
            .unwrap(),
        );
        let err = assemble_hamiltonian(&g, &PotentialField::Matrix(vmat), &factor).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
    }

    #[test]
    fn periodicity_preserved_trivial_factor() {
        let g = Geometry::ring(1.0, 64);
        let psi = CoveringWave::gaussian_packet(
            g,
            TopologicalFactor::trivial(),
            (1.0, PI),
            (0.3, 0.5),
            (0.0, 1.0),
        )
        .unwrap();
        let res = check_periodicity_preserved(
            &psi,
            &PotentialField::Zero,
            1e-3,
            20,
            SolverOptions::default(),
        )
        .unwrap();
        assert!(res < 1e-10, "residual {res:.3e}");
    }
}
