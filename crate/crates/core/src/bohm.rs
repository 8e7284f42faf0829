//! Bohmian velocity fields and trajectory integration on the covering space.
//!
//! The guidance velocity v = Im (psi, grad psi) / (psi, psi) is computed with
//! the same twist-aware stencil as the Hamiltonian, so it projects to a
//! well-defined field on the base whenever the factor is unitary. Trajectories
//! are integrated in lifted coordinates; the winding number is explicit
//! bookkeeping, never recovered from a float range.

use num_complex::Complex64;

use crate::algebra::rep::CMatrix;
use crate::error::{Error, Result};
use crate::evolution::{
    double_wave_values, doubled_grid, evolve_step, factor_power, CoveringWave, Hamiltonian,
    SolverOptions,
};
use crate::geometry::{BaseCoords, CoverPoint, Geometry, GridSpec};

/// Densities below this fraction of the frame maximum count as nodal.
pub const NODE_FLOOR_RELATIVE: f64 = 1e-12;

/// Velocity samples over the full grid at one instant. Angular component is
/// the angular rate d theta / dt, not the tangential speed.
#[derive(Debug, Clone)]
pub struct VelocityFrame {
    pub time: f64,
    pub v_r: Vec<f64>,
    pub v_theta: Vec<f64>,
    /// False on walls and in nodal regions.
    pub valid: Vec<bool>,
}

pub(crate) fn frame_on_grid(
    grid: &GridSpec,
    has_radial: bool,
    fiber_dim: usize,
    gamma: &CMatrix,
    values: &[Complex64],
    time: f64,
) -> VelocityFrame {
    let f = fiber_dim;
    let n_nodes = grid.n_nodes();
    let density = |node: usize| -> f64 {
        (0..f).map(|s| values[node * f + s].norm_sqr()).sum()
    };
    let max_density = (0..n_nodes).map(density).fold(0.0f64, f64::max);
    let floor = NODE_FLOOR_RELATIVE * max_density;

    let fiber_dot = |a: usize, b: &[Complex64]| -> Complex64 {
        (0..f).map(|s| values[a * f + s].conj() * b[s]).sum()
    };
    // continuation value of the wave one theta column away, factor applied
    let continued = |i: usize, j: isize| -> Vec<Complex64> {
        let (jw, w) = grid.wrap_theta(j);
        let node = grid.idx(i, jw);
        if w == 0 {
            values[node * f..(node + 1) * f].to_vec()
        } else {
            let m = factor_power(gamma, w);
            (0..f)
                .map(|s| (0..f).map(|t| m[(s, t)] * values[node * f + t]).sum())
                .collect()
        }
    };

    let mut v_r = vec![0.0; n_nodes];
    let mut v_theta = vec![0.0; n_nodes];
    let mut valid = vec![false; n_nodes];
    for i in 0..grid.n_r {
        let interior = !has_radial || grid.interior_rows.contains(&i);
        for j in 0..grid.n_theta {
            let node = grid.idx(i, j);
            let rho = density(node);
            if !interior || rho < floor || rho == 0.0 {
                continue;
            }
            valid[node] = true;
            let r = grid.metric_r[i];

            let plus = continued(i, j as isize + 1);
            let minus = continued(i, j as isize - 1);
            let dth: Vec<Complex64> = (0..f)
                .map(|s| (plus[s] - minus[s]) / Complex64::new(2.0 * grid.dtheta, 0.0))
                .collect();
            v_theta[node] = fiber_dot(node, &dth).im / (grid.mass * r * r * rho);

            if has_radial {
                // walls store zero, matching the Dirichlet condition
                let up = &values[grid.idx(i + 1, j) * f..(grid.idx(i + 1, j) + 1) * f];
                let dn = &values[grid.idx(i - 1, j) * f..(grid.idx(i - 1, j) + 1) * f];
                let dr_psi: Vec<Complex64> = (0..f)
                    .map(|s| (up[s] - dn[s]) / Complex64::new(2.0 * grid.dr, 0.0))
                    .collect();
                v_r[node] = fiber_dot(node, &dr_psi).im / (grid.mass * rho);
            }
        }
    }
    VelocityFrame {
        time,
        v_r,
        v_theta,
        valid,
    }
}

/// Time-indexed stack of velocity frames over one fundamental domain.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub geometry: Geometry,
    pub grid: GridSpec,
    pub frames: Vec<VelocityFrame>,
}

impl VelocityField {
    /// Single stationary frame from a wave.
    pub fn from_wave(psi: &CoveringWave) -> Result<Self> {
        let gamma = psi.factor.generator_matrix(psi.fiber_dim)?;
        let frame = frame_on_grid(
            &psi.grid,
            psi.geometry.has_radial_extent(),
            psi.fiber_dim,
            &gamma,
            &psi.values,
            psi.time,
        );
        Ok(VelocityField {
            geometry: psi.geometry,
            grid: psi.grid.clone(),
            frames: vec![frame],
        })
    }

    /// Frames captured every `stride` Crank-Nicolson steps, including the
    /// initial time. Returns the field and the final wave.
    pub fn from_evolution(
        psi0: &CoveringWave,
        h: &Hamiltonian,
        dt: f64,
        steps: usize,
        stride: usize,
        opts: SolverOptions,
    ) -> Result<(Self, CoveringWave)> {
        let gamma = psi0.factor.generator_matrix(psi0.fiber_dim)?;
        let has_radial = psi0.geometry.has_radial_extent();
        let stride = stride.max(1);
        let mut frames = Vec::with_capacity(steps / stride + 2);
        let mut cur = psi0.clone();
        frames.push(frame_on_grid(
            &cur.grid,
            has_radial,
            cur.fiber_dim,
            &gamma,
            &cur.values,
            cur.time,
        ));
        for step in 1..=steps {
            cur = evolve_step(&cur, h, dt, opts)?;
            if step % stride == 0 || step == steps {
                frames.push(frame_on_grid(
                    &cur.grid,
                    has_radial,
                    cur.fiber_dim,
                    &gamma,
                    &cur.values,
                    cur.time,
                ));
            }
        }
        Ok((
            VelocityField {
                geometry: psi0.geometry,
                grid: psi0.grid.clone(),
                frames,
            },
            cur,
        ))
    }

    fn sample_frame(&self, frame: &VelocityFrame, r: f64, theta: f64) -> Option<(f64, f64)> {
        let grid = &self.grid;
        let x = theta.rem_euclid(grid.theta_period) / grid.dtheta;
        let j0 = (x.floor() as usize).min(grid.n_theta - 1);
        let j1 = (j0 + 1) % grid.n_theta;
        let ft = x - j0 as f64;

        if !self.geometry.has_radial_extent() {
            let a = grid.idx(0, j0);
            let b = grid.idx(0, j1);
            if !frame.valid[a] || !frame.valid[b] {
                return None;
            }
            let vt = (1.0 - ft) * frame.v_theta[a] + ft * frame.v_theta[b];
            return Some((0.0, vt));
        }

        let y = (r - grid.r_nodes[0]) / grid.dr;
        if y < 0.0 || y > (grid.n_r - 1) as f64 {
            return None;
        }
        let i0 = (y.floor() as usize).min(grid.n_r - 2);
        let i1 = i0 + 1;
        let fr = y - i0 as f64;
        let corners = [
            (grid.idx(i0, j0), (1.0 - fr) * (1.0 - ft)),
            (grid.idx(i0, j1), (1.0 - fr) * ft),
            (grid.idx(i1, j0), fr * (1.0 - ft)),
            (grid.idx(i1, j1), fr * ft),
        ];
        let mut vr = 0.0;
        let mut vt = 0.0;
        for (node, w) in corners {
            if w > 0.0 && !frame.valid[node] {
                return None;
            }
            vr += w * frame.v_r[node];
            vt += w * frame.v_theta[node];
        }
        Some((vr, vt))
    }
}

/// A guidance field that can be sampled at any time and cover point.
pub trait Flow {
    /// (dr/dt, d theta/dt), or `None` inside a nodal region.
    fn velocity(&self, t: f64, r: f64, theta: f64) -> Option<(f64, f64)>;
}

impl Flow for VelocityField {
    fn velocity(&self, t: f64, r: f64, theta: f64) -> Option<(f64, f64)> {
        let frames = &self.frames;
        if frames.len() == 1 || t <= frames[0].time {
            return self.sample_frame(&frames[0], r, theta);
        }
        let last = frames.len() - 1;
        if t >= frames[last].time {
            return self.sample_frame(&frames[last], r, theta);
        }
        let k = frames.partition_point(|fr| fr.time <= t) - 1;
        let (f0, f1) = (&frames[k], &frames[k + 1]);
        let lam = (t - f0.time) / (f1.time - f0.time);
        let (vr0, vt0) = self.sample_frame(f0, r, theta)?;
        let (vr1, vt1) = self.sample_frame(f1, r, theta)?;
        Some(((1.0 - lam) * vr0 + lam * vr1, (1.0 - lam) * vt0 + lam * vt1))
    }
}

impl<F> Flow for F
where
    F: Fn(f64, f64, f64) -> Option<(f64, f64)>,
{
    fn velocity(&self, t: f64, r: f64, theta: f64) -> Option<(f64, f64)> {
        self(t, r, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    /// Entered a region where the density is below the node floor.
    HitNodalRegion,
    /// Came within two radial cells of a Dirichlet wall.
    LeftDomain,
}

#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub winding: i64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("at least the start is recorded")
    }
}

fn split_lifted(lifted_theta: f64, period: f64) -> (f64, i64) {
    let winding = (lifted_theta / period).floor() as i64;
    (lifted_theta - winding as f64 * period, winding)
}

/// Radial termination policy: a trajectory *reaching* the two-cell wall band
/// from outside ends with `LeftDomain`, as does one passing the last interior
/// node. Starting inside the band is allowed (radially smooth states carry a
/// few percent of their mass there) and only the hard guard applies until the
/// trajectory has visited the bulk.
struct WallGuard {
    active: bool,
    band_lo: f64,
    band_hi: f64,
    hard_lo: f64,
    hard_hi: f64,
    was_in_bulk: bool,
}

impl WallGuard {
    fn new(geometry: &Geometry, r_start: f64) -> Self {
        if !geometry.has_radial_extent() {
            return WallGuard {
                active: false,
                band_lo: 0.0,
                band_hi: 0.0,
                hard_lo: 0.0,
                hard_hi: 0.0,
                was_in_bulk: false,
            };
        }
        let dr = (geometry.r_out - geometry.r_in) / (geometry.grid_shape[0] - 1) as f64;
        let band_lo = geometry.r_in + 2.0 * dr;
        let band_hi = geometry.r_out - 2.0 * dr;
        WallGuard {
            active: true,
            band_lo,
            band_hi,
            hard_lo: geometry.r_in + dr,
            hard_hi: geometry.r_out - dr,
            was_in_bulk: band_lo < r_start && r_start < band_hi,
        }
    }

    /// True when the trajectory must terminate with `LeftDomain`.
    fn check(&mut self, r: f64) -> bool {
        if !self.active {
            return false;
        }
        if r <= self.hard_lo || r >= self.hard_hi {
            return true;
        }
        if self.band_lo < r && r < self.band_hi {
            self.was_in_bulk = true;
            false
        } else {
            self.was_in_bulk
        }
    }
}

/// RK4 integration of d(r, theta)/dt = v in lifted coordinates.
///
/// The trajectory terminates early with `HitNodalRegion` when any stage falls
/// below the node floor and with `LeftDomain` inside the two-cell wall band.
pub fn integrate_trajectory<F: Flow>(
    flow: &F,
    geometry: &Geometry,
    start: CoverPoint,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !t0.is_finite() || !(t1 > t0) {
        return Err(Error::InvalidStart(format!(
            "need t1 > t0 and dt > 0, got t0 = {t0}, t1 = {t1}, dt = {dt}"
        )));
    }
    let period = geometry.theta_period();
    let has_radial = geometry.has_radial_extent();
    let r0 = if has_radial { start.base.r } else { geometry.radius };
    if !r0.is_finite() || !start.base.theta.is_finite() {
        return Err(Error::InvalidStart("non-finite coordinates".into()));
    }
    if has_radial && !(geometry.r_in < r0 && r0 < geometry.r_out) {
        return Err(Error::InvalidStart(format!(
            "r = {r0} outside ({}, {})",
            geometry.r_in, geometry.r_out
        )));
    }
    let mut guard = WallGuard::new(geometry, r0);

    let mut r = r0;
    let mut ltheta = start.base.theta + start.winding as f64 * period;
    let mut t = t0;
    let mut samples = Vec::with_capacity(((t1 - t0) / dt).ceil() as usize + 1);
    let record = |samples: &mut Vec<TrajectorySample>, t: f64, r: f64, ltheta: f64| {
        let (theta, winding) = split_lifted(ltheta, period);
        samples.push(TrajectorySample {
            t,
            r,
            theta,
            winding,
        });
    };
    record(&mut samples, t, r, ltheta);

    let n_steps = ((t1 - t0) / dt).round().max(1.0) as usize;
    let h = (t1 - t0) / n_steps as f64;
    for _ in 0..n_steps {
        if guard.check(r) {
            return Ok(Trajectory {
                samples,
                status: TrajectoryStatus::LeftDomain,
            });
        }
        let stages: [(f64, f64); 4] = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
        let mut k = [(0.0f64, 0.0f64); 4];
        let mut hit_node = false;
        for (s, &(ct, cy)) in stages.iter().enumerate() {
            let (kr, kt) = if s == 0 { (0.0, 0.0) } else { k[s - 1] };
            let rs = r + h * cy * kr;
            let ts = ltheta + h * cy * kt;
            match flow.velocity(t + ct * h, rs, ts) {
                Some(v) => k[s] = v,
                None => {
                    hit_node = true;
                    break;
                }
            }
        }
        if hit_node {
            return Ok(Trajectory {
                samples,
                status: TrajectoryStatus::HitNodalRegion,
            });
        }
        r += h / 6.0 * (k[0].0 + 2.0 * k[1].0 + 2.0 * k[2].0 + k[3].0);
        ltheta += h / 6.0 * (k[0].1 + 2.0 * k[1].1 + 2.0 * k[2].1 + k[3].1);
        t += h;
        record(&mut samples, t, r, ltheta);
    }
    Ok(Trajectory {
        samples,
        status: TrajectoryStatus::Completed,
    })
}

/// Ensemble variant: fixed-step RK4 over [0, t_max] recording the projected
/// position at the listed step indices only (ascending, possibly repeated).
/// Early termination is reported as `Err(status)` so callers can account for
/// drops; the sample list of a dropped trajectory is discarded.
pub fn integrate_trajectory_observed<F: Flow>(
    flow: &F,
    geometry: &Geometry,
    start: CoverPoint,
    dt: f64,
    record_steps: &[usize],
) -> std::result::Result<Vec<BaseCoords>, TrajectoryStatus> {
    let period = geometry.theta_period();
    let has_radial = geometry.has_radial_extent();
    let mut r = if has_radial { start.base.r } else { geometry.radius };
    let mut guard = WallGuard::new(geometry, r);
    let mut ltheta = start.base.theta + start.winding as f64 * period;
    let n_steps = record_steps.iter().copied().max().unwrap_or(0);
    let mut out = Vec::with_capacity(record_steps.len());
    let record = |step: usize, r: f64, ltheta: f64, out: &mut Vec<BaseCoords>| {
        for &k in record_steps {
            if k == step {
                let (theta, _) = split_lifted(ltheta, period);
                out.push(BaseCoords { r, theta });
            }
        }
    };
    record(0, r, ltheta, &mut out);
    let mut t = 0.0;
    for step in 1..=n_steps {
        if guard.check(r) {
            return Err(TrajectoryStatus::LeftDomain);
        }
        let h = dt;
        let mut k = [(0.0f64, 0.0f64); 4];
        for (s, &(ct, cy)) in [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)]
            .iter()
            .enumerate()
        {
            let (kr, kt) = if s == 0 { (0.0, 0.0) } else { k[s - 1] };
            match flow.velocity(t + ct * h, r + h * cy * kr, ltheta + h * cy * kt) {
                Some(v) => k[s] = v,
                None => return Err(TrajectoryStatus::HitNodalRegion),
            }
        }
        r += h / 6.0 * (k[0].0 + 2.0 * k[1].0 + 2.0 * k[2].0 + k[3].0);
        ltheta += h / 6.0 * (k[0].1 + 2.0 * k[1].1 + 2.0 * k[2].1 + k[3].1);
        t += h;
        record(step, r, ltheta, &mut out);
    }
    Ok(out)
}

/// Projectability residual max |v(sigma q) - sigma_* v(q)| over interior
/// nodes: glues two fundamental domains with the factor, computes the
/// velocity on the doubled strip with *plain* differences (no factor), and
/// compares both sheets against the single-domain twist-aware field.
/// When the glue equals the true factor the two computations are the same
/// arithmetic; a corrupted glue leaves a seam anomaly.
///
/// `glue_override` deliberately installs a wrong factor on the second sheet
/// (negative control); the residual must then *not* vanish for generic waves.
pub fn check_projectability(psi: &CoveringWave, glue_override: Option<&CMatrix>) -> Result<f64> {
    let gamma = psi.factor.generator_matrix(psi.fiber_dim)?;
    let glue = glue_override.unwrap_or(&gamma);
    let values2 = double_wave_values(psi, glue);
    let grid2 = doubled_grid(&psi.grid);
    let has_radial = psi.geometry.has_radial_extent();
    let plain = crate::algebra::rep::identity(psi.fiber_dim);
    let doubled_frame = frame_on_grid(&grid2, has_radial, psi.fiber_dim, &plain, &values2, psi.time);
    let single_frame = frame_on_grid(
        &psi.grid,
        has_radial,
        psi.fiber_dim,
        &gamma,
        &psi.values,
        psi.time,
    );
    let n_theta = psi.grid.n_theta;
    let mut worst: f64 = 0.0;
    for i in 0..psi.grid.n_r {
        for j in 0..n_theta {
            let base = psi.grid.idx(i, j);
            if !single_frame.valid[base] {
                continue;
            }
            for sheet in 0..2 {
                let col = j + sheet * n_theta;
                // the strip ends are where the plain stencil has no valid
                // continuation; they do not belong to the comparison
                if col == 0 || col == grid2.n_theta - 1 {
                    continue;
                }
                let node = i * grid2.n_theta + col;
                if !doubled_frame.valid[node] {
                    continue;
                }
                worst = worst
                    .max((doubled_frame.v_r[node] - single_frame.v_r[base]).abs())
                    .max((doubled_frame.v_theta[node] - single_frame.v_theta[base]).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{assemble_hamiltonian, spectrum, PotentialField};
    use crate::factor::TopologicalFactor;
    use std::f64::consts::{PI, TAU};

    fn ring_eigen_wave(n: usize, beta: f64, index: usize) -> CoveringWave {
        let g = Geometry::ring(1.0, n);
        let factor = TopologicalFactor::phase(beta);
        let h = assemble_hamiltonian(&g, &PotentialField::Zero, &factor).unwrap();
        let pairs = spectrum(&h, index + 1).unwrap();
        let mut psi = CoveringWave::zero(g, factor).unwrap();
        psi.values = pairs[index].1.clone();
        psi
    }

    #[test]
    fn ring_eigenstate_velocity_is_constant_kappa() {
        // levels for beta = pi/3 sorted by kappa^2/2: 1/6, -5/6, 7/6, ...
        let psi = ring_eigen_wave(512, PI / 3.0, 2);
        let field = VelocityField::from_wave(&psi).unwrap();
        let frame = &field.frames[0];
        let kappa: f64 = 7.0 / 6.0;
        let h = TAU / 512.0;
        let disc_tol = 1.5 * kappa.powi(3) * h * h / 6.0;
        for j in 0..512 {
            assert!(frame.valid[j]);
            assert!(
                (frame.v_theta[j] - kappa).abs() < disc_tol,
                "node {j}: {} vs {kappa}",
                frame.v_theta[j]
            );
        }
        // the field is uniform up to eigenvector noise, so off-node samples
        // stay within the same tolerance
        let (_, v) = field.velocity(0.0, 1.0, 1.234).unwrap();
        assert!((v - kappa).abs() < disc_tol);
    }

    #[test]
    fn constant_velocity_closed_form() {
        let psi = ring_eigen_wave(512, PI / 3.0, 2);
        let field = VelocityField::from_wave(&psi).unwrap();
        let v0 = field.velocity(0.0, 1.0, 0.0).unwrap().1;
        let start = CoverPoint::new(1.0, 0.5, 0);
        let traj =
            integrate_trajectory(&field, &psi.geometry, start, 0.0, 10.0, 1e-3).unwrap();
        assert_eq!(traj.status, TrajectoryStatus::Completed);
        let end = traj.last();
        let lifted = end.theta + end.winding as f64 * TAU;
        let expected = 0.5 + v0 * 10.0;
        assert!(
            (lifted - expected).abs() < 1e-6,
            "lifted {lifted} vs {expected}"
        );
        assert_eq!(end.winding, (expected / TAU).floor() as i64);
    }

    #[test]
    fn lift_independence() {
        let psi = ring_eigen_wave(256, 1.0, 1);
        let field = VelocityField::from_wave(&psi).unwrap();
        let a = integrate_trajectory(
            &field,
            &psi.geometry,
            CoverPoint::new(1.0, 1.0, 0),
            0.0,
            3.0,
            1e-3,
        )
        .unwrap();
        let b = integrate_trajectory(
            &field,
            &psi.geometry,
            CoverPoint::new(1.0, 1.0, 3),
            0.0,
            3.0,
            1e-3,
        )
        .unwrap();
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((sa.theta - sb.theta).abs() < 1e-12);
            assert_eq!(sb.winding - sa.winding, 3);
        }
    }

    #[test]
    fn rk4_convergence_order() {
        // smooth synthetic flow with nontrivial theta dependence
        let flow = |_t: f64, _r: f64, theta: f64| Some((0.0, 1.5 + 0.5 * (theta).sin()));
        let g = Geometry::ring(1.0, 64);
        let start = CoverPoint::new(1.0, 0.3, 0);
        let reference = integrate_trajectory(&flow, &g, start, 0.0, 2.0, 1e-4)
            .unwrap();
        let ref_end = reference.last();
        let ref_lifted = ref_end.theta + ref_end.winding as f64 * TAU;
        let mut errs = Vec::new();
        for dt in [0.2, 0.1, 0.05, 0.025] {
            let traj = integrate_trajectory(&flow, &g, start, 0.0, 2.0, dt).unwrap();
            let end = traj.last();
            let lifted = end.theta + end.winding as f64 * TAU;
            errs.push((dt, (lifted - ref_lifted).abs()));
        }
        let slope = (errs[0].1 / errs[3].1).ln() / (errs[0].0 / errs[3].0).ln();
        assert!((slope - 4.0).abs() < 0.3, "slope {slope}, errs {errs:?}");
    }

    #[test]
    fn trajectories_do_not_cross() {
        let flow = |_t: f64, _r: f64, theta: f64| Some((0.0, 1.2 + 0.5 * theta.sin()));
        let g = Geometry::ring(1.0, 64);
        let mut lifted_ends = Vec::new();
        for k in 0..8 {
            let theta0 = k as f64 * TAU / 8.0;
            let traj = integrate_trajectory(&flow, &g, CoverPoint::new(1.0, theta0, 0), 0.0, 3.0, 1e-3)
                .unwrap();
            let end = traj.last();
            lifted_ends.push(end.theta + end.winding as f64 * TAU);
        }
        for w in lifted_ends.windows(2) {
            assert!(w[1] > w[0], "ordering violated: {lifted_ends:?}");
        }
    }

    #[test]
    fn gauge_phase_leaves_velocity_invariant() {
        let g = Geometry::ring(1.0, 128);
        let psi = CoveringWave::gaussian_packet(
            g,
            TopologicalFactor::phase(1.0),
            (1.0, PI),
            (0.3, 0.5),
            (0.0, 2.0),
        )
        .unwrap();
        let mut rotated = psi.clone();
        let phase = Complex64::cis(1.234);
        for v in &mut rotated.values {
            *v *= phase;
        }
        let fa = VelocityField::from_wave(&psi).unwrap();
        let fb = VelocityField::from_wave(&rotated).unwrap();
        for (a, b) in fa.frames[0].v_theta.iter().zip(&fb.frames[0].v_theta) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_projects_to_base() {
        let g = Geometry::ring(1.0, 128);
        for beta in [0.0, PI / 3.0, PI] {
            let psi = CoveringWave::gaussian_packet(
                g,
                TopologicalFactor::phase(beta),
                (1.0, 0.0),
                (0.3, 0.5),
                (0.0, 1.5),
            )
            .unwrap();
            let res = check_projectability(&psi, None).unwrap();
            assert!(res < 1e-10, "beta = {beta}: residual {res:.3e}");
        }
    }

    #[test]
    fn corrupted_scalar_glue_fails_projectability() {
        let g = Geometry::ring(1.0, 128);
        let beta = PI / 3.0;
        let psi = CoveringWave::gaussian_packet(
            g,
            TopologicalFactor::phase(beta),
            (1.0, 0.0),
            (0.3, 0.5),
            (0.0, 1.5),
        )
        .unwrap();
        let bad = crate::algebra::rep::identity(1) * Complex64::cis(beta + 0.7);
        let res = check_projectability(&psi, Some(&bad)).unwrap();
        assert!(res > 1e-3, "corrupted residual only {res:.3e}");
    }

    fn spinor_test_wave() -> CoveringWave {
        // spinor direction varies with position, so a non-unitary glue cannot
        // hide behind the density normalization
        let g = Geometry::spin_annulus(1.0, 2.0, 16, 32);
        let rot = crate::algebra::su2_rotation(PI / 2.0, [0.0, 0.0, 1.0]).unwrap();
        let factor = TopologicalFactor::UnitaryRep(
            crate::algebra::UnitaryRep::new(vec![rot]).unwrap(),
        );
        let mut psi = CoveringWave::zero(g, factor).unwrap();
        let grid = psi.grid.clone();
        for i in 1..grid.n_r - 1 {
            for j in 0..grid.n_theta {
                let r = grid.r_nodes[i];
                let th = grid.theta_nodes[j];
                let env = (-0.5 * ((r - 1.5) / 0.25).powi(2)).exp();
                let node = grid.idx(i, j);
                psi.values[node * 2] = Complex64::cis(2.0 * th) * env;
                psi.values[node * 2 + 1] =
                    Complex64::cis(0.3 - th) * env * (0.5 + 0.4 * th.sin());
            }
        }
        psi.normalize().unwrap();
        psi
    }

    #[test]
    fn unitary_spin_factor_projects() {
        let psi = spinor_test_wave();
        let res = check_projectability(&psi, None).unwrap();
        assert!(res < 1e-10, "residual {res:.3e}");
    }

    #[test]
    fn non_unitary_factor_fails_projectability() {
        let psi = spinor_test_wave();
        let mut bad = crate::algebra::su2_rotation(PI / 2.0, [0.0, 0.0, 1.0]).unwrap();
        bad[(1, 1)] *= Complex64::new(0.5, 0.0);
        let res = check_projectability(&psi, Some(&bad)).unwrap();
        assert!(res > 1e-2, "corrupted residual only {res:.3e}");
    }

    #[test]
    fn annulus_wall_band_terminates() {
        let g = Geometry::annulus(1.0, 2.0, 16, 24);
        // purely outward drift leaves through the outer wall band
        let flow = |_t: f64, _r: f64, _theta: f64| Some((0.5, 0.0));
        let traj = integrate_trajectory(&flow, &g, CoverPoint::new(1.5, 0.0, 0), 0.0, 10.0, 1e-2)
            .unwrap();
        assert_eq!(traj.status, TrajectoryStatus::LeftDomain);
        assert!(traj.last().r < 2.0);
    }

    #[test]
    fn nodal_region_terminates() {
        let flow = |t: f64, _r: f64, _theta: f64| {
            if t < 1.0 {
                Some((0.0, 1.0))
            } else {
                None
            }
        };
        let g = Geometry::ring(1.0, 64);
        let traj =
            integrate_trajectory(&flow, &g, CoverPoint::new(1.0, 0.0, 0), 0.0, 5.0, 1e-2).unwrap();
        assert_eq!(traj.status, TrajectoryStatus::HitNodalRegion);
        assert!(traj.last().t < 1.1);
    }

    #[test]
    fn invalid_start_rejected() {
        let g = Geometry::annulus(1.0, 2.0, 16, 24);
        let flow = |_t: f64, _r: f64, _theta: f64| Some((0.0, 0.0));
        assert!(matches!(
            integrate_trajectory(&flow, &g, CoverPoint::new(5.0, 0.0, 0), 0.0, 1.0, 1e-2),
            Err(Error::InvalidStart(_))
        ));
        assert!(matches!(
            integrate_trajectory(&flow, &g, CoverPoint::new(1.5, 0.0, 0), 0.0, -1.0, 1e-2),
            Err(Error::InvalidStart(_))
        ));
    }

    #[test]
    fn time_dependent_field_interpolates_between_frames() {
        let g = Geometry::ring(1.0, 128);
        let factor = TopologicalFactor::phase(1.0);
        let h = assemble_hamiltonian(&g, &PotentialField::Zero, &factor).unwrap();
        let psi = CoveringWave::gaussian_packet(g, factor, (1.0, PI), (0.3, 0.5), (0.0, 2.0))
            .unwrap();
        let (field, _) =
            VelocityField::from_evolution(&psi, &h, 1e-3, 40, 10, SolverOptions::default())
                .unwrap();
        assert_eq!(field.frames.len(), 5);
        // interpolated value between frames lies between frame samples
        let t_mid = 0.5 * (field.frames[0].time + field.frames[1].time);
        let v0 = field.velocity(field.frames[0].time, 1.0, PI).unwrap().1;
        let v1 = field.velocity(field.frames[1].time, 1.0, PI).unwrap().1;
        let vm = field.velocity(t_mid, 1.0, PI).unwrap().1;
        let (lo, hi) = if v0 < v1 { (v0, v1) } else { (v1, v0) };
        assert!(lo - 1e-12 <= vm && vm <= hi + 1e-12);
    }
}
