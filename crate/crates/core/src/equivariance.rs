//! Ensemble sampling and the equivariance test: positions drawn from
//! |psi_0|^2 and pushed forward by the Bohmian flow must stay
//! |psi_t|^2-distributed.
//!
//! Acceptance rule: Kolmogorov-Smirnov on the theta marginal for the ring,
//! merged-bin chi-square on 2D cells otherwise, both at alpha = 0.01.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bohm::{
    frame_on_grid, integrate_trajectory_observed, Flow, TrajectoryStatus, VelocityField,
    VelocityFrame,
};
use crate::error::{Error, Result};
use crate::evolution::{assemble_hamiltonian, evolve_step, CoveringWave, PotentialField, SolverOptions};
use crate::geometry::{BaseCoords, CoverPoint};

/// KS critical value c(alpha)/sqrt(n) at alpha = 0.01.
pub const KS_CRITICAL_001: f64 = 1.6276;
pub const CHI2_ALPHA: f64 = 0.01;
/// Fraction of the ensemble allowed to terminate early.
pub const DROP_BUDGET: f64 = 0.01;
/// Minimum expected count per chi-square bin after merging.
pub const CHI2_MIN_EXPECTED: f64 = 5.0;

/// Draws `n` i.i.d. configurations from the quadrature-weighted density of
/// `psi` by inverse CDF over the flattened grid, with uniform jitter inside
/// the selected cell. Deterministic for a fixed seed.
pub fn sample_initial(psi: &CoveringWave, n: usize, seed: u64) -> Result<Vec<BaseCoords>> {
    let grid = &psi.grid;
    let mut cum = Vec::with_capacity(grid.n_nodes());
    let mut total = 0.0;
    for node in 0..grid.n_nodes() {
        total += grid.weights[node] * psi.density(node);
        cum.push(total);
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    let has_radial = psi.geometry.has_radial_extent();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let node = cum.partition_point(|&c| c <= u).min(grid.n_nodes() - 1);
        let i = node / grid.n_theta;
        let j = node % grid.n_theta;
        let jt: f64 = rng.random::<f64>() - 0.5;
        let jr: f64 = rng.random::<f64>() - 0.5;
        let theta = (grid.theta_nodes[j] + jt * grid.dtheta).rem_euclid(grid.theta_period);
        let r = if has_radial {
            grid.r_nodes[i] + jr * grid.dr
        } else {
            grid.r_nodes[0]
        };
        out.push(BaseCoords { r, theta });
    }
    Ok(out)
}

/// One-sample KS statistic of theta samples against the piecewise-linear CDF
/// induced by the cell masses (uniform within each cell, matching the
/// sampler's jitter).
pub fn ks_statistic_theta(samples: &[f64], cell_mass: &[f64], dtheta: f64, period: f64) -> f64 {
    let n_cells = cell_mass.len();
    let total: f64 = cell_mass.iter().sum();
    // cell j covers [theta_j - dtheta/2, theta_j + dtheta/2); shift samples so
    // cell 0 starts at the origin of the CDF
    let cdf = |theta: f64| -> f64 {
        let x = (theta + 0.5 * dtheta).rem_euclid(period);
        let j = ((x / dtheta) as usize).min(n_cells - 1);
        let before: f64 = cell_mass[..j].iter().sum();
        let frac = (x - j as f64 * dtheta) / dtheta;
        (before + cell_mass[j] * frac) / total
    };
    let mut xs: Vec<f64> = samples.iter().map(|&t| cdf(t)).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &f) in xs.iter().enumerate() {
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Merged-bin chi-square: bins with expected counts below the floor are
/// pooled (largest expected first) so every group clears the floor.
/// Returns (statistic, degrees of freedom).
pub fn chi_square_merged(observed: &[f64], expected: &[f64]) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut order: Vec<usize> = (0..expected.len()).collect();
    order.sort_by(|&a, &b| expected[b].partial_cmp(&expected[a]).unwrap());
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for idx in order {
        acc.0 += observed[idx];
        acc.1 += expected[idx];
        if acc.1 >= CHI2_MIN_EXPECTED {
            groups.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => groups.push(acc),
        }
    }
    let stat = groups
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum::<f64>();
    (stat, groups.len().saturating_sub(1))
}

/// Scales a flow's velocities; `scale != 1` is a deliberate model violation
/// used as the negative control.
pub struct ScaledFlow<'a> {
    pub inner: &'a VelocityField,
    pub scale: f64,
}

impl Flow for ScaledFlow<'_> {
    fn velocity(&self, t: f64, r: f64, theta: f64) -> Option<(f64, f64)> {
        self.inner
            .velocity(t, r, theta)
            .map(|(vr, vt)| (self.scale * vr, self.scale * vt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    KolmogorovSmirnov,
    ChiSquareMerged,
}

#[derive(Debug, Clone)]
pub struct DistributionComparison {
    pub kind: StatisticKind,
    pub times: Vec<f64>,
    pub statistics: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub pass: Vec<bool>,
    pub n_samples: usize,
    pub n_used: usize,
    pub dropped: usize,
    pub drop_reasons: Vec<(TrajectoryStatus, usize)>,
    /// Asymptotic thresholds are unreliable below ~100 samples.
    pub small_sample: bool,
    /// Per time, per grid node: surviving-trajectory counts (plot data).
    pub observed: Vec<Vec<f64>>,
    /// Per time, per grid node: model counts n_used * p(node).
    pub expected: Vec<Vec<f64>>,
}

impl DistributionComparison {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}

#[derive(Debug, Clone)]
pub struct EquivariancePlan {
    pub times: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub dt: f64,
    /// Velocity frames captured every this many Crank-Nicolson steps.
    pub frame_stride: usize,
    pub velocity_scale: f64,
    pub solver: SolverOptions,
}

impl EquivariancePlan {
    pub fn new(times: Vec<f64>, n_samples: usize, seed: u64) -> Self {
        EquivariancePlan {
            times,
            n_samples,
            seed,
            dt: 1e-3,
            frame_stride: 10,
            velocity_scale: 1.0,
            solver: SolverOptions::default(),
        }
    }
}

/// Full equivariance run: sample |psi_0|^2, evolve wave and ensemble, and at
/// every requested time compare the empirical distribution of survivors
/// against |psi_t|^2.
pub fn equivariance_test(
    psi0: &CoveringWave,
    pot: &PotentialField,
    plan: &EquivariancePlan,
) -> Result<DistributionComparison> {
    let mut times = plan.times.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let t_max = *times.last().expect("at least one time requested");
    let n_steps = if t_max > 0.0 {
        (t_max / plan.dt).round().max(1.0) as usize
    } else {
        0
    };
    let dt = if n_steps > 0 { t_max / n_steps as f64 } else { plan.dt };
    let record_steps: Vec<usize> = times
        .iter()
        .map(|&t| (t / dt).round() as usize)
        .collect();

    // one pass of wave evolution: velocity frames for the flow plus density
    // snapshots at the requested times
    let h = assemble_hamiltonian(&psi0.geometry, pot, &psi0.factor)?;
    let gamma = psi0.factor.generator_matrix(psi0.fiber_dim)?;
    let has_radial = psi0.geometry.has_radial_extent();
    let grid = psi0.grid.clone();
    let mut frames: Vec<VelocityFrame> = Vec::new();
    let mut snapshots: Vec<Vec<f64>> = vec![Vec::new(); times.len()];
    let mut cur = psi0.clone();
    let push_frame = |frames: &mut Vec<VelocityFrame>, w: &CoveringWave| {
        frames.push(frame_on_grid(
            &w.grid,
            has_radial,
            w.fiber_dim,
            &gamma,
            &w.values,
            w.time,
        ));
    };
    push_frame(&mut frames, &cur);
    for (m, &k) in record_steps.iter().enumerate() {
        if k == 0 {
            snapshots[m] = cur.densities();
        }
    }
    for step in 1..=n_steps {
        cur = evolve_step(&cur, &h, dt, plan.solver)?;
        if step % plan.frame_stride.max(1) == 0 || step == n_steps {
            push_frame(&mut frames, &cur);
        }
        for (m, &k) in record_steps.iter().enumerate() {
            if k == step {
                snapshots[m] = cur.densities();
            }
        }
    }
    let field = VelocityField {
        geometry: psi0.geometry,
        grid: grid.clone(),
        frames,
    };
    let flow = ScaledFlow {
        inner: &field,
        scale: plan.velocity_scale,
    };

    let starts = sample_initial(psi0, plan.n_samples, plan.seed)?;
    let geometry = psi0.geometry;
    let results: Vec<std::result::Result<Vec<BaseCoords>, TrajectoryStatus>> = starts
        .par_iter()
        .map(|&q0| {
            let start = CoverPoint::new(q0.r, q0.theta, 0);
            integrate_trajectory_observed(&flow, &geometry, start, dt, &record_steps)
        })
        .collect();

    let mut survivors: Vec<&Vec<BaseCoords>> = Vec::with_capacity(results.len());
    let mut hit_node = 0usize;
    let mut left_domain = 0usize;
    for r in &results {
        match r {
            Ok(path) => survivors.push(path),
            Err(TrajectoryStatus::HitNodalRegion) => hit_node += 1,
            Err(TrajectoryStatus::LeftDomain) => left_domain += 1,
            Err(TrajectoryStatus::Completed) => unreachable!(),
        }
    }
    let dropped = hit_node + left_domain;
    if (dropped as f64) > DROP_BUDGET * plan.n_samples as f64 {
        return Err(Error::ExcessiveDrops {
            dropped,
            total: plan.n_samples,
            budget_percent: DROP_BUDGET * 100.0,
        });
    }
    let n_used = survivors.len();
    if n_used == 0 {
        return Err(Error::DegenerateDensity);
    }

    let kind = if has_radial {
        StatisticKind::ChiSquareMerged
    } else {
        StatisticKind::KolmogorovSmirnov
    };
    let mut statistics = Vec::with_capacity(times.len());
    let mut thresholds = Vec::with_capacity(times.len());
    let mut pass = Vec::with_capacity(times.len());
    let mut observed_all = Vec::with_capacity(times.len());
    let mut expected_all = Vec::with_capacity(times.len());
    for (m, density) in snapshots.iter().enumerate() {
        debug_assert_eq!(density.len(), grid.n_nodes());
        let cell_mass: Vec<f64> = (0..grid.n_nodes())
            .map(|node| grid.weights[node] * density[node])
            .collect();
        let total: f64 = cell_mass.iter().sum();
        let expected: Vec<f64> = cell_mass
            .iter()
            .map(|&mass| mass / total * n_used as f64)
            .collect();
        let mut observed = vec![0.0f64; grid.n_nodes()];
        for p in &survivors {
            let q = p[m];
            let j = ((q.theta / grid.dtheta).round() as usize) % grid.n_theta;
            let i = if has_radial {
                (((q.r - grid.r_nodes[0]) / grid.dr).round() as usize).min(grid.n_r - 1)
            } else {
                0
            };
            observed[grid.idx(i, j)] += 1.0;
        }
        match kind {
            StatisticKind::KolmogorovSmirnov => {
                let thetas: Vec<f64> = survivors.iter().map(|p| p[m].theta).collect();
                let d = ks_statistic_theta(&thetas, &cell_mass, grid.dtheta, grid.theta_period);
                let thr = KS_CRITICAL_001 / (n_used as f64).sqrt();
                statistics.push(d);
                thresholds.push(thr);
                pass.push(d < thr);
            }
            StatisticKind::ChiSquareMerged => {
                let (stat, dof) = chi_square_merged(&observed, &expected);
                let thr = if dof > 0 {
                    ChiSquared::new(dof as f64)
                        .expect("dof > 0")
                        .inverse_cdf(1.0 - CHI2_ALPHA)
                } else {
                    f64::INFINITY
                };
                statistics.push(stat);
                thresholds.push(thr);
                pass.push(stat < thr);
            }
        }
        observed_all.push(observed);
        expected_all.push(expected);
    }

    Ok(DistributionComparison {
        kind,
        times,
        statistics,
        thresholds,
        pass,
        n_samples: plan.n_samples,
        n_used,
        dropped,
        drop_reasons: vec![
            (TrajectoryStatus::HitNodalRegion, hit_node),
            (TrajectoryStatus::LeftDomain, left_domain),
        ],
        small_sample: plan.n_samples < 100,
        observed: observed_all,
        expected: expected_all,
    })
}
