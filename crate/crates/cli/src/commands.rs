//! Subcommand implementations. Each one consumes a parsed config, writes its
//! artifacts into the output directory and returns a report whose checks
//! decide the exit code.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, bail, Result};
use covbohm::algebra::{
    aharonov_casher_factor, classify_characters, commutant_is_scalar, dot_sigma, fermion_factor,
    perm_operator, twisted_law_residual, GroupPresentation, PauliPotential, Perm,
    PeriodicitySection, SemidirectElement, UnitaryRep,
};
use covbohm::bohm::{check_projectability, integrate_trajectory, TrajectoryStatus, VelocityField};
use covbohm::equivariance::{equivariance_test, sample_initial, EquivariancePlan, StatisticKind};
use covbohm::evolution::{check_periodicity_preserved, evolve_n_steps, spectrum};
use covbohm::geometry::CoverPoint;
use covbohm::io::{fmt_f64, write_checkpoint, write_trajectories_csv, write_wave_csv};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::report::RunReport;

const HERMITICITY_TOL: f64 = 1e-10;
const NORM_DRIFT_TOL: f64 = 1e-7;
const PERIODICITY_TOL: f64 = 1e-8;
const PROJECTABILITY_TOL: f64 = 1e-10;
const ALGEBRA_TOL: f64 = 1e-12;
const AC_CLOSED_FORM_TOL: f64 = 1e-13;

fn csv_writer(out_dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

pub fn run_spectrum(cfg: &Config, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let setup = cfg.pde_setup()?;
    let k = cfg.numerics.spectrum_k;
    let pairs = spectrum(&setup.hamiltonian, k)?;

    let mut out = csv_writer(out_dir, "spectrum.csv")?;
    use std::io::Write;
    writeln!(out, "index,energy")?;
    for (i, (e, _)) in pairs.iter().enumerate() {
        writeln!(out, "{i},{}", fmt_f64(*e))?;
    }
    drop(out);
    report.artifact("spectrum.csv");

    report.bound(
        "hermiticity_residual",
        setup.hamiltonian.hermiticity_residual(),
        HERMITICITY_TOL,
    );
    let sorted = pairs.windows(2).all(|w| w[0].0 <= w[1].0 + 1e-12);
    report.flag("energies_sorted", pairs.len() as f64, sorted);
    let lowest = pairs.first().map(|p| p.0).unwrap_or(f64::NAN);
    report.flag("lowest_energy", lowest, lowest.is_finite());
    Ok(())
}

pub fn run_evolve(cfg: &Config, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let setup = cfg.pde_setup()?;
    let psi0 = cfg.initial_wave(&setup)?;
    let dt = cfg.numerics.dt;
    let t_final = cfg
        .numerics
        .t_final
        .ok_or_else(|| anyhow!("numerics.t_final is required for evolve"))?;
    let steps = (t_final / dt).round().max(1.0) as usize;
    let dt = t_final / steps as f64;

    let norm0 = psi0.norm();
    let psi = evolve_n_steps(&psi0, &setup.hamiltonian, dt, steps, setup.solver)?;

    let mut csv = csv_writer(out_dir, "wave_final.csv")?;
    write_wave_csv(&mut csv, &psi)?;
    drop(csv);
    let mut ckpt = BufWriter::new(File::create(out_dir.join("wave_final.ckpt"))?);
    write_checkpoint(&mut ckpt, &psi)?;
    drop(ckpt);
    report.artifact("wave_final.csv");
    report.artifact("wave_final.ckpt");

    report.bound(
        "hermiticity_residual",
        setup.hamiltonian.hermiticity_residual(),
        HERMITICITY_TOL,
    );
    report.bound("norm_drift", (psi.norm() - norm0).abs(), NORM_DRIFT_TOL);
    // periodicity-preservation oracle: evolve a factor-glued double cover
    // alongside and compare on the first sheet (capped at 100 steps)
    let residual = check_periodicity_preserved(
        &psi0,
        &setup.potential,
        dt,
        steps.min(100),
        setup.solver,
    )?;
    report.bound("periodicity_residual", residual, PERIODICITY_TOL);
    report.bound(
        "projectability_residual",
        check_projectability(&psi, None)?,
        PROJECTABILITY_TOL,
    );
    Ok(())
}

pub fn run_trajectories(
    cfg: &Config,
    out_dir: &Path,
    n_override: Option<usize>,
    t_final_override: Option<f64>,
    report: &mut RunReport,
) -> Result<()> {
    let setup = cfg.pde_setup()?;
    let psi0 = cfg.initial_wave(&setup)?;
    let n = n_override
        .or(cfg.numerics.n_samples)
        .ok_or_else(|| anyhow!("pass --n or set numerics.n_samples"))?;
    let t_final = t_final_override
        .or(cfg.numerics.t_final)
        .ok_or_else(|| anyhow!("pass --t-final or set numerics.t_final"))?;
    let dt = cfg.numerics.dt;
    let steps = (t_final / dt).round().max(1.0) as usize;
    let dt = t_final / steps as f64;

    let starts = sample_initial(&psi0, n, cfg.seed())?;
    let (field, _) = VelocityField::from_evolution(
        &psi0,
        &setup.hamiltonian,
        dt,
        steps,
        cfg.numerics.frame_stride,
        setup.solver,
    )?;

    let geometry = setup.geometry;
    let trajectories: Vec<_> = starts
        .iter()
        .map(|b| {
            integrate_trajectory(
                &field,
                &geometry,
                CoverPoint::new(b.r, b.theta, 0),
                0.0,
                t_final,
                dt,
            )
        })
        .collect::<covbohm::Result<_>>()?;

    let mut csv = csv_writer(out_dir, "trajectories.csv")?;
    write_trajectories_csv(&mut csv, &trajectories)?;
    drop(csv);
    report.artifact("trajectories.csv");

    let completed = trajectories
        .iter()
        .filter(|t| t.status == TrajectoryStatus::Completed)
        .count();
    let fraction = completed as f64 / n as f64;
    report.flag("completed_fraction", fraction, fraction >= 0.99);
    let max_winding = trajectories
        .iter()
        .flat_map(|t| t.samples.iter().map(|s| s.winding.abs()))
        .max()
        .unwrap_or(0);
    report.flag("max_abs_winding", max_winding as f64, true);
    Ok(())
}

pub fn run_equivariance(cfg: &Config, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let setup = cfg.pde_setup()?;
    let psi0 = cfg.initial_wave(&setup)?;
    let times = cfg
        .numerics
        .snapshot_times
        .clone()
        .ok_or_else(|| anyhow!("numerics.snapshot_times is required for equivariance"))?;
    let n = cfg
        .numerics
        .n_samples
        .ok_or_else(|| anyhow!("numerics.n_samples is required for equivariance"))?;

    let mut plan = EquivariancePlan::new(times, n, cfg.seed());
    plan.dt = cfg.numerics.dt;
    plan.frame_stride = cfg.numerics.frame_stride;
    plan.solver = setup.solver;
    let cmp = equivariance_test(&psi0, &setup.potential, &plan)?;

    let kind = match cmp.kind {
        StatisticKind::KolmogorovSmirnov => "ks",
        StatisticKind::ChiSquareMerged => "chi2",
    };
    for i in 0..cmp.times.len() {
        report.bound(
            &format!("{kind}_t{}", cmp.times[i]),
            cmp.statistics[i],
            cmp.thresholds[i],
        );
    }
    let drop_fraction = cmp.dropped as f64 / cmp.n_samples as f64;
    report.bound("drop_fraction", drop_fraction, covbohm::equivariance::DROP_BUDGET);
    if cmp.small_sample {
        report.warn(format!(
            "only {} samples: asymptotic thresholds unreliable below ~100",
            cmp.n_samples
        ));
    }
    for (status, count) in &cmp.drop_reasons {
        if *count > 0 {
            report.warn(format!(
                "{count} trajectories dropped: {}",
                covbohm::io::status_label(*status)
            ));
        }
    }

    // plot data: empirical vs model cell counts at every snapshot time
    let mut csv = csv_writer(out_dir, "histogram.csv")?;
    use std::io::Write;
    writeln!(csv, "time,r,theta,empirical,expected")?;
    let grid = &psi0.grid;
    for (ti, &t) in cmp.times.iter().enumerate() {
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                let node = grid.idx(i, j);
                writeln!(
                    csv,
                    "{},{},{},{},{}",
                    fmt_f64(t),
                    fmt_f64(grid.r_nodes[i]),
                    fmt_f64(grid.theta_nodes[j]),
                    fmt_f64(cmp.observed[ti][node]),
                    fmt_f64(cmp.expected[ti][node]),
                )?;
            }
        }
    }
    drop(csv);
    report.artifact("histogram.csv");
    Ok(())
}

pub fn run_algebra(cfg: &Config, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let b = cfg
        .algebra
        .as_ref()
        .ok_or_else(|| anyhow!("config is missing the [algebra] block"))?;
    let need_n = || b.n.ok_or_else(|| anyhow!("algebra.n is required for check `{}`", b.check));
    match b.check.as_str() {
        "characters-sym" => {
            let n = need_n()?;
            let p = GroupPresentation::symmetric(n);
            let fam = classify_characters(&p)?;
            report.flag(
                "character_count",
                fam.characters.len() as f64,
                fam.characters.len() == 2,
            );
            report.flag("finite_family", fam.is_finite() as u8 as f64, fam.is_finite());
            report.bound("relation_defect_max", family_defect(&p, &fam)?, ALGEBRA_TOL);
            let has_sign = fam.characters.iter().any(|c| {
                c.phases
                    .iter()
                    .all(|z| (z + Complex64::new(1.0, 0.0)).norm() < 1e-12)
            });
            report.flag("sign_character_present", has_sign as u8 as f64, has_sign);
        }
        "characters-braid" => {
            let n = need_n()?;
            let p = GroupPresentation::braid(n);
            let fam = classify_characters(&p)?;
            report.flag(
                "free_parameters",
                fam.free_directions.len() as f64,
                fam.free_directions.len() == 1,
            );
            // the free direction assigns every generator the same angle
            let uniform = fam.free_directions[0].windows(2).all(|w| w[0] == w[1]);
            report.flag("common_phase_direction", uniform as u8 as f64, uniform);
            let mut worst: f64 = 0.0;
            for &beta in &[0.0, 0.9, PI, -2.3] {
                let c = fam.at(0, &[beta]);
                for rel in &p.relations {
                    worst = worst.max((c.eval(rel)? - Complex64::new(1.0, 0.0)).norm());
                }
            }
            report.bound("relation_defect_max", worst, ALGEBRA_TOL);
        }
        "fermion-section" => {
            let n = need_n()?;
            let w_dim = b.w_dim.unwrap_or(1);
            let pairs = b.pairs.unwrap_or(50);
            let single = match w_dim {
                1 => UnitaryRep::cyclic_phase(b.beta.unwrap_or(PI / 2.0)),
                2 => UnitaryRep::new(vec![covbohm::algebra::su2_rotation(
                    b.beta.unwrap_or(PI / 2.0),
                    b.axis.unwrap_or([0.0, 0.0, 1.0]),
                )?])?,
                d => bail!("algebra.w_dim must be 1 or 2, got {d}"),
            };
            let section = PeriodicitySection::Fermion { n, single };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
            let sample: Vec<_> = (0..pairs)
                .map(|_| {
                    (
                        SemidirectElement::random(&mut rng, n, 3),
                        SemidirectElement::random(&mut rng, n, 3),
                    )
                })
                .collect();
            report.bound(
                "twisted_law_residual",
                twisted_law_residual(&section, &sample)?,
                ALGEBRA_TOL,
            );
            // trivial single-particle factor: a transposition must act as
            // minus the slot permutation
            let trivial = UnitaryRep::cyclic_phase(0.0);
            let swap = SemidirectElement::from_windings(Perm::adjacent(n, 0), &vec![0; n])?;
            let points: Vec<CoverPoint> = (0..n)
                .map(|i| CoverPoint::new(1.0 + 0.1 * i as f64, 0.3 * i as f64, 0))
                .collect();
            let got = fermion_factor(&swap, &trivial, &points)?;
            let want = perm_operator(&swap.perm, 1) * Complex64::new(-1.0, 0.0);
            report.bound("transposition_sign_residual", (got - want).norm(), ALGEBRA_TOL);
        }
        "ac-factor" => {
            let mu_lambda = b
                .mu_lambda
                .ok_or_else(|| anyhow!("algebra.mu_lambda is required"))?;
            let axis = b.axis.ok_or_else(|| anyhow!("algebra.axis is required"))?;
            let m = aharonov_casher_factor(mu_lambda, axis)?;
            let a = 4.0 * PI * mu_lambda;
            let closed = DMatrix::identity(2, 2) * Complex64::new(a.cos(), 0.0)
                - dot_sigma(axis) * Complex64::new(0.0, a.sin());
            report.bound("closed_form_residual", (&m - closed).norm(), AC_CLOSED_FORM_TOL);
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            report.bound("det_defect", (det - Complex64::new(1.0, 0.0)).norm(), ALGEBRA_TOL);
            let utu = m.adjoint() * &m;
            report.bound(
                "unitarity_defect",
                (utu - DMatrix::identity(2, 2)).norm(),
                ALGEBRA_TOL,
            );
        }
        "commutant" => {
            let n = b.n.unwrap_or(1);
            let samples = b.samples.unwrap_or(40);
            let pot = PauliPotential::random(n, samples, cfg.seed());
            let rep = commutant_is_scalar(&pot)?;
            report.flag("random_commutant_scalar", rep.scalar as u8 as f64, rep.scalar);
            report.flag("random_null_dim", rep.null_dim as f64, rep.null_dim == 1);
            if rep.sample_deficit {
                report.warn("fewer samples than the recommended dim^2 budget");
            }
            // degenerate control: every field along z commutes with sigma_z
            let aligned = PauliPotential::new(n, vec![vec![[0.0, 0.0, 1.0]; n]; samples])?;
            let rep2 = commutant_is_scalar(&aligned)?;
            report.flag(
                "aligned_commutant_degenerate",
                rep2.null_dim as f64,
                !rep2.scalar,
            );
        }
        other => bail!("unknown algebra.check `{other}`"),
    }
    report.write_text(out_dir, "report.txt")?;
    report.artifact("report.txt");
    Ok(())
}

fn family_defect(
    p: &GroupPresentation,
    fam: &covbohm::algebra::CharacterFamily,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for c in &fam.characters {
        for rel in &p.relations {
            worst = worst.max((c.eval(rel)? - Complex64::new(1.0, 0.0)).norm());
        }
    }
    Ok(worst)
}
