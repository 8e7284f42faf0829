//! Scenario configuration: strict TOML schema and construction of the core
//! objects. Unknown keys are hard errors; physics-bearing keys (beta, alpha,
//! axis, grid) have no defaults.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use covbohm::algebra::UnitaryRep;
use covbohm::evolution::{
    assemble_hamiltonian, eigenstate, CoveringWave, Hamiltonian, PotentialField, SolverOptions,
};
use covbohm::geometry::{build_grid, Geometry};
use covbohm::TopologicalFactor;
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub geometry: Option<GeometryBlock>,
    #[serde(default)]
    pub factor: Option<FactorBlock>,
    #[serde(default)]
    pub potential: Option<PotentialBlock>,
    #[serde(default)]
    pub initial: Option<InitialBlock>,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub algebra: Option<AlgebraBlock>,
    #[serde(skip)]
    pub raw_text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub kind: String,
    pub grid: [usize; 2],
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub r_in: Option<f64>,
    #[serde(default)]
    pub r_out: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorBlock {
    pub kind: String,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub axis: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub kind: String,
    #[serde(default)]
    pub strength: Option<f64>,
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub field: Option<[f64; 3]>,
    #[serde(default)]
    pub mu: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub kind: String,
    #[serde(default)]
    pub index: Option<usize>,
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    #[serde(default)]
    pub width: Option<[f64; 2]>,
    #[serde(default)]
    pub momentum: Option<[f64; 2]>,
    #[serde(default)]
    pub theta_center: Option<f64>,
    #[serde(default)]
    pub theta_width: Option<f64>,
    #[serde(default)]
    pub angular_momentum: Option<f64>,
    /// (re, im, re, im) for the two fiber components; default spin-up.
    #[serde(default)]
    pub spinor: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default = "default_spectrum_k")]
    pub spectrum_k: usize,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_frame_stride")]
    pub frame_stride: usize,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_spectrum_k() -> usize {
    6
}
fn default_solver_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    10_000
}
fn default_frame_stride() -> usize {
    10
}

impl Default for NumericsBlock {
    fn default() -> Self {
        NumericsBlock {
            dt: default_dt(),
            t_final: None,
            snapshot_times: None,
            n_samples: None,
            spectrum_k: default_spectrum_k(),
            solver_tol: default_solver_tol(),
            max_iter: default_max_iter(),
            frame_stride: default_frame_stride(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraBlock {
    pub check: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub w_dim: Option<usize>,
    #[serde(default)]
    pub pairs: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub mu_lambda: Option<f64>,
    #[serde(default)]
    pub axis: Option<[f64; 3]>,
    #[serde(default)]
    pub beta: Option<f64>,
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: Config = toml::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    cfg.raw_text = text;
    Ok(cfg)
}

/// Everything a PDE subcommand needs, admissibility already enforced.
pub struct PdeSetup {
    pub geometry: Geometry,
    pub factor: TopologicalFactor,
    pub potential: PotentialField,
    pub hamiltonian: Hamiltonian,
    pub solver: SolverOptions,
}

impl Config {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        let b = self
            .geometry
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing the [geometry] block"))?;
        let [n_r, n_theta] = b.grid;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| anyhow!("geometry.{key} is required for kind `{}`", b.kind))
        };
        let g = match b.kind.as_str() {
            "ring" => Geometry::ring(need(b.radius, "radius")?, n_theta),
            "annulus" => Geometry::annulus(
                need(b.r_in, "r_in")?,
                need(b.r_out, "r_out")?,
                n_r,
                n_theta,
            ),
            "two-anyon" => Geometry::two_anyon(
                need(b.r_in, "r_in")?,
                need(b.r_out, "r_out")?,
                n_r,
                n_theta,
            ),
            "spin-annulus" => Geometry::spin_annulus(
                need(b.r_in, "r_in")?,
                need(b.r_out, "r_out")?,
                n_r,
                n_theta,
            ),
            other => bail!("unknown geometry.kind `{other}`"),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn factor(&self) -> Result<TopologicalFactor> {
        let b = self
            .factor
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing the [factor] block"))?;
        match b.kind.as_str() {
            "character" => {
                let beta = b
                    .beta
                    .ok_or_else(|| anyhow!("factor.beta is required for a character factor"))?;
                Ok(TopologicalFactor::phase(beta))
            }
            "su2" => {
                let alpha = b
                    .alpha
                    .ok_or_else(|| anyhow!("factor.alpha is required for an su2 factor"))?;
                let axis = b
                    .axis
                    .ok_or_else(|| anyhow!("factor.axis is required for an su2 factor"))?;
                let m = covbohm::algebra::su2_rotation(alpha, axis)?;
                Ok(TopologicalFactor::UnitaryRep(UnitaryRep::new(vec![m])?))
            }
            other => bail!("unknown factor.kind `{other}`"),
        }
    }

    pub fn potential(&self, geometry: &Geometry) -> Result<PotentialField> {
        let Some(b) = self.potential.as_ref() else {
            return Ok(PotentialField::Zero);
        };
        let grid = build_grid(geometry)?;
        match b.kind.as_str() {
            "none" => Ok(PotentialField::Zero),
            "radial-harmonic" => {
                let strength = b
                    .strength
                    .ok_or_else(|| anyhow!("potential.strength is required"))?;
                let center = b.center.unwrap_or(0.5 * (geometry.r_in + geometry.r_out));
                Ok(PotentialField::radial(&grid, |r| {
                    0.5 * strength * (r - center) * (r - center)
                }))
            }
            "uniform-field" => {
                let field = b
                    .field
                    .ok_or_else(|| anyhow!("potential.field is required"))?;
                let mu = b.mu.unwrap_or(1.0);
                if geometry.fiber_dim() != 2 {
                    bail!("uniform-field potential needs a spin fiber");
                }
                let block = covbohm::algebra::dot_sigma(field) * Complex64::new(-mu, 0.0);
                Ok(PotentialField::Matrix(vec![block; grid.n_nodes()]))
            }
            other => bail!("unknown potential.kind `{other}`"),
        }
    }

    pub fn pde_setup(&self) -> Result<PdeSetup> {
        let geometry = self.geometry()?;
        let factor = self.factor()?;
        let potential = self.potential(&geometry)?;
        // admissibility gate: an inadmissible (V, Gamma) pair is a config
        // error, reported with the offending commutator norm
        let hamiltonian = assemble_hamiltonian(&geometry, &potential, &factor)
            .context("scenario rejected while assembling the Hamiltonian")?;
        Ok(PdeSetup {
            geometry,
            factor,
            potential,
            hamiltonian,
            solver: SolverOptions {
                tol: self.numerics.solver_tol,
                max_iter: self.numerics.max_iter,
            },
        })
    }

    pub fn initial_wave(&self, setup: &PdeSetup) -> Result<CoveringWave> {
        let b = self
            .initial
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing the [initial] block"))?;
        let wave = match b.kind.as_str() {
            "eigenstate" => {
                let index = b
                    .index
                    .ok_or_else(|| anyhow!("initial.index is required for an eigenstate"))?;
                eigenstate(&setup.geometry, &setup.potential, &setup.factor, index)?
            }
            "packet" => {
                let center = b.center.ok_or_else(|| anyhow!("initial.center is required"))?;
                let width = b.width.ok_or_else(|| anyhow!("initial.width is required"))?;
                let momentum = b
                    .momentum
                    .ok_or_else(|| anyhow!("initial.momentum is required"))?;
                CoveringWave::gaussian_packet(
                    setup.geometry,
                    setup.factor.clone(),
                    (center[0], center[1]),
                    (width[0], width[1]),
                    (momentum[0], momentum[1]),
                )?
            }
            "annular-packet" => {
                let theta_center = b
                    .theta_center
                    .ok_or_else(|| anyhow!("initial.theta_center is required"))?;
                let theta_width = b
                    .theta_width
                    .ok_or_else(|| anyhow!("initial.theta_width is required"))?;
                let ell = b
                    .angular_momentum
                    .ok_or_else(|| anyhow!("initial.angular_momentum is required"))?;
                CoveringWave::annular_packet(
                    setup.geometry,
                    setup.factor.clone(),
                    theta_center,
                    theta_width,
                    ell,
                )?
            }
            other => bail!("unknown initial.kind `{other}`"),
        };
        let wave = if setup.geometry.fiber_dim() == 2 && b.kind != "eigenstate" {
            let s = b.spinor.unwrap_or([1.0, 0.0, 0.0, 0.0]);
            let norm = (s.iter().map(|x| x * x).sum::<f64>()).sqrt();
            if norm <= 0.0 {
                bail!("initial.spinor must be nonzero");
            }
            let mut w = wave.with_spinor([
                Complex64::new(s[0] / norm, s[1] / norm),
                Complex64::new(s[2] / norm, s[3] / norm),
            ]);
            w.normalize()?;
            w
        } else {
            wave
        };
        Ok(wave)
    }
}
