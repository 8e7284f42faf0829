//! Exemplar multiply-connected configuration spaces, their universal covers,
//! deck-group actions and discretization grids.
//!
//! All exemplars have deck group isomorphic to Z, generated by a full turn of
//! the angular coordinate (half turn for the two-anyon relative coordinate,
//! where the generator is particle exchange).

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    /// Circle of given radius; cover is the real line.
    Ring,
    /// Planar annulus r_in < r < r_out; cover is a strip.
    Annulus,
    /// Relative coordinate of two identical particles in the plane,
    /// reduced to a half-angle annulus with exchange generator theta -> theta + pi.
    TwoAnyonRelative,
    /// Annulus carrying a C^2 spin fiber (Aharonov-Casher setting).
    SpinAnnulus,
}

/// Units: hbar = 1; `mass` is the effective mass entering -1/(2m) Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub kind: GeometryKind,
    pub radius: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub mass: f64,
    /// [n_r, n_theta]; n_r is 1 for the Ring.
    pub grid_shape: [usize; 2],
}

impl Geometry {
    pub fn ring(radius: f64, n_theta: usize) -> Self {
        Geometry {
            kind: GeometryKind::Ring,
            radius,
            r_in: 0.0,
            r_out: 0.0,
            mass: 1.0,
            grid_shape: [1, n_theta],
        }
    }

    pub fn annulus(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Self {
        Geometry {
            kind: GeometryKind::Annulus,
            radius: 0.0,
            r_in,
            r_out,
            mass: 1.0,
            grid_shape: [n_r, n_theta],
        }
    }

    /// Reduced two-body problem: effective mass is the reduced mass 1/2
    /// for two unit-mass particles.
    pub fn two_anyon(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Self {
        Geometry {
            kind: GeometryKind::TwoAnyonRelative,
            radius: 0.0,
            r_in,
            r_out,
            mass: 0.5,
            grid_shape: [n_r, n_theta],
        }
    }

    pub fn spin_annulus(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Self {
        Geometry {
            kind: GeometryKind::SpinAnnulus,
            radius: 0.0,
            r_in,
            r_out,
            mass: 1.0,
            grid_shape: [n_r, n_theta],
        }
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = mass;
        self
    }

    /// Angular extent of the fundamental domain.
    pub fn theta_period(&self) -> f64 {
        match self.kind {
            GeometryKind::TwoAnyonRelative => PI,
            _ => TAU,
        }
    }

    pub fn fiber_dim(&self) -> usize {
        match self.kind {
            GeometryKind::SpinAnnulus => 2,
            _ => 1,
        }
    }

    pub fn has_radial_extent(&self) -> bool {
        !matches!(self.kind, GeometryKind::Ring)
    }

    pub fn validate(&self) -> Result<()> {
        let [n_r, n_theta] = self.grid_shape;
        if n_theta < 8 {
            return Err(Error::Geometry(format!(
                "grid_shape entries must be >= 8, got n_theta = {n_theta}"
            )));
        }
        match self.kind {
            GeometryKind::Ring => {
                if self.radius <= 0.0 {
                    return Err(Error::Geometry("ring radius must be positive".into()));
                }
                if n_r != 1 {
                    return Err(Error::Geometry("ring grid has a single radial row".into()));
                }
            }
            _ => {
                if n_r < 8 {
                    return Err(Error::Geometry(format!(
                        "grid_shape entries must be >= 8, got n_r = {n_r}"
                    )));
                }
                if !(0.0 < self.r_in && self.r_in < self.r_out) {
                    return Err(Error::Geometry(format!(
                        "need 0 < r_in < r_out, got r_in = {}, r_out = {}",
                        self.r_in, self.r_out
                    )));
                }
            }
        }
        if self.mass <= 0.0 {
            return Err(Error::Geometry("mass must be positive".into()));
        }
        Ok(())
    }

    /// Riemannian volume of the fundamental domain.
    pub fn volume(&self) -> f64 {
        match self.kind {
            GeometryKind::Ring => self.theta_period() * self.radius,
            _ => 0.5 * self.theta_period() * (self.r_out * self.r_out - self.r_in * self.r_in),
        }
    }
}

/// Point in the fundamental domain; `r` is the ring radius on the Ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseCoords {
    pub r: f64,
    pub theta: f64,
}

/// A point of the universal cover, stored as a fundamental-domain point plus
/// an explicit deck index (keeps float ranges bounded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverPoint {
    pub base: BaseCoords,
    pub winding: i64,
}

impl CoverPoint {
    pub fn new(r: f64, theta: f64, winding: i64) -> Self {
        CoverPoint {
            base: BaseCoords { r, theta },
            winding,
        }
    }

    /// Unbounded angular coordinate on the cover.
    pub fn lifted_theta(&self, period: f64) -> f64 {
        self.base.theta + self.winding as f64 * period
    }
}

/// Element of the deck group Cov(Q-hat, Q) = Z for all exemplars here:
/// the reduced word a^n in the single generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DeckElement(pub i64);

impl DeckElement {
    pub const IDENTITY: DeckElement = DeckElement(0);

    pub fn compose(self, other: DeckElement) -> DeckElement {
        DeckElement(self.0 + other.0)
    }

    pub fn inverse(self) -> DeckElement {
        DeckElement(-self.0)
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }
}

/// Homotopy class of a loop in the base, as a reduced power of the pi_1
/// generator `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopClass(pub i64);

impl std::fmt::Display for LoopClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            0 => write!(f, "e"),
            1 => write!(f, "a"),
            n => write!(f, "a^{n}"),
        }
    }
}

/// Covering map: forget the deck index.
pub fn project_point(p: &CoverPoint) -> BaseCoords {
    p.base
}

/// Deck action on cover points. Acts by isometry; base coordinates stay in
/// the fundamental domain.
pub fn deck_act(sigma: DeckElement, p: &CoverPoint) -> CoverPoint {
    CoverPoint {
        base: p.base,
        winding: p.winding + sigma.0,
    }
}

/// The canonical isomorphism Cov(Q-hat, Q) -> pi_1(Q, q): the class of the
/// projected path from `basepoint` to sigma . basepoint.
pub fn deck_to_loop(sigma: DeckElement, _basepoint: &CoverPoint) -> LoopClass {
    LoopClass(sigma.0)
}

/// Tensor grid over the fundamental domain.
///
/// Conventions: theta nodes are theta_j = j * dtheta, j = 0..n_theta-1
/// (periodic-with-twist; the deck generator identifies column n_theta with
/// column 0). Radial nodes run from r_in to r_out inclusive (node-endpoint
/// convention) with Dirichlet walls; only rows 1..n_r-1 carry unknowns.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
    pub dr: f64,
    pub dtheta: f64,
    pub r_nodes: Vec<f64>,
    pub theta_nodes: Vec<f64>,
    /// Quadrature weight per node, row-major (radial row, then theta column).
    pub weights: Vec<f64>,
    /// Radial rows that carry unknowns (excludes Dirichlet walls).
    pub interior_rows: std::ops::Range<usize>,
    pub theta_period: f64,
    pub mass: f64,
    /// Metric radius entering 1/r^2 d^2/dtheta^2 per radial row.
    pub metric_r: Vec<f64>,
}

impl GridSpec {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    pub fn n_nodes(&self) -> usize {
        self.n_r * self.n_theta
    }

    /// Deck-shift index map: theta index `j` (possibly out of range) wraps
    /// into the fundamental domain; the second component is the deck
    /// generator power picked up by the wrap.
    #[inline]
    pub fn wrap_theta(&self, j: isize) -> (usize, i64) {
        let n = self.n_theta as isize;
        let w = j.div_euclid(n);
        ((j.rem_euclid(n)) as usize, w as i64)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Node coordinates, spacings and quadrature weights for a geometry.
pub fn build_grid(g: &Geometry) -> Result<GridSpec> {
    g.validate()?;
    let [n_r, n_theta] = g.grid_shape;
    let period = g.theta_period();
    let dtheta = period / n_theta as f64;
    let theta_nodes: Vec<f64> = (0..n_theta).map(|j| j as f64 * dtheta).collect();

    match g.kind {
        GeometryKind::Ring => {
            let w = g.radius * dtheta;
            Ok(GridSpec {
                n_r: 1,
                n_theta,
                dr: 0.0,
                dtheta,
                r_nodes: vec![g.radius],
                theta_nodes,
                weights: vec![w; n_theta],
                interior_rows: 0..1,
                theta_period: period,
                mass: g.mass,
                metric_r: vec![g.radius],
            })
        }
        _ => {
            let dr = (g.r_out - g.r_in) / (n_r - 1) as f64;
            let r_nodes: Vec<f64> = (0..n_r).map(|i| g.r_in + i as f64 * dr).collect();
            let mut weights = vec![0.0; n_r * n_theta];
            for i in 0..n_r {
                // trapezoid in r (exact for the volume element r dr)
                let wr = if i == 0 || i == n_r - 1 { 0.5 * dr } else { dr };
                for j in 0..n_theta {
                    weights[i * n_theta + j] = r_nodes[i] * wr * dtheta;
                }
            }
            Ok(GridSpec {
                n_r,
                n_theta,
                dr,
                dtheta,
                r_nodes: r_nodes.clone(),
                theta_nodes,
                weights,
                interior_rows: 1..n_r - 1,
                theta_period: period,
                mass: g.mass,
                metric_r: r_nodes,
            })
        }
    }
}
