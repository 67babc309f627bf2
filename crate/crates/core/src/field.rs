//! Discretizations of the temperature field: regularized particles and
//! piecewise-linear patch boundaries.

use crate::error::{Error, Result};
use crate::geometry;
use crate::vec2::Vec2;

pub const MIN_CONTOUR_NODES: usize = 16;

/// Lagrangian particles carrying temperature mass `w_i` (θ·area).
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleField {
    positions: Vec<Vec2>,
    weights: Vec<f64>,
    eps: f64,
    max_theta_density: f64,
}

impl ParticleField {
    pub fn new(positions: Vec<Vec2>, weights: Vec<f64>, eps: f64, max_theta_density: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Precondition("particle field is empty".into()));
        }
        if positions.len() != weights.len() {
            return Err(Error::Precondition(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Precondition(format!("weight {i} is not positive")));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Precondition(format!("blob radius must be positive, got {eps}")));
        }
        if !(max_theta_density > 0.0) {
            return Err(Error::Precondition("max_theta_density must be positive".into()));
        }
        Ok(Self {
            positions,
            weights,
            eps,
            max_theta_density,
        })
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn max_theta_density(&self) -> f64 {
        self.max_theta_density
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same weights and blob radius at new positions.
    pub fn with_positions(&self, positions: Vec<Vec2>) -> Self {
        debug_assert_eq!(positions.len(), self.weights.len());
        Self {
            positions,
            weights: self.weights.clone(),
            eps: self.eps,
            max_theta_density: self.max_theta_density,
        }
    }
}

/// Closed counterclockwise polyline bounding a patch of constant temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourPatch {
    nodes: Vec<Vec2>,
    theta0: f64,
    target_spacing: f64,
}

impl ContourPatch {
    /// Validated constructor: at least 16 finite nodes forming a simple,
    /// counterclockwise polygon.
    pub fn new(nodes: Vec<Vec2>, theta0: f64, target_spacing: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0.is_finite()) {
            return Err(Error::Precondition(format!("theta0 must be positive, got {theta0}")));
        }
        if !(target_spacing > 0.0) {
            return Err(Error::Precondition("target_spacing must be positive".into()));
        }
        let patch = Self {
            nodes,
            theta0,
            target_spacing,
        };
        patch.validate()?;
        Ok(patch)
    }

    /// Uniformly sampled circle, counterclockwise.
    pub fn circle(center: Vec2, radius: f64, n: usize, theta0: f64) -> Result<Self> {
        let nodes = geometry::regular_polygon(center, radius, n, 0.0);
        let spacing = geometry::perimeter(&nodes) / n as f64;
        Self::new(nodes, theta0, spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < MIN_CONTOUR_NODES {
            return Err(Error::InvalidGeometry(format!(
                "contour has {} nodes, need at least {MIN_CONTOUR_NODES}",
                self.nodes.len()
            )));
        }
        if let Some(i) = self.nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        if geometry::signed_area(&self.nodes) <= 0.0 {
            return Err(Error::InvalidGeometry("contour is not counterclockwise".into()));
        }
        if let Some(c) = geometry::find_crossing(&[&self.nodes]) {
            return Err(Error::InvalidGeometry(format!(
                "contour self-intersects between edges {} and {}",
                c.first.1, c.second.1
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn target_spacing(&self) -> f64 {
        self.target_spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.nodes)
    }

    /// Same patch with the given nodes; no validation (used for
    /// intermediate integrator stages).
    pub fn with_nodes(&self, nodes: Vec<Vec2>) -> Self {
        Self {
            nodes,
            theta0: self.theta0,
            target_spacing: self.target_spacing,
        }
    }
}

/// A field snapshot in either representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Particles(ParticleField),
    Contours(Vec<ContourPatch>),
}

impl Field {
    /// All material points, particles in order or contour nodes curve by curve.
    pub fn positions(&self) -> Vec<Vec2> {
        match self {
            Field::Particles(p) => p.positions().to_vec(),
            Field::Contours(cs) => cs.iter().flat_map(|c| c.nodes().iter().copied()).collect(),
        }
    }

    pub fn num_points(&self) -> usize {
        match self {
            Field::Particles(p) => p.len(),
            Field::Contours(cs) => cs.iter().map(ContourPatch::len).sum(),
        }
    }

    /// Replaces all material points (same layout as [`Field::positions`]).
    pub fn with_positions(&self, positions: &[Vec2]) -> Field {
        match self {
            Field::Particles(p) => Field::Particles(p.with_positions(positions.to_vec())),
            Field::Contours(cs) => {
                let mut offset = 0;
                let patches = cs
                    .iter()
                    .map(|c| {
                        let n = c.len();
                        let patch = c.with_nodes(positions[offset..offset + n].to_vec());
                        offset += n;
                        patch
                    })
                    .collect();
                Field::Contours(patches)
            }
        }
    }

    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> Field {
        let moved: Vec<Vec2> = self.positions().into_iter().map(f).collect();
        self.with_positions(&moved)
    }

    pub fn translated(&self, shift: Vec2) -> Field {
        self.map_points(|p| p + shift)
    }

    pub fn rotated(&self, angle: f64) -> Field {
        self.map_points(|p| p.rotate(angle))
    }

    /// Mirror image across the x1 axis. Contours are re-reversed so they stay
    /// counterclockwise.
    pub fn reflected(&self) -> Field {
        let mirrored = self.map_points(|p| Vec2::new(p.x1, -p.x2));
        match mirrored {
            Field::Contours(cs) => Field::Contours(
                cs.into_iter()
                    .map(|c| {
                        let mut nodes = c.nodes().to_vec();
                        nodes.reverse();
                        c.with_nodes(nodes)
                    })
                    .collect(),
            ),
            other => other,
        }
    }

    pub fn is_particles(&self) -> bool {
        matches!(self, Field::Particles(_))
    }
}
