//! Run configuration: a flat JSON document with a tagged initial condition.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_OUTPUT_STRIDE: usize = 10;
pub const DEFAULT_N_PARTICLES: usize = 4096;
pub const DEFAULT_N_NODES: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    #[default]
    Particles,
    Contour,
}

fn one() -> f64 {
    1.0
}

fn default_sigma_min() -> f64 {
    0.15
}

fn default_sigma_max() -> f64 {
    0.4
}

fn default_n_blobs() -> usize {
    4
}

/// Initial temperature distributions. All lengths are absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Uniform disk `θ₀ · 1{|x − center| < radius}`.
    Disk {
        #[serde(alias = "R0")]
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        theta0: f64,
    },
    /// Uniform annulus about the origin (particles only).
    Annulus {
        inner: f64,
        outer: f64,
        #[serde(default = "one")]
        theta0: f64,
    },
    /// Two uniform disks centred at `(∓separation/2, 0)`.
    TwoDisks {
        radius_a: f64,
        radius_b: f64,
        separation: f64,
        #[serde(default = "one")]
        theta0: f64,
    },
    /// Seeded superposition of Gaussian blobs truncated to `|x| <= radius`,
    /// scaled to peak value `theta0` and recentred on its centre of mass
    /// (particles only). Blob widths are `[sigma_min, sigma_max] · radius`.
    RandomBlobs {
        #[serde(alias = "R0")]
        radius: f64,
        #[serde(default = "default_n_blobs")]
        n_blobs: usize,
        #[serde(default = "default_sigma_min")]
        sigma_min: f64,
        #[serde(default = "default_sigma_max")]
        sigma_max: f64,
        #[serde(default = "one")]
        theta0: f64,
    },
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_stride() -> usize {
    DEFAULT_OUTPUT_STRIDE
}

fn default_n_particles() -> usize {
    DEFAULT_N_PARTICLES
}

fn default_n_nodes() -> usize {
    DEFAULT_N_NODES
}

fn default_n_max() -> usize {
    crate::diagnostics::DEFAULT_N_MAX
}

/// Simulation settings. Only `alpha`, `t_end` and `initial_condition` are
/// required; everything else has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub alpha: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub representation: Representation,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    #[serde(default)]
    pub seed: u64,
    pub initial_condition: InitialCondition,
    /// Approximate particle count for lattice initialisation.
    #[serde(default = "default_n_particles")]
    pub n_particles: usize,
    /// Total contour node count.
    #[serde(default = "default_n_nodes")]
    pub n_nodes: usize,
    /// Blob radius; defaults to half the lattice spacing.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Highest moment order recorded.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

impl SimConfig {
    pub fn new(alpha: f64, t_end: f64, initial_condition: InitialCondition) -> Self {
        Self {
            alpha,
            dt: DEFAULT_DT,
            t_end,
            integrator: Integrator::Rk4,
            representation: Representation::Particles,
            output_stride: DEFAULT_OUTPUT_STRIDE,
            seed: 0,
            initial_condition,
            n_particles: DEFAULT_N_PARTICLES,
            n_nodes: DEFAULT_N_NODES,
            eps: None,
            n_max: default_n_max(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha outside (0,1]: {}", self.alpha));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive: {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative: {}", self.t_end));
        }
        if self.output_stride == 0 {
            return bad("output_stride must be at least 1".into());
        }
        if self.n_particles == 0 {
            return bad("n_particles must be at least 1".into());
        }
        if self.n_nodes < crate::field::MIN_CONTOUR_NODES {
            return bad(format!("n_nodes must be at least {}", crate::field::MIN_CONTOUR_NODES));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad(format!("eps must be positive: {eps}"));
            }
        }
        if self.n_max == 0 {
            return bad("n_max must be at least 1".into());
        }
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("initial_condition.{name} must be positive: {v}")))
            }
        };
        match &self.initial_condition {
            InitialCondition::Disk { radius, center, theta0 } => {
                positive("radius", *radius)?;
                positive("theta0", *theta0)?;
                if !center.iter().all(|c| c.is_finite()) {
                    return bad("initial_condition.center must be finite".into());
                }
            }
            InitialCondition::Annulus { inner, outer, theta0 } => {
                positive("inner", *inner)?;
                positive("outer", *outer)?;
                positive("theta0", *theta0)?;
                if inner >= outer {
                    return bad("initial_condition.inner must be below outer".into());
                }
            }
            InitialCondition::TwoDisks {
                radius_a,
                radius_b,
                separation,
                theta0,
            } => {
                positive("radius_a", *radius_a)?;
                positive("radius_b", *radius_b)?;
                positive("separation", *separation)?;
                positive("theta0", *theta0)?;
            }
            InitialCondition::RandomBlobs {
                radius,
                n_blobs,
                sigma_min,
                sigma_max,
                theta0,
            } => {
                positive("radius", *radius)?;
                positive("sigma_min", *sigma_min)?;
                positive("sigma_max", *sigma_max)?;
                positive("theta0", *theta0)?;
                if *n_blobs == 0 {
                    return bad("initial_condition.n_blobs must be at least 1".into());
                }
                if sigma_min > sigma_max {
                    return bad("initial_condition.sigma_min exceeds sigma_max".into());
                }
            }
        }
        if self.representation == Representation::Contour {
            if self.alpha >= 1.0 {
                return bad("contour representation needs alpha < 1".into());
            }
            match self.initial_condition {
                InitialCondition::Disk { .. } | InitialCondition::TwoDisks { .. } => {}
                _ => return bad("contour representation supports only disk and two_disks".into()),
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let config: SimConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }
}

/// Reads and validates a JSON config file.
pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    SimConfig::from_json_str(&text, path)
}
