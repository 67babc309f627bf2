//! Time integration of the active scalar: material points (particles or
//! contour nodes) move with the velocity the field induces on itself.

mod initial;
mod redistribute;

pub use initial::{contour_field, initial_field, particle_field};
pub use redistribute::redistribute_nodes;

use crate::config::SimConfig;
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::{ContourPatch, Field};
use crate::geometry;
use crate::kernel::{velocity_contours, velocity_particles_self, KernelParams};
use crate::vec2::Vec2;

/// Velocity of every material point under the field's own induced velocity.
/// The particle self-term vanishes identically.
pub fn rhs(field: &Field, params: &KernelParams) -> Result<Vec<Vec2>> {
    match field {
        Field::Particles(p) => Ok(velocity_particles_self(p, params)),
        Field::Contours(cs) => velocity_contours(&field.positions(), cs, params),
    }
}

fn axpy(x: &[Vec2], a: f64, k: &[Vec2]) -> Vec<Vec2> {
    x.iter().zip(k).map(|(&x, &k)| x + k * a).collect()
}

/// One classical fourth-order Runge–Kutta step. Weights, θ₀ and the blob
/// radius are carried over unchanged; contour nodes are not redistributed.
pub fn step_rk4(field: &Field, dt: f64, params: &KernelParams) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
    }
    let x0 = field.positions();
    let k1 = rhs(field, params)?;
    let k2 = rhs(&field.with_positions(&axpy(&x0, 0.5 * dt, &k1)), params)?;
    let k3 = rhs(&field.with_positions(&axpy(&x0, 0.5 * dt, &k2)), params)?;
    let k4 = rhs(&field.with_positions(&axpy(&x0, dt, &k3)), params)?;
    let sixth = dt / 6.0;
    let mut next = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let p = x0[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth;
        if !p.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        next.push(p);
    }
    Ok(field.with_positions(&next))
}

/// Redistributes every contour and checks the set for crossings.
pub fn maintain_contours(patches: &[ContourPatch]) -> Result<Vec<ContourPatch>> {
    let fresh = patches.iter().map(redistribute_nodes).collect::<Result<Vec<_>>>()?;
    check_crossings(&fresh)?;
    Ok(fresh)
}

fn check_crossings(patches: &[ContourPatch]) -> Result<()> {
    let curves: Vec<&[Vec2]> = patches.iter().map(|p| p.nodes()).collect();
    match geometry::find_crossing(&curves) {
        Some(c) => Err(Error::InvalidGeometry(format!(
            "edge {} of contour {} crosses edge {} of contour {}",
            c.first.1, c.first.0, c.second.1, c.second.0
        ))),
        None => Ok(()),
    }
}

/// A stored state with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub field: Field,
    pub record: DiagnosticsRecord,
}

/// Ordered snapshots of one run, starting at t = 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn records(&self) -> impl Iterator<Item = &DiagnosticsRecord> {
        self.snapshots.iter().map(|s| &s.record)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    /// Snapshots with `t <= t_end / 2`.
    pub fn first_half(&self) -> Trajectory {
        let half = 0.5 * self.t_end();
        Trajectory {
            snapshots: self.snapshots.iter().filter(|s| s.t <= half).cloned().collect(),
        }
    }

    /// Applies a rigid map to every stored field and recomputes diagnostics.
    pub fn map_fields(&self, alpha: f64, f: impl Fn(&Field) -> Field) -> Result<Trajectory> {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| {
                let field = f(&s.field);
                let record = diagnostics::record(&field, s.t, alpha, s.record.n_max())?;
                Ok(Snapshot {
                    step: s.step,
                    t: s.t,
                    field,
                    record,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { snapshots })
    }
}

/// Number of steps to reach `t_end`; the last one may be shortened.
pub fn step_count(t_end: f64, dt: f64) -> u64 {
    if t_end <= 0.0 {
        0
    } else {
        ((t_end / dt) * (1.0 - 1e-12)).ceil() as u64
    }
}

/// Integrates `config` from its initial condition to `t_end`, handing each
/// output snapshot to `observer` as soon as it exists. Errors raised during
/// stepping carry the step and time of failure.
pub fn evolve_with(config: &SimConfig, mut observer: impl FnMut(&Snapshot) -> Result<()>) -> Result<()> {
    config.validate()?;
    let params = KernelParams::new(config.alpha)?;
    let mut field = initial_field(config).map_err(|e| match e {
        Error::InvalidGeometry(reason) => Error::GeometryFailure {
            step: 0,
            time: 0.0,
            reason,
        },
        other => other,
    })?;
    let record = diagnostics::record(&field, 0.0, config.alpha, config.n_max)?;
    observer(&Snapshot {
        step: 0,
        t: 0.0,
        field: field.clone(),
        record,
    })?;
    let n_steps = step_count(config.t_end, config.dt);
    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * config.dt;
        let t = if step == n_steps { config.t_end } else { step as f64 * config.dt };
        let h = t - t_prev;
        field = step_rk4(&field, h, &params).map_err(|e| match e {
            Error::NonFinite { .. } => Error::BlowUp { step, time: t },
            Error::InvalidGeometry(reason) => Error::GeometryFailure { step, time: t, reason },
            other => other,
        })?;
        if let Field::Contours(cs) = &field {
            field = Field::Contours(maintain_contours(cs).map_err(|e| match e {
                Error::InvalidGeometry(reason) => Error::GeometryFailure { step, time: t, reason },
                Error::NonFinite { .. } => Error::BlowUp { step, time: t },
                other => other,
            })?);
        }
        if step % config.output_stride as u64 == 0 || step == n_steps {
            let record = diagnostics::record(&field, t, config.alpha, config.n_max)?;
            observer(&Snapshot {
                step,
                t,
                field: field.clone(),
                record,
            })?;
        }
    }
    Ok(())
}

/// Runs `config` and collects the full trajectory.
pub fn evolve(config: &SimConfig) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    evolve_with(config, |s| {
        traj.snapshots.push(s.clone());
        Ok(())
    })?;
    Ok(traj)
}
