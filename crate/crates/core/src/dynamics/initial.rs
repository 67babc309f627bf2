//! Initial-condition generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitialCondition, Representation, SimConfig};
use crate::error::{Error, Result};
use crate::field::{ContourPatch, Field, ParticleField};
use crate::geometry;
use crate::vec2::Vec2;

/// Builds the initial field described by `config`.
pub fn initial_field(config: &SimConfig) -> Result<Field> {
    match config.representation {
        Representation::Particles => particle_field(config).map(Field::Particles),
        Representation::Contour => contour_field(config).map(Field::Contours),
    }
}

struct Lattice {
    points: Vec<Vec2>,
    spacing: f64,
}

/// Cell-centred square lattice of spacing `h` about `center` covering the
/// disk of radius `r`.
fn lattice_in_disk(center: Vec2, r: f64, h: f64) -> Vec<Vec2> {
    let m = (r / h).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for j in -m..m {
        for i in -m..m {
            let p = Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if p.norm() < r {
                pts.push(center + p);
            }
        }
    }
    pts
}

fn lattice_for(ic: &InitialCondition, n: usize) -> Lattice {
    let area = |r: f64| std::f64::consts::PI * r * r;
    match *ic {
        InitialCondition::Disk { radius, center, .. } => {
            let h = (area(radius) / n as f64).sqrt();
            Lattice {
                points: lattice_in_disk(Vec2::new(center[0], center[1]), radius, h),
                spacing: h,
            }
        }
        InitialCondition::Annulus { inner, outer, .. } => {
            let h = ((area(outer) - area(inner)) / n as f64).sqrt();
            let points = lattice_in_disk(Vec2::ZERO, outer, h)
                .into_iter()
                .filter(|p| p.norm() >= inner)
                .collect();
            Lattice { points, spacing: h }
        }
        InitialCondition::TwoDisks {
            radius_a,
            radius_b,
            separation,
            ..
        } => {
            let h = ((area(radius_a) + area(radius_b)) / n as f64).sqrt();
            let mut points = lattice_in_disk(Vec2::new(-0.5 * separation, 0.0), radius_a, h);
            points.extend(lattice_in_disk(Vec2::new(0.5 * separation, 0.0), radius_b, h));
            Lattice { points, spacing: h }
        }
        InitialCondition::RandomBlobs { radius, .. } => {
            let h = (area(radius) / n as f64).sqrt();
            Lattice {
                points: lattice_in_disk(Vec2::ZERO, radius, h),
                spacing: h,
            }
        }
    }
}

struct Blob {
    center: Vec2,
    sigma: f64,
    amplitude: f64,
}

fn random_blobs(seed: u64, radius: f64, n_blobs: usize, sigma_min: f64, sigma_max: f64) -> Vec<Blob> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_blobs)
        .map(|_| {
            let center = loop {
                let c = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if c.norm() < 1.0 {
                    break c * (0.6 * radius);
                }
            };
            let sigma = radius * if sigma_max > sigma_min { rng.gen_range(sigma_min..sigma_max) } else { sigma_min };
            let amplitude = rng.gen_range(0.5..1.0);
            Blob {
                center,
                sigma,
                amplitude,
            }
        })
        .collect()
}

pub fn particle_field(config: &SimConfig) -> Result<ParticleField> {
    let ic = &config.initial_condition;
    let lattice = lattice_for(ic, config.n_particles);
    if lattice.points.is_empty() {
        return Err(Error::Validation("initial condition produced no particles".into()));
    }
    let cell = lattice.spacing * lattice.spacing;
    let eps = config.eps.unwrap_or(0.5 * lattice.spacing);
    match *ic {
        InitialCondition::Disk { theta0, .. }
        | InitialCondition::Annulus { theta0, .. }
        | InitialCondition::TwoDisks { theta0, .. } => {
            let w = vec![theta0 * cell; lattice.points.len()];
            ParticleField::new(lattice.points, w, eps, theta0)
        }
        InitialCondition::RandomBlobs {
            radius,
            n_blobs,
            sigma_min,
            sigma_max,
            theta0,
        } => {
            let blobs = random_blobs(config.seed, radius, n_blobs, sigma_min, sigma_max);
            let density: Vec<f64> = lattice
                .points
                .iter()
                .map(|&x| {
                    blobs
                        .iter()
                        .map(|b| b.amplitude * (-(x - b.center).norm_sq() / (2.0 * b.sigma * b.sigma)).exp())
                        .sum()
                })
                .collect();
            let peak = density.iter().copied().fold(0.0, f64::max);
            let scale = theta0 / peak;
            let weights: Vec<f64> = density.iter().map(|d| d * scale * cell).collect();
            let mass: f64 = weights.iter().sum();
            let mut com = Vec2::ZERO;
            for (p, w) in lattice.points.iter().zip(&weights) {
                com += *p * *w;
            }
            let com = com * (1.0 / mass);
            let positions = lattice.points.iter().map(|&p| p - com).collect();
            ParticleField::new(positions, weights, eps, theta0)
        }
    }
}

pub fn contour_field(config: &SimConfig) -> Result<Vec<ContourPatch>> {
    let patches = match config.initial_condition {
        InitialCondition::Disk { radius, center, theta0 } => {
            vec![ContourPatch::circle(Vec2::new(center[0], center[1]), radius, config.n_nodes, theta0)?]
        }
        InitialCondition::TwoDisks {
            radius_a,
            radius_b,
            separation,
            theta0,
        } => {
            let total = config.n_nodes as f64;
            let na = ((total * radius_a / (radius_a + radius_b)).round() as usize).max(crate::field::MIN_CONTOUR_NODES);
            let nb = config.n_nodes.saturating_sub(na).max(crate::field::MIN_CONTOUR_NODES);
            vec![
                ContourPatch::circle(Vec2::new(-0.5 * separation, 0.0), radius_a, na, theta0)?,
                ContourPatch::circle(Vec2::new(0.5 * separation, 0.0), radius_b, nb, theta0)?,
            ]
        }
        _ => {
            return Err(Error::Validation(
                "contour representation supports only disk and two_disks".into(),
            ))
        }
    };
    let curves: Vec<&[Vec2]> = patches.iter().map(|p| p.nodes()).collect();
    if let Some(c) = geometry::find_crossing(&curves) {
        return Err(Error::InvalidGeometry(format!(
            "initial contours {} and {} intersect",
            c.first.0, c.second.0
        )));
    }
    Ok(patches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::conserved_quantities;

    #[test]
    fn disk_lattice_mass_and_count() {
        let c = SimConfig::new(
            0.5,
            1.0,
            InitialCondition::Disk {
                radius: 1.0,
                center: [0.0, 0.0],
                theta0: 2.0,
            },
        );
        let p = particle_field(&c).unwrap();
        let n = p.len() as f64;
        assert!((n - 4096.0).abs() / 4096.0 < 0.02, "{n}");
        let mass: f64 = p.weights().iter().sum();
        assert!((mass - 2.0 * std::f64::consts::PI).abs() / mass < 0.02);
        let h = (std::f64::consts::PI / 4096.0).sqrt();
        assert!((p.eps() - 0.5 * h).abs() < 1e-15);
        assert_eq!(p.max_theta_density(), 2.0);
    }

    #[test]
    fn random_blobs_are_seeded_recentred_and_positive() {
        let mut c = SimConfig::new(
            0.5,
            1.0,
            InitialCondition::RandomBlobs {
                radius: 1.0,
                n_blobs: 4,
                sigma_min: 0.15,
                sigma_max: 0.4,
                theta0: 1.0,
            },
        );
        c.n_particles = 1024;
        c.seed = 7;
        let a = particle_field(&c).unwrap();
        let b = particle_field(&c).unwrap();
        assert_eq!(a, b);
        c.seed = 8;
        assert_ne!(a, particle_field(&c).unwrap());
        assert!(a.weights().iter().all(|&w| w > 0.0));
        let q = conserved_quantities(&Field::Particles(a.clone()));
        assert!(q.center.norm() < 1e-14);
        let h2 = std::f64::consts::PI / 1024.0;
        let peak = a.weights().iter().copied().fold(0.0, f64::max) / h2;
        assert!((peak - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_disk_contours() {
        let mut c = SimConfig::new(
            0.5,
            1.0,
            InitialCondition::TwoDisks {
                radius_a: 1.0,
                radius_b: 0.5,
                separation: 3.0,
                theta0: 1.0,
            },
        );
        c.representation = Representation::Contour;
        let patches = contour_field(&c).unwrap();
        assert_eq!(patches.len(), 2);
        assert_eq!(patches[0].len() + patches[1].len(), 512);
        c.initial_condition = InitialCondition::TwoDisks {
            radius_a: 1.0,
            radius_b: 1.0,
            separation: 1.5,
            theta0: 1.0,
        };
        assert!(matches!(contour_field(&c), Err(Error::InvalidGeometry(_))));
    }
}
