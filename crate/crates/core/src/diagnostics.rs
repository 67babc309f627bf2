//! Conserved quantities, generalized moments, support radius and far-field
//! probes of a field snapshot.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ContourPatch, Field};
use crate::geometry;
use crate::kernel::{velocity_contours, velocity_particles, KernelParams};
use crate::quadrature::gl8;
use crate::vec2::Vec2;

pub const DEFAULT_N_MAX: usize = 6;

/// Per-snapshot summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub max_theta: f64,
    pub center: Vec2,
    pub inertia: f64,
    pub support_radius: f64,
    /// `moments[n - 1]` holds `m_{n,α}`.
    pub moments: Vec<f64>,
}

impl DiagnosticsRecord {
    pub fn moment(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.moments.get(i)).copied()
    }

    pub fn n_max(&self) -> usize {
        self.moments.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conserved {
    pub mass: f64,
    pub max_theta: f64,
    pub center: Vec2,
    pub inertia: f64,
}

pub fn conserved_quantities(field: &Field) -> Conserved {
    match field {
        Field::Particles(p) => {
            let mut mass = 0.0;
            let mut first = Vec2::ZERO;
            let mut inertia = 0.0;
            for (&x, &w) in p.positions().iter().zip(p.weights()) {
                mass += w;
                first += x * w;
                inertia += w * x.norm_sq();
            }
            Conserved {
                mass,
                max_theta: p.max_theta_density(),
                center: first * (1.0 / mass),
                inertia,
            }
        }
        Field::Contours(cs) => {
            let mut mass = 0.0;
            let mut first = Vec2::ZERO;
            let mut inertia = 0.0;
            let mut max_theta: f64 = 0.0;
            for c in cs {
                let th = c.theta0();
                mass += th * geometry::signed_area(c.nodes());
                first += geometry::first_moment(c.nodes()) * th;
                inertia += th * geometry::polar_moment(c.nodes());
                max_theta = max_theta.max(th);
            }
            Conserved {
                mass,
                max_theta,
                center: first * (1.0 / mass),
                inertia,
            }
        }
    }
}

/// Radius of the smallest origin-centred ball containing the support.
/// For particles this is `max |x_i| + eps`.
pub fn support_radius(field: &Field) -> f64 {
    match field {
        Field::Particles(p) => p.positions().iter().map(|x| x.norm()).fold(0.0, f64::max) + p.eps(),
        Field::Contours(cs) => cs
            .iter()
            .flat_map(|c| c.nodes().iter())
            .map(|x| x.norm())
            .fold(0.0, f64::max),
    }
}

fn moment_exponent(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("moment order must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain {
            what: "moment alpha",
            value: alpha,
            domain: "[0, 1]",
        });
    }
    Ok((4.0 + alpha) * n as f64)
}

// ∫_Ω |x|^q dx = 1/(q+2) ∮ |x|^q (x·ν) ds; x·ν is constant on each edge.
fn contour_power_integral(c: &ContourPatch, q: f64, scale: f64) -> f64 {
    let nodes = c.nodes();
    let n = nodes.len();
    let rule = gl8();
    let inv = 1.0 / scale;
    let mut acc = 0.0;
    for i in 0..n {
        let a = nodes[i] * inv;
        let b = nodes[(i + 1) % n] * inv;
        let d = b - a;
        let cr = a.cross(b);
        if cr == 0.0 {
            continue;
        }
        acc += cr * rule.integrate(0.0, 1.0, |t| (a + d * t).norm_sq().powf(0.5 * q));
    }
    c.theta0() * acc / (q + 2.0)
}

fn power_sum(field: &Field, q: f64, scale: f64) -> f64 {
    match field {
        Field::Particles(p) => {
            let inv2 = 1.0 / (scale * scale);
            p.positions()
                .iter()
                .zip(p.weights())
                .map(|(x, w)| w * (x.norm_sq() * inv2).powf(0.5 * q))
                .sum()
        }
        Field::Contours(cs) => cs.iter().map(|c| contour_power_integral(c, q, scale)).sum(),
    }
}

/// Natural log of `m_{n,α} = ∫ |x|^{(4+α)n} θ dx`, evaluated with the
/// coordinates rescaled by the largest radius so it never overflows.
pub fn log_moment(field: &Field, n: usize, alpha: f64) -> Result<f64> {
    let q = moment_exponent(n, alpha)?;
    let scale = field.positions().iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let extra = if field.is_particles() { 0.0 } else { 2.0 };
    let s = power_sum(field, q, scale);
    Ok((q + extra) * scale.ln() + s.ln())
}

/// `m_{n,α}` for `n >= 1`. Falls back to the rescaled (log-domain) form on
/// overflow and fails only if the value exceeds the floating-point range.
pub fn moment(field: &Field, n: usize, alpha: f64) -> Result<f64> {
    let q = moment_exponent(n, alpha)?;
    let direct = power_sum(field, q, 1.0);
    if direct.is_finite() {
        return Ok(direct);
    }
    let lm = log_moment(field, n, alpha)?;
    let v = lm.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Range(format!("m_{{{n},{alpha}}} = exp({lm}) exceeds f64::MAX")))
    }
}

/// θ-mass strictly outside the ball `|x| <= r`.
pub fn tail_mass(field: &Field, r: f64) -> f64 {
    match field {
        Field::Particles(p) => p
            .positions()
            .iter()
            .zip(p.weights())
            .filter(|(x, _)| x.norm() > r)
            .map(|(_, w)| *w)
            .sum(),
        Field::Contours(cs) => cs
            .iter()
            .map(|c| {
                let rmax = c.nodes().iter().map(|x| x.norm()).fold(0.0, f64::max);
                if r >= rmax {
                    return 0.0;
                }
                let area = geometry::signed_area(c.nodes());
                let inside = geometry::disk_intersection_area(c.nodes(), r);
                c.theta0() * (area - inside).max(0.0)
            })
            .sum(),
    }
}

/// Copy of the field translated so that its centre of mass is the origin.
pub fn recentered(field: &Field) -> Field {
    let c = conserved_quantities(field).center;
    field.translated(-c)
}

/// Velocity of the field at arbitrary points.
pub fn velocity_at(field: &Field, targets: &[Vec2], params: &KernelParams) -> Result<Vec<Vec2>> {
    match field {
        Field::Particles(p) => Ok(velocity_particles(targets, p, params)),
        Field::Contours(cs) => velocity_contours(targets, cs, params),
    }
}

/// One probe circle: its radius, the largest `|x̂·u|` and the largest `|u|`
/// over the probe points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSample {
    pub r: f64,
    pub max_radial: f64,
    pub max_speed: f64,
}

/// Far-field radial velocity of the recentered field on circles `|x| = r`.
pub fn radial_velocity_probe(
    field: &Field,
    params: &KernelParams,
    radii: &[f64],
    n_angles: usize,
) -> Result<Vec<ProbeSample>> {
    if n_angles < 32 {
        return Err(Error::Precondition(format!("need at least 32 probe angles, got {n_angles}")));
    }
    let centered = recentered(field);
    let r_supp = support_radius(&centered);
    if let Some(r) = radii.iter().find(|&&r| !(r > r_supp)) {
        return Err(Error::Precondition(format!(
            "probe radius {r} is inside the support radius {r_supp}"
        )));
    }
    radii
        .par_iter()
        .map(|&r| {
            let pts: Vec<Vec2> = (0..n_angles)
                .map(|k| Vec2::from_polar(r, 2.0 * PI * k as f64 / n_angles as f64))
                .collect();
            let u = velocity_at(&centered, &pts, params)?;
            let mut max_radial: f64 = 0.0;
            let mut max_speed: f64 = 0.0;
            for (x, v) in pts.iter().zip(&u) {
                max_radial = max_radial.max((x.dot(*v) / r).abs());
                max_speed = max_speed.max(v.norm());
            }
            Ok(ProbeSample {
                r,
                max_radial,
                max_speed,
            })
        })
        .collect()
}

/// Full diagnostics record for a snapshot.
pub fn record(field: &Field, t: f64, alpha: f64, n_max: usize) -> Result<DiagnosticsRecord> {
    let c = conserved_quantities(field);
    let moments = (1..=n_max).map(|n| moment(field, n, alpha)).collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticsRecord {
        t,
        mass: c.mass,
        max_theta: c.max_theta,
        center: c.center,
        inertia: c.inertia,
        support_radius: support_radius(field),
        moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ParticleField;

    fn particles(pos: &[(f64, f64)], w: &[f64], eps: f64) -> Field {
        Field::Particles(
            ParticleField::new(pos.iter().map(|&(a, b)| Vec2::new(a, b)).collect(), w.to_vec(), eps, 1.0).unwrap(),
        )
    }

    fn disk(center: Vec2, r: f64, n: usize) -> Field {
        Field::Contours(vec![ContourPatch::circle(center, r, n, 1.0).unwrap()])
    }

    #[test]
    fn single_particle_quantities() {
        let f = particles(&[(1.0, 0.0)], &[2.0], 0.1);
        let c = conserved_quantities(&f);
        assert_eq!(c.mass, 2.0);
        assert_eq!(c.center, Vec2::new(1.0, 0.0));
        assert_eq!(c.inertia, 2.0);
    }

    #[test]
    fn symmetric_pair_quantities() {
        let f = particles(&[(1.0, 0.0), (-1.0, 0.0)], &[1.0, 1.0], 0.1);
        let c = conserved_quantities(&f);
        assert_eq!(c.center, Vec2::ZERO);
        assert_eq!(c.inertia, 2.0);
    }

    #[test]
    fn unit_disk_contour_quantities() {
        let n = 8192;
        let f = disk(Vec2::ZERO, 1.0, n);
        let c = conserved_quantities(&f);
        // Inscribed polygon: relative deficit ~ (2π/n)²/6.
        let tol = 2.0 * (2.0 * PI / n as f64).powi(2);
        assert!((c.mass - PI).abs() / PI < tol);
        assert!(c.center.norm() < 1e-14);
        assert!((c.inertia - PI / 2.0).abs() / (PI / 2.0) < 2.0 * tol);
    }

    #[test]
    fn support_radius_cases() {
        let f = particles(&[(3.0, 4.0)], &[1.0], 0.1);
        assert!((support_radius(&f) - 5.1).abs() < 1e-14);
        assert!((support_radius(&disk(Vec2::ZERO, 1.0, 256)) - 1.0).abs() < 1e-14);
        let shifted = disk(Vec2::new(2.0, 0.0), 1.0, 256);
        assert!((support_radius(&shifted) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn particle_moment_values() {
        let f = particles(&[(2.0, 0.0)], &[1.0], 0.1);
        let m = moment(&f, 1, 0.5).unwrap();
        assert!((m - 22.627_416_997_969_52).abs() < 1e-12);
        let origin = particles(&[(0.0, 0.0)], &[1.0], 0.1);
        for n in 1..=6 {
            assert_eq!(moment(&origin, n, 0.5).unwrap(), 0.0);
        }
        assert!(moment(&f, 0, 0.5).is_err());
    }

    #[test]
    fn disk_moment_alpha_zero() {
        let n = 8192;
        let f = disk(Vec2::ZERO, 1.0, n);
        let m = moment(&f, 1, 0.0).unwrap();
        let want = 2.0 * PI / 6.0;
        assert!((m - want).abs() / want < 1e-4, "{m}");
    }

    #[test]
    fn contour_moment_matches_polar_oracle() {
        // Off-centre disk, q = (4 + α) n; oracle: polar quadrature about the origin
        // on the exact polygon via ray casting.
        let poly = geometry::regular_polygon(Vec2::new(0.7, -0.4), 0.9, 1024, 0.3);
        let f = Field::Contours(vec![ContourPatch::new(poly.clone(), 1.5, 0.01).unwrap()]);
        for (n, alpha) in [(1usize, 0.5), (3, 0.2), (6, 0.9)] {
            let q = (4.0 + alpha) * n as f64;
            let got = moment(&f, n, alpha).unwrap();
            let oracle = 1.5 * polar_power_oracle(&poly, q);
            assert!((got - oracle).abs() / oracle < 1e-6, "n={n} {got} vs {oracle}");
        }
    }

    // ∫_Ω |x|^q dx by rays from the origin: ∫ dφ Σ ±ρ^{q+2}/(q+2).
    fn polar_power_oracle(poly: &[Vec2], q: f64) -> f64 {
        let m = 200_000;
        let mut acc = 0.0;
        for k in 0..m {
            let phi = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            let dir = Vec2::from_polar(1.0, phi);
            let mut hits = Vec::new();
            for i in 0..poly.len() {
                let a = poly[i];
                let b = poly[(i + 1) % poly.len()];
                let e = b - a;
                let den = dir.cross(e);
                if den == 0.0 {
                    continue;
                }
                let t = a.cross(e) / den;
                let s = a.cross(dir) / den;
                if t > 0.0 && (0.0..1.0).contains(&s) {
                    hits.push(t);
                }
            }
            hits.sort_by(f64::total_cmp);
            let mut sign = if hits.len() % 2 == 1 { -1.0 } else { 1.0 };
            for h in hits {
                acc += -sign * h.powf(q + 2.0) / (q + 2.0);
                sign = -sign;
            }
        }
        acc * 2.0 * PI / m as f64
    }

    #[test]
    fn moment_log_domain_fallback() {
        // q = 30 at n = 6, α = 1.
        let f = particles(&[(1e6, 0.0), (0.5, 0.0)], &[1.0, 1.0], 0.1);
        let lm = log_moment(&f, 6, 1.0).unwrap();
        assert!((lm - 30.0 * 1e6f64.ln()).abs() < 1e-9);
        // 1e20^30 = 1e600 overflows in both forms.
        let f = particles(&[(1e20, 0.0)], &[1.0], 0.1);
        assert!(matches!(moment(&f, 6, 1.0), Err(Error::Range(_))));
        // Direct power overflows (1e330) but the weight brings it back in range.
        let f = particles(&[(1e11, 0.0)], &[1e-100], 0.1);
        let m = moment(&f, 6, 1.0).unwrap();
        assert!((m.log10() - 230.0).abs() < 1e-9);
    }

    #[test]
    fn tail_mass_cases() {
        let f = disk(Vec2::ZERO, 1.0, 4096);
        let total = conserved_quantities(&f).mass;
        assert!((tail_mass(&f, 0.0) - total).abs() < 1e-12);
        assert_eq!(tail_mass(&f, 1.5), 0.0);
        let half = tail_mass(&f, 1.0 / 2f64.sqrt());
        assert!((half - (total - PI / 2.0)).abs() < 1e-12);
        assert!((half - PI / 2.0).abs() < 1e-5);
        let p = particles(&[(1.0, 0.0), (2.0, 0.0)], &[1.0, 3.0], 0.1);
        assert_eq!(tail_mass(&p, 0.0), 4.0);
        assert_eq!(tail_mass(&p, 1.5), 3.0);
        assert_eq!(tail_mass(&p, 2.2), 0.0);
    }

    #[test]
    fn probe_symmetric_ring_has_no_radial_velocity() {
        let params = KernelParams::new(0.5).unwrap();
        // An m-fold ring only drives radial flow through harmonics of order m,
        // which decay like r^{-(1+α+m)}.
        let pts: Vec<(f64, f64)> = (0..64)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 64.0;
                (a.cos(), a.sin())
            })
            .collect();
        let f = particles(&pts, &[1.0; 64], 0.05);
        let samples = radial_velocity_probe(&f, &params, &[4.0, 8.0], 64).unwrap();
        for s in samples {
            assert!(s.max_radial < 1e-12 * s.max_speed, "{s:?}");
            assert!(s.max_speed > 0.0);
        }
        assert!(radial_velocity_probe(&f, &params, &[0.5], 64).is_err());
        assert!(radial_velocity_probe(&f, &params, &[4.0], 8).is_err());
    }

    #[test]
    fn probe_recentering_steepens_decay() {
        // A pair with its centre of mass off the origin: after recentering the
        // leading (dipole) term vanishes and u_r decays at least like r^{-(2+α)}.
        let alpha = 0.5;
        let params = KernelParams::new(alpha).unwrap();
        let f = particles(&[(3.0, 1.0), (4.0, 1.0)], &[1.0, 1.0], 0.01);
        let radii = [16.0, 32.0, 64.0, 128.0];
        let s = radial_velocity_probe(&f, &params, &radii, 64).unwrap();
        let slope = (s[3].max_radial / s[0].max_radial).ln() / (radii[3] / radii[0]).ln();
        assert!(slope <= -(2.0 + alpha), "slope {slope}");
    }
}
