//! Contour node maintenance: periodic cubic-spline resampling to uniform
//! spacing followed by an area-restoring normal shift.

use crate::error::{Error, Result};
use crate::field::{ContourPatch, MIN_CONTOUR_NODES};
use crate::geometry;
use crate::vec2::Vec2;

/// Node count is kept while the mean spacing stays inside this band
/// (relative to the target spacing).
const KEEP_BAND: (f64, f64) = (0.8, 1.25);

/// Periodic interpolating cubic spline in one coordinate.
struct PeriodicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    period: f64,
}

impl PeriodicSpline {
    fn new(knots: &[f64], values: &[f64], period: f64) -> Self {
        let n = knots.len();
        let h: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { knots[i + 1] - knots[i] } else { period - knots[i] + knots[0] })
            .collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            sub[i] = h[im];
            diag[i] = 2.0 * (h[im] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * ((values[ip] - values[i]) / h[i] - (values[i] - values[im]) / h[im]);
        }
        let second = solve_cyclic(&sub, &diag, &sup, &rhs);
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
            period,
        }
    }

    /// Value at parameter `t` lying in interval `i` (`knots[i] <= t`).
    fn eval_in(&self, i: usize, t: f64) -> f64 {
        let n = self.knots.len();
        let j = (i + 1) % n;
        let t0 = self.knots[i];
        let t1 = if j == 0 { self.period + self.knots[0] } else { self.knots[j] };
        let h = t1 - t0;
        let a = t1 - t;
        let b = t - t0;
        let (m0, m1) = (self.second[i], self.second[j]);
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (self.values[i] / h - m0 * h / 6.0) * a
            + (self.values[j] / h - m1 * h / 6.0) * b
    }
}

/// Cyclic tridiagonal solve (Sherman–Morrison around the Thomas algorithm).
/// Row `i` reads `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`
/// with indices taken modulo `n`.
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let alpha = sup[n - 1]; // bottom-left corner
    let beta = sub[0]; // top-right corner
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let x = thomas(sub, &b, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(sub, &b, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn resample(nodes: &[Vec2], count: usize) -> Vec<Vec2> {
    let n = nodes.len();
    let mut knots = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        knots.push(acc);
        acc += (nodes[(i + 1) % n] - nodes[i]).norm();
    }
    let period = acc;
    let xs: Vec<f64> = nodes.iter().map(|p| p.x1).collect();
    let ys: Vec<f64> = nodes.iter().map(|p| p.x2).collect();
    let sx = PeriodicSpline::new(&knots, &xs, period);
    let sy = PeriodicSpline::new(&knots, &ys, period);
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let t = period * k as f64 / count as f64;
        while seg + 1 < n && knots[seg + 1] <= t {
            seg += 1;
        }
        out.push(Vec2::new(sx.eval_in(seg, t), sy.eval_in(seg, t)));
    }
    out
}

/// Shifts every node along its outward normal so the polygon area equals `target`.
fn restore_area(nodes: &mut [Vec2], target: f64) {
    let n = nodes.len();
    for _ in 0..4 {
        let area = geometry::signed_area(nodes);
        let deficit = target - area;
        if deficit.abs() <= 1e-15 * target.abs() {
            break;
        }
        let mut normals = Vec::with_capacity(n);
        let mut gain = 0.0;
        for i in 0..n {
            let t = nodes[(i + 1) % n] - nodes[(i + n - 1) % n];
            let len = t.norm();
            normals.push(-t.perp() * (1.0 / len));
            gain += 0.5 * len;
        }
        let shift = deficit / gain;
        for (p, nrm) in nodes.iter_mut().zip(&normals) {
            *p += *nrm * shift;
        }
    }
}

fn node_count(current: usize, perimeter: f64, spacing: f64) -> usize {
    let mean = perimeter / current as f64;
    if mean >= KEEP_BAND.0 * spacing && mean <= KEEP_BAND.1 * spacing {
        current
    } else {
        ((perimeter / spacing).round() as usize).max(MIN_CONTOUR_NODES)
    }
}

/// Resamples the patch boundary to near-uniform spacing close to
/// `target_spacing`, preserving the enclosed area. Node 0 stays the
/// starting point of the parametrisation.
pub fn redistribute_nodes(patch: &ContourPatch) -> Result<ContourPatch> {
    let nodes = patch.nodes();
    if nodes.len() < 3 {
        return Err(Error::InvalidGeometry("too few nodes to redistribute".into()));
    }
    let area = geometry::signed_area(nodes);
    let perimeter = geometry::perimeter(nodes);
    let count = node_count(nodes.len(), perimeter, patch.target_spacing());
    let mut fresh = resample(nodes, count);
    restore_area(&mut fresh, area);
    let out = patch.with_nodes(fresh);
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spacings(nodes: &[Vec2]) -> Vec<f64> {
        let n = nodes.len();
        (0..n).map(|i| (nodes[(i + 1) % n] - nodes[i]).norm()).collect()
    }

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 7;
        let sub: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| 0.5 - 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + 0.2 * i as f64).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| sub[i] * x_true[(i + n - 1) % n] + diag[i] * x_true[i] + sup[i] * x_true[(i + 1) % n])
            .collect();
        let x = solve_cyclic(&sub, &diag, &sup, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_circle_is_unchanged() {
        let patch = ContourPatch::circle(Vec2::ZERO, 1.0, 512, 1.0).unwrap();
        let out = redistribute_nodes(&patch).unwrap();
        assert_eq!(out.len(), 512);
        for (a, b) in out.nodes().iter().zip(patch.nodes()) {
            assert!((*a - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn nonuniform_circle_becomes_uniform() {
        // Angles bunched towards φ = 0: spacing varies by about 3:1.
        let n = 256;
        let nodes: Vec<Vec2> = (0..n)
            .map(|k| {
                let s = 2.0 * PI * k as f64 / n as f64;
                let phi = s - 0.5 * s.sin();
                Vec2::from_polar(1.0, phi)
            })
            .collect();
        let sp = spacings(&nodes);
        let ratio = sp.iter().copied().fold(0.0, f64::max) / sp.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(ratio > 2.5);
        let patch = ContourPatch::new(nodes, 1.0, 2.0 * PI / n as f64).unwrap();
        let area0 = patch.area();
        let out = redistribute_nodes(&patch).unwrap();
        let sp = spacings(out.nodes());
        let mean = sp.iter().sum::<f64>() / sp.len() as f64;
        for s in &sp {
            assert!((s - mean).abs() / mean < 0.01);
        }
        assert!((out.area() - area0).abs() / area0 < 1e-6);
        // Area is restored to the bunched input polygon's, which sits a little
        // further inside the circle than a uniform one.
        for p in out.nodes() {
            assert!((p.norm() - 1.0).abs() < 5e-5, "{}", p.norm() - 1.0);
        }
    }

    #[test]
    fn stretched_ellipse_meets_spacing_bounds() {
        // 3:1 ellipse sampled uniformly in the parameter angle: arc spacing varies ~3:1.
        let n = 200;
        let nodes: Vec<Vec2> = (0..n)
            .map(|k| {
                let s = 2.0 * PI * k as f64 / n as f64;
                Vec2::new(3.0 * s.cos(), s.sin())
            })
            .collect();
        let target = 0.05;
        let patch = ContourPatch::new(nodes, 1.0, target).unwrap();
        let area0 = patch.area();
        let out = redistribute_nodes(&patch).unwrap();
        for s in spacings(out.nodes()) {
            assert!(s >= 0.5 * target && s <= 2.0 * target, "{s}");
        }
        assert!((out.area() - area0).abs() / area0 < 1e-6);
        assert!(out.len() >= MIN_CONTOUR_NODES);
    }

    #[test]
    fn crossing_output_is_rejected() {
        let mut nodes = geometry::regular_polygon(Vec2::ZERO, 1.0, 64, 0.0);
        nodes[10] = Vec2::new(-0.9, 0.1);
        let bad = ContourPatch::circle(Vec2::ZERO, 1.0, 64, 1.0).unwrap().with_nodes(nodes);
        assert!(matches!(redistribute_nodes(&bad), Err(Error::InvalidGeometry(_))));
    }
}
