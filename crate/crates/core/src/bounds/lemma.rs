//! Interpolation inequality for Riesz-type integrals,
//! `∫ h(y)/|x−y|^β dy ≤ C ‖h‖₁^{a} ‖h‖_p^{b}`,
//! with the constant produced by splitting the integral at the radius that
//! balances the near (Hölder) and far (L¹) pieces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{BoundReport, Verdict};
use crate::error::{Error, Result};
use crate::quadrature::{gl16, GaussRule};
use crate::vec2::Vec2;

pub const LEMMA_POINTS: usize = 100;
/// Relative slack granted to the grid quadrature of the left side.
pub const LEMMA_TOLERANCE: f64 = 1e-2;

/// Nonnegative piecewise-constant field on a uniform grid of square cells.
/// `values` is row-major with `nx` cells per row.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    origin: Vec2,
    h: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(origin: Vec2, h: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Precondition(format!("cell size must be positive, got {h}")));
        }
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(Error::Precondition(format!(
                "grid {nx}x{ny} does not match {} values",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Precondition(format!("cell {i} has invalid value {}", values[i])));
        }
        Ok(GridField {
            origin,
            h,
            nx,
            ny,
            values,
        })
    }

    /// Grid on `[-L, L]²` with `n × n` cells filled by `f(cell centre)`.
    pub fn sample(half_width: f64, n: usize, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let h = 2.0 * half_width / n as f64;
        let origin = Vec2::new(-half_width, -half_width);
        let values = (0..n * n)
            .map(|k| f(origin + Vec2::new((k % n) as f64 + 0.5, (k / n) as f64 + 0.5) * h))
            .collect();
        GridField::new(origin, h, n, n, values)
    }

    /// Seeded random test field on `[-1, 1]²`: a sum of a few bumps of random
    /// width and height, with about a third of the cells zeroed out.
    pub fn random(seed: u64, n: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps: Vec<(Vec2, f64, f64)> = (0..rng.gen_range(1..=5))
            .map(|_| {
                let c = Vec2::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
                (c, rng.gen_range(0.05..0.5), rng.gen_range(0.1..10.0))
            })
            .collect();
        let mask: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(0.3)).collect();
        let grid = GridField::sample(1.0, n, |x| {
            bumps
                .iter()
                .map(|(c, s, a)| a * (-(x - *c).norm_sq() / (2.0 * s * s)).exp())
                .sum()
        })?;
        let values = grid
            .values
            .iter()
            .zip(&mask)
            .map(|(v, off)| if *off { 0.0 } else { *v })
            .collect();
        GridField::new(grid.origin, grid.h, n, n, values)
    }

    pub fn cell_size(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lower-left and upper-right corners of the grid.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        (
            self.origin,
            self.origin + Vec2::new(self.nx as f64, self.ny as f64) * self.h,
        )
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.h * self.h
    }

    /// `‖h‖_p`, including `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == f64::INFINITY {
            return self.values.iter().copied().fold(0.0, f64::max);
        }
        let vmax = self.values.iter().copied().fold(0.0, f64::max);
        if vmax == 0.0 {
            return 0.0;
        }
        let s: f64 = self.values.iter().map(|v| (v / vmax).powf(p)).sum();
        vmax * (s * self.h * self.h).powf(1.0 / p)
    }

    /// `∫ h(y)/|x−y|^β dy`: exact per cell near `x`, Gauss–Legendre at
    /// intermediate range and the midpoint rule far away.
    pub fn riesz_integral(&self, x: Vec2, beta: f64) -> f64 {
        let h = self.h;
        let g3 = GaussRule::new(3);
        let mut sum = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.values[j * self.nx + i];
                if v == 0.0 {
                    continue;
                }
                let lo = self.origin + Vec2::new(i as f64, j as f64) * h;
                let rel = lo - x;
                let mid = rel + Vec2::new(0.5 * h, 0.5 * h);
                let d = mid.norm();
                let cell = if d > 20.0 * h {
                    h * h * d.powf(-beta)
                } else if d > 3.0 * h {
                    let mut s = 0.0;
                    for (ua, wa) in g3.nodes.iter().zip(&g3.weights) {
                        for (va, wb) in g3.nodes.iter().zip(&g3.weights) {
                            let z = rel + Vec2::new(ua * h, va * h);
                            s += wa * wb * z.norm().powf(-beta);
                        }
                    }
                    s * h * h
                } else {
                    rectangle_integral(rel.x1, rel.x1 + h, rel.x2, rel.x2 + h, beta)
                };
                sum += v * cell;
            }
        }
        sum
    }
}

/// `C(β, p) = 1 + (2π/(2 − βp'))^{1/p'}` with `1/p + 1/p' = 1`.
pub fn interpolation_constant(beta: f64, p: f64) -> Result<f64> {
    check_exponents(beta, p)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    if p == f64::INFINITY {
        return Ok(1.0 + two_pi / (2.0 - beta));
    }
    let pp = p / (p - 1.0);
    Ok(1.0 + (two_pi / (2.0 - beta * pp)).powf(1.0 / pp))
}

fn check_exponents(beta: f64, p: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::Precondition(format!("beta must lie in (0, 2), got {beta}")));
    }
    let p_min = 2.0 / (2.0 - beta);
    if !(p == f64::INFINITY || (p.is_finite() && p > p_min)) {
        return Err(Error::Precondition(format!(
            "p must exceed 2/(2-beta) = {p_min} (or be infinite), got {p} for beta = {beta}"
        )));
    }
    Ok(())
}

/// Exponents `(a, b)` on `‖h‖₁` and `‖h‖_p`.
fn norm_exponents(beta: f64, p: f64) -> (f64, f64) {
    let s = if p == f64::INFINITY { 0.0 } else { 2.0 / p };
    ((2.0 - beta - s) / (2.0 - s), beta / (2.0 - s))
}

/// Evaluates both sides at `LEMMA_POINTS` seeded random points in the grid
/// box enlarged by half its width on every side. Passes when the largest
/// ratio of left to right side is at most `1 + LEMMA_TOLERANCE`.
pub fn interpolation_lemma_check(field: &GridField, beta: f64, p: f64, seed: u64) -> Result<BoundReport> {
    let c = interpolation_constant(beta, p)?;
    let (a, b) = norm_exponents(beta, p);
    let l1 = field.l1_norm();
    let lp = field.lp_norm(p);
    let rhs = if l1 == 0.0 { 0.0 } else { c * l1.powf(a) * lp.powf(b) };

    let (lo, hi) = field.bounds();
    let pad = (hi - lo) * 0.5;
    let (lo, hi) = (lo - pad, hi + pad);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec2> = (0..LEMMA_POINTS)
        .map(|_| Vec2::new(rng.gen_range(lo.x1..hi.x1), rng.gen_range(lo.x2..hi.x2)))
        .collect();
    let lhs: Vec<f64> = points.par_iter().map(|x| field.riesz_integral(*x, beta)).collect();
    let lhs_max = lhs.iter().copied().fold(0.0, f64::max);

    let mut rep = BoundReport::new("interpolation_lemma");
    rep.set("beta", beta);
    rep.set("p", p);
    rep.set("C", c);
    rep.set("l1_norm", l1);
    rep.set("lp_norm", lp);
    rep.set("rhs", rhs);
    rep.set("lhs_max", lhs_max);
    rep.samples = points.len();
    rep.margin = if lhs_max == 0.0 { 0.0 } else { lhs_max / rhs };
    if l1 == 0.0 {
        rep.notes.push("zero field: both sides vanish".into());
    }
    rep.verdict = Verdict::from_bool(rep.margin <= 1.0 + LEMMA_TOLERANCE);
    Ok(rep)
}

/// `∫_{u1}^{u2} ∫_{v1}^{v2} (u² + v²)^{-β/2} dv du`, exact up to the
/// one-dimensional quadrature in `corner`.
fn rectangle_integral(u1: f64, u2: f64, v1: f64, v2: f64, beta: f64) -> f64 {
    let g = |u: f64, v: f64| u.signum() * v.signum() * corner(u.abs(), v.abs(), beta);
    g(u2, v2) - g(u1, v2) - g(u2, v1) + g(u1, v1)
}

/// Integral over `[0,a]×[0,b]`, split along the diagonal into two right
/// triangles with a vertex at the singular corner.
fn corner(a: f64, b: f64, beta: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    triangle(a, b, beta) + triangle(b, a, beta)
}

/// Triangle `0 <= v <= (b/a) u <= b`: in polar form the radial integral is
/// explicit and `sec φ = cosh w` turns the angular one into
/// `∫_0^{asinh(b/a)} cosh^{1−β} w dw`.
fn triangle(a: f64, b: f64, beta: f64) -> f64 {
    let w_end = (b / a).asinh();
    let panels = w_end.ceil().max(1.0) as usize;
    let width = w_end / panels as f64;
    let rule = gl16();
    let mut s = 0.0;
    for k in 0..panels {
        let w0 = k as f64 * width;
        s += rule.integrate(w0, w0 + width, |w| w.cosh().powf(1.0 - beta));
    }
    a.powf(2.0 - beta) / (2.0 - beta) * s
}
