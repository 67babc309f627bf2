//! Fractional Green function, its perpendicular-gradient kernel, and the
//! induced velocity of particle and contour discretizations.
//!
//! The Green function of `(-Δ)^{1-α/2}` in the plane is `G(r) = c(α) r^{-α}`
//! with the (positive) Riesz constant
//!
//! ```text
//! c(α) = Γ(α/2) / (π 2^{2-α} Γ((2-α)/2))
//! ```
//!
//! and the velocity kernel is `K(z) = ∇⊥G(z) = α c(α) z⊥ / |z|^{2+α}` with
//! `z⊥ = (-z₂, z₁)`. As `α → 0⁺`, `α c(α) → 1/(2π)` and `K` reduces to the
//! 2D Euler Biot–Savart kernel.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ContourPatch, ParticleField};
use crate::quadrature::{gl2, gl4, gl8};
use crate::vec2::Vec2;

// Lanczos approximation, g = 607/128, 15 terms (Godfrey).
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126_5e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_140_8e-5,
    3.689_918_265_953_162_5e-6,
];

/// Euler Gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "gamma",
            value: x,
            domain: "(0, inf)",
        });
    }
    Ok(gamma_pos(x))
}

fn gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        return PI / ((PI * x).sin() * gamma_pos(1.0 - x));
    }
    let z = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // t^(z+1/2) split in two halves so large arguments do not overflow early.
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * ((-t).exp() * half) * sum
}

/// Magnitude of the Riesz potential constant of `(-Δ)^{-(1-α/2)}` in the plane.
pub fn riesz_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain {
            what: "riesz_constant",
            value: alpha,
            domain: "(0, 2)",
        });
    }
    let num = gamma_pos(0.5 * alpha);
    let den = PI * 2f64.powf(2.0 - alpha) * gamma_pos(0.5 * (2.0 - alpha));
    Ok(num / den)
}

/// The exponent α together with the constants derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    alpha: f64,
    riesz_constant: f64,
    kernel_prefactor: f64,
}

impl KernelParams {
    /// `alpha` must lie in (0, 1]; `alpha == 1` (SQG) is accepted but only
    /// the open interval is validated.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain {
                what: "alpha",
                value: alpha,
                domain: "(0, 1]",
            });
        }
        let riesz_constant = riesz_constant(alpha)?;
        Ok(Self {
            alpha,
            riesz_constant,
            kernel_prefactor: alpha * riesz_constant,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn riesz_constant(&self) -> f64 {
        self.riesz_constant
    }

    pub fn kernel_prefactor(&self) -> f64 {
        self.kernel_prefactor
    }

    pub fn is_experimental(&self) -> bool {
        self.alpha >= 1.0
    }

    /// `G(r)` for `r > 0`.
    pub fn green(&self, r: f64) -> f64 {
        self.riesz_constant * r.powf(-self.alpha)
    }
}

/// `K(z) = prefactor · z⊥ / |z|^{2+α}`.
pub fn kernel_eval(z: Vec2, params: &KernelParams) -> Result<Vec2> {
    let r2 = z.norm_sq();
    if r2 == 0.0 {
        return Err(Error::Singularity);
    }
    let f = params.kernel_prefactor * r2.powf(-0.5 * (2.0 + params.alpha));
    Ok(z.perp() * f)
}

/// Blob-regularized kernel `prefactor · z⊥ / (|z|² + eps²)^{(2+α)/2}`.
#[inline]
pub fn kernel_eval_blob(z: Vec2, eps: f64, params: &KernelParams) -> Vec2 {
    let s = z.norm_sq() + eps * eps;
    z.perp() * (params.kernel_prefactor * s.powf(-0.5 * (2.0 + params.alpha)))
}

/// Velocity induced by a particle field at each target.
///
/// Each target accumulates source contributions in source order, so results
/// do not depend on how targets are split across threads.
pub fn velocity_particles(targets: &[Vec2], field: &ParticleField, params: &KernelParams) -> Vec<Vec2> {
    let eps2 = field.eps() * field.eps();
    let expo = -0.5 * (2.0 + params.alpha);
    let pre = params.kernel_prefactor;
    let positions = field.positions();
    let weights = field.weights();
    targets
        .par_iter()
        .with_min_len(16)
        .map(|&x| {
            let mut acc = Vec2::ZERO;
            for (&p, &w) in positions.iter().zip(weights) {
                let dz = x - p;
                let s = dz.norm_sq() + eps2;
                acc += dz.perp() * (w * s.powf(expo));
            }
            acc * pre
        })
        .collect()
}

/// Fixed number of row blocks in [`velocity_particles_self`]; independent of
/// the thread count so results are too.
const SELF_BLOCKS: usize = 32;

/// Velocity each particle of `field` induces on the others. Every pair is
/// evaluated once and applied to both ends (the kernel is odd), which halves
/// the work of [`velocity_particles`] with the sources as targets.
pub fn velocity_particles_self(field: &ParticleField, params: &KernelParams) -> Vec<Vec2> {
    let n = field.len();
    let eps2 = field.eps() * field.eps();
    let expo = -0.5 * (2.0 + params.alpha);
    let x = field.positions();
    let w = field.weights();
    // Row i carries n - 1 - i pairs; cut the rows into blocks of equal work.
    let total = n * n.saturating_sub(1) / 2;
    let mut cuts = vec![0];
    let mut acc = 0;
    for i in 0..n {
        acc += n - 1 - i;
        if acc * SELF_BLOCKS >= total * cuts.len() && cuts.len() < SELF_BLOCKS {
            cuts.push(i + 1);
        }
    }
    cuts.push(n);
    cuts.dedup();
    let partial: Vec<Vec<Vec2>> = cuts
        .par_windows(2)
        .map(|r| {
            let mut u = vec![Vec2::ZERO; n];
            for i in r[0]..r[1] {
                let xi = x[i];
                let mut ui = Vec2::ZERO;
                for j in i + 1..n {
                    let dz = xi - x[j];
                    let k = dz.perp() * (dz.norm_sq() + eps2).powf(expo);
                    ui += k * w[j];
                    u[j] -= k * w[i];
                }
                u[i] += ui;
            }
            u
        })
        .collect();
    let mut u = vec![Vec2::ZERO; n];
    for part in &partial {
        for (a, b) in u.iter_mut().zip(part) {
            *a += *b;
        }
    }
    for v in &mut u {
        *v = *v * params.kernel_prefactor;
    }
    u
}

/// Velocity at `x` induced by a uniform patch, as the boundary integral
/// `u(x) = θ₀ ∮ G(x − y) dy` over the counterclockwise boundary.
///
/// Points on the boundary (in particular the nodes themselves) are handled:
/// the `|x − y|^{-α}` singularity is integrated exactly on the segments that
/// contain `x`. Requires `α < 1`.
pub fn velocity_contour(x: Vec2, patch: &ContourPatch, params: &KernelParams) -> Result<Vec2> {
    check_contour_alpha(params)?;
    Ok(contour_velocity_unchecked(x, patch, params))
}

pub(crate) fn check_contour_alpha(params: &KernelParams) -> Result<()> {
    if params.alpha >= 1.0 {
        return Err(Error::Domain {
            what: "contour alpha",
            value: params.alpha,
            domain: "(0, 1)",
        });
    }
    Ok(())
}

pub(crate) fn contour_velocity_unchecked(x: Vec2, patch: &ContourPatch, params: &KernelParams) -> Vec2 {
    let nodes = patch.nodes();
    let n = nodes.len();
    let mut acc = Vec2::ZERO;
    for i in 0..n {
        let a = nodes[i];
        let b = nodes[(i + 1) % n];
        acc += segment_green_integral(x, a, b, params.alpha);
    }
    acc * (patch.theta0() * params.riesz_constant)
}

/// Velocity of many targets against a set of patches, parallel over targets.
pub fn velocity_contours(targets: &[Vec2], patches: &[ContourPatch], params: &KernelParams) -> Result<Vec<Vec2>> {
    check_contour_alpha(params)?;
    Ok(targets
        .par_iter()
        .map(|&x| {
            let mut acc = Vec2::ZERO;
            for p in patches {
                acc += contour_velocity_unchecked(x, p, params);
            }
            acc
        })
        .collect())
}

/// `∫_a^b |x − y|^{-α} dy` along the straight segment from `a` to `b`
/// (a vector, since `dy` is).
pub(crate) fn segment_green_integral(x: Vec2, a: Vec2, b: Vec2, alpha: f64) -> Vec2 {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return Vec2::ZERO;
    }
    let tau = d * (1.0 / len);
    let r = x - a;
    let foot = r.dot(tau);
    let h = r.cross(tau).abs();
    let dist = if foot < 0.0 {
        r.norm()
    } else if foot > len {
        (x - b).norm()
    } else {
        h
    };
    let half = -0.5 * alpha;
    let value = if dist > 8.0 * len {
        gl2().integrate(0.0, len, |s| ((s - foot).powi(2) + h * h).powf(half))
    } else if dist > 2.0 * len {
        gl4().integrate(0.0, len, |s| ((s - foot).powi(2) + h * h).powf(half))
    } else {
        near_line_integral(-foot, len - foot, h, alpha)
    };
    tau * value
}

/// `∫_{s1}^{s2} (σ² + h²)^{-α/2} dσ`, accurate for small or zero `h`.
fn near_line_integral(s1: f64, s2: f64, h: f64, alpha: f64) -> f64 {
    let scale = s1.abs().max(s2.abs());
    if h <= 1e-14 * scale {
        let prim = |s: f64| s.signum() * s.abs().powf(1.0 - alpha) / (1.0 - alpha);
        return prim(s2) - prim(s1);
    }
    antiderivative(s2, h, alpha) - antiderivative(s1, h, alpha)
}

// ∫_0^σ (t² + h²)^{-α/2} dt = h^{1-α} ∫_0^{asinh(σ/h)} cosh^{1-α}(w) dw.
fn antiderivative(sigma: f64, h: f64, alpha: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let wmax = (sigma.abs() / h).asinh();
    let panels = wmax.ceil().max(1.0) as usize;
    let width = wmax / panels as f64;
    let expo = 1.0 - alpha;
    let rule = gl8();
    let mut acc = 0.0;
    for k in 0..panels {
        let w0 = k as f64 * width;
        acc += rule.integrate(w0, w0 + width, |w| w.cosh().powf(expo));
    }
    sigma.signum() * h.powf(expo) * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // 40-digit reference values.
    const GAMMA_REF: [(f64, f64); 16] = [
        (0.001, 999.423_772_484_595_4),
        (0.1, 9.513_507_698_668_73),
        (0.25, 3.625_609_908_221_908),
        (0.5, 1.772_453_850_905_516),
        (0.75, 1.225_416_702_465_177_6),
        (1.0, 1.0),
        (1.5, 0.886_226_925_452_758),
        (2.5, 1.329_340_388_179_137),
        (3.7, 4.170_651_783_796_604),
        (5.0, 24.0),
        (7.25, 1_155.381_013_919_989_7),
        (10.0, 362_880.0),
        (13.3, 1_025_640_025.169_631),
        (17.5, 85_634_974_475_162.06),
        (22.0, 5.109_094_217_170_944e19),
        (29.9, 6.304_174_488_373_721e30),
    ];

    #[test]
    fn gamma_matches_reference() {
        for (x, want) in GAMMA_REF {
            let got = gamma_fn(x).unwrap();
            assert!(rel(got, want) < 1e-12, "Γ({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn gamma_closed_forms() {
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(2.5).unwrap(), 1.5 * 0.5 * PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(1.0).unwrap(), 1.0) < 1e-14);
    }

    #[test]
    fn gamma_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(0.01..29.0);
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain { .. })));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain { .. })));
        assert!(gamma_fn(f64::NAN).is_err());
    }

    #[test]
    fn riesz_constant_values() {
        assert!(rel(riesz_constant(1.0).unwrap(), 1.0 / (2.0 * PI)) < 1e-12);
        assert!(rel(riesz_constant(0.5).unwrap(), 0.332_967_935_501_700_3) < 1e-10);
        let a = 1e-6;
        assert!(rel(a * riesz_constant(a).unwrap(), 1.0 / (2.0 * PI)) < 1e-4);
        assert!(riesz_constant(0.0).is_err());
        assert!(riesz_constant(2.0).is_err());
    }

    #[test]
    fn params_domain() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(1.5).is_err());
        assert!(KernelParams::new(1.0).unwrap().is_experimental());
        for a in [1e-6, 0.1, 0.5, 0.9, 1.0] {
            assert!(KernelParams::new(a).unwrap().riesz_constant() > 0.0);
        }
    }

    #[test]
    fn kernel_closed_form_value() {
        let p = KernelParams::new(0.5).unwrap();
        let k = kernel_eval(Vec2::new(1.0, 0.0), &p).unwrap();
        assert_eq!(k.x1, 0.0);
        assert!(rel(k.x2, 0.5 * 0.332_967_935_501_700_3) < 1e-12);
        assert!(matches!(kernel_eval(Vec2::ZERO, &p), Err(Error::Singularity)));
    }

    #[test]
    fn kernel_invariants_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &alpha in &[0.2, 0.5, 0.8] {
            let p = KernelParams::new(alpha).unwrap();
            for _ in 0..10_000 {
                let z = Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                let k = kernel_eval(z, &p).unwrap();
                assert_eq!(kernel_eval(-z, &p).unwrap(), -k);
                assert!(z.dot(k).abs() <= 1e-15 * z.norm() * k.norm());
                let lambda: f64 = rng.gen_range(0.1..10.0);
                let scaled = kernel_eval(z * lambda, &p).unwrap().norm();
                let want = lambda.powf(-(1.0 + alpha)) * k.norm();
                assert!(rel(scaled, want) < 1e-12);
                assert!(rel(k.norm(), p.kernel_prefactor() / z.norm().powf(1.0 + alpha)) < 1e-12);
            }
        }
    }

    #[test]
    fn blob_kernel_limits() {
        let p = KernelParams::new(0.5).unwrap();
        assert_eq!(kernel_eval_blob(Vec2::ZERO, 0.1, &p), Vec2::ZERO);
        let eps = 0.01;
        let z = Vec2::new(0.6, 0.8) * (100.0 * eps);
        let k = kernel_eval(z, &p).unwrap();
        let kb = kernel_eval_blob(z, eps, &p);
        assert!((kb - k).norm() / k.norm() < 1e-3);
        let z = Vec2::new(0.01, -0.03);
        assert_eq!(kernel_eval_blob(-z, eps, &p), -kernel_eval_blob(z, eps, &p));
    }

    #[test]
    fn symmetric_self_velocity_matches_direct_sum() {
        let p = KernelParams::new(0.7).unwrap();
        for n in [1, 2, 3, 40, 257] {
            let pos: Vec<Vec2> = (0..n)
                .map(|k| {
                    let k = k as f64;
                    Vec2::new((1.3 * k).sin() * (1.0 + 0.01 * k), (0.7 * k).cos())
                })
                .collect();
            let w: Vec<f64> = (0..n).map(|k| 0.5 + (k % 7) as f64 * 0.1).collect();
            let f = ParticleField::new(pos, w, 0.05, 1.0).unwrap();
            let a = velocity_particles(f.positions(), &f, &p);
            let b = velocity_particles_self(&f, &p);
            let scale = a.iter().map(|v| v.norm()).fold(1e-300, f64::max);
            for (u, v) in a.iter().zip(&b) {
                assert!((*u - *v).norm() < 1e-13 * scale);
            }
        }
    }

    #[test]
    fn near_integral_against_fine_quadrature() {
        // Brute-force oracle: midpoint rule with a very fine grid.
        let alpha = 0.5;
        let x = Vec2::new(0.3, 0.02);
        let (a, b) = (Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0));
        let got = segment_green_integral(x, a, b, alpha).x1;
        let n = 2_000_000;
        let h = 1.0 / n as f64;
        let brute: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                ((s - 0.3f64).powi(2) + 0.0004).powf(-0.25) * h
            })
            .sum();
        assert!(rel(got, brute) < 1e-8, "{got} vs {brute}");
    }

    #[test]
    fn endpoint_integral_is_exact() {
        let alpha = 0.3;
        let a = Vec2::new(1.0, 1.0);
        let b = Vec2::new(1.0, 3.0);
        let v = segment_green_integral(a, a, b, alpha);
        let want = 2f64.powf(1.0 - alpha) / (1.0 - alpha);
        assert!(rel(v.x2, want) < 1e-14 && v.x1 == 0.0);
        let v = segment_green_integral(b, a, b, alpha);
        assert!(rel(v.x2, want) < 1e-14);
    }
}
