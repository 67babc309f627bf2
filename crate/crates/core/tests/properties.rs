use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use alphapatch::diagnostics::{moment, record, support_radius, tail_mass, velocity_at};
use alphapatch::dynamics::{evolve, initial_field, step_rk4};
use alphapatch::kernel::{kernel_eval, velocity_contour};
use alphapatch::{ContourPatch, Field, InitialCondition, KernelParams, ParticleField, SimConfig, Vec2};

fn blob_field(n: usize, seed: u64) -> Field {
    let mut c = SimConfig::new(
        0.6,
        0.0,
        InitialCondition::RandomBlobs {
            radius: 1.0,
            n_blobs: 3,
            sigma_min: 0.15,
            sigma_max: 0.4,
            theta0: 1.0,
        },
    );
    c.n_particles = n;
    c.seed = seed;
    initial_field(&c).unwrap()
}

#[test]
fn particle_velocity_divergence_vanishes_at_second_order() {
    let f = blob_field(300, 4);
    let params = KernelParams::new(0.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let div = |x: Vec2, h: f64| {
        let e1 = Vec2::new(h, 0.0);
        let e2 = Vec2::new(0.0, h);
        let u = velocity_at(&f, &[x + e1, x - e1, x + e2, x - e2], &params).unwrap();
        (u[0].x1 - u[1].x1 + u[2].x2 - u[3].x2) / (2.0 * h)
    };
    for _ in 0..10 {
        let x = Vec2::from_polar(rng.gen_range(1.6..3.0), rng.gen_range(0.0..2.0 * PI));
        let d1 = div(x, 0.04).abs();
        let d2 = div(x, 0.02).abs();
        let d3 = div(x, 0.01).abs();
        assert!(d3 < d2 && d2 < d1, "{d1} {d2} {d3}");
        let order = (d2 / d3).log2();
        assert!((1.7..2.3).contains(&order), "order {order}");
    }
}

/// Dense area quadrature of `∫_D K(x − y) dy` over an ellipse, in elliptic
/// polar coordinates (Gauss–Legendre in r, trapezoid in angle).
fn ellipse_area_velocity(x: Vec2, a: f64, b: f64, params: &KernelParams) -> Vec2 {
    let (nr, nphi) = (96, 1024);
    let (nodes, weights) = gauss_legendre(nr);
    let mut u = Vec2::ZERO;
    for (r, wr) in nodes.iter().zip(&weights) {
        for k in 0..nphi {
            let phi = 2.0 * PI * k as f64 / nphi as f64;
            let y = Vec2::new(a * r * phi.cos(), b * r * phi.sin());
            u += kernel_eval(x - y, params).unwrap() * (wr * a * b * r * 2.0 * PI / nphi as f64);
        }
    }
    u
}

/// Gauss–Legendre on [0, 1] by Golub–Welsch-free Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..60 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            x -= p1 / dp;
        }
        xs.push(0.5 * (1.0 + x));
        ws.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

#[test]
fn contour_velocity_matches_area_quadrature() {
    let (a, b) = (1.0, 0.6);
    let n = 1024;
    let nodes: Vec<Vec2> = (0..n)
        .map(|k| {
            let s = 2.0 * PI * k as f64 / n as f64;
            Vec2::new(a * s.cos(), b * s.sin())
        })
        .collect();
    let patch = ContourPatch::new(nodes, 1.0, 0.005).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for alpha in [0.3, 0.7] {
        let params = KernelParams::new(alpha).unwrap();
        for _ in 0..20 {
            let phi = rng.gen_range(0.0..2.0 * PI);
            let x = Vec2::new(a * phi.cos(), b * phi.sin()) * rng.gen_range(1.3..3.0);
            let got = velocity_contour(x, &patch, &params).unwrap();
            let want = ellipse_area_velocity(x, a, b, &params);
            assert!((got - want).norm() < 1e-3 * want.norm(), "a={alpha} x={x:?}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn disk_boundary_velocity_closed_form() {
    // u at (1, 0) on the unit disk, α = 0.5:
    // c 2^{1-α} [B(1/2, (1-α)/2) - 2 B(1/2, (3-α)/2)], 30-digit reference.
    let exact = 0.823_129_890_089_358_6;
    let params = KernelParams::new(0.5).unwrap();
    let patch = ContourPatch::circle(Vec2::ZERO, 1.0, 1024, 1.0).unwrap();
    let u = velocity_contour(patch.nodes()[0], &patch, &params).unwrap();
    assert!((u.x2 - exact).abs() < 1e-4 * exact, "{}", u.x2);
    assert!(u.x1.abs() < 1e-10, "{}", u.x1);
    // Far away the patch looks like a point of mass π.
    let x = Vec2::new(0.0, 20.0);
    let u = velocity_contour(x, &patch, &params).unwrap();
    let point = kernel_eval(x, &params).unwrap() * patch.area();
    assert!((u - point).norm() < 1e-2 * point.norm());
}

#[test]
fn rk4_order_on_pair() {
    let alpha = 0.4;
    let params = KernelParams::new(alpha).unwrap();
    let x0 = vec![Vec2::new(-0.5, 0.0), Vec2::new(0.5, 0.0)];
    let period = PI / params.kernel_prefactor();
    let err = |steps: usize| {
        let mut f = Field::Particles(ParticleField::new(x0.clone(), vec![1.0, 1.0], 1e-9, 1.0).unwrap());
        for _ in 0..steps {
            f = step_rk4(&f, period / steps as f64, &params).unwrap();
        }
        (f.positions()[0] - x0[0]).norm()
    };
    let order = (err(100) / err(200)).log2();
    assert!((3.7..=4.3).contains(&order), "{order}");
}

#[test]
fn every_snapshot_respects_trivial_moment_envelope() {
    let mut c = SimConfig::new(
        0.3,
        2.0,
        InitialCondition::RandomBlobs {
            radius: 1.0,
            n_blobs: 5,
            sigma_min: 0.15,
            sigma_max: 0.4,
            theta0: 1.0,
        },
    );
    c.n_particles = 300;
    c.output_stride = 1;
    c.seed = 5;
    let traj = evolve(&c).unwrap();
    for s in &traj.snapshots {
        let r = &s.record;
        for (i, m) in r.moments.iter().enumerate() {
            let n = (i + 1) as f64;
            assert!(*m > 0.0);
            assert!(*m <= r.mass * r.support_radius.powf((4.0 + 0.3) * n));
        }
    }
}

fn arb_particles() -> impl Strategy<Value = Field> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.01..2.0f64), 1..40).prop_map(|ps| {
        let pos = ps.iter().map(|p| Vec2::new(p.0, p.1)).collect();
        let w = ps.iter().map(|p| p.2).collect();
        Field::Particles(ParticleField::new(pos, w, 0.01, 1.0).unwrap())
    })
}

/// Star-shaped polygon with a random radial profile.
fn arb_star() -> impl Strategy<Value = Field> {
    (prop::collection::vec(0.5..1.5f64, 24..64), -1.0..1.0f64, -1.0..1.0f64).prop_map(|(radii, cx, cy)| {
        let n = radii.len();
        let nodes = radii
            .iter()
            .enumerate()
            .map(|(k, r)| Vec2::new(cx, cy) + Vec2::from_polar(*r, 2.0 * PI * k as f64 / n as f64))
            .collect();
        Field::Contours(vec![ContourPatch::new(nodes, 1.0, 0.1).unwrap()])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_moment_matches_direct_sum(f in arb_particles(), alpha in 0.0..1.0f64) {
        let Field::Particles(p) = &f else { unreachable!() };
        let direct: f64 = p.positions().iter().zip(p.weights()).map(|(x, w)| w * x.norm().powf(4.0 + alpha)).sum();
        let m = moment(&f, 1, alpha).unwrap();
        prop_assert!((m - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn moments_below_support_envelope(f in prop_oneof![arb_particles(), arb_star()], alpha in 0.0..1.0f64) {
        let r = record(&f, 0.0, alpha, 6).unwrap();
        let rs = support_radius(&f);
        for (i, m) in r.moments.iter().enumerate() {
            let bound = r.mass * rs.powf((4.0 + alpha) * (i + 1) as f64);
            prop_assert!(*m <= bound * (1.0 + 1e-9), "n={} {} > {}", i + 1, m, bound);
        }
    }

    #[test]
    fn tail_mass_is_monotone(f in prop_oneof![arb_particles(), arb_star()], mut radii in prop::collection::vec(0.0..5.0f64, 2..10)) {
        radii.sort_by(f64::total_cmp);
        let tails: Vec<f64> = radii.iter().map(|r| tail_mass(&f, *r)).collect();
        for w in tails.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert_eq!(tail_mass(&f, support_radius(&f) + 1e-9), 0.0);
    }
}
