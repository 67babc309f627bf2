//! Closed-polygon geometry: exact area moments, simplicity tests and
//! intersection with origin-centred disks.

use std::f64::consts::PI;

use crate::vec2::Vec2;

fn edges(nodes: &[Vec2]) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
    let n = nodes.len();
    (0..n).map(move |i| (nodes[i], nodes[(i + 1) % n]))
}

/// Signed area (positive for counterclockwise orientation).
pub fn signed_area(nodes: &[Vec2]) -> f64 {
    // Trapezoid form, better conditioned than the plain cross-product sum
    // for coordinates far from the origin.
    0.5 * edges(nodes)
        .map(|(a, b)| (a.x1 + b.x1) * (b.x2 - a.x2))
        .sum::<f64>()
}

/// First moment `∫ x dx` over the polygon (signed with the orientation).
pub fn first_moment(nodes: &[Vec2]) -> Vec2 {
    let mut m = Vec2::ZERO;
    for (a, b) in edges(nodes) {
        let c = a.cross(b);
        m += (a + b) * c;
    }
    m * (1.0 / 6.0)
}

/// Polar second moment `∫ |x|² dx` over the polygon.
pub fn polar_moment(nodes: &[Vec2]) -> f64 {
    edges(nodes)
        .map(|(a, b)| {
            let c = a.cross(b);
            c * (a.norm_sq() + a.dot(b) + b.norm_sq())
        })
        .sum::<f64>()
        / 12.0
}

pub fn perimeter(nodes: &[Vec2]) -> f64 {
    edges(nodes).map(|(a, b)| (b - a).norm()).sum()
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x1 >= a.x1.min(b.x1) && p.x1 <= a.x1.max(b.x1) && p.x2 >= a.x2.min(b.x2) && p.x2 <= a.x2.max(b.x2)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Where two boundary segments cross: `(curve, edge)` on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub first: (usize, usize),
    pub second: (usize, usize),
}

/// Finds a crossing among the edges of a set of closed polygons, ignoring
/// the shared vertex of adjacent edges on the same curve.
pub fn find_crossing(curves: &[&[Vec2]]) -> Option<Crossing> {
    struct Seg {
        curve: usize,
        edge: usize,
        len: usize,
        a: Vec2,
        b: Vec2,
        lo: Vec2,
        hi: Vec2,
    }
    let mut segs = Vec::new();
    for (ci, nodes) in curves.iter().enumerate() {
        let n = nodes.len();
        for i in 0..n {
            let a = nodes[i];
            let b = nodes[(i + 1) % n];
            segs.push(Seg {
                curve: ci,
                edge: i,
                len: n,
                a,
                b,
                lo: Vec2::new(a.x1.min(b.x1), a.x2.min(b.x2)),
                hi: Vec2::new(a.x1.max(b.x1), a.x2.max(b.x2)),
            });
        }
    }
    // Sweep along x1 on bounding boxes.
    let mut order: Vec<usize> = (0..segs.len()).collect();
    order.sort_by(|&i, &j| segs[i].lo.x1.total_cmp(&segs[j].lo.x1));
    for (k, &i) in order.iter().enumerate() {
        let s = &segs[i];
        for &j in &order[k + 1..] {
            let t = &segs[j];
            if t.lo.x1 > s.hi.x1 {
                break;
            }
            if t.lo.x2 > s.hi.x2 || t.hi.x2 < s.lo.x2 {
                continue;
            }
            if s.curve == t.curve {
                let n = s.len;
                let adjacent = (s.edge + 1) % n == t.edge || (t.edge + 1) % n == s.edge;
                if adjacent || s.edge == t.edge {
                    continue;
                }
            }
            if segments_intersect(s.a, s.b, t.a, t.b) {
                return Some(Crossing {
                    first: (s.curve, s.edge),
                    second: (t.curve, t.edge),
                });
            }
        }
    }
    None
}

/// Signed area of `polygon ∩ {|x| ≤ r}`.
pub fn disk_intersection_area(nodes: &[Vec2], r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    edges(nodes).map(|(a, b)| triangle_disk_area(a, b, r)).sum()
}

// Signed area of triangle (0, a, b) clipped to the disk of radius r.
fn triangle_disk_area(a: Vec2, b: Vec2, r: f64) -> f64 {
    let d = b - a;
    let qa = d.norm_sq();
    if qa == 0.0 {
        return 0.0;
    }
    // |a + t d|² = r²  ->  qa t² + 2 (a·d) t + |a|² - r² = 0
    let qb = a.dot(d);
    let qc = a.norm_sq() - r * r;
    let disc = qb * qb - qa * qc;
    let mut cuts = vec![0.0];
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / qa, (-qb + sq) / qa] {
            if t > 0.0 && t < 1.0 {
                cuts.push(t);
            }
        }
    }
    cuts.push(1.0);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let p = a + d * w[0];
        let q = a + d * w[1];
        let mid = a + d * (0.5 * (w[0] + w[1]));
        if mid.norm_sq() <= r * r {
            area += 0.5 * p.cross(q);
        } else {
            let ang = p.cross(q).atan2(p.dot(q));
            area += 0.5 * r * r * ang;
        }
    }
    area
}

/// Even–odd point-in-polygon test.
pub fn contains(nodes: &[Vec2], p: Vec2) -> bool {
    let mut inside = false;
    for (a, b) in edges(nodes) {
        if (a.x2 > p.x2) != (b.x2 > p.x2) {
            let x = a.x1 + (p.x2 - a.x2) / (b.x2 - a.x2) * (b.x1 - a.x1);
            if p.x1 < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Regular `n`-gon inscribed in the circle of radius `r` about `center`,
/// counterclockwise, first node at angle `phase`.
pub fn regular_polygon(center: Vec2, r: f64, n: usize, phase: f64) -> Vec<Vec2> {
    (0..n)
        .map(|k| center + Vec2::from_polar(r, phase + 2.0 * PI * k as f64 / n as f64))
        .collect()
}
