//! Gauss quadrature on triangles, plus exact integration of integrands with
//! axis-aligned kink lines (the cutoff weight is piecewise bilinear, so
//! clipping each triangle into kink-free convex pieces keeps polynomial
//! integrands exactly integrable).

use nalgebra::Point2;

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::mesh::triangle_area;

/// Symmetric Gauss rule on the reference triangle, barycentric points,
/// weights normalized to sum to one.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub degree: u32,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn orbit3(a: f64, w: f64, pts: &mut Vec<[f64; 3]>, ws: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    pts.push([b, a, a]);
    pts.push([a, b, a]);
    pts.push([a, a, b]);
    ws.extend_from_slice(&[w, w, w]);
}

fn orbit6(a: f64, b: f64, w: f64, pts: &mut Vec<[f64; 3]>, ws: &mut Vec<f64>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [b, c, a], [c, a, b], [a, c, b], [b, a, c], [c, b, a]] {
        pts.push(p);
        ws.push(w);
    }
}

/// Rule exact for polynomials up to `degree` on any triangle,
/// `degree` in 1..=6. All weights are positive.
pub fn triangle_gauss_rule(degree: u32) -> Result<QuadRule> {
    let mut pts = Vec::new();
    let mut ws = Vec::new();
    match degree {
        1 => {
            pts.push([1.0 / 3.0; 3]);
            ws.push(1.0);
        }
        2 => {
            orbit3(1.0 / 6.0, 1.0 / 3.0, &mut pts, &mut ws);
        }
        // the classic 4-point degree-3 rule has a negative centroid weight,
        // so degree 3 uses the positive 6-point degree-4 rule
        3 | 4 => {
            orbit3(0.445948490915965, 0.223381589678011, &mut pts, &mut ws);
            orbit3(0.091576213509771, 0.109951743655322, &mut pts, &mut ws);
        }
        5 => {
            pts.push([1.0 / 3.0; 3]);
            ws.push(0.225);
            orbit3(0.470142064105115, 0.132394152788506, &mut pts, &mut ws);
            orbit3(0.101286507323456, 0.125939180544827, &mut pts, &mut ws);
        }
        6 => {
            orbit3(0.249286745170910, 0.116786275726379, &mut pts, &mut ws);
            orbit3(0.063089014491502, 0.050844906370207, &mut pts, &mut ws);
            orbit6(
                0.310352451033785,
                0.636502499121399,
                0.082851075618374,
                &mut pts,
                &mut ws,
            );
        }
        d => {
            return Err(Error::Quadrature(format!(
                "unsupported polynomial degree {d}, supported range is 1..=6"
            )))
        }
    }
    let sum: f64 = ws.iter().sum();
    let ws = ws.into_iter().map(|w| w / sum).collect();
    Ok(QuadRule { degree, points: pts, weights: ws })
}

/// `sum_i w_i |K| f(x_i)` over the triangle.
pub fn integrate<F: Fn(f64, f64) -> f64>(f: F, tri: &[Point2<f64>; 3], rule: &QuadRule) -> f64 {
    let area = triangle_area(tri[0], tri[1], tri[2]);
    let mut acc = 0.0;
    for (p, w) in rule.points().iter().zip(rule.weights()) {
        let x = p[0] * tri[0].x + p[1] * tri[1].x + p[2] * tri[2].x;
        let y = p[0] * tri[0].y + p[1] * tri[1].y + p[2] * tri[2].y;
        acc += w * f(x, y);
    }
    area * acc
}

/// Axis-aligned kink lines (`x = c` and `y = c`).
#[derive(Debug, Clone, Default)]
pub struct KinkSet {
    pub vertical: Vec<f64>,
    pub horizontal: Vec<f64>,
}

impl KinkSet {
    pub fn is_empty(&self) -> bool {
        self.vertical.is_empty() && self.horizontal.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

fn coord(p: &Point2<f64>, axis: Axis) -> f64 {
    match axis {
        Axis::X => p.x,
        Axis::Y => p.y,
    }
}

/// Sutherland-Hodgman clip of a convex polygon against the half-plane
/// `coord <= c` (`keep_le`) or `coord >= c`.
pub fn clip_polygon_axis(
    poly: &[Point2<f64>],
    axis: Axis,
    c: f64,
    keep_le: bool,
) -> Vec<Point2<f64>> {
    let inside = |p: &Point2<f64>| {
        if keep_le {
            coord(p, axis) <= c
        } else {
            coord(p, axis) >= c
        }
    };
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let pin = inside(&p);
        let qin = inside(&q);
        if pin {
            out.push(p);
        }
        if pin != qin {
            let denom = coord(&q, axis) - coord(&p, axis);
            let t = (c - coord(&p, axis)) / denom;
            out.push(p + (q - p) * t);
        }
    }
    out
}

fn polygon_area(poly: &[Point2<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

fn fan_triangulate(poly: &[Point2<f64>], out: &mut Vec<[Point2<f64>; 3]>) {
    if poly.len() < 3 {
        return;
    }
    if poly.len() == 3 {
        out.push([poly[0], poly[1], poly[2]]);
        return;
    }
    let n = poly.len() as f64;
    let cx = poly.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = poly.iter().map(|p| p.y).sum::<f64>() / n;
    let c = Point2::new(cx, cy);
    for i in 0..poly.len() {
        out.push([c, poly[i], poly[(i + 1) % poly.len()]]);
    }
}

/// Split a triangle along the kink lines crossing it; each resulting convex
/// polygon is fan-triangulated from its centroid. Slivers below
/// `1e-14 * |K|` are dropped. Returns the triangle itself when nothing
/// crosses it.
pub fn split_triangle_by_kinks(tri: &[Point2<f64>; 3], kinks: &KinkSet) -> Vec<[Point2<f64>; 3]> {
    let area = triangle_area(tri[0], tri[1], tri[2]).abs();
    let tol = 1e-14 * area;
    let mut polys: Vec<Vec<Point2<f64>>> = vec![tri.to_vec()];
    let mut split = false;
    for (axis, lines) in [(Axis::X, &kinks.vertical), (Axis::Y, &kinks.horizontal)] {
        for &c in lines {
            let mut next = Vec::with_capacity(polys.len());
            for poly in polys {
                let lo = poly.iter().map(|p| coord(p, axis)).fold(f64::INFINITY, f64::min);
                let hi = poly.iter().map(|p| coord(p, axis)).fold(f64::NEG_INFINITY, f64::max);
                if lo < c - tol && hi > c + tol {
                    split = true;
                    for keep_le in [true, false] {
                        let piece = clip_polygon_axis(&poly, axis, c, keep_le);
                        if polygon_area(&piece).abs() > tol {
                            next.push(piece);
                        }
                    }
                } else {
                    next.push(poly);
                }
            }
            polys = next;
        }
    }
    if !split {
        return vec![*tri];
    }
    let mut out = Vec::with_capacity(polys.len() * 2);
    for poly in &polys {
        fan_triangulate(poly, &mut out);
    }
    out
}

/// Integrate across kink lines: exact whenever `f` is polynomial up to the
/// rule degree on each side of each kink.
pub fn integrate_with_kinks<F: Fn(f64, f64) -> f64>(
    f: F,
    tri: &[Point2<f64>; 3],
    kinks: &KinkSet,
    rule: &QuadRule,
) -> f64 {
    if kinks.is_empty() {
        return integrate(f, tri, rule);
    }
    split_triangle_by_kinks(tri, kinks)
        .iter()
        .map(|piece| integrate(&f, piece, rule))
        .sum()
}

/// Clip a triangle to an axis-aligned rectangle, fan-triangulated.
pub fn clip_triangle_to_rect(tri: &[Point2<f64>; 3], rect: &Rect) -> Vec<[Point2<f64>; 3]> {
    let area = triangle_area(tri[0], tri[1], tri[2]).abs();
    let tol = 1e-14 * area;
    let mut poly: Vec<Point2<f64>> = tri.to_vec();
    for (axis, c, keep_le) in [
        (Axis::X, rect.x0, false),
        (Axis::X, rect.x1, true),
        (Axis::Y, rect.y0, false),
        (Axis::Y, rect.y1, true),
    ] {
        poly = clip_polygon_axis(&poly, axis, c, keep_le);
        if poly.is_empty() {
            return Vec::new();
        }
    }
    if polygon_area(&poly).abs() <= tol {
        return Vec::new();
    }
    let mut out = Vec::new();
    fan_triangulate(&poly, &mut out);
    out
}
