//! Cutoff weight α for a rectangular region of interest: the product of two
//! one-dimensional ramps, equal to 1 on S, decaying linearly to 0 across a
//! band of width ε, clipped to the domain. α is continuous and piecewise
//! bilinear; its kink lines are axis-aligned, so weighted norms of
//! per-triangle polynomial fields integrate exactly through
//! [`crate::quadrature::integrate_with_kinks`].
//!
//! The gradient sup-norm enters the certified bound and is therefore
//! computed analytically from the ramp layout, never sampled. Two readings
//! of ‖∇α‖_∞ are supported: the Euclidean pointwise norm (√2/ε where two
//! ramps overlap in a corner inside Ω, the safe default) and the
//! per-component sup (1/ε).

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, Rect};
use crate::mesh::Mesh;
use crate::mixed::TriLinearVec;
use crate::quadrature::{integrate_with_kinks, triangle_gauss_rule, KinkSet, QuadRule};

/// Which norm of ∇α the estimator constants use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradNormConvention {
    #[default]
    Euclidean,
    Axis,
}

/// One-dimensional ramp over `(lo-eps, lo] ∪ [lo, hi] ∪ [hi, hi+eps)`.
/// Sides whose S-boundary lies on ∂Ω carry no ramp (`*_active = false`).
#[derive(Debug, Clone, Copy)]
pub struct AxisRamp {
    pub lo: f64,
    pub hi: f64,
    pub eps: f64,
    pub lo_active: bool,
    pub hi_active: bool,
}

impl AxisRamp {
    fn eval(&self, x: f64) -> f64 {
        if self.lo_active && x < self.lo {
            (1.0 + (x - self.lo) / self.eps).clamp(0.0, 1.0)
        } else if self.hi_active && x > self.hi {
            (1.0 - (x - self.hi) / self.eps).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }

    fn any_active(&self) -> bool {
        self.lo_active || self.hi_active
    }

    fn push_kinks(&self, out: &mut Vec<f64>) {
        if self.lo_active {
            out.push(self.lo - self.eps);
            out.push(self.lo);
        }
        if self.hi_active {
            out.push(self.hi);
            out.push(self.hi + self.eps);
        }
    }
}

/// The weight α with its exact kink lines and gradient sup-norms.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    /// Bounding rectangle of the region of interest S.
    pub s_rect: Rect,
    /// Band width ε.
    pub eps: f64,
    pub x_ramp: AxisRamp,
    pub y_ramp: AxisRamp,
    /// Bounding rectangle of Ω' = S ∪ B_S (the support of α inside Ω).
    pub omega_prime: Rect,
    grad_sup_euclidean: f64,
    grad_sup_axis: f64,
}

impl WeightFunction {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.x_ramp.eval(x) * self.y_ramp.eval(y)
    }

    pub fn kinks(&self) -> KinkSet {
        let mut vertical = Vec::new();
        let mut horizontal = Vec::new();
        self.x_ramp.push_kinks(&mut vertical);
        self.y_ramp.push_kinks(&mut horizontal);
        KinkSet { vertical, horizontal }
    }

    /// Exact ‖∇α‖_{L∞(Ω')} under the chosen convention.
    pub fn grad_sup(&self, convention: GradNormConvention) -> f64 {
        match convention {
            GradNormConvention::Euclidean => self.grad_sup_euclidean,
            GradNormConvention::Axis => self.grad_sup_axis,
        }
    }
}

/// Build the product-ramp weight for the rectangle `s` (for L-shaped
/// regions of interest: the bounding rectangle; the cutout sides sit on ∂Ω
/// and need no ramp). Ramps on sides where S touches ∂Ω are suppressed;
/// ramps reaching past ∂Ω are clipped (the support condition is on Ω only).
pub fn build_product_weight(s: Rect, eps: f64, domain: &DomainGeometry) -> Result<WeightFunction> {
    if !(eps > 0.0) {
        return Err(Error::Problem(format!("band width must be positive, got {eps}")));
    }
    let b = &domain.bounds;
    let tol = 1e-12 * (b.width().max(b.height()));
    if s.x0 < b.x0 - tol || s.x1 > b.x1 + tol || s.y0 < b.y0 - tol || s.y1 > b.y1 + tol {
        return Err(Error::Problem("region of interest is not contained in the domain".into()));
    }
    if !(s.x1 > s.x0) || !(s.y1 > s.y0) {
        return Err(Error::Problem("region of interest is degenerate".into()));
    }
    let x_ramp = AxisRamp {
        lo: s.x0,
        hi: s.x1,
        eps,
        lo_active: s.x0 > b.x0 + tol,
        hi_active: s.x1 < b.x1 - tol,
    };
    let y_ramp = AxisRamp {
        lo: s.y0,
        hi: s.y1,
        eps,
        lo_active: s.y0 > b.y0 + tol,
        hi_active: s.y1 < b.y1 - tol,
    };
    let omega_prime = s.padded(eps).intersect(b);

    let any_ramp = x_ramp.any_active() || y_ramp.any_active();
    let mut euclid_sq: f64 = if any_ramp { 1.0 } else { 0.0 }; // sup of (ε·|∇α|)²
    for (corner_x, x_active, x_dir) in [(s.x0, x_ramp.lo_active, -1.0), (s.x1, x_ramp.hi_active, 1.0)] {
        for (corner_y, y_active, y_dir) in [(s.y0, y_ramp.lo_active, -1.0), (s.y1, y_ramp.hi_active, 1.0)] {
            if !(x_active && y_active) {
                continue;
            }
            euclid_sq = euclid_sq.max(corner_overlap_sup_sq(
                corner_x, corner_y, x_dir, y_dir, eps, &x_ramp, &y_ramp, domain,
            ));
        }
    }
    Ok(WeightFunction {
        s_rect: s,
        eps,
        x_ramp,
        y_ramp,
        omega_prime,
        grad_sup_euclidean: if any_ramp { euclid_sq.sqrt() / eps } else { 0.0 },
        grad_sup_axis: if any_ramp { 1.0 / eps } else { 0.0 },
    })
}

/// Sup of (ε|∇α|)² = α₁(x)² + α₂(y)² over the corner overlap cell (both
/// ramps decaying) clipped to the closure of Ω. The objective is monotone
/// toward the S corner, so on a rectangle-minus-rectangle region the sup is
/// attained at the corner itself or at a candidate point clamped to the
/// cutout boundary; outside the overlap cell only the single-ramp bound 1
/// applies.
#[allow(clippy::too_many_arguments)]
fn corner_overlap_sup_sq(
    cx: f64,
    cy: f64,
    x_dir: f64,
    y_dir: f64,
    eps: f64,
    x_ramp: &AxisRamp,
    y_ramp: &AxisRamp,
    domain: &DomainGeometry,
) -> f64 {
    if domain.contains_closure(cx, cy) {
        return 2.0;
    }
    // the overlap cell: both coordinates strictly on the decaying side
    let x_band = if x_dir < 0.0 { (cx - eps, cx) } else { (cx, cx + eps) };
    let y_band = if y_dir < 0.0 { (cy - eps, cy) } else { (cy, cy + eps) };
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    if let Some(cut) = &domain.cutout {
        for x in [cx, cut.x0, cut.x1] {
            for y in [cy, cut.y0, cut.y1] {
                candidates.push((x, y));
            }
        }
    }
    let mut best: f64 = 1.0;
    for (x, y) in candidates {
        let in_bands =
            x_band.0 <= x && x <= x_band.1 && y_band.0 <= y && y <= y_band.1;
        if in_bands && domain.contains_closure(x, y) {
            let ax = x_ramp.eval(x);
            let ay = y_ramp.eval(y);
            best = best.max(ax * ax + ay * ay);
        }
    }
    best
}

/// ‖g‖²_α = Σ_K ∫_K α |g|² for a per-triangle linear vector field; exact
/// because α is piecewise bilinear and the integrand piecewise quartic.
pub fn weighted_norm_sq(mesh: &Mesh, field: &[TriLinearVec], w: &WeightFunction) -> f64 {
    let rule = triangle_gauss_rule(4).expect("degree 4 is supported");
    let kinks = w.kinks();
    weighted_norm_sq_with(mesh, field, w, &kinks, &rule)
}

fn weighted_norm_sq_with(
    mesh: &Mesh,
    field: &[TriLinearVec],
    w: &WeightFunction,
    kinks: &KinkSet,
    rule: &QuadRule,
) -> f64 {
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let g = field[t];
        let verts = mesh.tri_vertices(t);
        total += integrate_with_kinks(
            |x, y| w.eval(x, y) * g.eval(x, y).norm_squared(),
            &verts,
            kinks,
            rule,
        );
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    fn unit_square_domain() -> DomainGeometry {
        DomainGeometry::rectangle(Rect::new(0.0, 1.0, 0.0, 1.0))
    }

    fn lshape_domain() -> DomainGeometry {
        DomainGeometry::with_cutout(Rect::new(0.0, 1.0, 0.0, 1.0), Rect::new(0.5, 1.0, 0.5, 1.0))
    }

    fn paper_square_weight() -> WeightFunction {
        build_product_weight(Rect::new(0.375, 0.625, 0.375, 0.625), 0.3, &unit_square_domain()).unwrap()
    }

    #[test]
    fn omega_prime_and_plateau() {
        let w = paper_square_weight();
        assert_relative_eq!(w.omega_prime.x0, 0.075, epsilon = 1e-15);
        assert_relative_eq!(w.omega_prime.x1, 0.925, epsilon = 1e-15);
        assert_eq!(w.eval(0.5, 0.5), 1.0);
        assert_eq!(w.eval(0.05, 0.5), 0.0);
    }

    #[test]
    fn ramp_midpoint_value() {
        let w = paper_square_weight();
        assert_relative_eq!(w.eval(0.225, 0.5), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gradient_sup_conventions() {
        let w = paper_square_weight();
        assert_relative_eq!(
            w.grad_sup(GradNormConvention::Euclidean),
            std::f64::consts::SQRT_2 / 0.3,
            epsilon = 1e-13
        );
        assert_relative_eq!(w.grad_sup(GradNormConvention::Axis), 1.0 / 0.3, epsilon = 1e-13);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = unit_square_domain();
        assert!(build_product_weight(Rect::new(0.4, 0.6, 0.4, 0.6), 0.0, &d).is_err());
        assert!(build_product_weight(Rect::new(-0.1, 0.6, 0.4, 0.6), 0.3, &d).is_err());
        assert!(build_product_weight(Rect::new(0.6, 0.4, 0.4, 0.6), 0.3, &d).is_err());
    }

    #[test]
    fn probe_grid_range_and_support() {
        for (domain, w) in [
            (unit_square_domain(), paper_square_weight()),
            (
                lshape_domain(),
                build_product_weight(Rect::new(0.375, 0.625, 0.375, 0.625), 0.375, &lshape_domain())
                    .unwrap(),
            ),
        ] {
            for i in 0..100 {
                for j in 0..100 {
                    let x = (i as f64 + 0.5) / 100.0;
                    let y = (j as f64 + 0.5) / 100.0;
                    if !domain.contains_closure(x, y) {
                        continue;
                    }
                    let a = w.eval(x, y);
                    assert!((-1e-14..=1.0 + 1e-14).contains(&a));
                    if w.s_rect.contains(x, y) {
                        assert_eq!(a, 1.0);
                    }
                    let op = &w.omega_prime;
                    if !(op.x0 - 1e-14 <= x && x <= op.x1 + 1e-14 && op.y0 - 1e-14 <= y && y <= op.y1 + 1e-14) {
                        assert!(a.abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn lshape_weight_ramps_span_domain() {
        let w =
            build_product_weight(Rect::new(0.375, 0.625, 0.375, 0.625), 0.375, &lshape_domain()).unwrap();
        // ramps reach exactly to the outer boundary
        assert_relative_eq!(w.omega_prime.x0, 0.0, epsilon = 1e-15);
        assert_relative_eq!(w.omega_prime.x1, 1.0, epsilon = 1e-15);
        // the overlap corner (0.375,0.375) lies in Ω, so the Euclidean sup
        // is attained
        assert_relative_eq!(
            w.grad_sup(GradNormConvention::Euclidean),
            std::f64::consts::SQRT_2 / 0.375,
            epsilon = 1e-13
        );
    }

    #[test]
    fn suppressed_ramps_when_s_touches_boundary() {
        // S spanning the whole domain: no ramps, alpha identically 1
        let d = unit_square_domain();
        let w = build_product_weight(Rect::new(0.0, 1.0, 0.0, 1.0), 0.25, &d).unwrap();
        assert_eq!(w.grad_sup(GradNormConvention::Euclidean), 0.0);
        assert_eq!(w.eval(0.01, 0.99), 1.0);
        // S glued to the left wall keeps only three ramps
        let w = build_product_weight(Rect::new(0.0, 0.5, 0.25, 0.75), 0.2, &d).unwrap();
        assert!(!w.x_ramp.lo_active && w.x_ramp.hi_active);
        assert_eq!(w.eval(0.0, 0.5), 1.0);
    }

    #[test]
    fn weighted_norm_of_unit_field() {
        use crate::mesh::Mesh;
        let mesh = Mesh::uniform_rect((0.0, 1.0), (0.0, 1.0), 8).unwrap();
        let field = vec![TriLinearVec::constant(Vector2::new(1.0, 0.0)); mesh.n_triangles()];
        let w = paper_square_weight();
        let v = weighted_norm_sq(&mesh, &field, &w);
        // exact: (∫ ramp)² with ∫ ramp = 0.25 + 0.3
        assert_relative_eq!(v, 0.55 * 0.55, epsilon = 1e-13);
        assert!(v > 0.0625 && v < 0.7225);
    }

    #[test]
    fn unweighted_limit_matches_plain_norm() {
        use crate::mesh::Mesh;
        let mesh = Mesh::uniform_rect((0.0, 1.0), (0.0, 1.0), 4).unwrap();
        let field: Vec<TriLinearVec> = (0..mesh.n_triangles())
            .map(|t| TriLinearVec { a: Vector2::new(0.3 + t as f64 * 0.01, -0.2), c: 0.5 })
            .collect();
        let w = build_product_weight(Rect::new(0.0, 1.0, 0.0, 1.0), 0.5, &unit_square_domain()).unwrap();
        let weighted = weighted_norm_sq(&mesh, &field, &w);
        let rule = triangle_gauss_rule(4).unwrap();
        let plain: f64 = (0..mesh.n_triangles())
            .map(|t| {
                crate::quadrature::integrate(
                    |x, y| field[t].eval(x, y).norm_squared(),
                    &mesh.tri_vertices(t),
                    &rule,
                )
            })
            .sum();
        assert_relative_eq!(weighted, plain, max_relative = 1e-13);
    }

    #[test]
    fn monotone_in_band_width() {
        use crate::mesh::Mesh;
        let mesh = Mesh::uniform_rect((0.0, 1.0), (0.0, 1.0), 8).unwrap();
        let field: Vec<TriLinearVec> = (0..mesh.n_triangles())
            .map(|t| TriLinearVec { a: Vector2::new(1.0, (t % 5) as f64 * 0.1), c: -0.3 })
            .collect();
        let s = Rect::new(0.375, 0.625, 0.375, 0.625);
        let d = unit_square_domain();
        let mut prev = 0.0;
        for eps in [0.1, 0.2, 0.3, 0.375] {
            let w = build_product_weight(s, eps, &d).unwrap();
            let v = weighted_norm_sq(&mesh, &field, &w);
            assert!(v >= prev - 1e-12, "enlarging the band never decreases the norm");
            prev = v;
        }
    }
}
