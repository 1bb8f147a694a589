//! Assembly of the certified error bounds from solver outputs and
//! constants.
//!
//! Global certificate: Ē_G = C₀h‖f-π_hf‖ + ‖∇u_h - p_h‖.
//! Local certificate on the region of interest S:
//! Ē_L = C₀h‖f-π_hf‖ + sqrt(Err¹² + Err²² + Err³²) with
//!   Err¹² = 2 C_p C₀h ‖∇α‖ ‖f-π_hf‖ ‖∇u_h-p_h‖,
//!   Err²² = 2 C(h) ‖∇α‖ ‖∇u_h-p_h‖²,
//!   Err³² = ‖∇u_h-p_h‖²_α.
//! Both require the flux to be equilibrated against π_h f; the entry points
//! refuse to certify anything when the equilibration residual exceeds 1e-8.

use std::time::Duration;

use nalgebra::Vector2;

use crate::conforming::{P1Field, ProblemSpec, ScalarFn, VectorFn};
use crate::constants::ConstantsBundle;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::mesh::Mesh;
use crate::mixed::{PwConstField, RT0Field, TriLinearVec};
use crate::quadrature::{clip_triangle_to_rect, integrate, triangle_gauss_rule};
use crate::weight::{weighted_norm_sq, GradNormConvention, WeightFunction};

/// Equilibration slack above which no certificate is issued.
pub const EQUILIBRATION_TOL: f64 = 1e-8;

/// Rectangle (optionally minus the domain cutout) on which the local error
/// is certified or measured.
#[derive(Debug, Clone)]
pub struct RegionOfInterest {
    pub rect: Rect,
    pub cutout: Option<Rect>,
}

/// Wall-clock stage timings, filled by the pipeline driving the run.
#[derive(Debug, Clone, Copy, Default)]
pub struct Timings {
    pub solve_conforming: Duration,
    pub solve_mixed: Duration,
    pub constants: Duration,
    pub estimate: Duration,
    pub total: Duration,
}

/// Everything a run certifies, plus the pieces the certificate is built
/// from.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    /// Grid parameter (cells per unit) when known.
    pub n: Option<u32>,
    pub h: f64,
    pub eps: f64,
    pub convention: GradNormConvention,
    pub constants: ConstantsBundle,
    /// C₀h ‖f - π_h f‖_Ω.
    pub data_osc: f64,
    /// ‖∇u_h - p_h‖_Ω.
    pub flux_gap: f64,
    pub err1: f64,
    pub err2: f64,
    pub err3: f64,
    /// Ē_L.
    pub local_bound: f64,
    /// Ē_G.
    pub global_bound: f64,
    /// E_L = ‖∇u - ∇u_h‖_S when the exact gradient is known.
    pub exact_local: Option<f64>,
    /// ‖∇u - ∇u_h‖_Ω when the exact gradient is known.
    pub exact_global: Option<f64>,
    pub timings: Timings,
}

/// Per-triangle gap field ∇u_h - p_h.
pub fn gap_field(mesh: &Mesh, u_h: &P1Field, p_h: &RT0Field) -> Vec<TriLinearVec> {
    let p_tri = p_h.per_triangle(mesh);
    (0..mesh.n_triangles())
        .map(|t| {
            let g = u_h.gradient(mesh, t);
            TriLinearVec { a: g - p_tri[t].a, c: -p_tri[t].c }
        })
        .collect()
}

/// ‖g‖²_Ω of a per-triangle linear field.
pub fn field_norm_sq(mesh: &Mesh, field: &[TriLinearVec]) -> f64 {
    let rule = triangle_gauss_rule(2).expect("degree 2 is supported");
    (0..mesh.n_triangles())
        .map(|t| integrate(|x, y| field[t].eval(x, y).norm_squared(), &mesh.tri_vertices(t), &rule))
        .sum()
}

/// ‖g‖² over a clipped region (triangles straddling the region boundary are
/// clipped exactly).
pub fn field_norm_sq_region(mesh: &Mesh, field: &[TriLinearVec], region: &RegionOfInterest) -> f64 {
    let rule = triangle_gauss_rule(2).expect("degree 2 is supported");
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let tri = mesh.tri_vertices(t);
        let g = field[t];
        for piece in clip_triangle_to_rect(&tri, &region.rect) {
            total += integrate(|x, y| g.eval(x, y).norm_squared(), &piece, &rule);
        }
        if let Some(cut) = &region.cutout {
            let inner = cut.intersect(&region.rect);
            if inner.width() > 0.0 && inner.height() > 0.0 {
                for piece in clip_triangle_to_rect(&tri, &inner) {
                    total -= integrate(|x, y| g.eval(x, y).norm_squared(), &piece, &rule);
                }
            }
        }
    }
    total.max(0.0)
}

/// ‖f - π_h f‖_Ω by degree-6 quadrature of the squared residual.
pub fn source_projection_gap(mesh: &Mesh, f: &ScalarFn, pi_f: &PwConstField) -> f64 {
    let rule = triangle_gauss_rule(6).expect("degree 6 is supported");
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let c = pi_f.values[t];
        total += integrate(
            |x, y| {
                let r = f(x, y) - c;
                r * r
            },
            &mesh.tri_vertices(t),
            &rule,
        );
    }
    total.sqrt()
}

/// max_K |div p_h + π_h f|.
pub fn equilibration_residual(mesh: &Mesh, p_h: &RT0Field, pi_f: &PwConstField) -> f64 {
    p_h.divergence(mesh)
        .values
        .iter()
        .zip(&pi_f.values)
        .map(|(d, f)| (d + f).abs())
        .fold(0.0, f64::max)
}

fn require_equilibration(mesh: &Mesh, p_h: &RT0Field, pi_f: &PwConstField) -> Result<()> {
    let r = equilibration_residual(mesh, p_h, pi_f);
    if r > EQUILIBRATION_TOL {
        return Err(Error::Certificate(format!(
            "flux is not equilibrated: max |div p_h + π_h f| = {r:.3e}"
        )));
    }
    Ok(())
}

/// Ē_G = C₀h‖f-π_hf‖ + ‖∇u_h - p_h‖.
pub fn global_bound(
    ps: &ProblemSpec,
    u_h: &P1Field,
    p_h: &RT0Field,
    pi_f: &PwConstField,
    c: &ConstantsBundle,
) -> Result<f64> {
    let mesh = &*ps.mesh;
    require_equilibration(mesh, p_h, pi_f)?;
    let gap = field_norm_sq(mesh, &gap_field(mesh, u_h, p_h)).sqrt();
    let osc = c.c0h * source_projection_gap(mesh, &*ps.source, pi_f);
    Ok(osc + gap)
}

/// The full local certificate; also carries the global bound and, when the
/// exact gradient is known, the measured errors.
pub fn local_bound(
    ps: &ProblemSpec,
    u_h: &P1Field,
    p_h: &RT0Field,
    pi_f: &PwConstField,
    w: &WeightFunction,
    c: &ConstantsBundle,
    convention: GradNormConvention,
) -> Result<EstimateReport> {
    let mesh = &*ps.mesh;
    require_equilibration(mesh, p_h, pi_f)?;

    let gap = gap_field(mesh, u_h, p_h);
    let flux_gap = field_norm_sq(mesh, &gap).sqrt();
    let source_gap = source_projection_gap(mesh, &*ps.source, pi_f);
    let data_osc = c.c0h * source_gap;
    let grad_sup = w.grad_sup(convention);

    let err1_sq = 2.0 * c.cp * c.c0h * grad_sup * source_gap * flux_gap;
    let err2_sq = 2.0 * c.c_of_h * grad_sup * flux_gap * flux_gap;
    let err3_sq = weighted_norm_sq(mesh, &gap, w);
    let err1 = err1_sq.max(0.0).sqrt();
    let err2 = err2_sq.max(0.0).sqrt();
    let err3 = err3_sq.max(0.0).sqrt();
    let local = data_osc + (err1_sq + err2_sq + err3_sq).max(0.0).sqrt();
    let global = data_osc + flux_gap;

    let region = RegionOfInterest { rect: w.s_rect, cutout: mesh.domain.cutout };
    let (exact_local, exact_global) = match &ps.exact_grad {
        Some(g) => (
            Some(exact_local_error(mesh, u_h, &**g, &region)),
            Some(exact_global_error(mesh, u_h, &**g)),
        ),
        None => (None, None),
    };

    Ok(EstimateReport {
        n: None,
        h: mesh.h,
        eps: w.eps,
        convention,
        constants: c.clone(),
        data_osc,
        flux_gap,
        err1,
        err2,
        err3,
        local_bound: local,
        global_bound: global,
        exact_local,
        exact_global,
        timings: Timings::default(),
    })
}

/// E_L = ‖∇u - ∇u_h‖_S with degree-6 quadrature; straddling triangles are
/// clipped exactly.
pub fn exact_local_error(
    mesh: &Mesh,
    u_h: &P1Field,
    exact_grad: &VectorFn,
    region: &RegionOfInterest,
) -> f64 {
    let rule = triangle_gauss_rule(6).expect("degree 6 is supported");
    let mut total = 0.0;
    let err_sq = |g: Vector2<f64>, x: f64, y: f64| {
        let e = exact_grad(x, y) - g;
        e.norm_squared()
    };
    for t in 0..mesh.n_triangles() {
        let tri = mesh.tri_vertices(t);
        let g = u_h.gradient(mesh, t);
        for piece in clip_triangle_to_rect(&tri, &region.rect) {
            total += integrate(|x, y| err_sq(g, x, y), &piece, &rule);
        }
        if let Some(cut) = &region.cutout {
            let inner = cut.intersect(&region.rect);
            if inner.width() > 0.0 && inner.height() > 0.0 {
                for piece in clip_triangle_to_rect(&tri, &inner) {
                    total -= integrate(|x, y| err_sq(g, x, y), &piece, &rule);
                }
            }
        }
    }
    total.max(0.0).sqrt()
}

/// ‖∇u - ∇u_h‖_Ω with degree-6 quadrature.
pub fn exact_global_error(mesh: &Mesh, u_h: &P1Field, exact_grad: &VectorFn) -> f64 {
    let rule = triangle_gauss_rule(6).expect("degree 6 is supported");
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let g = u_h.gradient(mesh, t);
        total += integrate(
            |x, y| (exact_grad(x, y) - g).norm_squared(),
            &mesh.tri_vertices(t),
            &rule,
        );
    }
    total.sqrt()
}
