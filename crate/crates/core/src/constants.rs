//! The explicit constants of the bounds: the projection constant C₀, the
//! Poincaré constant C_p, the discrete constant κ_h, and C(h).
//!
//! κ_h is the worst-case gap, over piecewise-constant sources of unit L²
//! norm, between the conforming solution's gradient and the equilibrated
//! mixed flux. It is computed matrix-free: one Lanczos iteration whose
//! operator application performs a conforming solve, a mixed solve, and the
//! two adjoint solves, with both factorizations computed once and reused.

use crate::conforming::{assemble_p1, solve_cr_smallest_eig, zero_fn, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, EigOptions, MassMatrix};
use crate::mesh::Mesh;
use crate::mixed::{assemble_rt0, TriLinearVec};
use crate::quadrature::{integrate, triangle_gauss_rule};

/// First positive root of the Bessel function J₁; the optimal elementwise
/// projection constant is C₀(K) = h_K / j₁,₁.
pub const BESSEL_J1_FIRST_ROOT: f64 = 3.8317059702075123;

/// Relative eigenvalue tolerance of the κ_h iteration.
pub const KAPPA_EIG_TOL: f64 = 1e-6;

/// (C₀, C₀·h) of the mesh: C₀(K) = h_K/j₁,₁ per triangle, C₀ = max_K
/// C₀(K)/h.
pub fn c0_of_mesh(mesh: &Mesh) -> (f64, f64) {
    let max_hk = mesh.h_per_tri.iter().cloned().fold(0.0, f64::max);
    let c0h = max_hk / BESSEL_J1_FIRST_ROOT;
    (c0h / mesh.h, c0h)
}

/// How a Poincaré constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoincareMode {
    /// Closed form 1/(√2 π), valid only for the unit square with Γ_D = ∂Ω.
    ExactUnitSquare,
    /// Guaranteed upper bound from the Crouzeix-Raviart eigenvalue.
    CrBound,
}

/// Provenance recorded next to the computed C_p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CpProvenance {
    ExactUnitSquare,
    CrBound { lambda_h: f64, lambda_lower_bound: f64 },
}

pub fn poincare_exact_unit_square() -> f64 {
    1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI)
}

/// C_p with ‖v‖ ≤ C_p ‖∇v‖ on the constrained space. The CR route computes
/// the smallest nonconforming eigenvalue λ_{h,1} and applies the guaranteed
/// lower bound λ₁ ≥ λ_{h,1}/(1 + (0.1893 h)² λ_{h,1}), so the returned
/// constant is an upper bound for the true C_p.
pub fn poincare_constant(ps: &ProblemSpec, mode: PoincareMode) -> Result<(f64, CpProvenance)> {
    match mode {
        PoincareMode::ExactUnitSquare => {
            let b = &ps.mesh.domain.bounds;
            let is_unit_square = ps.mesh.domain.cutout.is_none()
                && (b.x1 - b.x0 - 1.0).abs() < 1e-12
                && (b.y1 - b.y0 - 1.0).abs() < 1e-12;
            let full_dirichlet = !ps.pure_neumann()
                && ps
                    .mesh
                    .boundary_edges()
                    .all(|(_, l)| l == crate::mesh::BoundaryLabel::Dirichlet);
            if !(is_unit_square && full_dirichlet) {
                return Err(Error::Problem(
                    "exact Poincaré constant is only available for the unit square with full Dirichlet boundary".into(),
                ));
            }
            Ok((poincare_exact_unit_square(), CpProvenance::ExactUnitSquare))
        }
        PoincareMode::CrBound => {
            let lambda_h = solve_cr_smallest_eig(ps)?;
            let h = ps.mesh.h;
            let lower = lambda_h / (1.0 + (0.1893 * h).powi(2) * lambda_h);
            Ok((
                1.0 / lower.sqrt(),
                CpProvenance::CrBound { lambda_h, lambda_lower_bound: lower },
            ))
        }
    }
}

/// κ_h as computed (`raw`) and with the eigenvalue tolerance folded in the
/// guaranteed direction (`guaranteed = raw * (1 + 10*tol)`), which is what
/// the certificates use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub raw: f64,
    pub guaranteed: f64,
}

/// κ_h = max over X^h of ‖(∇∘R_h - T_h) f_h‖ / ‖f_h‖, via Lanczos on the
/// induced Gram operator in the X^h mass metric.
pub fn kappa_h(ps: &ProblemSpec) -> Result<KappaEstimate> {
    let hps = ps.homogeneous();
    let mesh = ps.mesh.clone();
    let nt = mesh.n_triangles();
    let pure_neumann = hps.pure_neumann();

    let sys_v = assemble_p1(&hps, &*zero_fn())?;
    let fac_v = sys_v.matrix.factor()?;
    let mix = assemble_rt0(&hps)?;
    let fac_w = mix.matrix.factor()?;
    let nf_w = mix.free_edges.len();
    let mut edge_index = vec![usize::MAX; mesh.n_edges()];
    for (k, &e) in mix.free_edges.iter().enumerate() {
        edge_index[e] = k;
    }

    let rule2 = triangle_gauss_rule(2)?;
    const OPP: [usize; 3] = [2, 0, 1];

    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        // forward: u = R_h x (conforming), p = T_h x (mixed)
        let u_sol = fac_v.solve(&sys_v.pwconst_load(&mesh, x))?;
        let u = sys_v.field_from_solution(&mesh, &u_sol);
        let w_sol = fac_w.solve(&mix.rhs_for_source(x, &mesh))?;
        let (p, _) = mix.split_solution(&w_sol, mesh.n_edges());
        let p_tri = p.per_triangle(&mesh);
        let gap: Vec<TriLinearVec> = (0..nt)
            .map(|t| {
                let gu = u.gradient(&mesh, t);
                TriLinearVec { a: gu - p_tri[t].a, c: -p_tri[t].c }
            })
            .collect();

        // adjoint conforming: load (∇ψ_i, gap) then one more solve
        let mut cv = vec![0.0; mesh.n_vertices()];
        for t in 0..nt {
            let verts = mesh.tri_vertices(t);
            let area = mesh.areas[t];
            let g = crate::conforming::basis_gradients(&verts, area);
            let cx = (verts[0].x + verts[1].x + verts[2].x) / 3.0;
            let cy = (verts[0].y + verts[1].y + verts[2].y) / 3.0;
            let mean = gap[t].eval(cx, cy) * area;
            for (i, &v) in mesh.triangles[t].iter().enumerate() {
                cv[v] += g[i].dot(&mean);
            }
        }
        let mut rhs_v: Vec<f64> = sys_v.free_vertices.iter().map(|&v| cv[v]).collect();
        if sys_v.pure_neumann {
            rhs_v.push(0.0);
        }
        let w_back = fac_v.solve(&rhs_v)?;
        let w_field = sys_v.field_from_solution(&mesh, &w_back);
        let mut out = vec![0.0; nt];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let s: f64 = tri.iter().map(|&v| w_field.values[v]).sum();
            out[t] = mesh.areas[t] / 3.0 * s;
        }

        // adjoint mixed: moments (φ_e, gap) then one more saddle solve
        let mut rhs_w = vec![0.0; mix.matrix.dim()];
        for t in 0..nt {
            let verts = mesh.tri_vertices(t);
            let area = mesh.areas[t];
            let g = gap[t];
            for k in 0..3 {
                let use_ = mesh.tri_edges[t][k];
                let row = edge_index[use_.edge];
                if row == usize::MAX {
                    continue;
                }
                let pk = verts[OPP[k]];
                let m = integrate(
                    |x, y| {
                        let val = g.eval(x, y);
                        (x - pk.x) * val.x + (y - pk.y) * val.y
                    },
                    &verts,
                    &rule2,
                );
                rhs_w[row] += use_.sign * m / (2.0 * area);
            }
        }
        let back = fac_w.solve(&rhs_w)?;
        for t in 0..nt {
            out[t] += mesh.areas[t] * back[nf_w + t];
        }
        Ok(out)
    };

    let mass = MassMatrix::diagonal(mesh.areas.clone())?;
    let deflate: Vec<Vec<f64>> = if pure_neumann { vec![vec![1.0; nt]] } else { Vec::new() };
    let opts = EigOptions { rel_tol: KAPPA_EIG_TOL, max_iter: 500 };
    let lambda = linalg::largest_gen_eig(apply, &mass, &opts, &deflate)?;
    let raw = lambda.max(0.0).sqrt();
    Ok(KappaEstimate { raw, guaranteed: raw * (1.0 + 10.0 * KAPPA_EIG_TOL) })
}

/// C(h) = sqrt(κ_h² + (C₀h)²).
pub fn c_of_h(kappa: f64, c0h: f64) -> f64 {
    kappa.hypot(c0h)
}

/// Interpolation-constant alternative C_h = 0.493 h, valid on uniform
/// right-isoceles meshes when the solution has H² regularity; exposed for
/// comparison only.
pub fn c_of_h_h2_regular(h: f64) -> f64 {
    0.493 * h
}

/// All constants of a run, with provenance.
#[derive(Debug, Clone)]
pub struct ConstantsBundle {
    pub c0: f64,
    pub c0h: f64,
    pub cp: f64,
    pub cp_provenance: CpProvenance,
    pub kappa: KappaEstimate,
    pub c_of_h: f64,
}

pub fn compute_bundle(ps: &ProblemSpec, mode: PoincareMode) -> Result<ConstantsBundle> {
    let (c0, c0h) = c0_of_mesh(&ps.mesh);
    let (cp, cp_provenance) = poincare_constant(ps, mode)?;
    let kappa = kappa_h(ps)?;
    Ok(ConstantsBundle {
        c0,
        c0h,
        cp,
        cp_provenance,
        kappa,
        c_of_h: c_of_h(kappa.guaranteed, c0h),
    })
}
