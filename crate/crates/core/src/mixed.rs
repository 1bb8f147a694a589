//! Lowest-order Raviart-Thomas mixed solver. The returned flux satisfies
//! div p_h + f_h = 0 on every triangle exactly (to solver tolerance), which
//! is the equilibration the error certificates require, and matches the
//! Neumann data exactly because those flux unknowns are eliminated rather
//! than imposed weakly.
//!
//! Flux unknowns are total fluxes across edges in the direction of the
//! global edge normal. On triangle K the basis function of edge e is
//! `s_{K,e} (x - P_opp) / (2|K|)`, a field of the per-triangle form
//! `(a + c x, b + c y)`.

use std::io::Write;

use nalgebra::Vector2;

use crate::conforming::{ProblemSpec, ScalarFn};
use crate::error::{Error, Result};
use crate::linalg::{SparseSym, Symmetry};
use crate::mesh::{BoundaryLabel, Mesh};
use crate::quadrature::{integrate, triangle_gauss_rule, QuadRule};

/// One value per triangle; `mean_zero` marks the pure-Neumann variant of
/// the space.
#[derive(Debug, Clone)]
pub struct PwConstField {
    pub values: Vec<f64>,
    pub mean_zero: bool,
}

impl PwConstField {
    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        PwConstField { values: vec![c; mesh.n_triangles()], mean_zero: false }
    }

    /// Area-weighted integral Σ_K |K| v_K.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        self.values.iter().zip(&mesh.areas).map(|(v, a)| v * a).sum()
    }

    /// L²(Ω) norm.
    pub fn norm(&self, mesh: &Mesh) -> f64 {
        self.values
            .iter()
            .zip(&mesh.areas)
            .map(|(v, a)| v * v * a)
            .sum::<f64>()
            .sqrt()
    }
}

/// Elementwise L² projection onto piecewise constants (the per-triangle
/// mean, degree-6 quadrature), optionally corrected to the zero-mean gauge.
pub fn project_pi_h(f: &ScalarFn, mesh: &Mesh, mean_zero: bool) -> PwConstField {
    let rule = triangle_gauss_rule(6).expect("degree 6 is supported");
    let mut values: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| integrate(f, &mesh.tri_vertices(t), &rule) / mesh.areas[t])
        .collect();
    if mean_zero {
        let total_area: f64 = mesh.areas.iter().sum();
        let mean = values
            .iter()
            .zip(&mesh.areas)
            .map(|(v, a)| v * a)
            .sum::<f64>()
            / total_area;
        for v in &mut values {
            *v -= mean;
        }
    }
    PwConstField { values, mean_zero }
}

/// Per-triangle field `(a_x + c x, a_y + c y)`: the restriction of an RT0
/// field, and also the gap `∇u_h - p_h` against a constant gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriLinearVec {
    pub a: Vector2<f64>,
    pub c: f64,
}

impl TriLinearVec {
    pub fn constant(v: Vector2<f64>) -> Self {
        TriLinearVec { a: v, c: 0.0 }
    }

    pub fn eval(&self, x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(self.a.x + self.c * x, self.a.y + self.c * y)
    }

    pub fn divergence(&self) -> f64 {
        2.0 * self.c
    }
}

/// Normal-flux coefficients, one per edge (total flux across the edge along
/// its global normal).
#[derive(Debug, Clone)]
pub struct RT0Field {
    pub flux: Vec<f64>,
}

/// Local edges (v0v1, v1v2, v2v0) sit opposite local vertices 2, 0, 1.
const OPP: [usize; 3] = [2, 0, 1];

impl RT0Field {
    /// Per-triangle representation `(a + c x, b + c y)`.
    pub fn per_triangle(&self, mesh: &Mesh) -> Vec<TriLinearVec> {
        (0..mesh.n_triangles()).map(|t| self.on_triangle(mesh, t)).collect()
    }

    pub fn on_triangle(&self, mesh: &Mesh, t: usize) -> TriLinearVec {
        let verts = mesh.tri_vertices(t);
        let area = mesh.areas[t];
        let mut a = Vector2::zeros();
        let mut c = 0.0;
        for k in 0..3 {
            let use_ = mesh.tri_edges[t][k];
            let coef = use_.sign * self.flux[use_.edge] / (2.0 * area);
            let p = verts[OPP[k]];
            a -= coef * Vector2::new(p.x, p.y);
            c += coef;
        }
        TriLinearVec { a, c }
    }

    /// Piecewise-constant divergence (2 c_K per triangle).
    pub fn divergence(&self, mesh: &Mesh) -> PwConstField {
        let values = (0..mesh.n_triangles())
            .map(|t| {
                let mut d = 0.0;
                for k in 0..3 {
                    let use_ = mesh.tri_edges[t][k];
                    d += use_.sign * self.flux[use_.edge];
                }
                d / mesh.areas[t]
            })
            .collect();
        PwConstField { values, mean_zero: false }
    }

    /// Plain text "edge_id flux" lines.
    pub fn dump(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (e, q) in self.flux.iter().enumerate() {
            writeln!(w, "{e} {q}")?;
        }
        Ok(())
    }
}

/// Piecewise-constant divergence of an RT0 field.
pub fn divergence(mesh: &Mesh, p: &RT0Field) -> PwConstField {
    p.divergence(mesh)
}

/// Assembled mixed saddle system with Neumann fluxes eliminated. The
/// right-hand side can be rebuilt for new piecewise-constant sources without
/// reassembling (κ_h applies the solver to many sources).
pub struct MixedSystem {
    pub matrix: SparseSym,
    /// Mesh edge id per flux unknown.
    pub free_edges: Vec<usize>,
    /// Prescribed flux per mesh edge (zero off Γ_N).
    pub fixed_flux: Vec<f64>,
    /// Flux-row right-hand side: Dirichlet boundary term minus eliminated
    /// mass couplings.
    flux_rhs: Vec<f64>,
    /// Per-triangle divergence of the eliminated fluxes.
    fixed_div: Vec<f64>,
    pub gauged: bool,
    n_tri: usize,
}

impl MixedSystem {
    pub fn n_unknowns(&self) -> usize {
        self.matrix.dim()
    }

    /// Full right-hand side for the source `f_h` (one value per triangle).
    pub fn rhs_for_source(&self, f_h: &[f64], mesh: &Mesh) -> Vec<f64> {
        let nf = self.free_edges.len();
        let dim = self.matrix.dim();
        let mut rhs = vec![0.0; dim];
        rhs[..nf].copy_from_slice(&self.flux_rhs);
        for t in 0..self.n_tri {
            rhs[nf + t] = -f_h[t] * mesh.areas[t] - self.fixed_div[t];
        }
        rhs
    }

    /// Scatter a solution into the flux field and multiplier.
    pub fn split_solution(&self, sol: &[f64], n_edges: usize) -> (RT0Field, PwConstField) {
        let nf = self.free_edges.len();
        let mut flux = self.fixed_flux.clone();
        flux.truncate(n_edges);
        for (k, &e) in self.free_edges.iter().enumerate() {
            flux[e] = sol[k];
        }
        let mu = sol[nf..nf + self.n_tri].to_vec();
        (RT0Field { flux }, PwConstField { values: mu, mean_zero: self.gauged })
    }
}

fn mass_rule() -> QuadRule {
    triangle_gauss_rule(2).expect("degree 2 is supported")
}

/// Assemble the mixed system for the problem's boundary data.
pub fn assemble_rt0(ps: &ProblemSpec) -> Result<MixedSystem> {
    let mesh = &*ps.mesh;
    let ne = mesh.n_edges();
    let nt = mesh.n_triangles();

    // Neumann fluxes are essential: fixed to g_N * |e| on Γ_N
    let mut is_fixed = vec![false; ne];
    let mut fixed_flux = vec![0.0; ne];
    for (e, label) in mesh.boundary_edges() {
        if label == BoundaryLabel::Neumann {
            is_fixed[e] = true;
            let mid = mesh.edge_midpoint(e);
            fixed_flux[e] = (ps.neumann_data)(mid.x, mid.y) * mesh.edge_length(e);
        }
    }
    let free_edges: Vec<usize> = (0..ne).filter(|&e| !is_fixed[e]).collect();
    let mut index = vec![usize::MAX; ne];
    for (k, &e) in free_edges.iter().enumerate() {
        index[e] = k;
    }
    let nf = free_edges.len();
    let gauged = ps.pure_neumann();
    let dim = nf + nt + usize::from(gauged);

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut flux_rhs = vec![0.0; nf];
    let mut fixed_div = vec![0.0; nt];

    let rule = mass_rule();
    for t in 0..nt {
        let verts = mesh.tri_vertices(t);
        let area = mesh.areas[t];
        for a in 0..3 {
            let ua = mesh.tri_edges[t][a];
            let pa = verts[OPP[a]];
            // divergence coupling (div φ_e, χ_K) = s_{K,e}
            if is_fixed[ua.edge] {
                fixed_div[t] += ua.sign * fixed_flux[ua.edge];
            } else {
                triplets.push((index[ua.edge], nf + t, ua.sign));
                triplets.push((nf + t, index[ua.edge], ua.sign));
            }
            if is_fixed[ua.edge] {
                continue;
            }
            let row = index[ua.edge];
            for b in 0..3 {
                let ub = mesh.tri_edges[t][b];
                let pb = verts[OPP[b]];
                let m = integrate(
                    |x, y| (x - pa.x) * (x - pb.x) + (y - pa.y) * (y - pb.y),
                    &verts,
                    &rule,
                ) * ua.sign
                    * ub.sign
                    / (4.0 * area * area);
                if is_fixed[ub.edge] {
                    flux_rhs[row] -= m * fixed_flux[ub.edge];
                } else {
                    triplets.push((row, index[ub.edge], m));
                }
            }
        }
    }

    // natural Dirichlet term (g_D, φ_e·n)_{Γ_D}: the normal trace of φ_e on
    // its own boundary edge is 1/|e|, so the term is the edge mean of g_D
    for (e, label) in mesh.boundary_edges() {
        if label == BoundaryLabel::Dirichlet {
            let [v0, v1] = mesh.edges[e];
            let p0 = mesh.vertices[v0];
            let p1 = mesh.vertices[v1];
            let g0 = (ps.dirichlet_data)(p0.x, p0.y);
            let g1 = (ps.dirichlet_data)(p1.x, p1.y);
            flux_rhs[index[e]] += 0.5 * (g0 + g1);
        }
    }

    if gauged {
        for t in 0..nt {
            triplets.push((nf + t, nf + nt, mesh.areas[t]));
            triplets.push((nf + nt, nf + t, mesh.areas[t]));
        }
    }

    let matrix = SparseSym::from_triplets(dim, Symmetry::Indefinite, &triplets)?;
    Ok(MixedSystem { matrix, free_edges, fixed_flux, flux_rhs, fixed_div, gauged, n_tri: nt })
}

/// Mixed solve with the piecewise-constant source `f_h` in place of `f`:
/// returns the equilibrated flux p_h (div p_h + f_h = 0 per triangle) and
/// the multiplier.
pub fn solve_rt0(ps: &ProblemSpec, f_h: &PwConstField) -> Result<(RT0Field, PwConstField)> {
    let mesh = &*ps.mesh;
    let sys = assemble_rt0(ps)?;
    if sys.gauged {
        // pure-Neumann compatibility: ∫ f_h + ∮ g_N = 0
        let volume: f64 = f_h.integral(mesh);
        let boundary: f64 = sys.fixed_flux.iter().sum();
        let scale = f_h.norm(mesh).max(1.0);
        if (volume + boundary).abs() > 1e-10 * scale {
            return Err(Error::Problem(format!(
                "pure-Neumann data incompatible: |∫f_h + ∮g_N| = {:.3e}",
                (volume + boundary).abs()
            )));
        }
    }
    let rhs = sys.rhs_for_source(&f_h.values, mesh);
    let sol = sys.matrix.factor()?.solve(&rhs)?;
    Ok(sys.split_solution(&sol, mesh.n_edges()))
}
