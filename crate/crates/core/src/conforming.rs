//! Conforming P1 solver for the Poisson boundary-value problem, plus the
//! Crouzeix-Raviart eigensolver feeding the Poincaré bound.
//!
//! Dirichlet conditions are imposed by elimination: constrained vertices are
//! removed from the system and their lifting moved to the right-hand side,
//! which keeps the matrix SPD and the constraint exact. Pure-Neumann
//! problems get a scalar Lagrange multiplier row enforcing the zero-mean
//! gauge.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};
use crate::linalg::{self, EigOptions, Gauge, MassMatrix, SparseSym, Symmetry};
use crate::mesh::{triangle_area, BoundaryLabel, Mesh};
use crate::quadrature::{integrate, triangle_gauss_rule, QuadRule};

pub type ScalarFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
pub type VectorFn = dyn Fn(f64, f64) -> Vector2<f64> + Send + Sync;

pub fn zero_fn() -> Arc<ScalarFn> {
    Arc::new(|_, _| 0.0)
}

/// The committed experiment source 2π² sin(πx) sin(πy).
pub fn sine_source() -> Arc<ScalarFn> {
    Arc::new(|x, y| {
        let pi = std::f64::consts::PI;
        2.0 * pi * pi * (pi * x).sin() * (pi * y).sin()
    })
}

/// Constant vector field, e.g. the exact gradient of a linear solution.
pub fn constant_gradient(gx: f64, gy: f64) -> Arc<VectorFn> {
    Arc::new(move |_, _| Vector2::new(gx, gy))
}

/// Gradient of the square-domain exact solution sin(πx) sin(πy).
pub fn sine_exact_gradient() -> Arc<VectorFn> {
    Arc::new(|x, y| {
        let pi = std::f64::consts::PI;
        Vector2::new(
            pi * (pi * x).cos() * (pi * y).sin(),
            pi * (pi * x).sin() * (pi * y).cos(),
        )
    })
}

/// Problem data on a labeled mesh: source, piecewise-linear Dirichlet data
/// (vertex values), piecewise-constant Neumann data (edge midpoint values),
/// optionally the exact solution's gradient for error reporting.
#[derive(Clone)]
pub struct ProblemSpec {
    pub mesh: Arc<Mesh>,
    pub source: Arc<ScalarFn>,
    pub dirichlet_data: Arc<ScalarFn>,
    pub neumann_data: Arc<ScalarFn>,
    pub exact_grad: Option<Arc<VectorFn>>,
}

impl ProblemSpec {
    /// Homogeneous-data problem with the given source.
    pub fn new(mesh: Arc<Mesh>, source: Arc<ScalarFn>) -> Self {
        ProblemSpec {
            mesh,
            source,
            dirichlet_data: zero_fn(),
            neumann_data: zero_fn(),
            exact_grad: None,
        }
    }

    pub fn with_dirichlet_data(mut self, g: Arc<ScalarFn>) -> Self {
        self.dirichlet_data = g;
        self
    }

    pub fn with_neumann_data(mut self, g: Arc<ScalarFn>) -> Self {
        self.neumann_data = g;
        self
    }

    pub fn with_exact_gradient(mut self, g: Arc<VectorFn>) -> Self {
        self.exact_grad = Some(g);
        self
    }

    /// Γ_D is empty, so fields live in the zero-mean gauge space.
    pub fn pure_neumann(&self) -> bool {
        !self.mesh.has_dirichlet_boundary()
    }

    /// Same mesh and boundary partition, zero data. The auxiliary problems
    /// behind κ_h are solved on this variant.
    pub fn homogeneous(&self) -> ProblemSpec {
        ProblemSpec::new(self.mesh.clone(), zero_fn())
    }
}

/// Nodal coefficients of a continuous piecewise-linear field.
#[derive(Debug, Clone)]
pub struct P1Field {
    pub values: Vec<f64>,
}

impl P1Field {
    /// Constant gradient on triangle `t`.
    pub fn gradient(&self, mesh: &Mesh, t: usize) -> Vector2<f64> {
        let tri = mesh.triangles[t];
        let g = basis_gradients(&mesh.tri_vertices(t), mesh.areas[t]);
        self.values[tri[0]] * g[0] + self.values[tri[1]] * g[1] + self.values[tri[2]] * g[2]
    }

    pub fn gradient_field(&self, mesh: &Mesh) -> Vec<Vector2<f64>> {
        (0..mesh.n_triangles()).map(|t| self.gradient(mesh, t)).collect()
    }

    /// Value at a point of triangle `t` (barycentric interpolation).
    pub fn eval_on(&self, mesh: &Mesh, t: usize, p: Point2<f64>) -> f64 {
        let [a, b, c] = mesh.triangles[t];
        let [pa, pb, pc] = mesh.tri_vertices(t);
        let area = mesh.areas[t];
        let la = triangle_area(p, pb, pc) / area;
        let lb = triangle_area(pa, p, pc) / area;
        let lc = 1.0 - la - lb;
        la * self.values[a] + lb * self.values[b] + lc * self.values[c]
    }

    /// Energy seminorm ‖∇v‖_Ω.
    pub fn grad_norm(&self, mesh: &Mesh) -> f64 {
        let mut s = 0.0;
        for t in 0..mesh.n_triangles() {
            let g = self.gradient(mesh, t);
            s += mesh.areas[t] * g.norm_squared();
        }
        s.sqrt()
    }

    /// Mesh-weighted mean (1/|Ω|) ∫ v.
    pub fn mean(&self, mesh: &Mesh) -> f64 {
        let mut s = 0.0;
        let mut area = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = mesh.areas[t];
            s += a * (self.values[tri[0]] + self.values[tri[1]] + self.values[tri[2]]) / 3.0;
            area += a;
        }
        s / area
    }

    /// Plain text "vertex_id value" lines.
    pub fn dump(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i} {v}")?;
        }
        Ok(())
    }
}

/// Gradients of the three barycentric basis functions.
pub fn basis_gradients(tri: &[Point2<f64>; 3], area: f64) -> [Vector2<f64>; 3] {
    let [p0, p1, p2] = tri;
    let s = 1.0 / (2.0 * area);
    [
        Vector2::new(p1.y - p2.y, p2.x - p1.x) * s,
        Vector2::new(p2.y - p0.y, p0.x - p2.x) * s,
        Vector2::new(p0.y - p1.y, p1.x - p0.x) * s,
    ]
}

/// Assembled P1 system over the free vertices (Dirichlet lifting already in
/// the right-hand side). Pure-Neumann systems carry one extra zero-mean
/// multiplier unknown at the end.
pub struct P1System {
    pub matrix: SparseSym,
    pub rhs: Vec<f64>,
    /// Mesh vertex id per system unknown (excluding the gauge multiplier).
    pub free_vertices: Vec<usize>,
    /// Dirichlet value per mesh vertex (zero at free vertices).
    pub lifted_values: Vec<f64>,
    pub pure_neumann: bool,
}

impl P1System {
    pub fn n_unknowns(&self) -> usize {
        self.matrix.dim()
    }

    /// Scatter a solution of this system into a full nodal field.
    pub fn field_from_solution(&self, mesh: &Mesh, sol: &[f64]) -> P1Field {
        let mut values = self.lifted_values.clone();
        for (k, &v) in self.free_vertices.iter().enumerate() {
            values[v] = sol[k];
        }
        debug_assert_eq!(values.len(), mesh.n_vertices());
        P1Field { values }
    }

    /// Load vector for a piecewise-constant source: (x, ψ_i) = Σ_K x_K |K|/3.
    pub fn pwconst_load(&self, mesh: &Mesh, tri_values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; mesh.n_vertices()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let w = tri_values[t] * mesh.areas[t] / 3.0;
            for &v in tri {
                full[v] += w;
            }
        }
        let mut rhs: Vec<f64> = self.free_vertices.iter().map(|&v| full[v]).collect();
        if self.pure_neumann {
            rhs.push(0.0);
        }
        rhs
    }
}

fn volume_rule() -> QuadRule {
    triangle_gauss_rule(6).expect("degree 6 is supported")
}

/// Assemble stiffness and load for (∇u,∇v) = (f,v) + (g_N,v)_{Γ_N} with the
/// given right-hand-side source (which may differ from `ps.source`).
pub fn assemble_p1(ps: &ProblemSpec, rhs_source: &ScalarFn) -> Result<P1System> {
    let mesh = &*ps.mesh;
    let n = mesh.n_vertices();
    let dirichlet = mesh.dirichlet_vertices();
    let free_vertices: Vec<usize> = (0..n).filter(|&v| !dirichlet[v]).collect();
    if free_vertices.is_empty() {
        return Err(Error::Problem("no free vertices: every vertex is Dirichlet-constrained".into()));
    }
    let pure_neumann = ps.pure_neumann();
    let mut index = vec![usize::MAX; n];
    for (k, &v) in free_vertices.iter().enumerate() {
        index[v] = k;
    }
    let mut lifted_values = vec![0.0; n];
    for v in 0..n {
        if dirichlet[v] {
            let p = mesh.vertices[v];
            lifted_values[v] = (ps.dirichlet_data)(p.x, p.y);
        }
    }

    let nf = free_vertices.len();
    let dim = if pure_neumann { nf + 1 } else { nf };
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = vec![0.0; dim];

    let rule = volume_rule();
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let verts = mesh.tri_vertices(t);
        let area = mesh.areas[t];
        let g = basis_gradients(&verts, area);
        for i in 0..3 {
            let vi = tri[i];
            if dirichlet[vi] {
                continue;
            }
            let row = index[vi];
            for j in 0..3 {
                let vj = tri[j];
                let k = area * g[i].dot(&g[j]);
                if dirichlet[vj] {
                    rhs[row] -= k * lifted_values[vj];
                } else {
                    triplets.push((row, index[vj], k));
                }
            }
            // volume term with barycentric weight λ_i
            let fi = integrate(
                |x, y| {
                    let p = Point2::new(x, y);
                    let la = triangle_area(p, verts[1], verts[2]) / area;
                    let lb = triangle_area(verts[0], p, verts[2]) / area;
                    let l = [la, lb, 1.0 - la - lb];
                    rhs_source(x, y) * l[i]
                },
                &verts,
                &rule,
            );
            rhs[row] += fi;
        }
    }

    // Neumann boundary term: g_N constant per edge
    for (e, label) in mesh.boundary_edges() {
        if label != BoundaryLabel::Neumann {
            continue;
        }
        let mid = mesh.edge_midpoint(e);
        let g = (ps.neumann_data)(mid.x, mid.y);
        let len = mesh.edge_length(e);
        for &v in &mesh.edges[e] {
            if !dirichlet[v] {
                rhs[index[v]] += 0.5 * g * len;
            }
        }
    }

    if pure_neumann {
        // zero-mean gauge: append ∫ψ_i as a Lagrange multiplier row/column
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let w = mesh.areas[t] / 3.0;
            for &v in tri {
                triplets.push((index[v], nf, w));
                triplets.push((nf, index[v], w));
            }
        }
    }

    let symmetry = if pure_neumann { Symmetry::Indefinite } else { Symmetry::Spd };
    let matrix = SparseSym::from_triplets(dim, symmetry, &triplets)?;
    Ok(P1System { matrix, rhs, free_vertices, lifted_values, pure_neumann })
}

/// Galerkin solution of the conforming scheme.
pub fn solve_p1(ps: &ProblemSpec, rhs_source: &ScalarFn) -> Result<P1Field> {
    let sys = assemble_p1(ps, rhs_source)?;
    let sol = sys.matrix.factor()?.solve(&sys.rhs)?;
    Ok(sys.field_from_solution(&ps.mesh, &sol))
}

/// Smallest eigenvalue of the Crouzeix-Raviart (edge-midpoint,
/// nonconforming) discrete Laplacian under the problem's essential
/// constraints, or the zero-mean gauge in the pure-Neumann case.
pub fn solve_cr_smallest_eig(ps: &ProblemSpec) -> Result<f64> {
    let mesh = &*ps.mesh;
    let ne = mesh.n_edges();
    let dirichlet_edge: Vec<bool> = (0..ne)
        .map(|e| mesh.edge_labels[e] == Some(BoundaryLabel::Dirichlet))
        .collect();
    let free_edges: Vec<usize> = (0..ne).filter(|&e| !dirichlet_edge[e]).collect();
    if free_edges.is_empty() {
        return Err(Error::Problem("no free CR unknowns".into()));
    }
    let mut index = vec![usize::MAX; ne];
    for (k, &e) in free_edges.iter().enumerate() {
        index[e] = k;
    }
    let nf = free_edges.len();
    let pure_neumann = ps.pure_neumann();

    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut mass = vec![0.0; nf];
    // CR basis on K: θ_e = 1 - 2 λ_opp(e); local edges (01,12,20) sit
    // opposite local vertices 2, 0, 1
    const OPP: [usize; 3] = [2, 0, 1];
    for t in 0..mesh.n_triangles() {
        let verts = mesh.tri_vertices(t);
        let area = mesh.areas[t];
        let g = basis_gradients(&verts, area);
        for a in 0..3 {
            let ea = mesh.tri_edges[t][a].edge;
            if dirichlet_edge[ea] {
                continue;
            }
            mass[index[ea]] += area / 3.0;
            for b in 0..3 {
                let eb = mesh.tri_edges[t][b].edge;
                if dirichlet_edge[eb] {
                    continue;
                }
                let k = 4.0 * area * g[OPP[a]].dot(&g[OPP[b]]);
                triplets.push((index[ea], index[eb], k));
            }
        }
    }

    let opts = EigOptions { rel_tol: 1e-8, max_iter: 500 };
    if pure_neumann {
        // shift by the mass to keep the factor SPD; deflate the constants
        let mut shifted = triplets;
        for (k, &m) in mass.iter().enumerate() {
            shifted.push((k, k, m));
        }
        let a = SparseSym::from_triplets(nf, Symmetry::Spd, &shifted)?;
        let b = MassMatrix::diagonal(mass)?;
        let gauge = Gauge { kernel: vec![1.0; nf], shift: 1.0 };
        linalg::smallest_gen_eig(&a, &b, &opts, Some(&gauge))
    } else {
        let a = SparseSym::from_triplets(nf, Symmetry::Spd, &triplets)?;
        let b = MassMatrix::diagonal(mass)?;
        linalg::smallest_gen_eig(&a, &b, &opts, None)
    }
}
