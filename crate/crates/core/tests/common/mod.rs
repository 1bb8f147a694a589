//! Helpers shared by the integration and acceptance suites: the dense κ_h
//! oracle, composite-refinement quadrature, pseudo-random fields, and slope
//! fits.

use nalgebra::Point2;
use nalgebra::Vector2;

use hypercircle::conforming::{assemble_p1, zero_fn, ProblemSpec};
use hypercircle::mesh::Mesh;
use hypercircle::mixed::{assemble_rt0, TriLinearVec};
use hypercircle::quadrature::{integrate, triangle_gauss_rule};
use hypercircle::weight::WeightFunction;

/// All gap fields Q e_j, one per triangle indicator source, via the public
/// solver surfaces (forward solves only; no adjoints involved).
pub fn gap_columns(ps: &ProblemSpec) -> Vec<Vec<TriLinearVec>> {
    let mesh = &*ps.mesh;
    let nt = mesh.n_triangles();
    let sys_v = assemble_p1(ps, &*zero_fn()).unwrap();
    let fac_v = sys_v.matrix.factor().unwrap();
    let mix = assemble_rt0(ps).unwrap();
    let fac_w = mix.matrix.factor().unwrap();

    let mut columns = Vec::with_capacity(nt);
    for j in 0..nt {
        let mut e = vec![0.0; nt];
        e[j] = 1.0;
        let u_sol = fac_v.solve(&sys_v.pwconst_load(mesh, &e)).unwrap();
        let u = sys_v.field_from_solution(mesh, &u_sol);
        let w_sol = fac_w.solve(&mix.rhs_for_source(&e, mesh)).unwrap();
        let (p, _) = mix.split_solution(&w_sol, mesh.n_edges());
        let p_tri = p.per_triangle(mesh);
        let col: Vec<TriLinearVec> = (0..nt)
            .map(|t| {
                let g = u.gradient(mesh, t);
                TriLinearVec { a: g - p_tri[t].a, c: -p_tri[t].c }
            })
            .collect();
        columns.push(col);
    }
    columns
}

/// Dense brute-force κ_h: Gram matrix over all indicator sources, largest
/// generalized Rayleigh quotient by dense symmetric eigendecomposition.
pub fn kappa_dense(ps: &ProblemSpec) -> f64 {
    let mesh = &*ps.mesh;
    let nt = mesh.n_triangles();
    let cols = gap_columns(ps);
    let rule = triangle_gauss_rule(2).unwrap();

    let mut gram = nalgebra::DMatrix::<f64>::zeros(nt, nt);
    for t in 0..nt {
        let verts = mesh.tri_vertices(t);
        for j in 0..nt {
            let qj = cols[j][t];
            for k in j..nt {
                let qk = cols[k][t];
                let v = integrate(|x, y| qj.eval(x, y).dot(&qk.eval(x, y)), &verts, &rule);
                gram[(j, k)] += v;
                if k != j {
                    gram[(k, j)] += v;
                }
            }
        }
    }
    for j in 0..nt {
        for k in 0..nt {
            gram[(j, k)] /= (mesh.areas[j] * mesh.areas[k]).sqrt();
        }
    }
    let eig = nalgebra::SymmetricEigen::new(gram);
    let lam_max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lam_max.max(0.0).sqrt()
}

/// Uniform subdivision of a triangle into k² congruent subtriangles.
pub fn subdivide(tri: &[Point2<f64>; 3], k: usize) -> Vec<[Point2<f64>; 3]> {
    let p = |i: usize, j: usize| {
        let a = i as f64 / k as f64;
        let b = j as f64 / k as f64;
        Point2::new(
            tri[0].x + a * (tri[1].x - tri[0].x) + b * (tri[2].x - tri[0].x),
            tri[0].y + a * (tri[1].y - tri[0].y) + b * (tri[2].y - tri[0].y),
        )
    };
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..(k - j) {
            out.push([p(i, j), p(i + 1, j), p(i, j + 1)]);
            if i + j + 2 <= k {
                out.push([p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)]);
            }
        }
    }
    out
}

/// Composite-refinement weighted norm with 64 subtriangles per element.
pub fn composite_weighted_norm_sq(mesh: &Mesh, field: &[TriLinearVec], w: &WeightFunction) -> f64 {
    let rule = triangle_gauss_rule(4).unwrap();
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let g = field[t];
        for sub in subdivide(&mesh.tri_vertices(t), 8) {
            total += integrate(|x, y| w.eval(x, y) * g.eval(x, y).norm_squared(), &sub, &rule);
        }
    }
    total
}

/// Deterministic structureless per-triangle field.
pub fn pseudo_field(mesh: &Mesh, seed: u64) -> Vec<TriLinearVec> {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state as f64 / u64::MAX as f64) * 2.0 - 1.0
    };
    (0..mesh.n_triangles())
        .map(|_| TriLinearVec { a: Vector2::new(next(), next()), c: next() })
        .collect()
}

/// Least-squares slope of log(err) against log(h) for h = 1/n.
pub fn fit_slope(ns: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|n| (1.0 / n).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
