//! Sparse symmetric solvers and the Lanczos eigeniterations behind every FEM
//! solve and the κ_h / λ₁ computations.
//!
//! Factorizations are delegated to `faer` (sparse Cholesky for SPD systems,
//! sparse LU with pivoting for the indefinite saddle-point systems); every
//! solve is verified against the residual contract `‖Ax-b‖ ≤ 1e-10 ‖b‖`.
//! The eigeniterations are Lanczos recurrences in the B-inner product with a
//! deterministic all-ones start vector and full reorthogonalization.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Symmetric positive definite; factored by sparse Cholesky.
    Spd,
    /// Symmetric indefinite (saddle-point blocks); factored by sparse LU.
    Indefinite,
}

/// Sparse symmetric matrix. Both triangles are stored; duplicate triplets
/// are summed on construction.
pub struct SparseSym {
    dim: usize,
    symmetry: Symmetry,
    mat: SparseColMat<usize, f64>,
}

impl SparseSym {
    pub fn from_triplets(dim: usize, symmetry: Symmetry, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::try_new_from_triplets(dim, dim, &triplets)
            .map_err(|e| Error::Solve(format!("building sparse matrix: {e:?}")))?;
        Ok(SparseSym { dim, symmetry, mat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let xm = faer::Mat::from_fn(self.dim, 1, |i, _| x[i]);
        let y = &self.mat * &xm;
        (0..self.dim).map(|i| y[(i, 0)]).collect()
    }

    /// Factor once; the factorization is reused for repeated right-hand
    /// sides and is safe to share across threads for concurrent solves.
    pub fn factor(&self) -> Result<Factor> {
        let inner = match self.symmetry {
            Symmetry::Spd => FactorKind::Llt(
                self.mat
                    .sp_cholesky(faer::Side::Lower)
                    .map_err(|e| Error::Solve(format!("Cholesky factorization failed: {e:?}")))?,
            ),
            Symmetry::Indefinite => FactorKind::Lu(
                self.mat
                    .sp_lu()
                    .map_err(|e| Error::Solve(format!("LU factorization failed (singular saddle system -- missing gauge?): {e:?}")))?,
            ),
        };
        Ok(Factor { dim: self.dim, mat: self.mat.clone(), inner })
    }
}

enum FactorKind {
    Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
}

/// A cached factorization with its matrix (kept for residual checks).
pub struct Factor {
    dim: usize,
    mat: SparseColMat<usize, f64>,
    inner: FactorKind,
}

impl Factor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.dim);
        let bm = faer::Mat::from_fn(self.dim, 1, |i, _| b[i]);
        let xm = match &self.inner {
            FactorKind::Llt(f) => f.solve(&bm),
            FactorKind::Lu(f) => f.solve(&bm),
        };
        let x: Vec<f64> = (0..self.dim).map(|i| xm[(i, 0)]).collect();
        let ax = &self.mat * &xm;
        let mut r2 = 0.0;
        let mut b2 = 0.0;
        for i in 0..self.dim {
            let r = ax[(i, 0)] - b[i];
            r2 += r * r;
            b2 += b[i] * b[i];
        }
        if r2.sqrt() > SOLVE_RESIDUAL_TOL * b2.sqrt() + f64::MIN_POSITIVE {
            return Err(Error::Solve(format!(
                "residual {:.3e} exceeds {:.0e} * ||b|| = {:.3e}",
                r2.sqrt(),
                SOLVE_RESIDUAL_TOL,
                SOLVE_RESIDUAL_TOL * b2.sqrt()
            )));
        }
        Ok(x)
    }
}

/// Factor an SPD system and solve a single right-hand side.
pub fn factor_solve_spd(a: &SparseSym, b: &[f64]) -> Result<Vec<f64>> {
    if a.symmetry != Symmetry::Spd {
        return Err(Error::Solve("factor_solve_spd needs an SPD-flagged matrix".into()));
    }
    a.factor()?.solve(b)
}

/// Factor a symmetric indefinite (gauge-fixed) saddle system and solve.
pub fn factor_solve_saddle(a: &SparseSym, b: &[f64]) -> Result<Vec<f64>> {
    a.factor()?.solve(b)
}

/// Mass metric for the generalized eigenproblems.
pub enum MassMatrix {
    Diagonal(Vec<f64>),
    Sparse { matrix: SparseSym, factor: Factor },
}

impl MassMatrix {
    pub fn diagonal(d: Vec<f64>) -> Result<Self> {
        if d.iter().any(|&v| v <= 0.0) {
            return Err(Error::Solve("diagonal mass with non-positive entry".into()));
        }
        Ok(MassMatrix::Diagonal(d))
    }

    pub fn sparse(matrix: SparseSym) -> Result<Self> {
        let factor = matrix.factor()?;
        Ok(MassMatrix::Sparse { matrix, factor })
    }

    pub fn dim(&self) -> usize {
        match self {
            MassMatrix::Diagonal(d) => d.len(),
            MassMatrix::Sparse { matrix, .. } => matrix.dim(),
        }
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MassMatrix::Diagonal(d) => x.iter().zip(d).map(|(v, m)| v * m).collect(),
            MassMatrix::Sparse { matrix, .. } => matrix.matvec(x),
        }
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            MassMatrix::Diagonal(d) => Ok(b.iter().zip(d).map(|(v, m)| v / m).collect()),
            MassMatrix::Sparse { factor, .. } => factor.solve(b),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    /// Relative tolerance on the target eigenvalue.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { rel_tol: 1e-6, max_iter: 500 }
    }
}

/// Gauge handling for positive semidefinite pencils: the caller supplies
/// `A + shift*B` instead of the singular `A` plus the kernel spanning the
/// gauge direction; the returned eigenvalue is corrected by `-shift`.
pub struct Gauge {
    pub kernel: Vec<f64>,
    pub shift: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Largest Ritz value and the magnitude of the eigenvector's last component
/// of the symmetric tridiagonal matrix given by `alphas`/`betas`.
fn top_ritz(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    if k == 1 {
        return (alphas[0], 1.0);
    }
    let mut t = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors[(k - 1, best)].abs())
}

/// Lanczos iteration for the largest eigenvalue of a B-self-adjoint operator
/// in the B-inner product. `deflate` vectors (and the iteration space) are
/// kept B-orthogonal.
fn lanczos_largest(
    mut op: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &MassMatrix,
    opts: &EigOptions,
    deflate: &[Vec<f64>],
) -> Result<f64> {
    let n = b.dim();
    // B-orthonormalize the deflation set
    let mut defl: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(deflate.len());
    for d in deflate {
        let mut v = d.clone();
        for (u, bu) in &defl {
            let c = dot(&v, bu);
            axpy(&mut v, -c, u);
        }
        let bv = b.matvec(&v);
        let norm = dot(&v, &bv).max(0.0).sqrt();
        if norm > 1e-14 {
            let inv = 1.0 / norm;
            v.iter_mut().for_each(|x| *x *= inv);
            let bv = b.matvec(&v);
            defl.push((v, bv));
        }
    }
    let project = |w: &mut Vec<f64>| {
        for (u, bu) in &defl {
            let c = dot(w, bu);
            axpy(w, -c, u);
        }
    };

    // deterministic start: all-ones projected to the admissible subspace;
    // when the kernel contains the constants, fall back to an index ramp
    let mut v = Vec::new();
    let mut norm = 0.0;
    for candidate in [
        vec![1.0; n],
        (0..n).map(|i| i as f64 + 1.0).collect::<Vec<f64>>(),
    ] {
        let mut w = candidate;
        project(&mut w);
        let bw = b.matvec(&w);
        norm = dot(&w, &bw).max(0.0).sqrt();
        if norm > 1e-12 {
            v = w;
            break;
        }
    }
    if norm <= 1e-12 {
        return Err(Error::Solve("Lanczos start vector collapses after deflation".into()));
    }
    let inv = 1.0 / norm;
    v.iter_mut().for_each(|x| *x *= inv);
    let bv = b.matvec(&v);

    let mut basis: Vec<(Vec<f64>, Vec<f64>)> = vec![(v, bv)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut theta = 0.0;

    let max_iter = opts.max_iter.min(n.max(1));
    for k in 0..max_iter {
        let (vk, _) = &basis[k];
        let mut w = op(vk)?;
        project(&mut w);
        let alpha = dot(&w, &basis[k].1);
        alphas.push(alpha);
        axpy(&mut w, -alpha, &basis[k].0);
        if k > 0 {
            let beta_prev = betas[k - 1];
            axpy(&mut w, -beta_prev, &basis[k - 1].0);
        }
        // two passes of full reorthogonalization
        for _ in 0..2 {
            for (u, bu) in &basis {
                let c = dot(&w, bu);
                axpy(&mut w, -c, u);
            }
        }
        let bw = b.matvec(&w);
        let beta = dot(&w, &bw).max(0.0).sqrt();

        let (t, s_last) = top_ritz(&alphas, &betas);
        theta = t;
        let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-300);
        if beta * s_last <= opts.rel_tol * theta.abs().max(1e-300) || beta <= 1e-14 * scale {
            return Ok(theta);
        }
        betas.push(beta);
        let inv = 1.0 / beta;
        let vnext: Vec<f64> = w.iter().map(|x| x * inv).collect();
        let bvnext: Vec<f64> = bw.iter().map(|x| x * inv).collect();
        basis.push((vnext, bvnext));
    }
    Err(Error::EigenNonConvergence { iterations: max_iter, last_estimate: theta })
}

/// Largest eigenvalue of `G x = λ B x` where `apply_g` applies the symmetric
/// positive semidefinite `G` and `b` is the SPD mass metric.
pub fn largest_gen_eig(
    mut apply_g: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &MassMatrix,
    opts: &EigOptions,
    deflate: &[Vec<f64>],
) -> Result<f64> {
    lanczos_largest(|v| b.solve(&apply_g(v)?), b, opts, deflate)
}

/// Smallest (after gauge) eigenvalue of `A x = λ B x` via shift-invert
/// Lanczos: the largest eigenvalue of `A⁻¹ B` in the B-inner product. With a
/// gauge, `a` must already be the shifted matrix `A + shift*B`.
pub fn smallest_gen_eig(
    a: &SparseSym,
    b: &MassMatrix,
    opts: &EigOptions,
    gauge: Option<&Gauge>,
) -> Result<f64> {
    let factor = a.factor()?;
    let (deflate, shift): (&[Vec<f64>], f64) = match gauge {
        Some(g) => (std::slice::from_ref(&g.kernel), g.shift),
        None => (&[], 0.0),
    };
    let mu = lanczos_largest(|v| factor.solve(&b.matvec(v)), b, opts, deflate)?;
    if mu <= 0.0 {
        return Err(Error::Solve(format!("shift-invert Lanczos returned non-positive Ritz value {mu}")));
    }
    Ok(1.0 / mu - shift)
}
