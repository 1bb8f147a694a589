//! Guaranteed local a posteriori error bounds for the 2D Poisson problem.
//!
//! The toolkit solves `-Δu = f` with mixed Dirichlet/Neumann data on
//! structured triangulations of rectangles and L-shaped domains, builds an
//! equilibrated flux from the lowest-order Raviart-Thomas mixed method, and
//! combines both solutions with explicitly computed constants (C₀, C_p, κ_h)
//! into certified energy-error bounds — globally and, through a piecewise
//! bilinear cutoff weight, locally on a region of interest. No H² regularity
//! of the exact solution is used anywhere, so the bounds remain valid next to
//! reentrant corners.
//!
//! Module map:
//! - [`mesh`]: structured conforming triangulations with oriented edges
//! - [`quadrature`]: Gauss rules on triangles, exact integration across
//!   axis-aligned kink lines by polygon clipping
//! - [`linalg`]: sparse symmetric factorizations and Lanczos eigeniterations
//! - [`conforming`]: P1 solver and the Crouzeix-Raviart eigensolver
//! - [`mixed`]: RT0 mixed solver with exact elementwise equilibration
//! - [`constants`]: C₀, Poincaré constants, κ_h, C(h)
//! - [`weight`]: product-ramp cutoff functions and weighted norms
//! - [`estimator`]: assembly of the certified global/local bounds

pub mod conforming;
pub mod constants;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod mixed;
pub mod quadrature;
pub mod weight;

pub use error::{Error, Result};
