//! Structured conforming triangulations of rectangles and L-shaped domains.
//!
//! Conventions, fixed once for the whole crate:
//! - triangles are stored counterclockwise;
//! - every grid cell is split by its anti-diagonal (upper-left to
//!   lower-right) into two right isoceles triangles;
//! - every edge carries one global direction `[v0, v1]`; its unit normal is
//!   the right normal `(t_y, -t_x)` of that direction;
//! - boundary edges are directed so that their unique triangle traverses
//!   them forward, which makes the edge normal the outward normal of Ω;
//! - `tri_edges[t][k].sign` is +1 when triangle `t` traverses edge `k` in
//!   the global direction (its outward normal on that edge then equals the
//!   edge normal) and -1 otherwise.
//!
//! Meshes are immutable after construction apart from boundary relabeling;
//! construction is deterministic, so identical inputs give bit-identical
//! vertex and edge orderings.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, Rect};

/// Boundary condition label carried by boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryLabel {
    Dirichlet,
    Neumann,
}

/// One edge use inside a triangle: global edge id plus orientation sign.
#[derive(Debug, Clone, Copy)]
pub struct TriEdge {
    pub edge: usize,
    /// +1 if the triangle traverses the edge in its global direction.
    pub sign: f64,
}

#[derive(Debug, Clone)]
struct StructuredLocator {
    x0: f64,
    y0: f64,
    step: f64,
    nx: usize,
    ny: usize,
    /// Base triangle index per cell, `None` for removed cells.
    cell_base: Vec<Option<usize>>,
}

impl StructuredLocator {
    fn locate(&self, p: Point2<f64>) -> Option<usize> {
        let fx = (p.x - self.x0) / self.step;
        let fy = (p.y - self.y0) / self.step;
        if fx < -1e-12 || fy < -1e-12 {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        let base = self.cell_base[j * self.nx + i]?;
        // anti-diagonal x_frac + y_frac = 1: below it lies the (a,b,d)
        // triangle, above it the (b,c,d) triangle
        let lx = fx - i as f64;
        let ly = fy - j as f64;
        Some(if lx + ly <= 1.0 { base } else { base + 1 })
    }
}

/// Conforming triangulation with oriented edges and boundary labels.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Vertex coordinates.
    pub vertices: Vec<Point2<f64>>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Directed edges `[v0, v1]`.
    pub edges: Vec<[usize; 2]>,
    /// Per triangle: its three edges in local order (v0v1, v1v2, v2v0).
    pub tri_edges: Vec<[TriEdge; 3]>,
    /// Per edge: `None` for interior edges, a label for boundary edges.
    pub edge_labels: Vec<Option<BoundaryLabel>>,
    /// Per-triangle longest edge length.
    pub h_per_tri: Vec<f64>,
    /// Mesh size: max over h_per_tri.
    pub h: f64,
    /// Per-triangle (positive) areas.
    pub areas: Vec<f64>,
    /// Per-vertex flag: lies on the boundary.
    pub boundary_vertex: Vec<bool>,
    /// The polygonal domain this mesh triangulates.
    pub domain: DomainGeometry,
    locator: Option<StructuredLocator>,
}

pub fn triangle_area(p0: Point2<f64>, p1: Point2<f64>, p2: Point2<f64>) -> f64 {
    0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y))
}

/// Counts reported by [`Mesh::statistics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStatistics {
    pub h: f64,
    pub n_tri: usize,
    pub n_edge: usize,
    pub n_vert: usize,
}

impl Mesh {
    /// Uniform triangulation of an axis-aligned rectangle with `n` cells per
    /// unit length. Range lengths must be integer multiples of `1/n`. All
    /// boundary edges start labeled Dirichlet.
    pub fn uniform_rect(x_range: (f64, f64), y_range: (f64, f64), n: u32) -> Result<Mesh> {
        if n < 1 {
            return Err(Error::Mesh("cells-per-unit n must be >= 1".into()));
        }
        let (x0, x1) = x_range;
        let (y0, y1) = y_range;
        if !(x1 > x0) || !(y1 > y0) {
            return Err(Error::Mesh(format!(
                "degenerate ranges ({x0},{x1}) x ({y0},{y1})"
            )));
        }
        let step = 1.0 / n as f64;
        let nx = cell_count(x1 - x0, step)?;
        let ny = cell_count(y1 - y0, step)?;
        let domain = DomainGeometry::rectangle(Rect::new(x0, x1, y0, y1));
        build_structured(x0, y0, step, nx, ny, |_, _| true, domain)
    }

    /// Uniform triangulation of the L-shaped domain (0,1)^2 \ [0.5,1]^2.
    /// `n` must be even so the reentrant corner (0.5,0.5) is a grid point.
    pub fn uniform_lshape(n: u32) -> Result<Mesh> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Mesh(format!(
                "L-shape needs even n >= 2 so the reentrant corner is a grid point, got {n}"
            )));
        }
        let step = 1.0 / n as f64;
        let half = (n / 2) as usize;
        let domain = DomainGeometry::with_cutout(
            Rect::new(0.0, 1.0, 0.0, 1.0),
            Rect::new(0.5, 1.0, 0.5, 1.0),
        );
        build_structured(0.0, 0.0, step, n as usize, n as usize, |i, j| !(i >= half && j >= half), domain)
    }

    /// Build a mesh from raw vertices and triangles. Validates positive
    /// areas, conformity and the area sum against the stated domain. The
    /// labeler receives each boundary edge's midpoint.
    pub fn from_parts(
        vertices: Vec<Point2<f64>>,
        triangles: Vec<[usize; 3]>,
        domain: DomainGeometry,
        labeler: impl Fn(Point2<f64>) -> BoundaryLabel,
    ) -> Result<Mesh> {
        let mut mesh = finalize(vertices, triangles, domain, None)?;
        mesh.label_boundary(labeler);
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tri_vertices(&self, t: usize) -> [Point2<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Unit normal of the edge's global direction (outward for boundary
    /// edges).
    pub fn edge_normal(&self, e: usize) -> Vector2<f64> {
        let [a, b] = self.edges[e];
        let t = (self.vertices[b] - self.vertices[a]).normalize();
        Vector2::new(t.y, -t.x)
    }

    pub fn edge_midpoint(&self, e: usize) -> Point2<f64> {
        let [a, b] = self.edges[e];
        nalgebra::center(&self.vertices[a], &self.vertices[b])
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_labels[e].is_some()
    }

    /// Boundary edge ids with their labels.
    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, BoundaryLabel)> + '_ {
        self.edge_labels
            .iter()
            .enumerate()
            .filter_map(|(e, l)| l.map(|l| (e, l)))
    }

    /// Relabel all boundary edges from their midpoints.
    pub fn label_boundary(&mut self, labeler: impl Fn(Point2<f64>) -> BoundaryLabel) {
        for e in 0..self.edges.len() {
            if self.edge_labels[e].is_some() {
                self.edge_labels[e] = Some(labeler(self.edge_midpoint(e)));
            }
        }
    }

    /// Vertices lying on a Dirichlet boundary edge.
    pub fn dirichlet_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for (e, label) in self.boundary_edges() {
            if label == BoundaryLabel::Dirichlet {
                out[self.edges[e][0]] = true;
                out[self.edges[e][1]] = true;
            }
        }
        out
    }

    pub fn has_dirichlet_boundary(&self) -> bool {
        self.boundary_edges().any(|(_, l)| l == BoundaryLabel::Dirichlet)
    }

    /// Index of the triangle containing the point, for structured meshes.
    pub fn locate(&self, p: Point2<f64>) -> Option<usize> {
        self.locator.as_ref().and_then(|l| l.locate(p))
    }

    pub fn statistics(&self) -> MeshStatistics {
        MeshStatistics {
            h: self.h,
            n_tri: self.triangles.len(),
            n_edge: self.edges.len(),
            n_vert: self.vertices.len(),
        }
    }

    /// Plain-text dump: one line per entity ("v x y", "t i j k",
    /// "e i j dirichlet|neumann|interior").
    pub fn dump(&self, w: &mut impl Write) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {}", v.x, v.y)?;
        }
        for t in &self.triangles {
            writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
        }
        for (e, verts) in self.edges.iter().enumerate() {
            let label = match self.edge_labels[e] {
                Some(BoundaryLabel::Dirichlet) => "dirichlet",
                Some(BoundaryLabel::Neumann) => "neumann",
                None => "interior",
            };
            writeln!(w, "e {} {} {}", verts[0], verts[1], label)?;
        }
        Ok(())
    }
}

fn cell_count(len: f64, step: f64) -> Result<usize> {
    let cells = len / step;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 0.5 {
        return Err(Error::Mesh(format!(
            "range length {len} is not an integer multiple of the cell size {step}"
        )));
    }
    Ok(rounded as usize)
}

fn build_structured(
    x0: f64,
    y0: f64,
    step: f64,
    nx: usize,
    ny: usize,
    keep_cell: impl Fn(usize, usize) -> bool,
    domain: DomainGeometry,
) -> Result<Mesh> {
    let mut vid = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut cell_base = vec![None; nx * ny];

    let keep: Vec<bool> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| keep_cell(i, j))
        .collect();
    // a grid vertex is kept iff some kept cell touches it
    for j in 0..=ny {
        for i in 0..=nx {
            let mut used = false;
            for (ci, cj) in [(i.wrapping_sub(1), j.wrapping_sub(1)), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j)] {
                if ci < nx && cj < ny && keep[cj * nx + ci] {
                    used = true;
                    break;
                }
            }
            if used {
                vid[j * (nx + 1) + i] = vertices.len();
                vertices.push(Point2::new(x0 + i as f64 * step, y0 + j as f64 * step));
            }
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            if !keep[j * nx + i] {
                continue;
            }
            let a = vid[j * (nx + 1) + i];
            let b = vid[j * (nx + 1) + i + 1];
            let c = vid[(j + 1) * (nx + 1) + i + 1];
            let d = vid[(j + 1) * (nx + 1) + i];
            cell_base[j * nx + i] = Some(triangles.len());
            // anti-diagonal split (d-b), both triangles counterclockwise
            triangles.push([a, b, d]);
            triangles.push([b, c, d]);
        }
    }

    let locator = StructuredLocator { x0, y0, step, nx, ny, cell_base };
    finalize(vertices, triangles, domain, Some(locator))
}

fn finalize(
    vertices: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    domain: DomainGeometry,
    locator: Option<StructuredLocator>,
) -> Result<Mesh> {
    if triangles.is_empty() {
        return Err(Error::Mesh("mesh has no triangles".into()));
    }
    let mut areas = Vec::with_capacity(triangles.len());
    let mut h_per_tri = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let [a, b, c] = *tri;
        let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
        let area = triangle_area(pa, pb, pc);
        if area <= 0.0 {
            return Err(Error::Mesh(format!(
                "triangle {t} has non-positive signed area {area}"
            )));
        }
        areas.push(area);
        h_per_tri.push(
            (pb - pa)
                .norm()
                .max((pc - pb).norm())
                .max((pa - pc).norm()),
        );
    }

    // edges in first-encounter order, provisional direction from the first
    // traversal
    let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut incidence: Vec<u8> = Vec::new();
    let mut tri_edge_ids = vec![[0usize; 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        let [a, b, c] = *tri;
        for (k, (u, v)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
            let key = (u.min(v), u.max(v));
            let e = *edge_of.entry(key).or_insert_with(|| {
                edges.push([u, v]);
                incidence.push(0);
                edges.len() - 1
            });
            incidence[e] += 1;
            tri_edge_ids[t][k] = e;
        }
    }
    if let Some(bad) = incidence.iter().position(|&c| c > 2) {
        return Err(Error::Mesh(format!(
            "edge {bad} is shared by more than two triangles"
        )));
    }

    // boundary edges get the direction their unique triangle uses, so their
    // normal points out of the domain
    let mut is_boundary = vec![false; edges.len()];
    for (e, &count) in incidence.iter().enumerate() {
        is_boundary[e] = count == 1;
    }
    for (t, tri) in triangles.iter().enumerate() {
        let [a, b, c] = *tri;
        for (k, (u, v)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
            let e = tri_edge_ids[t][k];
            if is_boundary[e] {
                edges[e] = [u, v];
            }
        }
    }

    let mut tri_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let [a, b, c] = *tri;
        let mut uses = [TriEdge { edge: 0, sign: 1.0 }; 3];
        for (k, (u, v)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
            let e = tri_edge_ids[t][k];
            let sign = if edges[e] == [u, v] { 1.0 } else { -1.0 };
            uses[k] = TriEdge { edge: e, sign };
        }
        tri_edges.push(uses);
    }

    let total_area: f64 = areas.iter().sum();
    let domain_area = domain.area();
    if (total_area - domain_area).abs() > 1e-12 * domain_area.max(1.0) {
        return Err(Error::Mesh(format!(
            "triangle areas sum to {total_area}, domain area is {domain_area}"
        )));
    }

    let edge_labels: Vec<Option<BoundaryLabel>> = is_boundary
        .iter()
        .map(|&b| b.then_some(BoundaryLabel::Dirichlet))
        .collect();
    let mut boundary_vertex = vec![false; vertices.len()];
    for (e, &b) in is_boundary.iter().enumerate() {
        if b {
            boundary_vertex[edges[e][0]] = true;
            boundary_vertex[edges[e][1]] = true;
        }
    }

    let h = h_per_tri.iter().cloned().fold(0.0, f64::max);
    Ok(Mesh {
        vertices,
        triangles,
        edges,
        tri_edges,
        edge_labels,
        h_per_tri,
        h,
        areas,
        boundary_vertex,
        domain,
        locator,
    })
}
