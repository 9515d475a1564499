//! Area-minimizing spanning surfaces: mesh data structures, the disc-type
//! Dirichlet minimizer, triangle-mesh area descent with remeshing, a
//! minimal-graph finite-difference solver, and the spanning-verified film
//! infimum used by the coupled problem.

mod descent;
mod disc;
mod graph;
mod infimum;

pub use descent::{solve_mesh_plateau, MeshSolution};
pub use disc::{
    conformal_defect, dirichlet_energy, disc_mesh, solve_disc_plateau, DiscParam, DiscSolution,
};
pub use graph::{solve_minimal_graph, GraphSolution, GridFunction, Rectangle};
pub use infimum::{film_infimum, film_infimum_from, FilmResult, SpanningReport};

use crate::{Error, Result};
use nalgebra::Point3;

/// Oriented triangle mesh with marked boundary.
///
/// `boundary_loops` lists boundary vertices loop by loop in traversal order;
/// `boundary_binding` carries, parallel to each loop, the arc-length
/// parameter of the vertex on the prescribed boundary curve (empty when the
/// mesh is closed or unbound).
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_loops: Vec<Vec<usize>>,
    pub boundary_binding: Vec<Vec<f64>>,
}

impl SurfaceMesh {
    /// Build a mesh from vertices and triangles, deriving boundary loops
    /// from edges with a single incident triangle. Fails on out-of-range
    /// indices, degenerate triangles, non-manifold edges, or boundary that
    /// does not decompose into simple cycles.
    pub fn from_triangles(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::InvalidInput("mesh needs vertices and triangles".into()));
        }
        let bbox = bounding_box_diag(&vertices);
        let area_floor = 1e-14 * bbox * bbox;
        for (ti, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidInput(format!(
                    "triangle {ti} references vertex out of range"
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidInput(format!("triangle {ti} repeats a vertex")));
            }
            let a = triangle_area(&vertices, t);
            if !(a > area_floor) {
                return Err(Error::InvalidInput(format!(
                    "triangle {ti} degenerate (area {a:.3e})"
                )));
            }
        }
        // Count directed edges; a boundary edge appears in one direction only.
        use std::collections::HashMap;
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if edge_count.values().any(|&c| c > 2) {
            return Err(Error::InvalidInput("non-manifold edge in mesh".into()));
        }
        // Boundary half-edges in triangle orientation.
        let mut next: HashMap<usize, usize> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if edge_count[&(a.min(b), a.max(b))] == 1 {
                    if next.insert(a, b).is_some() {
                        return Err(Error::InvalidInput(
                            "boundary is not a union of simple cycles".into(),
                        ));
                    }
                }
            }
        }
        let mut loops = Vec::new();
        let mut seen = vec![false; nv];
        // Deterministic loop order: start from the smallest unvisited vertex.
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        for s in starts {
            if seen[s] {
                continue;
            }
            let mut cycle = vec![s];
            seen[s] = true;
            let mut cur = next[&s];
            while cur != s {
                if seen[cur] {
                    return Err(Error::InvalidInput(
                        "boundary is not a union of simple cycles".into(),
                    ));
                }
                seen[cur] = true;
                cycle.push(cur);
                cur = *next.get(&cur).ok_or_else(|| {
                    Error::InvalidInput("boundary half-edge chain broken".into())
                })?;
            }
            if cycle.len() < 3 {
                return Err(Error::InvalidInput("boundary cycle shorter than 3".into()));
            }
            loops.push(cycle);
        }
        Ok(SurfaceMesh {
            vertices,
            triangles,
            boundary_loops: loops,
            boundary_binding: Vec::new(),
        })
    }

    /// Attach arc-length binding parameters, parallel to `boundary_loops`.
    pub fn with_binding(mut self, binding: Vec<Vec<f64>>) -> Result<Self> {
        if binding.len() != self.boundary_loops.len()
            || binding
                .iter()
                .zip(&self.boundary_loops)
                .any(|(b, l)| b.len() != l.len())
        {
            return Err(Error::InvalidInput(
                "binding must be parallel to boundary loops".into(),
            ));
        }
        self.boundary_binding = binding;
        Ok(self)
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_loops.is_empty()
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// Euler characteristic `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Signed enclosed volume by the divergence theorem; meaningful for
    /// closed meshes (positive for outward orientation).
    pub fn enclosed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (
                    self.vertices[t[0]].coords,
                    self.vertices[t[1]].coords,
                    self.vertices[t[2]].coords,
                );
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        triangle_area(&self.vertices, t)
    }

    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

pub(crate) fn triangle_area(vertices: &[Point3<f64>], t: &[usize; 3]) -> f64 {
    let e1 = vertices[t[1]] - vertices[t[0]];
    let e2 = vertices[t[2]] - vertices[t[0]];
    0.5 * e1.cross(&e2).norm()
}

fn bounding_box_diag(vertices: &[Point3<f64>]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt()
}

/// Total surface area: sum of triangle areas.
pub fn area(k: &SurfaceMesh) -> f64 {
    k.triangles.iter().map(|t| k.triangle_area(t)).sum()
}

/// Film energy `2σ·area` (both faces of the liquid film carry tension σ).
pub fn film_energy(k: &SurfaceMesh, sigma: f64) -> f64 {
    2.0 * sigma * area(k)
}

/// Shared solver knobs for the film solvers and optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub max_iters: usize,
    pub gradient_tolerance: f64,
    /// Backtracking shrink factor in (0, 1).
    pub shrink: f64,
    /// Remeshing thresholds relative to the target edge length.
    pub remesh_min_rel: f64,
    pub remesh_max_rel: f64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iters: 2000,
            gradient_tolerance: 1e-6,
            shrink: 0.5,
            remesh_min_rel: 0.5,
            remesh_max_rel: 2.0,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be positive".into()));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidInput("gradient_tolerance must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidInput("shrink must lie in (0, 1)".into()));
        }
        if !(self.remesh_min_rel > 0.0 && self.remesh_max_rel > self.remesh_min_rel) {
            return Err(Error::InvalidInput("remesh thresholds must satisfy 0 < min < max".into()));
        }
        Ok(())
    }
}
