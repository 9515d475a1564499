//! Disc-type Plateau solver in the Douglas formulation: minimize the
//! Dirichlet energy of maps from a fixed flat reference disc, alternating
//! harmonic interior solves with a golden-section sweep over the boundary
//! parametrization (three boundary vertices stay pinned to factor out the
//! Möbius group). At the minimum the map is near-conformal and the energy
//! matches the spanning area.

use super::{SurfaceMesh, SolverParams};
use crate::linalg::{golden_section_min, pcg, CsrMatrix};
use crate::topology::Polyline;
use crate::{Error, Result};
use nalgebra::Point3;

/// First vertex index of ring `j` (ring 0 is the center vertex).
fn ring_start(j: usize) -> usize {
    if j == 0 {
        0
    } else {
        1 + 3 * j * (j - 1)
    }
}

/// Flat triangulated disc in the z = 0 plane: `rings` concentric rings,
/// ring `j` carrying `6j` vertices at radius `radius·j/rings`, joined by an
/// angular-merge triangulation (`6·rings²` triangles).
pub fn disc_mesh(rings: usize, radius: f64) -> Result<SurfaceMesh> {
    if rings < 1 {
        return Err(Error::InvalidInput("disc needs at least one ring".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!(
            "disc radius must be positive, got {radius}"
        )));
    }
    let mut vertices = vec![Point3::origin()];
    for j in 1..=rings {
        let r = radius * j as f64 / rings as f64;
        let n = 6 * j;
        for k in 0..n {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            vertices.push(Point3::new(r * a.cos(), r * a.sin(), 0.0));
        }
    }
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    // Center fan.
    for k in 0..6 {
        triangles.push([1 + k, 1 + (k + 1) % 6, 0]);
    }
    // Angular merge between ring j (inner) and ring j+1 (outer).
    for j in 1..rings {
        let (na, nb) = (6 * j, 6 * (j + 1));
        let (sa, sb) = (ring_start(j), ring_start(j + 1));
        let (mut ia, mut ib) = (0usize, 0usize);
        while ia < na || ib < nb {
            let next_a = (ia + 1) as f64 / na as f64;
            let next_b = (ib + 1) as f64 / nb as f64;
            if ib < nb && (ia == na || next_b <= next_a) {
                triangles.push([sb + ib, sb + (ib + 1) % nb, sa + ia % na]);
                ib += 1;
            } else {
                triangles.push([sa + (ia + 1) % na, sa + ia, sb + ib % nb]);
                ia += 1;
            }
        }
    }
    SurfaceMesh::from_triangles(vertices, triangles)
}

/// Cotangent edge weights of a mesh: `(i, j, w)` with `i < j` and
/// `w = ½(cot α + cot β)` over the angles opposite the edge.
fn cotan_weights(mesh: &SurfaceMesh) -> Vec<(usize, usize, f64)> {
    let mut acc: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for tri in &mesh.triangles {
        for c in 0..3 {
            let k = tri[c];
            let i = tri[(c + 1) % 3];
            let j = tri[(c + 2) % 3];
            let e1 = mesh.vertices[i] - mesh.vertices[k];
            let e2 = mesh.vertices[j] - mesh.vertices[k];
            let cross = e1.cross(&e2).norm().max(1e-300);
            let cot = e1.dot(&e2) / cross;
            let key = (i.min(j), i.max(j));
            *acc.entry(key).or_insert(0.0) += 0.5 * cot;
        }
    }
    acc.into_iter().map(|((i, j), w)| (i, j, w)).collect()
}

/// Dirichlet energy of the piecewise-linear map sending the reference mesh
/// vertices to `positions`: `½ Σ_edges w_ij |u_i − u_j|²` with cotangent
/// weights taken on the reference.
pub fn dirichlet_energy(positions: &[Point3<f64>], reference: &SurfaceMesh) -> Result<f64> {
    if positions.len() != reference.vertices.len() {
        return Err(Error::InvalidInput(format!(
            "{} positions for {} reference vertices",
            positions.len(),
            reference.vertices.len()
        )));
    }
    let e = cotan_weights(reference)
        .iter()
        .map(|&(i, j, w)| 0.5 * w * (positions[i] - positions[j]).norm_squared())
        .sum::<f64>();
    crate::ensure_finite(e, "dirichlet energy")
}

/// Conformal defect `D[u] − A[u] ≥ 0`, zero exactly for weakly conformal
/// maps; measures how far the parametrization is from isothermal.
pub fn conformal_defect(positions: &[Point3<f64>], reference: &SurfaceMesh) -> Result<f64> {
    let d = dirichlet_energy(positions, reference)?;
    let a: f64 = reference
        .triangles
        .iter()
        .map(|t| {
            0.5 * (positions[t[1]] - positions[t[0]])
                .cross(&(positions[t[2]] - positions[t[0]]))
                .norm()
        })
        .sum();
    Ok(d - a)
}

/// Boundary parametrization state of the disc solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscParam {
    pub rings: usize,
    /// Arc-length position on the boundary curve of each boundary vertex,
    /// in ring order (increasing angle on the reference disc).
    pub boundary_params: Vec<f64>,
}

/// Result of the disc-type Plateau solve.
#[derive(Debug, Clone)]
pub struct DiscSolution {
    pub mesh: SurfaceMesh,
    pub param: DiscParam,
    pub dirichlet: f64,
    pub area: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(iter, objective, improvement, flag)` rows for the trace file.
    pub trace: Vec<(usize, f64, f64, String)>,
}

struct DiscOperator {
    /// First boundary vertex index; interior vertices are `0..rs`.
    rs: usize,
    edges: Vec<(usize, usize, f64)>,
    /// Interior Laplacian (SPD) over interior unknowns.
    lap: CsrMatrix,
    /// Neighbours (vertex id, weight) of each boundary vertex.
    boundary_nbrs: Vec<Vec<(usize, f64)>>,
}

impl DiscOperator {
    fn build(reference: &SurfaceMesh, nb: usize) -> Self {
        let nv = reference.vertices.len();
        let rs = nv - nb;
        let edges = cotan_weights(reference);
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut boundary_nbrs = vec![Vec::new(); nb];
        for &(i, j, w) in &edges {
            match (i < rs, j < rs) {
                (true, true) => {
                    triplets.push((i, i, w));
                    triplets.push((j, j, w));
                    triplets.push((i, j, -w));
                    triplets.push((j, i, -w));
                }
                (true, false) => {
                    triplets.push((i, i, w));
                    boundary_nbrs[j - rs].push((i, w));
                }
                (false, true) => {
                    triplets.push((j, j, w));
                    boundary_nbrs[i - rs].push((j, w));
                }
                (false, false) => {
                    boundary_nbrs[i - rs].push((j, w));
                    boundary_nbrs[j - rs].push((i, w));
                }
            }
        }
        let lap = CsrMatrix::from_triplets(rs, &triplets);
        DiscOperator {
            rs,
            edges,
            lap,
            boundary_nbrs,
        }
    }

    /// Replace interior positions by the harmonic extension of the boundary.
    fn solve_interior(&self, u: &mut [Point3<f64>]) -> Result<()> {
        let rs = self.rs;
        let mut rhs = vec![0.0f64; rs];
        for axis in 0..3 {
            rhs.iter_mut().for_each(|v| *v = 0.0);
            for &(i, j, w) in &self.edges {
                if i < rs && j >= rs {
                    rhs[i] += w * u[j][axis];
                } else if j < rs && i >= rs {
                    rhs[j] += w * u[i][axis];
                }
            }
            let mut x: Vec<f64> = (0..rs).map(|i| u[i][axis]).collect();
            if pcg(&self.lap, &rhs, &mut x, 1e-12, 4000).is_none() {
                return Err(Error::NoConvergence {
                    solver: "disc harmonic interior",
                    detail: "conjugate gradients stalled on the Laplace system".into(),
                });
            }
            for i in 0..rs {
                u[i][axis] = x[i];
            }
        }
        Ok(())
    }

    fn dirichlet(&self, u: &[Point3<f64>]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j, w)| 0.5 * w * (u[i] - u[j]).norm_squared())
            .sum()
    }

    fn area(&self, u: &[Point3<f64>], triangles: &[[usize; 3]]) -> f64 {
        triangles
            .iter()
            .map(|t| 0.5 * (u[t[1]] - u[t[0]]).cross(&(u[t[2]] - u[t[0]])).norm())
            .sum()
    }
}

/// Solve the disc-type Plateau problem for a closed boundary curve:
/// minimize Dirichlet energy over interior positions and over the boundary
/// parametrization. Returns the minimizing mesh with its boundary binding.
pub fn solve_disc_plateau(
    boundary: &Polyline,
    rings: usize,
    params: &SolverParams,
) -> Result<DiscSolution> {
    params.validate()?;
    if !boundary.closed() {
        return Err(Error::InvalidInput(
            "disc Plateau solve needs a closed boundary curve".into(),
        ));
    }
    if rings < 2 {
        return Err(Error::InvalidInput(
            "disc Plateau solve needs at least 2 rings".into(),
        ));
    }
    let reference = disc_mesh(rings, 1.0)?;
    let nb = 6 * rings;
    let op = DiscOperator::build(&reference, nb);
    let rs = op.rs;
    let total_len = boundary.total_length();

    // Proportional initial parametrization; three pins factor out Möbius
    // reparametrizations of the disc.
    let mut t: Vec<f64> = (0..nb)
        .map(|k| total_len * k as f64 / nb as f64)
        .collect();
    let pinned = [0, nb / 3, 2 * nb / 3];
    let mut u: Vec<Point3<f64>> = reference.vertices.clone();
    for k in 0..nb {
        u[rs + k] = boundary.point_at_arclength(t[k]);
    }
    // Reasonable interior start: shrink the boundary centroid-ward so the
    // first PCG solve converges quickly.
    let centroid = {
        let mut c = nalgebra::Vector3::zeros();
        for k in 0..nb {
            c += u[rs + k].coords;
        }
        Point3::from(c / nb as f64)
    };
    for i in 0..rs {
        u[i] = centroid;
    }
    op.solve_interior(&mut u)?;

    let mut trace: Vec<(usize, f64, f64, String)> = Vec::new();
    let mut energy = op.dirichlet(&u);
    let mut converged = false;
    let mut iterations = 0;
    let param_tol = 1e-10 * total_len;
    for iter in 0..params.max_iters {
        iterations = iter + 1;
        // Boundary sweep: move each unpinned vertex within the window set
        // by its ring neighbours.
        for k in 0..nb {
            if pinned.contains(&k) {
                continue;
            }
            let lo = t[k - 1]; // k ≥ 1 since vertex 0 is pinned
            let hi = if k + 1 < nb { t[k + 1] } else { total_len };
            if hi - lo < 4.0 * param_tol {
                continue;
            }
            let nbrs = &op.boundary_nbrs[k];
            let local = |tt: f64| -> f64 {
                let p = boundary.point_at_arclength(tt);
                nbrs.iter()
                    .map(|&(j, w)| 0.5 * w * (p - u[j]).norm_squared())
                    .sum()
            };
            let best = golden_section_min(local, lo + param_tol, hi - param_tol, param_tol, 80);
            t[k] = best;
            u[rs + k] = boundary.point_at_arclength(best);
        }
        op.solve_interior(&mut u)?;
        let new_energy = op.dirichlet(&u);
        let drop = energy - new_energy;
        trace.push((iter, new_energy, drop.max(0.0), "ok".into()));
        energy = new_energy;
        if drop.abs() <= params.gradient_tolerance * energy.max(1e-300) {
            converged = true;
            break;
        }
    }

    let area = op.area(&u, &reference.triangles);
    let mesh = SurfaceMesh::from_triangles(u, reference.triangles.clone())?
        .with_binding(vec![t.clone()])?;
    Ok(DiscSolution {
        mesh,
        param: DiscParam {
            rings,
            boundary_params: t,
        },
        dirichlet: energy,
        area,
        iterations,
        converged,
        trace,
    })
}
