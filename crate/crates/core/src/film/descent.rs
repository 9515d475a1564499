//! Parametric Plateau solver: preconditioned area-gradient descent on a
//! triangle mesh with fixed boundary vertices, periodic remeshing
//! (splits, collapses, flips — none of which ever increase the area),
//! and neck-collapse detection for annular films whose infimum is the
//! degenerate (Goldschmidt) configuration.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use super::{area, SolverParams, SurfaceMesh};
use crate::{Error, Result};

/// Result of a mesh descent run.
#[derive(Debug, Clone)]
pub struct MeshSolution {
    pub mesh: SurfaceMesh,
    pub area: f64,
    pub iterations: usize,
    /// The film pinched to a thread between its boundary loops.
    pub collapsed: bool,
    /// The line search stopped making progress before the gradient window
    /// criterion was met.
    pub stalled: bool,
    pub trace: Vec<(usize, f64, f64, String)>,
}

/// Total area and its gradient with respect to every vertex position.
/// The per-triangle gradient at vertex `a` of triangle `(a, b, c)` is
/// `½ n̂ × (c − b)`.
fn area_and_gradient(
    pos: &[Point3<f64>],
    tris: &[[usize; 3]],
    grad: &mut [Vector3<f64>],
) -> f64 {
    for g in grad.iter_mut() {
        *g = Vector3::zeros();
    }
    let mut total = 0.0;
    for t in tris {
        let (a, b, c) = (pos[t[0]], pos[t[1]], pos[t[2]]);
        let n = (b - a).cross(&(c - a));
        let nn = n.norm();
        total += 0.5 * nn;
        if nn > 1e-300 {
            let nh = n / nn;
            grad[t[0]] += 0.5 * nh.cross(&(c - b));
            grad[t[1]] += 0.5 * nh.cross(&(a - c));
            grad[t[2]] += 0.5 * nh.cross(&(b - a));
        }
    }
    total
}

/// Lumped vertex masses: one third of the incident triangle area.
fn lumped_mass(pos: &[Point3<f64>], tris: &[[usize; 3]], mass: &mut [f64]) {
    for m in mass.iter_mut() {
        *m = 0.0;
    }
    for t in tris {
        let a = 0.5
            * (pos[t[1]] - pos[t[0]])
                .cross(&(pos[t[2]] - pos[t[0]]))
                .norm();
        for &v in t {
            mass[v] += a / 3.0;
        }
    }
}

fn mean_edge_length(pos: &[Point3<f64>], tris: &[[usize; 3]]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (key, _) in edge_adjacency(tris) {
        sum += (pos[key.0] - pos[key.1]).norm();
        count += 1;
    }
    sum / count.max(1) as f64
}

/// Edge → adjacent triangle indices, keyed by the sorted vertex pair.
fn edge_adjacency(tris: &[[usize; 3]]) -> BTreeMap<(usize, usize), Vec<usize>> {
    let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (ti, t) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            map.entry(key).or_default().push(ti);
        }
    }
    map
}

/// Split every interior edge longer than `hi`, at most one split per
/// triangle per pass. Midpoint splits leave the total area unchanged.
fn split_pass(
    pos: &mut Vec<Point3<f64>>,
    tris: &mut Vec<[usize; 3]>,
    fixed: &mut Vec<bool>,
    hi: f64,
) -> bool {
    let map = edge_adjacency(tris);
    let mut candidates: Vec<(f64, (usize, usize))> = map
        .iter()
        .filter(|(_, ts)| ts.len() == 2)
        .map(|(&e, _)| ((pos[e.0] - pos[e.1]).norm(), e))
        .filter(|&(len, _)| len > hi)
        .collect();
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut claimed = vec![false; tris.len()];
    // edge → index of the midpoint vertex created for it
    let mut splits: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (_, e) in candidates {
        if map[&e].iter().any(|&t| claimed[t]) {
            continue;
        }
        for &t in &map[&e] {
            claimed[t] = true;
        }
        let mid = Point3::from((pos[e.0].coords + pos[e.1].coords) / 2.0);
        pos.push(mid);
        fixed.push(false);
        splits.insert(e, pos.len() - 1);
    }
    if splits.is_empty() {
        return false;
    }
    let mut out: Vec<[usize; 3]> = Vec::with_capacity(tris.len() + 2 * splits.len());
    for t in tris.iter() {
        let mut done = false;
        for k in 0..3 {
            let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let key = (a.min(b), a.max(b));
            if let Some(&m) = splits.get(&key) {
                out.push([a, m, c]);
                out.push([m, b, c]);
                done = true;
                break;
            }
        }
        if !done {
            out.push(*t);
        }
    }
    *tris = out;
    true
}

/// Collapse interior edges shorter than `lo` when this removes a free
/// vertex, keeps the mesh manifold (link condition), and does not
/// increase the local area.
fn collapse_pass(
    pos: &mut Vec<Point3<f64>>,
    tris: &mut Vec<[usize; 3]>,
    fixed: &mut Vec<bool>,
    lo: f64,
) -> bool {
    let map = edge_adjacency(tris);
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); pos.len()];
    for (ti, t) in tris.iter().enumerate() {
        for &v in t {
            incident[v].push(ti);
        }
    }
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); pos.len()];
    for (&(a, b), _) in &map {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    let mut candidates: Vec<(f64, (usize, usize))> = map
        .iter()
        .filter(|(&(a, b), ts)| ts.len() == 2 && (!fixed[a] || !fixed[b]))
        .map(|(&e, _)| ((pos[e.0] - pos[e.1]).norm(), e))
        .filter(|&(len, _)| len < lo)
        .collect();
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut claimed = vec![false; tris.len()];
    let mut removed: Vec<Option<usize>> = vec![None; pos.len()]; // removed → survivor
    let mut changed = false;
    for (_, (a, b)) in candidates {
        let local: Vec<usize> = {
            let mut l = incident[a].clone();
            l.extend_from_slice(&incident[b]);
            l.sort_unstable();
            l.dedup();
            l
        };
        if local.iter().any(|&t| claimed[t]) {
            continue;
        }
        // Link condition: shared neighbors must be exactly the two
        // vertices opposite the collapsing edge.
        let shared: Vec<usize> = neighbors[a]
            .iter()
            .filter(|v| neighbors[b].contains(v))
            .copied()
            .collect();
        let mut opposite: Vec<usize> = map[&(a.min(b), a.max(b))]
            .iter()
            .flat_map(|&t| tris[t].iter().copied())
            .filter(|&v| v != a && v != b)
            .collect();
        opposite.sort_unstable();
        let mut shared_sorted = shared.clone();
        shared_sorted.sort_unstable();
        if shared_sorted != opposite || opposite.len() != 2 {
            continue;
        }
        let (survivor, gone) = if fixed[a] {
            (a, b)
        } else if fixed[b] {
            (b, a)
        } else {
            (a.min(b), a.max(b))
        };
        let target = if fixed[survivor] {
            pos[survivor]
        } else {
            Point3::from((pos[a].coords + pos[b].coords) / 2.0)
        };
        // Simulate: local area before vs after.
        let mut before = 0.0;
        let mut after = 0.0;
        let mut valid = true;
        for &ti in &local {
            let t = tris[ti];
            let p = |v: usize| pos[v];
            before += 0.5 * (p(t[1]) - p(t[0])).cross(&(p(t[2]) - p(t[0]))).norm();
            let nt: Vec<usize> = t
                .iter()
                .map(|&v| if v == gone { survivor } else { v })
                .collect();
            if nt[0] == nt[1] || nt[1] == nt[2] || nt[2] == nt[0] {
                continue; // triangle vanishes with the edge
            }
            let q = |v: usize| if v == survivor { target } else { pos[v] };
            let n = (q(nt[1]) - q(nt[0])).cross(&(q(nt[2]) - q(nt[0])));
            let a2 = 0.5 * n.norm();
            if a2 < 1e-14 * lo * lo {
                valid = false;
                break;
            }
            after += a2;
        }
        if !valid || after > before {
            continue;
        }
        for &t in &local {
            claimed[t] = true;
        }
        removed[gone] = Some(survivor);
        pos[survivor] = target;
        changed = true;
    }
    if !changed {
        return false;
    }
    // Compact: drop removed vertices and degenerate triangles.
    let mut remap = vec![usize::MAX; pos.len()];
    let mut new_pos = Vec::with_capacity(pos.len());
    let mut new_fixed = Vec::with_capacity(pos.len());
    for v in 0..pos.len() {
        if removed[v].is_none() {
            remap[v] = new_pos.len();
            new_pos.push(pos[v]);
            new_fixed.push(fixed[v]);
        }
    }
    let resolve = |v: usize| removed[v].unwrap_or(v);
    let mut new_tris = Vec::with_capacity(tris.len());
    for t in tris.iter() {
        let m = [
            remap[resolve(t[0])],
            remap[resolve(t[1])],
            remap[resolve(t[2])],
        ];
        if m[0] != m[1] && m[1] != m[2] && m[2] != m[0] {
            new_tris.push(m);
        }
    }
    *pos = new_pos;
    *fixed = new_fixed;
    *tris = new_tris;
    true
}

/// Flip interior edges whose flipped diagonal strictly decreases the area
/// of the two triangles sharing them.
fn flip_pass(pos: &[Point3<f64>], tris: &mut [[usize; 3]]) -> bool {
    let map = edge_adjacency(tris);
    let mut claimed = vec![false; tris.len()];
    let mut changed = false;
    for (&(a, b), ts) in &map {
        if ts.len() != 2 || claimed[ts[0]] || claimed[ts[1]] {
            continue;
        }
        let (t1, t2) = (ts[0], ts[1]);
        let opp = |t: [usize; 3]| t.into_iter().find(|&v| v != a && v != b).unwrap();
        let (c, d) = (opp(tris[t1]), opp(tris[t2]));
        if c == d || map.contains_key(&(c.min(d), c.max(d))) {
            continue;
        }
        let tri_area = |x: usize, y: usize, z: usize| {
            0.5 * (pos[y] - pos[x]).cross(&(pos[z] - pos[x])).norm()
        };
        let old = tri_area(tris[t1][0], tris[t1][1], tris[t1][2])
            + tri_area(tris[t2][0], tris[t2][1], tris[t2][2]);
        // Orient the new triangles around the quad: t1 traverses the edge
        // in some direction (u, v) with opposite c; the flipped pair is
        // (u, d, c) and (v, c, d), which keeps the winding consistent.
        let (u, v) = {
            let t = tris[t1];
            let k = (0..3).find(|&k| {
                (t[k] == a && t[(k + 1) % 3] == b) || (t[k] == b && t[(k + 1) % 3] == a)
            });
            match k {
                Some(k) => (t[k], t[(k + 1) % 3]),
                None => continue,
            }
        };
        let new = tri_area(u, d, c) + tri_area(v, c, d);
        if new < old * (1.0 - 1e-12)
            && tri_area(u, d, c) > 1e-300
            && tri_area(v, c, d) > 1e-300
        {
            tris[t1] = [u, d, c];
            tris[t2] = [v, c, d];
            claimed[t1] = true;
            claimed[t2] = true;
            changed = true;
        }
    }
    changed
}

/// One remesh sweep: split long interior edges, collapse short ones, flip
/// where that lowers the area. Returns whether anything changed.
fn remesh_once(
    pos: &mut Vec<Point3<f64>>,
    tris: &mut Vec<[usize; 3]>,
    fixed: &mut Vec<bool>,
    lo: f64,
    hi: f64,
) -> bool {
    let mut changed = split_pass(pos, tris, fixed, hi);
    changed |= collapse_pass(pos, tris, fixed, lo);
    changed |= flip_pass(pos, tris);
    changed
}

/// Minimize the area of `initial` by gradient descent, keeping every
/// boundary vertex fixed. The boundary loops must be non-empty.
pub fn solve_mesh_plateau(initial: &SurfaceMesh, params: &SolverParams) -> Result<MeshSolution> {
    params.validate()?;
    if initial.boundary_loops.is_empty() {
        return Err(Error::InvalidInput(
            "mesh descent needs a mesh with boundary; a closed surface shrinks to nothing"
                .into(),
        ));
    }
    let mut pos = initial.vertices.clone();
    let mut tris = initial.triangles.clone();
    let mut fixed = vec![false; pos.len()];
    for bl in &initial.boundary_loops {
        for &v in bl {
            fixed[v] = true;
        }
    }
    let target_edge = mean_edge_length(&pos, &tris);

    // Neck detection between the first two boundary loops (constant data:
    // boundary vertices never move).
    let neck_axis = if initial.boundary_loops.len() >= 2 {
        let centroid = |l: &Vec<usize>| {
            Point3::from(
                l.iter().map(|&v| pos[v].coords).sum::<Vector3<f64>>() / l.len() as f64,
            )
        };
        let c1 = centroid(&initial.boundary_loops[0]);
        let c2 = centroid(&initial.boundary_loops[1]);
        let axis = c2 - c1;
        if axis.norm() > 1e-12 {
            let axis = axis.normalize();
            let scale = initial
                .boundary_loops
                .iter()
                .flatten()
                .map(|&v| {
                    let r = pos[v] - c1;
                    (r - axis * r.dot(&axis)).norm()
                })
                .fold(0.0f64, f64::max);
            Some((c1, axis, scale))
        } else {
            None
        }
    } else {
        None
    };

    let mut grad = vec![Vector3::zeros(); pos.len()];
    let mut mass = vec![0.0f64; pos.len()];
    let mut current = area_and_gradient(&pos, &tris, &mut grad);
    let mut step = 0.25 * target_edge * target_edge;
    let step_cap = 100.0 * target_edge * target_edge;
    let mut trace: Vec<(usize, f64, f64, String)> = Vec::new();
    let mut window: Vec<f64> = vec![current];
    let mut collapsed = false;
    let mut stalled = false;
    let mut stall_count = 0usize;
    let mut pinch_count = 0usize;
    let mut iterations = 0usize;

    for iter in 0..params.max_iters {
        iterations = iter + 1;
        lumped_mass(&pos, &tris, &mut mass);
        let mut grad_sq = 0.0;
        let mut n_free = 0usize;
        for v in 0..pos.len() {
            if !fixed[v] {
                grad_sq += grad[v].norm_squared();
                n_free += 1;
            }
        }
        let grad_rms = (grad_sq / n_free.max(1) as f64).sqrt();

        // Backtracking line search on the preconditioned direction.
        let mut accepted = false;
        let mut t = step;
        for _ in 0..40 {
            let mut trial = pos.clone();
            for v in 0..pos.len() {
                if !fixed[v] && mass[v] > 1e-300 {
                    trial[v] -= grad[v] * (t / mass[v]);
                }
            }
            let mut g_trial = vec![Vector3::zeros(); trial.len()];
            let a_trial = area_and_gradient(&trial, &tris, &mut g_trial);
            if a_trial.is_finite() && a_trial < current {
                pos = trial;
                grad = g_trial;
                current = a_trial;
                step = (t * 1.5).min(step_cap);
                accepted = true;
                break;
            }
            t *= params.shrink;
            if t < 1e-12 * target_edge * target_edge {
                break;
            }
        }
        trace.push((iter, current, grad_rms, "ok".into()));
        if accepted {
            stall_count = 0;
        } else {
            stall_count += 1;
            if stall_count >= 3 {
                // No decreasing step exists: either at the discrete
                // minimum (tiny gradient) or genuinely stuck.
                stalled = grad_rms > 1e-8 * target_edge;
                break;
            }
        }

        // Neck detection.
        if let Some((origin, axis, scale)) = &neck_axis {
            let mut neck = f64::INFINITY;
            for v in 0..pos.len() {
                if !fixed[v] {
                    let r = pos[v] - origin;
                    neck = neck.min((r - axis * r.dot(axis)).norm());
                }
            }
            if neck < 0.05 * scale {
                pinch_count += 1;
                if pinch_count >= 10 {
                    collapsed = true;
                    trace.push((iter, current, grad_rms, "collapse".into()));
                    break;
                }
            } else {
                pinch_count = 0;
            }
        }

        // Window-based convergence: relative drop over the last 10
        // accepted areas. Converging on a mesh that still violates the
        // remesh bounds does not count — enforce the resolution contract
        // first and only stop once a sweep changes nothing.
        window.push(current);
        let mut want_remesh = (iter + 1) % 25 == 0;
        let mut converged = false;
        if window.len() > 10 {
            window.remove(0);
            let drop = window[0] - current;
            if drop <= params.gradient_tolerance * current.max(1e-300) {
                converged = true;
                want_remesh = true;
            }
        }

        if want_remesh {
            let changed = remesh_once(
                &mut pos,
                &mut tris,
                &mut fixed,
                params.remesh_min_rel * target_edge,
                params.remesh_max_rel * target_edge,
            );
            if changed {
                grad = vec![Vector3::zeros(); pos.len()];
                mass = vec![0.0; pos.len()];
                current = area_and_gradient(&pos, &tris, &mut grad);
                trace.push((iter, current, grad_rms, "remesh".into()));
                window.clear();
                window.push(current);
            } else if converged {
                break;
            }
        }
    }

    let mesh = SurfaceMesh::from_triangles(pos, tris)?;
    let final_area = area(&mesh);
    Ok(MeshSolution {
        mesh,
        area: final_area,
        iterations,
        collapsed,
        stalled,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::film::disc_mesh;
    use crate::linalg::bisect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Triangulated open cylinder of radius `r`, height `h`, axis z.
    fn cylinder_mesh(r: f64, h: f64, n_around: usize, n_rings: usize) -> SurfaceMesh {
        let mut verts = Vec::new();
        for k in 0..=n_rings {
            let z = -h / 2.0 + h * k as f64 / n_rings as f64;
            for i in 0..n_around {
                let phi = 2.0 * std::f64::consts::PI * i as f64 / n_around as f64;
                verts.push(Point3::new(r * phi.cos(), r * phi.sin(), z));
            }
        }
        let mut tris = Vec::new();
        for k in 0..n_rings {
            for i in 0..n_around {
                let a = k * n_around + i;
                let b = k * n_around + (i + 1) % n_around;
                let c = (k + 1) * n_around + i;
                let d = (k + 1) * n_around + (i + 1) % n_around;
                tris.push([a, b, d]);
                tris.push([a, d, c]);
            }
        }
        SurfaceMesh::from_triangles(verts, tris).unwrap()
    }

    /// Stable catenoid waist radius c over boundary circles of radius `r`
    /// at separation `h`: the larger root of c·cosh(h/(2c)) = r.
    fn catenoid_waist(r: f64, h: f64) -> f64 {
        bisect(
            |c| c * (h / (2.0 * c)).cosh() - r,
            0.45 * r,
            1.5 * r,
            1e-14,
        )
        .unwrap()
    }

    fn catenoid_area(r: f64, h: f64) -> f64 {
        let c = catenoid_waist(r, h);
        std::f64::consts::PI * c * (h + c * (h / c).sinh())
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let base = disc_mesh(3, 1.0).unwrap();
        let mut pos = base.vertices.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_41);
        let boundary: std::collections::BTreeSet<usize> =
            base.boundary_loops[0].iter().copied().collect();
        for (v, p) in pos.iter_mut().enumerate() {
            if !boundary.contains(&v) {
                p.z += 0.3 * (p.x * 3.0).sin() * (p.y * 2.0).cos();
                p.x += 0.05 * (rng.gen::<f64>() - 0.5);
            }
        }
        let mut grad = vec![Vector3::zeros(); pos.len()];
        area_and_gradient(&pos, &base.triangles, &mut grad);
        let eps = 1e-6;
        for v in [1usize, 4, 7, 10] {
            for axis in 0..3 {
                let mut hi = pos.clone();
                let mut lo = pos.clone();
                hi[v][axis] += eps;
                lo[v][axis] -= eps;
                let mut scratch = vec![Vector3::zeros(); pos.len()];
                let fd = (area_and_gradient(&hi, &base.triangles, &mut scratch)
                    - area_and_gradient(&lo, &base.triangles, &mut scratch))
                    / (2.0 * eps);
                assert!(
                    (grad[v][axis] - fd).abs() < 1e-7,
                    "vertex {v} axis {axis}: analytic {} vs fd {fd}",
                    grad[v][axis]
                );
            }
        }
    }

    #[test]
    fn warped_disc_flattens() {
        let base = disc_mesh(6, 1.0).unwrap();
        let mut verts = base.vertices.clone();
        let boundary: std::collections::BTreeSet<usize> =
            base.boundary_loops[0].iter().copied().collect();
        for (v, p) in verts.iter_mut().enumerate() {
            if !boundary.contains(&v) {
                let r2 = p.x * p.x + p.y * p.y;
                p.z = 0.4 * (1.0 - r2) * (2.0 * p.x).cos();
            }
        }
        let warped = SurfaceMesh::from_triangles(verts, base.triangles.clone()).unwrap();
        let a0 = area(&warped);
        let sol = solve_mesh_plateau(&warped, &SolverParams::default()).unwrap();
        assert!(!sol.collapsed);
        assert!(sol.area < a0);
        // The flat n-gon is the unique minimizer; allow the usual
        // polygonal deficit relative to π.
        let ngon = area(&base);
        assert!(
            (sol.area - ngon).abs() < 2e-3 * ngon,
            "area {} vs flat {}",
            sol.area,
            ngon
        );
        for (v, p) in sol.mesh.vertices.iter().enumerate() {
            if v < warped.vertices.len() {
                assert!(p.z.abs() < 0.05, "vertex {v} keeps z = {}", p.z);
            }
        }
    }

    #[test]
    fn catenoid_area_matches_closed_form() {
        let (r, h) = (1.0, 0.8);
        let init = cylinder_mesh(r, h, 32, 10);
        let params = SolverParams {
            max_iters: 6000,
            gradient_tolerance: 1e-9,
            ..SolverParams::default()
        };
        let sol = solve_mesh_plateau(&init, &params).unwrap();
        assert!(!sol.collapsed, "catenoid at h/r = 0.8 is stable");
        let exact = catenoid_area(r, h);
        assert!(
            (sol.area - exact).abs() < 0.01 * exact,
            "area {} vs catenoid {exact}",
            sol.area
        );
        // Waist radius of the interior matches the closed-form c.
        let c = catenoid_waist(r, h);
        let waist = sol
            .mesh
            .vertices
            .iter()
            .map(|p| (p.x * p.x + p.y * p.y).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(
            (waist - c).abs() < 0.03 * c,
            "waist {waist} vs closed form {c}"
        );
    }

    #[test]
    fn goldschmidt_regime_is_flagged_as_collapse() {
        // Beyond h/r ≈ 1.325 no catenoid exists; the flow pinches.
        let init = cylinder_mesh(1.0, 1.5, 24, 12);
        let params = SolverParams {
            max_iters: 20000,
            gradient_tolerance: 1e-12,
            ..SolverParams::default()
        };
        let sol = solve_mesh_plateau(&init, &params).unwrap();
        assert!(sol.collapsed, "h/r = 1.5 must pinch");
    }

    #[test]
    fn near_critical_catenoid_still_converges() {
        let (r, h) = (1.0, 1.15);
        let init = cylinder_mesh(r, h, 28, 12);
        let params = SolverParams {
            max_iters: 8000,
            gradient_tolerance: 1e-9,
            ..SolverParams::default()
        };
        let sol = solve_mesh_plateau(&init, &params).unwrap();
        assert!(!sol.collapsed, "h/r = 1.15 is below the critical ratio");
        let exact = catenoid_area(r, h);
        assert!(
            (sol.area - exact).abs() < 0.015 * exact,
            "area {} vs catenoid {exact}",
            sol.area
        );
    }

    #[test]
    fn remesh_splits_long_edges_and_keeps_boundary() {
        let init = cylinder_mesh(1.0, 0.6, 14, 2);
        let n_boundary: usize = init.boundary_loops.iter().map(|l| l.len()).sum();
        // Split threshold below the azimuthal edge length (≈ 0.45 vs mean
        // ≈ 0.43) so the first remesh pass must refine the interior, and a
        // low collapse threshold so the new half-edges survive.
        let params = SolverParams {
            max_iters: 2000,
            remesh_max_rel: 0.9,
            remesh_min_rel: 0.3,
            ..SolverParams::default()
        };
        let sol = solve_mesh_plateau(&init, &params).unwrap();
        let n_boundary_after: usize = sol.mesh.boundary_loops.iter().map(|l| l.len()).sum();
        assert_eq!(n_boundary, n_boundary_after, "boundary vertices are fixed");
        assert!(
            sol.mesh.vertices.len() > init.vertices.len(),
            "long interior edges were split ({} -> {} verts, {} iters, trace tail {:?})",
            init.vertices.len(),
            sol.mesh.vertices.len(),
            sol.iterations,
            &sol.trace[sol.trace.len().saturating_sub(3)..]
        );
        let exact = catenoid_area(1.0, 0.6);
        assert!((sol.area - exact).abs() < 0.03 * exact);
    }

    #[test]
    fn split_and_collapse_keep_area_monotone() {
        let base = cylinder_mesh(1.0, 1.0, 10, 4);
        let mut pos = base.vertices.clone();
        let mut tris = base.triangles.clone();
        let mut fixed = vec![false; pos.len()];
        for l in &base.boundary_loops {
            for &v in l {
                fixed[v] = true;
            }
        }
        let before = {
            let mut g = vec![Vector3::zeros(); pos.len()];
            area_and_gradient(&pos, &tris, &mut g)
        };
        split_pass(&mut pos, &mut tris, &mut fixed, 0.3);
        let after_split = {
            let mut g = vec![Vector3::zeros(); pos.len()];
            area_and_gradient(&pos, &tris, &mut g)
        };
        assert!((after_split - before).abs() < 1e-12 * before);
        collapse_pass(&mut pos, &mut tris, &mut fixed, 0.4);
        let after_collapse = {
            let mut g = vec![Vector3::zeros(); pos.len()];
            area_and_gradient(&pos, &tris, &mut g)
        };
        assert!(after_collapse <= after_split * (1.0 + 1e-12));
        // The remeshed triangulation is still a valid manifold mesh.
        SurfaceMesh::from_triangles(pos, tris).unwrap();
    }

    #[test]
    fn rejects_closed_meshes() {
        let sphere = crate::film::tests::sphere_mesh(2);
        let err = solve_mesh_plateau(&sphere, &SolverParams::default());
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }
}
