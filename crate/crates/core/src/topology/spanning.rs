//! Spanning test (does a loop pierce a film?) and generation of the test
//! loop family that witnesses the spanning class.

use super::{gauss_linking, Polyline, SpanningClassSpec};
use crate::film::SurfaceMesh;
use crate::{Error, Result};
use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Signed volume of the tetrahedron `(a, b, c, d)` (times 6).
fn orient3d(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>, d: &Point3<f64>) -> f64 {
    let u = b - a;
    let v = c - a;
    let w = d - a;
    u.dot(&v.cross(&w))
}

enum SegTri {
    Hit,
    Miss,
    Degenerate,
}

/// Does the open segment `[a, b]` cross the closed triangle `(t0, t1, t2)`?
/// Exact zero orientations (endpoint on the plane, ray through an edge) are
/// reported as degenerate so the caller can jitter and retry.
fn segment_triangle(
    a: &Point3<f64>,
    b: &Point3<f64>,
    t0: &Point3<f64>,
    t1: &Point3<f64>,
    t2: &Point3<f64>,
) -> SegTri {
    let da = orient3d(t0, t1, t2, a);
    let db = orient3d(t0, t1, t2, b);
    if da == 0.0 || db == 0.0 {
        return SegTri::Degenerate;
    }
    if (da > 0.0) == (db > 0.0) {
        return SegTri::Miss;
    }
    let s1 = orient3d(a, b, t0, t1);
    let s2 = orient3d(a, b, t1, t2);
    let s3 = orient3d(a, b, t2, t0);
    if s1 == 0.0 || s2 == 0.0 || s3 == 0.0 {
        return SegTri::Degenerate;
    }
    if (s1 > 0.0) == (s2 > 0.0) && (s2 > 0.0) == (s3 > 0.0) {
        SegTri::Hit
    } else {
        SegTri::Miss
    }
}

/// Whether `loop_` intersects the film `mesh`. The predicate is made robust
/// by deterministic jitter: when a segment/triangle pair lands exactly on a
/// degenerate configuration, the loop is perturbed by a tiny deterministic
/// offset (well below any geometric feature that could flip a transversal
/// answer) and the test reruns.
pub fn spanning_test(mesh: &SurfaceMesh, loop_: &Polyline) -> Result<bool> {
    if !loop_.closed() {
        return Err(Error::InvalidInput(
            "spanning test requires a closed loop".into(),
        ));
    }
    let (lo, hi) = mesh.bounding_box();
    let scale = (hi - lo).norm().max(1e-12);
    // Fixed jitter directions; magnitudes grow but stay tiny against scale.
    let jitters = [
        Vector3::zeros(),
        Vector3::new(1.0, 1.3e-1, 7.7e-2) * (3e-11 * scale),
        Vector3::new(-8.1e-1, 1.0, -2.9e-1) * (1.1e-10 * scale),
        Vector3::new(2.3e-1, -6.1e-1, 1.0) * (4.7e-10 * scale),
        Vector3::new(1.0, -1.0, 1.0) * (2.1e-9 * scale),
    ];
    'attempt: for jitter in &jitters {
        let pts: Vec<Point3<f64>> = loop_.points().iter().map(|p| p + jitter).collect();
        let n = pts.len();
        let mut hit = false;
        for i in 0..n {
            let (a, b) = (&pts[i], &pts[(i + 1) % n]);
            for tri in &mesh.triangles {
                let t0 = &mesh.vertices[tri[0]];
                let t1 = &mesh.vertices[tri[1]];
                let t2 = &mesh.vertices[tri[2]];
                match segment_triangle(a, b, t0, t1, t2) {
                    SegTri::Hit => {
                        hit = true;
                        // Keep scanning only if we still might hit a
                        // degeneracy that invalidates this attempt.
                    }
                    SegTri::Miss => {}
                    SegTri::Degenerate => continue 'attempt,
                }
            }
            if hit {
                return Ok(true);
            }
        }
        return Ok(hit);
    }
    Err(Error::InvalidInput(
        "spanning test degenerate for every jitter offset".into(),
    ))
}

/// Generate `count` loops witnessing the spanning class: meridians around
/// the target midline, each verified to (a) keep the avoidance clearance
/// from every midline and (b) realize the required linking pattern.
pub fn generate_spanning_loops(
    midlines: &[Polyline],
    spec: &SpanningClassSpec,
    count: usize,
    seed: u64,
) -> Result<Vec<Polyline>> {
    spec.validate(midlines.len())?;
    if count == 0 {
        return Ok(Vec::new());
    }
    for m in midlines {
        if !m.closed() {
            return Err(Error::InvalidInput(
                "spanning loops need closed midlines".into(),
            ));
        }
    }
    let targets = spec.targets(midlines.len());
    let target_idx = targets
        .iter()
        .position(|&t| t != 0)
        .expect("validated: one nonzero target");
    let target_sign = targets[target_idx];
    let midline = &midlines[target_idx];
    let total_len = midline.total_length();
    let a_r = spec.avoidance_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_loop = 48;

    let mut loops = Vec::with_capacity(count);
    for j in 0..count {
        let mut placed = None;
        'search: for shift in [0.0, 0.37, 0.71, 0.19, 0.53] {
            let t_arc = total_len * ((j as f64 + 0.3 + shift) / count as f64);
            let anchor = midline.point_at_arclength(t_arc);
            let tangent = midline.tangent_at_arclength(t_arc);
            // Orthonormal basis of the normal plane, randomly rolled so no
            // configuration can defeat every attempt.
            let roll = rng.gen_range(0.0..std::f64::consts::TAU);
            let seed_axis = if tangent.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            let u0 = (seed_axis - tangent * seed_axis.dot(&tangent)).normalize();
            let v0 = tangent.cross(&u0);
            let u = u0 * roll.cos() + v0 * roll.sin();
            let v = tangent.cross(&u);
            for rho_factor in [3.0, 2.2, 1.6, 1.25] {
                let rho = rho_factor * a_r;
                let Ok(candidate) = Polyline::circle_in_plane(anchor, rho, u, v, n_loop) else {
                    continue;
                };
                // Clearance against every midline.
                if midlines
                    .iter()
                    .any(|m| candidate.min_distance_to(m) < a_r)
                {
                    continue;
                }
                // Linking pattern.
                let mut links = Vec::with_capacity(midlines.len());
                let mut ok = true;
                for m in midlines {
                    match gauss_linking(&candidate, m) {
                        Ok(lk) => links.push(lk),
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                if links[target_idx].abs() != 1
                    || links
                        .iter()
                        .enumerate()
                        .any(|(k, &lk)| k != target_idx && lk != 0)
                {
                    continue;
                }
                let candidate = if links[target_idx] == target_sign {
                    candidate
                } else {
                    candidate.reversed()
                };
                placed = Some(candidate);
                break 'search;
            }
        }
        match placed {
            Some(c) => loops.push(c),
            None => {
                return Err(Error::InvalidInput(format!(
                    "could not place spanning loop {j}: no meridian with clearance {a_r} \
                     realizes the linking pattern"
                )))
            }
        }
    }
    Ok(loops)
}
