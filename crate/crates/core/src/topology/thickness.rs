//! Global radius of curvature Δ[x] (minimal circumradius over point triples)
//! and the knot-class guard that certifies two nearby closed curves are
//! ambient-isotopic by walking the straight-line homotopy between them.

use super::Polyline;
use crate::{Error, Result};
use nalgebra::Point3;

/// Circumradius of the triangle `(a, b, c)`; infinite for collinear triples.
fn circumradius(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let bc = c - b;
    let la = bc.norm();
    let lb = ac.norm();
    let lc = ab.norm();
    let cross = ab.cross(&ac).norm();
    if cross <= 1e-14 * lb * lc {
        return f64::INFINITY;
    }
    la * lb * lc / (2.0 * cross)
}

/// Exhaustive minimum over all point triples.
pub(crate) fn gr_exhaustive(pts: &[Point3<f64>]) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let r = circumradius(&pts[i], &pts[j], &pts[k]);
                if r < best {
                    best = r;
                }
            }
        }
    }
    best
}

/// Minimum circumradius with spatial pruning. Uses the bound
/// `R(a, b, c) ≥ max side / 2`: any triple beating the current best has all
/// three points mutually within `2·best`, so for its lowest-index point the
/// other two lie inside the `2·best` ball around it.
fn gr_pruned(pts: &[Point3<f64>]) -> f64 {
    let n = pts.len();
    // Upper bound from consecutive triples (discrete osculating radii).
    let mut best = f64::INFINITY;
    for i in 0..n {
        let r = circumradius(&pts[i], &pts[(i + 1) % n], &pts[(i + 2) % n]);
        if r < best {
            best = r;
        }
    }
    if !best.is_finite() {
        return gr_exhaustive(pts);
    }
    // Hash grid with cell size fixed at the initial bound; the query radius
    // only shrinks as `best` improves, so the grid stays valid.
    let cell = 2.0 * best;
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
        }
    }
    let key = |p: &Point3<f64>| -> (i64, i64, i64) {
        (
            ((p.x - lo.x) / cell).floor() as i64,
            ((p.y - lo.y) / cell).floor() as i64,
            ((p.z - lo.z) / cell).floor() as i64,
        )
    };
    let mut grid: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (idx, p) in pts.iter().enumerate() {
        grid.entry(key(p)).or_default().push(idx);
    }
    let mut neighbors: Vec<usize> = Vec::new();
    for i in 0..n {
        let radius = 2.0 * best;
        let reach = (radius / cell).ceil() as i64;
        let (cx, cy, cz) = key(&pts[i]);
        neighbors.clear();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &j in bucket {
                            if j > i && (pts[j] - pts[i]).norm() < radius {
                                neighbors.push(j);
                            }
                        }
                    }
                }
            }
        }
        neighbors.sort_unstable();
        for (a, &j) in neighbors.iter().enumerate() {
            for &k in &neighbors[a + 1..] {
                if (pts[k] - pts[j]).norm() >= 2.0 * best {
                    continue;
                }
                let r = circumradius(&pts[i], &pts[j], &pts[k]);
                if r < best {
                    best = r;
                }
            }
        }
    }
    best
}

/// Global radius of curvature Δ[x]: the minimum circumradius over all
/// triples of distinct polyline points. Exhaustive up to 400 points, pruned
/// above (identical result, typically far fewer triples).
pub fn global_radius_of_curvature(c: &Polyline) -> Result<f64> {
    let pts = c.points();
    if pts.len() < 3 {
        return Err(Error::InvalidInput(
            "global radius of curvature needs at least 3 points".into(),
        ));
    }
    let r = if pts.len() <= 400 {
        gr_exhaustive(pts)
    } else {
        gr_pruned(pts)
    };
    Ok(r)
}

/// Certify that the straight-line homotopy from `before` to `after` never
/// lets two distant arcs come within `thickness` of each other, which
/// (for curves of that thickness) rules out strand passages and thus a
/// change of knot class. The homotopy is sampled so consecutive frames move
/// every vertex by at most `thickness / 2`.
///
/// Returns `false` as soon as one frame violates the clearance.
pub fn knot_class_guard(before: &Polyline, after: &Polyline, thickness: f64) -> Result<bool> {
    if !(thickness > 0.0) || !thickness.is_finite() {
        return Err(Error::InvalidInput(format!(
            "thickness must be positive, got {thickness}"
        )));
    }
    if !before.closed() || !after.closed() {
        return Err(Error::InvalidInput(
            "knot class guard requires closed curves".into(),
        ));
    }
    let (a, b) = if before.n_points() == after.n_points() {
        (before.clone(), after.clone())
    } else {
        let m = before.n_points().max(after.n_points());
        (before.resampled(m)?, after.resampled(m)?)
    };
    let n = a.n_points();
    let max_move = a
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (q - p).norm())
        .fold(0.0f64, f64::max);
    let steps = ((max_move / (0.5 * thickness)).ceil() as usize).max(1);
    for k in 0..=steps {
        let tau = k as f64 / steps as f64;
        let pts: Vec<Point3<f64>> = a
            .points()
            .iter()
            .zip(b.points())
            .map(|(p, q)| p + (q - p) * tau)
            .collect();
        // Arc positions of segment midpoints for the neighbour window.
        let mut seg_len = vec![0.0f64; n];
        let mut total = 0.0;
        for i in 0..n {
            seg_len[i] = (pts[(i + 1) % n] - pts[i]).norm();
            total += seg_len[i];
        }
        let mut mid_arc = vec![0.0f64; n];
        let mut acc = 0.0;
        for i in 0..n {
            mid_arc[i] = acc + 0.5 * seg_len[i];
            acc += seg_len[i];
        }
        let window = 2.0 * thickness;
        for i in 0..n {
            for j in (i + 1)..n {
                let arc_gap = (mid_arc[j] - mid_arc[i]).abs();
                let arc_gap = arc_gap.min(total - arc_gap);
                if arc_gap - 0.5 * (seg_len[i] + seg_len[j]) <= window {
                    continue;
                }
                let d = super::segment_distance(
                    pts[i],
                    pts[(i + 1) % n],
                    pts[j],
                    pts[(j + 1) % n],
                );
                if d < thickness {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_radius_is_exact() {
        // Any three points of a circle have that circle as circumcircle.
        let c = Polyline::unit_circle_xy(120);
        let r = global_radius_of_curvature(&c).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "Δ of unit circle: {r}");
    }

    #[test]
    fn ellipse_radius_matches_min_osculating() {
        // Convex planar curve: Δ = min local radius of curvature = b²/a.
        let (a, b) = (2.0, 1.0);
        let n = 600; // exercises the pruned path
        let pts: Vec<Point3<f64>> = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                Point3::new(a * t.cos(), b * t.sin(), 0.0)
            })
            .collect();
        let c = Polyline::new(pts, true).unwrap();
        let r = global_radius_of_curvature(&c).unwrap();
        let expect = b * b / a;
        assert!(
            (r - expect).abs() < 1e-2 * expect,
            "Δ = {r}, expected ≈ {expect}"
        );
    }

    #[test]
    fn stadium_radius_is_half_the_gap() {
        // Stadium: strands at distance d joined by semicircular caps of
        // radius d/2. Δ = d/2: any three sampled cap points lie on the cap
        // circle exactly, strand triples are collinear, and mixed triples
        // are wider.
        let d = 0.4;
        let m = 40;
        let caps = 24;
        let mut pts = Vec::new();
        for k in 0..m {
            let x = -4.0 + 8.0 * k as f64 / m as f64;
            pts.push(Point3::new(x, 0.0, 0.0));
        }
        for k in 0..caps {
            // right cap, center (4, d/2), from angle -π/2 to +π/2
            let t = -std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * k as f64 / caps as f64;
            pts.push(Point3::new(
                4.0 + 0.5 * d * t.cos(),
                0.5 * d * (1.0 + t.sin()),
                0.0,
            ));
        }
        for k in 0..m {
            let x = 4.0 - 8.0 * k as f64 / m as f64;
            pts.push(Point3::new(x, d, 0.0));
        }
        for k in 0..caps {
            // left cap, center (-4, d/2), from +π/2 to 3π/2
            let t = std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * k as f64 / caps as f64;
            pts.push(Point3::new(
                -4.0 + 0.5 * d * t.cos(),
                0.5 * d * (1.0 + t.sin()),
                0.0,
            ));
        }
        let c = Polyline::new(pts, true).unwrap();
        let r = global_radius_of_curvature(&c).unwrap();
        assert!(
            (r - d / 2.0).abs() < 1e-9,
            "Δ = {r}, expected {}",
            d / 2.0
        );
    }

    #[test]
    fn pruned_matches_exhaustive_on_random_curves() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_21);
        for case in 0..12 {
            let n = rng.gen_range(401..480);
            let mut coef = [[0.0f64; 8]; 3];
            for row in coef.iter_mut() {
                for c in row.iter_mut() {
                    *c = rng.gen_range(-1.0..1.0);
                }
            }
            let pts: Vec<Point3<f64>> = (0..n)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / n as f64;
                    let coord = |r: &[f64; 8]| {
                        r[0] * t.cos()
                            + r[1] * t.sin()
                            + 0.45 * (r[2] * (2.0 * t).cos() + r[3] * (2.0 * t).sin())
                            + 0.2 * (r[4] * (3.0 * t).cos() + r[5] * (3.0 * t).sin())
                    };
                    Point3::new(coord(&coef[0]), coord(&coef[1]), coord(&coef[2]))
                })
                .collect();
            let exhaustive = gr_exhaustive(&pts);
            let pruned = super::gr_pruned(&pts);
            assert_eq!(
                exhaustive.to_bits(),
                pruned.to_bits(),
                "case {case}: pruned {pruned} vs exhaustive {exhaustive}"
            );
        }
    }

    fn bridge_curve(h: f64) -> Polyline {
        // A loop whose "bridge" segment runs over (or under) a distant part
        // of the same loop: strand S1 from (-2, 0, h) to (2, 0, h), strand
        // S2 from (0, -3, 0) to (0, 3, 0), connected far away.
        let pts = vec![
            Point3::new(-2.0, 0.0, h),
            Point3::new(2.0, 0.0, h),
            Point3::new(5.0, 0.0, 0.0),
            Point3::new(5.0, -3.0, 0.0),
            Point3::new(0.0, -3.0, 0.0),
            Point3::new(0.0, 3.0, 0.0),
            Point3::new(-5.0, 3.0, 0.0),
            Point3::new(-5.0, 0.0, 0.0),
        ];
        Polyline::new(pts, true).unwrap()
    }

    #[test]
    fn guard_accepts_rigid_translation() {
        let before = bridge_curve(0.5);
        let shift = Vector3::new(0.0, 0.0, 3.0);
        let after = Polyline::new(
            before.points().iter().map(|p| p + shift).collect(),
            true,
        )
        .unwrap();
        assert!(knot_class_guard(&before, &after, 0.2).unwrap());
        // Identity homotopy trivially passes.
        assert!(knot_class_guard(&before, &before, 0.2).unwrap());
    }

    #[test]
    fn guard_detects_strand_passage() {
        // Flipping the bridge from above to below passes it straight through
        // the crossing strand.
        let before = bridge_curve(0.5);
        let after = bridge_curve(-0.5);
        assert!(!knot_class_guard(&before, &after, 0.2).unwrap());
    }

    #[test]
    fn guard_resamples_mismatched_discretizations() {
        let before = bridge_curve(0.5);
        let after = {
            let shifted: Vec<Point3<f64>> = bridge_curve(0.5)
                .points()
                .iter()
                .map(|p| p + Vector3::new(0.0, 0.0, 2.0))
                .collect();
            Polyline::new(shifted, true).unwrap().resampled(37).unwrap()
        };
        assert!(knot_class_guard(&before, &after, 0.15).unwrap());
    }

    #[test]
    fn guard_validates_input() {
        let c = bridge_curve(0.5);
        assert!(knot_class_guard(&c, &c, 0.0).is_err());
        assert!(knot_class_guard(&c, &c, f64::NAN).is_err());
        let open = Polyline::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)],
            false,
        )
        .unwrap();
        assert!(knot_class_guard(&open, &open, 0.1).is_err());
    }
}
