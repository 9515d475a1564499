//! Quasi-static Plateau runs: a time-sampled family of boundary curves,
//! each step's film warm-started from the previous mesh so the run tracks
//! one branch of solutions until it collapses.

use nalgebra::Point3;

use crate::film::{film_infimum, film_infimum_from, SolverParams, SurfaceMesh};
use crate::topology::{Polyline, SpanningClassSpec};
use crate::{Error, Result};

/// Time-sampled boundary motion: `frames[k]` holds the boundary loops at
/// `times[k]`, loops corresponding by position across frames.
#[derive(Debug, Clone)]
pub struct CurveFamily {
    pub times: Vec<f64>,
    pub frames: Vec<Vec<Polyline>>,
}

impl CurveFamily {
    /// Maximum admissible point-sampled Hausdorff motion between
    /// consecutive frames, relative to the loop length.
    const CONTINUITY_REL: f64 = 0.2;

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.frames.len() {
            return Err(Error::InvalidInput(format!(
                "family needs matching times and frames, got {} and {}",
                self.times.len(),
                self.frames.len()
            )));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("family time".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "times must be strictly increasing".into(),
            ));
        }
        let n_loops = self.frames[0].len();
        if n_loops == 0 {
            return Err(Error::InvalidInput("frames need at least one loop".into()));
        }
        for (k, frame) in self.frames.iter().enumerate() {
            if frame.len() != n_loops {
                return Err(Error::InvalidInput(format!(
                    "frame {k} has {} loops, expected {n_loops}",
                    frame.len()
                )));
            }
            for (l, c) in frame.iter().enumerate() {
                if !c.closed() {
                    return Err(Error::InvalidInput(format!(
                        "loop {l} of frame {k} is not closed"
                    )));
                }
            }
        }
        // Continuity: consecutive loops move by a fraction of their length.
        for k in 1..self.frames.len() {
            for l in 0..n_loops {
                let a = &self.frames[k - 1][l];
                let b = &self.frames[k][l];
                let scale = a.total_length().min(b.total_length());
                let hd = hausdorff(a, b);
                if hd > Self::CONTINUITY_REL * scale {
                    return Err(Error::InvalidInput(format!(
                        "loop {l} jumps by {hd:.3e} between frames {} and {k} \
                         (limit {:.3e}); the family is not continuous",
                        k - 1,
                        Self::CONTINUITY_REL * scale
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_loops(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }
}

/// Symmetric point-sampled Hausdorff distance between two polylines.
fn hausdorff(a: &Polyline, b: &Polyline) -> f64 {
    let one_way = |p: &Polyline, q: &Polyline| {
        p.points()
            .iter()
            .map(|x| point_distance(q, x))
            .fold(0.0f64, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Distance from `p` to the polyline (over all its segments).
fn point_distance(poly: &Polyline, p: &Point3<f64>) -> f64 {
    (p - nearest_point_on(poly, p)).norm()
}

/// Closest point of a polyline to `p` (over all its segments).
fn nearest_point_on(poly: &Polyline, p: &Point3<f64>) -> Point3<f64> {
    let pts = poly.points();
    let n = pts.len();
    let n_edges = if poly.closed() { n } else { n - 1 };
    let mut best = pts[0];
    let mut best_d2 = f64::INFINITY;
    for i in 0..n_edges {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let ab = b - a;
        let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        let cand = a + ab * t;
        let d2 = (p - cand).norm_squared();
        if d2 < best_d2 {
            best_d2 = d2;
            best = cand;
        }
    }
    best
}

/// One similarity per loop: translate the centroid and rescale by the
/// length ratio.
struct LoopMap {
    c_prev: Point3<f64>,
    c_next: Point3<f64>,
    scale: f64,
}

impl LoopMap {
    fn apply(&self, x: &Point3<f64>) -> Point3<f64> {
        self.c_next + (x - self.c_prev) * self.scale
    }
}

/// Carry a solved mesh from the previous boundary loops onto the next:
/// per-loop similarity maps blended over the interior by inverse-square
/// distance, boundary vertices snapped onto their new curves.
fn transported_mesh(
    mesh: &SurfaceMesh,
    prev: &[Polyline],
    next: &[Polyline],
) -> Result<SurfaceMesh> {
    let maps: Vec<LoopMap> = prev
        .iter()
        .zip(next)
        .map(|(p, n)| LoopMap {
            c_prev: p.centroid(),
            c_next: n.centroid(),
            scale: n.total_length() / p.total_length(),
        })
        .collect();

    // Match each mesh boundary loop to the nearest family loop (by mean
    // vertex distance to the previous frame's curves).
    let mut owner: Vec<Option<usize>> = vec![None; mesh.vertices.len()];
    for cycle in &mesh.boundary_loops {
        let mut best = (0usize, f64::INFINITY);
        for (l, curve) in prev.iter().enumerate() {
            let mean: f64 = cycle
                .iter()
                .map(|&v| point_distance(curve, &mesh.vertices[v]))
                .sum::<f64>()
                / cycle.len() as f64;
            if mean < best.1 {
                best = (l, mean);
            }
        }
        for &v in cycle {
            owner[v] = Some(best.0);
        }
    }

    let vertices: Vec<Point3<f64>> = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(vi, x)| match owner[vi] {
            Some(l) => nearest_point_on(&next[l], &maps[l].apply(x)),
            None => {
                let mut num = nalgebra::Vector3::zeros();
                let mut den = 0.0;
                for (l, map) in maps.iter().enumerate() {
                    let d2 = point_distance(&prev[l], x).powi(2) + 1e-12;
                    let w = 1.0 / d2;
                    num += map.apply(x).coords * w;
                    den += w;
                }
                Point3::from(num / den)
            }
        })
        .collect();
    SurfaceMesh::from_triangles(vertices, mesh.triangles.clone())
}

/// One step of a quasi-static run.
#[derive(Debug, Clone)]
pub struct QuasistaticStep {
    pub time: f64,
    pub area: f64,
    pub mesh: SurfaceMesh,
    /// True when the film degenerated at this time; the run stops here.
    pub collapsed: bool,
}

/// Solve the Plateau problem along a boundary motion, warm-starting each
/// step from the previous mesh so the run follows one solution branch.
/// The returned trace is truncated at the first collapsed step (which is
/// included, flagged).
pub fn quasistatic_run(
    family: &CurveFamily,
    spec: &SpanningClassSpec,
    params: &SolverParams,
) -> Result<Vec<QuasistaticStep>> {
    family.validate()?;
    spec.validate(family.n_loops())?;
    let mut steps: Vec<QuasistaticStep> = Vec::with_capacity(family.times.len());
    for k in 0..family.times.len() {
        let result = if k == 0 {
            film_infimum(&family.frames[0], spec, params)?
        } else {
            let prev = steps.last().expect("k > 0");
            let warm = transported_mesh(&prev.mesh, &family.frames[k - 1], &family.frames[k])?;
            film_infimum_from(&family.frames[k], spec, params, Some(&warm))?
        };
        let collapsed = result.collapsed;
        steps.push(QuasistaticStep {
            time: family.times[k],
            area: result.area,
            mesh: result.mesh,
            collapsed,
        });
        if collapsed {
            break;
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn circle_at(center: Point3<f64>, radius: f64) -> Polyline {
        Polyline::circle_in_plane(center, radius, Vector3::x(), Vector3::y(), 96).unwrap()
    }

    fn params(iters: usize) -> SolverParams {
        SolverParams {
            max_iters: iters,
            gradient_tolerance: 1e-9,
            ..SolverParams::default()
        }
    }

    #[test]
    fn translating_circle_keeps_its_area() {
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let frames: Vec<Vec<Polyline>> = times
            .iter()
            .map(|t| vec![circle_at(Point3::new(0.3 * t, 0.0, 0.0), 1.0)])
            .collect();
        let family = CurveFamily { times, frames };
        let spec = SpanningClassSpec::single_rod(0.05).unwrap();
        let steps = quasistatic_run(&family, &spec, &params(3000)).unwrap();
        assert_eq!(steps.len(), 5);
        for s in &steps {
            assert!(!s.collapsed);
            assert!(
                (s.area - std::f64::consts::PI).abs() < 2e-3 * std::f64::consts::PI,
                "area {} at t = {}",
                s.area,
                s.time
            );
        }
    }

    #[test]
    fn shrinking_circle_tracks_the_disc_area() {
        let times: Vec<f64> = (0..5).map(|k| 0.25 * k as f64).collect();
        let frames: Vec<Vec<Polyline>> = times
            .iter()
            .map(|t| vec![circle_at(Point3::origin(), 1.0 - 0.5 * t)])
            .collect();
        let family = CurveFamily { times, frames };
        let spec = SpanningClassSpec::single_rod(0.02).unwrap();
        let steps = quasistatic_run(&family, &spec, &params(3000)).unwrap();
        assert_eq!(steps.len(), 5);
        for s in &steps {
            let r = 1.0 - 0.5 * s.time;
            let disc = std::f64::consts::PI * r * r;
            assert!(!s.collapsed);
            assert!(
                (s.area - disc).abs() < 5e-3 * disc,
                "area {} vs disc {disc} at t = {}",
                s.area,
                s.time
            );
        }
    }

    /// Closed-form area of the stable catenoid branch between coaxial
    /// unit rings at separation `h`, or None past the critical ratio.
    fn catenoid_area(h: f64) -> Option<f64> {
        let f = |c: f64| c * (0.5 * h / c).cosh() - 1.0;
        // Find the minimum of f by golden-section, then the stable root
        // (the larger one) by bisection on [c_min, 1.5].
        let (mut lo, mut hi) = (0.05, 1.5);
        let phi = 0.5 * (5.0f64.sqrt() - 1.0);
        for _ in 0..200 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let c_min = 0.5 * (lo + hi);
        if f(c_min) > 0.0 {
            return None;
        }
        let (mut a, mut b) = (c_min, 1.5);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let c = 0.5 * (a + b);
        Some(std::f64::consts::PI * c * (h + c * (h / c).sinh()))
    }

    #[test]
    fn separating_rings_follow_the_catenoid_until_collapse() {
        // Ring separations sweeping through the critical ratio ≈ 1.3255.
        let hs = [1.0, 1.1, 1.2, 1.3, 1.38, 1.45];
        let times: Vec<f64> = (0..hs.len()).map(|k| k as f64).collect();
        let frames: Vec<Vec<Polyline>> = hs
            .iter()
            .map(|&h| {
                vec![
                    circle_at(Point3::new(0.0, 0.0, -0.5 * h), 1.0),
                    circle_at(Point3::new(0.0, 0.0, 0.5 * h), 1.0),
                ]
            })
            .collect();
        let family = CurveFamily { times, frames };
        let spec = SpanningClassSpec::multi_rod(vec![1, 0], 0.1).unwrap();
        let steps = quasistatic_run(&family, &spec, &params(6000)).unwrap();
        // The run must have stopped at one of the post-critical steps.
        let last = steps.last().unwrap();
        assert!(last.collapsed, "run should end collapsed");
        assert!(
            steps.len() == 5 || steps.len() == 6,
            "collapse at h = 1.38 or 1.45, got {} steps",
            steps.len()
        );
        for s in steps.iter().filter(|s| !s.collapsed) {
            let h = hs[(s.time + 0.5) as usize];
            let exact = catenoid_area(h).expect("pre-critical separation");
            assert!(
                (s.area - exact).abs() < 0.015 * exact,
                "area {} vs catenoid {exact} at h = {h}",
                s.area
            );
        }
    }

    #[test]
    fn discontinuous_families_are_rejected() {
        let a = circle_at(Point3::origin(), 1.0);
        let b = circle_at(Point3::new(5.0, 0.0, 0.0), 1.0); // jump
        let family = CurveFamily {
            times: vec![0.0, 1.0],
            frames: vec![vec![a], vec![b]],
        };
        assert!(family.validate().is_err());

        let family = CurveFamily {
            times: vec![0.0, 0.0],
            frames: vec![
                vec![circle_at(Point3::origin(), 1.0)],
                vec![circle_at(Point3::origin(), 1.0)],
            ],
        };
        assert!(family.validate().is_err(), "times must increase");
    }

    #[test]
    fn transport_preserves_connectivity_and_snaps_the_boundary() {
        let prev = vec![circle_at(Point3::origin(), 1.0)];
        let next = vec![circle_at(Point3::new(0.1, 0.0, 0.0), 0.9)];
        let spec = SpanningClassSpec::single_rod(0.05).unwrap();
        let sol = film_infimum(&prev, &spec, &params(1500)).unwrap();
        let moved = transported_mesh(&sol.mesh, &prev, &next).unwrap();
        assert_eq!(moved.triangles, sol.mesh.triangles);
        // Every boundary vertex lies on the new circle.
        for cycle in &moved.boundary_loops {
            for &v in cycle {
                let d = point_distance(&next[0], &moved.vertices[v]);
                assert!(d < 1e-9, "boundary vertex {v} off-curve by {d}");
            }
        }
    }
}
