//! Topological constraint machinery: Gauss linking numbers, framing link,
//! twist and writhe, spanning tests against loop families, spanning-loop
//! generation, global radius of curvature, and the isotopy-preservation
//! guard used by the optimizers.

mod linking;
mod spanning;
mod thickness;

pub use linking::{framing_link, gauss_linking, total_twist, writhe};
pub use spanning::{generate_spanning_loops, spanning_test};
pub use thickness::{global_radius_of_curvature, knot_class_guard};

use crate::{Error, Result};
use nalgebra::{Point3, Vector3};

/// Ordered polygonal curve, open or closed. A closed polyline does not store
/// a duplicate of its first point; the wrap-around segment is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point3<f64>>,
    closed: bool,
}

impl Polyline {
    pub fn new(points: Vec<Point3<f64>>, closed: bool) -> Result<Self> {
        let min_pts = if closed { 3 } else { 2 };
        if points.len() < min_pts {
            return Err(Error::InvalidInput(format!(
                "polyline needs at least {min_pts} points, got {}",
                points.len()
            )));
        }
        if points
            .iter()
            .any(|p| p.coords.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("polyline point".into()));
        }
        let n = points.len();
        let n_seg = if closed { n } else { n - 1 };
        for i in 0..n_seg {
            if (points[(i + 1) % n] - points[i]).norm() == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "consecutive duplicate point at index {i}"
                )));
            }
        }
        Ok(Polyline { points, closed })
    }

    /// Planar circle: center, radius, and two orthonormal spanning vectors.
    pub fn circle_in_plane(
        center: Point3<f64>,
        radius: f64,
        u: Vector3<f64>,
        v: Vector3<f64>,
        n: usize,
    ) -> Result<Self> {
        if !(radius > 0.0) || n < 3 {
            return Err(Error::InvalidInput(
                "circle needs positive radius and n ≥ 3".into(),
            ));
        }
        let pts = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                center + u * (radius * a.cos()) + v * (radius * a.sin())
            })
            .collect();
        Polyline::new(pts, true)
    }

    /// Unit circle in the xy-plane, counterclockwise seen from +z.
    pub fn unit_circle_xy(n: usize) -> Self {
        Polyline::circle_in_plane(Point3::origin(), 1.0, Vector3::x(), Vector3::y(), n).unwrap()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_segments(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    /// Endpoints of segment `i` (wrapping for closed polylines).
    pub fn segment(&self, i: usize) -> (Point3<f64>, Point3<f64>) {
        let n = self.points.len();
        (self.points[i], self.points[(i + 1) % n])
    }

    pub fn total_length(&self) -> f64 {
        (0..self.n_segments())
            .map(|i| {
                let (a, b) = self.segment(i);
                (b - a).norm()
            })
            .sum()
    }

    /// Point at arc length `t` along the polyline (wrapping when closed,
    /// clamped when open).
    pub fn point_at_arclength(&self, t: f64) -> Point3<f64> {
        let total = self.total_length();
        let mut t = if self.closed {
            t.rem_euclid(total)
        } else {
            t.clamp(0.0, total)
        };
        for i in 0..self.n_segments() {
            let (a, b) = self.segment(i);
            let len = (b - a).norm();
            if t <= len || i == self.n_segments() - 1 {
                return a + (b - a) * (t / len).min(1.0);
            }
            t -= len;
        }
        unreachable!()
    }

    /// Unit tangent at arc length `t` (direction of the containing segment).
    pub fn tangent_at_arclength(&self, t: f64) -> Vector3<f64> {
        let total = self.total_length();
        let mut t = if self.closed {
            t.rem_euclid(total)
        } else {
            t.clamp(0.0, total)
        };
        for i in 0..self.n_segments() {
            let (a, b) = self.segment(i);
            let len = (b - a).norm();
            if t <= len || i == self.n_segments() - 1 {
                return (b - a) / len;
            }
            t -= len;
        }
        unreachable!()
    }

    /// Resample to `k` points uniformly in arc length (keeps the closed flag).
    pub fn resampled(&self, k: usize) -> Result<Polyline> {
        let total = self.total_length();
        let denom = if self.closed { k } else { k - 1 };
        let pts = (0..k)
            .map(|i| self.point_at_arclength(total * i as f64 / denom as f64))
            .collect();
        Polyline::new(pts, self.closed)
    }

    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline {
            points: pts,
            closed: self.closed,
        }
    }

    /// Cyclic shift of the starting point (closed polylines).
    pub fn rotated_indices(&self, shift: usize) -> Polyline {
        let n = self.points.len();
        let pts = (0..n).map(|i| self.points[(i + shift) % n]).collect();
        Polyline {
            points: pts,
            closed: self.closed,
        }
    }

    pub fn transformed(&self, rot: &nalgebra::Rotation3<f64>, shift: Vector3<f64>) -> Polyline {
        Polyline {
            points: self
                .points
                .iter()
                .map(|p| Point3::from(rot * p.coords + shift))
                .collect(),
            closed: self.closed,
        }
    }

    pub fn scaled(&self, lambda: f64) -> Polyline {
        Polyline {
            points: self.points.iter().map(|p| p * lambda).collect(),
            closed: self.closed,
        }
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.points.len() as f64)
    }

    /// Minimum distance between segments of `self` and `other`.
    pub fn min_distance_to(&self, other: &Polyline) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n_segments() {
            let (a, b) = self.segment(i);
            for j in 0..other.n_segments() {
                let (c, d) = other.segment(j);
                best = best.min(segment_distance(a, b, c, d));
            }
        }
        best
    }

    /// Minimum distance between non-adjacent segments (cyclic index gap
    /// larger than `gap`); `gap = 1` skips neighbours sharing a vertex.
    pub fn min_self_distance(&self, gap: usize) -> f64 {
        let n = self.n_segments();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let sep = if self.closed {
                    (j - i).min(n - (j - i))
                } else {
                    j - i
                };
                if sep <= gap {
                    continue;
                }
                let (a, b) = self.segment(i);
                let (c, d) = self.segment(j);
                best = best.min(segment_distance(a, b, c, d));
            }
        }
        best
    }
}

/// Minimum distance between segments `[p0, p1]` and `[q0, q1]`
/// (Eberly's clamped quadratic method).
pub fn segment_distance(
    p0: Point3<f64>,
    p1: Point3<f64>,
    q0: Point3<f64>,
    q1: Point3<f64>,
) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-300 && e <= 1e-300 {
        return r.norm();
    }
    if a <= 1e-300 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-300 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_ = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t_ = (b * s_ + f) / e;
            let t_clamped = t_.clamp(0.0, 1.0);
            if t_ != t_clamped {
                s_ = ((t_clamped * b - c) / a).clamp(0.0, 1.0);
            }
            s = s_;
            t = t_clamped;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Which linking pattern a spanning loop must realize.
#[derive(Debug, Clone, PartialEq)]
pub enum SpanningMode {
    /// Loops with linking number ±1 with the single midline.
    SingleRod,
    /// Per-rod target links; exactly one entry is ±1, the rest 0 (a loop
    /// cannot link two rods at once within the class).
    MultiRod { targets: Vec<i64> },
}

/// Spanning-class description: the linking pattern plus the clearance the
/// test loops must keep from all tubes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningClassSpec {
    pub mode: SpanningMode,
    pub avoidance_radius: f64,
}

impl SpanningClassSpec {
    pub fn single_rod(avoidance_radius: f64) -> Result<Self> {
        let s = SpanningClassSpec {
            mode: SpanningMode::SingleRod,
            avoidance_radius,
        };
        s.validate(1)?;
        Ok(s)
    }

    pub fn multi_rod(targets: Vec<i64>, avoidance_radius: f64) -> Result<Self> {
        let n = targets.len();
        let s = SpanningClassSpec {
            mode: SpanningMode::MultiRod { targets },
            avoidance_radius,
        };
        s.validate(n)?;
        Ok(s)
    }

    /// Validate against the number of midlines the spec will be used with.
    pub fn validate(&self, n_midlines: usize) -> Result<()> {
        if !(self.avoidance_radius > 0.0) {
            return Err(Error::InvalidInput(
                "avoidance_radius must be positive".into(),
            ));
        }
        match &self.mode {
            SpanningMode::SingleRod => {
                if n_midlines != 1 {
                    return Err(Error::InvalidInput(format!(
                        "single-rod spanning spec used with {n_midlines} midlines"
                    )));
                }
            }
            SpanningMode::MultiRod { targets } => {
                if targets.len() != n_midlines {
                    return Err(Error::InvalidInput(format!(
                        "{} link targets for {} midlines",
                        targets.len(),
                        n_midlines
                    )));
                }
                let nonzero: Vec<i64> =
                    targets.iter().copied().filter(|&t| t != 0).collect();
                if nonzero.len() != 1 || nonzero[0].abs() != 1 {
                    return Err(Error::InvalidInput(
                        "exactly one target must be ±1; a loop cannot link two rods".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Per-midline targets, normalized to a vector.
    pub fn targets(&self, n_midlines: usize) -> Vec<i64> {
        match &self.mode {
            SpanningMode::SingleRod => vec![1; n_midlines],
            SpanningMode::MultiRod { targets } => targets.clone(),
        }
    }
}
