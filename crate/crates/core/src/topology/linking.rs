//! Linking number, framing link, total twist, and writhe.
//!
//! The Gauss double integral over a pair of straight segments has a closed
//! form: the map `u(s, t) = (γ₁(s) − γ₂(t))/|γ₁(s) − γ₂(t)|` sends the
//! parameter rectangle onto a spherical quadrilateral whose edges are great
//! circle arcs (each edge fixes one endpoint, so the chords sweep a plane).
//! The pullback of the Gauss integrand is minus the signed area element of
//! `u`, hence the pair contributes `−Ω/4π` with `Ω` the signed solid angle
//! of the quadrilateral `u₀₀ u₁₀ u₁₁ u₀₁`. Summing over all segment pairs
//! evaluates the linking integral of two polygons exactly (up to roundoff),
//! so the result lands on an integer and is rounded with an ambiguity check.

use super::Polyline;
use crate::rod::FramedCurve;
use crate::{Error, Result};
use nalgebra::{Point3, Vector3};

/// Signed solid angle of the spherical triangle `(a, b, c)` (unit vectors),
/// positive when the vertices run counterclockwise seen from outside.
fn solid_angle_tri(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Signed solid angle of the geodesic quadrilateral `(a, b, c, d)`.
fn solid_angle_quad(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
    d: &Vector3<f64>,
) -> f64 {
    solid_angle_tri(a, b, c) + solid_angle_tri(a, c, d)
}

fn unit_diff(p: &Point3<f64>, q: &Point3<f64>) -> Vector3<f64> {
    let v = p - q;
    let n = v.norm();
    if n < 1e-300 {
        Vector3::new(f64::NAN, f64::NAN, f64::NAN)
    } else {
        v / n
    }
}

/// Exact Gauss integral contribution of segment pair `[p0,p1] × [q0,q1]`.
fn gauss_pair(p0: &Point3<f64>, p1: &Point3<f64>, q0: &Point3<f64>, q1: &Point3<f64>) -> f64 {
    let u00 = unit_diff(p0, q0);
    let u10 = unit_diff(p1, q0);
    let u11 = unit_diff(p1, q1);
    let u01 = unit_diff(p0, q1);
    -solid_angle_quad(&u00, &u10, &u11, &u01)
}

fn curve_scale(c1: &Polyline, c2: &Polyline) -> f64 {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in c1.points().iter().chain(c2.points()) {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi - lo).norm().max(1e-300)
}

/// Raw Gauss linking integral of two disjoint closed polylines. Exact for
/// polygons, so the value sits on an integer up to roundoff; use
/// [`gauss_linking`] to obtain the rounded integer with an ambiguity check.
pub fn gauss_linking_value(c1: &Polyline, c2: &Polyline) -> Result<f64> {
    if !c1.closed() || !c2.closed() {
        return Err(Error::InvalidInput(
            "linking number requires closed curves".into(),
        ));
    }
    let min_dist = c1.min_distance_to(c2);
    if min_dist < 1e-12 * curve_scale(c1, c2) {
        return Err(Error::CurvesIntersect { min_dist });
    }
    let mut total = 0.0;
    for i in 0..c1.n_segments() {
        let (p0, p1) = c1.segment(i);
        let mut row = 0.0;
        for j in 0..c2.n_segments() {
            let (q0, q1) = c2.segment(j);
            row += gauss_pair(&p0, &p1, &q0, &q1);
        }
        total += row;
    }
    let value = total / (4.0 * std::f64::consts::PI);
    if !value.is_finite() {
        return Err(Error::CurvesIntersect { min_dist });
    }
    Ok(value)
}

/// Linking number of two disjoint closed polylines, as an exact integer.
///
/// Errors if the curves touch, or if the integral strays more than 0.1 from
/// an integer (which only happens for nearly touching inputs where roundoff
/// could flip the class).
pub fn gauss_linking(c1: &Polyline, c2: &Polyline) -> Result<i64> {
    let value = gauss_linking_value(c1, c2)?;
    let rounded = value.round();
    if (value - rounded).abs() >= 0.1 {
        return Err(Error::AmbiguousLinking { value });
    }
    Ok(rounded as i64)
}

/// Total twist `(1/2π) ∫ ω ds` of a framed curve (trapezoid on the stored
/// twist samples).
pub fn total_twist(c: &FramedCurve) -> f64 {
    let w = c.twist_density();
    let h = c.arc_step();
    let mut sum = 0.0;
    for k in 0..w.len() - 1 {
        sum += 0.5 * (w[k] + w[k + 1]) * h;
    }
    sum / std::f64::consts::TAU
}

/// Writhe of a closed, non-self-intersecting polyline: the Gauss integral
/// over all non-adjacent segment pairs (adjacent pairs contribute nothing
/// for a polygon).
pub fn writhe(c: &Polyline) -> Result<f64> {
    if !c.closed() {
        return Err(Error::InvalidInput("writhe requires a closed curve".into()));
    }
    let n = c.n_segments();
    if n < 4 {
        return Ok(0.0);
    }
    let min_self = c.min_self_distance(1);
    let scale = curve_scale(c, c);
    if min_self < 1e-12 * scale {
        return Err(Error::CurvesIntersect { min_dist: min_self });
    }
    let mut total = 0.0;
    for i in 0..n {
        let (p0, p1) = c.segment(i);
        let mut row = 0.0;
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue; // cyclically adjacent
            }
            let (q0, q1) = c.segment(j);
            row += gauss_pair(&p0, &p1, &q0, &q1);
        }
        total += row;
    }
    // Each unordered pair appears twice in the double integral.
    Ok(2.0 * total / (4.0 * std::f64::consts::PI))
}

/// Linking number of a closed framed curve with its `ε`-offset along the
/// director, `Lk(x, x + ε d)`. By Călugăreanu–White–Fuller this equals
/// `Tw + Wr` for admissible `ε`.
pub fn framing_link(c: &FramedCurve, eps: f64) -> Result<i64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "framing offset must be positive and finite, got {eps}"
        )));
    }
    if !c.is_closed(1e-3) {
        return Err(Error::InvalidInput(
            "framing link requires a closed curve".into(),
        ));
    }
    let samples = c.samples();
    let n = samples.len();
    // The frame has to return to itself for the offset curve to close.
    let d_gap = (samples[n - 1].d() - samples[0].d()).norm();
    let t_gap = (samples[n - 1].t() - samples[0].t()).norm();
    if d_gap > 0.2 || t_gap > 0.2 {
        return Err(Error::InvalidInput(format!(
            "frame does not close: |Δd| = {d_gap:.3e}, |Δt| = {t_gap:.3e}"
        )));
    }
    let midline = c.midline();
    if !midline.closed() {
        return Err(Error::InvalidInput(
            "framing link requires a closed curve".into(),
        ));
    }
    let offset_pts: Vec<Point3<f64>> = (0..n - 1)
        .map(|i| samples[i].x + samples[i].d() * eps)
        .collect();
    let offset = Polyline::new(offset_pts, true)?;
    let md = midline.min_distance_to(&offset);
    if md < 1e-6 * eps {
        return Err(Error::InvalidInput(format!(
            "framing offset {eps} too large: offset curve touches the midline (distance {md:.3e})"
        )));
    }
    gauss_linking(&midline, &offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rod::{ClampFrame, CurveSample, DensityField};
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Rotation3, Vector3};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The reference two-circle link: unit circle in the xy-plane about the
    /// origin and unit circle in the xz-plane about (1, 0, 0). The second
    /// runs in the (x, −z) direction so that it pierces the first circle's
    /// spanning disc at the origin moving along +z, which is the Lk = +1
    /// orientation.
    fn hopf_pair(n: usize) -> (Polyline, Polyline) {
        let c1 = Polyline::unit_circle_xy(n);
        let c2 = Polyline::circle_in_plane(
            Point3::new(1.0, 0.0, 0.0),
            1.0,
            Vector3::x(),
            -Vector3::z(),
            n,
        )
        .unwrap();
        (c1, c2)
    }

    #[test]
    fn hopf_circles_link_once() {
        // [PAPER] the standard two-circle configuration has linking number 1.
        let (c1, c2) = hopf_pair(96);
        assert_eq!(gauss_linking(&c1, &c2).unwrap(), 1);
        let raw = gauss_linking_value(&c1, &c2).unwrap();
        assert!((raw - 1.0).abs() < 1e-9, "raw integral {raw}");
    }

    #[test]
    fn linking_symmetry_and_reversal() {
        let (c1, c2) = hopf_pair(64);
        assert_eq!(
            gauss_linking(&c1, &c2).unwrap(),
            gauss_linking(&c2, &c1).unwrap()
        );
        assert_eq!(gauss_linking(&c1.reversed(), &c2).unwrap(), -1);
        assert_eq!(gauss_linking(&c1, &c2.reversed()).unwrap(), -1);
        assert_eq!(gauss_linking(&c1.reversed(), &c2.reversed()).unwrap(), 1);
    }

    #[test]
    fn linking_rigid_motion_and_scale_invariance() {
        let (c1, c2) = hopf_pair(64);
        let rot = Rotation3::from_scaled_axis(Vector3::new(0.4, -0.9, 0.3));
        let shift = Vector3::new(5.0, -2.0, 1.5);
        let d1 = c1.transformed(&rot, shift);
        let d2 = c2.transformed(&rot, shift);
        assert_eq!(gauss_linking(&d1, &d2).unwrap(), 1);
        assert_eq!(gauss_linking(&c1.scaled(7.3), &c2.scaled(7.3)).unwrap(), 1);
        // Cyclic reindexing changes nothing.
        assert_eq!(gauss_linking(&c1.rotated_indices(17), &c2).unwrap(), 1);
    }

    #[test]
    fn distant_curves_unlink() {
        let c1 = Polyline::unit_circle_xy(128);
        let c2 = Polyline::circle_in_plane(
            Point3::new(0.0, 0.0, 20.0),
            1.0,
            Vector3::x(),
            Vector3::y(),
            128,
        )
        .unwrap();
        let raw = gauss_linking_value(&c1, &c2).unwrap();
        assert!(raw.abs() < 1e-3, "distant circles raw value {raw}");
        assert_eq!(gauss_linking(&c1, &c2).unwrap(), 0);
    }

    #[test]
    fn touching_curves_rejected() {
        let c1 = Polyline::unit_circle_xy(8);
        // Second curve sharing the vertex (1, 0, 0).
        let c2 = Polyline::circle_in_plane(
            Point3::new(2.0, 0.0, 0.0),
            1.0,
            Vector3::x(),
            Vector3::z(),
            8,
        )
        .unwrap();
        match gauss_linking(&c1, &c2) {
            Err(Error::CurvesIntersect { min_dist }) => assert!(min_dist < 1e-12),
            other => panic!("expected CurvesIntersect, got {other:?}"),
        }
    }

    /// Independent oracle: signed crossings of the two projected curves.
    /// Project along +z after a fixed generic rotation; every transversal
    /// crossing between the projections contributes sign(ẑ·(t_over × t_under))
    /// and the linking number is half the signed total.
    fn crossing_oracle(c1: &Polyline, c2: &Polyline) -> Option<i64> {
        let rot = Rotation3::from_scaled_axis(Vector3::new(0.31, 0.17, 0.59));
        let a: Vec<Point3<f64>> = c1.points().iter().map(|p| rot * p).collect();
        let b: Vec<Point3<f64>> = c2.points().iter().map(|p| rot * p).collect();
        let mut total = 0i64;
        let na = a.len();
        let nb = b.len();
        for i in 0..na {
            let (p0, p1) = (a[i], a[(i + 1) % na]);
            for j in 0..nb {
                let (q0, q1) = (b[j], b[(j + 1) % nb]);
                // 2D intersection of projections.
                let d1 = nalgebra::Vector2::new(p1.x - p0.x, p1.y - p0.y);
                let d2 = nalgebra::Vector2::new(q1.x - q0.x, q1.y - q0.y);
                let rhs = nalgebra::Vector2::new(q0.x - p0.x, q0.y - p0.y);
                let det = d1.x * d2.y - d1.y * d2.x;
                if det.abs() < 1e-14 {
                    continue;
                }
                let s = (rhs.x * d2.y - rhs.y * d2.x) / det;
                let t = (rhs.x * d1.y - rhs.y * d1.x) / det;
                if !(1e-9..1.0 - 1e-9).contains(&s) || !(1e-9..1.0 - 1e-9).contains(&t) {
                    if (0.0..=1.0).contains(&s)
                        && (0.0..=1.0).contains(&t)
                        && (s < 1e-9 || s > 1.0 - 1e-9 || t < 1e-9 || t > 1.0 - 1e-9)
                    {
                        return None; // crossing at a vertex: not generic
                    }
                    continue;
                }
                let z1 = p0.z + s * (p1.z - p0.z);
                let z2 = q0.z + t * (q1.z - q0.z);
                let (t_over, t_under) = if z1 > z2 {
                    (
                        Vector3::new(d1.x, d1.y, 0.0),
                        Vector3::new(d2.x, d2.y, 0.0),
                    )
                } else {
                    (
                        Vector3::new(d2.x, d2.y, 0.0),
                        Vector3::new(d1.x, d1.y, 0.0),
                    )
                };
                let cross_z = t_over.x * t_under.y - t_over.y * t_under.x;
                total += if cross_z > 0.0 { 1 } else { -1 };
            }
        }
        if total.rem_euclid(2) != 0 {
            return None; // non-generic projection missed a crossing
        }
        Some(total / 2)
    }

    #[test]
    fn oracle_agrees_on_reference_link() {
        let (c1, c2) = hopf_pair(96);
        assert_eq!(crossing_oracle(&c1, &c2), Some(1));
    }

    #[test]
    fn random_links_match_crossing_oracle() {
        // [DERIVED] integer from the Gauss integral vs signed projected
        // crossings on random smooth closed curves.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_11);
        let mut checked = 0;
        let mut attempts = 0;
        while checked < 10 {
            attempts += 1;
            assert!(attempts < 400, "could not generate enough generic pairs");
            let curve = |rng: &mut ChaCha8Rng, n: usize| {
                let mut coef = [[0.0f64; 7]; 3];
                for row in coef.iter_mut() {
                    for c in row.iter_mut() {
                        *c = rng.gen_range(-1.0..1.0);
                    }
                }
                let pts: Vec<Point3<f64>> = (0..n)
                    .map(|k| {
                        let t = std::f64::consts::TAU * k as f64 / n as f64;
                        Point3::new(
                            coef[0][0] * t.cos()
                                + coef[0][1] * t.sin()
                                + 0.5 * (coef[0][2] * (2.0 * t).cos() + coef[0][3] * (2.0 * t).sin())
                                + 0.25 * (coef[0][4] * (3.0 * t).cos() + coef[0][5] * (3.0 * t).sin()),
                            coef[1][0] * t.cos()
                                + coef[1][1] * t.sin()
                                + 0.5 * (coef[1][2] * (2.0 * t).cos() + coef[1][3] * (2.0 * t).sin())
                                + 0.25 * (coef[1][4] * (3.0 * t).cos() + coef[1][5] * (3.0 * t).sin()),
                            coef[2][0] * t.cos()
                                + coef[2][1] * t.sin()
                                + 0.5 * (coef[2][2] * (2.0 * t).cos() + coef[2][3] * (2.0 * t).sin())
                                + 0.25 * (coef[2][4] * (3.0 * t).cos() + coef[2][5] * (3.0 * t).sin()),
                        )
                    })
                    .collect();
                Polyline::new(pts, true)
            };
            let (Ok(c1), Ok(c2)) = (curve(&mut rng, 80), curve(&mut rng, 80)) else {
                continue;
            };
            if c1.min_distance_to(&c2) < 0.05 {
                continue;
            }
            let Ok(gauss) = gauss_linking(&c1, &c2) else {
                continue;
            };
            let Some(oracle) = crossing_oracle(&c1, &c2) else {
                continue;
            };
            assert_eq!(gauss, oracle, "gauss vs crossing oracle");
            checked += 1;
        }
    }

    #[test]
    fn writhe_of_planar_curve_is_zero() {
        // All chord directions are coplanar, so every solid angle vanishes.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_12);
        let pts: Vec<Point3<f64>> = (0..48)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 48.0;
                let r = 1.0 + 0.3 * rng.gen_range(-1.0..1.0f64).sin() + 0.2 * (3.0 * t).cos();
                Point3::new(r * t.cos(), r * t.sin(), 0.0)
            })
            .collect();
        let c = Polyline::new(pts, true).unwrap();
        assert_eq!(writhe(&c).unwrap(), 0.0);
    }

    #[test]
    fn writhe_invariances() {
        // Non-planar closed curve.
        let pts: Vec<Point3<f64>> = (0..120)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 120.0;
                Point3::new(
                    (1.0 + 0.4 * (3.0 * t).cos()) * t.cos(),
                    (1.0 + 0.4 * (3.0 * t).cos()) * t.sin(),
                    0.4 * (3.0 * t).sin(),
                )
            })
            .collect();
        let c = Polyline::new(pts, true).unwrap();
        let w = writhe(&c).unwrap();
        assert!(w.abs() > 0.05, "test curve should have nonzero writhe");
        // Rigid motion and scale invariance.
        let rot = Rotation3::from_scaled_axis(Vector3::new(-0.3, 0.8, 0.1));
        let moved = c.transformed(&rot, Vector3::new(1.0, 2.0, 3.0));
        assert_relative_eq!(writhe(&moved).unwrap(), w, epsilon = 1e-10);
        assert_relative_eq!(writhe(&c.scaled(3.7)).unwrap(), w, epsilon = 1e-10);
        // Orientation reversal preserves writhe; mirroring negates it.
        assert_relative_eq!(writhe(&c.reversed()).unwrap(), w, epsilon = 1e-10);
        let mirrored = Polyline::new(
            c.points()
                .iter()
                .map(|p| Point3::new(p.x, p.y, -p.z))
                .collect(),
            true,
        )
        .unwrap();
        assert_relative_eq!(writhe(&mirrored).unwrap(), -w, epsilon = 1e-10);
    }

    /// Closed circle with a director spinning `k` full turns relative to the
    /// (twist-free) parallel frame of the circle: Tw = k, Wr = 0.
    fn spinning_circle(k: i64, n: usize) -> FramedCurve {
        let radius = 1.0;
        // Chord length between consecutive samples; FramedCurve expects the
        // arc step to match the chords (unit-speed polygonal convention).
        let dphi = std::f64::consts::TAU / (n - 1) as f64;
        let chord = 2.0 * radius * (0.5 * dphi).sin();
        let samples: Vec<CurveSample> = (0..n)
            .map(|i| {
                let phi = std::f64::consts::TAU * i as f64 / (n - 1) as f64;
                let x = Point3::new(radius * phi.cos(), radius * phi.sin(), 0.0);
                let t = Vector3::new(-phi.sin(), phi.cos(), 0.0);
                let inward = Vector3::new(-phi.cos(), -phi.sin(), 0.0);
                let alpha = k as f64 * phi;
                let d = inward * alpha.cos() + Vector3::z() * alpha.sin();
                let e = t.cross(&d);
                CurveSample {
                    x,
                    r: Matrix3::from_columns(&[t, d, e]),
                }
            })
            .collect();
        FramedCurve::from_samples(samples, chord, Vec::new()).unwrap()
    }

    #[test]
    fn calugareanu_on_spinning_circle() {
        // [DERIVED] Lk(x, x+εd) = Tw + Wr. For the spinning circle the
        // parallel frame is twist-free, so Tw = k exactly and Wr = 0.
        for &k in &[1i64, 2, -3] {
            let c = spinning_circle(k, 257);
            let tw = total_twist(&c);
            assert_relative_eq!(tw, k as f64, epsilon = 1e-6);
            let wr = writhe(&c.midline()).unwrap();
            assert!(wr.abs() < 1e-9);
            for &eps in &[0.05, 0.2] {
                let lk = framing_link(&c, eps).unwrap();
                assert_eq!(lk, k, "k = {k}, eps = {eps}");
                let cwf = tw + wr;
                assert!((lk as f64 - cwf).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn framing_link_rejects_bad_input() {
        let c = spinning_circle(1, 129);
        assert!(framing_link(&c, 0.0).is_err());
        assert!(framing_link(&c, -0.5).is_err());
        // Open curve: reconstruct a quarter circle.
        let dens =
            DensityField::constant(std::f64::consts::FRAC_PI_2, 1.0, 0.0, 0.0, 64).unwrap();
        let cfg = crate::rod::RodConfig {
            densities: dens,
            clamp: ClampFrame::standard(),
        };
        let open = crate::rod::reconstruct_frame(&cfg, 256).unwrap();
        assert!(framing_link(&open, 0.05).is_err());
    }

    #[test]
    fn total_twist_trapezoid() {
        // Constant twist rate ω over length L gives Tw = ωL/2π exactly.
        let c = spinning_circle(2, 129);
        let expect = 2.0;
        assert_relative_eq!(total_twist(&c), expect, epsilon = 1e-8);
    }
}
