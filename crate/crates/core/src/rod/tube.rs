//! Solid-rod geometry: evaluating the tube map `p(s, ζ)` and building a
//! watertight boundary mesh of the swept tube.

use super::{CrossSection, FramedCurve};
use crate::film::SurfaceMesh;
use crate::{Error, Result};
use nalgebra::{Point3, Rotation3, UnitQuaternion};

/// Point of the solid rod: `x(s) + ζ₁ d(s) + ζ₂ (t×d)(s)`, with the frame
/// interpolated between grid samples on SO(3) (quaternion slerp) and the
/// midline interpolated linearly.
pub fn tube_point(c: &FramedCurve, s: f64, zeta: (f64, f64)) -> Result<Point3<f64>> {
    let l = c.length();
    if !(0.0..=l + 1e-12 * l.max(1.0)).contains(&s) {
        return Err(Error::InvalidInput(format!(
            "arc length {s} outside [0, {l}]"
        )));
    }
    let h = c.arc_step();
    let u = (s / h).clamp(0.0, (c.n_samples() - 1) as f64);
    let i = (u.floor() as usize).min(c.n_samples() - 2);
    let a = u - i as f64;
    let x = c.x(i) + (c.x(i + 1) - c.x(i)) * a;
    let q0 = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        c.samples()[i].r,
    ));
    let q1 = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        c.samples()[i + 1].r,
    ));
    let q = q0.slerp(&q1, a);
    let r = q.to_rotation_matrix();
    let d = r.matrix().column(1);
    let e3 = r.matrix().column(2);
    Ok(x + d * zeta.0 + e3 * zeta.1)
}

/// Watertight triangle mesh of the tube boundary, oriented outward.
///
/// Each curve node carries a ring of `n_around` section-boundary points.
/// A curve that closes within `1e-3·L` yields a torus-like mesh (last ring
/// joined to the first); an open curve is capped with triangle fans around
/// the section centroid.
pub fn tube_mesh(c: &FramedCurve, cs: &CrossSection, n_around: usize) -> Result<SurfaceMesh> {
    if n_around < 3 {
        return Err(Error::InvalidInput(format!(
            "n_around must be at least 3, got {n_around}"
        )));
    }
    let closed = c.is_closed(1e-3);
    let n_nodes = c.n_samples();
    let n_rings = if closed { n_nodes - 1 } else { n_nodes };

    let mut vertices = Vec::with_capacity(n_rings * n_around + 2);
    for ring in 0..n_rings {
        let u = ring as f64 / (n_nodes - 1) as f64;
        let scale = cs.scale_at(u);
        let s = &c.samples()[ring];
        for k in 0..n_around {
            let b = cs.boundary_point(k as f64 / n_around as f64);
            vertices.push(s.x + s.d() * (b[0] * scale) + s.e3() * (b[1] * scale));
        }
    }
    let ring_vertex = |ring: usize, k: usize| ring * n_around + (k % n_around);

    let mut triangles = Vec::new();
    let n_spans = if closed { n_rings } else { n_rings - 1 };
    for ring in 0..n_spans {
        let next = (ring + 1) % n_rings;
        for k in 0..n_around {
            let (a, b) = (ring_vertex(ring, k), ring_vertex(ring, k + 1));
            let (c2, d2) = (ring_vertex(next, k), ring_vertex(next, k + 1));
            triangles.push([a, b, d2]);
            triangles.push([a, d2, c2]);
        }
    }
    if !closed {
        // Cap fans around the section centroid at each end.
        let centroid = cs.centroid();
        let cap = |node: usize, vertices: &mut Vec<Point3<f64>>| -> usize {
            let u = node as f64 / (n_nodes - 1) as f64;
            let scale = cs.scale_at(u);
            let s = &c.samples()[node];
            vertices.push(s.x + s.d() * (centroid[0] * scale) + s.e3() * (centroid[1] * scale));
            vertices.len() - 1
        };
        let c_start = cap(0, &mut vertices);
        let c_end = cap(n_nodes - 1, &mut vertices);
        for k in 0..n_around {
            // Start cap faces backwards along the tube, end cap forwards.
            triangles.push([c_start, ring_vertex(0, k + 1), ring_vertex(0, k)]);
            triangles.push([
                c_end,
                ring_vertex(n_rings - 1, k),
                ring_vertex(n_rings - 1, k + 1),
            ]);
        }
    }
    let mut mesh = SurfaceMesh::from_triangles(vertices, triangles)?;
    // Fix the global orientation to outward (positive enclosed volume).
    if mesh.enclosed_volume() < 0.0 {
        for t in &mut mesh.triangles {
            t.swap(1, 2);
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rod::{reconstruct_frame, ClampFrame, DensityField, RodConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn circle_curve(l: f64, n_steps: usize) -> FramedCurve {
        reconstruct_frame(&RodConfig::circle(l, 16).unwrap(), n_steps).unwrap()
    }

    #[test]
    fn zeta_zero_is_midline() {
        let c = circle_curve(1.0, 500);
        for &s in &[0.0, 0.13, 0.5, 0.999, 1.0] {
            let p = tube_point(&c, s, (0.0, 0.0)).unwrap();
            let i = (s / c.arc_step()).floor() as usize;
            let i = i.min(c.n_samples() - 2);
            let a = s / c.arc_step() - i as f64;
            let x = c.x(i) + (c.x(i + 1) - c.x(i)) * a;
            assert_relative_eq!((p - x).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn straight_rod_tube_point_closed_form() {
        let w = RodConfig::new(
            DensityField::constant(2.0, 0.0, 0.0, 0.0, 8).unwrap(),
            ClampFrame::standard(),
        );
        let c = reconstruct_frame(&w, 100).unwrap();
        let r = 0.3;
        for &s in &[0.0, 0.7, 1.9] {
            let p = tube_point(&c, s, (r, 0.0)).unwrap();
            // x0 + s·t0 + r·d0 = (s, r, 0).
            assert_relative_eq!(p.x, s, epsilon = 1e-13);
            assert_relative_eq!(p.y, r, epsilon = 1e-13);
            assert_relative_eq!(p.z, 0.0, epsilon = 1e-13);
        }
        assert!(tube_point(&c, -0.1, (0.0, 0.0)).is_err());
        assert!(tube_point(&c, 2.1, (0.0, 0.0)).is_err());
    }

    #[test]
    fn tube_samples_sit_at_distance_zeta_from_midline() {
        // [DERIVED] random (s, ζ) samples: distance from the tube point to
        // the midline equals |ζ| (circle rod, safely inside the osculating
        // radius).
        let l = 2.0 * std::f64::consts::PI; // circle radius 1
        let c = circle_curve(l, 4000);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = rng.gen_range(0.0..l);
            let ang = rng.gen_range(0.0..std::f64::consts::TAU);
            let rad = rng.gen_range(0.0..0.2);
            let zeta = (rad * ang.cos(), rad * ang.sin());
            let p = tube_point(&c, s, zeta).unwrap();
            // Distance to the dense midline polyline.
            let mut dist = f64::INFINITY;
            for i in 0..c.n_samples() - 1 {
                let (a, b) = (c.x(i), c.x(i + 1));
                let ab = b - a;
                let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                dist = dist.min((p - (a + ab * t)).norm());
            }
            assert!(
                (dist - rad).abs() < 1e-5,
                "tube point distance {dist} expected {rad}"
            );
        }
    }

    #[test]
    fn circle_tube_is_a_torus() {
        let c = circle_curve(2.0 * std::f64::consts::PI, 200);
        let cs = CrossSection::disc(0.2).unwrap();
        let m = tube_mesh(&c, &cs, 16).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.is_closed());
    }

    #[test]
    fn capped_straight_tube_is_a_sphere() {
        let w = RodConfig::new(
            DensityField::constant(1.0, 0.0, 0.0, 0.0, 4).unwrap(),
            ClampFrame::standard(),
        );
        let c = reconstruct_frame(&w, 20).unwrap();
        let cs = CrossSection::disc(0.1).unwrap();
        let m = tube_mesh(&c, &cs, 24).unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.is_closed());
        // Volume ≈ πr²L, modestly under (inscribed ring polygons).
        let exact = std::f64::consts::PI * 0.01 * 1.0;
        let v = m.enclosed_volume();
        assert!(v > 0.0);
        assert!((v - exact).abs() < 0.05 * exact, "cylinder volume {v} vs {exact}");
    }

    #[test]
    fn torus_volume_matches_closed_form() {
        // [DERIVED] solid torus volume 2π²Rr² within 1% at n_around = 64.
        let big_r = 1.0;
        let l = 2.0 * std::f64::consts::PI * big_r;
        let c = circle_curve(l, 400);
        let small_r = 0.25;
        let cs = CrossSection::disc(small_r).unwrap();
        let m = tube_mesh(&c, &cs, 64).unwrap();
        let exact = 2.0 * std::f64::consts::PI.powi(2) * big_r * small_r * small_r;
        let v = m.enclosed_volume();
        assert!(
            (v - exact).abs() < 0.01 * exact,
            "torus volume {v} vs {exact}"
        );
    }

    #[test]
    fn polygon_section_tube_builds() {
        let c = circle_curve(2.0 * std::f64::consts::PI, 100);
        let cs = CrossSection::polygon(vec![
            [-0.1, -0.1],
            [0.1, -0.1],
            [0.15, 0.05],
            [0.0, 0.12],
            [-0.12, 0.06],
        ])
        .unwrap();
        let m = tube_mesh(&c, &cs, 10).unwrap();
        assert_eq!(m.euler_characteristic(), 0);
        assert!(m.enclosed_volume() > 0.0);
    }
}
