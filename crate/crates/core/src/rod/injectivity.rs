//! Injectivity measures for the solid rod: the local non-interpenetration
//! margin of the tube map and the discrete Ciarlet–Nečas residual.
//!
//! The tube map `p(s, ζ) = x(s) + ζ₁ d(s) + ζ₂ (t×d)(s)` has Jacobian
//! determinant `det Dp = 1 − (ζ₁κ₂ − ζ₂κ₁)` (see `docs/determinant.md` for
//! the derivation); the rod is locally non-interpenetrating when this stays
//! nonnegative over the whole section for every `s`.

use super::{energy::internal_steps, reconstruct_frame, CrossSection, RodConfig};
use crate::film::SurfaceMesh;
use crate::{Error, Result};

/// `1 − max over grid s and section extreme points of (ζ₁κ₂ − ζ₂κ₁)`.
///
/// Nonnegative iff the rod satisfies the local non-interpenetration
/// constraint. The maximized functional is linear in ζ and piecewise linear
/// in s, so the extreme value sits at a density knot and on the section
/// boundary (a vertex, for polygons; `r·|κ|` for discs).
pub fn local_injectivity_margin(w: &RodConfig, cs: &CrossSection) -> f64 {
    let d = &w.densities;
    let n = d.n_samples();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let u = i as f64 / (n - 1) as f64;
        let scale = cs.scale_at(u);
        let v = scale * cs.support_n(d.kappa1()[i], d.kappa2()[i]);
        worst = worst.max(v);
    }
    1.0 - worst
}

/// Exact `∫_Ω det Dp dζ ds`: per slice the section integral is
/// `|A| − κ₂·M₁ + κ₁·M₂` (the integrand is affine in ζ), integrated over s
/// by the trapezoid rule on the density grid.
pub fn det_dp_integral(w: &RodConfig, cs: &CrossSection) -> f64 {
    let d = &w.densities;
    let n = d.n_samples();
    let h = d.length() / (n - 1) as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let u = i as f64 / (n - 1) as f64;
        let m = cs.moments_at(u);
        let v = m.area - d.kappa2()[i] * m.m1 + d.kappa1()[i] * m.m2;
        sum += if i == 0 || i == n - 1 { 0.5 * v } else { v };
    }
    sum * h
}

/// Discrete Ciarlet–Nečas residual `∫_Ω det Dp − vol₃(Λ[w])`, with the
/// volume measured by voxel occupancy of the tube mesh at edge length
/// `voxel`. A residual within voxelization error certifies the global
/// injectivity inequality discretely; a materially positive residual flags
/// self-overlap.
pub fn ciarlet_necas_residual(w: &RodConfig, cs: &CrossSection, voxel: f64) -> Result<f64> {
    if !(voxel > 0.0) || !voxel.is_finite() {
        return Err(Error::InvalidInput(format!(
            "voxel edge must be positive, got {voxel}"
        )));
    }
    let margin = local_injectivity_margin(w, cs);
    if margin < 0.0 {
        return Err(Error::Infeasible {
            constraint: "local_injectivity",
            detail: format!("margin {margin:.6} < 0, det Dp changes sign"),
        });
    }
    let lhs = det_dp_integral(w, cs);
    let curve = reconstruct_frame(w, internal_steps(w.densities.n_samples()))?;
    let n_around = ((4.0 * cs.max_radius() / voxel).ceil() as usize).clamp(24, 128);
    let mesh = super::tube_mesh(&curve, cs, n_around)?;
    let vol = voxel_volume(&mesh, voxel);
    Ok(lhs - vol)
}

/// Volume by voxel-center occupancy: a voxel counts when its center is
/// inside the closed mesh, decided by z-ray parity. The grid origin is
/// offset by fixed irrational fractions of the voxel so that rays miss
/// triangle edges generically.
pub(crate) fn voxel_volume(mesh: &SurfaceMesh, voxel: f64) -> f64 {
    let (lo, hi) = mesh.bounding_box();
    let jitter = [
        (std::f64::consts::SQRT_2 - 1.0) * 0.37,
        (std::f64::consts::E - 2.0) * 0.41,
        (std::f64::consts::PI - 3.0) * 0.43,
    ];
    let x0 = lo.x - voxel * (1.0 + jitter[0]);
    let y0 = lo.y - voxel * (1.0 + jitter[1]);
    let z0 = lo.z - voxel * (1.0 + jitter[2]);
    let nx = ((hi.x - x0) / voxel).ceil() as usize + 1;
    let ny = ((hi.y - y0) / voxel).ceil() as usize + 1;

    // Bin triangles by their xy bounding boxes for column queries.
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); nx * ny];
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &vi in t {
            let v = mesh.vertices[vi];
            xmin = xmin.min(v.x);
            xmax = xmax.max(v.x);
            ymin = ymin.min(v.y);
            ymax = ymax.max(v.y);
        }
        let ix0 = (((xmin - x0) / voxel - 0.5).floor().max(0.0)) as usize;
        let ix1 = ((((xmax - x0) / voxel) - 0.5).ceil() as usize).min(nx - 1);
        let iy0 = (((ymin - y0) / voxel - 0.5).floor().max(0.0)) as usize;
        let iy1 = ((((ymax - y0) / voxel) - 0.5).ceil() as usize).min(ny - 1);
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                bins[iy * nx + ix].push(ti as u32);
            }
        }
    }

    let mut inside_count: u64 = 0;
    let mut zs: Vec<f64> = Vec::new();
    for iy in 0..ny {
        let cy = y0 + (iy as f64 + 0.5) * voxel;
        for ix in 0..nx {
            let bin = &bins[iy * nx + ix];
            if bin.is_empty() {
                continue;
            }
            let cx = x0 + (ix as f64 + 0.5) * voxel;
            zs.clear();
            for &ti in bin {
                let t = &mesh.triangles[ti as usize];
                let (a, b, c) = (
                    mesh.vertices[t[0]],
                    mesh.vertices[t[1]],
                    mesh.vertices[t[2]],
                );
                // Barycentric coordinates of (cx, cy) in the xy projection.
                let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
                if det.abs() < 1e-30 {
                    continue; // vertical triangle: measure-zero for the jittered ray
                }
                let u = ((cx - a.x) * (c.y - a.y) - (c.x - a.x) * (cy - a.y)) / det;
                let v = ((b.x - a.x) * (cy - a.y) - (cx - a.x) * (b.y - a.y)) / det;
                if u > 0.0 && v > 0.0 && u + v < 1.0 {
                    zs.push(a.z + u * (b.z - a.z) + v * (c.z - a.z));
                }
            }
            if zs.len() < 2 {
                continue;
            }
            zs.sort_by(|p, q| p.partial_cmp(q).unwrap());
            // Pair up entry/exit crossings and count voxel centers between.
            for pair in zs.chunks_exact(2) {
                let (zin, zout) = (pair[0], pair[1]);
                // Centers z0 + (k + 0.5)·voxel in (zin, zout).
                let k0 = ((zin - z0) / voxel - 0.5).floor() as i64 + 1;
                let k1 = ((zout - z0) / voxel - 0.5).ceil() as i64 - 1;
                if k1 >= k0 {
                    inside_count += (k1 - k0 + 1) as u64;
                }
            }
        }
    }
    inside_count as f64 * voxel * voxel * voxel
}
