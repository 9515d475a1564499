//! Rod-local energies: stored elastic energy of the strains and
//! gravitational potential of the solid tube.

use super::{CrossSection, FramedCurve, MaterialLaw, RodConfig};
use crate::{ensure_finite, Result};

/// Quadrature of `f((κ₁, κ₂, ω)(s), s)` over the density grid: per-cell
/// Simpson on the piecewise-linear densities, which integrates the quadratic
/// law exactly (f ∘ linear is quadratic on each cell).
pub fn elastic_energy(w: &RodConfig, m: &MaterialLaw) -> Result<f64> {
    elastic_energy_of(&w.densities, m)
}

/// Same as [`elastic_energy`] but taking the densities directly; used by the
/// optimizers which perturb densities without touching the clamp.
pub fn elastic_energy_of(d: &super::DensityField, m: &MaterialLaw) -> Result<f64> {
    let n = d.n_samples();
    let h = d.length() / (n - 1) as f64;
    let node = |i: usize| [d.kappa1()[i], d.kappa2()[i], d.omega()[i]];
    let mut sum = 0.0;
    let mut fa = ensure_finite(m.f(node(0), d.grid_s(0)), "material law f")?;
    for i in 0..n - 1 {
        let a = node(i);
        let b = node(i + 1);
        let mid = [
            0.5 * (a[0] + b[0]),
            0.5 * (a[1] + b[1]),
            0.5 * (a[2] + b[2]),
        ];
        let sm = 0.5 * (d.grid_s(i) + d.grid_s(i + 1));
        let fm = ensure_finite(m.f(mid, sm), "material law f")?;
        let fb = ensure_finite(m.f(b, d.grid_s(i + 1)), "material law f")?;
        sum += (fa + 4.0 * fm + fb) * (h / 6.0);
        fa = fb;
    }
    Ok(sum)
}

/// Number of integration steps used when an operation needs a reconstructed
/// curve internally: a multiple of the density grid so the curve nodes
/// contain the density knots, at least ~1024 steps for quadrature accuracy.
pub(crate) fn internal_steps(n_samples: usize) -> usize {
    let gaps = n_samples - 1;
    let k = (1024 + gaps - 1) / gaps;
    gaps * k.max(1)
}

/// Gravitational energy `−∫_Ω ρ g·p dV` of the solid rod.
///
/// The section integral is done exactly via the (scaled) section moments —
/// the integrand is a product of affine functions of `(ζ₁, ζ₂)` — and the
/// arc-length integral by the trapezoid rule on an internally reconstructed
/// curve.
pub fn gravity_energy(w: &RodConfig, cs: &CrossSection, m: &MaterialLaw) -> Result<f64> {
    let c = super::reconstruct_frame(w, internal_steps(w.densities.n_samples()))?;
    gravity_energy_on_curve(&c, cs, m)
}

/// [`gravity_energy`] on an already-reconstructed curve.
pub fn gravity_energy_on_curve(
    c: &FramedCurve,
    cs: &CrossSection,
    m: &MaterialLaw,
) -> Result<f64> {
    let g = m.gravity;
    if g == nalgebra::Vector3::zeros() {
        return Ok(0.0);
    }
    let n = c.n_samples();
    let h = c.arc_step();
    let mut sum = 0.0;
    for i in 0..n {
        let u = i as f64 / (n - 1) as f64;
        let mom = cs.moments_at(u);
        let (rho0, rho1, rho2) = m.rho.at(u);
        let gx = g.dot(&c.x(i).coords);
        let gd = g.dot(&c.d(i));
        let ge = g.dot(&c.e3(i));
        // ∫_A (ρ₀ + ρ₁ζ₁ + ρ₂ζ₂)(g·x + ζ₁ g·d + ζ₂ g·e₃) dζ
        let v = rho0 * (mom.area * gx + mom.m1 * gd + mom.m2 * ge)
            + rho1 * (mom.m1 * gx + mom.i11 * gd + mom.i12 * ge)
            + rho2 * (mom.m2 * gx + mom.i12 * gd + mom.i22 * ge);
        let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        sum += weight * v;
    }
    ensure_finite(-sum * h, "gravity energy")
}
