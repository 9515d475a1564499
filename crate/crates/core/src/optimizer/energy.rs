//! Configuration evaluation: geometry caches, constraint residuals, the
//! descent merit function, and the public [`total_energy`] breakdown.

use nalgebra::Point3;

use super::{EnergyBreakdown, GravityModel, KPProblem, PenaltyWeights};
use crate::film::{film_infimum, FilmResult, SolverParams};
use crate::rod::{
    ciarlet_necas_residual, elastic_energy_of, gravity_energy_on_curve, internal_steps,
    local_injectivity_margin, reconstruct_frame, CrossSection, FramedCurve, MaterialLaw,
    RodConfig,
};
use crate::topology::{framing_link, global_radius_of_curvature, Polyline, SpanningClassSpec};
use crate::Result;

/// Boundary resolution used for film boundaries and midline topology
/// measurements (Δ, self-distance, knot guard, linking).
pub(crate) const N_BOUNDARY: usize = 96;

/// Film-solver parameters derived from the optimizer's: the film keeps its
/// own iteration floor so a small outer descent budget cannot starve the
/// inner area minimization.
pub(crate) fn film_params(params: &SolverParams) -> SolverParams {
    SolverParams {
        max_iters: params.max_iters.max(1500),
        gradient_tolerance: params.gradient_tolerance.min(1e-6),
        ..params.clone()
    }
}

/// Everything the merit function and the constraint checks need from one
/// rod configuration, computed off a single frame reconstruction.
pub(crate) struct RodGeometry {
    pub curve: FramedCurve,
    /// Closed equal-arc resampling of the midline.
    pub boundary: Polyline,
    pub closure_pos: f64,
    pub closure_tan: f64,
    pub angle: f64,
    /// Global radius of curvature of `boundary`.
    pub delta: f64,
}

/// Reconstruct and measure a rod. `n_boundary` controls the resampled
/// midline resolution (merit probes may use a coarser one than reports).
pub(crate) fn evaluate_rod_geometry(w: &RodConfig, n_boundary: usize) -> Result<RodGeometry> {
    let curve = reconstruct_frame(w, internal_steps(w.densities.n_samples()))?;
    let (closure_pos, closure_tan) = crate::rod::closure_residual(&curve);
    let angle = clamp_angle_residual(&curve);
    let boundary = closed_boundary(&curve, n_boundary)?;
    let delta = global_radius_of_curvature(&boundary)?;
    Ok(RodGeometry {
        curve,
        boundary,
        closure_pos,
        closure_tan,
        angle,
        delta,
    })
}

/// Equal-arc closed polyline through `n` points of the curve's midline.
/// The (small) closure gap of a not-yet-converged iterate is bridged by the
/// closing edge, so film and topology predicates always see a loop.
pub(crate) fn closed_boundary(curve: &FramedCurve, n: usize) -> Result<Polyline> {
    let m = curve.n_samples() - 1;
    let h = curve.arc_step();
    let mut pts = Vec::with_capacity(n);
    for k in 0..n {
        let s = k as f64 / n as f64 * (m as f64 * h);
        let i = ((s / h).floor() as usize).min(m - 1);
        let a = s / h - i as f64;
        pts.push(Point3::from(
            curve.x(i).coords * (1.0 - a) + curve.x(i + 1).coords * a,
        ));
    }
    Polyline::new(pts, true)
}

/// Residual angle of the clamp condition: the angle between the terminal
/// director and `d₀`, measured in the plane orthogonal to `t₀`.
pub(crate) fn clamp_angle_residual(curve: &FramedCurve) -> f64 {
    let n = curve.n_samples();
    let t0 = curve.t(0);
    let d0 = curve.d(0);
    let dl = curve.d(n - 1);
    let q = dl - t0 * t0.dot(&dl);
    let qn = q.norm();
    if qn < 1e-12 {
        return std::f64::consts::FRAC_PI_2;
    }
    let c = (q.dot(&d0) / qn).clamp(-1.0, 1.0);
    c.acos()
}

/// Gravitational energy under the selected model.
pub(crate) fn gravity_term(
    model: GravityModel,
    curve: &FramedCurve,
    cs: &CrossSection,
    m: &MaterialLaw,
) -> Result<f64> {
    match model {
        GravityModel::Section => gravity_energy_on_curve(curve, cs, m),
        GravityModel::Line => Ok(gravity_line_energy(curve, cs, m)),
    }
}

/// Thin-limit line gravity: `−∫ (ρ₀|A| + ρ₁m₁ + ρ₂m₂)(g·x) ds` by the
/// trapezoid rule on the curve samples.
pub(crate) fn gravity_line_energy(curve: &FramedCurve, cs: &CrossSection, m: &MaterialLaw) -> f64 {
    if m.gravity == nalgebra::Vector3::zeros() {
        return 0.0;
    }
    let n = curve.n_samples();
    let h = curve.arc_step();
    let mut sum = 0.0;
    for i in 0..n {
        let u = i as f64 / (n - 1) as f64;
        let mom = cs.moments_at(u);
        let (r0, r1, r2) = m.rho.at(u);
        let line_density = r0 * mom.area + r1 * mom.m1 + r2 * mom.m2;
        let val = -line_density * m.gravity.dot(&curve.x(i).coords);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        sum += w * val;
    }
    sum * h
}

/// Self-distance of the midline outside a local arc window sized to the
/// tube: the Ciarlet–Nečas surrogate measurement.
pub(crate) fn midline_self_distance(boundary: &Polyline, tube_radius: f64, length: f64) -> f64 {
    let n = boundary.n_points();
    let gap = ((4.0 * tube_radius * n as f64 / length).ceil() as usize).clamp(2, n / 4);
    boundary.min_self_distance(gap)
}

/// The descent merit: physical energies plus soft penalties and barriers.
/// `+∞` when the Δ barrier is violated.
pub(crate) struct MeritParts {
    pub e_sh: f64,
    pub e_g: f64,
    pub closure_pos: f64,
    pub closure_tan: f64,
    pub angle: f64,
    /// Normalized self-contact hinge `max(0, 2r − d_min)/2r`.
    pub cn_gap: f64,
    pub delta_margin: f64,
    pub extra: f64,
}

pub(crate) fn merit_value(parts: &MeritParts, pw: &PenaltyWeights, length: f64, delta0: f64) -> f64 {
    if !(parts.delta_margin > 0.0) {
        return f64::INFINITY;
    }
    let rel_pos = parts.closure_pos / length;
    parts.e_sh
        + parts.e_g
        + parts.extra
        + pw.closure * (rel_pos * rel_pos + parts.closure_tan * parts.closure_tan)
        + pw.angle * parts.angle * parts.angle
        + pw.cn * parts.cn_gap * parts.cn_gap
        + pw.delta * delta0 / parts.delta_margin
}

/// Merit of one rod configuration for the single-rod problem, or `+∞` when
/// reconstruction fails or a barrier is violated.
pub(crate) fn rod_merit(p: &KPProblem, w: &RodConfig, pw: &PenaltyWeights, n_boundary: usize) -> f64 {
    let parts = match rod_merit_parts(p, w, n_boundary) {
        Ok(parts) => parts,
        Err(_) => return f64::INFINITY,
    };
    merit_value(&parts, pw, w.densities.length(), p.delta0)
}

pub(crate) fn rod_merit_parts(
    p: &KPProblem,
    w: &RodConfig,
    n_boundary: usize,
) -> Result<MeritParts> {
    let geo = evaluate_rod_geometry(w, n_boundary)?;
    let e_sh = elastic_energy_of(&w.densities, &p.material)?;
    let e_g = gravity_term(p.gravity_model, &geo.curve, &p.section, &p.material)?;
    let length = w.densities.length();
    let r = p.section.max_radius();
    let dmin = midline_self_distance(&geo.boundary, r, length);
    let cn_gap = ((2.0 * r - dmin) / (2.0 * r)).max(0.0);
    Ok(MeritParts {
        e_sh,
        e_g,
        closure_pos: geo.closure_pos,
        closure_tan: geo.closure_tan,
        angle: geo.angle,
        cn_gap,
        delta_margin: geo.delta - p.delta0,
        extra: 0.0,
    })
}

/// The spanning spec used when a film is solved on a single rod's midline.
pub(crate) fn single_rod_spanning(p: &KPProblem) -> Result<SpanningClassSpec> {
    let a_r = p
        .section
        .max_radius()
        .max(1e-3 * p.rod.densities.length());
    SpanningClassSpec::single_rod(a_r)
}

/// Framing-link defect `|Lk − target|`, `+∞` when unmeasurable (too open).
pub(crate) fn link_defect_of(curve: &FramedCurve, target: i64, eps: f64) -> f64 {
    match framing_link(curve, eps) {
        Ok(z) => (z - target).abs() as f64,
        Err(_) => f64::INFINITY,
    }
}

/// Reconstruction sized for the O(n²) linking integrals: fine enough that
/// chords stay below half the framing offset, coarse enough to keep the
/// Gauss double sums cheap inside line searches.
pub(crate) fn link_curve(w: &RodConfig, eps: f64) -> Result<FramedCurve> {
    let l = w.densities.length();
    let n = ((2.0 * l / eps).ceil() as usize)
        .max(256)
        .max(w.densities.n_samples());
    reconstruct_frame(w, n)
}

/// Full energy/constraint breakdown of a configuration.
///
/// Reconstructs the rod, computes the elastic and gravitational energies,
/// solves the film on the (closed) midline when `σ > 0`, and measures every
/// constraint residual. `w ∉ N` does not error — it reports through the
/// `+∞` total sentinel. Film solver failures propagate.
pub fn total_energy(p: &KPProblem, w: &RodConfig, params: &SolverParams) -> Result<EnergyBreakdown> {
    p.validate()?;
    let (bd, _) = breakdown_with_film(p, w, params, p.sigma > 0.0, true)?;
    Ok(bd)
}

/// Shared implementation: `solve_film` forces/suppresses the film solve
/// (it is always skipped when `σ = 0` since the term then vanishes), and
/// `with_cn` controls the exact voxel check (the optimizer only runs it
/// every 25 accepted steps; `cn_residual` is NaN when skipped).
pub(crate) fn breakdown_with_film(
    p: &KPProblem,
    w: &RodConfig,
    params: &SolverParams,
    solve_film: bool,
    with_cn: bool,
) -> Result<(EnergyBreakdown, Option<FilmResult>)> {
    let geo = evaluate_rod_geometry(w, N_BOUNDARY)?;
    let e_sh = elastic_energy_of(&w.densities, &p.material)?;
    let e_g = gravity_term(p.gravity_model, &geo.curve, &p.section, &p.material)?;
    let margin = local_injectivity_margin(w, &p.section);
    let e_ni_flag = margin >= 0.0;
    let length = w.densities.length();

    let (film_area, e_film, film) = if solve_film && p.sigma > 0.0 {
        let spec = single_rod_spanning(p)?;
        let r = film_infimum(std::slice::from_ref(&geo.boundary), &spec, &film_params(params))?;
        (r.area, crate::film::film_energy(&r.mesh, p.sigma), Some(r))
    } else {
        (0.0, 0.0, None)
    };

    let link_eps = 0.5 * p.knot_thickness;
    let link_defect = link_defect_of(&link_curve(w, link_eps)?, p.target_z, link_eps);
    let cn_residual = if !e_ni_flag {
        f64::INFINITY
    } else if with_cn {
        ciarlet_necas_residual(w, &p.section, p.tolerances.voxel_rel * length)?
    } else {
        f64::NAN
    };

    let bd = EnergyBreakdown {
        e_sh,
        e_g,
        e_ni_flag,
        e_repulsion: 0.0,
        film_area,
        e_film,
        closure_pos: geo.closure_pos,
        closure_tan: geo.closure_tan,
        angle: geo.angle,
        link_defect,
        cn_residual,
        delta_margin: geo.delta - p.delta0,
        total: f64::NAN,
    }
    .finish();
    Ok((bd, film))
}
