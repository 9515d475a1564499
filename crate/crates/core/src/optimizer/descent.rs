//! Shared projected-penalty descent engine and the single-rod minimizer.
//!
//! The engine descends a smooth merit (energies + penalties + barriers) by
//! forward-difference gradients and backtracking, but acceptance is decided
//! on the physical breakdown: a step is taken only when the merit drops,
//! the *total energy strictly decreases*, hard flags hold, and the integer
//! invariants (framing link, knot class, pairwise link) survive. Soft
//! penalty weights ramp while residuals sit above tolerance, so feasibility
//! tightens as the descent converges.
//!
//! Monotone totals and soft-constraint enforcement pull in opposite
//! directions at an infeasible start: restoring closure from an open curve
//! generally *raises* the elastic energy, which the acceptance rule above
//! would veto forever. The engine therefore runs a feasibility-restoration
//! pre-phase first — plain merit descent (hard flags and integer classes
//! still enforced, totals free to rise) until the soft residuals are inside
//! tolerance — and only then starts the logged, monotone energy descent
//! from that feasible configuration.

use rayon::prelude::*;

use super::energy::{
    breakdown_with_film, closed_boundary, evaluate_rod_geometry, film_params, rod_merit,
    single_rod_spanning, N_BOUNDARY,
};
use super::{EnergyBreakdown, KPProblem, OptTrace, PenaltyWeights};
use crate::film::{film_infimum, SolverParams, SurfaceMesh};
use crate::rod::{
    ciarlet_necas_residual, det_dp_integral, reconstruct_frame, ClampFrame, DensityField,
    RodConfig,
};
use crate::topology::knot_class_guard;
use crate::{Error, Result};

/// Problem adapter for [`run_descent`].
pub(crate) trait Objective: Sync {
    /// Starting parameter vector.
    fn initial(&self) -> Vec<f64>;
    /// In-place projection onto the pointwise hard constraint set.
    fn project(&self, x: &mut [f64]);
    /// Smooth merit: energies + penalties + barriers, no film term, no
    /// integer checks. `+∞` marks barrier violations or unevaluable points.
    fn merit(&self, x: &[f64], pw: &PenaltyWeights) -> f64;
    /// Full physical evaluation of a candidate (film included when the
    /// problem couples one; exact CN deferred to [`Objective::cn_exact`]).
    fn breakdown(&self, x: &[f64]) -> Result<EnergyBreakdown>;
    /// Integer-class preservation for the step `x_old → x_new`, given the
    /// candidate's breakdown. Measurement failures must map to `false`.
    fn preserves_class(&self, x_old: &[f64], x_new: &[f64], bd_new: &EnergyBreakdown) -> bool;
    /// Exact Ciarlet–Nečas residual and acceptance bound, if the problem
    /// carries thickness machinery.
    fn cn_exact(&self, x: &[f64]) -> Option<Result<(f64, f64)>>;
    /// Are the soft residuals of an accepted breakdown inside tolerances?
    fn residuals_feasible(&self, bd: &EnergyBreakdown) -> bool;
    /// Validate the starting breakdown (hard feasibility preconditions).
    fn check_start(&self, bd: &EnergyBreakdown) -> Result<()>;
    fn weights(&self) -> PenaltyWeights;
    /// Residual levels above which the closure/angle weights ramp.
    fn continuation_thresholds(&self) -> (f64, f64, f64);
}

pub(crate) struct EngineOutput {
    pub x: Vec<f64>,
    pub trace: OptTrace,
}

const MAX_BACKTRACKS: usize = 30;
const STALL_LIMIT: usize = 3;
const CN_CHECK_EVERY: usize = 25;

/// Central-difference merit gradient at `x` (merit `base` already known).
/// Central differencing is load-bearing: a forward difference on the stiff
/// quadratic penalties carries a systematic `+pw·δ·(∂r/∂xᵢ)²` bias at small
/// residual `r` that drowns weak physical forces (e.g. the gravity pull on
/// the out-of-plane strains). Falls back to a one-sided difference at
/// barrier edges. Probes are independent; the order is fixed by parameter
/// index.
fn fd_merit_gradient<O: Objective>(obj: &O, x: &[f64], pw: &PenaltyWeights, base: f64) -> Vec<f64> {
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let delta = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.to_vec();
            xp[i] = x[i] + delta;
            let mp = obj.merit(&xp, pw);
            xp[i] = x[i] - delta;
            let mm = obj.merit(&xp, pw);
            match (mp.is_finite(), mm.is_finite()) {
                (true, true) => (mp - mm) / (2.0 * delta),
                (true, false) => (mp - base) / delta,
                (false, true) => (base - mm) / delta,
                (false, false) => 0.0,
            }
        })
        .collect()
}

/// One backtracking line search along `dir` from the current iterate.
/// Acceptance: finite merit strictly below the current one, hard flags,
/// integer-class preservation, and — when `monotone_total` — a strict
/// decrease of the physical total. On success the iterate, its breakdown,
/// and the merit are advanced in place. Returns (accepted, last step).
#[allow(clippy::too_many_arguments)]
fn line_search_step<O: Objective>(
    obj: &O,
    shrink: f64,
    x: &mut Vec<f64>,
    bd: &mut super::EnergyBreakdown,
    merit_cur: &mut f64,
    pw: &PenaltyWeights,
    dir: &[f64],
    t0: f64,
    cn_known: f64,
    monotone_total: bool,
) -> Result<(bool, f64)> {
    let xnorm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut ls_t = t0;
    let mut last_step = ls_t;
    for _ in 0..MAX_BACKTRACKS {
        last_step = ls_t;
        let mut cand: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi - ls_t * di).collect();
        obj.project(&mut cand);
        let m = obj.merit(&cand, pw);
        if m.is_finite() && m < *merit_cur - 1e-14 * (1.0 + merit_cur.abs()) {
            let mut cand_bd = obj.breakdown(&cand)?;
            cand_bd.cn_residual = cn_known;
            if cand_bd.hard_flags_pass()
                && (!monotone_total || cand_bd.total < bd.total)
                && obj.preserves_class(x, &cand, &cand_bd)
            {
                *x = cand;
                *bd = cand_bd;
                *merit_cur = m;
                return Ok((true, last_step));
            }
        }
        ls_t *= shrink;
        if ls_t < 1e-14 * (1.0 + xnorm) {
            break;
        }
    }
    Ok((false, last_step))
}

/// Bisector of the normalized merit and physical-energy gradients, scaled
/// to the merit gradient's ∞-norm. Steepest merit descent can wedge in a
/// state where every merit decrease is paid for by a *rise* of the total
/// (penalty rebalancing after a constraint overshoot), which the monotone
/// acceptance vetoes at every step size. The bisector decreases merit and
/// total together to first order unless the two gradients point opposite
/// ways — i.e. unless the iterate is Pareto-stationary for (merit, total),
/// which is this engine's notion of a converged constrained optimum.
/// The energy gradient reuses the merit with all-zero weights (the `+∞`
/// barrier branches still apply). `None` when no such direction exists.
fn pareto_direction<O: Objective>(obj: &O, x: &[f64], g_merit: &[f64]) -> Option<Vec<f64>> {
    let zero_pw = PenaltyWeights {
        closure: 0.0,
        angle: 0.0,
        cn: 0.0,
        delta: 0.0,
    };
    let e_base = obj.merit(x, &zero_pw);
    if !e_base.is_finite() {
        return None;
    }
    let g_e = fd_merit_gradient(obj, x, &zero_pw, e_base);
    let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (nm, ne) = (l2(g_merit), l2(&g_e));
    if !(nm > 0.0) || !(ne > 0.0) || !nm.is_finite() || !ne.is_finite() {
        return None;
    }
    let mut d: Vec<f64> = g_merit
        .iter()
        .zip(&g_e)
        .map(|(a, b)| a / nm + b / ne)
        .collect();
    let nd = l2(&d);
    if nd < 1e-8 {
        return None;
    }
    let g_inf = g_merit.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut d {
        *v *= g_inf / nd;
    }
    Some(d)
}

/// Feasibility-restoration pre-phase: merit descent until the soft
/// residuals are inside tolerance. Hard flags and integer classes are still
/// enforced, but the physical total may rise — closing an open curve costs
/// elastic energy, and the monotone main loop could never pay it.
/// Leaves `x`, `bd`, `merit_cur` at the restored configuration; gives up
/// silently on a stationary or fully rejected tail (the caller's residual
/// checks then decide how the run is judged).
fn restore_residuals<O: Objective>(
    obj: &O,
    params: &SolverParams,
    x: &mut Vec<f64>,
    bd: &mut super::EnergyBreakdown,
    merit_cur: &mut f64,
    pw: &PenaltyWeights,
    cn_known: f64,
) -> Result<()> {
    let mut t = 0.0f64;
    let mut fails = 0usize;
    for _ in 0..params.max_iters {
        if obj.residuals_feasible(bd) {
            return Ok(());
        }
        let base = *merit_cur;
        let g = fd_merit_gradient(obj, x, pw, base);
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xnorm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= params.gradient_tolerance * (1.0 + base.abs()) {
            return Ok(());
        }
        if t == 0.0 {
            t = 0.02 * (1.0 + xnorm) / (1.0 + gnorm);
        }
        t = t.min(0.5 * (1.0 + xnorm) / (1.0 + gnorm));
        let (accepted, last_step) = line_search_step(
            obj,
            params.shrink,
            x,
            bd,
            merit_cur,
            pw,
            &g,
            t,
            cn_known,
            false,
        )?;
        if accepted {
            t = last_step * 1.5;
            fails = 0;
        } else {
            fails += 1;
            if fails >= STALL_LIMIT {
                return Ok(());
            }
        }
    }
    Ok(())
}

pub(crate) fn run_descent<O: Objective>(obj: &O, params: &SolverParams) -> Result<EngineOutput> {
    params.validate()?;
    let mut x = obj.initial();
    // Hard feasibility is judged on the caller's start, before the
    // projection can silently repair it.
    let mut bd = obj.breakdown(&x)?;
    obj.check_start(&bd)?;
    {
        let x_raw = x.clone();
        obj.project(&mut x);
        if x != x_raw {
            bd = obj.breakdown(&x)?;
        }
    }
    let mut pw = obj.weights();
    let mut merit_cur = obj.merit(&x, &pw);
    if !merit_cur.is_finite() {
        return Err(Error::Infeasible {
            constraint: "barrier",
            detail: "initial configuration violates a barrier (Δ margin or reconstruction)"
                .into(),
        });
    }
    if let Some(res) = obj.cn_exact(&x) {
        let (r, bound) = res?;
        bd.cn_residual = r;
        if r > bound {
            return Err(Error::Infeasible {
                constraint: "ciarlet_necas",
                detail: format!("initial voxel residual {r:.3e} exceeds bound {bound:.3e}"),
            });
        }
    }
    let mut cn_known = bd.cn_residual;
    restore_residuals(obj, params, &mut x, &mut bd, &mut merit_cur, &pw, cn_known)?;
    let mut trace = OptTrace::default();
    trace.push(0, bd, 0.0, true);

    let mut t = 0.0f64;
    let mut accepted_count = 0usize;
    let mut consecutive_failures = 0usize;

    for iter in 1..=params.max_iters {
        let base = merit_cur;
        let g = fd_merit_gradient(obj, &x, &pw, base);
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xnorm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= params.gradient_tolerance * (1.0 + base.abs()) && obj.residuals_feasible(&bd) {
            break;
        }
        let t_cap = 0.5 * (1.0 + xnorm) / (1.0 + gnorm);
        if t == 0.0 {
            t = 0.02 * (1.0 + xnorm) / (1.0 + gnorm);
        }
        t = t.min(t_cap);

        let (mut accepted, mut last_step) = line_search_step(
            obj,
            params.shrink,
            &mut x,
            &mut bd,
            &mut merit_cur,
            &pw,
            &g,
            t,
            cn_known,
            true,
        )?;
        if !accepted {
            // Steepest merit descent can only trade constraint residual
            // against elastic energy; when that trade raises the total, the
            // monotone gate rejects every step size. Retry along the merit /
            // energy bisector, which lowers both unless Pareto-stationary.
            if let Some(d) = pareto_direction(obj, &x, &g) {
                (accepted, last_step) = line_search_step(
                    obj,
                    params.shrink,
                    &mut x,
                    &mut bd,
                    &mut merit_cur,
                    &pw,
                    &d,
                    t,
                    cn_known,
                    true,
                )?;
            }
        }

        if accepted {
            accepted_count += 1;
            consecutive_failures = 0;
            // Exact Ciarlet–Nečas audit of the surrogate barrier.
            if accepted_count % CN_CHECK_EVERY == 0 {
                if let Some(res) = obj.cn_exact(&x) {
                    let (r, bound) = res?;
                    cn_known = r;
                    bd.cn_residual = r;
                    if r > bound {
                        // The surrogate missed an overlap: the iterate is
                        // untrustworthy, stop on it flagged as stalled.
                        trace.push(iter, bd, last_step, false);
                        trace.stalled = true;
                        break;
                    }
                }
            }
            trace.push(iter, bd, last_step, true);
            t = (last_step * 1.5).min(t_cap);
            let (th_pos, th_tan, th_ang) = obj.continuation_thresholds();
            let mut bumped = false;
            if bd.closure_pos > th_pos || bd.closure_tan > th_tan {
                pw.closure = (pw.closure * 1.7).min(1e10);
                bumped = true;
            }
            if bd.angle > th_ang {
                pw.angle = (pw.angle * 1.7).min(1e10);
                bumped = true;
            }
            if bumped {
                merit_cur = obj.merit(&x, &pw);
            }
        } else {
            trace.push(iter, bd, last_step, false);
            consecutive_failures += 1;
            t = (t * params.shrink).max(1e-14 * (1.0 + xnorm));
            if consecutive_failures >= STALL_LIMIT {
                // A blocked line search at a residual-feasible iterate is a
                // numerical optimum; stalling means stopping short of
                // feasibility.
                trace.stalled = !obj.residuals_feasible(&bd);
                break;
            }
        }
    }

    Ok(EngineOutput { x, trace })
}

/// Place a clamp by a 6-dof update `(Δx, φ)`: rotate the axes by the
/// rotation vector `φ` about the clamp point, then translate by `Δx`.
pub(crate) fn placed_clamp(base: &ClampFrame, dof: &[f64]) -> Result<ClampFrame> {
    let delta = nalgebra::Vector3::new(dof[0], dof[1], dof[2]);
    let rot = nalgebra::Rotation3::from_scaled_axis(nalgebra::Vector3::new(
        dof[3], dof[4], dof[5],
    ));
    let t = (rot * base.t0()).normalize();
    let mut d = rot * base.d0();
    d -= t * t.dot(&d);
    ClampFrame::new(base.x0 + delta, t, d.normalize())
}

/// Single-rod adapter: parameters are the flat densities, plus the clamp's
/// 6 placement dof when the clamp is free.
pub(crate) struct KpObjective<'a> {
    p: &'a KPProblem,
    params: &'a SolverParams,
    length: f64,
    n_nodes: usize,
}

impl<'a> KpObjective<'a> {
    pub(crate) fn new(p: &'a KPProblem, params: &'a SolverParams) -> KpObjective<'a> {
        KpObjective {
            p,
            params,
            length: p.rod.densities.length(),
            n_nodes: p.rod.densities.n_samples(),
        }
    }

    pub(crate) fn decode(&self, x: &[f64]) -> Result<RodConfig> {
        let nd = 3 * self.n_nodes;
        let densities = DensityField::from_flat(self.length, &x[..nd])?;
        let clamp = if self.p.clamp_fixed {
            self.p.rod.clamp.clone()
        } else {
            placed_clamp(&self.p.rod.clamp, &x[nd..nd + 6])?
        };
        Ok(RodConfig::new(densities, clamp))
    }

    fn boundary_of(&self, x: &[f64]) -> Result<crate::topology::Polyline> {
        let w = self.decode(x)?;
        let c = reconstruct_frame(&w, 256.max(self.n_nodes))?;
        closed_boundary(&c, N_BOUNDARY)
    }
}

/// Project one `(κ₁, κ₂)` pair onto the section's non-interpenetration
/// constraint `scale·support_N(κ) ≤ 1` (support is 1-homogeneous in κ).
pub(crate) fn project_kappa_pair(
    section: &crate::rod::CrossSection,
    u: f64,
    k1: &mut f64,
    k2: &mut f64,
) {
    let s = section.scale_at(u) * section.support_n(*k1, *k2);
    if s > 1.0 - 1e-9 {
        let f = (1.0 - 1e-9) / s;
        *k1 *= f;
        *k2 *= f;
    }
}

impl Objective for KpObjective<'_> {
    fn initial(&self) -> Vec<f64> {
        let mut x = self.p.rod.densities.to_flat();
        if !self.p.clamp_fixed {
            x.extend_from_slice(&[0.0; 6]);
        }
        x
    }

    fn project(&self, x: &mut [f64]) {
        let n = self.n_nodes;
        for i in 0..n {
            let u = i as f64 / (n - 1) as f64;
            let (mut k1, mut k2) = (x[i], x[n + i]);
            project_kappa_pair(&self.p.section, u, &mut k1, &mut k2);
            x[i] = k1;
            x[n + i] = k2;
        }
    }

    fn merit(&self, x: &[f64], pw: &PenaltyWeights) -> f64 {
        match self.decode(x) {
            Ok(w) => rod_merit(self.p, &w, pw, 64),
            Err(_) => f64::INFINITY,
        }
    }

    fn breakdown(&self, x: &[f64]) -> Result<EnergyBreakdown> {
        let w = self.decode(x)?;
        let (bd, _) = breakdown_with_film(self.p, &w, self.params, true, false)?;
        Ok(bd)
    }

    fn preserves_class(&self, x_old: &[f64], x_new: &[f64], bd_new: &EnergyBreakdown) -> bool {
        if bd_new.link_defect != 0.0 {
            return false;
        }
        let (Ok(b_old), Ok(b_new)) = (self.boundary_of(x_old), self.boundary_of(x_new)) else {
            return false;
        };
        knot_class_guard(&b_old, &b_new, self.p.knot_thickness).unwrap_or(false)
    }

    fn cn_exact(&self, x: &[f64]) -> Option<Result<(f64, f64)>> {
        let voxel = self.p.tolerances.voxel_rel * self.length;
        Some(self.decode(x).and_then(|w| {
            let r = ciarlet_necas_residual(&w, &self.p.section, voxel)?;
            let volume = det_dp_integral(&w, &self.p.section);
            let surface = 2.0 * volume / self.p.section.max_radius().max(1e-12);
            Ok((r, 4.0 * voxel * surface))
        }))
    }

    fn residuals_feasible(&self, bd: &EnergyBreakdown) -> bool {
        let tol = &self.p.tolerances;
        bd.closure_pos <= tol.closure_rel * self.length
            && bd.closure_tan <= tol.closure_rel * self.length
            && bd.angle <= tol.angle
            && bd.delta_margin >= 0.0
    }

    fn check_start(&self, bd: &EnergyBreakdown) -> Result<()> {
        if !bd.e_ni_flag {
            return Err(Error::Infeasible {
                constraint: "local_injectivity",
                detail: "initial densities leave the section constraint set N".into(),
            });
        }
        if bd.link_defect != 0.0 {
            return Err(Error::Infeasible {
                constraint: "framing_link",
                detail: format!(
                    "initial framing link misses the target by {}",
                    bd.link_defect
                ),
            });
        }
        if bd.delta_margin <= 0.0 {
            return Err(Error::Infeasible {
                constraint: "global_radius",
                detail: format!("initial Δ margin {:.3e} is not positive", bd.delta_margin),
            });
        }
        Ok(())
    }

    fn weights(&self) -> PenaltyWeights {
        self.p.weights
    }

    fn continuation_thresholds(&self) -> (f64, f64, f64) {
        let tol = &self.p.tolerances;
        (
            0.5 * tol.closure_rel * self.length,
            0.5 * tol.closure_rel * self.length,
            0.5 * tol.angle,
        )
    }
}

/// Minimize the single-rod Kirchhoff–Plateau energy by projected-penalty
/// descent on the strain densities.
///
/// Returns the optimized rod, the film spanning its midline (solved for
/// reporting even when `σ = 0`), and the iteration trace. An infeasible
/// start errors; a fully rejected tail returns the best iterate, with the
/// trace flagged stalled when its residuals are still out of tolerance.
pub fn minimize_kp(
    p: &KPProblem,
    params: &SolverParams,
) -> Result<(RodConfig, SurfaceMesh, OptTrace)> {
    p.validate()?;
    let obj = KpObjective::new(p, params);
    let out = run_descent(&obj, params)?;
    let w = obj.decode(&out.x)?;
    let geo = evaluate_rod_geometry(&w, N_BOUNDARY)?;
    let spec = single_rod_spanning(p)?;
    let film = film_infimum(std::slice::from_ref(&geo.boundary), &spec, &film_params(params))?;
    Ok((w, film.mesh, out.trace))
}
