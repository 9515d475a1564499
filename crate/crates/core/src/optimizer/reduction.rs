//! Vanishing-thickness study: minimize the rescaled energy for a family of
//! section scales ε and compare against the thin-rod limit functional
//! (midline elastic energy + film + line-density gravity).
//!
//! The rescaled problem at scale ε carries the section `εA(s)`, gravity
//! divided by ε², and the density profile expressed in rescaled section
//! coordinates (`ρ^ε(ζ) = ρ(ζ/ε)`, i.e. affine gradients divided by ε).
//! With a centered section the gravity terms of the two models then differ
//! by O(ε) moment corrections, which is exactly the gap the table records.

use super::descent::minimize_kp;
use super::{GravityModel, KPProblem};
use crate::film::SolverParams;
use crate::rod::MassDensity;
use crate::{Error, Result};

/// One row of the reduction table: the rescaled run at scale `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimredRow {
    pub eps: f64,
    /// Final total of the rescaled minimization (NaN when infeasible).
    pub total: f64,
    /// `|total − limit_total|` (NaN when infeasible).
    pub gap: f64,
    /// False when the rescaled run's start was infeasible.
    pub feasible: bool,
}

/// Energies of the limit model and of every rescaled run.
#[derive(Debug, Clone, PartialEq)]
pub struct DimredTable {
    /// Final total of the thin-rod limit functional.
    pub limit_total: f64,
    pub rows: Vec<DimredRow>,
}

/// The rescaled problem at section scale `eps`.
pub(crate) fn rescaled_problem(p: &KPProblem, eps: f64) -> Result<KPProblem> {
    let mut q = p.clone();
    q.section = p.section.uniformly_scaled(eps)?;
    q.material.gravity = p.material.gravity / (eps * eps);
    q.material.rho = match &p.material.rho {
        MassDensity::Uniform(r) => MassDensity::Uniform(*r),
        MassDensity::Affine { base, grad1, grad2 } => MassDensity::Affine {
            base: base.clone(),
            grad1: grad1.iter().map(|g| g / eps).collect(),
            grad2: grad2.iter().map(|g| g / eps).collect(),
        },
    };
    q.gravity_model = GravityModel::Section;
    // Tube-scale guards shrink with the section; midline-scale Δ₀ stays.
    let l = p.rod.densities.length();
    q.knot_thickness = (p.knot_thickness * eps).max(1e-4 * l);
    Ok(q)
}

/// The thin-rod limit problem: same data, line-model gravity.
pub(crate) fn limit_problem(p: &KPProblem) -> KPProblem {
    let mut q = p.clone();
    q.gravity_model = GravityModel::Line;
    q
}

/// Minimize the rescaled energy for every ε in `eps_list` (positive,
/// strictly decreasing) and the limit functional, and tabulate the energy
/// gaps. A rescaled run whose start is infeasible is flagged rather than
/// failing the suite.
pub fn dimensional_reduction_suite(
    p: &KPProblem,
    eps_list: &[f64],
    params: &SolverParams,
) -> Result<DimredTable> {
    p.validate()?;
    if eps_list.is_empty() {
        return Err(Error::InvalidInput("eps_list must be nonempty".into()));
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidInput(
                "eps_list must be strictly decreasing".into(),
            ));
        }
    }
    if !eps_list.iter().all(|&e| e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidInput("eps values must be positive".into()));
    }

    let (_, _, limit_trace) = minimize_kp(&limit_problem(p), params)?;
    let limit_total = limit_trace
        .final_breakdown()
        .ok_or_else(|| Error::NoConvergence {
            solver: "dimensional_reduction",
            detail: "limit run produced no iterations".into(),
        })?
        .total;

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let q = rescaled_problem(p, eps)?;
        match minimize_kp(&q, params) {
            Ok((_, _, trace)) => {
                let total = trace
                    .final_breakdown()
                    .ok_or_else(|| Error::NoConvergence {
                        solver: "dimensional_reduction",
                        detail: "rescaled run produced no iterations".into(),
                    })?
                    .total;
                rows.push(DimredRow {
                    eps,
                    total,
                    gap: (total - limit_total).abs(),
                    feasible: true,
                });
            }
            Err(Error::Infeasible { .. }) => rows.push(DimredRow {
                eps,
                total: f64::NAN,
                gap: f64::NAN,
                feasible: false,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(DimredTable { limit_total, rows })
}
