//! Coupled constrained minimization of rod energy plus spanning film area:
//! the clamped single-rod problem, linked pairs (with optional soft
//! repulsion), the thin-rod limit study, elastica–Plateau descent, and
//! quasi-static boundary sweeps.
//!
//! All minimizers share one contract: projected-penalty gradient descent on
//! the strain-density grid where *accepted steps strictly decrease the
//! physical total energy* (elastic + gravity + film + repulsion — penalties
//! are excluded from that invariant), integer invariants (framing link,
//! pairwise link, knot class) are preserved by step rejection, and pointwise
//! non-interpenetration is kept by projection.

mod descent;
mod elastica;
mod energy;
mod linked;
mod quasistatic;
mod reduction;

pub use descent::minimize_kp;
pub use elastica::{elastica_plateau, CurveEnergyFn, ElasticaProblem};
pub use energy::total_energy;
pub use linked::{minimize_linked, repulsive_energy, MultiRodProblem, Repulsion};
pub use quasistatic::{quasistatic_run, CurveFamily, QuasistaticStep};
pub use reduction::{dimensional_reduction_suite, DimredRow, DimredTable};

use crate::rod::{CrossSection, MaterialLaw, RodConfig};
use crate::{Error, Result};

/// Weights of the soft constraint penalties and barriers added to the
/// descent merit function (never to the reported total energy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    /// Quadratic penalty on the closure gaps (position and tangent).
    pub closure: f64,
    /// Quadratic penalty on the residual clamp angle.
    pub angle: f64,
    /// Midline self-repulsion barrier weight (Ciarlet–Nečas surrogate).
    pub cn: f64,
    /// Reciprocal barrier weight on the global-radius margin Δ − Δ₀.
    pub delta: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        // Closure and angle sit at exact-penalty scale: the elastic profit
        // of opening a unit-length loop is O(10) per unit gap, so 1e6 pins
        // the merit optimum's residuals near 1e-5·L — inside the default
        // tolerances without any continuation ramping.
        PenaltyWeights {
            closure: 1e6,
            angle: 1e6,
            cn: 1.0,
            delta: 1e-4,
        }
    }
}

impl PenaltyWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("closure", self.closure),
            ("angle", self.angle),
            ("cn", self.cn),
            ("delta", self.delta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "penalty weight `{name}` must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Feasibility tolerances enforced at return time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Closure residuals (position and tangent gap) end below this × L.
    pub closure_rel: f64,
    /// Clamp-angle residual bound, radians.
    pub angle: f64,
    /// Voxel edge of the exact Ciarlet–Nečas check, relative to L.
    pub voxel_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            closure_rel: 1e-4,
            angle: 1e-3,
            voxel_rel: 5e-3,
        }
    }
}

/// Which gravitational model the energy uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GravityModel {
    /// Exact integral over the solid rod via section moments (default).
    Section,
    /// Thin-limit line model: `−∫ (ρ₀|A| + ρ₁m₁ + ρ₂m₂)(g·x) ds`, the
    /// gravity term of the limit functional in the vanishing-thickness
    /// study.
    Line,
}

/// The single-rod problem: rod data, coupling constants, and constraint
/// targets.
#[derive(Debug, Clone)]
pub struct KPProblem {
    /// Initial guess; also fixes length and grid resolution.
    pub rod: RodConfig,
    pub section: CrossSection,
    pub material: MaterialLaw,
    /// Surface tension (energy per unit area; the film counts two faces).
    pub sigma: f64,
    /// Prescribed framing link `Lk(x, x + εd)`.
    pub target_z: i64,
    /// When false, the clamp placement (6 dof) joins the unknowns.
    pub clamp_fixed: bool,
    /// Tube thickness used by the knot-class guard.
    pub knot_thickness: f64,
    /// Lower bound Δ₀ for the global radius of curvature.
    pub delta0: f64,
    pub weights: PenaltyWeights,
    pub tolerances: Tolerances,
    pub gravity_model: GravityModel,
}

impl KPProblem {
    /// Problem with default coupling: σ = 0, z = 0, fixed clamp, guards
    /// sized from the cross-section.
    pub fn new(rod: RodConfig, section: CrossSection, material: MaterialLaw) -> Self {
        let r = section.max_radius();
        let l = rod.densities.length();
        KPProblem {
            rod,
            section,
            material,
            sigma: 0.0,
            target_z: 0,
            clamp_fixed: true,
            knot_thickness: r.max(1e-4 * l),
            delta0: (2.0 * r).max(1e-3 * l),
            weights: PenaltyWeights::default(),
            tolerances: Tolerances::default(),
            gravity_model: GravityModel::Section,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if !(self.delta0 > 0.0) || !self.delta0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "delta0 must be positive, got {}",
                self.delta0
            )));
        }
        if !(self.knot_thickness > 0.0) || !self.knot_thickness.is_finite() {
            return Err(Error::InvalidInput(format!(
                "knot_thickness must be positive, got {}",
                self.knot_thickness
            )));
        }
        self.weights.validate()
    }
}

/// Energy terms and constraint residuals at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub e_sh: f64,
    pub e_g: f64,
    /// `w ∈ N`: the local injectivity margin is nonnegative.
    pub e_ni_flag: bool,
    pub e_repulsion: f64,
    pub film_area: f64,
    pub e_film: f64,
    /// `|x(L) − x(0)|`.
    pub closure_pos: f64,
    /// `|t(L) − t(0)|`.
    pub closure_tan: f64,
    /// Residual clamp angle (radians), measured in the plane ⊥ t₀.
    pub angle: f64,
    /// `|framing link − target|`; `+∞` when the frame is too open to
    /// measure a link at all.
    pub link_defect: f64,
    /// Exact Ciarlet–Nečas voxel residual, when last checked.
    pub cn_residual: f64,
    /// Δ − Δ₀.
    pub delta_margin: f64,
    /// `e_sh + e_g + e_film + e_repulsion` when all hard flags pass,
    /// `+∞` sentinel otherwise (the indicator branch of E_ni).
    pub total: f64,
}

impl EnergyBreakdown {
    /// Hard feasibility flags: N-membership and finite repulsion.
    pub fn hard_flags_pass(&self) -> bool {
        self.e_ni_flag && self.e_repulsion.is_finite()
    }

    pub(crate) fn finish(mut self) -> Self {
        self.total = if self.hard_flags_pass() {
            self.e_sh + self.e_g + self.e_film + self.e_repulsion
        } else {
            f64::INFINITY
        };
        self
    }
}

/// One optimizer iteration: the evaluated breakdown, trial step, verdict.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub breakdown: EnergyBreakdown,
    pub step: f64,
    pub accepted: bool,
}

/// Iteration history. `rows[0]` is the initial configuration.
#[derive(Debug, Clone, Default)]
pub struct OptTrace {
    pub rows: Vec<TraceRow>,
    /// The run stopped short: every late step was rejected while constraint
    /// residuals were still out of tolerance (or an exact self-overlap
    /// audit failed). The result is the best iterate found.
    pub stalled: bool,
}

impl OptTrace {
    pub(crate) fn push(&mut self, iter: usize, breakdown: EnergyBreakdown, step: f64, accepted: bool) {
        self.rows.push(TraceRow {
            iter,
            breakdown,
            step,
            accepted,
        });
    }

    /// Totals of accepted rows, in order.
    pub fn accepted_totals(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.breakdown.total)
            .collect()
    }

    /// True when accepted totals never increase.
    pub fn is_monotone(&self) -> bool {
        self.accepted_totals().windows(2).all(|w| w[1] <= w[0])
    }

    /// Breakdown of the last accepted row (the returned iterate).
    pub fn final_breakdown(&self) -> Option<EnergyBreakdown> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.accepted)
            .map(|r| r.breakdown)
    }

    /// CSV with the exact column layout consumed by the CLI.
    pub fn to_csv(&self) -> String {
        use crate::io::fmt;
        let mut s = String::from(
            "iter,total,e_sh,e_g,e_film,e_rep,closure_pos,closure_tan,angle,link,cn,delta_margin,step,accepted\n",
        );
        for r in &self.rows {
            let b = &r.breakdown;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.iter,
                fmt(b.total),
                fmt(b.e_sh),
                fmt(b.e_g),
                fmt(b.e_film),
                fmt(b.e_repulsion),
                fmt(b.closure_pos),
                fmt(b.closure_tan),
                fmt(b.angle),
                fmt(b.link_defect),
                fmt(b.cn_residual),
                fmt(b.delta_margin),
                fmt(r.step),
                u8::from(r.accepted),
            ));
        }
        s
    }
}
