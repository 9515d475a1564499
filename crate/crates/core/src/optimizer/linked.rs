//! Linked pairs: joint descent over two rods (the second freely placed),
//! preserving the pairwise linking number and keeping the tubes apart —
//! either by a hard midline-distance surrogate or by a soft repulsive
//! energy that blows up on contact.

use super::descent::{placed_clamp, run_descent, Objective};
use super::energy::{
    breakdown_with_film, evaluate_rod_geometry, film_params, link_curve, merit_value,
    rod_merit_parts, N_BOUNDARY,
};
use super::{EnergyBreakdown, KPProblem, OptTrace, PenaltyWeights};
use crate::film::{film_infimum, SolverParams, SurfaceMesh};
use crate::rod::{
    ciarlet_necas_residual, det_dp_integral, reconstruct_frame, DensityField, FramedCurve,
    RodConfig,
};
use crate::topology::{gauss_linking, knot_class_guard, SpanningClassSpec};
use crate::{Error, Result};

/// Soft inter-rod repulsion `∫∫ dσ₁dσ₂ / h(‖x¹ − x²‖)` with the hinge
/// profile `h(r) = h_slope·max(r − h_epsilon, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Repulsion {
    /// Contact distance: the energy is `+∞` at separations ≤ this.
    pub h_epsilon: f64,
    /// Slope of the hinge beyond contact.
    pub h_slope: f64,
}

impl Repulsion {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_epsilon > 0.0) || !self.h_epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "h_epsilon must be positive, got {}",
                self.h_epsilon
            )));
        }
        if !(self.h_slope > 0.0) || !self.h_slope.is_finite() {
            return Err(Error::InvalidInput(format!(
                "h_slope must be positive, got {}",
                self.h_slope
            )));
        }
        Ok(())
    }
}

/// Two coupled rod problems plus the pairwise constraints.
#[derive(Debug, Clone)]
pub struct MultiRodProblem {
    /// Per-rod data. By default the second rod's clamp placement is free
    /// (six extra unknowns) while the first anchors the gauge.
    pub rods: [KPProblem; 2],
    /// Prescribed linking number η between the two midlines.
    pub target_eta: i64,
    /// When present, replaces the hard non-interpenetration surrogate by
    /// the soft repulsive energy (which joins the physical total).
    pub repulsion: Option<Repulsion>,
    /// Merit weight of the overlap hinge used when `repulsion` is absent.
    pub overlap_weight: f64,
}

impl MultiRodProblem {
    /// Pair with the conventional gauge: rod 1 clamped, rod 2 free.
    pub fn new(rod1: KPProblem, mut rod2: KPProblem) -> Self {
        rod2.clamp_fixed = false;
        MultiRodProblem {
            rods: [rod1, rod2],
            target_eta: 0,
            repulsion: None,
            overlap_weight: 1e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.rods {
            r.validate()?;
        }
        if let Some(rep) = &self.repulsion {
            rep.validate()?;
        }
        if self.rods[0].sigma != self.rods[1].sigma {
            return Err(Error::InvalidInput(format!(
                "the film has one tension: sigma {} vs {}",
                self.rods[0].sigma, self.rods[1].sigma
            )));
        }
        if !(self.overlap_weight >= 0.0) || !self.overlap_weight.is_finite() {
            return Err(Error::InvalidInput(format!(
                "overlap_weight must be nonnegative, got {}",
                self.overlap_weight
            )));
        }
        Ok(())
    }

    fn sigma(&self) -> f64 {
        self.rods[0].sigma
    }

    fn contact_radius(&self) -> f64 {
        self.rods[0].section.max_radius() + self.rods[1].section.max_radius()
    }
}

/// Repulsive interaction `∫∫ 1/h(‖x¹(s₁) − x²(s₂)‖) ds₁ ds₂` with
/// `h(r) = h_slope·max(r − h_epsilon, 0)`, by the trapezoid rule on both
/// sample grids. Any node pair at distance ≤ `h_epsilon` makes the value
/// `+∞` — a sentinel, not an error.
///
/// The integrand is symmetric, and so is the returned value, bitwise: the
/// arguments are put into a canonical order before summing so the rounding
/// of the double sum cannot depend on which curve came first.
pub fn repulsive_energy(c1: &FramedCurve, c2: &FramedCurve, h_epsilon: f64, h_slope: f64) -> f64 {
    let lex_greater = |a: &FramedCurve, b: &FramedCurve| {
        for (sa, sb) in a.samples().iter().zip(b.samples()) {
            for k in 0..3 {
                match sa.x[k].total_cmp(&sb.x[k]) {
                    std::cmp::Ordering::Less => return false,
                    std::cmp::Ordering::Greater => return true,
                    std::cmp::Ordering::Equal => {}
                }
            }
        }
        false
    };
    let swap = match c1.n_samples().cmp(&c2.n_samples()) {
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => lex_greater(c1, c2),
    };
    let (ca, cb) = if swap { (c2, c1) } else { (c1, c2) };
    let (n1, n2) = (ca.n_samples(), cb.n_samples());
    let mut sum = 0.0;
    for i in 0..n1 {
        let wi = if i == 0 || i == n1 - 1 { 0.5 } else { 1.0 };
        let xi = ca.x(i);
        let mut row = 0.0;
        for j in 0..n2 {
            let wj = if j == 0 || j == n2 - 1 { 0.5 } else { 1.0 };
            let r = (xi - cb.x(j)).norm();
            if r <= h_epsilon {
                return f64::INFINITY;
            }
            row += wj / (h_slope * (r - h_epsilon));
        }
        sum += wi * row;
    }
    sum * (ca.arc_step() * cb.arc_step())
}

/// Minimum distance between the nodes of two sampled curves.
fn min_pair_distance(c1: &FramedCurve, c2: &FramedCurve) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..c1.n_samples() {
        let xi = c1.x(i);
        for j in 0..c2.n_samples() {
            d = d.min((xi - c2.x(j)).norm());
        }
    }
    d
}

struct LinkedObjective<'a> {
    p: &'a MultiRodProblem,
    params: &'a SolverParams,
    /// Parameter layout: per-rod density block, then per-rod 6-dof clamp
    /// block for each free clamp, in rod order.
    dims: [usize; 2],
    lengths: [f64; 2],
}

impl<'a> LinkedObjective<'a> {
    fn new(p: &'a MultiRodProblem, params: &'a SolverParams) -> Self {
        let dims = [
            3 * p.rods[0].rod.densities.n_samples(),
            3 * p.rods[1].rod.densities.n_samples(),
        ];
        let lengths = [
            p.rods[0].rod.densities.length(),
            p.rods[1].rod.densities.length(),
        ];
        LinkedObjective {
            p,
            params,
            dims,
            lengths,
        }
    }

    fn clamp_offsets(&self) -> [Option<usize>; 2] {
        let mut off = self.dims[0] + self.dims[1];
        let mut out = [None, None];
        for (k, rod) in self.p.rods.iter().enumerate() {
            if !rod.clamp_fixed {
                out[k] = Some(off);
                off += 6;
            }
        }
        out
    }

    fn decode_one(&self, x: &[f64], k: usize) -> Result<RodConfig> {
        let start = if k == 0 { 0 } else { self.dims[0] };
        let densities =
            DensityField::from_flat(self.lengths[k], &x[start..start + self.dims[k]])?;
        let clamp = match self.clamp_offsets()[k] {
            Some(off) => placed_clamp(&self.p.rods[k].rod.clamp, &x[off..off + 6])?,
            None => self.p.rods[k].rod.clamp.clone(),
        };
        Ok(RodConfig::new(densities, clamp))
    }

    fn decode(&self, x: &[f64]) -> Result<[RodConfig; 2]> {
        Ok([self.decode_one(x, 0)?, self.decode_one(x, 1)?])
    }

    /// Inter-rod merit term and physical repulsion on coarse midlines.
    fn interaction(&self, w: &[RodConfig; 2]) -> Result<(f64, f64)> {
        let c1 = reconstruct_frame(&w[0], 128.max(w[0].densities.n_samples()))?;
        let c2 = reconstruct_frame(&w[1], 128.max(w[1].densities.n_samples()))?;
        match &self.p.repulsion {
            Some(rep) => {
                let e = repulsive_energy(&c1, &c2, rep.h_epsilon, rep.h_slope);
                Ok((e, e))
            }
            None => {
                let gap = self.p.contact_radius() - min_pair_distance(&c1, &c2);
                let hinge = gap.max(0.0);
                Ok((self.p.overlap_weight * hinge * hinge, 0.0))
            }
        }
    }

    fn boundaries(&self, x: &[f64]) -> Result<[crate::topology::Polyline; 2]> {
        let w = self.decode(x)?;
        let g0 = evaluate_rod_geometry(&w[0], N_BOUNDARY)?;
        let g1 = evaluate_rod_geometry(&w[1], N_BOUNDARY)?;
        Ok([g0.boundary, g1.boundary])
    }
}

impl Objective for LinkedObjective<'_> {
    fn initial(&self) -> Vec<f64> {
        let mut x = self.p.rods[0].rod.densities.to_flat();
        x.extend(self.p.rods[1].rod.densities.to_flat());
        for rod in &self.p.rods {
            if !rod.clamp_fixed {
                x.extend_from_slice(&[0.0; 6]);
            }
        }
        x
    }

    fn project(&self, x: &mut [f64]) {
        for k in 0..2 {
            let start = if k == 0 { 0 } else { self.dims[0] };
            let n = self.dims[k] / 3;
            for i in 0..n {
                let u = i as f64 / (n - 1) as f64;
                let (mut k1, mut k2) = (x[start + i], x[start + n + i]);
                super::descent::project_kappa_pair(&self.p.rods[k].section, u, &mut k1, &mut k2);
                x[start + i] = k1;
                x[start + n + i] = k2;
            }
        }
    }

    fn merit(&self, x: &[f64], pw: &PenaltyWeights) -> f64 {
        let Ok(w) = self.decode(x) else {
            return f64::INFINITY;
        };
        let mut total = 0.0;
        for k in 0..2 {
            let parts = match rod_merit_parts(&self.p.rods[k], &w[k], 64) {
                Ok(parts) => parts,
                Err(_) => return f64::INFINITY,
            };
            total += merit_value(&parts, pw, self.lengths[k], self.p.rods[k].delta0);
        }
        if !total.is_finite() {
            return f64::INFINITY;
        }
        match self.interaction(&w) {
            Ok((merit_term, _)) => total + merit_term,
            Err(_) => f64::INFINITY,
        }
    }

    fn breakdown(&self, x: &[f64]) -> Result<EnergyBreakdown> {
        let w = self.decode(x)?;
        let (b0, _) = breakdown_with_film(&self.p.rods[0], &w[0], self.params, false, false)?;
        let (b1, _) = breakdown_with_film(&self.p.rods[1], &w[1], self.params, false, false)?;

        // Inter-rod terms at full resolution.
        let c1 = link_curve(&w[0], 0.5 * self.p.rods[0].knot_thickness)?;
        let c2 = link_curve(&w[1], 0.5 * self.p.rods[1].knot_thickness)?;
        let e_repulsion = match &self.p.repulsion {
            Some(rep) => repulsive_energy(&c1, &c2, rep.h_epsilon, rep.h_slope),
            None => {
                if min_pair_distance(&c1, &c2) < self.p.contact_radius() {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        };

        // Pairwise link joins the per-rod framing defects.
        let g0 = evaluate_rod_geometry(&w[0], N_BOUNDARY)?;
        let g1 = evaluate_rod_geometry(&w[1], N_BOUNDARY)?;
        let eta_defect = match gauss_linking(&g0.boundary, &g1.boundary) {
            Ok(eta) => (eta - self.p.target_eta).abs() as f64,
            Err(_) => f64::INFINITY,
        };

        // Film spanning both midlines.
        let sigma = self.p.sigma();
        let (film_area, e_film) = if sigma > 0.0 {
            let spec = two_rod_spanning(self.p)?;
            let r =
                film_infimum(&[g0.boundary, g1.boundary], &spec, &film_params(self.params))?;
            (r.area, crate::film::film_energy(&r.mesh, sigma))
        } else {
            (0.0, 0.0)
        };

        let bd = EnergyBreakdown {
            e_sh: b0.e_sh + b1.e_sh,
            e_g: b0.e_g + b1.e_g,
            e_ni_flag: b0.e_ni_flag && b1.e_ni_flag,
            e_repulsion,
            film_area,
            e_film,
            closure_pos: b0.closure_pos.max(b1.closure_pos),
            closure_tan: b0.closure_tan.max(b1.closure_tan),
            angle: b0.angle.max(b1.angle),
            link_defect: b0.link_defect + b1.link_defect + eta_defect,
            cn_residual: f64::NAN,
            delta_margin: b0.delta_margin.min(b1.delta_margin),
            total: f64::NAN,
        }
        .finish();
        Ok(bd)
    }

    fn preserves_class(&self, x_old: &[f64], x_new: &[f64], bd_new: &EnergyBreakdown) -> bool {
        if bd_new.link_defect != 0.0 {
            return false;
        }
        let (Ok(b_old), Ok(b_new)) = (self.boundaries(x_old), self.boundaries(x_new)) else {
            return false;
        };
        (0..2).all(|k| {
            knot_class_guard(&b_old[k], &b_new[k], self.p.rods[k].knot_thickness)
                .unwrap_or(false)
        })
    }

    fn cn_exact(&self, x: &[f64]) -> Option<Result<(f64, f64)>> {
        Some(self.decode(x).and_then(|w| {
            let mut worst = (0.0f64, f64::INFINITY);
            for k in 0..2 {
                let rod = &self.p.rods[k];
                let voxel = rod.tolerances.voxel_rel * self.lengths[k];
                let r = ciarlet_necas_residual(&w[k], &rod.section, voxel)?;
                let volume = det_dp_integral(&w[k], &rod.section);
                let bound =
                    4.0 * voxel * 2.0 * volume / rod.section.max_radius().max(1e-12);
                worst = (worst.0.max(r), worst.1.min(bound));
            }
            Ok(worst)
        }))
    }

    fn residuals_feasible(&self, bd: &EnergyBreakdown) -> bool {
        let l = self.lengths[0].min(self.lengths[1]);
        let tol = &self.p.rods[0].tolerances;
        bd.closure_pos <= tol.closure_rel * l
            && bd.closure_tan <= tol.closure_rel * l
            && bd.angle <= tol.angle
            && bd.delta_margin >= 0.0
    }

    fn check_start(&self, bd: &EnergyBreakdown) -> Result<()> {
        if !bd.e_ni_flag {
            return Err(Error::Infeasible {
                constraint: "local_injectivity",
                detail: "an initial rod leaves the section constraint set N".into(),
            });
        }
        if !bd.e_repulsion.is_finite() {
            return Err(Error::Infeasible {
                constraint: "non_interpenetration",
                detail: "initial rods touch or overlap".into(),
            });
        }
        if bd.link_defect != 0.0 {
            return Err(Error::Infeasible {
                constraint: "link",
                detail: format!(
                    "initial framing/pairwise link misses its target by {}",
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
        self.p.rods[0].weights
    }

    fn continuation_thresholds(&self) -> (f64, f64, f64) {
        let l = self.lengths[0].min(self.lengths[1]);
        let tol = &self.p.rods[0].tolerances;
        (
            0.5 * tol.closure_rel * l,
            0.5 * tol.closure_rel * l,
            0.5 * tol.angle,
        )
    }
}

/// Spanning spec used for the two-rod film. Verification always exercises
/// meridian loops around *both* rods; the single nonzero target fixes the
/// orientation convention.
fn two_rod_spanning(p: &MultiRodProblem) -> Result<SpanningClassSpec> {
    let a_r = p
        .contact_radius()
        .max(1e-3 * p.rods[0].rod.densities.length())
        / 2.0;
    SpanningClassSpec::multi_rod(vec![1, 0], a_r)
}

/// Joint minimization of the two-rod Kirchhoff–Plateau energy. The pairwise
/// linking number η and both framing links are preserved by step rejection;
/// non-interpenetration between the tubes is kept hard (midline-distance
/// surrogate) or soft (repulsive energy), per the problem.
pub fn minimize_linked(
    p: &MultiRodProblem,
    params: &SolverParams,
) -> Result<(RodConfig, RodConfig, SurfaceMesh, OptTrace)> {
    p.validate()?;
    let obj = LinkedObjective::new(p, params);
    let out = run_descent(&obj, params)?;
    let w = obj.decode(&out.x)?;
    let g0 = evaluate_rod_geometry(&w[0], N_BOUNDARY)?;
    let g1 = evaluate_rod_geometry(&w[1], N_BOUNDARY)?;
    let spec = two_rod_spanning(p)?;
    let film = film_infimum(&[g0.boundary, g1.boundary], &spec, &film_params(params))?;
    let [w0, w1] = w;
    Ok((w0, w1, film.mesh, out.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rod::{ClampFrame, CrossSection, CurveSample, MaterialLaw};
    use nalgebra::{Matrix3, Point3, Vector3};

    fn rod_problem(rod: RodConfig, section_r: f64) -> KPProblem {
        let mut p = KPProblem::new(
            rod,
            CrossSection::disc(section_r).unwrap(),
            MaterialLaw::quadratic(1.0, 1.0, 1.0).unwrap(),
        );
        p.delta0 = 0.02;
        p
    }

    fn perturbed_circle(n: usize, amp: f64, clamp: ClampFrame) -> RodConfig {
        let l = 1.0;
        let k = 2.0 * std::f64::consts::PI / l;
        let kappa1: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                k * (1.0 + amp * (4.0 * std::f64::consts::PI * s).sin())
            })
            .collect();
        RodConfig::new(
            DensityField::new(l, kappa1, vec![0.0; n], vec![0.0; n]).unwrap(),
            clamp,
        )
    }

    /// Closed polygonal circle as a framed curve: `n` chords of equal
    /// length around radius `r`, frames orthonormal, duplicate end sample.
    fn polygon_circle(r: f64, n: usize, z: f64) -> FramedCurve {
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let x = Point3::new(r * th.cos(), r * th.sin(), z);
            let t = Vector3::new(-th.sin(), th.cos(), 0.0);
            let d = Vector3::new(th.cos(), th.sin(), 0.0);
            let rot = Matrix3::from_columns(&[t, d, t.cross(&d)]);
            samples.push(CurveSample { x, r: rot });
        }
        let chord = 2.0 * r * (std::f64::consts::PI / n as f64).sin();
        FramedCurve::from_samples(samples, chord, Vec::new()).unwrap()
    }

    #[test]
    fn repulsion_hits_the_contact_sentinel() {
        let c1 = polygon_circle(1.0, 64, 0.0);
        let c2 = polygon_circle(1.0, 64, 0.05);
        assert!(repulsive_energy(&c1, &c2, 0.1, 1.0).is_infinite());
    }

    #[test]
    fn repulsion_is_exactly_symmetric() {
        let c1 = polygon_circle(1.0, 48, 0.0);
        let c2 = polygon_circle(0.7, 32, 2.0);
        let a = repulsive_energy(&c1, &c2, 0.1, 2.0);
        let b = repulsive_energy(&c2, &c1, 0.1, 2.0);
        assert!(a.is_finite());
        assert_eq!(a, b, "integrand is symmetric, quadrature must be too");
    }

    #[test]
    fn repulsion_matches_refined_quadrature() {
        // Two parallel unit circles 5 apart. The quadrature itself is the
        // periodic trapezoid rule (spectral on a fixed geometry), but each
        // n-gon's perimeter is (π/n)²/6 short of the circle's, so refining
        // the polygons converges at second order.
        let at = |n: usize| {
            repulsive_energy(
                &polygon_circle(1.0, n, 0.0),
                &polygon_circle(1.0, n, 5.0),
                0.1,
                1.0,
            )
        };
        let fine = at(1024);
        let e16 = (at(16) - fine).abs();
        let e32 = (at(32) - fine).abs();
        let e128 = (at(128) - fine).abs();
        assert!(e16 / e32 > 3.5, "order two: err(16) {e16:.3e}, err(32) {e32:.3e}");
        assert!(e128 <= 1e-3 * fine.abs(), "err(128) {e128:.3e} vs refined {fine}");
    }

    #[test]
    fn distant_unlinked_circles_relax_independently() {
        let p1 = rod_problem(perturbed_circle(12, 0.05, ClampFrame::standard()), 0.01);
        let clamp2 = ClampFrame::new(
            Point3::new(10.0, 0.0, 0.0),
            Vector3::x(),
            Vector3::y(),
        )
        .unwrap();
        let p2 = rod_problem(perturbed_circle(12, 0.05, clamp2), 0.01);
        let mp = MultiRodProblem::new(p1, p2);
        let params = SolverParams {
            max_iters: 200,
            gradient_tolerance: 1e-5,
            ..SolverParams::default()
        };
        let (_w1, _w2, _mesh, trace) = minimize_linked(&mp, &params).unwrap();
        let total = trace.final_breakdown().unwrap().total;
        let exact = 4.0 * std::f64::consts::PI.powi(2); // two decoupled circles
        assert!(
            (total - exact).abs() < 0.02 * exact,
            "total {total} vs two circles {exact}"
        );
        assert!(trace.is_monotone());
    }

    /// Hopf-linked pair: rod 2's circle threads rod 1's disc.
    fn hopf_pair() -> MultiRodProblem {
        let r = 1.0 / (2.0 * std::f64::consts::PI);
        let p1 = rod_problem(perturbed_circle(12, 0.02, ClampFrame::standard()), 0.004);
        let clamp2 = ClampFrame::new(
            Point3::new(0.0, 0.5 * r, 0.0),
            Vector3::z(),
            Vector3::y(),
        )
        .unwrap();
        let p2 = rod_problem(perturbed_circle(12, 0.02, clamp2), 0.004);
        let mut mp = MultiRodProblem::new(p1, p2);
        mp.target_eta = 0; // patched by the caller after measuring
        mp
    }

    #[test]
    fn hopf_link_is_preserved_at_every_accepted_iterate() {
        let mut mp = hopf_pair();
        // Measure the start's linking number and demand it be kept.
        let g0 = evaluate_rod_geometry(&mp.rods[0].rod, N_BOUNDARY).unwrap();
        let g1 = evaluate_rod_geometry(&mp.rods[1].rod, N_BOUNDARY).unwrap();
        let eta = gauss_linking(&g0.boundary, &g1.boundary).unwrap();
        assert_eq!(eta.abs(), 1, "construction must be Hopf-linked");
        mp.target_eta = eta;
        let params = SolverParams {
            max_iters: 60,
            gradient_tolerance: 1e-5,
            ..SolverParams::default()
        };
        let (w1, w2, _mesh, trace) = minimize_linked(&mp, &params).unwrap();
        assert!(trace.rows.iter().filter(|r| r.accepted).count() > 1);
        for row in trace.rows.iter().filter(|r| r.accepted) {
            assert_eq!(row.breakdown.link_defect, 0.0);
        }
        // The returned pair still links.
        let g0 = evaluate_rod_geometry(&w1, N_BOUNDARY).unwrap();
        let g1 = evaluate_rod_geometry(&w2, N_BOUNDARY).unwrap();
        assert_eq!(gauss_linking(&g0.boundary, &g1.boundary).unwrap(), eta);
        assert!(trace.is_monotone());
    }

    #[test]
    fn gravity_pull_never_breaches_the_contact_surrogate() {
        // Rod 2 hangs above rod 1 and is pulled down; the overlap hinge
        // plus the hard sentinel keep the midlines r₁ + r₂ apart.
        let p1 = rod_problem(perturbed_circle(10, 0.0, ClampFrame::standard()), 0.02);
        let clamp2 = ClampFrame::new(
            Point3::new(0.0, 0.0, 0.12),
            Vector3::x(),
            Vector3::y(),
        )
        .unwrap();
        let mut p2 = rod_problem(perturbed_circle(10, 0.0, clamp2), 0.02);
        p2.material = p2
            .material
            .clone()
            .with_gravity(
                crate::rod::MassDensity::Uniform(1.0),
                Vector3::new(0.0, 0.0, -2.0),
            )
            .unwrap();
        let mp = MultiRodProblem::new(p1, p2);
        let params = SolverParams {
            max_iters: 80,
            gradient_tolerance: 1e-7,
            ..SolverParams::default()
        };
        let (w1, w2, _mesh, trace) = minimize_linked(&mp, &params).unwrap();
        let contact = mp.contact_radius();
        let c1 = reconstruct_frame(&w1, 256).unwrap();
        let c2 = reconstruct_frame(&w2, 256).unwrap();
        assert!(
            min_pair_distance(&c1, &c2) >= contact - 1e-9,
            "min distance {} vs contact {contact}",
            min_pair_distance(&c1, &c2)
        );
        // Gravity did move rod 2 downward.
        let z2: f64 = c2.samples().iter().map(|s| s.x.z).sum::<f64>() / c2.n_samples() as f64;
        assert!(z2 < 0.12, "rod 2 should descend, centroid z {z2}");
        assert!(trace.is_monotone());
    }

    #[test]
    fn mismatched_tension_is_rejected() {
        let p1 = rod_problem(perturbed_circle(8, 0.0, ClampFrame::standard()), 0.01);
        let mut p2 = p1.clone();
        p2.sigma = 0.5;
        let mp = MultiRodProblem::new(p1, p2);
        assert!(mp.validate().is_err());
    }
}
