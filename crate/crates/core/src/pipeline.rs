//! End-to-end certification of singular arcs.

use crate::dcturn::{
    self, finite_turn_certificate, mixing_select, reparametrize, step3_construct, GraphParam, MixingResult,
    Step3Result, TurnCertificate,
};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::model::SemiconcaveFn;
use crate::oracle::{self, NumericGradient};
use crate::subdiff;
use crate::tracer::{self, CyReport, SeedDirection, SingularArc, StopReason, TraceOptions};

/// Tolerances of the per-arc checks.
pub const CONVEXITY_TOL: f64 = 1e-9;
pub const RECONSTRUCTION_TOL: f64 = 1e-9;
pub const SELECTION_TOL: f64 = 1e-6;
pub const DOMINATION_TOL: f64 = 1e-9;
/// Finite-difference step of the per-sample singularity check.
pub const ORACLE_FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyOptions {
    pub trace: TraceOptions,
    pub delta_min: f64,
    pub turn_tol: f64,
}

/// An arc to trace: where it starts and which way.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcStart {
    pub x0: Vec2,
    pub seed: SeedDirection,
}

/// Seed directions at the given points, or at singular points found by an
/// oracle scan (one per branch pair) when `points` is empty.
pub fn arc_starts(f: &SemiconcaveFn, points: &[Vec2], grid_h: f64, tol_active: f64) -> Result<Vec<ArcStart>> {
    let mut starts = Vec::new();
    if points.is_empty() {
        let scan = oracle::grid_singularity_scan(f, grid_h)?;
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for c in scan.centers() {
            let Some((p, pair)) = tracer::project_to_singular(f, c, tol_active) else { continue };
            if seen.contains(&pair) {
                continue;
            }
            seen.push(pair);
            let dirs = tracer::seed_directions(f, p, tol_active)?;
            starts.extend(dirs.into_iter().filter(|d| d.pair == pair).map(|seed| ArcStart { x0: p, seed }));
        }
    } else {
        for &p in points {
            for seed in tracer::seed_directions(f, p, tol_active)? {
                starts.push(ArcStart { x0: p, seed });
            }
        }
    }
    Ok(starts)
}

pub fn trace_start(f: &SemiconcaveFn, start: &ArcStart, opts: &TraceOptions) -> Result<SingularArc> {
    tracer::trace_arc(f, start.x0, start.seed.pair, start.seed.q, opts)
}

/// Pass/fail of every per-arc check.
#[derive(Clone, Debug, PartialEq)]
pub struct Checks {
    pub cy: bool,
    pub oracle_singular: bool,
    pub dc_convex: bool,
    pub reconstruction: bool,
    pub lipschitz: bool,
    pub selection: bool,
    pub domination: bool,
    pub turn_converged: bool,
}

impl Checks {
    pub fn all(&self) -> bool {
        self.cy
            && self.oracle_singular
            && self.dc_convex
            && self.reconstruction
            && self.lipschitz
            && self.selection
            && self.domination
            && self.turn_converged
    }
}

#[derive(Clone, Debug)]
pub struct ArcReport {
    pub arc: SingularArc,
    pub cy: CyReport,
    /// Samples whose numeric gradient check was skipped for lack of margin.
    pub oracle_skipped: usize,
    pub oracle_failures: usize,
    pub graph: GraphParam,
    pub step3: Step3Result,
    pub mixing: MixingResult,
    pub reconstruction_error: f64,
    pub min_convexity: f64,
    pub max_component_slope: f64,
    pub slope_bound: f64,
    pub certificate: TurnCertificate,
    pub checks: Checks,
}

/// Counts samples the finite-difference oracle does not see as kinks.
/// Returns `(failures, skipped)`.
pub fn oracle_membership(f: &SemiconcaveFn, arc: &SingularArc) -> (usize, usize) {
    let mut failures = 0;
    let mut skipped = 0;
    for (k, a) in arc.samples.iter().enumerate() {
        let last_coalescent = k + 1 == arc.samples.len() && arc.stop_reason == StopReason::GradientCoalescence;
        if last_coalescent {
            continue;
        }
        match oracle::numeric_gradient(f, a.x, ORACLE_FD_STEP) {
            Ok(NumericGradient::Nondifferentiable) => {}
            Ok(NumericGradient::Gradient(_)) => failures += 1,
            Err(_) => skipped += 1,
        }
    }
    (failures, skipped)
}

/// trace → reparametrize → partition/extension → mixing → turn certificate.
pub fn certify_arc(f: &SemiconcaveFn, arc: SingularArc, opts: &CertifyOptions) -> Result<ArcReport> {
    let cy = tracer::verify_cy(&arc, opts.delta_min);
    let (oracle_failures, oracle_skipped) = oracle_membership(f, &arc);
    let graph = reparametrize(&arc)?;
    let f_t = f.transform(&graph.frame)?;
    let step3 = step3_construct(&f_t, &graph, opts.trace.tol_active)?;
    let phis = step3.sample_pieces(&graph.xs);
    let mixing = mixing_select(&graph.xs, &phis, &graph.gs)?;
    let dc = &mixing.dc;
    let reconstruction_error = dc.reconstruction_error(&graph.gs);
    let min_convexity = dc.min_convexity();
    let max_component_slope = dc.max_slope();
    let slope_bound = graph.lipschitz() + dcturn::slope_variation(&graph.xs, &graph.gs);
    let certificate = finite_turn_certificate(f, &arc, opts.turn_tol)?;
    let checks = Checks {
        cy: cy.passed(),
        oracle_singular: oracle_failures == 0,
        dc_convex: min_convexity >= -CONVEXITY_TOL,
        reconstruction: reconstruction_error <= RECONSTRUCTION_TOL,
        lipschitz: max_component_slope <= slope_bound + 1e-9,
        selection: step3.selection_residual <= SELECTION_TOL,
        domination: step3.domination_defect <= DOMINATION_TOL,
        turn_converged: certificate.converged,
    };
    Ok(ArcReport {
        arc,
        cy,
        oracle_skipped,
        oracle_failures,
        graph,
        step3,
        mixing,
        reconstruction_error,
        min_convexity,
        max_component_slope,
        slope_bound,
        certificate,
        checks,
    })
}

/// Every arc leaving the singular points of `f` that `arc_starts` finds.
pub fn trace_all(f: &SemiconcaveFn, starts: &[ArcStart], opts: &TraceOptions) -> Result<Vec<SingularArc>> {
    if starts.is_empty() {
        return Err(Error::InvalidArgument("no singular seeds".into()));
    }
    starts.iter().map(|s| trace_start(f, s, opts)).collect()
}

/// Whether `x` is a point where the propagation criterion holds.
pub fn criterion_at(f: &SemiconcaveFn, x: Vec2, tol_active: f64) -> Result<bool> {
    Ok(subdiff::propagation_criterion(&subdiff::reachable_gradients(f, x, tol_active)?))
}
