//! Continuation of singular arcs along branch-equality curves.
//!
//! Near a point where exactly two branches `f_i`, `f_j` are minimal with
//! distinct gradients, the singular set of `u` is the level curve
//! `f_i − f_j = 0`. [`trace_arc`] follows that curve with an Euler predictor
//! along the unit tangent and a Newton corrector along the curve normal, and
//! parametrizes the result by accumulated chord length.

use std::fmt;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::model::{effective_tol, SemiconcaveFn};
use crate::subdiff::{self, DEDUP_TOL};

/// Residual `|f_i − f_j|` accepted by the corrector.
pub const CORRECTOR_TOL: f64 = 1e-10;
pub const MAX_CORRECTOR_ITERS: usize = 25;
/// Steps are halved on corrector failure until they fall below this.
pub const MIN_STEP: f64 = 1e-8;
/// The arc stops once `‖∇f_i − ∇f_j‖` drops below this.
pub const COALESCENCE_TOL: f64 = 1e-7;
/// Largest distance used when probing seed directions.
pub const PROBE_T: f64 = 1e-4;
/// Largest tangent rotation accepted in one step before the step is halved.
const MAX_TURN_PER_STEP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    LeftDomain,
    TriplePoint,
    GradientCoalescence,
    MaxLength,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::LeftDomain => "left_domain",
            StopReason::TriplePoint => "triple_point",
            StopReason::GradientCoalescence => "gradient_coalescence",
            StopReason::MaxLength => "max_length",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSample {
    pub x: Vec2,
    /// Accumulated chord length from the seed.
    pub s: f64,
    pub pair: (usize, usize),
    pub tangent: Vec2,
    pub dplus_diam: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    pub step: f64,
    pub max_len: f64,
    pub tol_active: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { step: 1e-2, max_len: 10.0, tol_active: crate::model::DEFAULT_TOL_ACTIVE }
    }
}

#[derive(Clone, Debug)]
pub struct SingularArc {
    pub seed: Vec2,
    pub q: Vec2,
    pub pair: (usize, usize),
    pub options: TraceOptions,
    pub samples: Vec<ArcSample>,
    pub stop_reason: StopReason,
}

impl SingularArc {
    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.s)
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.samples.iter().map(|s| s.x).collect()
    }

    /// Linear interpolation of the position at arclength `s`, clamped to the
    /// traced range.
    pub fn position_at(&self, s: f64) -> Vec2 {
        let smp = &self.samples;
        if s <= 0.0 || smp.len() == 1 {
            return smp[0].x;
        }
        let k = smp.partition_point(|a| a.s < s);
        if k >= smp.len() {
            return smp[smp.len() - 1].x;
        }
        let (a, b) = (smp[k - 1], smp[k]);
        let w = (s - a.s) / (b.s - a.s);
        a.x + w * (b.x - a.x)
    }
}

/// A branch pair together with an initial direction for [`trace_arc`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedDirection {
    pub pair: (usize, usize),
    pub q: Vec2,
}

/// Initial directions of the singular arcs leaving `x0`.
///
/// Each active pair with distinct gradients contributes the two unit normals
/// of `∇f_i − ∇f_j`; a direction survives when the pair stays minimal along
/// the ray up to [`PROBE_T`].
pub fn seed_directions(f: &SemiconcaveFn, x0: Vec2, tol_active: f64) -> Result<Vec<SeedDirection>> {
    if !subdiff::is_singular(f, x0, tol_active)? {
        return Err(Error::NotSingular(x0));
    }
    let active = f.active_set(x0, tol_active)?;
    let br = f.branches();
    let mut out = Vec::new();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let d = br[i].gradient(x0) - br[j].gradient(x0);
            let Some(n) = d.normalized() else { continue };
            if d.norm() <= DEDUP_TOL {
                continue;
            }
            for q in [n.perp(), -n.perp()] {
                if pair_stays_minimal(f, x0, q, (i, j), tol_active) {
                    out.push(SeedDirection { pair: (i, j), q });
                }
            }
        }
    }
    Ok(out)
}

fn pair_stays_minimal(f: &SemiconcaveFn, x0: Vec2, q: Vec2, (i, j): (usize, usize), tol: f64) -> bool {
    (0..5).all(|m| {
        let p = x0 + (PROBE_T * 0.5f64.powi(m)) * q;
        if !f.domain().contains(p) {
            return false;
        }
        let br = f.branches();
        let pair_min = br[i].value(p).min(br[j].value(p));
        let others = br
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j)
            .map(|(_, b)| b.value(p))
            .fold(f64::INFINITY, f64::min);
        pair_min <= others + effective_tol(tol, pair_min) * 1e-3
    })
}

/// Moves `x` onto the nearest branch-equality curve of a minimal pair.
///
/// Pairs are tried in order of how close both branches are to the minimum at
/// `x`. Returns the projected point and the pair when the result is a
/// singular point at which that pair is active.
pub fn project_to_singular(f: &SemiconcaveFn, x: Vec2, tol_active: f64) -> Option<(Vec2, (usize, usize))> {
    let br = f.branches();
    let vals: Vec<f64> = br.iter().map(|b| b.value(x)).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..br.len() {
        for j in i + 1..br.len() {
            pairs.push((vals[i].max(vals[j]), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, i, j) in pairs {
        let Some(p) = Corrector::new(f, (i, j)).solve(x, f64::INFINITY) else { continue };
        if !f.domain().contains(p) {
            continue;
        }
        let active = f.active_unchecked(p, tol_active);
        if active.contains(&i) && active.contains(&j) && subdiff::is_singular(f, p, tol_active).ok()? {
            return Some((p, (i, j)));
        }
    }
    None
}

struct Corrector<'a> {
    f: &'a SemiconcaveFn,
    i: usize,
    j: usize,
}

impl<'a> Corrector<'a> {
    fn new(f: &'a SemiconcaveFn, (i, j): (usize, usize)) -> Self {
        Corrector { f, i, j }
    }

    fn h(&self, x: Vec2) -> f64 {
        let b = self.f.branches();
        b[self.i].value(x) - b[self.j].value(x)
    }

    fn grad(&self, x: Vec2) -> Vec2 {
        let b = self.f.branches();
        b[self.i].gradient(x) - b[self.j].gradient(x)
    }

    /// Newton projection onto `h = 0` along `∇h`; gives up when the iterate
    /// strays farther than `max_move` from the start.
    fn solve(&self, start: Vec2, max_move: f64) -> Option<Vec2> {
        let mut x = start;
        for _ in 0..=MAX_CORRECTOR_ITERS {
            let r = self.h(x);
            if !r.is_finite() {
                return None;
            }
            if r.abs() <= CORRECTOR_TOL {
                return Some(x);
            }
            let g = self.grad(x);
            let g2 = g.norm_sq();
            if g2 < COALESCENCE_TOL * COALESCENCE_TOL {
                return None;
            }
            x -= (r / g2) * g;
            if x.dist(start) > max_move {
                return None;
            }
        }
        None
    }

    /// Intersection of the curve with the boundary edge crossed between the
    /// inside point `a` and the outside point `b`.
    fn solve_on_boundary(&self, a: Vec2, b: Vec2) -> Option<Vec2> {
        let d = *self.f.domain();
        let dir = b - a;
        // (parameter, fixes_x, bound)
        let mut hits: Vec<(f64, bool, f64)> = Vec::new();
        if b.x > d.xmax {
            hits.push(((d.xmax - a.x) / dir.x, true, d.xmax));
        }
        if b.x < d.xmin {
            hits.push(((d.xmin - a.x) / dir.x, true, d.xmin));
        }
        if b.y > d.ymax {
            hits.push(((d.ymax - a.y) / dir.y, false, d.ymax));
        }
        if b.y < d.ymin {
            hits.push(((d.ymin - a.y) / dir.y, false, d.ymin));
        }
        let &(lam, fixes_x, bound) = hits.iter().min_by(|u, v| u.0.total_cmp(&v.0))?;
        let mut p = a + lam.clamp(0.0, 1.0) * dir;
        if fixes_x {
            p.x = bound;
        } else {
            p.y = bound;
        }
        for _ in 0..=MAX_CORRECTOR_ITERS {
            let r = self.h(p);
            if r.abs() <= CORRECTOR_TOL {
                let slack = 1e-9 * (d.width() + d.height());
                let inside = if fixes_x {
                    p.y >= d.ymin - slack && p.y <= d.ymax + slack
                } else {
                    p.x >= d.xmin - slack && p.x <= d.xmax + slack
                };
                return inside.then(|| d.clamp(p));
            }
            let g = self.grad(p);
            let slope = if fixes_x { g.y } else { g.x };
            if slope.abs() < COALESCENCE_TOL {
                return None;
            }
            if fixes_x {
                p.y -= r / slope;
            } else {
                p.x -= r / slope;
            }
            if p.dist(a) > 2.0 * a.dist(b) + 1e-12 {
                return None;
            }
        }
        None
    }

    /// Point where a third branch `k` meets the pair, by Newton on
    /// `(f_i − f_j, f_i − f_k) = 0`.
    fn solve_triple(&self, k: usize, start: Vec2, max_move: f64) -> Option<Vec2> {
        let b = self.f.branches();
        let mut x = start;
        for _ in 0..=MAX_CORRECTOR_ITERS {
            let r1 = self.h(x);
            let r2 = b[self.i].value(x) - b[k].value(x);
            if r1.abs() <= CORRECTOR_TOL && r2.abs() <= CORRECTOR_TOL {
                return Some(x);
            }
            let g1 = self.grad(x);
            let g2 = b[self.i].gradient(x) - b[k].gradient(x);
            let det = g1.cross(g2);
            if det.abs() < 1e-14 {
                return None;
            }
            // Cramer's rule for [g1; g2] dx = -(r1, r2).
            let dx = Vec2::new((-r1 * g2.y + r2 * g1.y) / det, (-r2 * g1.x + r1 * g2.x) / det);
            x += dx;
            if !x.is_finite() || x.dist(start) > max_move {
                return None;
            }
        }
        None
    }
}

fn make_sample(f: &SemiconcaveFn, x: Vec2, s: f64, pair: (usize, usize), tangent: Vec2, tol: f64) -> ArcSample {
    let dplus_diam =
        subdiff::reachable_gradients(f, x, tol).map(|gs| subdiff::superdifferential(&gs).diam()).unwrap_or(0.0);
    ArcSample { x, s, pair, tangent, dplus_diam }
}

/// Traces the singular arc of `pair` from `x0` in direction `q`.
pub fn trace_arc(
    f: &SemiconcaveFn,
    x0: Vec2,
    pair: (usize, usize),
    q: Vec2,
    opts: &TraceOptions,
) -> Result<SingularArc> {
    let TraceOptions { step, max_len, tol_active } = *opts;
    if !(step > 0.0 && max_len > 0.0 && tol_active > 0.0) {
        return Err(Error::InvalidArgument("step, max_len and tol_active must be positive".into()));
    }
    let nb = f.branches().len();
    if pair.0 >= nb || pair.1 >= nb || pair.0 == pair.1 {
        return Err(Error::InvalidArgument(format!("invalid branch pair {pair:?}")));
    }
    if (q.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction {q} is not a unit vector")));
    }
    if !f.domain().contains(x0) {
        return Err(Error::OutsideDomain(x0));
    }
    let (i, j) = pair;
    let br = f.branches();
    let corr = Corrector::new(f, pair);

    let mut samples = vec![make_sample(f, x0, 0.0, pair, q, tol_active)];
    let mut x = x0;
    let mut t = q;
    let mut s = 0.0;

    let stop = loop {
        let remaining = max_len - s;
        if remaining <= 1e-12 * max_len {
            break StopReason::MaxLength;
        }
        let mut h = step.min(remaining);
        let next = loop {
            let accepted = corr.solve(x + h * t, 2.0 * h).filter(|&p| {
                corr.grad(p)
                    .normalized()
                    .is_none_or(|n| n.perp().angle_to(t).min(n.perp().angle_to(-t)) <= MAX_TURN_PER_STEP)
            });
            if let Some(p) = accepted {
                break p;
            }
            h *= 0.5;
            if h < MIN_STEP {
                return Err(Error::CorrectorFailed { at: x, min_step: MIN_STEP });
            }
        };

        // A third branch strictly below the pair means a triple point was
        // crossed during the step.
        let pair_val = |p: Vec2| br[i].value(p).min(br[j].value(p));
        let next_val = pair_val(next);
        let tol_next = effective_tol(tol_active, next_val);
        let below: Vec<usize> =
            (0..nb).filter(|&k| k != i && k != j && br[k].value(next) < next_val - tol_next).collect();
        if !below.is_empty() {
            let x_val = pair_val(x);
            let crossing = below
                .iter()
                .filter_map(|&k| {
                    let r0 = br[k].value(x) - x_val;
                    let r1 = br[k].value(next) - next_val;
                    let lam = if r0 - r1 > 0.0 { (r0 / (r0 - r1)).clamp(0.0, 1.0) } else { 0.0 };
                    let guess = x + lam * (next - x);
                    corr.solve_triple(k, guess, 2.0 * step).map(|p| (lam, p))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((_, p)) = crossing {
                if f.domain().contains(p) && p.dist(x) > 1e-14 {
                    let tan = oriented_tangent(corr.grad(p), t);
                    s += p.dist(x);
                    samples.push(make_sample(f, p, s, pair, tan, tol_active));
                    break StopReason::TriplePoint;
                }
                if p.dist(x) <= 1e-14 {
                    break StopReason::TriplePoint;
                }
            } else if f.domain().contains(next) {
                break StopReason::TriplePoint;
            }
        }

        if !f.domain().contains(next) {
            if let Some(p) = corr.solve_on_boundary(x, next) {
                if p.dist(x) > 1e-14 {
                    let tan = oriented_tangent(corr.grad(p), t);
                    s += p.dist(x);
                    samples.push(make_sample(f, p, s, pair, tan, tol_active));
                }
            }
            break StopReason::LeftDomain;
        }

        let d = corr.grad(next);
        s += next.dist(x);
        if d.norm() < COALESCENCE_TOL {
            samples.push(make_sample(f, next, s, pair, t, tol_active));
            break StopReason::GradientCoalescence;
        }
        t = oriented_tangent(d, t);
        x = next;
        samples.push(make_sample(f, x, s, pair, t, tol_active));

        // Landing exactly on a triple point.
        let gi = br[i].gradient(x);
        let gj = br[j].gradient(x);
        let third = f.active_unchecked(x, tol_active).into_iter().any(|k| {
            k != i && k != j && {
                let gk = br[k].gradient(x);
                gk.dist(gi) > DEDUP_TOL && gk.dist(gj) > DEDUP_TOL
            }
        });
        if third {
            break StopReason::TriplePoint;
        }
    };

    Ok(SingularArc { seed: x0, q, pair, options: *opts, samples, stop_reason: stop })
}

/// Unit tangent of the level curve with normal `d`, oriented along `prev`.
fn oriented_tangent(d: Vec2, prev: Vec2) -> Vec2 {
    match d.normalized() {
        Some(n) => {
            let t = n.perp();
            if t.dot(prev) >= 0.0 {
                t
            } else {
                -t
            }
        }
        None => prev,
    }
}

/// Checks of the three arc properties on a traced arc.
#[derive(Clone, Debug, PartialEq)]
pub struct CyReport {
    /// Angle between the first sample tangent and `q`.
    pub initial_angle: f64,
    /// Largest angle between a sample tangent and `q` over the first tenth
    /// of the arc.
    pub early_max_angle: f64,
    pub min_dplus_diam: f64,
    pub delta_min: f64,
    pub diam_ok: bool,
    /// Largest `‖ξ(s) − ξ(s′)‖ / |s − s′|` over sample pairs.
    pub lipschitz_ratio: f64,
    pub lipschitz_ok: bool,
}

impl CyReport {
    pub fn passed(&self) -> bool {
        self.initial_angle <= 1e-6 && self.diam_ok && self.lipschitz_ok
    }
}

pub fn verify_cy(arc: &SingularArc, delta_min: f64) -> CyReport {
    let smp = &arc.samples;
    let total = arc.length();
    let initial_angle = smp[0].tangent.angle_to(arc.q);
    let early_max_angle =
        smp.iter().take_while(|a| a.s <= 0.1 * total).map(|a| a.tangent.angle_to(arc.q)).fold(0.0, f64::max);
    let min_dplus_diam = smp.iter().map(|a| a.dplus_diam).fold(f64::INFINITY, f64::min);
    let mut lipschitz_ratio = if smp.len() > 1 { 0.0 } else { 1.0 };
    for a in 0..smp.len() {
        for b in a + 1..smp.len() {
            let ds = smp[b].s - smp[a].s;
            if ds > 0.0 {
                lipschitz_ratio = f64::max(lipschitz_ratio, smp[a].x.dist(smp[b].x) / ds);
            }
        }
    }
    CyReport {
        initial_angle,
        early_max_angle,
        min_dplus_diam,
        delta_min,
        diam_ok: min_dplus_diam >= delta_min && min_dplus_diam > 0.0,
        lipschitz_ratio,
        lipschitz_ok: lipschitz_ratio <= 1.0 + 1e-6,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn opts(step: f64, max_len: f64) -> TraceOptions {
        TraceOptions { step, max_len, tol_active: 1e-9 }
    }

    #[test]
    fn seeds_of_abs_x2() {
        let seeds = seed_directions(&fixtures::abs_x2(), Vec2::ZERO, 1e-9).unwrap();
        assert_eq!(seeds.len(), 2);
        assert!(seeds.iter().all(|s| s.pair == (0, 1)));
        assert!(seeds.iter().any(|s| s.q == Vec2::E1));
        assert!(seeds.iter().any(|s| s.q == -Vec2::E1));
    }

    #[test]
    fn seeds_of_parabola() {
        let seeds = seed_directions(&fixtures::parabola(), Vec2::ZERO, 1e-9).unwrap();
        let qs: Vec<Vec2> = seeds.iter().map(|s| s.q).collect();
        assert_eq!(qs.len(), 2);
        assert!(qs.contains(&Vec2::E1) && qs.contains(&-Vec2::E1));
    }

    #[test]
    fn seeds_require_singular_point() {
        let r = seed_directions(&fixtures::abs_x2(), Vec2::new(0.0, 0.5), 1e-9);
        assert!(matches!(r, Err(Error::NotSingular(_))));
    }

    #[test]
    fn straight_arc() {
        let f = fixtures::abs_x2();
        let arc = trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::E1, &opts(0.05, 1.0)).unwrap();
        assert!(arc.samples.iter().all(|a| a.x.y.abs() <= 1e-10));
        assert!((arc.length() - 1.0).abs() < 1e-12);
        assert_eq!(arc.samples[0].x, Vec2::ZERO);
        assert_eq!(arc.samples[0].tangent, Vec2::E1);
        let rep = verify_cy(&arc, 1.0);
        assert_eq!(rep.early_max_angle, 0.0);
        assert!((rep.lipschitz_ratio - 1.0).abs() < 1e-12);
        assert!(rep.passed());
    }

    #[test]
    fn max_length_stop() {
        let f = fixtures::abs_x2();
        let arc = trace_arc(&f, Vec2::new(-0.9, 0.0), (0, 1), Vec2::E1, &opts(0.1, 0.55)).unwrap();
        assert_eq!(arc.stop_reason, StopReason::MaxLength);
        assert!((arc.length() - 0.55).abs() < 1e-12);
    }

    #[test]
    fn parabola_arc_stays_on_curve() {
        let f = fixtures::parabola();
        let arc = trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::E1, &opts(1e-3, 10.0)).unwrap();
        assert_eq!(arc.stop_reason, StopReason::LeftDomain);
        let last = arc.samples.last().unwrap().x;
        assert!((last.x - 1.0).abs() < 1e-12, "{last}");
        for a in &arc.samples {
            assert!((a.x.y - a.x.x * a.x.x).abs() < 1e-8);
        }
        assert!((arc.length() - fixtures::parabola_arclength()).abs() < 1e-4);
        let rep = verify_cy(&arc, 0.5);
        assert!(rep.min_dplus_diam >= 1.0 - 1e-12);
        assert!(rep.passed());
    }

    #[test]
    fn three_affine_arc_stops_at_triple_point() {
        let f = fixtures::three_affine();
        for step in [0.01, 0.03, 0.07] {
            let arc = trace_arc(&f, Vec2::new(-0.5, 0.0), (0, 1), Vec2::E1, &opts(step, 5.0)).unwrap();
            assert_eq!(arc.stop_reason, StopReason::TriplePoint, "step {step}");
            let last = arc.samples.last().unwrap();
            assert!(last.x.norm() < 1e-9, "step {step}: {}", last.x);
            assert!((last.dplus_diam - 5f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn coalescence_stops_and_fails_diameter_check() {
        let f = fixtures::coalescing();
        let arc = trace_arc(&f, Vec2::new(-1.0, 0.0), (0, 1), Vec2::E1, &opts(0.01, 5.0)).unwrap();
        assert_eq!(arc.stop_reason, StopReason::GradientCoalescence);
        let rep = verify_cy(&arc, 0.5);
        assert!(rep.min_dplus_diam < 0.5);
        assert!(!rep.diam_ok);
        assert!(!rep.passed());
    }

    #[test]
    fn vertical_arc_and_position_lookup() {
        let f = fixtures::abs_x1();
        let arc = trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::E2, &opts(0.1, 0.5)).unwrap();
        assert!(arc.position_at(0.25).dist(Vec2::new(0.0, 0.25)) < 1e-12);
        assert_eq!(arc.position_at(-1.0), Vec2::ZERO);
    }

    #[test]
    fn projection_lands_on_singular_set() {
        let f = fixtures::parabola();
        let (p, pair) = project_to_singular(&f, Vec2::new(0.5, 0.3), 1e-9).unwrap();
        assert_eq!(pair, (0, 1));
        assert!((p.y - p.x * p.x).abs() < 1e-10);
        assert!(project_to_singular(&fixtures::smooth(), Vec2::new(0.5, 0.3), 1e-9).is_none());
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = fixtures::abs_x2();
        assert!(trace_arc(&f, Vec2::ZERO, (0, 0), Vec2::E1, &opts(0.1, 1.0)).is_err());
        assert!(trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::new(2.0, 0.0), &opts(0.1, 1.0)).is_err());
        assert!(trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::E1, &opts(0.0, 1.0)).is_err());
    }
}
