//! Partition of the vertical slice range and convex extensions per class.
//!
//! Write `f = K‖z‖² − u`, which is convex. At every graph point `ψ(x)` the
//! slice `⟨e₂, ∂f(ψ(x))⟩` is an interval of length at least `δ`. With levels
//! of mesh below `δ/2`, two adjacent levels `y_{i−1} < y_i` fit inside it.
//! On the class `A_i` of such points, both
//!
//! ```text
//! ω₁(x) = f(ψ(x)) − y_i·g(x),   ω₂(x) = f(ψ(x)) − y_{i−1}·g(x)
//! ```
//!
//! are restrictions of convex functions: the upper envelopes of the support
//! lines `ω(x) + p_x (t − x)`, where `(p_x, y)` is a subgradient of `f` at
//! `ψ(x)`. Their difference over `y_i − y_{i−1}` is a DC extension of `g`
//! from `A_i`.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::model::SemiconcaveFn;
use crate::subdiff::{self, ConvexPolygon, Interval};

use super::GraphParam;

/// Levels are spaced at `δ / MESH_DIVISOR`.
pub const MESH_DIVISOR: f64 = 2.01;
/// Padding of the level range beyond `[−L, L]`.
pub const LEVEL_PADDING: f64 = 1e-6;
const CHORD_TOL: f64 = 1e-12;

/// Upper envelope `t ↦ max_x (ω(x) + p_x (t − x))` of finitely many lines.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportEnvelope {
    /// `(x, ω(x), p_x)`.
    pub lines: Vec<(f64, f64, f64)>,
}

impl SupportEnvelope {
    pub fn eval(&self, t: f64) -> f64 {
        self.lines.iter().map(|&(x, w, p)| w + p * (t - x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max (ω(x) + p_x (t − x) − ω(t))` over pairs of anchors; non-positive
    /// when every line supports the anchor values from below.
    pub fn domination_defect(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for &(x, w, p) in &self.lines {
            for &(t, wt, _) in &self.lines {
                worst = worst.max(w + p * (t - x) - wt);
            }
        }
        worst
    }

    /// `max |c(x) − ω(x)|` over the anchors.
    pub fn extension_error(&self) -> f64 {
        self.lines.iter().map(|&(x, w, _)| (self.eval(x) - w).abs()).fold(0.0, f64::max)
    }
}

/// The DC extension `φ_i = (c₂ − c₁) / (y_i − y_{i−1})` of `g` from `A_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DcPiece {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub c1: SupportEnvelope,
    pub c2: SupportEnvelope,
}

impl DcPiece {
    pub fn eval(&self, t: f64) -> f64 {
        (self.c2.eval(t) - self.c1.eval(t)) / (self.upper - self.lower)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionClassification {
    /// `y₀ < … < y_p`.
    pub levels: Vec<f64>,
    pub mesh: f64,
    /// `i_x` for every grid point, in `1..=p`.
    pub assignment: Vec<usize>,
    /// Grid indices of `A_i`, indexed by `i` (entry `0` is always empty).
    pub sets: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct Step3Result {
    pub classification: PartitionClassification,
    /// `min diam ⟨e₂, ∂f(ψ(x))⟩` over the grid.
    pub delta: f64,
    /// Level range half-width actually used.
    pub level_bound: f64,
    pub slices: Vec<Interval>,
    pub pieces: Vec<DcPiece>,
    /// `max |φ_{i_x}(x) − g(x)|`.
    pub selection_residual: f64,
    /// Largest support-line violation over all classes and both envelopes.
    pub domination_defect: f64,
    /// Largest `|c(x) − ω(x)|` on the classes.
    pub extension_error: f64,
}

impl Step3Result {
    pub fn piece(&self, i: usize) -> Option<&DcPiece> {
        self.pieces.iter().find(|p| p.index == i)
    }

    /// Every piece sampled on `xs`, in the order of `pieces`.
    pub fn sample_pieces(&self, xs: &[f64]) -> Vec<Vec<f64>> {
        self.pieces.iter().map(|p| xs.iter().map(|&t| p.eval(t)).collect()).collect()
    }
}

/// Runs the partition and extension construction on a graph `gp` of an arc
/// of `f_t`, where `f_t` is already expressed in the frame of `gp`.
pub fn step3_construct(f_t: &SemiconcaveFn, gp: &GraphParam, tol_active: f64) -> Result<Step3Result> {
    let n = gp.xs.len();
    let pts: Vec<Vec2> = gp.xs.iter().zip(&gp.gs).map(|(&x, &g)| Vec2::new(x, g)).collect();
    let polys: Vec<ConvexPolygon> =
        pts.iter().map(|&p| subdiff::subdiff_f(f_t, p, tol_active)).collect::<Result<_>>()?;
    let slices: Vec<Interval> = polys.iter().map(|p| p.slice(Vec2::E2)).collect::<Result<_>>()?;
    let delta = slices.iter().map(Interval::len).fold(f64::INFINITY, f64::min);
    if !(delta > 1e-12) {
        return Err(Error::DegenerateSlice(delta));
    }

    let level_bound = slices.iter().fold(f_t.l(), |m, s| m.max(s.lo.abs()).max(s.hi.abs()));
    let lo = -level_bound - LEVEL_PADDING;
    let hi = level_bound + LEVEL_PADDING;
    let p = ((hi - lo) / (delta / MESH_DIVISOR)).ceil() as usize;
    let mesh = (hi - lo) / p as f64;
    let mut levels: Vec<f64> = (0..=p).map(|i| lo + mesh * i as f64).collect();
    levels[p] = hi;

    let mut assignment = Vec::with_capacity(n);
    for (k, s) in slices.iter().enumerate() {
        let first = (((s.lo - lo) / mesh).ceil() as usize).saturating_sub(1).max(1);
        let i = (first..=p)
            .take_while(|&i| levels[i - 1] <= s.hi)
            .find(|&i| s.contains(levels[i - 1]) && s.contains(levels[i]))
            .ok_or(Error::Classification { x: gp.xs[k], lo: s.lo, hi: s.hi, mesh })?;
        assignment.push(i);
    }
    let mut sets = vec![Vec::new(); p + 1];
    for (k, &i) in assignment.iter().enumerate() {
        sets[i].push(k);
    }

    let mut pieces = Vec::new();
    for (i, members) in sets.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let (y_lo, y_hi) = (levels[i - 1], levels[i]);
        let mut c1 = Vec::with_capacity(members.len());
        let mut c2 = Vec::with_capacity(members.len());
        for &k in members {
            let (x, g) = (gp.xs[k], gp.gs[k]);
            let fval = f_t.convex_part(pts[k]);
            let chord = |y: f64| {
                polys[k]
                    .horizontal_chord(y, CHORD_TOL)
                    .ok_or_else(|| Error::Geometry(format!("level {y} misses the subdifferential at x = {x}")))
            };
            c1.push((x, fval - y_hi * g, chord(y_hi)?.midpoint()));
            c2.push((x, fval - y_lo * g, chord(y_lo)?.midpoint()));
        }
        pieces.push(DcPiece {
            index: i,
            lower: y_lo,
            upper: y_hi,
            c1: SupportEnvelope { lines: c1 },
            c2: SupportEnvelope { lines: c2 },
        });
    }

    let piece_of = |i: usize| pieces.iter().find(|p| p.index == i).expect("nonempty class");
    let selection_residual =
        (0..n).map(|k| (piece_of(assignment[k]).eval(gp.xs[k]) - gp.gs[k]).abs()).fold(0.0, f64::max);
    let domination_defect =
        pieces.iter().map(|p| p.c1.domination_defect().max(p.c2.domination_defect())).fold(f64::NEG_INFINITY, f64::max);
    let extension_error = pieces.iter().map(|p| p.c1.extension_error().max(p.c2.extension_error())).fold(0.0, f64::max);

    Ok(Step3Result {
        classification: PartitionClassification { levels, mesh, assignment, sets },
        delta,
        level_bound,
        slices,
        pieces,
        selection_residual,
        domination_defect,
        extension_error,
    })
}
