//! Reachable gradients, superdifferentials and their one-dimensional slices.
//!
//! For `u = min_b f_b` the reachable gradients at `x` are the gradients of the
//! active branches, the superdifferential is their convex hull, and the
//! subdifferential of the convex part `f = K‖x‖² − u` is the affine image
//! `2Kx − D⁺u(x)`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::model::SemiconcaveFn;

/// Points closer than this are treated as one.
pub const DEDUP_TOL: f64 = 1e-10;

/// Distance below which a point counts as lying on a line or edge.
pub const COLLINEAR_TOL: f64 = 1e-10;

/// A nonempty finite set of pairwise distinct gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    points: Vec<Vec2>,
}

impl GradientSet {
    /// Deduplicates at [`DEDUP_TOL`], keeping first occurrences.
    pub fn new(points: impl IntoIterator<Item = Vec2>) -> Result<Self> {
        let mut out: Vec<Vec2> = Vec::new();
        for p in points {
            if !p.is_finite() {
                return Err(Error::NonFinite("gradient"));
            }
            if out.iter().all(|q| q.dist(p) > DEDUP_TOL) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument("gradient set must be nonempty".into()));
        }
        Ok(GradientSet { points: out })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// A possibly degenerate convex polygon given by its extreme points.
///
/// One vertex is a point, two a segment (lexicographically ordered), three
/// or more a polygon in counterclockwise order starting from the
/// lexicographically smallest vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

fn lex(a: &Vec2, b: &Vec2) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

fn dist_to_line(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let n = d.norm();
    if n == 0.0 {
        p.dist(a)
    } else {
        (d.cross(p - a) / n).abs()
    }
}

impl ConvexPolygon {
    /// Convex hull of a finite point set.
    pub fn hull(points: &[Vec2]) -> Result<Self> {
        let gs = GradientSet::new(points.iter().copied())?;
        Ok(Self::hull_of_distinct(gs.points()))
    }

    fn hull_of_distinct(pts: &[Vec2]) -> Self {
        if pts.len() == 1 {
            return ConvexPolygon { vertices: vec![pts[0]] };
        }
        // Farthest pair spans the hull of collinear inputs.
        let (mut a, mut b, mut best) = (pts[0], pts[1], -1.0);
        for (i, &p) in pts.iter().enumerate() {
            for &q in &pts[i + 1..] {
                let d = p.dist(q);
                if d > best {
                    (a, b, best) = (p, q, d);
                }
            }
        }
        if pts.iter().all(|&p| dist_to_line(p, a, b) <= COLLINEAR_TOL) {
            if lex(&b, &a) == Ordering::Less {
                std::mem::swap(&mut a, &mut b);
            }
            return ConvexPolygon { vertices: vec![a, b] };
        }
        let mut vertices = if pts.len() == 3 {
            let (p, mut q, mut r) = (pts[0], pts[1], pts[2]);
            if (q - p).cross(r - p) < 0.0 {
                std::mem::swap(&mut q, &mut r);
            }
            vec![p, q, r]
        } else {
            monotone_chain(pts)
        };
        let start = (0..vertices.len()).min_by(|&i, &j| lex(&vertices[i], &vertices[j])).unwrap_or(0);
        vertices.rotate_left(start);
        ConvexPolygon { vertices }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn is_segment(&self) -> bool {
        self.vertices.len() == 2
    }

    /// Largest distance between two vertices; zero for a point.
    pub fn diam(&self) -> f64 {
        let v = &self.vertices;
        let mut d = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].dist(v[j]));
            }
        }
        d
    }

    /// `⟨v, P⟩` for a unit vector `v`.
    pub fn slice(&self, v: Vec2) -> Result<Interval> {
        if (v.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("slice direction {v} is not a unit vector")));
        }
        let (lo, hi) = self
            .vertices
            .iter()
            .map(|p| v.dot(*p))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
        Ok(Interval::new(lo, hi))
    }

    /// First-coordinate extent of the intersection with the line `x₂ = y`, or
    /// `None` when the line misses the polygon (up to `tol`).
    pub fn horizontal_chord(&self, y: f64, tol: f64) -> Option<Interval> {
        let v = &self.vertices;
        let mut xs: Vec<f64> = Vec::new();
        let n = v.len();
        let edges = if n <= 2 { 1 } else { n };
        for e in 0..edges {
            let p = v[e];
            let q = v[(e + 1) % n];
            let (ylo, yhi) = (p.y.min(q.y), p.y.max(q.y));
            if y < ylo - tol || y > yhi + tol {
                continue;
            }
            if (q.y - p.y).abs() <= tol {
                xs.push(p.x);
                xs.push(q.x);
            } else {
                let t = ((y - p.y) / (q.y - p.y)).clamp(0.0, 1.0);
                xs.push(p.x + t * (q.x - p.x));
            }
        }
        if xs.is_empty() {
            return None;
        }
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Interval::new(lo, hi))
    }

    /// Distance from `p` to the boundary, signed positive inside.
    pub fn signed_boundary_distance(&self, p: Vec2) -> f64 {
        let v = &self.vertices;
        match v.len() {
            1 => -p.dist(v[0]),
            2 => -point_segment_distance(p, v[0], v[1]),
            n => {
                let mut inside = true;
                let mut d = f64::INFINITY;
                for e in 0..n {
                    let (a, b) = (v[e], v[(e + 1) % n]);
                    if (b - a).cross(p - a) < 0.0 {
                        inside = false;
                    }
                    d = d.min(point_segment_distance(p, a, b));
                }
                if inside {
                    d
                } else {
                    -d
                }
            }
        }
    }

    /// Image under `p ↦ s·p + t`, rebuilt in canonical order.
    pub fn affine_image(&self, s: f64, t: Vec2) -> ConvexPolygon {
        let mapped: Vec<Vec2> = self.vertices.iter().map(|&p| s * p + t).collect();
        match GradientSet::new(mapped) {
            Ok(gs) => Self::hull_of_distinct(gs.points()),
            Err(_) => self.clone(),
        }
    }
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + t * d)
}

fn monotone_chain(pts: &[Vec2]) -> Vec<Vec2> {
    let mut sorted = pts.to_vec();
    sorted.sort_by(lex);
    let turn_left = |o: Vec2, a: Vec2, b: Vec2| {
        let d = a - o;
        let n = d.norm();
        n > 0.0 && d.cross(b - o) / n > COLLINEAR_TOL
    };
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &sorted {
        while lower.len() >= 2 && !turn_left(lower[lower.len() - 2], lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in sorted.iter().rev() {
        while upper.len() >= 2 && !turn_left(upper[upper.len() - 2], upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// `D*u(x)`: gradients of the active branches, deduplicated.
pub fn reachable_gradients(f: &SemiconcaveFn, x: Vec2, tol_active: f64) -> Result<GradientSet> {
    let active = f.active_set(x, tol_active)?;
    GradientSet::new(active.into_iter().map(|b| f.branches()[b].gradient(x)))
}

/// `D⁺u(x) = conv D*u(x)`.
pub fn superdifferential(gs: &GradientSet) -> ConvexPolygon {
    ConvexPolygon::hull_of_distinct(gs.points())
}

pub fn diam(p: &ConvexPolygon) -> f64 {
    p.diam()
}

/// `∂f(x) = 2Kx − D⁺u(x)` for the convex part `f = K‖x‖² − u`.
pub fn subdiff_f(f: &SemiconcaveFn, x: Vec2, tol_active: f64) -> Result<ConvexPolygon> {
    let dplus = superdifferential(&reachable_gradients(f, x, tol_active)?);
    Ok(dplus.affine_image(-1.0, 2.0 * f.k() * x))
}

pub fn slice(p: &ConvexPolygon, v: Vec2) -> Result<Interval> {
    p.slice(v)
}

/// Whether `∂(conv D*u) \ D*u` is nonempty.
///
/// For a finite set this holds exactly when there are at least two points:
/// the relative interior of any hull edge misses the set.
pub fn propagation_criterion(gs: &GradientSet) -> bool {
    gs.len() >= 2
}

/// Whether `u` fails to be differentiable at `x`.
pub fn is_singular(f: &SemiconcaveFn, x: Vec2, tol_active: f64) -> Result<bool> {
    Ok(reachable_gradients(f, x, tol_active)?.len() >= 2)
}

/// Points of `gs` lying strictly inside their hull. Always empty when every
/// active branch is genuinely reachable; a nonempty result flags a blocked
/// branch whose gradient is not a limit of nearby gradients.
pub fn interior_generators(gs: &GradientSet) -> Vec<Vec2> {
    let hull = superdifferential(gs);
    gs.points().iter().copied().filter(|&p| hull.signed_boundary_distance(p) > COLLINEAR_TOL).collect()
}

/// `diam ⟨q, ∂f(xₙ)⟩` along `xₙ = x₀ + 2⁻ⁿ qₙ` for `n = 1..=n_max`.
///
/// The active tolerance shrinks with the step, `tol_active · 2⁻ⁿ`, since
/// branch gaps along a ray through `x₀` scale linearly with the distance.
pub fn slice_diam_sequence(
    f: &SemiconcaveFn,
    x0: Vec2,
    q: Vec2,
    directions: impl Fn(usize) -> Vec2,
    n_max: usize,
    tol_active: f64,
) -> Result<Vec<f64>> {
    (1..=n_max)
        .map(|n| {
            let t = 0.5f64.powi(n as i32);
            let xn = x0 + t * directions(n);
            let p = subdiff_f(f, xn, tol_active * t)?;
            Ok(p.slice(q)?.len())
        })
        .collect()
}
