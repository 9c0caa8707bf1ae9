//! The function model: finite minima of polynomial branches on a rectangle.
//!
//! A [`SemiconcaveFn`] is `u(x) = min_b f_b(x)` where every branch `f_b` is a
//! bivariate polynomial. Such a `u` is semiconcave with constant `K` whenever
//! every branch Hessian is bounded above by `2K·I`, because then
//! `u(x) - K‖x‖²` is a minimum of concave functions. The constants are derived
//! by sampling ([`derive_constants`]) and are exact for branches of degree at
//! most two.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Default cap on the total degree of a branch.
pub const DEFAULT_DEGREE_CAP: u32 = 8;

/// Default relative tolerance for deciding which branches are active.
pub const DEFAULT_TOL_ACTIVE: f64 = 1e-9;

/// Default sampling resolution for [`derive_constants`].
pub const DEFAULT_CONSTANT_GRID: usize = 64;

/// Multiplier applied to sampled suprema when deriving `K` and `L`.
pub const SAFETY_FACTOR: f64 = 1.05;

/// One monomial `c · x₁ⁱ x₂ʲ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub i: u32,
    pub j: u32,
    pub c: f64,
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hessian {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Hessian {
    pub fn max_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        mean + half_diff.hypot(self.xy)
    }
}

/// A bivariate polynomial branch.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    terms: Vec<Term>,
}

impl Branch {
    /// Builds a branch from `(i, j, c)` triples with the default degree cap.
    pub fn new(terms: impl IntoIterator<Item = (u32, u32, f64)>) -> Result<Self> {
        Self::with_degree_cap(terms, DEFAULT_DEGREE_CAP)
    }

    pub fn with_degree_cap(terms: impl IntoIterator<Item = (u32, u32, f64)>, cap: u32) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, j, c) in terms {
            if !c.is_finite() {
                return Err(Error::InvalidBranch(format!("coefficient of x1^{i} x2^{j} is not finite")));
            }
            if i + j > cap {
                return Err(Error::InvalidBranch(format!("term x1^{i} x2^{j} exceeds degree cap {cap}")));
            }
            if map.insert((i, j), c).is_some() {
                return Err(Error::InvalidBranch(format!("duplicate term x1^{i} x2^{j}")));
            }
        }
        Ok(Self::from_map(map))
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        Branch { terms: Vec::new() }
    }

    fn from_map(map: BTreeMap<(u32, u32), f64>) -> Self {
        let terms = map.into_iter().filter(|&(_, c)| c != 0.0).map(|((i, j), c)| Term { i, j, c }).collect();
        Branch { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.i + t.j).max().unwrap_or(0)
    }

    pub fn value(&self, p: Vec2) -> f64 {
        self.terms.iter().map(|t| t.c * pow(p.x, t.i) * pow(p.y, t.j)).sum()
    }

    pub fn gradient(&self, p: Vec2) -> Vec2 {
        let mut g = Vec2::ZERO;
        for t in &self.terms {
            if t.i > 0 {
                g.x += t.c * f64::from(t.i) * pow(p.x, t.i - 1) * pow(p.y, t.j);
            }
            if t.j > 0 {
                g.y += t.c * f64::from(t.j) * pow(p.x, t.i) * pow(p.y, t.j - 1);
            }
        }
        g
    }

    pub fn hessian(&self, p: Vec2) -> Hessian {
        let mut h = Hessian { xx: 0.0, xy: 0.0, yy: 0.0 };
        for t in &self.terms {
            let (i, j) = (f64::from(t.i), f64::from(t.j));
            if t.i > 1 {
                h.xx += t.c * i * (i - 1.0) * pow(p.x, t.i - 2) * pow(p.y, t.j);
            }
            if t.i > 0 && t.j > 0 {
                h.xy += t.c * i * j * pow(p.x, t.i - 1) * pow(p.y, t.j - 1);
            }
            if t.j > 1 {
                h.yy += t.c * j * (j - 1.0) * pow(p.x, t.i) * pow(p.y, t.j - 2);
            }
        }
        h
    }

    /// `f(A⁻¹ z)` as a polynomial in `z`, expanded exactly.
    pub fn compose_inverse(&self, frame: &Frame) -> Branch {
        // x = Rᵀ z + o, so x₁ and x₂ are affine forms in z.
        let r = frame.rotation;
        let x1 = Poly::affine(frame.origin.x, r[0][0], r[1][0]);
        let x2 = Poly::affine(frame.origin.y, r[0][1], r[1][1]);
        let mut acc = Poly::default();
        let mut pow1 = vec![Poly::constant(1.0)];
        let mut pow2 = vec![Poly::constant(1.0)];
        for t in &self.terms {
            while pow1.len() <= t.i as usize {
                let next = pow1.last().unwrap().mul(&x1);
                pow1.push(next);
            }
            while pow2.len() <= t.j as usize {
                let next = pow2.last().unwrap().mul(&x2);
                pow2.push(next);
            }
            let prod = pow1[t.i as usize].mul(&pow2[t.j as usize]);
            acc.add_scaled(&prod, t.c);
        }
        Branch::from_map(acc.0)
    }
}

#[inline]
fn pow(x: f64, k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(k as i32),
    }
}

#[derive(Clone, Debug, Default)]
struct Poly(BTreeMap<(u32, u32), f64>);

impl Poly {
    fn constant(c: f64) -> Self {
        let mut m = BTreeMap::new();
        m.insert((0, 0), c);
        Poly(m)
    }

    fn affine(c: f64, a: f64, b: f64) -> Self {
        let mut m = BTreeMap::new();
        for (key, v) in [((0, 0), c), ((1, 0), a), ((0, 1), b)] {
            if v != 0.0 {
                m.insert(key, v);
            }
        }
        Poly(m)
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = BTreeMap::new();
        for (&(i1, j1), &c1) in &self.0 {
            for (&(i2, j2), &c2) in &other.0 {
                *out.entry((i1 + i2, j1 + j2)).or_insert(0.0) += c1 * c2;
            }
        }
        Poly(out)
    }

    fn add_scaled(&mut self, other: &Poly, s: f64) {
        for (&k, &c) in &other.0 {
            *self.0.entry(k).or_insert(0.0) += s * c;
        }
    }
}

/// Axis-aligned closed rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Domain {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if ![xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidDomain("bounds must be finite".into()));
        }
        if !(xmin < xmax && ymin < ymax) {
            return Err(Error::InvalidDomain(format!(
                "need xmin < xmax and ymin < ymax, got [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(Domain { xmin, xmax, ymin, ymax })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            Vec2::new(self.xmin, self.ymin),
            Vec2::new(self.xmax, self.ymin),
            Vec2::new(self.xmax, self.ymax),
            Vec2::new(self.xmin, self.ymax),
        ]
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(self.xmin, self.xmax), p.y.clamp(self.ymin, self.ymax))
    }

    /// `n × n` grid including the boundary.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = Vec2> + '_ {
        let step = move |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
        (0..n).flat_map(move |a| {
            (0..n).map(move |b| Vec2::new(step(self.xmin, self.xmax, a), step(self.ymin, self.ymax, b)))
        })
    }
}

/// Rigid change of coordinates `A(x) = R (x − origin)` with `R` a rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub rotation: [[f64; 2]; 2],
    pub origin: Vec2,
}

impl Frame {
    pub fn new(rotation: [[f64; 2]; 2], origin: Vec2) -> Result<Self> {
        let r0 = Vec2::new(rotation[0][0], rotation[0][1]);
        let r1 = Vec2::new(rotation[1][0], rotation[1][1]);
        let tol = 1e-12;
        if (r0.norm_sq() - 1.0).abs() > tol || (r1.norm_sq() - 1.0).abs() > tol {
            return Err(Error::InvalidFrame("rows must have unit length".into()));
        }
        if r0.dot(r1).abs() > tol {
            return Err(Error::InvalidFrame("rows must be orthogonal".into()));
        }
        if (r0.cross(r1) - 1.0).abs() > tol {
            return Err(Error::InvalidFrame("determinant must be +1".into()));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidFrame("origin must be finite".into()));
        }
        Ok(Frame { rotation, origin })
    }

    pub fn identity() -> Self {
        Frame { rotation: [[1.0, 0.0], [0.0, 1.0]], origin: Vec2::ZERO }
    }

    /// The frame with `A(origin) = (0, 0)` that maps the unit direction `q`
    /// onto `(1, 0)`.
    pub fn aligning(origin: Vec2, q: Vec2) -> Result<Self> {
        let q = q.normalized().ok_or_else(|| Error::InvalidFrame("direction must be nonzero".into()))?;
        Ok(Frame { rotation: [[q.x, q.y], [-q.y, q.x]], origin })
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let d = p - self.origin;
        let r = self.rotation;
        Vec2::new(r[0][0] * d.x + r[0][1] * d.y, r[1][0] * d.x + r[1][1] * d.y)
    }

    /// Rotation part only, for directions.
    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        let r = self.rotation;
        Vec2::new(r[0][0] * v.x + r[0][1] * v.y, r[1][0] * v.x + r[1][1] * v.y)
    }

    pub fn apply_inverse(&self, z: Vec2) -> Vec2 {
        let r = self.rotation;
        Vec2::new(r[0][0] * z.x + r[1][0] * z.y, r[0][1] * z.x + r[1][1] * z.y) + self.origin
    }

    pub fn inverse(&self) -> Frame {
        let r = self.rotation;
        let rt = [[r[0][0], r[1][0]], [r[0][1], r[1][1]]];
        Frame { rotation: rt, origin: -self.apply_vector(self.origin) }
    }
}

/// `u = min_b f_b` on a rectangle, with semiconcavity constant `k` and a
/// Lipschitz bound `l` for the convex function `f(x) = k‖x‖² − u(x)`.
#[derive(Clone, Debug)]
pub struct SemiconcaveFn {
    branches: Vec<Branch>,
    domain: Domain,
    k: f64,
    l: f64,
}

impl SemiconcaveFn {
    /// Builds the function and derives `K` and `L` on the default grid.
    pub fn new(branches: Vec<Branch>, domain: Domain) -> Result<Self> {
        let (k, l) = derive_constants(&branches, &domain, DEFAULT_CONSTANT_GRID)?;
        Self::with_constants(branches, domain, k, l)
    }

    pub fn with_constants(branches: Vec<Branch>, domain: Domain, k: f64, l: f64) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::NoBranches);
        }
        if !(k >= 0.0 && l >= 0.0 && k.is_finite() && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("constants must be finite and >= 0, got K = {k}, L = {l}")));
        }
        Ok(SemiconcaveFn { branches, domain, k, l })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Semiconcavity constant `K`.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Lipschitz bound `L` for `K‖x‖² − u`.
    pub fn l(&self) -> f64 {
        self.l
    }

    fn check(&self, x: Vec2) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(x))
        }
    }

    /// `u(x) = min_b f_b(x)`.
    pub fn eval_min(&self, x: Vec2) -> Result<f64> {
        self.check(x)?;
        Ok(self.value(x))
    }

    /// Like [`eval_min`](Self::eval_min) without the domain check.
    pub fn value(&self, x: Vec2) -> f64 {
        self.branches.iter().map(|b| b.value(x)).fold(f64::INFINITY, f64::min)
    }

    /// Indices of branches within the active tolerance of the minimum.
    ///
    /// The tolerance is relative: `tol_active · max(1, |u(x)|)`.
    pub fn active_set(&self, x: Vec2, tol_active: f64) -> Result<Vec<usize>> {
        self.check(x)?;
        if !(tol_active > 0.0) {
            return Err(Error::InvalidArgument(format!("tol_active must be positive, got {tol_active}")));
        }
        Ok(self.active_unchecked(x, tol_active))
    }

    pub(crate) fn active_unchecked(&self, x: Vec2, tol_active: f64) -> Vec<usize> {
        let values: Vec<f64> = self.branches.iter().map(|b| b.value(x)).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = effective_tol(tol_active, min);
        values.iter().enumerate().filter(|(_, &v)| v <= min + tol).map(|(i, _)| i).collect()
    }

    /// The convex part `f(x) = K‖x‖² − u(x)`.
    pub fn convex_part(&self, x: Vec2) -> f64 {
        self.k * x.norm_sq() - self.value(x)
    }

    /// Largest violation of midpoint concavity of `g = u − K‖x‖²` over the
    /// given segments; non-positive when the constant is valid there.
    pub fn concavity_defect(&self, segments: &[(Vec2, Vec2)]) -> f64 {
        let g = |x: Vec2| self.value(x) - self.k * x.norm_sq();
        segments.iter().map(|&(a, b)| 0.5 * (g(a) + g(b)) - g(0.5 * (a + b))).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `u ∘ A⁻¹` on the bounding rectangle of `A(domain)`, with constants
    /// re-derived.
    pub fn transform(&self, frame: &Frame) -> Result<SemiconcaveFn> {
        let branches: Vec<Branch> = self.branches.iter().map(|b| b.compose_inverse(frame)).collect();
        let img = self.domain.corners().map(|c| frame.apply(c));
        let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&Vec2) -> f64| img.iter().map(sel).fold(init, f);
        let domain = Domain::new(
            fold(f64::min, f64::INFINITY, |p| p.x),
            fold(f64::max, f64::NEG_INFINITY, |p| p.x),
            fold(f64::min, f64::INFINITY, |p| p.y),
            fold(f64::max, f64::NEG_INFINITY, |p| p.y),
        )?;
        SemiconcaveFn::new(branches, domain)
    }
}

/// Active-set tolerance scaled by the local value magnitude.
#[inline]
pub fn effective_tol(tol_active: f64, value: f64) -> f64 {
    tol_active * value.abs().max(1.0)
}

/// Samples `K` and `L` on a `grid_n × grid_n` grid.
///
/// `K` is half the largest branch Hessian eigenvalue, clipped at zero, and
/// `L` bounds `‖2Kx − ∇f_b(x)‖`; both are multiplied by [`SAFETY_FACTOR`].
pub fn derive_constants(branches: &[Branch], domain: &Domain, grid_n: usize) -> Result<(f64, f64)> {
    if grid_n < 16 {
        return Err(Error::InvalidArgument(format!("grid_n must be at least 16, got {grid_n}")));
    }
    let mut lam = 0.0f64;
    for p in domain.grid(grid_n) {
        for b in branches {
            let e = b.hessian(p).max_eigenvalue();
            if !e.is_finite() {
                return Err(Error::NonFinite("branch Hessian"));
            }
            lam = lam.max(e);
        }
    }
    let k = 0.5 * lam * SAFETY_FACTOR;
    let mut l = 0.0f64;
    for p in domain.grid(grid_n) {
        for b in branches {
            let n = (2.0 * k * p - b.gradient(p)).norm();
            if !n.is_finite() {
                return Err(Error::NonFinite("branch gradient"));
            }
            l = l.max(n);
        }
    }
    Ok((k, l * SAFETY_FACTOR))
}
