//! Small closed-form test functions used across the test suites, the guide
//! and the bundled scenarios.

use crate::geom::Vec2;
use crate::model::{Branch, Domain, SemiconcaveFn};

fn build(branches: &[&[(u32, u32, f64)]], domain: [f64; 4]) -> SemiconcaveFn {
    let branches = branches.iter().map(|t| Branch::new(t.iter().copied()).expect("fixture branch")).collect();
    let [a, b, c, d] = domain;
    SemiconcaveFn::new(branches, Domain::new(a, b, c, d).expect("fixture domain")).expect("fixture function")
}

/// `min(x₂, −x₂) = −|x₂|` on `[−1, 1]²`; singular along the `x₁`-axis.
pub fn abs_x2() -> SemiconcaveFn {
    build(&[&[(0, 1, 1.0)], &[(0, 1, -1.0)]], [-1.0, 1.0, -1.0, 1.0])
}

/// `min(x₁, −x₁) = −|x₁|` on `[−1, 1]²`; singular along the `x₂`-axis.
pub fn abs_x1() -> SemiconcaveFn {
    build(&[&[(1, 0, 1.0)], &[(1, 0, -1.0)]], [-1.0, 1.0, -1.0, 1.0])
}

/// `min(x₂ − x₁², 0)` on `[−1, 1] × [−1, 2]`; singular along `x₂ = x₁²`.
pub fn parabola() -> SemiconcaveFn {
    build(&[&[(0, 1, 1.0), (2, 0, -1.0)], &[]], [-1.0, 1.0, -1.0, 2.0])
}

/// `min(x₁ + x₂, x₁ − x₂, −x₁)` on `[−1, 1]²`; three singular rays meet at
/// the origin.
pub fn three_affine() -> SemiconcaveFn {
    build(&[&[(1, 0, 1.0), (0, 1, 1.0)], &[(1, 0, 1.0), (0, 1, -1.0)], &[(1, 0, -1.0)]], [-1.0, 1.0, -1.0, 1.0])
}

/// `min(‖x‖², 2‖x‖²)`; both branches agree at the origin with equal
/// gradients, so `u` is smooth there.
pub fn two_radial() -> SemiconcaveFn {
    build(&[&[(2, 0, 1.0), (0, 2, 1.0)], &[(2, 0, 2.0), (0, 2, 2.0)]], [-1.0, 1.0, -1.0, 1.0])
}

/// Two curved branches whose difference vanishes on
/// `x₂ = ½x₁² − ½x₁³`, a curve with an inflection at `x₁ = 1/3`. The
/// semiconcavity constant is positive.
pub fn mixed_curvature() -> SemiconcaveFn {
    build(&[&[(0, 1, 1.0), (2, 0, 0.5), (3, 0, 0.5), (0, 2, 1.0)], &[(2, 0, 1.0), (0, 2, 1.0)]], [-1.0, 1.0, -1.0, 1.0])
}

/// The singular curve of [`mixed_curvature`].
pub fn mixed_curvature_curve(x: f64) -> f64 {
    0.5 * x * x - 0.5 * x * x * x
}

/// `min(0, x₂(x₁² + x₂²))`: singular along the `x₁`-axis, but the two
/// gradients `(0, 0)` and `(0, x₁²)` coalesce at the origin.
pub fn coalescing() -> SemiconcaveFn {
    build(&[&[], &[(2, 1, 1.0), (0, 3, 1.0)]], [-1.0, 1.0, -1.0, 1.0])
}

/// A single smooth branch `‖x‖²`.
pub fn smooth() -> SemiconcaveFn {
    build(&[&[(2, 0, 1.0), (0, 2, 1.0)]], [-1.0, 1.0, -1.0, 1.0])
}

/// Exact arclength of `x₂ = x₁²` for `x₁ ∈ [0, 1]`: `√5/2 + asinh(2)/4`.
pub fn parabola_arclength() -> f64 {
    5f64.sqrt() / 2.0 + 2f64.asinh() / 4.0
}

/// Every fixture paired with a name.
pub fn all() -> Vec<(&'static str, SemiconcaveFn)> {
    vec![
        ("abs_x2", abs_x2()),
        ("abs_x1", abs_x1()),
        ("parabola", parabola()),
        ("three_affine", three_affine()),
        ("two_radial", two_radial()),
        ("mixed_curvature", mixed_curvature()),
        ("coalescing", coalescing()),
        ("smooth", smooth()),
    ]
}

/// A seed point, pair and direction known to start a valid arc.
#[derive(Clone, Copy, Debug)]
pub struct ArcSeed {
    pub x0: Vec2,
    pub pair: (usize, usize),
    pub q: Vec2,
}

/// Arc seeds for the fixtures that have propagating singularities away from
/// coalescence.
pub fn arc_seeds() -> Vec<(&'static str, SemiconcaveFn, ArcSeed)> {
    vec![
        ("abs_x2", abs_x2(), ArcSeed { x0: Vec2::ZERO, pair: (0, 1), q: Vec2::E1 }),
        ("abs_x1", abs_x1(), ArcSeed { x0: Vec2::ZERO, pair: (0, 1), q: Vec2::E2 }),
        ("parabola", parabola(), ArcSeed { x0: Vec2::ZERO, pair: (0, 1), q: Vec2::E1 }),
        ("three_affine", three_affine(), ArcSeed { x0: Vec2::new(-0.5, 0.0), pair: (0, 1), q: Vec2::E1 }),
        ("mixed_curvature", mixed_curvature(), ArcSeed { x0: Vec2::ZERO, pair: (0, 1), q: Vec2::E1 }),
    ]
}
