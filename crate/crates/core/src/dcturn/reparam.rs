use crate::error::{Error, Result};
use crate::model::Frame;
use crate::tracer::SingularArc;

/// Arcs are truncated once `dξ₁/ds` drops below this in the aligned frame.
pub const MIN_FORWARD_SLOPE: f64 = 0.5;

/// An arc read as the graph `x ↦ (x, g(x))` in a rotated frame.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphParam {
    /// Strictly increasing, starting at `0`.
    pub xs: Vec<f64>,
    pub gs: Vec<f64>,
    pub frame: Frame,
    /// Number of arc samples kept after truncation.
    pub kept: usize,
}

impl GraphParam {
    /// Right end `α` of the parameter interval.
    pub fn alpha(&self) -> f64 {
        *self.xs.last().unwrap_or(&0.0)
    }

    pub fn slopes(&self) -> Vec<f64> {
        super::slopes(&self.xs, &self.gs)
    }

    /// Largest absolute grid slope of `g`.
    pub fn lipschitz(&self) -> f64 {
        self.slopes().iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Aligns the arc with `e₁` at its seed and converts it to a graph.
pub fn reparametrize(arc: &SingularArc) -> Result<GraphParam> {
    let frame = Frame::aligning(arc.seed, arc.q)?;
    let z: Vec<_> = arc.samples.iter().map(|a| frame.apply(a.x)).collect();
    let mut kept = 1;
    for k in 0..z.len().saturating_sub(1) {
        let ds = arc.samples[k + 1].s - arc.samples[k].s;
        if !(ds > 0.0) || (z[k + 1].x - z[k].x) / ds < MIN_FORWARD_SLOPE {
            break;
        }
        kept = k + 2;
    }
    if kept < 3 {
        return Err(Error::ArcTooShort(kept));
    }
    let mut xs: Vec<f64> = z[..kept].iter().map(|p| p.x).collect();
    let gs = z[..kept].iter().map(|p| p.y).collect();
    xs[0] = 0.0;
    Ok(GraphParam { xs, gs, frame, kept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::Vec2;
    use crate::tracer::{trace_arc, TraceOptions};

    fn opts(step: f64) -> TraceOptions {
        TraceOptions { step, max_len: 10.0, tol_active: 1e-9 }
    }

    #[test]
    fn x_axis_arc_is_identity_graph() {
        let arc = trace_arc(&fixtures::abs_x2(), Vec2::ZERO, (0, 1), Vec2::E1, &opts(0.05)).unwrap();
        let gp = reparametrize(&arc).unwrap();
        assert_eq!(gp.frame, Frame::identity());
        assert!(gp.gs.iter().all(|g| g.abs() <= 1e-10));
        assert_eq!(gp.xs[0], 0.0);
        assert!((gp.alpha() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parabola_graph_and_truncation() {
        let arc = trace_arc(&fixtures::parabola(), Vec2::ZERO, (0, 1), Vec2::E1, &opts(1e-3)).unwrap();
        let gp = reparametrize(&arc).unwrap();
        for (x, g) in gp.xs.iter().zip(&gp.gs) {
            assert!((g - x * x).abs() < 1e-8);
        }
        // cos θ = 1/√(1+4x²) ≥ ½ iff x ≤ √3/2.
        assert!(gp.alpha() <= 3f64.sqrt() / 2.0 + 1e-3);
        assert!(gp.alpha() > 3f64.sqrt() / 2.0 - 2e-3);
        assert!(gp.xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn vertical_arc_is_rotated() {
        let arc = trace_arc(&fixtures::abs_x1(), Vec2::ZERO, (0, 1), Vec2::E2, &opts(0.1)).unwrap();
        let gp = reparametrize(&arc).unwrap();
        assert_eq!(gp.frame.rotation, [[0.0, 1.0], [-1.0, 0.0]]);
        assert_eq!(gp.frame.apply_vector(arc.samples[0].tangent), Vec2::E1);
        assert!(gp.gs.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn short_arc_is_rejected() {
        let arc = trace_arc(
            &fixtures::abs_x2(),
            Vec2::ZERO,
            (0, 1),
            Vec2::E1,
            &TraceOptions { step: 0.1, max_len: 0.1, tol_active: 1e-9 },
        )
        .unwrap();
        assert!(matches!(reparametrize(&arc), Err(Error::ArcTooShort(2))));
    }
}
