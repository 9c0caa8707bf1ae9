//! Singular arcs of semiconcave functions in the plane.
//!
//! A [`model::SemiconcaveFn`] is a minimum of polynomial branches on a
//! rectangle. Starting from a point where its singular set propagates, the
//! crate traces the singular arc ([`tracer`]), writes the arc near its seed
//! as a difference of convex functions, and certifies that it has finite
//! turn ([`dcturn`]). [`oracle`] gives brute-force cross-checks;
//! [`pipeline`], [`scenario`] and [`cli`] compose everything for batch use.
//!
//! ```
//! use singprop::subdiff::{propagation_criterion, reachable_gradients};
//! use singprop::tracer::{trace_arc, TraceOptions};
//! use singprop::{fixtures, Vec2};
//!
//! let f = fixtures::parabola();
//! assert!(propagation_criterion(&reachable_gradients(&f, Vec2::ZERO, 1e-9)?));
//! let opts = TraceOptions { step: 0.01, max_len: 10.0, tol_active: 1e-9 };
//! let arc = trace_arc(&f, Vec2::ZERO, (0, 1), Vec2::E1, &opts)?;
//! assert!((arc.length() - fixtures::parabola_arclength()).abs() < 1e-4);
//! # Ok::<(), singprop::Error>(())
//! ```
//!
//! The guide in `book/` walks through each stage; its snippets run as
//! doc-tests of this crate.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dcturn;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod subdiff;
pub mod tracer;

pub use error::{Error, Result};
pub use geom::Vec2;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/superdifferentials.md")]
    mod superdifferentials {}
    #[doc = include_str!("../../../book/src/tracing.md")]
    mod tracing {}
    #[doc = include_str!("../../../book/src/dc-decomposition.md")]
    mod dc_decomposition {}
    #[doc = include_str!("../../../book/src/turn.md")]
    mod turn {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
