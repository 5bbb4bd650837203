//! Exterior calculus on invariant coframes of 6- and 7-dimensional
//! homogeneous models: Nijenhuis tensors, the intrinsic volume functional Ψ,
//! skew-torsion and nearly Kähler structure equations, G2 cones, and a
//! Levenberg–Marquardt search for critical points of Ψ.
//!
//! Everything is finite-dimensional linear algebra once the structure
//! constants are fixed. Deformations of `J` are restricted to invariant ones.

// Index loops mirror the tensor notation; negated comparisons deliberately reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acs;
pub mod cone;
pub mod constants;
pub mod error;
pub mod frame;
pub mod linalg;
pub mod multilinear;
pub mod nijenhuis;
pub mod par;
pub mod su3;
pub mod torsion;
pub mod variation;

pub use acs::{AlmostComplexStructure, Bidegree, Frame10};
pub use error::{GeometryError, Result};
pub use frame::{CoframeAlgebra, Manifest};
pub use multilinear::{Form, Metric, C64};
