//! Numerical engine for canonical Witt connections.
//!
//! A [`FrameModel`] is an adapted frame of a pseudo-Riemannian manifold whose
//! tangent bundle splits into totally isotropic pairs and anisotropic blocks,
//! with constant Gram matrix. Everything downstream (torsion, connection
//! coefficients, curvature, geodesics, the Robinson layer) is an algebra over
//! the frame's structure functions `c^c_ab(x)` and their frame derivatives.
//!
//! Index conventions: `c[[c, a, b]]`, `T[[c, a, b]]` and `Γ[[c, a, b]]` carry
//! the upper index first, `R[[d, a, b, c]] = R^d_abc`, and derivative arrays put
//! the frame direction first. Slots are 0-based in code and 1-based in
//! documents and printed output.
//!
//! ```
//! use witt_core::{builtin_model, canonical_torsion, BuiltinParams, Point};
//!
//! let osc = builtin_model("osc", &BuiltinParams::default()).unwrap();
//! let t = canonical_torsion(&osc, &Point::zeros(osc.dim())).unwrap();
//! assert_eq!(t[[1, 2, 3]], -1.0);
//! ```

pub mod connection;
pub mod curvature;
pub mod error;
pub mod geodesics;
pub mod hermitian;
pub mod manifolds;
pub mod sampling;
pub mod witt;

pub use connection::specialized::specialized_torsion;
pub use connection::*;
pub use curvature::*;
pub use error::{Result, StructureViolation, WittError};
pub use geodesics::*;
pub use hermitian::*;
pub use manifolds::{builtin_model, emit_manifold_spec, lambda_ordering_warning, load_manifold_spec, load_model, BuiltinParams, ManifoldSpec};
pub use sampling::{halton_points, sample_points};
pub use witt::*;
