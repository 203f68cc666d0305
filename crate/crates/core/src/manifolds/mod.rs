//! Built-in models, the expression-tree chart backend and manifold spec documents.

pub mod builtin;
pub mod chart;
pub mod expr;
pub mod jet;
pub mod spec;

pub use builtin::{builtin_model, lambda_ordering_warning, BuiltinParams};
pub use chart::ChartFrame;
pub use expr::{parse_expr, Expr};
pub use jet::{jet_eval, Jet2};
pub use spec::{emit_manifold_spec, load_manifold_spec, load_model, ManifoldSpec};
