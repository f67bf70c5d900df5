//! Perturbed affine arithmetic: an abstract domain of affine forms with an
//! extra unshared perturbation term, and iteration schemes that bound the
//! outputs of linear recursive filters.

pub mod error;
pub mod filter;
pub mod fixpoint;
pub mod form;
pub mod interval;
pub mod order;
pub mod semantics;

pub use error::{DomainError, EvalError, FilterError, SchemeError};
pub use filter::{companion, running_bounds, unfold_exact, BoundsRow, BoundsTrace, FilterSpec, InputMode, Matrix};
pub use fixpoint::{
    cyclic_unfold, filter_program, interval_kleene, iterate_scheme, stability_order, Divergence, IterationReport,
    JoinOp, SchemeConfig, Status, Target, TraceStep,
};
pub use form::{AffineForm, Symbol, SymbolContext};
pub use interval::Interval;
pub use order::{
    generic_position, in_cone, join_mub, leq, ll, meet_delta, meet_mlb, mub_exists, widen_nabla, widen_w, MubResult,
    Selection, DEFAULT_TOL,
};
pub use semantics::{eval_abstract, eval_concrete, joint_gamma_2d, transfer_stmt, AbstractEnv, Expr, Lifted, NoiseAssignment, Program, Stmt};
