use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("form has negative perturbation coefficient {beta}; its range is undefined")]
    NegativeBeta { beta: f64 },
    #[error("ranges do not intersect")]
    EmptyIntersection,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("no value assigned to noise symbol {0}")]
    MissingSymbol(crate::form::Symbol),
    #[error("no perturbation value for variable `{0}`")]
    MissingPerturbation(String),
    #[error("loop statements cannot be evaluated by the straight-line transfer function")]
    LoopInBody,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("filter order {order} does not match {what} length {len}")]
    Shape { order: usize, what: &'static str, len: usize },
    #[error("filter has no recursive part (order 0)")]
    NoState,
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("filter is not stable")]
    Unstable,
    #[error("no q <= {0} makes every row of A^q contract")]
    Undetermined(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("invalid scheme configuration: {0}")]
    Config(String),
    #[error("program shape not supported: {0}")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}
