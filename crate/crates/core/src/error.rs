use thiserror::Error;

use crate::abp::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("multilinearity violation: variable x{var} repeated")]
    MultilinearityViolation { var: usize },

    #[error("unknown node id {0}")]
    Lookup(NodeId),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("budget exceeded: {what} (limit {limit}, reached {count})")]
    BudgetExceeded {
        what: &'static str,
        limit: u64,
        count: u64,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("order violation: path reading {vars:?} is consistent with none of the given orders")]
    OrderViolation { vars: Vec<usize>, path: Vec<NodeId> },

    #[error("internal contradiction: {0}")]
    InternalContradiction(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn budget(what: &'static str, limit: u64, count: u64) -> Self {
        Error::BudgetExceeded { what, limit, count }
    }
}
