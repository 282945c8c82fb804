use thiserror::Error;

use crate::mdp::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("policy is infeasible: state {state} selects {selected} actions")]
    InfeasiblePolicy { state: usize, selected: usize },

    #[error("assignment has {got} entries, need at least {need}")]
    AssignmentTooShort { got: usize, need: usize },

    #[error("too large for exhaustive search: {what} = {size}, limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("walk enumeration exceeded the term budget of {budget} accumulations")]
    BudgetExceeded { budget: u64 },

    #[error("value iteration did not converge within {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular linear system in policy evaluation")]
    Singular,

    #[error("no reads to estimate success probability from")]
    NoReads,

    #[error("time-to-solution is undefined for every sweep count")]
    AllUndefined,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by size limits or budgets rather than bad input.
    pub fn is_limit(&self) -> bool {
        matches!(
            self,
            Error::TooLarge { .. } | Error::BudgetExceeded { .. } | Error::NotConverged { .. }
        )
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
