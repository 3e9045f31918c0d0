use crate::expr::{EvalError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("symbolic division by zero")]
    SymbolicDivisionByZero,
    #[error("total derivative applied to an expression containing '{0}'")]
    JetInBase(String),
    #[error("{field} depends on '{symbol}', outside its allowed arguments")]
    Dependence { field: String, symbol: String },
    #[error("flow singular at eps = {eps}: {message}")]
    FlowSingular { eps: f64, message: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Verification(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
