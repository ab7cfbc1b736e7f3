use thiserror::Error;

/// Failure while evaluating a guard or an update function.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("type mismatch: expected {expected}, found {found}")]
    Type {
        expected: &'static str,
        found: &'static str,
    },
    #[error("integer overflow")]
    Overflow,
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum BipError {
    #[error("definition error: {0}")]
    Definition(String),
    #[error("semantics error: {0}")]
    Semantics(String),
    #[error("build error: {0}")]
    Build(String),
    #[error("evaluation failed in {context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: EvalError,
    },
}

impl BipError {
    pub(crate) fn eval(context: impl Into<String>, source: EvalError) -> Self {
        BipError::Eval {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = BipError> = std::result::Result<T, E>;
