use thiserror::Error;

use crate::dataset::StoreError;
use crate::eval::EvalError;
use crate::generation::GenerationError;
use crate::http::ClientError;
use crate::registry::{RegistryError, TemplateError};
use crate::validation::ValidationError;

/// Union of the per-stage errors, for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Client(#[from] ClientError),
}
