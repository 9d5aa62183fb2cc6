use hatecheck_forge::dataset::StoreError;
use hatecheck_forge::eval::EvalError;
use hatecheck_forge::generation::GenerationError;
use hatecheck_forge::registry::RegistryError;
use hatecheck_forge::validation::{NliError, ValidationError};
use thiserror::Error;

/// Command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("upstream service error: {0}")]
    Upstream(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Upstream(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::Client(_) | GenerationError::Refusal { .. } => {
                CliError::Upstream(e.to_string())
            }
            GenerationError::MockMissing { .. } => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<NliError> for CliError {
    fn from(e: NliError) -> Self {
        match e {
            NliError::Client(_) | NliError::Protocol(_) => CliError::Upstream(e.to_string()),
            NliError::MissingFixture { .. } => CliError::Data(e.to_string()),
            NliError::Fixture { .. } => CliError::Config(e.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::Nli(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Client(_) => CliError::Upstream(e.to_string()),
            EvalError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 2);
        assert_eq!(CliError::Upstream(String::new()).exit_code(), 3);
        assert_eq!(CliError::Data(String::new()).exit_code(), 4);
        let e: CliError = GenerationError::MissingCredentials.into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = GenerationError::Refusal { raw: String::new() }.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = EvalError::InsufficientCorpus { available: 1, requested: 2 }.into();
        assert_eq!(e.exit_code(), 4);
    }
}
