use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] optonoise::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for invalid input, 3 when the library reports an internal inconsistency.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(optonoise::Error::Inconsistent { .. }) => 3,
            _ => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let inconsistent = CliError::Core(optonoise::Error::Inconsistent {
            closed_form: 1.0,
            numeric: 2.0,
            relative: 1.0,
        });
        assert_eq!(inconsistent.exit_code(), 3);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(optonoise::Error::NoCooling).exit_code(), 2);
    }
}
