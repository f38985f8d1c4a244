use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("probe needs at least one sample")]
    EmptyProbe,
}

pub type Result<T> = std::result::Result<T, EnvError>;
