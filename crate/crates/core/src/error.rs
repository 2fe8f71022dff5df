use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("disturbance model: {0}")]
    Model(String),

    #[error("all trajectory weights are zero")]
    DegenerateWeights,

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    Divergence { epoch: usize, learning_rate: f64 },

    #[error("enumeration would produce {required} trajectories, limit is {limit}")]
    Capacity { required: u128, limit: u128 },

    #[error("KL divergence is infinite: {0}")]
    InfiniteDivergence(String),

    #[error("statistics: {0}")]
    Statistics(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("variant `{variant}`, seed {seed}, iteration {iteration}: {source}")]
    Run {
        variant: String,
        seed: u64,
        iteration: usize,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }
}
