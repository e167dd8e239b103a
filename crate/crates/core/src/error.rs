use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Numerical failure. `min_eig` is filled in when the failure is an
    /// indefinite matrix.
    #[error("numeric failure: {message}")]
    Numeric {
        message: String,
        min_eig: Option<f64>,
    },

    #[error("target is not representable on this design (residual {residual:e})")]
    NotRepresentable { residual: f64 },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric {
            message: msg.into(),
            min_eig: None,
        }
    }
}
