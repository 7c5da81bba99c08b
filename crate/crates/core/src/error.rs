use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed network description (duplicate ids, dangling lines, ...).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The state matrix is not Hurwitz, so the Lyapunov equations have no
    /// bounded solution.
    #[error("system is not asymptotically stable (spectral abscissa {abscissa:e})")]
    Stability { abscissa: f64 },

    /// Non-positive total inertia or damping at a bus.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("load subnetwork disconnected from generators")]
    SingularLoadBlock,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Dimension(_)
                | Error::Parameter(_)
                | Error::Config(_)
                | Error::SingularLoadBlock
        )
    }
}
