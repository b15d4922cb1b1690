use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported Bessel order {0}")]
    UnsupportedOrder(f64),
    #[error("kernel singularity: {0}")]
    Singularity(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("screen error: {0}")]
    Screen(String),
    #[error("point {point:?} lies on the boundary (distance {distance:e})")]
    BoundaryAmbiguity { point: [f64; 2], distance: f64 },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("spectral parameter error: {0}")]
    SpectralParameter(String),
    #[error("coefficient error: {0}")]
    Coefficient(String),
    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    Inversion { condition: f64 },
    #[error("extrapolation did not converge: {0}")]
    Extrapolation(String),
    #[error("volume truncation dominates: {0}")]
    Truncation(String),
    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),
    #[error("constraint infeasible: {0}")]
    ConstraintInfeasible(String),
    #[error("segmentation error: {0}")]
    Segmentation(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("scenario parse error: {0}")]
    TomlDe(#[from] toml::de::Error),
    #[error("scenario serialization error: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps the error with a short description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command line tool: 2 for invalid input,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Inversion { .. }
            | Error::Extrapolation(_)
            | Error::Truncation(_)
            | Error::Quadrature(_)
            | Error::DegenerateOperator(_)
            | Error::ConstraintInfeasible(_)
            | Error::Segmentation(_)
            | Error::Assembly(_) => 3,
            _ => 2,
        }
    }
}
