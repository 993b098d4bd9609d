use thiserror::Error;

/// Errors raised across the library. Each variant maps onto one of the
/// CLI exit categories via [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    ConfigKey {
        key: String,
        line: usize,
        message: String,
    },

    #[error("lattice too large: {sites} sites exceeds the limit of {max}")]
    Size { sites: usize, max: usize },

    #[error("one-particle matrix is not positive definite: eigenvalue {eigenvalue:e} <= threshold {threshold:e}")]
    NotPositiveDefinite { eigenvalue: f64, threshold: f64 },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("function is not finite at eigenvalue {eigenvalue:e}")]
    NonFinite { eigenvalue: f64 },

    #[error("resolvent is ill-conditioned at z = {re}{im:+}i: distance to spectrum {distance:e}")]
    Conditioning { re: f64, im: f64, distance: f64 },

    #[error("fit domain error: {0}")]
    FitDomain(String),

    #[error("statistical validity error: {0}")]
    Statistical(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Numerical,
    Statistical,
    Io,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Numerical => "numerical",
            Category::Statistical => "statistical",
            Category::Io => "io",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Numerical => 3,
            Category::Statistical => 4,
            Category::Io => 1,
        }
    }
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) | Error::ConfigKey { .. } | Error::Size { .. } => Category::Config,
            Error::NotPositiveDefinite { .. }
            | Error::NotSymmetric { .. }
            | Error::NonFinite { .. }
            | Error::Conditioning { .. }
            | Error::FitDomain(_)
            | Error::Numerical(_) => Category::Numerical,
            Error::Statistical(_) => Category::Statistical,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => Category::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
