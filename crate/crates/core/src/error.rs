use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("projection out of range: distance {distance} to the domain is not below rho0 = {rho0}")]
    ProjectionOutOfRange { distance: f64, rho0: f64 },

    #[error("point is not on the boundary (signed distance {signed_distance})")]
    NotOnBoundary { signed_distance: f64 },

    #[error("start point lies outside the closed domain")]
    StartOutsideDomain,

    #[error("trajectory left the finite-value region")]
    NonFinite,

    #[error("jump too large at t = {time}: |dz| = {size}, bound rho0 / L = {bound}")]
    JumpTooLarge { time: f64, size: f64, bound: f64 },

    #[error("bad interval [{from}, {to}]")]
    BadInterval { from: f64, to: f64 },

    #[error("horizon mismatch: path ends at {path_end}, horizon is {horizon}")]
    HorizonMismatch { path_end: f64, horizon: f64 },

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ProjectionOutOfRange { .. } => "ProjectionOutOfRange",
            Error::NotOnBoundary { .. } => "NotOnBoundary",
            Error::StartOutsideDomain => "StartOutsideDomain",
            Error::NonFinite => "NonFinite",
            Error::JumpTooLarge { .. } => "JumpTooLarge",
            Error::BadInterval { .. } => "BadInterval",
            Error::HorizonMismatch { .. } => "HorizonMismatch",
            Error::EmptyDomain(_) => "EmptyDomain",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
