use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("contour error: {0}")]
    Contour(String),

    #[error("degenerate parametrization: {0}")]
    DegenerateChart(String),

    #[error("bubble extraction refused: {0}")]
    ExtractionRefused(String),

    #[error("time step collapsed below {dt_min:e} at t = {t}")]
    DtCollapse { t: f64, dt_min: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
