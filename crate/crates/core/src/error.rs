use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("interaction matrix is not symmetric: V(-z) != V(z)^T at offset {offset:?}")]
    NotSymmetric { offset: Vec<i64> },

    #[error("symbol has negative eigenvalue {eigenvalue:e} at theta {theta:?}")]
    NegativeSymbol { theta: Vec<f64>, eigenvalue: f64 },

    #[error("theta {theta:?} is on the critical set: {reason}")]
    CriticalSet { theta: Vec<f64>, reason: String },

    #[error("hessian is degenerate (det = {det:e})")]
    DegenerateHessian { det: f64 },

    #[error("symbol is singular at theta {theta:?}; {what} undefined")]
    SingularSymbol { theta: Vec<f64>, what: &'static str },

    #[error("box extent {extent:?} too small, need at least {required:?}")]
    BoxTooSmall { extent: Vec<usize>, required: Vec<usize> },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("half-space model requires V(z~) = V(z)")]
    ModelViolation,

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("spectral density not positive semi-definite at theta {theta:?} (eigenvalue {eigenvalue:e})")]
    NotPositive { theta: Vec<f64>, eigenvalue: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("summation window too small: tail mass {tail:e} exceeds {tol:e}")]
    WindowTooSmall { tail: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
