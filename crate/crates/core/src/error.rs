use thiserror::Error;

/// Errors raised by the dynamics, controller, simulator and analysis code.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(&'static str),

    #[error("{}", match line {
        Some(l) => format!("parse error at line {l}: {reason}"),
        None => format!("parse error: {reason}"),
    })]
    Parse { line: Option<usize>, reason: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state outside the validated workspace: {0}")]
    OutsideWorkspace(String),

    #[error("singular configuration: smallest inertia eigenvalue {min_eigenvalue:e}")]
    SingularConfiguration { min_eigenvalue: f64 },

    #[error("output map is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("inertial coupling lost: |det(lambda_c G)| = {det:e}")]
    CouplingSingular { det: f64 },

    #[error("linearization point is not an equilibrium (|xdot| = {norm:e})")]
    NotAnEquilibrium { norm: f64 },

    #[error("run aborted at t = {t} s: {cause}")]
    RunAborted {
        t: f64,
        q: Vec<f64>,
        dq: Vec<f64>,
        cause: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by the input files rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io(_)
                | Error::InvalidConfig(_)
                | Error::NonPositiveParameter(_)
                | Error::OutsideWorkspace(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
