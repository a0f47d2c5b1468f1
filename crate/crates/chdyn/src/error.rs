use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    /// Bad config or unreadable input; exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed CSV or snapshot; exit 2.
    #[error("input error: {0}")]
    Input(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    /// Blow-up or solver failure; exit 3.
    #[error("numerical failure: {0}")]
    Numerical(#[from] chdyn_core::Error),
    /// A check or fit did not pass; exit 1.
    #[error("check failed: {0}")]
    Check(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Check(_) => 1,
            AppError::Config(_) | AppError::Input(_) | AppError::Io(_) => 2,
            AppError::Numerical(_) => 3,
        }
    }

    /// Single structured line for stderr.
    pub fn line(&self) -> String {
        let kind = match self {
            AppError::Config(_) => "config",
            AppError::Input(_) => "input",
            AppError::Io(_) => "io",
            AppError::Numerical(_) => "numerical",
            AppError::Check(_) => "check",
        };
        let msg = self.to_string().replace('\n', "; ");
        format!("error kind={kind} code={} msg=\"{msg}\"", self.exit_code())
    }
}
