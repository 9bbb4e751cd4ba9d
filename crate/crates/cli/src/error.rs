use std::fmt;

/// Failure of a command, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration, flags or files. Exit code 1.
    Config(String),
    /// Unreadable CSV or JSON content. Exit code 2.
    Parse(String),
    /// Fitting or numerical failure. Exit code 3.
    Compute(tolpred::Error),
    /// Too many failed simulation runs. Exit code 4.
    Simulation(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Simulation(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Simulation(m) => write!(f, "simulation error: {m}"),
        }
    }
}

impl From<tolpred::Error> for CliError {
    fn from(e: tolpred::Error) -> Self {
        match e {
            tolpred::Error::Config(m) => CliError::Config(m),
            tolpred::Error::SimulationBudget { .. } => CliError::Simulation(e.to_string()),
            other => CliError::Compute(other),
        }
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn parse(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}
