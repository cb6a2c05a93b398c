use serde::Serialize;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Exit 2: bad flags, bad config file, invalid parameter, unwritable output.
    Config { key: String, message: String },
    /// Exit 3: a solver found nothing (no operating point, no bracket).
    Solver(String),
}

#[derive(Serialize)]
struct Report<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    key: Option<&'a str>,
    message: &'a str,
    exit_code: i32,
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let report = match self {
            CliError::Config { key, message } => Report {
                error: "config",
                key: Some(key),
                message,
                exit_code: self.exit_code(),
            },
            CliError::Solver(message) => Report {
                error: "solver",
                key: None,
                message,
                exit_code: self.exit_code(),
            },
        };
        serde_json::to_string(&report).expect("error reports serialize")
    }
}

impl From<pssc_core::Error> for CliError {
    fn from(e: pssc_core::Error) -> Self {
        use pssc_core::Error as E;
        let message = e.to_string();
        if e.is_solver_failure() {
            return CliError::Solver(message);
        }
        let key = match &e {
            E::InvalidParameter { key, .. } => key.clone(),
            E::ZeroLinewidth => "gamma_deph_hz".to_string(),
            E::BadAxis(_) => "sweep".to_string(),
            _ => "config".to_string(),
        };
        CliError::Config { key, message }
    }
}
