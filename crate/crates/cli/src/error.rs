use std::fmt;

/// A failure mapped to the CLI's exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unusable input files: exit 1.
    User(String),
    /// Inputs were fine but processing them failed: exit 2.
    Data(String),
}

impl CliError {
    pub fn user(msg: impl fmt::Display) -> Self {
        CliError::User(msg.to_string())
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}
