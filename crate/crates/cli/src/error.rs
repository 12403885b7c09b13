use std::fmt;

/// Command failure, split by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 1.
    Validation(Vec<String>),
    /// Physics or numerical failure such as a degenerate ground state;
    /// exit code 2.
    Runtime(String),
    /// File system failure; exit code 2.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) | CliError::Io(_) => 2,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(errs) => {
                writeln!(f, "invalid configuration:")?;
                for e in errs {
                    writeln!(f, "  {e}")?;
                }
                Ok(())
            }
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<entlink::Error> for CliError {
    fn from(e: entlink::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
