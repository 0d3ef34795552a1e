use std::fmt::Display;
use std::path::Path;

/// Usage/IO errors exit with 2, computation failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

pub fn usage_msg(msg: impl Display) -> CliError {
    CliError::Usage(anyhow::anyhow!("{msg}"))
}

pub fn compute_msg(msg: impl Display) -> CliError {
    CliError::Compute(anyhow::anyhow!("{msg}"))
}

/// Wraps a file-scoped operation so the failing path appears in the message.
pub fn at_path<T, E: Into<anyhow::Error>>(
    path: &Path,
    r: std::result::Result<T, E>,
) -> Result<T> {
    r.map_err(|e| CliError::Usage(e.into().context(format!("{}", path.display()))))
}
