pub mod eval;
pub mod index;
pub mod prep;
pub mod query;
pub mod train;

/// Distinguishes argument problems (exit 1) from pipeline failures (exit 2).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Runtime(err)
    }
}

impl From<sth_core::Error> for CliError {
    fn from(err: sth_core::Error) -> Self {
        CliError::Runtime(err.into())
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
pub fn write_stdout(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Runtime(
            anyhow::Error::new(e).context("writing to stdout"),
        )),
    }
}

pub type CmdResult = Result<(), CliError>;
