//! Error type shared by the whole pipeline.

use std::path::PathBuf;

/// Errors produced while building grids, loading files, or scoring rigs.
///
/// The split between [`Error::Io`] and everything else is deliberate:
/// callers (notably the CLI) treat I/O failures differently from
/// validation and parse failures when choosing an exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value or argument fails validation.
    #[error("{0}")]
    Invalid(String),

    /// Reading or writing a file failed at the OS level.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but its contents are malformed.
    ///
    /// `line` is 1-based; it is `None` for formats where a single line
    /// number is meaningless (e.g. binary headers).
    #[error("{path}{}: {message}", fmt_line(.line))]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(":{n}"),
        None => String::new(),
    }
}

impl Error {
    /// Validation error with a formatted message.
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    /// I/O error tagged with the path that failed.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Parse error for a specific line of a file.
    pub fn parse_at(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line: Some(line),
            message: message.into(),
        }
    }

    /// Parse error for a file as a whole.
    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line: None,
            message: message.into(),
        }
    }

    /// True for errors that stem from the operating system rather than
    /// from the content of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
