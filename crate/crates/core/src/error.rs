use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Resource,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("group parameters differ: (n={left_n}, p={left_p}) vs (n={right_n}, p={right_p})")]
    Mismatch {
        left_n: usize,
        left_p: u32,
        right_n: usize,
        right_p: u32,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{what} needs {size}, above the cap of {cap}{}", hint.map(|h| format!(" ({h})")).unwrap_or_default())]
    CapExceeded {
        what: &'static str,
        size: String,
        cap: String,
        hint: Option<&'static str>,
    },
    #[error("arithmetic invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Mismatch { .. } | Error::InvalidArgument(_) | Error::Parse(_) => ErrorKind::Usage,
            Error::CapExceeded { .. } => ErrorKind::Resource,
            Error::Internal(_) => ErrorKind::Internal,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn cap(
        what: &'static str,
        size: impl ToString,
        cap: impl ToString,
        hint: Option<&'static str>,
    ) -> Self {
        Error::CapExceeded {
            what,
            size: size.to_string(),
            cap: cap.to_string(),
            hint,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
