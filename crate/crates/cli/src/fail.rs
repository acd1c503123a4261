use flowfield::Error;
use std::fmt;

pub const OK: u8 = 0;
pub const CHECK_FAILED: u8 = 1;
pub const USAGE: u8 = 2;
pub const IO: u8 = 3;
pub const DIVERGED: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

pub type CliResult<T = ()> = std::result::Result<T, Failure>;

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure { code: USAGE, msg: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Failure { code: IO, msg: msg.into() }
    }

    pub fn check(msg: impl Into<String>) -> Self {
        Failure { code: CHECK_FAILED, msg: msg.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

/// Unreadable or malformed inputs are I/O failures; bad settings and
/// inconsistent shapes are usage failures.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Format(_) | Error::Corrupt { .. } | Error::Csv(_) | Error::NonFinite(_) => IO,
        Error::Diverged { .. } => DIVERGED,
        _ => USAGE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), msg: e.to_string() }
    }
}

pub fn write_file(path: &std::path::Path, bytes: impl AsRef<[u8]>) -> CliResult {
    std::fs::write(path, bytes).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

pub fn create_dir(path: &std::path::Path) -> CliResult {
    std::fs::create_dir_all(path).map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))
}
