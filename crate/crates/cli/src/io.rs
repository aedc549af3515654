use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use posop::{CoordVector, OperatorModel};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] posop::Error),
    /// A check that ran to completion and said no.
    #[error("{0}")]
    Rejected(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Rejected(_) => 3,
            CliError::Model(e) if e.is_non_convergence() => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

pub fn check_input(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{}: no such input file", path.display())))
    }
}

pub fn check_output(path: &Path) -> CliResult<()> {
    if path.is_dir() {
        return Err(invalid(format!("{}: output path is a directory", path.display())));
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(invalid(format!(
            "{}: output directory does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Parse {
        path: path.to_owned(),
        source,
    })
}

pub fn read_operator(path: &Path) -> CliResult<OperatorModel> {
    read_json(path)
}

pub fn read_vector(path: &Path) -> CliResult<CoordVector> {
    read_json(path)
}

/// Compact JSON plus a trailing newline; stable under reload and rewrite.
pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("serializable value");
    s.push('\n');
    s
}

/// Reproducibility record written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a, A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub args: &'a A,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

pub struct Output<'a, A: Serialize> {
    pub config: RunConfig<'a, A>,
}

impl<'a, A: Serialize> Output<'a, A> {
    pub fn new(subcommand: &'a str, args: &'a A) -> Self {
        Self {
            config: RunConfig {
                tool: "posop",
                version: env!("CARGO_PKG_VERSION"),
                subcommand,
                args,
            },
        }
    }

    pub fn write(&self, path: &Path, content: &str) -> CliResult<()> {
        let io = |source| CliError::Io {
            path: path.to_owned(),
            source,
        };
        fs::write(path, content).map_err(io)?;
        let side = sidecar_path(path);
        fs::write(&side, serde_json::to_string_pretty(&self.config).expect("config") + "\n")
            .map_err(|source| CliError::Io { path: side, source })
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> CliResult<()> {
        self.write(path, &to_json_line(value))
    }
}

/// RFC 4180 CSV with LF line endings.
pub fn csv_string<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_quotes() {
        let s = csv_string(&["a", "b"], [vec!["1".to_string(), "x,y".to_string()]]);
        assert_eq!(s, "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(invalid("x").exit_code(), 2);
        assert_eq!(CliError::Rejected("x".into()).exit_code(), 3);
        let nc = posop::Error::NonConvergence {
            iterations: 1,
            estimate: 0.0,
            residual: 1.0,
        };
        assert_eq!(CliError::from(nc).exit_code(), 4);
        assert_eq!(CliError::from(posop::Error::NotAttained).exit_code(), 2);
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("out/b.json")), PathBuf::from("out/b.json.config.json"));
    }
}
