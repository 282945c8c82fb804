use std::cell::Cell;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use kspin::experiments::{write_table, ExperimentConfig, TableRow};
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Validation(String),
    /// A size limit or budget was hit: exit code 3.
    Limit(String),
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Limit(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Limit(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<kspin::Error> for CliError {
    fn from(e: kspin::Error) -> Self {
        match e {
            e if e.is_limit() => CliError::Limit(e.to_string()),
            kspin::Error::Io(e) => CliError::Io(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

/// Files under `--out`, or stdout with blank lines between documents.
pub struct Output {
    dir: Option<PathBuf>,
    printed: Cell<bool>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        Ok(Self {
            dir,
            printed: Cell::new(false),
        })
    }

    pub fn emit(&self, name: &str, contents: &str) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
            None => {
                let mut stdout = io::stdout().lock();
                let gap = if self.printed.replace(true) { "\n" } else { "" };
                writeln!(stdout, "{gap}{}", contents.trim_end()).map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }

    pub fn table<R: TableRow>(&self, name: &str, config: &ExperimentConfig, rows: &[R]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_table(&mut buf, config, rows)?;
        self.emit(name, &String::from_utf8(buf).expect("CSV is UTF-8"))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        self.emit(name, &text)
    }
}
