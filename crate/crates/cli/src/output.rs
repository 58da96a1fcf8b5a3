use std::fmt::{self, Display};
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

/// Single-line error printed as `latebench: error: <kind>: <message>`.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "Usage",
            message: message.into(),
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // keep the report on one line whatever the source message holds
        let flat = self
            .message
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "{}: {}", self.kind, flat)
    }
}

impl From<latebench_core::Error> for CliError {
    fn from(e: latebench_core::Error) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Context<T> {
    /// Prefixes the error message with the file it concerns.
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let mut e = e.into();
            e.message = format!("{}: {}", path.display(), e.message);
            e
        })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        latebench_core::Error::Io(e).into()
    }
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).at(path)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    String::from_utf8(read_bytes(path)?)
        .map_err(|_| CliError {
            kind: "MalformedLine",
            message: "file is not UTF-8".into(),
        })
        .at(path)
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir).at(&dir)?;
    tmp.write_all(bytes).at(path)?;
    tmp.as_file().sync_all().at(path)?;
    tmp.persist(path).map_err(|e| e.error).at(path)?;
    Ok(())
}

fn quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./,:=@+".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

/// The resolved invocation behind an output: every flag with its effective value,
/// defaults included. `--out` is omitted so identical work yields identical bytes
/// wherever it is written.
pub struct Provenance {
    words: Vec<String>,
    config: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(subcommand: &[&str]) -> Self {
        let mut words = vec!["latebench".to_string()];
        words.extend(subcommand.iter().map(|s| s.to_string()));
        Self {
            words,
            config: Vec::new(),
        }
    }

    pub fn flag(&mut self, name: &str, value: impl Display) -> &mut Self {
        let value = value.to_string();
        self.words.push(format!("--{name}"));
        self.words.push(value.clone());
        self.config.push((name.to_string(), value));
        self
    }

    pub fn opt_flag(&mut self, name: &str, value: Option<impl Display>) -> &mut Self {
        if let Some(v) = value {
            self.flag(name, v);
        }
        self
    }

    /// Input paths are recorded absolute so the command re-runs from any directory.
    pub fn path(&mut self, name: &str, path: &Path) -> &mut Self {
        let abs = std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf());
        self.flag(name, abs.display())
    }

    pub fn switch(&mut self, name: &str, on: bool) -> &mut Self {
        if on {
            self.words.push(format!("--{name}"));
            self.config.push((name.to_string(), "true".into()));
        }
        self
    }

    pub fn command_line(&self) -> String {
        self.words
            .iter()
            .map(|w| quote(w))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Header lines without the leading `#`.
    pub fn comments(&self) -> Vec<String> {
        let mut out = vec![format!("command: {}", self.command_line())];
        out.extend(self.config.iter().map(|(k, v)| format!("{k} {v}")));
        out
    }

    /// Echoes the resolved configuration to stderr.
    pub fn echo(&self) {
        for c in self.comments() {
            eprintln!("# {c}");
        }
    }

    /// `body` preceded by the `#` header lines.
    pub fn with_header(&self, body: &str) -> String {
        let mut s: String = self.comments().iter().map(|c| format!("# {c}\n")).collect();
        s.push_str(body);
        s
    }
}
