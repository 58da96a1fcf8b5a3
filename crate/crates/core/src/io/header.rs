use crate::error::{Error, Result};

pub(crate) const END: &str = "end_header";

/// Parsed header key/value lines in file order; `#` comment lines are skipped.
pub(crate) struct Header {
    pub lines: Vec<(String, String)>,
    /// Bytes consumed including the `end_header` line.
    pub len: usize,
    cursor: usize,
}

impl Header {
    pub fn parse(bytes: &[u8], magic: &'static str, version: u32) -> Result<Self> {
        let mut pos = 0;
        let next_line = |pos: &mut usize| -> Result<Option<String>> {
            let rest = &bytes[*pos..];
            let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
                return Ok(None);
            };
            let line = std::str::from_utf8(&rest[..nl])
                .map_err(|_| Error::MalformedHeader("header is not UTF-8".into()))?
                .to_string();
            *pos += nl + 1;
            Ok(Some(line))
        };
        match next_line(&mut pos) {
            Ok(Some(l)) if l == magic => {}
            _ => return Err(Error::BadMagic { expected: magic }),
        }
        let mut lines = Vec::new();
        loop {
            let line = next_line(&mut pos)?
                .ok_or_else(|| Error::MalformedHeader(format!("missing {END} line")))?;
            if line == END {
                break;
            }
            if line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(' ').unwrap_or((line.as_str(), ""));
            lines.push((k.to_string(), v.to_string()));
        }
        let mut header = Self {
            lines,
            len: pos,
            cursor: 0,
        };
        let found = header.take("version")?;
        if found != version.to_string() {
            return Err(Error::VersionMismatch {
                found,
                expected: version,
            });
        }
        Ok(header)
    }

    /// Next non-comment line, which must carry `key`.
    pub fn take(&mut self, key: &str) -> Result<String> {
        let (k, v) = self
            .lines
            .get(self.cursor)
            .ok_or_else(|| Error::MalformedHeader(format!("missing {key:?}")))?;
        if k != key {
            return Err(Error::MalformedHeader(format!(
                "expected {key:?}, found {k:?}"
            )));
        }
        self.cursor += 1;
        Ok(v.clone())
    }

    pub fn take_parsed<V: std::str::FromStr>(&mut self, key: &str) -> Result<V> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| Error::MalformedHeader(format!("bad value {v:?} for {key:?}")))
    }

    pub fn finish(&self) -> Result<()> {
        match self.lines.get(self.cursor) {
            None => Ok(()),
            Some((k, _)) => Err(Error::MalformedHeader(format!("unexpected key {k:?}"))),
        }
    }
}

pub(crate) fn push_comments(out: &mut String, comments: &[String]) {
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
}

/// The `#` comment lines of a bundle or index header (used to recover the
/// command that produced a file).
pub fn header_comments(bytes: &[u8]) -> Vec<String> {
    let mut out = Vec::new();
    for line in bytes.split(|&b| b == b'\n') {
        let Ok(line) = std::str::from_utf8(line) else {
            break;
        };
        if line == END {
            break;
        }
        if let Some(c) = line.strip_prefix('#') {
            out.push(c.trim_start().to_string());
        }
    }
    out
}
