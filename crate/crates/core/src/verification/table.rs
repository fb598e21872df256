use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Hex SHA-256 of the JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// CSV table preceded by one `# key=value ...` metadata comment line.
pub struct TableWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TableWriter<W> {
    pub fn new(mut w: W, meta: &[(&str, String)]) -> Result<Self> {
        let line: Vec<String> = meta
            .iter()
            .map(|(k, v)| format!("{k}={}", v.replace(char::is_whitespace, "_")))
            .collect();
        writeln!(w, "# {}", line.join(" "))?;
        Ok(Self {
            inner: csv::Writer::from_writer(w),
        })
    }

    pub fn row<R: Serialize>(&mut self, r: &R) -> Result<()> {
        self.inner.serialize(r)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| crate::error::Error::Io(e.into_error()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        cells: usize,
        err: f64,
    }

    #[test]
    fn metadata_line_precedes_header() {
        let mut t = TableWriter::new(Vec::new(), &[("config_hash", "ab12".into()), ("refinements", "8 16".into())])
            .unwrap();
        t.row(&Row { cells: 8, err: 0.5 }).unwrap();
        let text = String::from_utf8(t.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["# config_hash=ab12 refinements=8_16", "cells,err", "8,0.5"]);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&[1.0, 2.0]).unwrap();
        assert_eq!(a, config_hash(&[1.0, 2.0]).unwrap());
        assert_ne!(a, config_hash(&[1.0, 2.5]).unwrap());
        assert_eq!(a.len(), 64);
    }
}
