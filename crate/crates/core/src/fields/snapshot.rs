//! Binary snapshot format: one UTF-8 JSON header line followed by flat
//! little-endian `f64` arrays in header order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Grid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub length: Vec<f64>,
    pub boundary: Boundary,
    pub time: f64,
    pub fields: Vec<FieldEntry>,
    /// Always `"effective"`: the stored pressure includes `λ|∇d|²/2`.
    pub pressure: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub data: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn new(grid: &Grid, time: f64, fields: Vec<(String, Vec<f64>)>) -> Self {
        let dim = grid.dim();
        let (names, data): (Vec<_>, Vec<_>) = fields
            .into_iter()
            .map(|(name, v)| (FieldEntry { name, len: v.len() }, v))
            .unzip();
        Self {
            header: SnapshotHeader {
                dim,
                cells: grid.cells()[..dim].to_vec(),
                length: grid.length()[..dim].to_vec(),
                boundary: grid.boundary(),
                time,
                fields: names,
                pressure: "effective".into(),
            },
            data,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let h = &self.header;
        Grid::new(h.dim, &h.cells, &h.length, h.boundary).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.header
            .fields
            .iter()
            .position(|f| f.name == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for arr in &self.data {
            let mut buf = Vec::with_capacity(arr.len() * 8);
            for v in arr {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if !line.ends_with('\n') {
            return Err(Error::Snapshot("missing header line".into()));
        }
        let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
        let mut data = Vec::with_capacity(header.fields.len());
        for f in &header.fields {
            let mut buf = vec![0u8; f.len * 8];
            r.read_exact(&mut buf)
                .map_err(|_| Error::Snapshot(format!("truncated data for field `{}`", f.name)))?;
            data.push(
                buf.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                    .collect(),
            );
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Snapshot(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self { header, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}
