//! Dataset files.
//!
//! `f64le`: magic `SSHD`, version `u32`, series count `u64`, series length
//! `u64`, then row-major `f64` payload; every field little-endian.
//!
//! `csv`: one series per line, comma-separated decimal floats, no header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::{Dataset, Source, TimeSeries};

pub const DATASET_MAGIC: &[u8; 4] = b"SSHD";
pub const DATASET_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    F64le,
}

impl Format {
    /// Guesses from the extension: `.csv` is CSV, anything else f64le.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::F64le,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "f64le" | "bin" => Ok(Format::F64le),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

pub fn load_series_file(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
    let path = path.as_ref();
    let source = Source::File {
        path: path.to_path_buf(),
        format,
    };
    match format {
        Format::F64le => {
            let mut bytes = Vec::new();
            File::open(path)?.read_to_end(&mut bytes)?;
            decode_f64le(&bytes, source)
        }
        Format::Csv => read_csv(BufReader::new(File::open(path)?), source),
    }
}

/// Loads a file that must hold exactly one series (a long recording).
pub fn load_recording(path: impl AsRef<Path>, format: Format) -> Result<TimeSeries> {
    let dataset = load_series_file(path.as_ref(), format)?;
    if dataset.len() != 1 {
        return Err(Error::InvalidData(format!(
            "{} holds {} series; a recording must be a single series",
            path.as_ref().display(),
            dataset.len()
        )));
    }
    Ok(dataset.get(0))
}

pub fn write_series_file(dataset: &Dataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        Format::F64le => out.write_all(&encode_f64le(dataset))?,
        Format::Csv => {
            let mut line = String::new();
            for id in 0..dataset.len() {
                line.clear();
                for (i, v) in dataset.series(id).iter().enumerate() {
                    if i > 0 {
                        line.push(',');
                    }
                    line.push_str(&v.to_string());
                }
                line.push('\n');
                out.write_all(line.as_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_recording(series: &TimeSeries, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let dataset = Dataset::from_series(vec![series.clone()], Source::InMemory)?;
    write_series_file(&dataset, path, format)
}

pub fn encode_f64le(dataset: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + dataset.len() * dataset.series_len() * 8);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(dataset.len() as u64).to_le_bytes());
    out.extend_from_slice(&(dataset.series_len() as u64).to_le_bytes());
    for id in 0..dataset.len() {
        for v in dataset.series(id).iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        location: format!("byte offset {offset}"),
        message: message.into(),
    }
}

pub fn decode_f64le(bytes: &[u8], source: Source) -> Result<Dataset> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            "file shorter than the 24-byte header",
        ));
    }
    if &bytes[0..4] != DATASET_MAGIC {
        return Err(format_err(0, "bad magic, expected SSHD"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATASET_VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let series_len = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if count == 0 || series_len == 0 {
        return Err(format_err(8, "series count and length must be non-zero"));
    }
    let expected = count
        .checked_mul(series_len)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| format_err(8, "declared payload size overflows"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected {
        return Err(format_err(
            HEADER_LEN + payload.len().min(expected as usize),
            format!(
                "payload has {} bytes, header declares {expected}",
                payload.len()
            ),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Dataset::from_rows(values, series_len as usize, source)
}

pub fn read_csv(reader: impl BufRead, source: Source) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut width = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut n = 0;
        for (col, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Format {
                location: format!("line {}, column {}", lineno + 1, col + 1),
                message: format!("cannot parse '{}' as a number", field.trim()),
            })?;
            rows.push(v);
            n += 1;
        }
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(Error::InvalidData(format!(
                    "ragged CSV: line {} has {n} values, expected {w}",
                    lineno + 1
                )))
            }
            _ => {}
        }
    }
    let width = width.ok_or_else(|| Error::InvalidData("CSV contains no series".into()))?;
    Dataset::from_rows(rows, width, source)
}
