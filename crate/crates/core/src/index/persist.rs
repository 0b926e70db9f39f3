//! Index files.
//!
//! Little-endian throughout: magic `SSHI`, version `u32`, parameters, filter
//! weights, a dataset section, then for each table a bucket count followed by
//! `(key u64, id count u64, ids u32...)` per bucket with keys ascending.
//!
//! The dataset section records shape, SHA-256 checksum and how to recover the
//! values: embedded, re-read from a file path, or regenerated from a
//! random-walk seed. Recovered values must match the checksum.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{build_with_hasher, SshHasher, SshIndex, SshParams, Table};
use crate::error::{Error, Result};
use crate::io::{load_recording, load_series_file, Format};
use crate::series::{random_walk_dataset, windows_with_source, Dataset, Source};
use crate::sketch::RandomFilter;

pub const INDEX_MAGIC: &[u8; 4] = b"SSHI";
pub const INDEX_VERSION: u32 = 1;

const EMBEDDED_ROWS: u8 = 0;
const EMBEDDED_RECORDING: u8 = 1;
const FILE_ROWS: u8 = 2;
const FILE_RECORDING: u8 = 3;
const RANDOM_WALK: u8 = 4;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.0.extend_from_slice(b);
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.f64(x);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            location: format!("{} at byte offset {}", self.path.display(), self.pos),
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(format!(
                "file truncated: needed {n} more bytes, {} left",
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.err(format!("value {v} does not fit in usize")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// Length prefix, checked against the bytes remaining.
    fn len(&mut self, elem: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(elem) > self.buf.len() - self.pos {
            return Err(self.err(format!("file truncated: length {n} exceeds remaining data")));
        }
        Ok(n)
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len(1)?;
        self.take(n)
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }
}

fn format_code(f: Format) -> u8 {
    match f {
        Format::Csv => 0,
        Format::F64le => 1,
    }
}

fn encode_params(w: &mut Writer, p: &SshParams) {
    for v in [p.window, p.delta, p.shingle, p.tables, p.per_table] {
        w.u64(v as u64);
    }
    w.u64(p.seed);
    w.f64(p.band);
}

fn encode_dataset(w: &mut Writer, d: &Dataset) {
    w.u64(d.series_len() as u64);
    w.u64(d.len() as u64);
    w.0.extend_from_slice(&d.checksum());
    let normalized = u8::from(d.is_normalized());
    match (d.source(), d.recording()) {
        (Source::RandomWalk { length, seed }, Some(_)) => {
            w.u8(RANDOM_WALK);
            w.u8(normalized);
            w.u64(*length as u64);
            w.u64(*seed);
        }
        (Source::File { path, format }, rec) => {
            w.u8(if rec.is_some() {
                FILE_RECORDING
            } else {
                FILE_ROWS
            });
            w.u8(normalized);
            w.u8(format_code(*format));
            w.bytes(path.to_string_lossy().as_bytes());
        }
        (_, Some(rec)) => {
            w.u8(EMBEDDED_RECORDING);
            w.u8(normalized);
            w.f64s(rec);
        }
        (_, None) => {
            w.u8(EMBEDDED_ROWS);
            w.u8(normalized);
            w.f64s(&d.to_rows());
        }
    }
}

/// Serializes the index. The file is written in one call after encoding.
pub fn save_index(index: &SshIndex, path: impl AsRef<Path>) -> Result<()> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(INDEX_MAGIC);
    w.u32(INDEX_VERSION);
    encode_params(&mut w, index.params());
    w.f64s(index.filter().weights());
    encode_dataset(&mut w, index.dataset());
    for table in index.sorted_tables() {
        w.u64(table.len() as u64);
        for (key, ids) in table {
            w.u64(key);
            w.u64(ids.len() as u64);
            for &id in ids {
                w.u32(id);
            }
        }
    }
    fs::write(path, w.0)?;
    Ok(())
}

fn decode_params(r: &mut Reader) -> Result<SshParams> {
    let p = SshParams {
        window: r.usize()?,
        delta: r.usize()?,
        shingle: r.usize()?,
        tables: r.usize()?,
        per_table: r.usize()?,
        seed: r.u64()?,
        band: r.f64()?,
    };
    p.validate()
        .map_err(|e| r.err(format!("bad parameters: {e}")))?;
    Ok(p)
}

fn recover_dataset(r: &mut Reader) -> Result<Dataset> {
    let series_len = r.usize()?;
    let count = r.usize()?;
    let checksum: [u8; 32] = r.take(32)?.try_into().unwrap();
    let kind = r.u8()?;
    let normalized = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(r.err(format!("bad normalization flag {other}"))),
    };
    let load_err = |e: Error| Error::IndexLoad(format!("cannot recover indexed dataset: {e}"));
    let raw = match kind {
        EMBEDDED_ROWS => {
            let rows = r.f64s()?;
            let d = Dataset::from_rows(rows, series_len, Source::InMemory).map_err(load_err)?;
            if normalized {
                d.mark_normalized()
            } else {
                d
            }
        }
        EMBEDDED_RECORDING => {
            let rec = r.f64s()?;
            windows_with_source(rec, series_len, Source::InMemory).map_err(load_err)?
        }
        FILE_ROWS | FILE_RECORDING => {
            let format = match r.u8()? {
                0 => Format::Csv,
                1 => Format::F64le,
                other => return Err(r.err(format!("bad format code {other}"))),
            };
            let path = PathBuf::from(
                std::str::from_utf8(r.bytes()?).map_err(|_| r.err("dataset path is not UTF-8"))?,
            );
            if kind == FILE_ROWS {
                load_series_file(&path, format).map_err(load_err)?
            } else {
                let rec = load_recording(&path, format).map_err(load_err)?;
                windows_with_source(rec.into_values(), series_len, Source::File { path, format })
                    .map_err(load_err)?
            }
        }
        RANDOM_WALK => {
            let length = r.usize()?;
            let seed = r.u64()?;
            random_walk_dataset(length, seed, series_len).map_err(load_err)?
        }
        other => return Err(r.err(format!("unknown dataset kind {other}"))),
    };
    let dataset = if normalized && !raw.is_normalized() {
        raw.z_normalized()
    } else {
        raw
    };
    if dataset.series_len() != series_len || dataset.len() != count {
        return Err(Error::IndexLoad(format!(
            "indexed dataset was {count} series of length {series_len}, recovered {} of length {}",
            dataset.len(),
            dataset.series_len()
        )));
    }
    if dataset.checksum() != checksum {
        return Err(Error::IndexLoad(
            "indexed dataset checksum does not match the recovered data".into(),
        ));
    }
    Ok(dataset)
}

/// Reads an index written by [`save_index`], re-attaching its dataset.
pub fn load_index(path: impl AsRef<Path>) -> Result<SshIndex> {
    let path = path.as_ref();
    let buf = fs::read(path)?;
    let mut r = Reader {
        buf: &buf,
        pos: 0,
        path,
    };
    if r.take(4).map_err(|_| r.err("file too short for magic"))? != INDEX_MAGIC {
        return Err(Error::IndexLoad(format!(
            "{} is not an index file",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != INDEX_VERSION {
        return Err(Error::IndexLoad(format!(
            "unsupported index version {version}, expected {INDEX_VERSION}"
        )));
    }
    let params = decode_params(&mut r)?;
    let weights = r.f64s()?;
    let filter = RandomFilter::from_weights(weights, params.seed)
        .map_err(|e| r.err(format!("bad filter: {e}")))?;
    let hasher = SshHasher::with_filter(params, filter)?;
    let dataset = recover_dataset(&mut r)?;
    let n = dataset.len();

    let mut tables: Vec<Table> = Vec::with_capacity(params.tables);
    for t in 0..params.tables {
        let buckets = r.len(16)?;
        let mut table = HashMap::with_capacity(buckets);
        let mut seen = vec![false; n];
        let mut last_key = None;
        for _ in 0..buckets {
            let key = r.u64()?;
            if last_key.is_some_and(|k| k >= key) {
                return Err(r.err(format!("table {t}: bucket keys not strictly ascending")));
            }
            last_key = Some(key);
            let count = r.len(4)?;
            let mut ids = Vec::with_capacity(count);
            for _ in 0..count {
                let id = r.u32()?;
                let slot = seen.get_mut(id as usize).ok_or_else(|| {
                    r.err(format!("table {t}: id {id} out of range for {n} series"))
                })?;
                if *slot {
                    return Err(r.err(format!("table {t}: id {id} appears twice")));
                }
                *slot = true;
                ids.push(id);
            }
            table.insert(key, ids);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(r.err(format!("table {t}: id {missing} is missing")));
        }
        tables.push(table);
    }
    if r.pos != buf.len() {
        return Err(r.err(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(SshIndex {
        hasher,
        tables,
        dataset,
    })
}

/// Rebuilds from scratch with the loaded parameters and filter.
pub fn rebuild_index(index: &SshIndex) -> Result<SshIndex> {
    build_with_hasher(index.dataset(), index.hasher().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{build_index, query_index};
    use crate::io::write_recording;
    use crate::series::{generate_random_walk, z_normalize, TimeSeries};

    fn params() -> SshParams {
        SshParams {
            window: 8,
            delta: 2,
            shingle: 4,
            tables: 6,
            ..SshParams::random_walk()
        }
    }

    fn same_results(a: &SshIndex, b: &SshIndex, queries: &[TimeSeries]) {
        for q in queries {
            let x = query_index(a, q, 5).unwrap();
            let y = query_index(b, q, 5).unwrap();
            assert_eq!(x.outcome.neighbors, y.outcome.neighbors);
            assert_eq!(x.candidates, y.candidates);
        }
    }

    fn queries(t: usize, count: u64) -> Vec<TimeSeries> {
        (0..count)
            .map(|s| z_normalize(&generate_random_walk(t, 1000 + s).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn random_walk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rw.sshi");
        let data = random_walk_dataset(3000, 11, 48).unwrap().z_normalized();
        let idx = build_index(&data, params()).unwrap();
        save_index(&idx, &path).unwrap();
        let back = load_index(&path).unwrap();
        assert_eq!(back.params(), idx.params());
        assert_eq!(back.filter().weights(), idx.filter().weights());
        assert_eq!(back.sorted_tables(), idx.sorted_tables());
        assert_eq!(
            rebuild_index(&back).unwrap().sorted_tables(),
            idx.sorted_tables()
        );
        same_results(&idx, &back, &queries(48, 100));
    }

    #[test]
    fn embedded_and_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let walk = generate_random_walk(800, 3).unwrap();
        let rec_path = dir.path().join("rec.csv");
        write_recording(&walk, &rec_path, Format::Csv).unwrap();
        let from_file = windows_with_source(
            load_recording(&rec_path, Format::Csv)
                .unwrap()
                .into_values(),
            40,
            Source::File {
                path: rec_path.clone(),
                format: Format::Csv,
            },
        )
        .unwrap();
        let rows: Vec<TimeSeries> = (0..30)
            .map(|s| generate_random_walk(40, s).unwrap())
            .collect();
        let cases = [
            crate::series::extract_subsequences(&walk, 40).unwrap(),
            from_file.z_normalized(),
            Dataset::from_series(rows, Source::InMemory)
                .unwrap()
                .z_normalized(),
        ];
        for (i, data) in cases.iter().enumerate() {
            let path = dir.path().join(format!("{i}.sshi"));
            let idx = build_index(data, params()).unwrap();
            save_index(&idx, &path).unwrap();
            let back = load_index(&path).unwrap();
            assert_eq!(back.sorted_tables(), idx.sorted_tables());
            assert_eq!(back.dataset().is_normalized(), data.is_normalized());
            same_results(&idx, &back, &queries(40, 10));
        }
    }

    #[test]
    fn changed_dataset_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let rec_path = dir.path().join("rec.csv");
        let walk = generate_random_walk(300, 4).unwrap();
        write_recording(&walk, &rec_path, Format::Csv).unwrap();
        let source = Source::File {
            path: rec_path.clone(),
            format: Format::Csv,
        };
        let data = windows_with_source(walk.values().to_vec(), 32, source).unwrap();
        let path = dir.path().join("i.sshi");
        save_index(&build_index(&data, params()).unwrap(), &path).unwrap();
        let mut other = walk.into_values();
        other[5] += 1.0;
        write_recording(&TimeSeries::new(other).unwrap(), &rec_path, Format::Csv).unwrap();
        let err = load_index(&path).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn truncation_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.sshi");
        let data = random_walk_dataset(500, 2, 32).unwrap().z_normalized();
        save_index(&build_index(&data, params()).unwrap(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let cut = dir.path().join("cut.sshi");
        for len in [0, 3, 10, 60, bytes.len() / 2, bytes.len() - 1] {
            fs::write(&cut, &bytes[..len]).unwrap();
            assert!(load_index(&cut).is_err(), "prefix of {len} bytes loaded");
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        fs::write(&cut, &bad).unwrap();
        assert!(load_index(&cut)
            .unwrap_err()
            .to_string()
            .contains("version 9"));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&cut, &bad).unwrap();
        assert!(load_index(&cut).is_err());
        let mut long = bytes;
        long.push(0);
        fs::write(&cut, &long).unwrap();
        assert!(load_index(&cut)
            .unwrap_err()
            .to_string()
            .contains("trailing"));
    }
}
