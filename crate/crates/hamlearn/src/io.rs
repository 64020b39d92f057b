//! Dataset files.
//!
//! Line 1 is a JSON object with `n`, `times`, `bases`, `counts` and
//! `metadata`. Every further line is `j k bits` with 1-based `j`, `k`.
//!
//! ```text
//! {"format":"hamlearn-dataset/1","n":2,"times":[0.2],"bases":["XZ"],"counts":[[2]],"metadata":{"model":"heisenberg"}}
//! 1 1 01
//! 1 1 00
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hamlearn_core::dataset::{Dataset, Metadata, Record};
use hamlearn_core::{BitString, PauliBasis};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

pub const FORMAT: &str = "hamlearn-dataset/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    n: usize,
    times: Vec<f64>,
    bases: Vec<String>,
    counts: Vec<Vec<usize>>,
    metadata: Metadata,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse { line, msg: msg.to_string() }
}

pub fn write_dataset_to(ds: &Dataset, mut w: impl Write) -> std::io::Result<()> {
    let header = Header {
        format: FORMAT.into(),
        n: ds.n,
        times: ds.times.clone(),
        bases: ds.bases.iter().map(|b| b.to_string()).collect(),
        counts: ds.counts(),
        metadata: ds.metadata.clone(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for r in &ds.records {
        writeln!(w, "{} {} {}", r.j + 1, r.k + 1, r.bits)?;
    }
    w.flush()
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(io_err(path))?;
    write_dataset_to(ds, BufWriter::new(f)).map_err(io_err(path))
}

pub fn read_dataset_from(r: impl BufRead) -> Result<Dataset> {
    let mut lines = r.lines();
    let first = match lines.next() {
        Some(l) => l.map_err(|e| parse_err(1, e))?,
        None => return Err(parse_err(1, "empty file")),
    };
    let h: Header = serde_json::from_str(&first).map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    if h.format != FORMAT {
        return Err(parse_err(1, format!("unsupported format {:?}", h.format)));
    }
    let bases = h
        .bases
        .iter()
        .map(|b| b.parse::<PauliBasis>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| parse_err(1, e))?;
    let (nj, nk) = (h.times.len(), bases.len());
    let mut records = Vec::with_capacity(h.counts.iter().flatten().sum());
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let line = line.map_err(|e| parse_err(no, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split_ascii_whitespace();
        let (Some(j), Some(k), Some(bits), None) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(parse_err(no, "expected `j k bits`"));
        };
        let index = |s: &str, max: usize, what: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if (1..=max).contains(&v) => Ok(v - 1),
                _ => Err(parse_err(no, format!("{what} index {s:?} outside 1..={max}"))),
            }
        };
        let j = index(j, nj, "time")?;
        let k = index(k, nk, "basis")?;
        let bits: BitString = bits.parse().map_err(|e| parse_err(no, e))?;
        if bits.len() != h.n {
            return Err(parse_err(no, format!("bit-string of length {}, expected {}", bits.len(), h.n)));
        }
        records.push(Record { j, k, bits });
    }
    let ds = Dataset::new(h.n, h.times, bases, records, h.metadata).map_err(|e| parse_err(1, e))?;
    if ds.counts() != h.counts {
        return Err(parse_err(1, "header counts do not match the records"));
    }
    Ok(ds)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let f = File::open(path).map_err(io_err(path))?;
    read_dataset_from(BufReader::new(f))
}
