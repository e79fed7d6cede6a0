//! `RDMXMAT1` matrix files and CSV output.
//!
//! Matrix layout: the 8 magic bytes, `rows` and `cols` as little-endian
//! `u64`, then `rows * cols` little-endian `f64` in column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rdeim_core::DenseMatrix;

use crate::error::{HarnessError, Result};
use crate::table::Table;

pub const MAGIC: &[u8; 8] = b"RDMXMAT1";

pub fn encode_matrix(m: &DenseMatrix, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(m.rows() as u64).to_le_bytes())?;
    out.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_nalgebra().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_matrix(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode_matrix(m, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let bad = |reason: String| HarnessError::Format {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| bad("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(bad("not an RDMXMAT1 file".into()));
    }
    let rows = read_u64(&mut r).map_err(|_| bad("truncated header".into()))?;
    let cols = read_u64(&mut r).map_err(|_| bad("truncated header".into()))?;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| bad(format!("implausible shape {rows}x{cols}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| HarnessError::io(path, e))?;
    if bytes.len() != len * 8 {
        return Err(bad(format!(
            "expected {} data bytes for {rows}x{cols}, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DenseMatrix::new(rows as usize, cols as usize, data).map_err(|e| bad(e.to_string()))
}

pub fn write_csv(table: &Table, out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(table, BufWriter::new(file)).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}
