//! Byte-exact file formats of the problem bundles and run outputs.
//!
//! * Matrix files ("RPX1"): magic, u64 nrows/ncols/nnz, then little-endian
//!   u64 row offsets (nrows + 1), u64 column indices and f64 values.
//! * Vector files ("RPV1"): magic, u64 length, f64 data, little-endian.
//! * Error histories: CSV with header `cycle,relative_error,objective,t_k`
//!   and 17 significant digits per value.
//! * Image previews: binary portable graymap (P5) with linear min-max
//!   scaling; the scaling is reported back for the run manifest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ripg::sparse::SparseMatrix;

const MATRIX_MAGIC: &[u8; 4] = b"RPX1";
const VECTOR_MAGIC: &[u8; 4] = b"RPV1";

fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn write_matrix(path: &Path, a: &SparseMatrix) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MATRIX_MAGIC)?;
    write_u64(&mut w, a.nrows() as u64)?;
    write_u64(&mut w, a.ncols() as u64)?;
    write_u64(&mut w, a.nnz() as u64)?;
    for &o in a.row_offsets() {
        write_u64(&mut w, o as u64)?;
    }
    for &c in a.col_indices() {
        write_u64(&mut w, c as u64)?;
    }
    for &v in a.values() {
        write_f64(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<SparseMatrix> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        bail!("{} is not a matrix file (bad magic)", path.display());
    }
    let nrows = read_u64(&mut r)? as usize;
    let ncols = read_u64(&mut r)? as usize;
    let nnz = read_u64(&mut r)? as usize;
    let mut row_offsets = Vec::with_capacity(nrows + 1);
    for _ in 0..=nrows {
        row_offsets.push(read_u64(&mut r)? as usize);
    }
    let mut col_indices = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        col_indices.push(read_u64(&mut r)? as usize);
    }
    let mut values = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        values.push(read_f64(&mut r)?);
    }
    Ok(SparseMatrix::from_raw_csr(
        nrows,
        ncols,
        row_offsets,
        col_indices,
        values,
    )?)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(VECTOR_MAGIC)?;
    write_u64(&mut w, v.len() as u64)?;
    for &x in v {
        write_f64(&mut w, x)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != VECTOR_MAGIC {
        bail!("{} is not a vector file (bad magic)", path.display());
    }
    let len = read_u64(&mut r)? as usize;
    let mut v = Vec::with_capacity(len);
    for _ in 0..len {
        v.push(read_f64(&mut r)?);
    }
    Ok(v)
}

/// One row of an error-history CSV.
#[derive(Debug, Clone, Copy)]
pub struct HistoryRow {
    pub cycle: usize,
    pub relative_error: f64,
    pub objective: f64,
    pub t_k: f64,
}

/// 17 significant digits; round-trips f64 exactly and deterministically.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_history_csv(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "cycle,relative_error,objective,t_k")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.cycle,
            fmt_float(row.relative_error),
            fmt_float(row.objective),
            fmt_float(row.t_k)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Linear min-max scaling used when quantizing an image to 8 bits.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct PgmScaling {
    pub min: f64,
    pub max: f64,
}

/// Writes a square image (column-major vector of side `n`) as a binary
/// P5 graymap, returning the scaling applied.
pub fn write_pgm(path: &Path, image: &[f64], n: usize) -> Result<PgmScaling> {
    if image.len() != n * n {
        bail!("image length {} does not match side {n}", image.len());
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in image {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        bail!("image contains non-finite values");
    }
    let range = hi - lo;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{n} {n}\n255\n")?;
    let mut raster = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = image[j * n + i];
            let byte = if range > 0.0 {
                ((v - lo) / range * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            raster.push(byte);
        }
    }
    w.write_all(&raster)?;
    w.flush()?;
    Ok(PgmScaling { min: lo, max: hi })
}
