//! Persistence: the binary coding-matrix container and plain-text vectors.
//!
//! Container layout (little endian): `b"RCM1"`, `u32 m`, `u32 n`, `u8 kind`,
//! `u64 seed`, then `A` and `Q` as row-major `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{CodingMatrix, MatrixKind};

const MAGIC: &[u8; 4] = b"RCM1";

fn write_row_major<W: Write>(w: &mut W, mat: &DMatrix<f64>) -> Result<()> {
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            w.write_all(&mat[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_row_major<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let mut buf = vec![0u8; rows * cols * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("truncated matrix payload".into()))?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    Ok(DMatrix::from_row_iterator(rows, cols, values))
}

pub fn write_matrix<W: Write>(w: &mut W, matrix: &CodingMatrix) -> Result<()> {
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))
    };
    w.write_all(MAGIC)?;
    w.write_all(&dim(matrix.m())?.to_le_bytes())?;
    w.write_all(&dim(matrix.n())?.to_le_bytes())?;
    w.write_all(&[matrix.kind().to_byte()])?;
    w.write_all(&matrix.seed().to_le_bytes())?;
    write_row_major(w, matrix.a())?;
    write_row_major(w, matrix.q())?;
    Ok(())
}

/// Reads a container and re-validates orthogonality.
pub fn read_matrix<R: Read>(r: &mut R) -> Result<CodingMatrix> {
    let mut header = [0u8; 21];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected RCM1".into()));
    }
    let m = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let kind = MatrixKind::from_byte(header[12])
        .ok_or_else(|| Error::Format(format!("unknown kind byte {}", header[12])))?;
    let seed = u64::from_le_bytes(header[13..21].try_into().expect("8 bytes"));
    if n == 0 || m <= n {
        return Err(Error::NeedRedundancy { m, n });
    }
    let a = read_row_major(r, m, n)?;
    let q = read_row_major(r, m, m - n)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after matrix payload".into()));
    }
    CodingMatrix::new(a, q, kind, seed)
}

pub fn save_matrix(path: &Path, matrix: &CodingMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, matrix)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<CodingMatrix> {
    read_matrix(&mut BufReader::new(File::open(path)?))
}

/// One value per line; blank lines and `#` comments are skipped.
pub fn read_vector<R: BufRead>(r: R) -> Result<DVector<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| {
            Error::Format(format!(
                "line {}: cannot parse '{t}' as a number",
                lineno + 1
            ))
        })?;
        values.push(v);
    }
    Ok(DVector::from_vec(values))
}

/// Shortest representation that parses back to the same `f64`.
pub fn write_vector<W: Write>(w: &mut W, v: &DVector<f64>) -> Result<()> {
    for x in v.iter() {
        writeln!(w, "{x:?}")?;
    }
    Ok(())
}

pub fn load_vector(path: &Path) -> Result<DVector<f64>> {
    read_vector(BufReader::new(File::open(path)?))
}

pub fn save_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_vector(&mut w, v)?;
    w.flush()?;
    Ok(())
}
