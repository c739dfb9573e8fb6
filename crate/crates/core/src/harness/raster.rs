//! MSF1 binary rasters of symbol fields.
//!
//! Layout (little-endian): `b"MSF1"`, `u32 M`, `u32 M_xi`, `f64 L`,
//! `f64 L_xi`, `f64 h`, `u8` complex flag (0 real, 1 complex), then the
//! samples row-major over `(x, xi)` as `f64`, or `(re, im)` pairs when
//! complex.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SymbolField;
use crate::grid::{PhaseGrid, SpaceGrid};

pub const MAGIC: &[u8; 4] = b"MSF1";

/// Serializes a field; real fields are written without imaginary parts.
pub fn encode(field: &SymbolField, h: f64, force_complex: bool) -> Vec<u8> {
    let g = field.grid();
    let complex = force_complex || !field.is_real();
    let (m, n) = g.shape();
    let mut out = Vec::with_capacity(37 + m * n * if complex { 16 } else { 8 });
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&g.x.half_width().to_le_bytes());
    out.extend_from_slice(&g.xi.half_width().to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.push(complex as u8);
    for c in field.values().iter() {
        out.extend_from_slice(&c.re.to_le_bytes());
        if complex {
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

/// Inverse of [`encode`]; returns the field and `h`.
pub fn decode(bytes: &[u8]) -> Result<(SymbolField, f64)> {
    let bad = |msg: &str| Error::invalid(format!("malformed MSF1 raster: {msg}"));
    let mut r = bytes;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u32b = [0u8; 4];
    let mut f64b = [0u8; 8];
    let mut next_u32 = |r: &mut &[u8]| -> Result<u32> {
        r.read_exact(&mut u32b).map_err(|_| bad("truncated header"))?;
        Ok(u32::from_le_bytes(u32b))
    };
    let m = next_u32(&mut r)? as usize;
    let n = next_u32(&mut r)? as usize;
    let mut next_f64 = |r: &mut &[u8]| -> Result<f64> {
        r.read_exact(&mut f64b).map_err(|_| bad("truncated data"))?;
        Ok(f64::from_le_bytes(f64b))
    };
    let lx = next_f64(&mut r)?;
    let lxi = next_f64(&mut r)?;
    let h = next_f64(&mut r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag).map_err(|_| bad("truncated header"))?;
    let complex = match flag[0] {
        0 => false,
        1 => true,
        _ => return Err(bad("complex flag must be 0 or 1")),
    };
    let per = if complex { 16 } else { 8 };
    if r.len() != m * n * per {
        return Err(bad(&format!("expected {} sample bytes, found {}", m * n * per, r.len())));
    }
    let grid = PhaseGrid::new(SpaceGrid::new(lx, m)?, SpaceGrid::new(lxi, n)?);
    let mut values = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        let re = next_f64(&mut r)?;
        let im = if complex { next_f64(&mut r)? } else { 0.0 };
        values.push(Complex64::new(re, im));
    }
    let values = Array2::from_shape_vec((m, n), values).expect("shape checked");
    Ok((SymbolField::new(grid, values)?, h))
}

pub fn write(path: &Path, field: &SymbolField, h: f64) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(field, h, false)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<(SymbolField, f64)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
