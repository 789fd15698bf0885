//! Text field format.
//!
//! ```text
//! CFAT1 <nx> <ny> <h> <shape_tag>
//! v00,v10,...,v(nx-1)0
//! ...
//! ```
//!
//! One lattice row per line, values printed with 17 significant digits so a
//! write/read round trip is exact. Inactive nodes are written as `nan`; on
//! reading, the mask is taken from the `nan` pattern.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::GridError;
use crate::grid::{make_domain, GridDomain, Shape};

pub const MAGIC: &str = "CFAT1";

/// Writes nodal values (active entries only; inactive ones become `nan`).
pub fn write_field<W: Write>(mut w: W, domain: &GridDomain, values: &[f64]) -> Result<(), GridError> {
    if values.len() != domain.len() {
        return Err(GridError::LengthMismatch { expected: domain.len(), got: values.len() });
    }
    writeln!(w, "{MAGIC} {} {} {:.16e} {}", domain.nx(), domain.ny(), domain.h(), domain.shape())?;
    let mut line = String::new();
    for j in 0..domain.ny() {
        line.clear();
        for i in 0..domain.nx() {
            if i > 0 {
                line.push(',');
            }
            let k = domain.idx(i, j);
            if domain.is_active(k) {
                line.push_str(&format!("{:.16e}", values[k]));
            } else {
                line.push_str("nan");
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field file, rebuilding the lattice from the shape tag and the
/// mask from the `nan` entries.
pub fn read_field<R: BufRead>(mut r: R) -> Result<(Arc<GridDomain>, Vec<f64>), GridError> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != MAGIC {
        return Err(GridError::Parse(format!("bad header `{}`", header.trim())));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| GridError::Parse(format!("bad count `{s}`")));
    let nx = num(parts[1])?;
    let ny = num(parts[2])?;
    let h: f64 = parts[3].parse().map_err(|_| GridError::Parse(format!("bad spacing `{}`", parts[3])))?;
    let shape: Shape = parts[4].parse()?;

    let mut rest = String::new();
    r.read_to_string(&mut rest)?;
    let values: Vec<f64> = rest
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| GridError::Parse(format!("bad value `{t}`"))))
        .collect::<Result<_, _>>()?;
    if values.len() != nx * ny {
        return Err(GridError::LengthMismatch { expected: nx * ny, got: values.len() });
    }

    if h <= 0.0 || !h.is_finite() {
        return Err(GridError::Parse(format!("bad spacing {h}")));
    }
    let (w, hh) = match shape {
        Shape::Disk { r, .. } => (2.0 * r, 2.0 * r),
        Shape::Annulus { r_out, .. } => (2.0 * r_out, 2.0 * r_out),
        Shape::Square { side } => (side, side),
        Shape::Rect { w, h } => (w, h),
    };
    let res = (w.max(hh) / h).round() as usize + 1;
    let base = make_domain(shape, res)?;
    if base.nx() != nx || base.ny() != ny || (base.h() - h).abs() > 1e-12 * h {
        return Err(GridError::Parse(format!("header {nx}x{ny}, h = {h} does not match shape {shape}")));
    }
    let mask: Vec<bool> = values.iter().map(|v| !v.is_nan()).collect();
    let domain = if mask == base.mask() { base } else { base.with_mask(mask)? };
    Ok((Arc::new(domain), values))
}

/// Convenience wrapper writing to a path.
pub fn write_field_file(path: &std::path::Path, domain: &GridDomain, values: &[f64]) -> Result<(), GridError> {
    let f = std::fs::File::create(path)?;
    write_field(std::io::BufWriter::new(f), domain, values)
}

/// Convenience wrapper reading from a path.
pub fn read_field_file(path: &std::path::Path) -> Result<(Arc<GridDomain>, Vec<f64>), GridError> {
    let f = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(f))
}
