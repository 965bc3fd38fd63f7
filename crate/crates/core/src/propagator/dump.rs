//! Raw binary dump of a propagator.
//!
//! Layout, all little-endian:
//!
//! | offset | type  | field                          |
//! |--------|-------|--------------------------------|
//! | 0      | u64   | `D` (number of intervals)      |
//! | 8      | f64   | elapsed time                   |
//! | 16     | f64   | `x_min`                        |
//! | 24     | f64   | `x_max`                        |
//! | 32     | f64×2 | entries, row-major, re then im |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::PropagatorMatrix;
use crate::error::{Error, Result};
use crate::lattice::SpatialGrid;
use crate::linalg::ComplexMatrix;

const HEADER_LEN: usize = 32;

pub fn write_propagator<W: Write>(g: &PropagatorMatrix, mut out: W) -> Result<()> {
    let grid = g.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * grid.len() * grid.len());
    buf.extend_from_slice(&(grid.intervals() as u64).to_le_bytes());
    buf.extend_from_slice(&g.elapsed().to_le_bytes());
    buf.extend_from_slice(&grid.x_min().to_le_bytes());
    buf.extend_from_slice(&grid.x_max().to_le_bytes());
    for z in g.entries().as_slice() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8-byte slice"))
}

pub fn read_propagator<R: Read>(mut input: R) -> Result<PropagatorMatrix> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::InvalidParameter(
            "propagator dump is shorter than its header".into(),
        ));
    }
    let intervals = u64::from_le_bytes(bytes[0..8].try_into().expect("8-byte slice"));
    let intervals = usize::try_from(intervals)
        .map_err(|_| Error::InvalidParameter("interval count does not fit in memory".into()))?;
    let elapsed = f64_at(&bytes, 8);
    let grid = SpatialGrid::new(f64_at(&bytes, 16), f64_at(&bytes, 24), intervals)?;
    let n = grid.len();
    let expected = n
        .checked_mul(n)
        .and_then(|m| m.checked_mul(16))
        .and_then(|m| m.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::InvalidParameter("propagator dump dimension overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::InvalidParameter(format!(
            "propagator dump has {} bytes, expected {expected} for D = {intervals}",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let entries = ComplexMatrix::from_row_major(n, data).expect("length checked above");
    PropagatorMatrix::from_parts(grid, elapsed, entries)
}
