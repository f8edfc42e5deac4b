use std::io::{Read, Write};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use num_complex::Complex64;

use super::field::GridField;
use super::truncation::Truncation;
use super::SpectralError;

const MAGIC: &[u8; 4] = b"PWF1";
const FLAG_REAL: u8 = 0x01;
const FLAG_MEAN_ZERO: u8 = 0x02;

/// Binary snapshot: magic "PWF1", n_max as u32 LE, flags byte, then
/// interleaved little-endian f64 (re, im) in lattice order.
pub fn write_snapshot<W: Write>(w: &mut W, field: &GridField) -> Result<(), SpectralError> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(field.truncation().n_max() as u32)?;
    let mut flags = 0u8;
    if field.is_real() {
        flags |= FLAG_REAL;
    }
    if field.is_mean_zero() {
        flags |= FLAG_MEAN_ZERO;
    }
    w.write_u8(flags)?;
    for c in field.coeffs().iter() {
        w.write_f64::<LittleEndian>(c.re)?;
        w.write_f64::<LittleEndian>(c.im)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<GridField, SpectralError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SpectralError::BadHeader(format!("magic {magic:?}")));
    }
    let n_max = r.read_u32::<LittleEndian>()? as usize;
    let flags = r.read_u8()?;
    let trunc = Truncation::new(n_max);
    let g = trunc.n_grid();
    let mut coeffs = Array2::<Complex64>::zeros((g, g));
    for c in coeffs.iter_mut() {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        *c = Complex64::new(re, im);
    }
    let mut field = GridField::from_coeffs(&trunc, coeffs);
    if flags & FLAG_REAL != 0 {
        field.symmetrize_real();
    }
    if flags & FLAG_MEAN_ZERO != 0 {
        field.project_mean_zero();
    }
    Ok(field)
}

/// Convenience: round-trip through a byte buffer (used by the CLI and tests).
pub fn snapshot_bytes(field: &GridField) -> Vec<u8> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, field).expect("in-memory write");
    buf
}

#[allow(dead_code)]
pub fn truncation_of(field: &GridField) -> Arc<Truncation> {
    Arc::clone(field.truncation())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridField;

    #[test]
    fn snapshot_roundtrip() {
        let t = Truncation::new(6);
        let u = GridField::from_fn(&t, |x1, x2| (x1 + 2.0 * x2).cos() - 0.5 * (3.0 * x1).sin());
        let bytes = snapshot_bytes(&u);
        assert_eq!(&bytes[0..4], b"PWF1");
        let back = read_snapshot(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.truncation().n_max(), 6);
        assert!(back.is_real());
        let err: f64 =
            back.coeffs().iter().zip(u.coeffs().iter()).map(|(a, b)| (a - b).norm()).sum();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn snapshot_rejects_bad_magic() {
        let bytes = b"NOPE\x00\x00\x00\x00\x00".to_vec();
        assert!(read_snapshot(&mut bytes.as_slice()).is_err());
    }
}
