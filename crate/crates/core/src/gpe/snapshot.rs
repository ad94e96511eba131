//! Binary wavefunction snapshots: little-endian `u64 n_points`, `f64 dz`,
//! `f64 time`, then interleaved real/imaginary `f64` values.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use super::{Grid1D, WaveFunction};

pub fn write_snapshot<W: Write>(mut out: W, psi: &WaveFunction) -> io::Result<()> {
    let mut buf = Vec::with_capacity(24 + 16 * psi.values.len());
    buf.extend_from_slice(&(psi.values.len() as u64).to_le_bytes());
    buf.extend_from_slice(&psi.grid.dz().to_le_bytes());
    buf.extend_from_slice(&psi.time.to_le_bytes());
    for c in &psi.values {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&buf)
}

fn read_f64<R: Read>(input: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(mut input: R) -> io::Result<WaveFunction> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    let n = u64::from_le_bytes(b) as usize;
    let dz = read_f64(&mut input)?;
    let time = read_f64(&mut input)?;
    let grid = Grid1D::new(n, 0.5 * dz * n as f64)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let re = read_f64(&mut input)?;
        let im = read_f64(&mut input)?;
        values.push(Complex64::new(re, im));
    }
    Ok(WaveFunction { grid, values, time })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let grid = Grid1D::new(64, 1.5e-5).unwrap();
        let psi = WaveFunction::from_fn(grid, 0.125, |z| Complex64::new(z * 1e5, -(z * 1e5).powi(2)));
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &psi).unwrap();
        assert_eq!(bytes.len(), 24 + 64 * 16);
        assert_eq!(&bytes[..8], &64u64.to_le_bytes());
        let back = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(back.values, psi.values);
        assert_eq!(back.time, 0.125);
        assert_eq!(back.grid.dz(), grid.dz());
    }

    #[test]
    fn truncated_input_is_an_error() {
        let grid = Grid1D::new(64, 1.0).unwrap();
        let psi = WaveFunction::from_fn(grid, 0.0, |_| Complex64::new(1.0, 0.0));
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &psi).unwrap();
        bytes.truncate(100);
        assert!(read_snapshot(bytes.as_slice()).is_err());
    }
}
