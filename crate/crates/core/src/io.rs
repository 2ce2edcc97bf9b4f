//! Little-endian binary formats.
//!
//! * `RPAM1`: one noise realization. Magic `RPAM`, `u32` version 1, `f64 H`,
//!   `f64 cH`, `u64 seed`, `f64 x_min`, `f64 x_max`, `u64 n`, then `n`
//!   complex amplitudes as interleaved `(re, im)` pairs.
//! * `RPAV1`: one real grid function. Magic `RPAV`, `u32` version 1,
//!   `f64 x_min`, `f64 x_max`, `u64 n`, then `n` values.
//! * `RTRJ1`: a solution trajectory. Magic `RTRJ`, `u32` version 1,
//!   `f64 x_min`, `f64 x_max`, `u64 n`, `u64 n_snap`, the `n_snap` times and
//!   then the snapshots row by row.

use std::io::{Read, Write};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::noise::{NoiseParams, SpectralNoise};

const VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.0.write_all(b)?;
        Ok(())
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        self.bytes(magic)?;
        self.u32(VERSION)
    }
    fn grid(&mut self, g: &GridSpec) -> Result<()> {
        self.f64(g.x_min)?;
        self.f64(g.x_max)?;
        self.u64(g.n as u64)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated input: {e}")))?;
        Ok(b)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let m: [u8; 4] = self.array()?;
        if &m != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&m),
                String::from_utf8_lossy(magic)
            )));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }
    fn grid(&mut self) -> Result<GridSpec> {
        let x_min = self.f64()?;
        let x_max = self.f64()?;
        let n = self.u64()?;
        GridSpec::new(x_min, x_max, n as usize).map_err(|e| Error::Format(e.to_string()))
    }
    fn len(&mut self, limit: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n > limit {
            return Err(Error::Format(format!("length {n} exceeds limit {limit}")));
        }
        Ok(n)
    }
}

/// Refuse to allocate more than this many values from an untrusted header.
const MAX_VALUES: usize = 1 << 28;

pub fn write_noise<W: Write>(w: W, noise: &SpectralNoise) -> Result<()> {
    let mut w = Writer(w);
    w.header(b"RPAM")?;
    w.f64(noise.params.hurst)?;
    w.f64(noise.params.c_h)?;
    w.u64(noise.params.seed)?;
    w.grid(&noise.grid)?;
    for c in &noise.coeffs {
        w.f64(c.re)?;
        w.f64(c.im)?;
    }
    Ok(())
}

pub fn read_noise<R: Read>(r: R) -> Result<SpectralNoise> {
    let mut r = Reader(r);
    r.header(b"RPAM")?;
    let hurst = r.f64()?;
    let c_h = r.f64()?;
    let seed = r.u64()?;
    let params = NoiseParams::new(hurst, c_h, seed).map_err(|e| Error::Format(e.to_string()))?;
    let grid = r.grid()?;
    if grid.n > MAX_VALUES {
        return Err(Error::Format(format!("n = {} too large", grid.n)));
    }
    let mut coeffs = Vec::with_capacity(grid.n);
    for _ in 0..grid.n {
        let re = r.f64()?;
        let im = r.f64()?;
        coeffs.push(Complex64::new(re, im));
    }
    SpectralNoise::from_coeffs(params, grid, coeffs)
}

pub fn write_vector<W: Write>(w: W, f: &GridFunction) -> Result<()> {
    let mut w = Writer(w);
    w.header(b"RPAV")?;
    w.grid(&f.grid)?;
    for v in &f.values {
        w.f64(*v)?;
    }
    Ok(())
}

pub fn read_vector<R: Read>(r: R) -> Result<GridFunction> {
    let mut r = Reader(r);
    r.header(b"RPAV")?;
    let grid = r.grid()?;
    if grid.n > MAX_VALUES {
        return Err(Error::Format(format!("n = {} too large", grid.n)));
    }
    let values = (0..grid.n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    GridFunction::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

/// Snapshot matrix in the `RTRJ1` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

pub fn write_trajectory<W: Write>(w: W, t: &TrajectoryData) -> Result<()> {
    let mut w = Writer(w);
    w.header(b"RTRJ")?;
    w.grid(&t.grid)?;
    w.u64(t.times.len() as u64)?;
    for s in &t.times {
        w.f64(*s)?;
    }
    for row in &t.rows {
        if row.len() != t.grid.n {
            return Err(Error::Shape("snapshot length differs from grid".into()));
        }
        for v in row {
            w.f64(*v)?;
        }
    }
    Ok(())
}

pub fn read_trajectory<R: Read>(r: R) -> Result<TrajectoryData> {
    let mut r = Reader(r);
    r.header(b"RTRJ")?;
    let grid = r.grid()?;
    let n_snap = r.len(MAX_VALUES)?;
    if grid.n.saturating_mul(n_snap) > MAX_VALUES {
        return Err(Error::Format("trajectory too large".into()));
    }
    let times = (0..n_snap).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let rows = (0..n_snap)
        .map(|_| (0..grid.n).map(|_| r.f64()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryData { grid, times, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::synthesize;

    #[test]
    fn noise_round_trip() {
        let g = GridSpec::new(-3.0, 5.0, 64).unwrap();
        let p = NoiseParams::new(0.3, 2.0, 99).unwrap();
        let w = synthesize(&p, &g);
        let mut buf = Vec::new();
        write_noise(&mut buf, &w).unwrap();
        assert_eq!(&buf[..4], b"RPAM");
        assert_eq!(buf.len(), 4 + 4 + 8 * 6 + 16 * 64);
        assert_eq!(read_noise(&buf[..]).unwrap(), w);
    }

    #[test]
    fn reader_rejects_corruption() {
        let g = GridSpec::new(0.0, 1.0, 16).unwrap();
        let w = synthesize(&NoiseParams::new(0.3, 1.0, 1).unwrap(), &g);
        let mut buf = Vec::new();
        write_noise(&mut buf, &w).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_noise(&bad[..]), Err(Error::Format(_))));
        // flip the sign of Im c_1: breaks Hermitian symmetry
        let off = 56 + 16 + 8;
        let mut bad = buf.clone();
        bad[off + 7] ^= 0x80;
        assert!(matches!(read_noise(&bad[..]), Err(Error::Format(_))));
        assert!(matches!(read_noise(&buf[..buf.len() - 1]), Err(Error::Format(_))));
    }

    #[test]
    fn vector_and_trajectory_round_trip() {
        let g = GridSpec::new(0.0, 1.0, 8).unwrap();
        let f = GridFunction::from_fn(g, |x| x * x);
        let mut buf = Vec::new();
        write_vector(&mut buf, &f).unwrap();
        assert_eq!(read_vector(&buf[..]).unwrap(), f);

        let t = TrajectoryData {
            grid: g,
            times: vec![0.0, 0.5],
            rows: vec![f.values.clone(), vec![1.0; 8]],
        };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &t).unwrap();
        assert_eq!(read_trajectory(&buf[..]).unwrap(), t);
    }
}
