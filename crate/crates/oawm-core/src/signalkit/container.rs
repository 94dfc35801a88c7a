//! Binary waveform/spectrum container.
//!
//! Layout (little-endian): magic `"OAWM"`, version `u32`, two `f64` metadata
//! fields, length `u64`, then `length` interleaved `(re, im)` `f64` pairs.
//! Time-domain records store `(sample_rate, start_time)`; spectra store
//! `(f_start, df)` in the same slots.

use super::wave::{SampledWaveform, Spectrum};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"OAWM";
const VERSION: u32 = 1;

fn write_header(w: &mut impl Write, meta_a: f64, meta_b: f64, len: u64) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&meta_a.to_le_bytes())?;
    w.write_all(&meta_b.to_le_bytes())?;
    w.write_all(&len.to_le_bytes())?;
    Ok(())
}

fn write_samples(w: &mut impl Write, samples: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(samples.len() * 16);
    for s in samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<(f64, f64, u64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let a = f64::from_le_bytes(f64buf);
    r.read_exact(&mut f64buf)?;
    let b = f64::from_le_bytes(f64buf);
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let len = u64::from_le_bytes(u64buf);
    Ok((a, b, len))
}

fn read_samples(r: &mut impl Read, len: u64) -> Result<Vec<Complex64>> {
    let n: usize = len
        .try_into()
        .map_err(|_| Error::Format(format!("length {len} too large")))?;
    let mut bytes = vec![0u8; n * 16];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect())
}

pub fn write_waveform(w: &mut impl Write, wf: &SampledWaveform) -> Result<()> {
    write_header(w, wf.sample_rate(), wf.start_time(), wf.len() as u64)?;
    write_samples(w, wf.samples())
}

pub fn read_waveform(r: &mut impl Read) -> Result<SampledWaveform> {
    let (sample_rate, start_time, len) = read_header(r)?;
    SampledWaveform::new(read_samples(r, len)?, sample_rate, start_time)
}

pub fn write_spectrum(w: &mut impl Write, sp: &Spectrum) -> Result<()> {
    write_header(w, sp.f_start(), sp.df(), sp.len() as u64)?;
    write_samples(w, sp.bins())
}

pub fn read_spectrum(r: &mut impl Read) -> Result<Spectrum> {
    let (f_start, df, len) = read_header(r)?;
    Spectrum::new(read_samples(r, len)?, f_start, df)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalkit::gen::{gen_random_test_signal, RandomSignalSpec};

    #[test]
    fn waveform_roundtrip_is_bit_exact() {
        let spec = RandomSignalSpec { p_s: 1.0, b_opt: 10.0, f_ctr: 1.0, seed: 1 };
        let w = gen_random_test_signal(&spec, 1.0, 64.0).unwrap();
        let mut buf = Vec::new();
        write_waveform(&mut buf, &w).unwrap();
        let back = read_waveform(&mut buf.as_slice()).unwrap();
        assert_eq!(w.samples(), back.samples());
        assert_eq!(w.sample_rate().to_bits(), back.sample_rate().to_bits());
    }

    #[test]
    fn spectrum_roundtrip_and_bad_magic() {
        let spec = RandomSignalSpec { p_s: 1.0, b_opt: 10.0, f_ctr: 0.0, seed: 2 };
        let s = gen_random_test_signal(&spec, 1.0, 64.0).unwrap().dft();
        let mut buf = Vec::new();
        write_spectrum(&mut buf, &s).unwrap();
        let back = read_spectrum(&mut buf.as_slice()).unwrap();
        assert_eq!(s.bins(), back.bins());

        buf[0] = b'X';
        assert!(matches!(read_spectrum(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
