//! Binary waveform dumps: a short text header followed by interleaved
//! little-endian `f64` pairs `(re, im)`.
//!
//! ```text
//! commlearn-waveform 1
//! sample_rate <Hz>
//! symbol_rate <Bd>
//! length <samples>
//! <binary payload>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::signal::ComplexSignal;
use crate::error::{at, Error, Result};

const MAGIC: &str = "commlearn-waveform 1";

pub fn write_waveform(mut w: impl Write, signal: &ComplexSignal) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "sample_rate {}", signal.sample_rate)?;
    writeln!(w, "symbol_rate {}", signal.symbol_rate)?;
    writeln!(w, "length {}", signal.len())?;
    let mut buf = Vec::with_capacity(16 * signal.len());
    for z in &signal.samples {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn header_value<R: BufRead>(r: &mut R, key: &str) -> Result<String> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let rest = line
        .trim_end()
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix(' '))
        .ok_or_else(|| Error::Parse(format!("expected {key:?} in waveform header")))?;
    Ok(rest.to_string())
}

pub fn read_waveform(r: impl Read) -> Result<ComplexSignal> {
    let mut r = BufReader::new(r);
    let mut magic = String::new();
    r.read_line(&mut magic)?;
    if magic.trim_end() != MAGIC {
        return Err(Error::Parse("not a waveform dump".into()));
    }
    let parse = |s: String| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
    let sample_rate = parse(header_value(&mut r, "sample_rate")?)?;
    let symbol_rate = parse(header_value(&mut r, "symbol_rate")?)?;
    let len: usize = header_value(&mut r, "length")?
        .parse()
        .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
    let mut bytes = vec![0u8; 16 * len];
    r.read_exact(&mut bytes)?;
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    ComplexSignal::new(samples, sample_rate, symbol_rate)
}

pub fn save_waveform(path: impl AsRef<Path>, signal: &ComplexSignal) -> Result<()> {
    write_waveform(
        std::io::BufWriter::new(std::fs::File::create(path.as_ref()).map_err(at(path.as_ref()))?),
        signal,
    )
}

pub fn load_waveform(path: impl AsRef<Path>) -> Result<ComplexSignal> {
    read_waveform(std::fs::File::open(path.as_ref()).map_err(at(path.as_ref()))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = ComplexSignal::new(
            vec![Complex64::new(0.1, -2.5), Complex64::new(1e-300, 3.0)],
            21.4e9,
            10.7e9,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_waveform(&mut buf, &s).unwrap();
        assert_eq!(read_waveform(buf.as_slice()).unwrap(), s);
    }
}
