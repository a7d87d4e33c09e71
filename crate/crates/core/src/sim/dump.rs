//! Debug dump of a complex waveform.
//!
//! Layout (little endian): a 64-byte header
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"DSCM"`                         |
//! | 4      | 4    | format version (`u32`, currently 1)     |
//! | 8      | 4    | subcarrier count (`u32`)                |
//! | 12     | 4    | reserved, zero                          |
//! | 16     | 8    | samples per subcarrier symbol (`f64`)   |
//! | 24     | 8    | sample count (`u64`)                    |
//! | 32     | 32   | reserved, zero                          |
//!
//! followed by `sample count` pairs of `f64` (real, imaginary).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};

pub const DUMP_MAGIC: &[u8; 4] = b"DSCM";
pub const DUMP_VERSION: u32 = 1;
const HEADER_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveformDump {
    pub subcarrier_count: u32,
    pub samples_per_symbol: f64,
    pub samples: Vec<Complex<f64>>,
}

pub fn write_waveform_dump(path: &Path, dump: &WaveformDump) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(DUMP_MAGIC);
    header[4..8].copy_from_slice(&DUMP_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&dump.subcarrier_count.to_le_bytes());
    header[16..24].copy_from_slice(&dump.samples_per_symbol.to_le_bytes());
    header[24..32].copy_from_slice(&(dump.samples.len() as u64).to_le_bytes());
    let io = |e| Error::io(path, e);
    w.write_all(&header).map_err(io)?;
    for s in &dump.samples {
        w.write_all(&s.re.to_le_bytes()).map_err(io)?;
        w.write_all(&s.im.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_waveform_dump(path: &Path) -> Result<WaveformDump> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    let bad = |detail: String| Error::Format {
        path: path.to_path_buf(),
        detail,
    };
    if &header[0..4] != DUMP_MAGIC {
        return Err(bad("missing DSCM magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != DUMP_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let subcarrier_count = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let samples_per_symbol = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let count = u64::from_le_bytes(header[24..32].try_into().unwrap()) as usize;
    let mut samples = Vec::with_capacity(count);
    let mut buf = [0u8; 16];
    for _ in 0..count {
        r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
        samples.push(Complex::new(
            f64::from_le_bytes(buf[0..8].try_into().unwrap()),
            f64::from_le_bytes(buf[8..16].try_into().unwrap()),
        ));
    }
    Ok(WaveformDump {
        subcarrier_count,
        samples_per_symbol,
        samples,
    })
}
