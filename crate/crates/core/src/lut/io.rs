//! Text and binary encodings of [`Lut3D`].
//!
//! Text layout, one item per line:
//!
//! ```text
//! dscm-lut 1
//! clip_ratio_db <f64>
//! model_kind <piecewise|gaussian>
//! model_hash <hex>
//! se_grid <n> <v1> ... <vn>
//! loss_grid <m> <v1> ... <vm>
//! ber
//! <m values of row 1>
//! ...
//! <m values of row n>
//! ```
//!
//! Values are space separated and printed in the shortest form that
//! round-trips exactly.
//!
//! Binary layout (little endian): a 128-byte header
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `b"DLUT"`                        |
//! | 4      | 4    | format version (`u32`, currently 1)    |
//! | 8      | 4    | SE grid length `n` (`u32`)             |
//! | 12     | 4    | loss grid length `m` (`u32`)           |
//! | 16     | 8    | clip ratio in dB (`f64`)               |
//! | 24     | 1    | model kind (0 piecewise, 1 gaussian)   |
//! | 25     | 7    | reserved, zero                         |
//! | 32     | 64   | model hash, ASCII hex, zero padded     |
//! | 96     | 32   | reserved, zero                         |
//!
//! followed by `n` SE values, `m` loss values and `n * m` row-major BER
//! values, all `f64`.

use std::path::Path;

use super::Lut3D;
use crate::error::{Error, Result};
use crate::noise_model::NoiseModelKind;

pub const LUT_MAGIC: &[u8; 4] = b"DLUT";
pub const LUT_VERSION: u32 = 1;
const TEXT_TAG: &str = "dscm-lut";
const HEADER_LEN: usize = 128;
const HASH_FIELD: std::ops::Range<usize> = 32..96;

fn kind_name(kind: NoiseModelKind) -> &'static str {
    match kind {
        NoiseModelKind::Piecewise => "piecewise",
        NoiseModelKind::Gaussian => "gaussian",
    }
}

fn kind_from_name(name: &str) -> Option<NoiseModelKind> {
    match name {
        "piecewise" => Some(NoiseModelKind::Piecewise),
        "gaussian" => Some(NoiseModelKind::Gaussian),
        _ => None,
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
}

impl Lut3D {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{TEXT_TAG} {LUT_VERSION}\nclip_ratio_db {:e}\nmodel_kind {}\nmodel_hash {}\n",
            self.clip_ratio_db,
            kind_name(self.model_kind),
            self.model_hash
        );
        out += &format!("se_grid {} {}\n", self.se_grid.len(), join(&self.se_grid));
        out += &format!("loss_grid {} {}\n", self.loss_grid.len(), join(&self.loss_grid));
        out += "ber\n";
        for row in self.ber.chunks(self.loss_grid.len()) {
            out += &join(row);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        let mut field = |key: &str| -> std::result::Result<Vec<&str>, String> {
            let line = lines.next().ok_or_else(|| format!("missing {key} line"))?;
            let mut parts = line.split_ascii_whitespace();
            if parts.next() != Some(key) {
                return Err(format!("expected {key}, found {line:?}"));
            }
            Ok(parts.collect())
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"));
        let one = |v: Vec<&str>, key: &str| -> std::result::Result<String, String> {
            match v.as_slice() {
                [x] => Ok(x.to_string()),
                _ => Err(format!("{key} takes one value")),
            }
        };
        let version = one(field(TEXT_TAG)?, TEXT_TAG)?;
        if version != LUT_VERSION.to_string() {
            return Err(format!("unsupported version {version}"));
        }
        let clip_ratio_db = num(&one(field("clip_ratio_db")?, "clip_ratio_db")?)?;
        let kind = one(field("model_kind")?, "model_kind")?;
        let model_kind = kind_from_name(&kind).ok_or_else(|| format!("unknown model kind {kind}"))?;
        let model_hash = one(field("model_hash")?, "model_hash")?;
        let mut grid = |key: &str| -> std::result::Result<Vec<f64>, String> {
            let v = field(key)?;
            let (count, values) = v.split_first().ok_or_else(|| format!("{key} needs a length"))?;
            let count: usize = count.parse().map_err(|e| format!("bad {key} length: {e}"))?;
            if values.len() != count {
                return Err(format!("{key} declares {count} values, has {}", values.len()));
            }
            values.iter().map(|s| num(s)).collect()
        };
        let se_grid = grid("se_grid")?;
        let loss_grid = grid("loss_grid")?;
        if !field("ber")?.is_empty() {
            return Err("ber header takes no values".into());
        }
        let mut ber = Vec::with_capacity(se_grid.len() * loss_grid.len());
        for i in 0..se_grid.len() {
            let line = lines.next().ok_or_else(|| format!("missing BER row {i}"))?;
            let row: Vec<f64> = line.split_ascii_whitespace().map(num).collect::<std::result::Result<_, _>>()?;
            if row.len() != loss_grid.len() {
                return Err(format!("BER row {i} has {} values, expected {}", row.len(), loss_grid.len()));
            }
            ber.extend(row);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err("trailing content after BER rows".into());
        }
        Ok(Self {
            clip_ratio_db,
            se_grid,
            loss_grid,
            ber,
            model_kind,
            model_hash,
        })
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let values = self.se_grid.len() + self.loss_grid.len() + self.ber.len();
        let mut out = vec![0u8; HEADER_LEN];
        out[0..4].copy_from_slice(LUT_MAGIC);
        out[4..8].copy_from_slice(&LUT_VERSION.to_le_bytes());
        out[8..12].copy_from_slice(&(self.se_grid.len() as u32).to_le_bytes());
        out[12..16].copy_from_slice(&(self.loss_grid.len() as u32).to_le_bytes());
        out[16..24].copy_from_slice(&self.clip_ratio_db.to_le_bytes());
        out[24] = match self.model_kind {
            NoiseModelKind::Piecewise => 0,
            NoiseModelKind::Gaussian => 1,
        };
        let hash = self.model_hash.as_bytes();
        let n = hash.len().min(HASH_FIELD.len());
        out[HASH_FIELD.start..HASH_FIELD.start + n].copy_from_slice(&hash[..n]);
        out.reserve(values * 8);
        for v in self.se_grid.iter().chain(&self.loss_grid).chain(&self.ber) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN || &bytes[0..4] != LUT_MAGIC {
            return Err("missing DLUT header".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != LUT_VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let (n, m) = (u32_at(8) as usize, u32_at(12) as usize);
        let clip_ratio_db = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let model_kind = match bytes[24] {
            0 => NoiseModelKind::Piecewise,
            1 => NoiseModelKind::Gaussian,
            k => return Err(format!("unknown model kind code {k}")),
        };
        let hash = &bytes[HASH_FIELD];
        let end = hash.iter().position(|&b| b == 0).unwrap_or(hash.len());
        let model_hash = std::str::from_utf8(&hash[..end])
            .map_err(|_| "model hash is not ASCII".to_string())?
            .to_string();
        let count = n + m + n * m;
        let body = &bytes[HEADER_LEN..];
        if body.len() != count * 8 {
            return Err(format!("expected {} payload bytes, found {}", count * 8, body.len()));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            clip_ratio_db,
            se_grid: values[..n].to_vec(),
            loss_grid: values[n..n + m].to_vec(),
            ber: values[n + m..].to_vec(),
            model_kind,
            model_hash,
        })
    }

    /// Writes the binary form for `.dlut` paths and the text form otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = if is_binary_path(path) {
            self.to_binary()
        } else {
            self.to_text().into_bytes()
        };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Reads either encoding, recognized by the leading magic.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let parsed = if bytes.starts_with(LUT_MAGIC) {
            Self::from_binary(&bytes)
        } else {
            std::str::from_utf8(&bytes)
                .map_err(|_| "neither DLUT binary nor UTF-8 text".to_string())
                .and_then(Self::from_text)
        };
        let lut = parsed.map_err(|detail| Error::Format {
            path: path.to_path_buf(),
            detail,
        })?;
        lut.validate().map_err(|e| Error::Format {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        lut.check_monotone()?;
        Ok(lut)
    }
}

fn is_binary_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("dlut"))
}
