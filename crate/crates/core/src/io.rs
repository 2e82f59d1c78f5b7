//! Raw binary model files and field dumps.
//!
//! Payloads are headerless little-endian `f64`, row-major in the grid's node
//! order. Complex fields interleave `(re, im)`. Each payload has a text
//! sidecar with the same stem and a `.meta` extension holding `key=value`
//! lines: `n1`, `n2`, `L1`, `L2` and, for complex dumps, `complex=true`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, RealField};
use crate::model::Medium;

/// Contents of a `.meta` sidecar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metadata {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    pub complex: bool,
}

impl Metadata {
    pub fn for_grid(grid: &GridSpec, complex: bool) -> Self {
        Metadata {
            n1: grid.n1,
            n2: grid.n2,
            l1: grid.l1,
            l2: grid.l2,
            complex,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n1, self.n2, self.l1, self.l2)
    }

    /// Parses sidecar text. Blank lines and `#` comments are ignored;
    /// unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let (mut n1, mut n2, mut l1, mut l2, mut complex) = (None, None, None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Metadata(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Metadata(format!("line {}: bad {what} `{value}` for `{key}`", lineno + 1));
            let dup = || Error::Metadata(format!("line {}: duplicate key `{key}`", lineno + 1));
            match key {
                "n1" | "n2" => {
                    let v: usize = value.parse().map_err(|_| bad("integer"))?;
                    let slot = if key == "n1" { &mut n1 } else { &mut n2 };
                    if slot.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                "L1" | "L2" => {
                    let v: f64 = value.parse().map_err(|_| bad("number"))?;
                    let slot = if key == "L1" { &mut l1 } else { &mut l2 };
                    if slot.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                "complex" => {
                    let v: bool = value.parse().map_err(|_| bad("boolean"))?;
                    if complex.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                other => return Err(Error::Metadata(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        let missing = |k: &str| Error::Metadata(format!("missing key `{k}`"));
        Ok(Metadata {
            n1: n1.ok_or_else(|| missing("n1"))?,
            n2: n2.ok_or_else(|| missing("n2"))?,
            l1: l1.ok_or_else(|| missing("L1"))?,
            l2: l2.ok_or_else(|| missing("L2"))?,
            complex: complex.unwrap_or(false),
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n1={}", self.n1);
        let _ = writeln!(s, "n2={}", self.n2);
        let _ = writeln!(s, "L1={:?}", self.l1);
        let _ = writeln!(s, "L2={:?}", self.l2);
        if self.complex {
            s.push_str("complex=true\n");
        }
        s
    }
}

/// Path of the sidecar belonging to a payload file.
pub fn meta_path(path: &Path) -> PathBuf {
    path.with_extension("meta")
}

/// Decodes exactly `count` little-endian `f64` values.
pub fn decode_f64_le(bytes: &[u8], count: usize, path: &Path) -> Result<Vec<f64>> {
    if bytes.len() != count * 8 {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected: count * 8,
            found: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn encode_f64_le(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values.flat_map(f64::to_le_bytes).collect()
}

/// Turns a raw velocity payload into a medium with `kappa_sq = 1 / v^2`.
pub fn medium_from_velocity_bytes(grid: &GridSpec, bytes: &[u8], path: &Path) -> Result<Medium> {
    let v = decode_f64_le(bytes, grid.len(), path)?;
    if let Some(index) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::NonPositiveVelocity { index, value: v[index] });
    }
    let kappa_sq = v.into_iter().map(|x| 1.0 / (x * x)).collect();
    Medium::lossless(RealField::from_values(*grid, kappa_sq)?)
}

/// Loads a velocity model stored as raw little-endian `f64`.
pub fn load_model_raw(grid: &GridSpec, path: &Path) -> Result<Medium> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    medium_from_velocity_bytes(grid, &bytes, path)
}

pub fn read_metadata(path: &Path) -> Result<Metadata> {
    let meta = meta_path(path);
    let text = fs::read_to_string(&meta).map_err(|e| Error::io(&meta, e))?;
    Metadata::parse(&text)
}

fn write_payload(path: &Path, meta: &Metadata, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mp = meta_path(path);
    fs::write(&mp, meta.render()).map_err(|e| Error::io(&mp, e))
}

pub fn write_real_field(path: &Path, field: &RealField) -> Result<()> {
    let meta = Metadata::for_grid(field.grid(), false);
    write_payload(path, &meta, &encode_f64_le(field.values().iter().copied()))
}

pub fn write_complex_field(path: &Path, field: &ComplexField) -> Result<()> {
    let meta = Metadata::for_grid(field.grid(), true);
    let bytes = encode_f64_le(field.values().iter().flat_map(|z| [z.re, z.im]));
    write_payload(path, &meta, &bytes)
}

pub fn read_real_field(path: &Path) -> Result<RealField> {
    let meta = read_metadata(path)?;
    if meta.complex {
        return Err(Error::Metadata(format!("{} holds a complex field", path.display())));
    }
    let grid = meta.grid()?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    RealField::from_values(grid, decode_f64_le(&bytes, grid.len(), path)?)
}

pub fn read_complex_field(path: &Path) -> Result<ComplexField> {
    let meta = read_metadata(path)?;
    if !meta.complex {
        return Err(Error::Metadata(format!("{} holds a real field", path.display())));
    }
    let grid = meta.grid()?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw = decode_f64_le(&bytes, 2 * grid.len(), path)?;
    let values = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    ComplexField::from_values(grid, values)
}
