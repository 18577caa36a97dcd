//! File formats: energy series CSV and field snapshots.
//!
//! Snapshot binary layout (all little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 4 | `SAVF` |
//! | 4 | version `u32` = 1 |
//! | 8 | `Nx` as `u64` |
//! | 8 | `Ny` as `u64` |
//! | 8 | time `f64` |
//! | 8 Nx Ny | values `f64`, x index outer |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use savark_core::{GradientFlowModel, RealField};

use crate::config::SnapshotFormat;
use crate::error::{HarnessError, Result};

pub const SAVF_MAGIC: &[u8; 4] = b"SAVF";
pub const SAVF_VERSION: u32 = 1;
pub const ENERGY_HEADER: &str = "step,time,q,modified_energy,original_energy,mass,u_min,u_max";
pub const CONVERGENCE_HEADER: &str = "scheme,dt,l2_error,linf_error,rate_l2,rate_linf";

/// Shortest round-trip representation; identical inputs give identical text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn encode_savf(u: &RealField, time: f64) -> Vec<u8> {
    let g = u.grid();
    let mut out = Vec::with_capacity(32 + 8 * u.values().len());
    out.extend_from_slice(SAVF_MAGIC);
    out.extend_from_slice(&SAVF_VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decoded snapshot: `(nx, ny, time, values)`.
pub fn decode_savf(bytes: &[u8]) -> std::result::Result<(usize, usize, f64, Vec<f64>), String> {
    let take8 = |at: usize| -> std::result::Result<[u8; 8], String> {
        bytes
            .get(at..at + 8)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| "truncated header".to_string())
    };
    if bytes.len() < 32 || &bytes[..4] != SAVF_MAGIC {
        return Err("not a SAVF file".into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != SAVF_VERSION {
        return Err(format!("unsupported SAVF version {version}"));
    }
    let nx = u64::from_le_bytes(take8(8)?) as usize;
    let ny = u64::from_le_bytes(take8(16)?) as usize;
    let time = f64::from_le_bytes(take8(24)?);
    let body = &bytes[32..];
    if body.len() != 8 * nx * ny {
        return Err(format!("expected {} values, found {} bytes", nx * ny, body.len()));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((nx, ny, time, values))
}

pub fn encode_csv_snapshot(u: &RealField) -> String {
    let g = u.grid();
    let mut s = String::from("x,y,u\n");
    for j in 0..g.nx() {
        for k in 0..g.ny() {
            s.push_str(&format!("{},{},{}\n", fmt_f64(g.x(j)), fmt_f64(g.y(k)), fmt_f64(u.get(j, k))));
        }
    }
    s
}

pub fn write_snapshot(path: &Path, u: &RealField, time: f64, format: SnapshotFormat) -> Result<()> {
    let bytes = match format {
        SnapshotFormat::Savf => encode_savf(u, time),
        SnapshotFormat::Csv => encode_csv_snapshot(u).into_bytes(),
    };
    write_atomic(path, &bytes)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// One row of the energy series.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub step: usize,
    pub time: f64,
    pub q: f64,
    pub modified_energy: f64,
    pub original_energy: f64,
    pub mass: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl EnergyRow {
    pub fn measure(model: &GradientFlowModel, step: usize, time: f64, u: &RealField, q: f64) -> Self {
        let e = model.energies(u, q);
        EnergyRow {
            step,
            time,
            q,
            modified_energy: e.modified,
            original_energy: e.original,
            mass: model.mass(u),
            u_min: u.min(),
            u_max: u.max(),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            fmt_f64(self.time),
            fmt_f64(self.q),
            fmt_f64(self.modified_energy),
            fmt_f64(self.original_energy),
            fmt_f64(self.mass),
            fmt_f64(self.u_min),
            fmt_f64(self.u_max)
        )
    }
}

/// Streams energy rows to a CSV file.
pub struct EnergyWriter {
    out: BufWriter<fs::File>,
    path: std::path::PathBuf,
}

impl EnergyWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut w = Self {
            out: BufWriter::new(f),
            path: path.to_path_buf(),
        };
        w.line(ENERGY_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| HarnessError::io(&self.path, e))
    }

    pub fn push(&mut self, row: &EnergyRow) -> Result<()> {
        self.line(&row.to_csv())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}
