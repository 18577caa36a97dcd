//! INI run configuration.
//!
//! ```ini
//! [model]
//! kind = ch
//! epsilon = 0.01
//! initial = ch_cos
//!
//! [scheme]
//! name = diark_2_2_2
//!
//! [grid]
//! n = 128
//!
//! [time]
//! dt = 1e-3
//! t_final = 1.0
//!
//! [output]
//! format = savf
//! ```
//!
//! Keys may also be given outside any section in dotted form
//! (`model.kind = ch`). Unknown sections or keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use savark_core::models::SourceTerm;
use savark_core::{GradientFlowModel, Grid2D, ModelKind, ModelParams, Scheme, Spectral};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::registry;

const KEYS: &[(&str, &[&str])] = &[
    (
        "model",
        &["kind", "epsilon", "lambda", "delta", "kappa", "c", "initial", "seed", "dealias"],
    ),
    ("scheme", &["name", "gamma", "sweeps", "tol"]),
    ("grid", &["n", "nx", "ny", "x_min", "x_max", "y_min", "y_max"]),
    ("time", &["dt", "t_final", "snapshot_times", "snapshot_every"]),
    ("output", &["dir", "format"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Savf,
    Csv,
}

impl SnapshotFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "savf" | "bin" | "binary" => Ok(SnapshotFormat::Savf),
            "csv" => Ok(SnapshotFormat::Csv),
            other => Err(HarnessError::config(format!("unknown snapshot format `{other}` (savf or csv)"))),
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            SnapshotFormat::Savf => "savf",
            SnapshotFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelConfig {
    pub kind: String,
    pub epsilon: f64,
    pub lambda: f64,
    pub delta: f64,
    pub kappa: f64,
    pub c: f64,
    pub initial: String,
    pub seed: u64,
    pub dealias: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeConfig {
    pub name: String,
    pub gamma: Option<f64>,
    pub sweeps: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: SnapshotFormat,
}

/// Fully resolved configuration: every default is filled in.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub scheme: SchemeConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub output: OutputConfig,
}

type Raw = BTreeMap<(String, String), String>;

fn collect(text: &str) -> Result<Raw> {
    let ini = ini::Ini::load_from_str(text).map_err(|e| HarnessError::config(format!("malformed INI: {e}")))?;
    let mut raw = Raw::new();
    for (section, props) in ini.iter() {
        for (key, value) in props.iter() {
            let (sec, k) = match section {
                Some(s) => (s.trim().to_ascii_lowercase(), key.trim().to_ascii_lowercase()),
                None => match key.split_once('.') {
                    Some((s, k)) => (s.trim().to_ascii_lowercase(), k.trim().to_ascii_lowercase()),
                    None => return Err(HarnessError::config(format!("key `{key}` outside any section"))),
                },
            };
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == sec)
                .ok_or_else(|| HarnessError::config(format!("unknown section [{sec}]")))?;
            if !allowed.1.contains(&k.as_str()) {
                return Err(HarnessError::config(format!(
                    "unknown key `{k}` in [{sec}]; expected one of {}",
                    allowed.1.join(", ")
                )));
            }
            if raw.insert((sec.clone(), k.clone()), value.trim().to_string()).is_some() {
                return Err(HarnessError::config(format!("duplicate key {sec}.{k}")));
            }
        }
    }
    Ok(raw)
}

struct Reader {
    raw: Raw,
}

impl Reader {
    fn str(&self, sec: &str, key: &str) -> Option<&str> {
        self.raw.get(&(sec.to_string(), key.to_string())).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, sec: &str, key: &str) -> Result<Option<T>> {
        match self.str(sec, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| HarnessError::config(format!("{sec}.{key}: cannot parse `{v}`"))),
        }
    }

    fn f64(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parse(sec, key)?;
        match v {
            Some(x) if !x.is_finite() => Err(HarnessError::config(format!("{sec}.{key} must be finite"))),
            _ => Ok(v),
        }
    }

    fn bool(&self, sec: &str, key: &str) -> Result<Option<bool>> {
        match self.str(sec, key).map(|s| s.to_ascii_lowercase()) {
            None => Ok(None),
            Some(s) => match s.as_str() {
                "true" | "yes" | "on" | "1" => Ok(Some(true)),
                "false" | "no" | "off" | "0" => Ok(Some(false)),
                _ => Err(HarnessError::config(format!("{sec}.{key}: expected a boolean, got `{s}`"))),
            },
        }
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| HarnessError::config(format!("not a number: `{s}`")))
        })
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let r = Reader { raw: collect(text)? };

        let kind_name = r
            .str("model", "kind")
            .ok_or_else(|| HarnessError::config("model.kind is required"))?;
        let kind = ModelKind::from_name(kind_name).map_err(HarnessError::from_setup)?;
        let d = ModelParams::defaults(kind);
        let initial = r
            .str("model", "initial")
            .unwrap_or_else(|| registry::default_for(kind))
            .to_string();
        let (lo, hi) = registry::default_domain(&initial)?;
        if initial == "manufactured_ch" && kind != ModelKind::CahnHilliard {
            return Err(HarnessError::config("initial = manufactured_ch requires model.kind = ch"));
        }
        let model = ModelConfig {
            kind: kind.name().to_string(),
            epsilon: r.f64("model", "epsilon")?.unwrap_or(d.epsilon),
            lambda: r.f64("model", "lambda")?.unwrap_or(d.lambda),
            delta: r.f64("model", "delta")?.unwrap_or(d.delta),
            kappa: r.f64("model", "kappa")?.unwrap_or(d.kappa),
            c: r.f64("model", "c")?.unwrap_or(d.c),
            initial,
            seed: r.parse("model", "seed")?.unwrap_or(0),
            dealias: r.bool("model", "dealias")?.unwrap_or(false),
        };

        let scheme = SchemeConfig {
            name: r.str("scheme", "name").unwrap_or("diark_2_2_2").to_string(),
            gamma: r.f64("scheme", "gamma")?,
            sweeps: r.parse("scheme", "sweeps")?,
            tol: r.f64("scheme", "tol")?,
        };

        let n: Option<usize> = r.parse("grid", "n")?;
        let nx = r.parse("grid", "nx")?.or(n).unwrap_or(128);
        let ny = r.parse("grid", "ny")?.or(n).unwrap_or(nx);
        let grid = GridConfig {
            nx,
            ny,
            x_min: r.f64("grid", "x_min")?.unwrap_or(lo),
            x_max: r.f64("grid", "x_max")?.unwrap_or(hi),
            y_min: r.f64("grid", "y_min")?.unwrap_or(lo),
            y_max: r.f64("grid", "y_max")?.unwrap_or(hi),
        };

        let dt = r
            .f64("time", "dt")?
            .ok_or_else(|| HarnessError::config("time.dt is required"))?;
        let t_final = r
            .f64("time", "t_final")?
            .ok_or_else(|| HarnessError::config("time.t_final is required"))?;
        if !(dt > 0.0) {
            return Err(HarnessError::config(format!("time.dt must be positive, got {dt}")));
        }
        if !(t_final >= 0.0) {
            return Err(HarnessError::config(format!("time.t_final must be >= 0, got {t_final}")));
        }
        let snapshot_times = match r.str("time", "snapshot_times") {
            Some(s) => parse_list(s)?,
            None => vec![0.0, t_final],
        };
        let time = TimeConfig {
            dt,
            t_final,
            snapshot_times,
            snapshot_every: r.parse("time", "snapshot_every")?,
        };

        let output = OutputConfig {
            dir: r.str("output", "dir").map(PathBuf::from),
            format: match r.str("output", "format") {
                Some(f) => SnapshotFormat::parse(f)?,
                None => SnapshotFormat::Savf,
            },
        };

        let cfg = RunConfig {
            model,
            scheme,
            grid,
            time,
            output,
        };
        // Surface model, grid and scheme problems as configuration errors.
        cfg.build_model()?;
        cfg.build_scheme()?;
        Ok(cfg)
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::from_name(&self.model.kind).expect("validated on load")
    }

    pub fn build_grid(&self) -> Result<Grid2D> {
        let g = &self.grid;
        Grid2D::new(g.nx, g.ny, (g.x_min, g.x_max), (g.y_min, g.y_max)).map_err(HarnessError::from_setup)
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            epsilon: m.epsilon,
            lambda: m.lambda,
            delta: m.delta,
            kappa: m.kappa,
            c: m.c,
        }
    }

    /// The model, with the manufactured forcing attached when requested.
    pub fn build_model(&self) -> Result<GradientFlowModel> {
        self.build_model_on(self.build_grid()?)
    }

    pub fn build_model_on(&self, grid: Grid2D) -> Result<GradientFlowModel> {
        let sp = Spectral::new(grid).with_dealias(self.model.dealias);
        let model = GradientFlowModel::with_spectral(self.kind(), self.params(), sp).map_err(HarnessError::from_setup)?;
        Ok(if self.model.initial == "manufactured_ch" {
            model.with_source(SourceTerm::manufactured_ch(self.model.lambda, self.model.epsilon))
        } else {
            model
        })
    }

    pub fn build_scheme(&self) -> Result<Scheme> {
        scheme_from(&self.scheme.name, &self.scheme)
    }

    pub fn initial_field(&self, grid: Grid2D) -> Result<savark_core::RealField> {
        registry::initial_field(&self.model.initial, grid, self.model.seed)
    }
}

/// Resolves `name` with the optional scheme parameters of `opts`.
pub fn scheme_from(name: &str, opts: &SchemeConfig) -> Result<Scheme> {
    Scheme::from_name(name, opts.gamma, opts.sweeps, opts.tol).map_err(HarnessError::from_setup)
}
