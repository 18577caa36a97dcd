//! `run`: integrate one configuration, writing a manifest, the energy series
//! and field snapshots into a run directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use savark_core::integrators::{step_count, RESIDUAL_TOL};
use savark_core::tableaux::default_gamma;
use savark_core::{integrate, GradientFlowModel, Method, Observer, SavState, Scheme, StepReport};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, SnapshotFormat};
use crate::error::{HarnessError, Result};
use crate::output::{write_atomic, write_snapshot, EnergyRow, EnergyWriter};

pub const MANIFEST: &str = "manifest.json";
pub const ENERGY_CSV: &str = "energy.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotRecord {
    pub step: usize,
    pub time: f64,
    pub file: String,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub steps: usize,
    pub final_state: Option<SavState>,
    pub snapshots: Vec<SnapshotRecord>,
    pub max_relative_energy_increase: f64,
}

/// Steps at which snapshots are written, from the requested times.
pub fn snapshot_steps(dt: f64, t_final: f64, times: &[f64], every: Option<usize>) -> Result<BTreeMap<usize, f64>> {
    let (full, rem) = if t_final == 0.0 { (0, None) } else { step_count(dt, t_final) };
    let last = full + usize::from(rem.is_some());
    let time_of = |s: usize| if s > full { t_final } else { s as f64 * dt };
    let mut out = BTreeMap::new();
    for &t in times {
        if t < 0.0 || t > t_final * (1.0 + 1e-12) {
            return Err(HarnessError::config(format!(
                "snapshot time {t} outside [0, {t_final}]"
            )));
        }
        let step = if (t - t_final).abs() <= 1e-12 * t_final.max(1.0) {
            last
        } else {
            let s = (t / dt).round();
            if (s * dt - t).abs() > 1e-9 * dt.max(t) {
                return Err(HarnessError::config(format!(
                    "snapshot time {t} is not a multiple of dt = {dt}"
                )));
            }
            s as usize
        };
        out.insert(step, time_of(step));
    }
    if let Some(k) = every.filter(|k| *k > 0) {
        for s in (0..=last).step_by(k) {
            out.insert(s, time_of(s));
        }
    }
    Ok(out)
}

struct Recorder<'a> {
    energy: EnergyWriter,
    wanted: &'a BTreeMap<usize, f64>,
    dir: &'a Path,
    format: SnapshotFormat,
    written: Vec<SnapshotRecord>,
    last: Option<SavState>,
    io_error: Option<HarnessError>,
}

impl Recorder<'_> {
    fn record(&mut self, model: &GradientFlowModel, step: usize, state: &SavState) -> Result<()> {
        self.energy
            .push(&EnergyRow::measure(model, step, state.t, &state.u, state.q))?;
        if self.wanted.contains_key(&step) {
            let name = format!("u_{step:08}.{}", self.format.extension());
            let path = self.dir.join(SNAPSHOT_DIR).join(&name);
            write_snapshot(&path, &state.u, state.t, self.format)?;
            self.written.push(SnapshotRecord {
                step,
                time: state.t,
                file: format!("{SNAPSHOT_DIR}/{name}"),
            });
        }
        Ok(())
    }
}

impl Observer for Recorder<'_> {
    fn observe(
        &mut self,
        model: &GradientFlowModel,
        step: usize,
        state: &SavState,
        _report: Option<&StepReport>,
    ) -> std::result::Result<(), String> {
        self.last = Some(state.clone());
        self.record(model, step, state).map_err(|e| {
            let msg = e.to_string();
            self.io_error = Some(e);
            msg
        })
    }
}

fn scheme_manifest(cfg: &RunConfig, scheme: &Scheme) -> serde_json::Value {
    let label_222 = Method::Diark222 { gamma: default_gamma() }.label();
    let is_222 = matches!(scheme, Scheme::Mark(p) | Scheme::Ark(p) if p.name() == label_222);
    let (sweeps, tol) = match scheme {
        Scheme::Rkpc { sweeps, tol, .. } => (Some(*sweeps), Some(*tol)),
        Scheme::MarkII { .. } => (cfg.scheme.sweeps.or(Some(savark_core::integrators::RKPC_SWEEPS)), None),
        _ => (None, None),
    };
    json!({
        "name": cfg.scheme.name,
        "resolved": scheme.name(),
        "stages": scheme.stages(),
        "gamma": if is_222 { Some(cfg.scheme.gamma.unwrap_or_else(default_gamma)) } else { None },
        "sweeps": sweeps,
        "tol": tol,
        "residual_tol": RESIDUAL_TOL,
    })
}

/// Runs `cfg`, writing into `out` (or the configured directory).
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| HarnessError::config("no output directory (use --out or output.dir)"))?;
    fs::create_dir_all(dir.join(SNAPSHOT_DIR)).map_err(|e| HarnessError::io(&dir, e))?;

    let grid = cfg.build_grid()?;
    let model = cfg.build_model_on(grid)?;
    let scheme = cfg.build_scheme()?;
    let u0 = cfg.initial_field(grid)?;
    let wanted = snapshot_steps(cfg.time.dt, cfg.time.t_final, &cfg.time.snapshot_times, cfg.time.snapshot_every)?;
    let (full, rem) = if cfg.time.t_final == 0.0 {
        (0, None)
    } else {
        step_count(cfg.time.dt, cfg.time.t_final)
    };

    let mut rec = Recorder {
        energy: EnergyWriter::create(&dir.join(ENERGY_CSV))?,
        wanted: &wanted,
        dir: &dir,
        format: cfg.output.format,
        written: Vec::new(),
        last: None,
        io_error: None,
    };
    let result = integrate(&model, scheme.clone(), u0, cfg.time.dt, cfg.time.t_final, &mut [&mut rec]);
    let Recorder {
        energy,
        written,
        last,
        io_error,
        ..
    } = rec;
    energy.finish()?;
    if let Some(e) = io_error {
        return Err(e);
    }

    let (status, failure, steps, max_inc) = match &result {
        Ok(t) => ("ok", serde_json::Value::Null, t.steps, t.max_relative_energy_increase),
        Err(e) => {
            let step = match e {
                savark_core::Error::StepFailed { step, .. } | savark_core::Error::Observer { step, .. } => Some(*step),
                _ => None,
            };
            let done = step.map_or(0, |s| s.saturating_sub(1));
            ("failed", json!({ "step": step, "message": e.to_string() }), done, f64::NAN)
        }
    };
    let final_json = last.as_ref().map(|s| {
        let e = model.energies(&s.u, s.q);
        json!({
            "time": s.t,
            "q": s.q,
            "modified_energy": e.modified,
            "original_energy": e.original,
            "mass": model.mass(&s.u),
        })
    });
    let manifest = json!({
        "model": cfg.model,
        "scheme": scheme_manifest(cfg, &scheme),
        "grid": cfg.grid,
        "time": {
            "dt": cfg.time.dt,
            "t_final": cfg.time.t_final,
            "full_steps": full,
            "remainder_step": rem,
            "snapshot_times": cfg.time.snapshot_times,
            "snapshot_every": cfg.time.snapshot_every,
        },
        "output": {
            "format": cfg.output.format,
            "energy_csv": ENERGY_CSV,
            "snapshots": written,
        },
        "status": status,
        "failure": failure,
        "steps_completed": steps,
        "final": final_json,
        "max_relative_energy_increase": if max_inc.is_finite() { Some(max_inc) } else { None },
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write_atomic(&dir.join(MANIFEST), text.as_bytes())?;

    match result {
        Ok(t) => Ok(RunSummary {
            dir,
            steps: t.steps,
            final_state: Some(t.state),
            snapshots: written,
            max_relative_energy_increase: t.max_relative_energy_increase,
        }),
        Err(e) => Err(HarnessError::Solver(e)),
    }
}
