//! `equiv`: prediction-correction against its four-tableau form.

use savark_core::{GradientFlowModel, Grid2D, ModelKind, ModelParams, SavState, Scheme, Stepper};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::registry;

pub const PASS_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct EquivReport {
    pub base: String,
    pub sweeps: usize,
    pub model: String,
    pub steps: usize,
    pub n: usize,
    pub dt: f64,
    /// `max |u_rkpc - u_markii| / max |u_rkpc|` over all steps.
    pub deviation_u: f64,
    /// `max |q_rkpc - q_markii| / |q_rkpc|` over all steps.
    pub deviation_q: f64,
}

impl EquivReport {
    pub fn deviation(&self) -> f64 {
        self.deviation_u.max(self.deviation_q)
    }

    pub fn passed(&self) -> bool {
        self.deviation() <= PASS_THRESHOLD
    }
}

/// Default step per model. The prediction sweeps treat the nonlinearity
/// explicitly, so CH needs a much smaller step than AC.
pub fn default_dt(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::CahnHilliard => 1e-4,
        _ => 1e-2,
    }
}

/// Model and initial data used by the check: the model's default parameters
/// and registry initial condition.
pub fn setup(kind: ModelKind, n: usize) -> Result<(GradientFlowModel, savark_core::RealField)> {
    let initial = registry::default_for(kind);
    let (lo, hi) = registry::default_domain(initial)?;
    let grid = Grid2D::square(n, lo, hi).map_err(HarnessError::from_setup)?;
    let model = GradientFlowModel::new(kind, ModelParams::defaults(kind), grid).map_err(HarnessError::from_setup)?;
    let u0 = registry::initial_field(initial, grid, 0)?;
    Ok((model, u0))
}

/// Runs RKPC with `TOL = 0` (exactly `sweeps` sweeps) and the equivalent
/// four-tableau scheme side by side.
pub fn equivalence_check(base: &str, sweeps: usize, model: &str, steps: usize, n: usize, dt: Option<f64>) -> Result<EquivReport> {
    if sweeps == 0 {
        return Err(HarnessError::config("--sweeps must be at least 1"));
    }
    let kind = ModelKind::from_name(model).map_err(HarnessError::from_setup)?;
    let dt = dt.unwrap_or_else(|| default_dt(kind));
    let (model, u0) = setup(kind, n)?;
    let rkpc = Scheme::rkpc(base, sweeps, 0.0).map_err(HarnessError::from_setup)?;
    let markii = Scheme::markii_from_rkpc(base, sweeps).map_err(HarnessError::from_setup)?;

    let mut a = Stepper::new(&model, rkpc)?;
    let mut b = Stepper::new(&model, markii)?;
    let init = SavState::initial(&model, a.scheme(), u0)?;
    let mut sa = a.to_spectral(&init);
    let mut sb = b.to_spectral(&init);
    let (mut du, mut dq) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        sa = a.step_spectral(&sa, dt)?.0;
        sb = b.step_spectral(&sb, dt)?.0;
        let (ua, ub) = (a.to_physical(&sa).u, b.to_physical(&sb).u);
        let scale = ua.values().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let diff = ua
            .values()
            .iter()
            .zip(ub.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        du = du.max(diff / scale);
        dq = dq.max((sa.q - sb.q).abs() / sa.q.abs().max(f64::MIN_POSITIVE));
    }
    Ok(EquivReport {
        base: base.to_string(),
        sweeps,
        model: kind.name().to_string(),
        steps,
        n,
        dt,
        deviation_u: du,
        deviation_q: dq,
    })
}
