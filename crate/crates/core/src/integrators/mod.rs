//! Time steppers: SAV-ARK, SAV-MARK, SAV-MARKII and SAV-RKPC.

mod ark;
mod markii;
mod rkpc;
mod stage;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

pub use ark::{coupled_uq_stage, explicit_stage_v, StageWorkspace};
pub use stage::PIVOT_TOL;

use crate::error::{Error, Result};
use crate::models::GradientFlowModel;
use crate::spectral::{RealField, Spectrum};
use crate::tableaux::{base_tableau, build_rkpc_markii, ArkPair, ButcherTableau, MarkIITableaux, Method};
use stage::BlockSolver;

/// Default prediction tolerance of SAV-RKPC.
pub const RKPC_TOL: f64 = 1e-14;
/// Default number of prediction sweeps of SAV-RKPC.
pub const RKPC_SWEEPS: usize = 4;
/// Default bound on the relative stage residuals.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Solution state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SavState {
    pub u: RealField,
    pub q: f64,
    /// Auxiliary field carried by SAV-ARK only.
    pub v: Option<RealField>,
    pub t: f64,
}

impl SavState {
    /// Consistent initial data: `q = W(u0)` and, for SAV-ARK, `v = u0`.
    pub fn initial(model: &GradientFlowModel, scheme: &Scheme, u0: RealField) -> Result<Self> {
        if u0.grid() != model.grid() {
            return Err(Error::ShapeMismatch {
                expected: (model.grid().nx(), model.grid().ny()),
                found: u0.values().len(),
            });
        }
        let q = model.q_init(&u0)?;
        let v = scheme.carries_v().then(|| u0.clone());
        Ok(Self { u: u0, q, v, t: 0.0 })
    }
}

/// A fully specified time integrator.
#[derive(Debug, Clone)]
pub enum Scheme {
    /// SAV-MARK: the v stages restart from `u^n` every step.
    Mark(ArkPair),
    /// SAV-ARK: `v` is propagated across steps.
    Ark(ArkPair),
    /// SAV-MARKII. With `r_is_q` the auxiliary scalar r is replaced by the
    /// coupled q stage values.
    MarkII {
        tableaux: MarkIITableaux,
        r_is_q: bool,
    },
    Rkpc {
        base: ButcherTableau,
        base_name: String,
        sweeps: usize,
        tol: f64,
    },
}

impl Scheme {
    pub fn mark(method: Method) -> Self {
        Scheme::Mark(method.pair())
    }

    pub fn ark(method: Method) -> Self {
        Scheme::Ark(method.pair())
    }

    pub fn rkpc(base_name: &str, sweeps: usize, tol: f64) -> Result<Self> {
        if sweeps == 0 {
            return Err(Error::InvalidParameter("RKPC needs at least one prediction sweep".into()));
        }
        if !(tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("RKPC tolerance must be >= 0, got {tol}")));
        }
        Ok(Scheme::Rkpc {
            base: base_tableau(base_name)?,
            base_name: base_name.to_string(),
            sweeps,
            tol,
        })
    }

    pub fn markii(tableaux: MarkIITableaux) -> Self {
        Scheme::MarkII {
            tableaux,
            r_is_q: false,
        }
    }

    pub fn markii_from_rkpc(base_name: &str, sweeps: usize) -> Result<Self> {
        Ok(Scheme::markii(build_rkpc_markii(&base_tableau(base_name)?, sweeps)?))
    }

    /// Resolves a scheme name.
    ///
    /// * `rkpc_<base>`: prediction-correction on `gauss2` or `implicit_euler`
    /// * `markii_<base>`: the equivalent four-tableau form
    /// * `ark_<method>`: SAV-ARK
    /// * `<method>` or `mark_<method>`: SAV-MARK
    pub fn from_name(name: &str, gamma: Option<f64>, sweeps: Option<usize>, tol: Option<f64>) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let sweeps = sweeps.unwrap_or(RKPC_SWEEPS);
        if let Some(base) = lower.strip_prefix("rkpc_") {
            Scheme::rkpc(base, sweeps, tol.unwrap_or(RKPC_TOL))
        } else if let Some(base) = lower.strip_prefix("markii_") {
            Scheme::markii_from_rkpc(base, sweeps)
        } else if let Some(m) = lower.strip_prefix("ark_") {
            Ok(Scheme::ark(Method::from_name(m, gamma)?))
        } else {
            let m = lower.strip_prefix("mark_").unwrap_or(&lower);
            Ok(Scheme::mark(Method::from_name(m, gamma)?))
        }
    }

    pub fn name(&self) -> String {
        match self {
            Scheme::Mark(p) => format!("mark_{}", p.name()),
            Scheme::Ark(p) => format!("ark_{}", p.name()),
            Scheme::MarkII { tableaux, .. } => format!("markii_{}_stages", tableaux.stages()),
            Scheme::Rkpc { base_name, sweeps, .. } => format!("rkpc_{base_name}_m{sweeps}"),
        }
    }

    pub fn carries_v(&self) -> bool {
        matches!(self, Scheme::Ark(_))
    }

    pub fn stages(&self) -> usize {
        match self {
            Scheme::Mark(p) | Scheme::Ark(p) => p.stages(),
            Scheme::MarkII { tableaux, .. } => tableaux.stages(),
            Scheme::Rkpc { base, .. } => base.stages(),
        }
    }

    /// Tableau whose diagonal blocks are inverted at every step.
    fn implicit_matrix(&self) -> &crate::linalg::Matrix {
        match self {
            Scheme::Mark(p) | Scheme::Ark(p) => p.implicit().a(),
            Scheme::MarkII { tableaux, .. } => tableaux.a.a(),
            Scheme::Rkpc { base, .. } => base.a(),
        }
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub energy_before: f64,
    pub energy_after: f64,
    pub q: f64,
    /// Largest relative residual of the stage equations, per stage.
    pub stage_residuals: Vec<f64>,
    /// Prediction sweeps actually performed (RKPC only).
    pub sweeps: Option<usize>,
    /// Seconds spent in the step; `None` without `std`.
    pub wall_time: Option<f64>,
}

impl StepReport {
    pub fn max_residual(&self) -> f64 {
        self.stage_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `(E_after - E_before) / max(|E_before|, tiny)`.
    pub fn relative_energy_change(&self) -> f64 {
        (self.energy_after - self.energy_before) / self.energy_before.abs().max(f64::MIN_POSITIVE)
    }
}

/// Spectral form of the state used between steps.
#[derive(Debug, Clone)]
pub struct SpectralState {
    pub u: Spectrum,
    pub q: f64,
    pub v: Option<Spectrum>,
    pub t: f64,
}

/// Steps one model with one scheme, caching the per-mode block inverses for
/// the most recent step size.
pub struct Stepper<'m> {
    model: &'m GradientFlowModel,
    scheme: Scheme,
    blocks: Vec<Range<usize>>,
    plan: Option<markii::Plan>,
    cache: Option<(f64, Vec<BlockSolver>)>,
    residual_tol: f64,
    check_residuals: bool,
}

impl<'m> Stepper<'m> {
    pub fn new(model: &'m GradientFlowModel, scheme: Scheme) -> Result<Self> {
        let (blocks, plan) = match &scheme {
            Scheme::Mark(p) | Scheme::Ark(p) => (ark::solvable_blocks(p)?, None),
            Scheme::MarkII { tableaux, r_is_q } => {
                let plan = markii::Plan::new(tableaux, *r_is_q)?;
                (plan.blocks.clone(), Some(plan))
            }
            Scheme::Rkpc { base, .. } => (base.diagonal_blocks(), None),
        };
        if model.has_source() && !matches!(scheme, Scheme::Mark(_) | Scheme::Ark(_)) {
            return Err(Error::InvalidParameter(format!(
                "scheme {} does not support a forcing term",
                scheme.name()
            )));
        }
        Ok(Self {
            model,
            scheme,
            blocks,
            plan,
            cache: None,
            residual_tol: RESIDUAL_TOL,
            check_residuals: true,
        })
    }

    /// Turns the post-step stage residual check on or off.
    pub fn with_residual_check(mut self, on: bool) -> Self {
        self.check_residuals = on;
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn model(&self) -> &GradientFlowModel {
        self.model
    }

    fn solvers(&mut self, tau: f64) -> Result<&[BlockSolver]> {
        let stale = !matches!(&self.cache, Some((t, _)) if *t == tau);
        if stale {
            let s = stage::block_solvers(self.scheme.implicit_matrix(), &self.blocks, tau, self.model.gl())?;
            self.cache = Some((tau, s));
        }
        Ok(&self.cache.as_ref().expect("just filled").1)
    }

    pub fn to_spectral(&self, state: &SavState) -> SpectralState {
        let sp = self.model.spectral();
        SpectralState {
            u: sp.forward(&state.u),
            q: state.q,
            v: state.v.as_ref().map(|v| sp.forward(v)),
            t: state.t,
        }
    }

    pub fn to_physical(&self, state: &SpectralState) -> SavState {
        let sp = self.model.spectral();
        SavState {
            u: sp.inverse(&state.u),
            q: state.q,
            v: state.v.as_ref().map(|v| sp.inverse(v)),
            t: state.t,
        }
    }

    /// One step on spectral data.
    pub fn step_spectral(&mut self, state: &SpectralState, tau: f64) -> Result<(SpectralState, StepReport)> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
        }
        #[cfg(feature = "std")]
        let clock = std::time::Instant::now();
        let model = self.model;
        let check = self.check_residuals;
        let energy_before = self.modified_energy_hat(&state.u, state.q);
        let scheme = self.scheme.clone_shallow();
        let plan = self.plan.clone();
        let solvers = self.solvers(tau)?;
        let (u, q, v, residuals, sweeps) = match &scheme {
            SchemeRef::Ark(pair, carry) => {
                let v_n = if *carry {
                    Some(state.v.as_ref().ok_or_else(|| {
                        Error::InvalidParameter("SAV-ARK needs the carried field v in the state".into())
                    })?)
                } else {
                    None
                };
                let out = ark::step(model, pair, solvers, &state.u, state.q, v_n, state.t, tau, check)?;
                let v = carry.then_some(out.v);
                (out.u, out.q, v, out.stage_residuals, None)
            }
            SchemeRef::MarkII(t) => {
                let out = markii::step(model, t, plan.as_ref().expect("planned"), solvers, &state.u, state.q, tau, check)?;
                (out.u, out.q, None, out.stage_residuals, None)
            }
            SchemeRef::Rkpc(base, sweeps, tol) => {
                let out = rkpc::step(model, base, solvers, &state.u, state.q, tau, *sweeps, *tol, check)?;
                (out.u, out.q, None, out.stage_residuals, Some(out.sweeps_used))
            }
        };
        if let Some((stage, &r)) = residuals
            .iter()
            .enumerate()
            .find(|(_, r)| !(**r <= self.residual_tol))
        {
            return Err(Error::StageResidual {
                stage,
                residual: r,
                tolerance: self.residual_tol,
            });
        }
        if !u.is_finite() || !q.is_finite() {
            return Err(Error::NonFinite(self.scheme.stages()));
        }
        let energy_after = self.modified_energy_hat(&u, q);
        #[cfg(feature = "std")]
        let wall_time = Some(clock.elapsed().as_secs_f64());
        #[cfg(not(feature = "std"))]
        let wall_time = None;
        let report = StepReport {
            energy_before,
            energy_after,
            q,
            stage_residuals: residuals,
            sweeps,
            wall_time,
        };
        Ok((
            SpectralState {
                u,
                q,
                v,
                t: state.t + tau,
            },
            report,
        ))
    }

    /// One step on physical data.
    pub fn step(&mut self, state: &SavState, tau: f64) -> Result<(SavState, StepReport)> {
        let s = self.to_spectral(state);
        let (next, report) = self.step_spectral(&s, tau)?;
        Ok((self.to_physical(&next), report))
    }

    fn modified_energy_hat(&self, u: &Spectrum, q: f64) -> f64 {
        self.model.linear_energy_hat(u) + q * q - self.model.energy_constant()
    }
}

/// Borrow-free copy of the parts of a scheme needed inside a step.
enum SchemeRef {
    Ark(ArkPair, bool),
    MarkII(MarkIITableaux),
    Rkpc(ButcherTableau, usize, f64),
}

impl Scheme {
    fn clone_shallow(&self) -> SchemeRef {
        match self {
            Scheme::Mark(p) => SchemeRef::Ark(p.clone(), false),
            Scheme::Ark(p) => SchemeRef::Ark(p.clone(), true),
            Scheme::MarkII { tableaux, .. } => SchemeRef::MarkII(tableaux.clone()),
            Scheme::Rkpc { base, sweeps, tol, .. } => SchemeRef::Rkpc(base.clone(), *sweeps, *tol),
        }
    }
}

/// Per-step callback. `report` is `None` for the initial state.
pub trait Observer {
    fn observe(
        &mut self,
        model: &GradientFlowModel,
        step: usize,
        state: &SavState,
        report: Option<&StepReport>,
    ) -> core::result::Result<(), String>;
}

/// Outcome of [`integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: SavState,
    pub steps: usize,
    /// Largest per-step relative increase of the modified energy (negative
    /// when the energy decreased at every step).
    pub max_relative_energy_increase: f64,
    pub max_stage_residual: f64,
}

/// Number of steps and size of the last one for horizon `t_final`.
pub fn step_count(tau: f64, t_final: f64) -> (usize, Option<f64>) {
    let ratio = t_final / tau;
    let near = crate::math::round(ratio);
    if (ratio - near).abs() <= 1e-9 * ratio.max(1.0) {
        return (near as usize, None);
    }
    let full = crate::math::floor(ratio) as usize;
    let rem = t_final - full as f64 * tau;
    (full, Some(rem))
}

/// Integrates from `u0` (with `q = W(u0)`) to `t_final` with step `tau`.
///
/// `floor(T / tau)` full steps are taken; a non-commensurate horizon adds one
/// final step of the remaining length. Observers see the initial state as
/// step 0 and every subsequent state.
pub fn integrate(
    model: &GradientFlowModel,
    scheme: Scheme,
    u0: RealField,
    tau: f64,
    t_final: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {tau}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!("final time must be >= 0, got {t_final}")));
    }
    let initial = SavState::initial(model, &scheme, u0)?;
    let mut stepper = Stepper::new(model, scheme)?;
    let notify = |obs: &mut [&mut dyn Observer], step: usize, s: &SavState, r: Option<&StepReport>| -> Result<()> {
        for o in obs.iter_mut() {
            o.observe(model, step, s, r)
                .map_err(|message| Error::Observer { step, message })?;
        }
        Ok(())
    };
    notify(observers, 0, &initial, None)?;

    let (full, rem) = if t_final == 0.0 { (0, None) } else { step_count(tau, t_final) };
    let sizes = (0..full).map(|_| tau).chain(rem.filter(|r| *r > 0.0));
    let mut state = stepper.to_spectral(&initial);
    let mut last = initial;
    let mut max_inc = f64::NEG_INFINITY;
    let mut max_res: f64 = 0.0;
    let mut steps = 0;
    for (k, dt) in sizes.enumerate() {
        let step = k + 1;
        let (mut next, report) = stepper
            .step_spectral(&state, dt)
            .map_err(|e| Error::StepFailed {
                step,
                source: Box::new(e),
            })?;
        if rem.is_none() || step <= full {
            next.t = step as f64 * tau;
        } else {
            next.t = t_final;
        }
        max_inc = max_inc.max(report.relative_energy_change());
        max_res = max_res.max(report.max_residual());
        last = stepper.to_physical(&next);
        notify(observers, step, &last, Some(&report))?;
        state = next;
        steps = step;
    }
    Ok(Trajectory {
        state: last,
        steps,
        max_relative_energy_increase: if steps == 0 { 0.0 } else { max_inc },
        max_stage_residual: max_res,
    })
}
