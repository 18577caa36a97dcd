//! `converge`: temporal refinement against a manufactured or fine-step
//! reference, measured at the final time.

use std::fmt::Write as _;

use savark_core::models::manufactured_ch_exact;
use savark_core::{integrate, GradientFlowModel, Grid2D, RealField, Scheme};

use crate::config::{scheme_from, RunConfig};
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, CONVERGENCE_HEADER};

/// Where the reference solution comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// Exact solution of the manufactured CH problem.
    Manufactured,
    /// A run with step `dt`, by default with the scheme under test, on a grid
    /// `refine` times finer in each direction.
    Fine {
        dt: f64,
        scheme: Option<String>,
        refine: usize,
    },
}

impl Reference {
    /// `manufactured`, `fine:TAU`, `fine:TAU:SCHEME` or `fine:TAU:SCHEME:REFINE`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.trim().split(':');
        match parts.next() {
            Some("manufactured") if parts.next().is_none() => Ok(Reference::Manufactured),
            Some("fine") => {
                let dt = parts
                    .next()
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| *v > 0.0 && v.is_finite())
                    .ok_or_else(|| HarnessError::config(format!("bad reference step in `{text}`")))?;
                let scheme = parts.next().filter(|s| !s.is_empty()).map(str::to_string);
                let refine = match parts.next() {
                    None => 1,
                    Some(r) => r
                        .parse::<usize>()
                        .ok()
                        .filter(|r| *r >= 1)
                        .ok_or_else(|| HarnessError::config(format!("bad refinement factor in `{text}`")))?,
                };
                if parts.next().is_some() {
                    return Err(HarnessError::config(format!("trailing fields in `{text}`")));
                }
                Ok(Reference::Fine { dt, scheme, refine })
            }
            _ => Err(HarnessError::config(format!(
                "reference must be `manufactured` or `fine:TAU[:SCHEME[:REFINE]]`, got `{text}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: String,
    pub dt: f64,
    pub l2_error: f64,
    pub linf_error: f64,
    /// `log2(e_prev / e) / log2(dt_prev / dt)`; `None` on the first row of a
    /// scheme or when an error is zero.
    pub rate_l2: Option<f64>,
    pub rate_linf: Option<f64>,
}

fn rate(e0: f64, e1: f64, dt0: f64, dt1: f64) -> Option<f64> {
    (e0 > 0.0 && e1 > 0.0 && dt0 != dt1).then(|| (e0 / e1).log2() / (dt0 / dt1).log2())
}

/// Fills in the rate columns of consecutive rows of the same scheme.
pub fn fill_rates(rows: &mut [ConvergenceRow]) {
    for k in 0..rows.len() {
        let (r_l2, r_inf) = if k > 0 && rows[k - 1].scheme == rows[k].scheme {
            let (p, c) = (&rows[k - 1], &rows[k]);
            (rate(p.l2_error, c.l2_error, p.dt, c.dt), rate(p.linf_error, c.linf_error, p.dt, c.dt))
        } else {
            (None, None)
        };
        rows[k].rate_l2 = r_l2;
        rows[k].rate_linf = r_inf;
    }
}

/// Least-squares slope of `ln e` against `ln dt` over the last `last` rows.
pub fn fitted_slope(rows: &[ConvergenceRow], last: usize, linf: bool) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows[rows.len().saturating_sub(last)..]
        .iter()
        .map(|r| (r.dt.ln(), if linf { r.linf_error } else { r.l2_error }.ln()))
        .collect();
    if pts.len() < 2 || pts.iter().any(|p| !p.1.is_finite()) {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn to_csv(rows: &[ConvergenceRow]) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut s = format!("{CONVERGENCE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.scheme,
            fmt_f64(r.dt),
            fmt_f64(r.l2_error),
            fmt_f64(r.linf_error),
            opt(r.rate_l2),
            opt(r.rate_linf)
        );
    }
    s
}

/// Final-time solution of `cfg` with `scheme` and step `dt`.
pub fn final_field(cfg: &RunConfig, model: &GradientFlowModel, scheme: Scheme, dt: f64) -> Result<RealField> {
    let u0 = cfg.initial_field(*model.grid())?;
    let t = integrate(model, scheme, u0, dt, cfg.time.t_final, &mut [])?;
    Ok(t.state.u)
}

/// Samples a fine-grid field on the nested coarse grid.
pub fn restrict(fine: &RealField, coarse: Grid2D) -> Result<RealField> {
    let fg = fine.grid();
    let (rx, ry) = (fg.nx() / coarse.nx(), fg.ny() / coarse.ny());
    let nested = rx >= 1
        && ry >= 1
        && rx * coarse.nx() == fg.nx()
        && ry * coarse.ny() == fg.ny()
        && fg.x_bounds() == coarse.x_bounds()
        && fg.y_bounds() == coarse.y_bounds();
    if !nested {
        return Err(HarnessError::config(format!(
            "reference grid {}x{} does not nest the run grid {}x{}",
            fg.nx(),
            fg.ny(),
            coarse.nx(),
            coarse.ny()
        )));
    }
    let v = (0..coarse.nx())
        .flat_map(|j| (0..coarse.ny()).map(move |k| (j, k)))
        .map(|(j, k)| fine.get(j * rx, k * ry))
        .collect();
    Ok(RealField::new(coarse, v).expect("sizes match"))
}

/// Reference solution at the final time on the run grid.
pub fn reference_field(cfg: &RunConfig, reference: &Reference, default_scheme: &str) -> Result<RealField> {
    let grid = cfg.build_grid()?;
    match reference {
        Reference::Manufactured => {
            if cfg.model.initial != "manufactured_ch" {
                return Err(HarnessError::config(
                    "the manufactured reference needs model.initial = manufactured_ch",
                ));
            }
            Ok(manufactured_ch_exact(grid, cfg.time.t_final))
        }
        Reference::Fine { dt, scheme, refine } => {
            let fine_grid = Grid2D::new(
                grid.nx() * refine,
                grid.ny() * refine,
                grid.x_bounds(),
                grid.y_bounds(),
            )
            .map_err(HarnessError::from_setup)?;
            let model = cfg.build_model_on(fine_grid)?;
            let name = scheme.as_deref().unwrap_or(default_scheme);
            let u = final_field(cfg, &model, scheme_from(name, &cfg.scheme)?, *dt)?;
            restrict(&u, grid)
        }
    }
}

/// Errors of every scheme in `schemes` (default: the configured one) at
/// every step in `dts`.
pub fn converge(cfg: &RunConfig, schemes: &[String], dts: &[f64], reference: &Reference) -> Result<Vec<ConvergenceRow>> {
    if dts.is_empty() {
        return Err(HarnessError::config("no time steps given"));
    }
    if let Some(bad) = dts.iter().find(|d| !(**d > 0.0)) {
        return Err(HarnessError::config(format!("time steps must be positive, got {bad}")));
    }
    let schemes: Vec<String> = if schemes.is_empty() {
        vec![cfg.scheme.name.clone()]
    } else {
        schemes.to_vec()
    };
    let model = cfg.build_model()?;
    let sp = model.spectral().clone();
    let shared = match reference {
        Reference::Fine { scheme: None, .. } => None,
        r => Some(reference_field(cfg, r, &schemes[0])?),
    };
    let mut rows = Vec::new();
    for name in &schemes {
        let own;
        let reference_u = match &shared {
            Some(u) => u,
            None => {
                own = reference_field(cfg, reference, name)?;
                &own
            }
        };
        for &dt in dts {
            let u = final_field(cfg, &model, scheme_from(name, &cfg.scheme)?, dt)?;
            let mut diff = u.clone();
            diff.axpy(-1.0, reference_u);
            rows.push(ConvergenceRow {
                scheme: name.clone(),
                dt,
                l2_error: sp.norm_l2(&diff),
                linf_error: sp.norm_inf(&diff),
                rate_l2: None,
                rate_linf: None,
            });
        }
    }
    fill_rates(&mut rows);
    Ok(rows)
}
