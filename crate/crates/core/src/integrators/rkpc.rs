//! SAV-RKPC: fixed-point prediction sweeps followed by one coupled correction.
//!
//! Each sweep freezes `q` and `f` from the previous iterate and solves the
//! linear stage system of the base tableau; the correction then solves the
//! coupled (u, q) system with `f` frozen at the final prediction.

use alloc::vec::Vec;

use super::stage::{self, BlockSolver, CoupledInput};
use crate::error::{Error, Result};
use crate::models::GradientFlowModel;
use crate::spectral::Spectrum;
use crate::tableaux::ButcherTableau;

pub(crate) struct RkpcStep {
    pub u: Spectrum,
    pub q: f64,
    pub sweeps_used: usize,
    pub stage_residuals: Vec<f64>,
}

/// Physical max-norm of `a - b`.
fn diff_inf(model: &GradientFlowModel, a: &Spectrum, b: &Spectrum) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    model.spectral().inverse(&d).values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn step(
    model: &GradientFlowModel,
    base: &ButcherTableau,
    solvers: &[BlockSolver],
    u_n: &Spectrum,
    q_n: f64,
    tau: f64,
    sweeps: usize,
    tol: f64,
    check_residuals: bool,
) -> Result<RkpcStep> {
    let sp = model.spectral();
    let s = base.stages();
    let a = base.a();

    let (_, f_n) = model.w_and_f_hat(u_n)?;
    let mut u: Vec<Spectrum> = (0..s).map(|_| u_n.clone()).collect();
    let mut q: Vec<f64> = alloc::vec![q_n; s];
    let mut f: Vec<Spectrum> = (0..s).map(|_| f_n.clone()).collect();

    let mut used = 0;
    for _ in 0..sweeps {
        used += 1;
        // N_j = 2 q_j G f_j, frozen for this sweep
        let nl: Vec<Spectrum> = (0..s)
            .map(|j| {
                let mut x = f[j].clone();
                x.mul_symbol(model.g());
                x.scale(2.0 * q[j]);
                x
            })
            .collect();
        let mut u_new: Vec<Option<Spectrum>> = alloc::vec![None; s];
        let mut ud: Vec<Option<Spectrum>> = alloc::vec![None; s];
        for solver in solvers {
            let b = solver.range.clone();
            let rhs: Vec<Spectrum> = b
                .clone()
                .map(|i| {
                    let mut r = stage::combine(u_n, (0..b.start).map(|j| (tau * a[(i, j)], ud[j].as_ref())));
                    for j in b.clone() {
                        let c = tau * a[(i, j)];
                        if c != 0.0 {
                            r.axpy(c, &nl[j]);
                        }
                    }
                    r
                })
                .collect();
            let sol = solver.solve(&rhs.iter().collect::<Vec<_>>());
            for (k, x) in sol.into_iter().enumerate() {
                let i = b.start + k;
                if !x.is_finite() {
                    return Err(Error::NonFinite(i));
                }
                let mut d = x.clone();
                d.mul_symbol(model.gl());
                d.axpy(1.0, &nl[i]);
                ud[i] = Some(d);
                u_new[i] = Some(x);
            }
        }
        let u_new: Vec<Spectrum> = u_new.into_iter().map(|x| x.expect("all blocks solved")).collect();
        let ud: Vec<Spectrum> = ud.into_iter().map(|x| x.expect("all blocks solved")).collect();

        let mut qd = Vec::with_capacity(s);
        for i in 0..s {
            let (_, fi) = model.w_and_f_hat(&u_new[i])?;
            qd.push(sp.inner_hat(&fi, &ud[i]));
            f[i] = fi;
        }
        let aq = a.mul_vec(&qd);
        for i in 0..s {
            q[i] = q_n + tau * aq[i];
        }
        let delta = (0..s).map(|i| diff_inf(model, &u_new[i], &u[i])).fold(0.0, f64::max);
        u = u_new;
        if delta <= tol {
            break;
        }
    }

    // Correction with f frozen at the last prediction.
    let mut uc: Vec<Option<Spectrum>> = alloc::vec![None; s];
    let mut udc: Vec<Option<Spectrum>> = alloc::vec![None; s];
    let mut qc = alloc::vec![0.0; s];
    let mut qdc = alloc::vec![0.0; s];
    let mut qdc_mag = alloc::vec![0.0; s];
    for solver in solvers {
        let b = solver.range.clone();
        let ru: Vec<Spectrum> = b
            .clone()
            .map(|i| stage::combine(u_n, (0..b.start).map(|j| (tau * a[(i, j)], udc[j].as_ref()))))
            .collect();
        let rq: Vec<f64> = b
            .clone()
            .map(|i| q_n + (0..b.start).map(|j| tau * a[(i, j)] * qdc[j]).sum::<f64>())
            .collect();
        let out = stage::coupled_block(
            model,
            &CoupledInput {
                solver,
                tau,
                ru,
                rq,
                f: b.clone().map(|i| &f[i]).collect(),
                h: None,
            },
        )?;
        for (k, ((ui, udi), (qi, qdi))) in out
            .u
            .into_iter()
            .zip(out.ud)
            .zip(out.q.into_iter().zip(out.qd))
            .enumerate()
        {
            let i = b.start + k;
            qdc_mag[i] = out.qd_mag[k];
            uc[i] = Some(ui);
            udc[i] = Some(udi);
            qc[i] = qi;
            qdc[i] = qdi;
        }
    }

    let bw = base.b();
    let mut un = u_n.clone();
    let mut qn = q_n;
    for i in 0..s {
        if bw[i] != 0.0 {
            un.axpy(tau * bw[i], udc[i].as_ref().expect("solved"));
            qn += tau * bw[i] * qdc[i];
        }
    }

    let stage_residuals = if check_residuals {
        (0..s)
            .map(|i| {
                let terms: Vec<(f64, &Spectrum)> = (0..s)
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| (tau * a[(i, j)], udc[j].as_ref().expect("solved")))
                    .collect();
                let ru = stage::residual(sp, uc[i].as_ref().expect("solved"), u_n, &terms);
                let qt: Vec<(f64, f64, f64)> = (0..s).map(|j| (tau * a[(i, j)], qdc[j], qdc_mag[j])).collect();
                ru.max(stage::residual_scalar(qc[i], q_n, &qt))
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(RkpcStep {
        u: un,
        q: qn,
        sweeps_used: used,
        stage_residuals,
    })
}
