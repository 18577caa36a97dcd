//! SAV-ARK (v carried across steps) and SAV-MARK (v restarted from u^n).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::stage::{self, BlockSolver, CoupledInput};
use crate::error::{Error, Result};
use crate::models::GradientFlowModel;
use crate::spectral::Spectrum;
use crate::tableaux::ArkPair;

/// Stage values of one ARK/MARK step, indexed by stage.
#[derive(Debug, Clone)]
pub struct StageWorkspace {
    pub tau: f64,
    pub t: f64,
    pub u_n: Spectrum,
    pub q_n: f64,
    /// Starting value of the v stages: `u^n` for MARK, the carried `v^n` for ARK.
    pub v_n: Spectrum,
    pub v: Vec<Option<Spectrum>>,
    /// `f[v_i]`
    pub f: Vec<Option<Spectrum>>,
    /// `G L v_i`
    pub vl: Vec<Option<Spectrum>>,
    /// `G (2 q_i f_i) + h_i`
    pub vn: Vec<Option<Spectrum>>,
    pub u: Vec<Option<Spectrum>>,
    pub ud: Vec<Option<Spectrum>>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qd_mag: Vec<f64>,
    /// Forcing at `t + c_i tau`.
    pub h: Vec<Option<Spectrum>>,
}

impl StageWorkspace {
    pub fn new(
        model: &GradientFlowModel,
        pair: &ArkPair,
        u_n: Spectrum,
        q_n: f64,
        v_n: Spectrum,
        t: f64,
        tau: f64,
    ) -> Self {
        let s = pair.stages();
        let h = pair
            .implicit()
            .c()
            .iter()
            .map(|&c| model.source_hat(t + c * tau))
            .collect();
        Self {
            tau,
            t,
            u_n,
            q_n,
            v_n,
            v: vec![None; s],
            f: vec![None; s],
            vl: vec![None; s],
            vn: vec![None; s],
            u: vec![None; s],
            ud: vec![None; s],
            q: vec![0.0; s],
            qd: vec![0.0; s],
            qd_mag: vec![0.0; s],
            h,
        }
    }
}

/// Diagonal blocks of the implicit part, checking that the explicit part
/// only reaches back to earlier blocks.
pub(crate) fn solvable_blocks(pair: &ArkPair) -> Result<Vec<Range<usize>>> {
    let blocks = pair.implicit().diagonal_blocks();
    let ah = pair.explicit().a();
    for b in &blocks {
        for i in b.clone() {
            for j in b.start..pair.stages() {
                if ah[(i, j)] != 0.0 {
                    return Err(Error::NotStageSolvable(format!(
                        "explicit coefficient a_hat[{i}][{j}] = {} couples stage {i} to a stage \
                         at or after its implicit block {}..{}",
                        ah[(i, j)],
                        b.start,
                        b.end
                    )));
                }
            }
        }
    }
    Ok(blocks)
}

fn block_of(pair: &ArkPair, i: usize) -> Result<Range<usize>> {
    let blocks = solvable_blocks(pair)?;
    blocks
        .into_iter()
        .find(|b| b.start == i)
        .ok_or_else(|| Error::InvalidParameter(format!("stage {i} does not start an implicit block")))
}

pub(crate) fn v_block(
    model: &GradientFlowModel,
    pair: &ArkPair,
    ws: &mut StageWorkspace,
    solver: &BlockSolver,
) -> Result<()> {
    let (a, ah) = (pair.implicit().a(), pair.explicit().a());
    let tau = ws.tau;
    let r = solver.range.clone();
    let rhs: Vec<Spectrum> = r
        .clone()
        .map(|i| {
            stage::combine(
                &ws.v_n,
                (0..r.start)
                    .map(|j| (tau * a[(i, j)], ws.vl[j].as_ref()))
                    .chain((0..r.start).map(|j| (tau * ah[(i, j)], ws.vn[j].as_ref()))),
            )
        })
        .collect();
    let v = solver.solve(&rhs.iter().collect::<Vec<_>>());
    for (k, vi) in v.into_iter().enumerate() {
        let i = r.start + k;
        if !vi.is_finite() {
            return Err(Error::NonFinite(i));
        }
        let mut vl = vi.clone();
        vl.mul_symbol(model.gl());
        let (_, f) = model.w_and_f_hat(&vi)?;
        ws.v[i] = Some(vi);
        ws.vl[i] = Some(vl);
        ws.f[i] = Some(f);
    }
    Ok(())
}

pub(crate) fn uq_block(
    model: &GradientFlowModel,
    pair: &ArkPair,
    ws: &mut StageWorkspace,
    solver: &BlockSolver,
) -> Result<()> {
    let a = pair.implicit().a();
    let tau = ws.tau;
    let r = solver.range.clone();
    let ru: Vec<Spectrum> = r
        .clone()
        .map(|i| stage::combine(&ws.u_n, (0..r.start).map(|j| (tau * a[(i, j)], ws.ud[j].as_ref()))))
        .collect();
    let rq: Vec<f64> = r
        .clone()
        .map(|i| ws.q_n + (0..r.start).map(|j| tau * a[(i, j)] * ws.qd[j]).sum::<f64>())
        .collect();
    let f: Vec<&Spectrum> = r
        .clone()
        .map(|i| ws.f[i].as_ref().expect("v stage solved first"))
        .collect();
    let h = if model.has_source() {
        Some(r.clone().map(|i| ws.h[i].as_ref().expect("source evaluated")).collect())
    } else {
        None
    };
    let out = stage::coupled_block(
        model,
        &CoupledInput {
            solver,
            tau,
            ru,
            rq,
            f,
            h,
        },
    )?;
    for (k, ((u, ud), (q, qd))) in out
        .u
        .into_iter()
        .zip(out.ud)
        .zip(out.q.into_iter().zip(out.qd))
        .enumerate()
    {
        let i = r.start + k;
        ws.qd_mag[i] = out.qd_mag[k];
        let mut vn = ws.f[i].clone().expect("v stage solved first");
        vn.mul_symbol(model.g());
        vn.scale(2.0 * q);
        if let Some(h) = &ws.h[i] {
            vn.axpy(1.0, h);
        }
        ws.vn[i] = Some(vn);
        ws.u[i] = Some(u);
        ws.ud[i] = Some(ud);
        ws.q[i] = q;
        ws.qd[i] = qd;
    }
    Ok(())
}

/// Solves the v stages of the implicit block starting at stage `i`:
/// `v_i = v^n + tau sum_j (a_ij G L v_j + a_hat_ij vdotN_j)`. Records `v_i`,
/// `G L v_i` and `f[v_i]` in the workspace and returns `v_i`.
pub fn explicit_stage_v(
    model: &GradientFlowModel,
    pair: &ArkPair,
    ws: &mut StageWorkspace,
    i: usize,
) -> Result<Spectrum> {
    let range = block_of(pair, i)?;
    let solver = BlockSolver::new(pair.implicit().a(), range, ws.tau, model.gl())?;
    v_block(model, pair, ws, &solver)?;
    Ok(ws.v[i].clone().expect("just solved"))
}

/// Coupled (u, q) solve of the implicit block starting at stage `i`, after
/// [`explicit_stage_v`] for the same block. Returns `(u_i, q_i, udot_i,
/// qdot_i)` and finalises `vdotN_i = G(2 q_i f_i) + h_i`.
pub fn coupled_uq_stage(
    model: &GradientFlowModel,
    pair: &ArkPair,
    ws: &mut StageWorkspace,
    i: usize,
) -> Result<(Spectrum, f64, Spectrum, f64)> {
    let range = block_of(pair, i)?;
    if ws.f[i].is_none() {
        return Err(Error::InvalidParameter(format!(
            "stage {i}: v must be solved before the coupled (u, q) stage"
        )));
    }
    let solver = BlockSolver::new(pair.implicit().a(), range, ws.tau, model.gl())?;
    uq_block(model, pair, ws, &solver)?;
    Ok((
        ws.u[i].clone().expect("solved"),
        ws.q[i],
        ws.ud[i].clone().expect("solved"),
        ws.qd[i],
    ))
}

pub(crate) struct ArkStep {
    pub u: Spectrum,
    pub q: f64,
    pub v: Spectrum,
    pub stage_residuals: Vec<f64>,
}

/// Residuals of the v, u and q stage equations, maximised per stage.
pub(crate) fn stage_residuals(model: &GradientFlowModel, pair: &ArkPair, ws: &StageWorkspace) -> Vec<f64> {
    let sp = model.spectral();
    let (a, ah) = (pair.implicit().a(), pair.explicit().a());
    let s = pair.stages();
    let tau = ws.tau;
    (0..s)
        .map(|i| {
            let v_terms: Vec<(f64, &Spectrum)> = (0..s)
                .flat_map(|j| [(tau * a[(i, j)], stage::solved(&ws.vl[j])), (tau * ah[(i, j)], stage::solved(&ws.vn[j]))])
                .collect();
            let rv = stage::residual(sp, stage::solved(&ws.v[i]), &ws.v_n, &v_terms);
            let u_terms: Vec<(f64, &Spectrum)> = (0..s).map(|j| (tau * a[(i, j)], stage::solved(&ws.ud[j]))).collect();
            let ru = stage::residual(sp, stage::solved(&ws.u[i]), &ws.u_n, &u_terms);
            let q_terms: Vec<(f64, f64, f64)> = (0..s).map(|j| (tau * a[(i, j)], ws.qd[j], ws.qd_mag[j])).collect();
            let rq = stage::residual_scalar(ws.q[i], ws.q_n, &q_terms);
            rv.max(ru).max(rq)
        })
        .collect()
}

/// One step of SAV-MARK (`carry_v = false`) or SAV-ARK (`carry_v = true`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn step(
    model: &GradientFlowModel,
    pair: &ArkPair,
    solvers: &[BlockSolver],
    u_n: &Spectrum,
    q_n: f64,
    v_n: Option<&Spectrum>,
    t: f64,
    tau: f64,
    check_residuals: bool,
) -> Result<ArkStep> {
    let v_start = v_n.unwrap_or(u_n).clone();
    let mut ws = StageWorkspace::new(model, pair, u_n.clone(), q_n, v_start, t, tau);
    for solver in solvers {
        v_block(model, pair, &mut ws, solver)?;
        uq_block(model, pair, &mut ws, solver)?;
    }
    let b = pair.implicit().b();
    let bh = pair.explicit().b();
    let mut u = u_n.clone();
    let mut q = q_n;
    for (i, &bi) in b.iter().enumerate() {
        if bi != 0.0 {
            u.axpy(tau * bi, ws.ud[i].as_ref().expect("solved"));
            q += tau * bi * ws.qd[i];
        }
    }
    let v = if v_n.is_some() {
        let mut v = ws.v_n.clone();
        for i in 0..pair.stages() {
            if b[i] != 0.0 {
                v.axpy(tau * b[i], ws.vl[i].as_ref().expect("solved"));
            }
            if bh[i] != 0.0 {
                v.axpy(tau * bh[i], ws.vn[i].as_ref().expect("solved"));
            }
        }
        v
    } else {
        u.clone()
    };
    let stage_residuals = if check_residuals {
        stage_residuals(model, pair, &ws)
    } else {
        Vec::new()
    };
    Ok(ArkStep {
        u,
        q,
        v,
        stage_residuals,
    })
}
