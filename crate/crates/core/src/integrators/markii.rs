//! SAV-MARKII: four coupled tableaux acting on the w, v, r, u and q stages.
//!
//! ```text
//! w_i = u^n + tau sum_j (At_ij vL_j + Ab_ij vN_j)
//! v_i = u^n + tau sum_j (A_ij  vL_j + Ah_ij vN_j)
//! r_i = q^n + tau sum_j (A_ij  rL_j + Ah_ij rN_j)
//! u_i = u^n + tau sum_j A_ij udot_j,  q_i = q^n + tau sum_j A_ij qdot_j
//! vL_i = G L v_i,           rL_i = (f[v_i], vL_i)
//! vN_i = G (2 r_i f[v_i]),  rN_i = (f[w_i], vN_i)
//! udot_i = G (L u_i + 2 q_i f[v_i]),  qdot_i = (f[v_i], udot_i)
//! ```
//!
//! The stage order is not fixed by the stage index (w may look ahead), so a
//! dependency-driven schedule is computed once per tableau set.
//!
//! With `r_is_q` the auxiliary scalar is identified with the coupled `q_i`
//! (`vN_i = G(2 q_i f[v_i])`); w and r drop out and, for `At = A` and
//! `Ab = Ah`, the scheme coincides with SAV-MARK.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::stage::{self, BlockSolver, CoupledInput};
use crate::error::{Error, Result};
use crate::models::GradientFlowModel;
use crate::spectral::Spectrum;
use crate::tableaux::{diagonal_blocks, MarkIITableaux};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    /// Solve the v stages of an implicit block (index into the block list).
    V(usize),
    R(usize),
    VN(usize),
    W(usize),
    RN(usize),
    UQ(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Plan {
    pub blocks: Vec<Range<usize>>,
    pub ops: Vec<Op>,
    pub r_is_q: bool,
}

impl Plan {
    pub fn new(t: &MarkIITableaux, r_is_q: bool) -> Result<Self> {
        let s = t.stages();
        let (a, ah, at, ab) = (t.a.a(), t.a_hat.a(), t.a_tilde.a(), t.a_bar.a());
        let blocks = diagonal_blocks(a);
        let needs_rn: Vec<bool> = (0..s)
            .map(|j| !r_is_q && (0..s).any(|i| ah[(i, j)] != 0.0))
            .collect();

        let mut v = vec![false; s];
        let mut r = vec![false; s];
        let mut vn = vec![false; s];
        let mut w = vec![false; s];
        let mut rn = vec![false; s];
        let mut uq = vec![false; s];
        let mut v_done = vec![false; blocks.len()];
        let mut uq_done = vec![false; blocks.len()];
        let mut ops = Vec::new();
        let total = 2 * blocks.len()
            + s
            + if r_is_q { 0 } else { s }
            + 2 * needs_rn.iter().filter(|x| **x).count();
        while ops.len() < total {
            let before = ops.len();
            for (bi, b) in blocks.iter().enumerate() {
                if !v_done[bi] {
                    let ready = b.clone().all(|i| {
                        (0..s).all(|j| {
                            (a[(i, j)] == 0.0 || b.contains(&j) || v[j]) && (ah[(i, j)] == 0.0 || vn[j])
                        })
                    });
                    if ready {
                        b.clone().for_each(|i| v[i] = true);
                        v_done[bi] = true;
                        ops.push(Op::V(bi));
                    }
                }
            }
            for i in 0..s {
                if r_is_q {
                    if !r[i] && uq[i] {
                        r[i] = true;
                    }
                } else if !r[i]
                    && v[i]
                    && (0..s).all(|j| (a[(i, j)] == 0.0 || v[j]) && (ah[(i, j)] == 0.0 || rn[j]))
                {
                    r[i] = true;
                    ops.push(Op::R(i));
                }
                if !vn[i] && r[i] && v[i] {
                    vn[i] = true;
                    ops.push(Op::VN(i));
                }
                if needs_rn[i]
                    && !w[i]
                    && (0..s).all(|j| (at[(i, j)] == 0.0 || v[j]) && (ab[(i, j)] == 0.0 || vn[j]))
                {
                    w[i] = true;
                    ops.push(Op::W(i));
                }
                if needs_rn[i] && !rn[i] && w[i] && vn[i] {
                    rn[i] = true;
                    ops.push(Op::RN(i));
                }
            }
            for (bi, b) in blocks.iter().enumerate() {
                if !uq_done[bi] {
                    let ready = b.clone().all(|i| {
                        v[i] && (0..s).all(|j| a[(i, j)] == 0.0 || b.contains(&j) || uq[j])
                    });
                    if ready {
                        b.clone().for_each(|i| uq[i] = true);
                        uq_done[bi] = true;
                        ops.push(Op::UQ(bi));
                    }
                }
            }
            if ops.len() == before {
                return Err(Error::NotStageSolvable(format!(
                    "four-tableau stage system has a cyclic dependency ({} of {} stage items resolved)",
                    before, total
                )));
            }
        }
        Ok(Self { blocks, ops, r_is_q })
    }
}

pub(crate) struct MarkIIStep {
    pub u: Spectrum,
    pub q: f64,
    pub stage_residuals: Vec<f64>,
}

struct Work {
    v: Vec<Option<Spectrum>>,
    f: Vec<Option<Spectrum>>,
    vl: Vec<Option<Spectrum>>,
    vn: Vec<Option<Spectrum>>,
    rl: Vec<f64>,
    rn: Vec<f64>,
    r: Vec<f64>,
    u: Vec<Option<Spectrum>>,
    ud: Vec<Option<Spectrum>>,
    q: Vec<f64>,
    qd: Vec<f64>,
    qd_mag: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn step(
    model: &GradientFlowModel,
    t: &MarkIITableaux,
    plan: &Plan,
    solvers: &[BlockSolver],
    u_n: &Spectrum,
    q_n: f64,
    tau: f64,
    check_residuals: bool,
) -> Result<MarkIIStep> {
    let sp = model.spectral();
    let s = t.stages();
    let (a, ah, at, ab) = (t.a.a(), t.a_hat.a(), t.a_tilde.a(), t.a_bar.a());
    let mut wk = Work {
        v: vec![None; s],
        f: vec![None; s],
        vl: vec![None; s],
        vn: vec![None; s],
        rl: vec![0.0; s],
        rn: vec![0.0; s],
        r: vec![0.0; s],
        u: vec![None; s],
        ud: vec![None; s],
        q: vec![0.0; s],
        qd: vec![0.0; s],
        qd_mag: vec![0.0; s],
    };
    for op in &plan.ops {
        match *op {
            Op::V(bi) => {
                let solver = &solvers[bi];
                let b = solver.range.clone();
                let rhs: Vec<Spectrum> = b
                    .clone()
                    .map(|i| {
                        stage::combine(
                            u_n,
                            (0..s)
                                .filter(|j| !b.contains(j))
                                .map(|j| (tau * a[(i, j)], wk.vl[j].as_ref()))
                                .chain((0..s).map(|j| (tau * ah[(i, j)], wk.vn[j].as_ref()))),
                        )
                    })
                    .collect();
                let v = solver.solve(&rhs.iter().collect::<Vec<_>>());
                for (k, vi) in v.into_iter().enumerate() {
                    let i = b.start + k;
                    if !vi.is_finite() {
                        return Err(Error::NonFinite(i));
                    }
                    let mut vl = vi.clone();
                    vl.mul_symbol(model.gl());
                    let (_, f) = model.w_and_f_hat(&vi)?;
                    wk.rl[i] = sp.inner_hat(&f, &vl);
                    wk.v[i] = Some(vi);
                    wk.vl[i] = Some(vl);
                    wk.f[i] = Some(f);
                }
            }
            Op::R(i) => {
                wk.r[i] = q_n
                    + (0..s)
                        .map(|j| tau * (a[(i, j)] * wk.rl[j] + ah[(i, j)] * wk.rn[j]))
                        .sum::<f64>();
            }
            Op::VN(i) => {
                let mut vn = wk.f[i].clone().expect("v before vN");
                vn.mul_symbol(model.g());
                vn.scale(2.0 * if plan.r_is_q { wk.q[i] } else { wk.r[i] });
                wk.vn[i] = Some(vn);
            }
            Op::W(i) => {
                let w = stage::combine(
                    u_n,
                    (0..s)
                        .map(|j| (tau * at[(i, j)], wk.vl[j].as_ref()))
                        .chain((0..s).map(|j| (tau * ab[(i, j)], wk.vn[j].as_ref()))),
                );
                let (_, fw) = model.w_and_f_hat(&w)?;
                // Only (f[w_i], vN_i) is needed downstream; keep it as rN_i.
                wk.rn[i] = sp.inner_hat(&fw, wk.vn[i].as_ref().expect("vN before w"));
            }
            Op::RN(_) => {}
            Op::UQ(bi) => {
                let solver = &solvers[bi];
                let b = solver.range.clone();
                let ru: Vec<Spectrum> = b
                    .clone()
                    .map(|i| {
                        stage::combine(
                            u_n,
                            (0..s)
                                .filter(|j| !b.contains(j))
                                .map(|j| (tau * a[(i, j)], wk.ud[j].as_ref())),
                        )
                    })
                    .collect();
                let rq: Vec<f64> = b
                    .clone()
                    .map(|i| {
                        q_n + (0..s)
                            .filter(|j| !b.contains(j))
                            .map(|j| tau * a[(i, j)] * wk.qd[j])
                            .sum::<f64>()
                    })
                    .collect();
                let f: Vec<&Spectrum> = b.clone().map(|i| wk.f[i].as_ref().expect("v before uq")).collect();
                let out = stage::coupled_block(
                    model,
                    &CoupledInput {
                        solver,
                        tau,
                        ru,
                        rq,
                        f,
                        h: None,
                    },
                )?;
                for (k, ((u, ud), (q, qd))) in out
                    .u
                    .into_iter()
                    .zip(out.ud)
                    .zip(out.q.into_iter().zip(out.qd))
                    .enumerate()
                {
                    let i = b.start + k;
                    wk.qd_mag[i] = out.qd_mag[k];
                    wk.u[i] = Some(u);
                    wk.ud[i] = Some(ud);
                    wk.q[i] = q;
                    wk.qd[i] = qd;
                }
            }
        }
    }

    let bw = t.b();
    let mut u = u_n.clone();
    let mut q = q_n;
    for (i, &bi) in bw.iter().enumerate() {
        if bi != 0.0 {
            u.axpy(tau * bi, wk.ud[i].as_ref().expect("solved"));
            q += tau * bi * wk.qd[i];
        }
    }

    let stage_residuals = if check_residuals {
        (0..s)
            .map(|i| {
                let v_terms: Vec<(f64, &Spectrum)> = (0..s)
                    .flat_map(|j| {
                        let mut out = Vec::with_capacity(2);
                        if a[(i, j)] != 0.0 {
                            out.push((tau * a[(i, j)], stage::solved(&wk.vl[j])));
                        }
                        if ah[(i, j)] != 0.0 {
                            out.push((tau * ah[(i, j)], stage::solved(&wk.vn[j])));
                        }
                        out
                    })
                    .collect();
                let rv = stage::residual(sp, stage::solved(&wk.v[i]), u_n, &v_terms);
                let r_terms: Vec<(f64, f64, f64)> = (0..s)
                    .flat_map(|j| [(tau * a[(i, j)], wk.rl[j], 0.0), (tau * ah[(i, j)], wk.rn[j], 0.0)])
                    .collect();
                let rr = if plan.r_is_q {
                    0.0
                } else {
                    stage::residual_scalar(wk.r[i], q_n, &r_terms)
                };
                let u_terms: Vec<(f64, &Spectrum)> = (0..s)
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| (tau * a[(i, j)], stage::solved(&wk.ud[j])))
                    .collect();
                let ru = stage::residual(sp, stage::solved(&wk.u[i]), u_n, &u_terms);
                let q_terms: Vec<(f64, f64, f64)> = (0..s).map(|j| (tau * a[(i, j)], wk.qd[j], wk.qd_mag[j])).collect();
                let rq = stage::residual_scalar(wk.q[i], q_n, &q_terms);
                rv.max(rr).max(ru).max(rq)
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(MarkIIStep {
        u,
        q,
        stage_residuals,
    })
}
