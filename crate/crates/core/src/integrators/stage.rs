//! Stage kernels shared by all schemes: per-mode solves with a diagonal block
//! of `A`, the coupled (u, q) elimination and residual measurement.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::math;
use crate::models::GradientFlowModel;
use crate::spectral::{Spectral, Spectrum, Symbol};

/// Smallest admissible pivot in the scalar elimination.
pub const PIVOT_TOL: f64 = 1e-13;

/// Per-mode inverse of `I - tau z_k A_B` for one diagonal block `A_B`.
#[derive(Debug, Clone)]
pub(crate) struct BlockSolver {
    pub range: Range<usize>,
    pub a: Matrix,
    inv: Vec<f64>,
}

impl BlockSolver {
    pub fn new(a_full: &Matrix, range: Range<usize>, tau: f64, z: &Symbol) -> Result<Self> {
        let m = range.len();
        let a = a_full.sub_block(range.start, m);
        let zs = z.values();
        let mut inv = Vec::with_capacity(zs.len() * m * m);
        if m == 1 {
            let a00 = a[(0, 0)];
            for &zk in zs {
                let d = 1.0 - tau * a00 * zk;
                if d.abs() < 1e-14 {
                    return Err(Error::SingularSolve(d));
                }
                inv.push(1.0 / d);
            }
        } else {
            let mut mat = vec![0.0; m * m];
            for &zk in zs {
                for i in 0..m {
                    for j in 0..m {
                        let id = if i == j { 1.0 } else { 0.0 };
                        mat[i * m + j] = id - tau * zk * a[(i, j)];
                    }
                }
                let lu = Lu::new(m, &mat).ok_or(Error::SingularSolve(0.0))?;
                if lu.min_pivot() < 1e-14 {
                    return Err(Error::SingularSolve(lu.min_pivot()));
                }
                inv.extend(lu.inverse());
            }
        }
        Ok(Self { range, a, inv })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.range.len()
    }

    /// Solves `(I - tau z A_B) x = rhs` for the stacked block vector.
    pub fn solve(&self, rhs: &[&Spectrum]) -> Vec<Spectrum> {
        let m = self.len();
        debug_assert_eq!(rhs.len(), m);
        let n = rhs[0].len();
        let mut out: Vec<Spectrum> = (0..m).map(|_| Spectrum::zeros(n)).collect();
        if m == 1 {
            let (o, r) = (out[0].data_mut(), rhs[0].data());
            for ((o, r), d) in o.iter_mut().zip(r).zip(&self.inv) {
                *o = r * d;
            }
            return out;
        }
        for k in 0..n {
            let blk = &self.inv[k * m * m..(k + 1) * m * m];
            for i in 0..m {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for j in 0..m {
                    acc += rhs[j].data()[k] * blk[i * m + j];
                }
                out[i].data_mut()[k] = acc;
            }
        }
        out
    }
}

/// Diagonal blocks of `a` with their solvers for step size `tau`.
pub(crate) fn block_solvers(
    a: &Matrix,
    blocks: &[Range<usize>],
    tau: f64,
    z: &Symbol,
) -> Result<Vec<BlockSolver>> {
    blocks
        .iter()
        .map(|r| BlockSolver::new(a, r.clone(), tau, z))
        .collect()
}

/// Everything the coupled (u, q) solve of one block needs.
pub(crate) struct CoupledInput<'a> {
    pub solver: &'a BlockSolver,
    pub tau: f64,
    /// `u^n + tau sum_{j < block} a_ij udot_j` for each stage of the block.
    pub ru: Vec<Spectrum>,
    /// Scalar counterpart for q.
    pub rq: Vec<f64>,
    /// `f` frozen for each stage of the block.
    pub f: Vec<&'a Spectrum>,
    /// Forcing at each stage of the block.
    pub h: Option<Vec<&'a Spectrum>>,
}

pub(crate) struct CoupledOutput {
    pub u: Vec<Spectrum>,
    pub ud: Vec<Spectrum>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    /// `||f_i|| ||udot_i||`, the scale of the inner product `qd[i]`.
    pub qd_mag: Vec<f64>,
}

/// Solves
///
/// ```text
/// u_i = Ru_i + tau sum_{j in B} a_ij udot_j,   udot_j = G(L u_j + 2 q_j f_j) + h_j
/// q_i = Rq_i + tau sum_{j in B} a_ij qdot_j,   qdot_j = (f_j, udot_j)
/// ```
///
/// by writing `u_B = U0 + sum_j q_j U_j`, which reduces the block to an
/// `m x m` linear system for the stage values of q.
pub(crate) fn coupled_block(model: &GradientFlowModel, inp: &CoupledInput<'_>) -> Result<CoupledOutput> {
    let sp = model.spectral();
    let solver = inp.solver;
    let m = solver.len();
    let a = &solver.a;
    let tau = inp.tau;
    let stage0 = solver.range.start;

    // G_j = 2 g f_j
    let gf: Vec<Spectrum> = inp
        .f
        .iter()
        .map(|f| {
            let mut s = (*f).clone();
            s.mul_symbol(model.g());
            s.scale(2.0);
            s
        })
        .collect();

    let mut rhs0: Vec<Spectrum> = inp.ru.clone();
    if let Some(h) = &inp.h {
        for (i, r) in rhs0.iter_mut().enumerate() {
            for (j, hj) in h.iter().enumerate() {
                let c = tau * a[(i, j)];
                if c != 0.0 {
                    r.axpy(c, hj);
                }
            }
        }
    }
    let u0 = solver.solve(&rhs0.iter().collect::<Vec<_>>());
    let uj: Vec<Vec<Spectrum>> = (0..m)
        .map(|j| {
            let rhs: Vec<Spectrum> = (0..m)
                .map(|i| {
                    let mut s = gf[j].clone();
                    s.scale(tau * a[(i, j)]);
                    s
                })
                .collect();
            solver.solve(&rhs.iter().collect::<Vec<_>>())
        })
        .collect();

    // D0_i = z U0_i + h_i, Dj_i = z Uj_i + delta_ij G_j
    let d0: Vec<Spectrum> = (0..m)
        .map(|i| {
            let mut s = u0[i].clone();
            s.mul_symbol(model.gl());
            if let Some(h) = &inp.h {
                s.axpy(1.0, h[i]);
            }
            s
        })
        .collect();
    let dj: Vec<Vec<Spectrum>> = (0..m)
        .map(|j| {
            (0..m)
                .map(|i| {
                    let mut s = uj[j][i].clone();
                    s.mul_symbol(model.gl());
                    if i == j {
                        s.axpy(1.0, &gf[j]);
                    }
                    s
                })
                .collect()
        })
        .collect();

    let p0: Vec<f64> = (0..m).map(|l| sp.inner_hat(inp.f[l], &d0[l])).collect();
    let p = Matrix::from_fn(m, |l, j| sp.inner_hat(inp.f[l], &dj[j][l]));

    // (I - tau A_B P) q = Rq + tau A_B p0
    let ap = a.mul(&p);
    let sys = Matrix::from_fn(m, |i, j| f64::from(u8::from(i == j)) - tau * ap[(i, j)]);
    let ap0 = a.mul_vec(&p0);
    let rhs: Vec<f64> = (0..m).map(|i| inp.rq[i] + tau * ap0[i]).collect();
    let lu = Lu::new(m, sys.as_slice()).ok_or(Error::SingularStage {
        stage: stage0,
        pivot: 0.0,
    })?;
    if lu.min_pivot() < PIVOT_TOL || !lu.min_pivot().is_finite() {
        return Err(Error::SingularStage {
            stage: stage0,
            pivot: lu.min_pivot(),
        });
    }
    let q = lu.solve(&rhs);
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(stage0));
    }

    let mut u = u0;
    let mut ud = d0;
    for i in 0..m {
        for j in 0..m {
            u[i].axpy(q[j], &uj[j][i]);
            ud[i].axpy(q[j], &dj[j][i]);
        }
    }
    let qd: Vec<f64> = (0..m).map(|i| sp.inner_hat(inp.f[i], &ud[i])).collect();
    for (i, x) in u.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite(stage0 + i));
        }
    }
    let qd_mag: Vec<f64> = (0..m).map(|i| norm(sp, inp.f[i]) * norm(sp, &ud[i])).collect();
    Ok(CoupledOutput { u, ud, q, qd, qd_mag })
}

fn norm(sp: &Spectral, x: &Spectrum) -> f64 {
    math::sqrt(sp.inner_hat(x, x).max(0.0))
}

/// Relative residual of `x = base + sum c_k y_k` in the discrete L2 norm.
pub(crate) fn residual(sp: &Spectral, x: &Spectrum, base: &Spectrum, terms: &[(f64, &Spectrum)]) -> f64 {
    let mut r = x.clone();
    r.axpy(-1.0, base);
    let mut scale = norm(sp, x) + norm(sp, base);
    for (c, y) in terms {
        if *c != 0.0 {
            r.axpy(-c, y);
            scale += c.abs() * norm(sp, y);
        }
    }
    let n = norm(sp, &r);
    if scale > 0.0 {
        n / scale
    } else {
        n
    }
}

/// Scalar counterpart of [`residual`]. Terms are `(c, y, |y|-scale)`; for an
/// inner product `y = (f, g)` the scale is `||f|| ||g||`.
pub(crate) fn residual_scalar(x: f64, base: f64, terms: &[(f64, f64, f64)]) -> f64 {
    let mut r = x - base;
    let mut scale = x.abs() + base.abs();
    for (c, y, mag) in terms {
        r -= c * y;
        scale += (c * mag.max(y.abs())).abs();
    }
    if scale > 0.0 {
        r.abs() / scale
    } else {
        r.abs()
    }
}

/// `base + sum_j coef[j] * x[j]` over the entries with nonzero coefficient.
pub(crate) fn combine<'a>(
    base: &Spectrum,
    terms: impl IntoIterator<Item = (f64, Option<&'a Spectrum>)>,
) -> Spectrum {
    let mut out = base.clone();
    for (c, x) in terms {
        if c != 0.0 {
            out.axpy(c, x.expect("dependency computed before use"));
        }
    }
    out
}

/// Unwraps a stage value that the stage ordering guarantees is present.
pub(crate) fn solved(x: &Option<Spectrum>) -> &Spectrum {
    x.as_ref().expect("all stages solved")
}
