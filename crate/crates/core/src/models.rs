//! Gradient-flow models in auxiliary-variable form.
//!
//! Each model is the triple (mobility `G`, linear operator `L`, nonlinear
//! energy) with the scalar auxiliary variable `q = W(u)`:
//!
//! ```text
//! u_t = G (L u + 2 q f[u]),   q_t = (f[u], u_t),
//! f = dW/du - div(dW/d grad u)
//! ```
//!
//! `G` and `L` are Fourier multipliers. The modified energy
//! `(u, L u)/2 + q^2 - const` equals the original free energy whenever
//! `q = W(u)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;
use crate::spectral::{Grid2D, RealField, Spectral, Spectrum, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    AllenCahn,
    CahnHilliard,
    /// Molecular-beam epitaxy with slope selection, `F = (|grad u|^2 - 1)^2 / 4`.
    MbeSlopeSelection,
    /// Molecular-beam epitaxy without slope selection, `F = -ln(1 + |grad u|^2) / 2`.
    MbeNoSlope,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::AllenCahn => "ac",
            ModelKind::CahnHilliard => "ch",
            ModelKind::MbeSlopeSelection => "mbe",
            ModelKind::MbeNoSlope => "mbe_no_slope",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "ac" | "allencahn" => Ok(ModelKind::AllenCahn),
            "ch" | "cahnhilliard" => Ok(ModelKind::CahnHilliard),
            "mbe" | "mbeslope" | "mbeslopeselection" => Ok(ModelKind::MbeSlopeSelection),
            "mbenoslope" | "mbenoslopeselection" => Ok(ModelKind::MbeNoSlope),
            _ => Err(Error::InvalidParameter(format!(
                "unknown model `{name}`; expected ac, ch, mbe or mbe_no_slope"
            ))),
        }
    }

    /// True when `(u, 1)_N` is an invariant of the flow.
    pub fn conserves_mass(&self) -> bool {
        !matches!(self, ModelKind::AllenCahn)
    }
}

/// Physical parameters. Fields a model does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Interface width (AC, CH).
    pub epsilon: f64,
    /// Mobility (CH, MBE).
    pub lambda: f64,
    /// Surface diffusion coefficient (MBE).
    pub delta: f64,
    /// Stabilisation shift between the linear and nonlinear parts.
    pub kappa: f64,
    /// Constant keeping the auxiliary radicand positive.
    pub c: f64,
}

impl ModelParams {
    pub fn defaults(kind: ModelKind) -> Self {
        match kind {
            ModelKind::AllenCahn => Self {
                epsilon: 0.01,
                lambda: 1.0,
                delta: 0.0,
                kappa: 1.0,
                c: 1.0,
            },
            ModelKind::CahnHilliard => Self {
                epsilon: 0.01,
                lambda: 1.0,
                delta: 0.0,
                kappa: 0.0,
                c: 1.0,
            },
            ModelKind::MbeSlopeSelection => Self {
                epsilon: 0.0,
                lambda: 1.0,
                delta: 0.1,
                kappa: 0.0,
                c: 1.0,
            },
            ModelKind::MbeNoSlope => Self {
                epsilon: 0.0,
                lambda: 1.0,
                delta: 0.1,
                kappa: 0.125,
                c: 1.0,
            },
        }
    }
}

type SpatialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type TemporalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Forcing added to the right-hand side, used for manufactured solutions.
#[derive(Clone)]
pub enum SourceTerm {
    /// `h(x, y, t)` sampled on the grid at every evaluation.
    General(SpaceTimeFn),
    /// `h = sum_m T_m(t) S_m(x, y)`; the spatial factors are transformed once.
    Separable(Vec<(SpatialFn, TemporalFn)>),
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::General(_) => f.write_str("SourceTerm::General(..)"),
            SourceTerm::Separable(t) => write!(f, "SourceTerm::Separable({} terms)", t.len()),
        }
    }
}

impl SourceTerm {
    pub fn general(h: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SourceTerm::General(Arc::new(h))
    }

    /// Forcing for which `phi = sin x sin y cos t` solves
    /// `u_t = lambda Lap(-eps^2 Lap u + u^3 - u) + h`.
    pub fn manufactured_ch(lambda: f64, epsilon: f64) -> Self {
        let lin = 4.0 * lambda * epsilon * epsilon - 2.0 * lambda;
        let s1: SpatialFn = Arc::new(|x, y| math::sin(x) * math::sin(y));
        let t1: TemporalFn = Arc::new(move |t| -math::sin(t) + lin * math::cos(t));
        // Lap(a^3 b^3) with a = sin x, b = sin y.
        let s2: SpatialFn = Arc::new(|x, y| {
            let (a, b) = (math::sin(x), math::sin(y));
            let (a3, b3) = (a * a * a, b * b * b);
            6.0 * a * b3 + 6.0 * a3 * b - 18.0 * a3 * b3
        });
        let t2: TemporalFn = Arc::new(move |t| {
            let c = math::cos(t);
            -lambda * c * c * c
        });
        SourceTerm::Separable(vec![(s1, t1), (s2, t2)])
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            SourceTerm::General(h) => h(x, y, t),
            SourceTerm::Separable(terms) => terms.iter().map(|(s, tf)| s(x, y) * tf(t)).sum(),
        }
    }
}

/// Exact solution matching [`SourceTerm::manufactured_ch`].
pub fn manufactured_ch_exact(grid: Grid2D, t: f64) -> RealField {
    let c = math::cos(t);
    RealField::from_fn(grid, |x, y| math::sin(x) * math::sin(y) * c)
}

#[derive(Debug, Clone)]
struct PreparedSource {
    term: SourceTerm,
    spatial_hats: Vec<Spectrum>,
}

/// Modified and original energies of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub modified: f64,
    pub original: f64,
}

/// A gradient flow bound to a grid.
#[derive(Debug, Clone)]
pub struct GradientFlowModel {
    kind: ModelKind,
    params: ModelParams,
    sp: Spectral,
    g: Symbol,
    l: Symbol,
    gl: Symbol,
    nonlinear: bool,
    source: Option<PreparedSource>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl GradientFlowModel {
    pub fn new(kind: ModelKind, params: ModelParams, grid: Grid2D) -> Result<Self> {
        Self::with_spectral(kind, params, Spectral::new(grid))
    }

    /// Like [`GradientFlowModel::new`] with a caller-configured spectral
    /// toolbox (for example with dealiasing switched on).
    pub fn with_spectral(kind: ModelKind, params: ModelParams, sp: Spectral) -> Result<Self> {
        let p = params;
        positive("C", p.c)?;
        if !p.kappa.is_finite() {
            return Err(Error::InvalidParameter("kappa must be finite".to_string()));
        }
        let (g, l) = match kind {
            ModelKind::AllenCahn => {
                positive("epsilon", p.epsilon)?;
                positive("kappa", p.kappa)?;
                let e2 = p.epsilon * p.epsilon;
                (
                    Symbol::constant(&sp, -1.0),
                    Symbol::new(&sp, |m| e2 * m.k2() + p.kappa),
                )
            }
            ModelKind::CahnHilliard => {
                positive("lambda", p.lambda)?;
                positive("epsilon", p.epsilon)?;
                if p.kappa < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "kappa must be non-negative, got {}",
                        p.kappa
                    )));
                }
                let e2 = p.epsilon * p.epsilon;
                (
                    Symbol::new(&sp, |m| -p.lambda * m.k2()),
                    Symbol::new(&sp, |m| e2 * m.k2() + p.kappa),
                )
            }
            ModelKind::MbeSlopeSelection => {
                positive("lambda", p.lambda)?;
                positive("delta", p.delta)?;
                if p.kappa < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "kappa must be non-negative, got {}",
                        p.kappa
                    )));
                }
                (
                    Symbol::constant(&sp, -p.lambda),
                    Symbol::new(&sp, |m| p.delta * m.k2() * m.k2() + p.kappa * m.k2_grad()),
                )
            }
            ModelKind::MbeNoSlope => {
                positive("lambda", p.lambda)?;
                positive("delta", p.delta)?;
                if p.kappa < 0.125 {
                    return Err(Error::InvalidParameter(format!(
                        "kappa must be at least 1/8 without slope selection, got {}",
                        p.kappa
                    )));
                }
                let l = Symbol::new(&sp, |m| p.delta * m.k2() * m.k2() - p.kappa * m.k2_grad());
                let bad = sp
                    .modes()
                    .iter()
                    .zip(l.values())
                    .any(|(m, &v)| m.k2() > 0.0 && v <= 0.0);
                if bad {
                    return Err(Error::InvalidParameter(format!(
                        "delta |k|^4 - kappa |k|^2 must be positive on every nonzero mode; \
                         increase delta or the domain wavenumbers (delta = {}, kappa = {})",
                        p.delta, p.kappa
                    )));
                }
                (Symbol::constant(&sp, -p.lambda), l)
            }
        };
        let gl = g.mul(&l);
        Ok(Self {
            kind,
            params,
            sp,
            g,
            l,
            gl,
            nonlinear: true,
            source: None,
        })
    }

    /// Allen-Cahn, `G = -1`, `L = kappa - eps^2 Lap`.
    pub fn make_ac(grid: Grid2D, epsilon: f64, kappa: f64, c: f64) -> Result<Self> {
        let params = ModelParams {
            epsilon,
            kappa,
            c,
            ..ModelParams::defaults(ModelKind::AllenCahn)
        };
        Self::new(ModelKind::AllenCahn, params, grid)
    }

    /// Cahn-Hilliard, `G = lambda Lap`, `L = kappa - eps^2 Lap`.
    pub fn make_ch(grid: Grid2D, lambda: f64, epsilon: f64, kappa: f64, c: f64) -> Result<Self> {
        let params = ModelParams {
            lambda,
            epsilon,
            kappa,
            c,
            ..ModelParams::defaults(ModelKind::CahnHilliard)
        };
        Self::new(ModelKind::CahnHilliard, params, grid)
    }

    /// Molecular-beam epitaxy, `G = -lambda`, `L = delta Lap^2 -+ kappa Lap`.
    pub fn make_mbe(
        grid: Grid2D,
        lambda: f64,
        delta: f64,
        kappa: f64,
        c: f64,
        slope_selection: bool,
    ) -> Result<Self> {
        let kind = if slope_selection {
            ModelKind::MbeSlopeSelection
        } else {
            ModelKind::MbeNoSlope
        };
        let params = ModelParams {
            lambda,
            delta,
            kappa,
            c,
            ..ModelParams::defaults(kind)
        };
        Self::new(kind, params, grid)
    }

    /// Attaches a forcing term.
    pub fn with_source(mut self, term: SourceTerm) -> Self {
        let spatial_hats = match &term {
            SourceTerm::General(_) => Vec::new(),
            SourceTerm::Separable(terms) => terms
                .iter()
                .map(|(s, _)| {
                    let f = RealField::from_fn(*self.sp.grid(), |x, y| s(x, y));
                    self.sp.forward(&f)
                })
                .collect(),
        };
        self.source = Some(PreparedSource { term, spatial_hats });
        self
    }

    /// The same model with the nonlinear term switched off (`f = 0`).
    pub fn linear_only(&self) -> Self {
        let mut m = self.clone();
        m.nonlinear = false;
        m
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn grid(&self) -> &Grid2D {
        self.sp.grid()
    }
    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }
    /// Symbol of the mobility `G`.
    pub fn g(&self) -> &Symbol {
        &self.g
    }
    /// Symbol of the linear operator `L`.
    pub fn l(&self) -> &Symbol {
        &self.l
    }
    /// Symbol of `G L`.
    pub fn gl(&self) -> &Symbol {
        &self.gl
    }
    pub fn is_nonlinear(&self) -> bool {
        self.nonlinear
    }
    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }
    pub fn source(&self) -> Option<&SourceTerm> {
        self.source.as_ref().map(|s| &s.term)
    }

    /// Constant subtracted in the modified energy.
    pub fn energy_constant(&self) -> f64 {
        let p = &self.params;
        let area = self.grid().area();
        match self.kind {
            ModelKind::AllenCahn => p.c,
            ModelKind::CahnHilliard | ModelKind::MbeSlopeSelection => {
                (p.kappa * p.kappa + 2.0 * p.kappa + 4.0 * p.c) / 4.0 * area
            }
            ModelKind::MbeNoSlope => p.c * area,
        }
    }

    fn radicand_constant(&self) -> f64 {
        match self.kind {
            ModelKind::AllenCahn => self.params.c,
            _ => self.params.c * self.grid().area(),
        }
    }

    fn cell(&self) -> f64 {
        self.grid().hx() * self.grid().hy()
    }

    fn sqrt_radicand(&self, integral: f64) -> Result<f64> {
        let r = integral + self.radicand_constant();
        if r > 0.0 && r.is_finite() {
            Ok(math::sqrt(r))
        } else {
            Err(Error::NonPositiveRadicand(r))
        }
    }

    /// `W(u)` and `f[u]` from spectral data. For the local models `f` is
    /// `G'(u)/(2W)`; for MBE it is `-div(dG/d grad u)/(2W)`. With the
    /// nonlinearity switched off `f` is zero.
    pub fn w_and_f_hat(&self, u_hat: &Spectrum) -> Result<(f64, Spectrum)> {
        let sp = &self.sp;
        let n = sp.grid().len();
        let mut scratch = sp.zeros_hat();
        let mut out = sp.zeros_hat();
        let p = self.params;
        let w = match self.kind {
            ModelKind::AllenCahn | ModelKind::CahnHilliard => {
                let mut v = vec![0.0; n];
                sp.inverse_into(u_hat, &mut scratch, &mut v);
                let mut integral = 0.0;
                if self.kind == ModelKind::AllenCahn {
                    for x in v.iter_mut() {
                        let u = *x;
                        let t = u * u - 1.0;
                        integral += 0.25 * t * t - 0.5 * p.kappa * u * u;
                        *x = u * u * u - (1.0 + p.kappa) * u;
                    }
                } else {
                    for x in v.iter_mut() {
                        let u = *x;
                        let t = u * u - 1.0 - p.kappa;
                        integral += 0.25 * t * t;
                        *x = t * u;
                    }
                }
                let w = self.sqrt_radicand(self.cell() * integral)?;
                if self.nonlinear {
                    let inv = 1.0 / (2.0 * w);
                    v.iter_mut().for_each(|x| *x *= inv);
                    sp.forward_into(&v, &mut out);
                }
                w
            }
            ModelKind::MbeSlopeSelection | ModelKind::MbeNoSlope => {
                let (gx_hat, gy_hat) = sp.gradient_hat(u_hat);
                let mut gx = vec![0.0; n];
                let mut gy = vec![0.0; n];
                sp.inverse_into(&gx_hat, &mut scratch, &mut gx);
                sp.inverse_into(&gy_hat, &mut scratch, &mut gy);
                let slope = self.kind == ModelKind::MbeSlopeSelection;
                let mut integral = 0.0;
                for (x, y) in gx.iter_mut().zip(gy.iter_mut()) {
                    let s = *x * *x + *y * *y;
                    let (density, factor) = if slope {
                        let d = s - 1.0 - p.kappa;
                        (0.25 * d * d, d)
                    } else {
                        (
                            0.5 * p.kappa * s - 0.5 * math::ln_1p(s),
                            p.kappa - 1.0 / (1.0 + s),
                        )
                    };
                    integral += density;
                    *x *= factor;
                    *y *= factor;
                }
                let w = self.sqrt_radicand(self.cell() * integral)?;
                if self.nonlinear {
                    let inv = -1.0 / (2.0 * w);
                    gx.iter_mut().chain(gy.iter_mut()).for_each(|v| *v *= inv);
                    let mut px = sp.zeros_hat();
                    let mut py = sp.zeros_hat();
                    sp.forward_into(&gx, &mut px);
                    sp.forward_into(&gy, &mut py);
                    sp.divergence_hat(&px, &py, &mut out);
                }
                w
            }
        };
        sp.dealias(&mut out);
        if !out.is_finite() {
            return Err(Error::NonFinite(0));
        }
        Ok((w, out))
    }

    /// `W(u)`.
    pub fn w_value(&self, u: &RealField) -> Result<f64> {
        let p = self.params;
        let integral: f64 = match self.kind {
            ModelKind::AllenCahn => u
                .values()
                .iter()
                .map(|&x| {
                    let t = x * x - 1.0;
                    0.25 * t * t - 0.5 * p.kappa * x * x
                })
                .sum(),
            ModelKind::CahnHilliard => u
                .values()
                .iter()
                .map(|&x| {
                    let t = x * x - 1.0 - p.kappa;
                    0.25 * t * t
                })
                .sum(),
            ModelKind::MbeSlopeSelection | ModelKind::MbeNoSlope => {
                let (gx, gy) = self.sp.gradient(u);
                let slope = self.kind == ModelKind::MbeSlopeSelection;
                gx.values()
                    .iter()
                    .zip(gy.values())
                    .map(|(x, y)| {
                        let s = x * x + y * y;
                        if slope {
                            let d = s - 1.0 - p.kappa;
                            0.25 * d * d
                        } else {
                            0.5 * p.kappa * s - 0.5 * math::ln_1p(s)
                        }
                    })
                    .sum()
            }
        };
        self.sqrt_radicand(self.cell() * integral)
    }

    /// Consistent initial value `q(0) = W(u0)`.
    pub fn q_init(&self, u0: &RealField) -> Result<f64> {
        self.w_value(u0)
    }

    /// The nonlinear stage function `f[u]` on the grid.
    pub fn nonlinear_term(&self, u: &RealField) -> Result<RealField> {
        let (_, f) = self.w_and_f_hat(&self.sp.forward(u))?;
        Ok(self.sp.inverse(&f))
    }

    /// `dG/d grad u / (2W)` for the MBE models, the flux whose negative
    /// divergence is [`GradientFlowModel::nonlinear_term`].
    pub fn nonlinear_flux(&self, u: &RealField) -> Result<Option<(RealField, RealField)>> {
        let p = self.params;
        let slope = match self.kind {
            ModelKind::MbeSlopeSelection => true,
            ModelKind::MbeNoSlope => false,
            _ => return Ok(None),
        };
        let w = self.w_value(u)?;
        let (mut gx, mut gy) = self.sp.gradient(u);
        for (x, y) in gx.values_mut().iter_mut().zip(gy.values_mut().iter_mut()) {
            let s = *x * *x + *y * *y;
            let factor = if slope {
                s - 1.0 - p.kappa
            } else {
                p.kappa - 1.0 / (1.0 + s)
            } / (2.0 * w);
            *x *= factor;
            *y *= factor;
        }
        Ok(Some((gx, gy)))
    }

    /// `(u, L u)_N / 2`.
    pub fn linear_energy_hat(&self, u_hat: &Spectrum) -> f64 {
        0.5 * self.sp.quadratic_hat(&self.l, u_hat)
    }

    /// Free energy evaluated directly on the grid.
    pub fn original_energy(&self, u: &RealField) -> f64 {
        let sp = &self.sp;
        let p = self.params;
        let u_hat = sp.forward(u);
        let cell = self.cell();
        match self.kind {
            ModelKind::AllenCahn | ModelKind::CahnHilliard => {
                let e2 = p.epsilon * p.epsilon;
                let grad = sp.quadratic_hat(&Symbol::new(sp, |m| m.k2()), &u_hat);
                let bulk: f64 = u
                    .values()
                    .iter()
                    .map(|&x| {
                        let t = x * x - 1.0;
                        0.25 * t * t
                    })
                    .sum();
                0.5 * e2 * grad + cell * bulk
            }
            ModelKind::MbeSlopeSelection | ModelKind::MbeNoSlope => {
                let lap2 = sp.quadratic_hat(&Symbol::new(sp, |m| m.k2() * m.k2()), &u_hat);
                let (gx, gy) = sp.gradient(u);
                let slope = self.kind == ModelKind::MbeSlopeSelection;
                let bulk: f64 = gx
                    .values()
                    .iter()
                    .zip(gy.values())
                    .map(|(x, y)| {
                        let s = x * x + y * y;
                        if slope {
                            0.25 * (s - 1.0) * (s - 1.0)
                        } else {
                            -0.5 * math::ln_1p(s)
                        }
                    })
                    .sum();
                0.5 * p.delta * lap2 + cell * bulk
            }
        }
    }

    /// `(u, L u)_N / 2 + q^2 - const`.
    pub fn modified_energy(&self, u: &RealField, q: f64) -> f64 {
        self.linear_energy_hat(&self.sp.forward(u)) + q * q - self.energy_constant()
    }

    pub fn energies(&self, u: &RealField, q: f64) -> Energies {
        Energies {
            modified: self.modified_energy(u, q),
            original: self.original_energy(u),
        }
    }

    /// `(u, 1)_N`
    pub fn mass(&self, u: &RealField) -> f64 {
        u.integral()
    }

    /// `G (L u + 2 q f[u])` without forcing.
    pub fn velocity(&self, u: &RealField, q: f64) -> Result<RealField> {
        let u_hat = self.sp.forward(u);
        let (_, f) = self.w_and_f_hat(&u_hat)?;
        let mut out = u_hat;
        out.mul_symbol(&self.l);
        out.axpy(2.0 * q, &f);
        out.mul_symbol(&self.g);
        Ok(self.sp.inverse(&out))
    }

    /// Spectrum of the forcing at time `t`, if any.
    pub fn source_hat(&self, t: f64) -> Option<Spectrum> {
        let src = self.source.as_ref()?;
        Some(match &src.term {
            SourceTerm::General(h) => {
                let f = RealField::from_fn(*self.sp.grid(), |x, y| h(x, y, t));
                self.sp.forward(&f)
            }
            SourceTerm::Separable(terms) => {
                let mut out = self.sp.zeros_hat();
                for ((_, tf), hat) in terms.iter().zip(&src.spatial_hats) {
                    out.axpy(tf(t), hat);
                }
                out
            }
        })
    }
}
