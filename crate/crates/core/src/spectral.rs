//! Periodic Fourier pseudo-spectral operators on a uniform 2D grid.
//!
//! Fields live on an `nx x ny` grid stored x-outer, y-inner. Spectral data is
//! the half plane produced by a real-to-complex transform, so a [`Spectrum`]
//! has `nx * (ny/2 + 1)` coefficients. All symbols used here are real and even
//! in each wavenumber, which keeps the half-plane representation exact.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fft::RealFft2d;

/// Uniform periodic grid on `[x_l, x_r) x [y_l, y_r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    x_l: f64,
    x_r: f64,
    y_l: f64,
    y_r: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidGrid(alloc::format!(
                "mode counts must be positive and even, got {nx} x {ny}"
            )));
        }
        let finite = [x.0, x.1, y.0, y.1].iter().all(|v| v.is_finite());
        if !finite || x.0 >= x.1 || y.0 >= y.1 {
            return Err(Error::InvalidGrid(alloc::format!(
                "bad domain [{}, {}] x [{}, {}]",
                x.0, x.1, y.0, y.1
            )));
        }
        Ok(Self {
            nx,
            ny,
            x_l: x.0,
            x_r: x.1,
            y_l: y.0,
            y_r: y.1,
        })
    }

    /// `n x n` grid on the square `[a, b)^2`.
    pub fn square(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(n, n, (a, b), (a, b))
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }
    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn x_bounds(&self) -> (f64, f64) {
        (self.x_l, self.x_r)
    }
    pub fn y_bounds(&self) -> (f64, f64) {
        (self.y_l, self.y_r)
    }
    pub fn lx(&self) -> f64 {
        self.x_r - self.x_l
    }
    pub fn ly(&self) -> f64 {
        self.y_r - self.y_l
    }
    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx() / self.nx as f64
    }
    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly() / self.ny as f64
    }
    /// |Omega|
    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_l + j as f64 * self.hx()
    }
    #[inline]
    pub fn y(&self, k: usize) -> f64 {
        self.y_l + k as f64 * self.hy()
    }

    fn wavenumber(index: usize, n: usize, length: f64) -> f64 {
        let signed = if index <= n / 2 {
            index as f64
        } else {
            index as f64 - n as f64
        };
        2.0 * PI * signed / length
    }

    /// Wavenumbers along x in standard DFT order; the Nyquist entry is positive.
    pub fn kx(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|j| Self::wavenumber(j, self.nx, self.lx()))
            .collect()
    }

    pub fn ky(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|k| Self::wavenumber(k, self.ny, self.ly()))
            .collect()
    }
}

/// Real grid function, values indexed `(j, k) -> values[j * ny + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: (grid.nx(), grid.ny()),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x_j, y_k)` on the grid.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.nx() {
            let x = grid.x(j);
            for k in 0..grid.ny() {
                values.push(f(x, grid.y(k)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.grid.ny() + k]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.assert_same_grid(other);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Self) {
        self.assert_same_grid(x);
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Discrete integral `(u, 1)_N`.
    pub fn integral(&self) -> f64 {
        self.grid.hx() * self.grid.hy() * self.values.iter().sum::<f64>()
    }

    pub fn assert_same_grid(&self, other: &Self) {
        assert!(
            self.grid == other.grid,
            "fields live on different grids: {:?} vs {:?}",
            self.grid,
            other.grid
        );
    }
}

/// One entry of the half-plane wavenumber table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub kx: f64,
    pub ky: f64,
    /// First-derivative wavenumbers, zero on Nyquist indices.
    pub kx_d: f64,
    pub ky_d: f64,
}

impl Mode {
    /// |k|^2, Nyquist retained.
    #[inline]
    pub fn k2(&self) -> f64 {
        self.kx * self.kx + self.ky * self.ky
    }

    /// |k|^2 built from the first-derivative wavenumbers.
    #[inline]
    pub fn k2_grad(&self) -> f64 {
        self.kx_d * self.kx_d + self.ky_d * self.ky_d
    }
}

/// Real Fourier multiplier evaluated on the half-plane wavenumber table.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    nx: usize,
    nyh: usize,
    values: Vec<f64>,
}

impl Symbol {
    pub fn new(sp: &Spectral, f: impl Fn(Mode) -> f64) -> Self {
        Self {
            nx: sp.grid.nx(),
            nyh: sp.nyh,
            values: sp.modes.iter().map(|&m| f(m)).collect(),
        }
    }

    pub fn constant(sp: &Spectral, c: f64) -> Self {
        Self::new(sp, |_| c)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iky: usize) -> f64 {
        self.values[ix * self.nyh + iky]
    }

    /// Pointwise product of two symbols.
    pub fn mul(&self, other: &Symbol) -> Symbol {
        assert_eq!(self.values.len(), other.values.len());
        Symbol {
            nx: self.nx,
            nyh: self.nyh,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Symbol {
        Symbol {
            nx: self.nx,
            nyh: self.nyh,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Half-plane Fourier coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    data: Vec<C64>,
}

impl Spectrum {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![C64::new(0.0, 0.0); len],
        }
    }
    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `self += a * x`
    #[inline]
    pub fn axpy(&mut self, a: f64, x: &Spectrum) {
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += v * a;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    }

    /// Multiplies every coefficient by the matching symbol value.
    pub fn mul_symbol(&mut self, s: &Symbol) {
        for (v, &m) in self.data.iter_mut().zip(&s.values) {
            *v *= m;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Spectral toolbox bound to a grid: transform plan plus wavenumber tables.
#[derive(Debug, Clone)]
pub struct Spectral {
    grid: Grid2D,
    nyh: usize,
    plan: RealFft2d,
    modes: Vec<Mode>,
    /// Parseval multiplicity of each half-plane column (1 or 2).
    weights: Vec<f64>,
    dealias: Option<Vec<bool>>,
}

impl Spectral {
    pub fn new(grid: Grid2D) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let nyh = ny / 2 + 1;
        let kx = grid.kx();
        let ky = grid.ky();
        let mut modes = Vec::with_capacity(nx * nyh);
        for (ix, &kxv) in kx.iter().enumerate() {
            for (iky, &kyv) in ky.iter().take(nyh).enumerate() {
                modes.push(Mode {
                    kx: kxv,
                    ky: kyv,
                    kx_d: if ix == nx / 2 { 0.0 } else { kxv },
                    ky_d: if iky == ny / 2 { 0.0 } else { kyv },
                });
            }
        }
        let weights = (0..nyh)
            .map(|k| if k == 0 || k == ny / 2 { 1.0 } else { 2.0 })
            .collect();
        Self {
            grid,
            nyh,
            plan: RealFft2d::new(nx, ny),
            modes,
            weights,
            dealias: None,
        }
    }

    /// Enables or disables the 2/3-rule filter applied by [`Spectral::dealias`].
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on.then(|| {
            let (nx, ny) = (self.grid.nx(), self.grid.ny());
            let mut keep = Vec::with_capacity(nx * self.nyh);
            for ix in 0..nx {
                let sx = if ix <= nx / 2 { ix } else { nx - ix };
                for iky in 0..self.nyh {
                    keep.push(3 * sx < nx && 3 * iky < ny);
                }
            }
            keep
        });
        self
    }

    pub fn dealias_enabled(&self) -> bool {
        self.dealias.is_some()
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn spectrum_len(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn zeros_hat(&self) -> Spectrum {
        Spectrum::zeros(self.spectrum_len())
    }

    fn check(&self, u: &RealField) {
        assert!(
            *u.grid() == self.grid,
            "field grid {:?} does not match spectral grid {:?}",
            u.grid(),
            self.grid
        );
    }

    pub fn forward(&self, u: &RealField) -> Spectrum {
        self.check(u);
        let mut out = self.zeros_hat();
        self.plan.forward(u.values(), &mut out.data);
        out
    }

    pub fn forward_into(&self, u: &[f64], out: &mut Spectrum) {
        self.plan.forward(u, &mut out.data);
    }

    pub fn inverse(&self, u: &Spectrum) -> RealField {
        let mut scratch = u.clone();
        let mut values = vec![0.0; self.grid.len()];
        self.plan.inverse(&mut scratch.data, &mut values);
        RealField::from_vec_unchecked(self.grid, values)
    }

    /// Inverse transform reusing caller buffers; `scratch` is overwritten.
    pub fn inverse_into(&self, u: &Spectrum, scratch: &mut Spectrum, out: &mut [f64]) {
        scratch.data.copy_from_slice(&u.data);
        self.plan.inverse(&mut scratch.data, out);
    }

    /// Zeroes modes outside the 2/3 band when dealiasing is enabled.
    pub fn dealias(&self, u: &mut Spectrum) {
        if let Some(keep) = &self.dealias {
            for (v, &k) in u.data.iter_mut().zip(keep) {
                if !k {
                    *v = C64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Laplacian symbol `-|k|^2`.
    pub fn laplacian_symbol(&self) -> Symbol {
        Symbol::new(self, |m| -m.k2())
    }

    pub fn apply_symbol(&self, s: &Symbol, u: &RealField) -> RealField {
        let mut hat = self.forward(u);
        hat.mul_symbol(s);
        self.inverse(&hat)
    }

    pub fn laplacian(&self, u: &RealField) -> RealField {
        self.apply_symbol(&self.laplacian_symbol(), u)
    }

    pub fn gradient_hat(&self, u: &Spectrum) -> (Spectrum, Spectrum) {
        let mut gx = u.clone();
        let mut gy = u.clone();
        for ((x, y), m) in gx.data.iter_mut().zip(gy.data.iter_mut()).zip(&self.modes) {
            *x *= C64::new(0.0, m.kx_d);
            *y *= C64::new(0.0, m.ky_d);
        }
        (gx, gy)
    }

    /// Spectral divergence written into `out`.
    pub fn divergence_hat(&self, px: &Spectrum, py: &Spectrum, out: &mut Spectrum) {
        for (((o, x), y), m) in out
            .data
            .iter_mut()
            .zip(&px.data)
            .zip(&py.data)
            .zip(&self.modes)
        {
            *o = x * C64::new(0.0, m.kx_d) + y * C64::new(0.0, m.ky_d);
        }
    }

    pub fn gradient(&self, u: &RealField) -> (RealField, RealField) {
        let (gx, gy) = self.gradient_hat(&self.forward(u));
        (self.inverse(&gx), self.inverse(&gy))
    }

    pub fn divergence(&self, px: &RealField, py: &RealField) -> RealField {
        let mut out = self.zeros_hat();
        self.divergence_hat(&self.forward(px), &self.forward(py), &mut out);
        self.inverse(&out)
    }

    /// `(u, v)_N = hx hy sum u_jk v_jk`
    pub fn inner(&self, u: &RealField, v: &RealField) -> f64 {
        self.check(u);
        self.check(v);
        let s: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
        self.grid.hx() * self.grid.hy() * s
    }

    pub fn norm_l2(&self, u: &RealField) -> f64 {
        crate::math::sqrt(self.inner(u, u))
    }

    pub fn norm_inf(&self, u: &RealField) -> f64 {
        u.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// The discrete inner product evaluated from half-plane coefficients.
    pub fn inner_hat(&self, a: &Spectrum, b: &Spectrum) -> f64 {
        let nyh = self.nyh;
        let mut s = 0.0;
        for (ra, rb) in a.data.chunks_exact(nyh).zip(b.data.chunks_exact(nyh)) {
            for ((x, y), w) in ra.iter().zip(rb).zip(&self.weights) {
                s += w * (x.re * y.re + x.im * y.im);
            }
        }
        let g = &self.grid;
        g.hx() * g.hy() / (g.len() as f64) * s
    }

    /// `sum_k sigma(k) |a_k|^2` scaled like [`Spectral::inner_hat`], i.e.
    /// `(a, Sigma a)_N`.
    pub fn quadratic_hat(&self, s: &Symbol, a: &Spectrum) -> f64 {
        let nyh = self.nyh;
        let mut acc = 0.0;
        for (ra, rs) in a.data.chunks_exact(nyh).zip(s.values.chunks_exact(nyh)) {
            for ((x, sv), w) in ra.iter().zip(rs).zip(&self.weights) {
                acc += w * sv * x.norm_sqr();
            }
        }
        let g = &self.grid;
        g.hx() * g.hy() / (g.len() as f64) * acc
    }

    /// `(u, 1)_N` from the zero mode.
    pub fn integral_hat(&self, a: &Spectrum) -> f64 {
        self.grid.hx() * self.grid.hy() * a.data[0].re
    }

    /// Solves `(I - alpha Sigma) w = r` mode by mode.
    pub fn solve_shifted(&self, s: &Symbol, alpha: f64, r: &RealField) -> Result<RealField> {
        let mut hat = self.forward(r);
        for (v, &sv) in hat.data.iter_mut().zip(&s.values) {
            let d = 1.0 - alpha * sv;
            if d.abs() < 1e-14 {
                return Err(Error::SingularSolve(d));
            }
            *v /= d;
        }
        Ok(self.inverse(&hat))
    }
}
