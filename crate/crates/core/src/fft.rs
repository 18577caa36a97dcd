//! Complex FFT (iterative radix-2, Bluestein for other lengths) and a 2D
//! real-to-complex plan built on top of it.
//!
//! All transforms are unnormalised except [`RealFft2d::inverse`], which
//! divides by `nx * ny`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::math;

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Radix2 { twiddles: Vec<C64>, rev: Vec<u32> },
    Bluestein { m: usize, inner: Box<Fft>, chirp: Vec<C64>, kernel: Vec<C64> },
}

/// A fixed-length complex FFT plan.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    kind: Kind,
}

fn unit(angle: f64) -> C64 {
    C64::new(math::cos(angle), math::sin(angle))
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FFT length must be positive");
        if n == 1 {
            return Self { n, kind: Kind::Trivial };
        }
        if n.is_power_of_two() {
            let bits = n.trailing_zeros();
            let twiddles = (0..n / 2)
                .map(|k| unit(-2.0 * PI * k as f64 / n as f64))
                .collect();
            let rev = (0..n as u32)
                .map(|i| i.reverse_bits() >> (32 - bits))
                .collect();
            return Self { n, kind: Kind::Radix2 { twiddles, rev } };
        }
        let m = (2 * n - 1).next_power_of_two();
        let inner = Box::new(Fft::new(m));
        // k^2 mod 2n keeps the chirp angle small for large k.
        let two_n = 2 * n as u64;
        let chirp: Vec<C64> = (0..n as u64)
            .map(|k| unit(-PI * ((k * k) % two_n) as f64 / n as f64))
            .collect();
        let mut kernel = vec![C64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Self { n, kind: Kind::Bluestein { m, inner, chirp, kernel } }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X_k = sum_j x_j exp(-2 pi i jk/n)`.
    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, false);
    }

    /// In-place unnormalised inverse transform.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [C64], inverse: bool) {
        assert_eq!(data.len(), self.n);
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2 { twiddles, rev } => radix2(data, twiddles, rev, inverse),
            Kind::Bluestein { m, inner, chirp, kernel } => {
                if inverse {
                    data.iter_mut().for_each(|z| *z = z.conj());
                }
                let mut work = vec![C64::new(0.0, 0.0); *m];
                for ((w, x), c) in work.iter_mut().zip(data.iter()).zip(chirp) {
                    *w = x * c;
                }
                inner.forward(&mut work);
                for (w, k) in work.iter_mut().zip(kernel) {
                    *w *= k;
                }
                inner.inverse(&mut work);
                let scale = 1.0 / *m as f64;
                for ((x, w), c) in data.iter_mut().zip(&work).zip(chirp) {
                    *x = w * c * scale;
                }
                if inverse {
                    data.iter_mut().for_each(|z| *z = z.conj());
                }
            }
        }
    }
}

fn radix2(data: &mut [C64], twiddles: &[C64], rev: &[u32], inverse: bool) {
    let n = data.len();
    for i in 0..n {
        let j = rev[i] as usize;
        if i < j {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for chunk in data.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let w = twiddles[k * step];
                let t = *b * if inverse { w.conj() } else { w };
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }
}

/// 2D real-to-complex transform on an `nx x ny` row-major array (x outer,
/// y inner). The spectrum is the half plane `nx x (ny/2 + 1)`.
#[derive(Debug, Clone)]
pub struct RealFft2d {
    nx: usize,
    ny: usize,
    half: Fft,
    col: Fft,
    post: Vec<C64>,
}

impl RealFft2d {
    /// `ny` must be even.
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny >= 2 && ny % 2 == 0, "need nx > 0 and even ny");
        let post = (0..=ny / 2)
            .map(|k| unit(-2.0 * PI * k as f64 / ny as f64))
            .collect();
        Self {
            nx,
            ny,
            half: Fft::new(ny / 2),
            col: Fft::new(nx),
            post,
        }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Length of the y axis in the half spectrum.
    #[inline]
    pub fn nyh(&self) -> usize {
        self.ny / 2 + 1
    }

    pub fn spectrum_len(&self) -> usize {
        self.nx * self.nyh()
    }

    pub fn forward(&self, input: &[f64], out: &mut [C64]) {
        let (nx, ny, nyh) = (self.nx, self.ny, self.nyh());
        assert_eq!(input.len(), nx * ny);
        assert_eq!(out.len(), nx * nyh);
        let h = ny / 2;
        let mut z = vec![C64::new(0.0, 0.0); h];
        for (row, spec) in input.chunks_exact(ny).zip(out.chunks_exact_mut(nyh)) {
            for (zj, pair) in z.iter_mut().zip(row.chunks_exact(2)) {
                *zj = C64::new(pair[0], pair[1]);
            }
            self.half.forward(&mut z);
            for k in 0..=h {
                let zk = z[k % h];
                let zr = z[(h - k) % h].conj();
                let even = (zk + zr) * 0.5;
                let odd = (zk - zr) * C64::new(0.0, -0.5);
                spec[k] = even + self.post[k] * odd;
            }
        }
        self.columns(out, false);
    }

    /// Inverse transform normalised by `1/(nx*ny)`. `spec` is used as scratch
    /// and holds garbage on return.
    pub fn inverse(&self, spec: &mut [C64], out: &mut [f64]) {
        let (nx, ny, nyh) = (self.nx, self.ny, self.nyh());
        assert_eq!(spec.len(), nx * nyh);
        assert_eq!(out.len(), nx * ny);
        self.columns(spec, true);
        let h = ny / 2;
        let scale = 1.0 / (nx * ny) as f64;
        let mut z = vec![C64::new(0.0, 0.0); h];
        for (row, s) in out.chunks_exact_mut(ny).zip(spec.chunks_exact(nyh)) {
            for k in 0..h {
                let xk = s[k];
                let xr = s[h - k].conj();
                let even = xk + xr;
                let odd = (xk - xr) * self.post[k].conj();
                z[k] = even + C64::new(0.0, 1.0) * odd;
            }
            self.half.inverse(&mut z);
            for (pair, zj) in row.chunks_exact_mut(2).zip(&z) {
                pair[0] = zj.re * scale;
                pair[1] = zj.im * scale;
            }
        }
    }

    fn columns(&self, data: &mut [C64], inverse: bool) {
        let (nx, nyh) = (self.nx, self.nyh());
        if nx == 1 {
            return;
        }
        if let Kind::Radix2 { twiddles, rev } = &self.col.kind {
            radix2_rows(data, nyh, twiddles, rev, inverse);
            return;
        }
        let mut col = vec![C64::new(0.0, 0.0); nx];
        for ky in 0..nyh {
            for (ix, c) in col.iter_mut().enumerate() {
                *c = data[ix * nyh + ky];
            }
            if inverse {
                self.col.inverse(&mut col);
            } else {
                self.col.forward(&mut col);
            }
            for (ix, c) in col.iter().enumerate() {
                data[ix * nyh + ky] = *c;
            }
        }
    }
}

/// Radix-2 transform along the outer index of a row-major `n x width`
/// array, applying each butterfly to whole rows.
fn radix2_rows(data: &mut [C64], width: usize, twiddles: &[C64], rev: &[u32], inverse: bool) {
    let n = rev.len();
    for i in 0..n {
        let j = rev[i] as usize;
        if i < j {
            let (a, b) = data.split_at_mut(j * width);
            a[i * width..(i + 1) * width].swap_with_slice(&mut b[..width]);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        for chunk in data.chunks_exact_mut(len * width) {
            let (lo, hi) = chunk.split_at_mut(half * width);
            for k in 0..half {
                let w = twiddles[k * step];
                let w = if inverse { w.conj() } else { w };
                let a = &mut lo[k * width..(k + 1) * width];
                let b = &mut hi[k * width..(k + 1) * width];
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let t = *y * w;
                    *y = *x - t;
                    *x += t;
                }
            }
        }
        len <<= 1;
    }
}
