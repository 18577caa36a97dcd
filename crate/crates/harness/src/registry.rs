//! Named initial conditions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use savark_core::models::manufactured_ch_exact;
use savark_core::{Grid2D, ModelKind, RealField};

use crate::error::{HarnessError, Result};

pub const NAMES: [&str; 5] = ["ac_sine", "ch_cos", "mbe_two_mode", "manufactured_ch", "random"];

/// Domain each initial condition is periodic on, as `(lo, hi)` per axis.
pub fn default_domain(initial: &str) -> Result<(f64, f64)> {
    match initial {
        "ac_sine" | "ch_cos" | "random" => Ok((0.0, 1.0)),
        "mbe_two_mode" | "manufactured_ch" => Ok((0.0, 2.0 * PI)),
        _ => Err(unknown(initial)),
    }
}

pub fn default_for(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::AllenCahn => "ac_sine",
        ModelKind::CahnHilliard => "ch_cos",
        ModelKind::MbeSlopeSelection | ModelKind::MbeNoSlope => "mbe_two_mode",
    }
}

fn unknown(name: &str) -> HarnessError {
    HarnessError::config(format!(
        "unknown initial condition `{name}`; available: {}",
        NAMES.join(", ")
    ))
}

/// `0.1 sin(2 pi x) sin(2 pi y)`.
pub fn ac_sine(grid: Grid2D) -> RealField {
    RealField::from_fn(grid, |x, y| 0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
}

/// Sum of three cosine products, scaled to amplitude 0.05.
pub fn ch_cos(grid: Grid2D) -> RealField {
    RealField::from_fn(grid, |x, y| {
        let a = (6.0 * PI * x).cos() * (8.0 * PI * y).cos();
        let b = (8.0 * PI * x).cos() * (6.0 * PI * y).cos();
        let c = (2.0 * PI * x - 10.0 * PI * y).cos() * (4.0 * PI * x - 2.0 * PI * y).cos();
        0.05 * (a + b * b + c)
    })
}

/// `0.1 (sin 3x sin 5y + sin 5x sin 5y)`.
pub fn mbe_two_mode(grid: Grid2D) -> RealField {
    RealField::from_fn(grid, |x, y| {
        0.1 * ((3.0 * x).sin() * (5.0 * y).sin() + (5.0 * x).sin() * (5.0 * y).sin())
    })
}

/// Smooth random field: eight low Fourier modes with amplitudes below 0.1.
pub fn random(grid: Grid2D, seed: u64) -> RealField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<[f64; 4]> = (0..8)
        .map(|_| {
            [
                rng.gen_range(-3i32..=3) as f64,
                rng.gen_range(-3i32..=3) as f64,
                rng.gen_range(-0.1..0.1),
                rng.gen_range(0.0..2.0 * PI),
            ]
        })
        .collect();
    let (lx, ly) = (grid.lx(), grid.ly());
    let (x0, y0) = (grid.x_bounds().0, grid.y_bounds().0);
    RealField::from_fn(grid, |x, y| {
        terms
            .iter()
            .map(|&[p, q, a, ph]| a * (2.0 * PI * (p * (x - x0) / lx + q * (y - y0) / ly) + ph).cos())
            .sum()
    })
}

pub fn initial_field(name: &str, grid: Grid2D, seed: u64) -> Result<RealField> {
    Ok(match name {
        "ac_sine" => ac_sine(grid),
        "ch_cos" => ch_cos(grid),
        "mbe_two_mode" => mbe_two_mode(grid),
        "manufactured_ch" => manufactured_ch_exact(grid, 0.0),
        "random" => random(grid, seed),
        _ => return Err(unknown(name)),
    })
}
