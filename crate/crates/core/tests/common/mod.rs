#![allow(dead_code)]

use std::f64::consts::PI;

use savark_core::{GradientFlowModel, Grid2D, ModelKind, ModelParams, RealField};

pub fn ac_model(n: usize) -> GradientFlowModel {
    let grid = Grid2D::square(n, 0.0, 1.0).unwrap();
    GradientFlowModel::new(ModelKind::AllenCahn, ModelParams::defaults(ModelKind::AllenCahn), grid).unwrap()
}

pub fn ac_sine(grid: Grid2D) -> RealField {
    RealField::from_fn(grid, |x, y| 0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
}

pub fn ch_model(n: usize) -> GradientFlowModel {
    let grid = Grid2D::square(n, 0.0, 1.0).unwrap();
    GradientFlowModel::new(ModelKind::CahnHilliard, ModelParams::defaults(ModelKind::CahnHilliard), grid).unwrap()
}

pub fn ch_cos(grid: Grid2D) -> RealField {
    RealField::from_fn(grid, |x, y| {
        let a = (6.0 * PI * x).cos() * (8.0 * PI * y).cos();
        let b = (8.0 * PI * x).cos() * (6.0 * PI * y).cos();
        let c = (2.0 * PI * x - 10.0 * PI * y).cos() * (4.0 * PI * x - 2.0 * PI * y).cos();
        0.05 * (a + b * b + c)
    })
}

pub fn mbe_model(n: usize) -> GradientFlowModel {
    let grid = Grid2D::square(n, 0.0, 2.0 * PI).unwrap();
    GradientFlowModel::new(
        ModelKind::MbeSlopeSelection,
        ModelParams::defaults(ModelKind::MbeSlopeSelection),
        grid,
    )
    .unwrap()
}

pub fn mbe_two_mode(grid: Grid2D) -> RealField {
    RealField::from_fn(grid, |x, y| {
        0.1 * ((3.0 * x).sin() * (5.0 * y).sin() + (5.0 * x).sin() * (5.0 * y).sin())
    })
}

/// Model together with its reference initial data.
pub fn model_and_data(kind: &str, n: usize) -> (GradientFlowModel, RealField) {
    match kind {
        "ac" => {
            let m = ac_model(n);
            let u = ac_sine(*m.grid());
            (m, u)
        }
        "ch" => {
            let m = ch_model(n);
            let u = ch_cos(*m.grid());
            (m, u)
        }
        "mbe" => {
            let m = mbe_model(n);
            let u = mbe_two_mode(*m.grid());
            (m, u)
        }
        _ => panic!("unknown model {kind}"),
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// `R(z) = 1 + z b^T (I - z A)^{-1} 1`, evaluated with a dense solve.
pub fn stability_function(a: &[Vec<f64>], b: &[f64], z: f64) -> f64 {
    let s = b.len();
    let m = nalgebra::DMatrix::from_fn(s, s, |i, j| if i == j { 1.0 } else { 0.0 } - z * a[i][j]);
    let ones = nalgebra::DVector::from_element(s, 1.0);
    let x = m.lu().solve(&ones).expect("nonsingular");
    1.0 + z * b.iter().zip(x.iter()).map(|(b, x)| b * x).sum::<f64>()
}
