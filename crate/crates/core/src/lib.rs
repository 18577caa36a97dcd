//! Linearly implicit, unconditionally energy-stable time integrators for
//! gradient flows on periodic domains.
//!
//! The crate combines the scalar auxiliary variable (SAV) reformulation with
//! additive Runge-Kutta (ARK) tableaux. It is organised bottom-up:
//!
//! - [`tableaux`]: Butcher tableaux, ARK pairs, order conditions up to order
//!   three, algebraic stability and the built-in method library.
//! - [`spectral`]: periodic 2D grids, FFT-based differential operators and
//!   discrete inner products.
//! - [`models`]: Allen-Cahn, Cahn-Hilliard and molecular-beam-epitaxy flows
//!   with their auxiliary-variable data.
//! - [`integrators`]: the SAV-ARK, SAV-MARK, SAV-MARKII and SAV-RKPC steppers.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; the only thing `std` adds is wall-clock timing in step reports.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod fft;
pub mod integrators;
pub mod linalg;
pub(crate) mod math;
pub mod models;
pub mod spectral;
pub mod tableaux;

pub use error::{Error, Result};
pub use integrators::{integrate, Observer, SavState, Scheme, StepReport, Stepper, Trajectory};
pub use models::{GradientFlowModel, ModelKind, ModelParams};
pub use spectral::{Grid2D, RealField, Spectral, Symbol};
pub use tableaux::{ArkPair, ButcherTableau, MarkIITableaux, Method};
