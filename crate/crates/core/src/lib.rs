//! Simulation and device-independent certification of quantum memories from
//! two-point measurement statistics.
//!
//! The numerical core is generic over the scalar: complex linear algebra
//! over [`scalar::Real`] (`f64`, `f32`), probability functionals over
//! [`scalar::Prob`], which also admits exact [`num_rational::Rational64`].
//! Concrete aliases for the common choices live at the crate root.

pub mod certify;
pub mod classical;
pub mod compat;
pub mod counts;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod proclib;
pub mod process;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};

use num_rational::Rational64;

pub type Matrix = linalg::ComplexMatrix<f64>;
pub type Vector = linalg::ComplexVector<f64>;
pub type Matrix32 = linalg::ComplexMatrix<f32>;
pub type Process = process::ProcessOperator<f64>;
pub type Instrument = process::MpInstrument<f64>;
pub type Povm = process::BinaryPovm<f64>;
pub type Behavior64 = process::Behavior<f64>;
pub type DoTable64 = process::DoTable<f64>;
pub type ExactBehavior = process::Behavior<Rational64>;
pub type ExactDoTable = process::DoTable<Rational64>;
pub type EffectParams = compat::QubitEffectParams<f64>;
