//! Bell inequalities and distillability for N-qubit systems.
//!
//! The crate is organized bottom-up:
//!
//! - [`qlinalg`]: dense complex matrices, partial transposition, qubit projections.
//! - [`states`]: GHZ-basis utilities and the state families used throughout.
//! - [`bell`]: MBK, Uffink, Svetlichny and spectral-form (WWZB) Bell operators.
//! - [`distill`]: theta-basis weights, partial-transpose block analysis and the
//!   distillation protocols built on top of them.
//! - [`bounds`]: overlap-versus-violation bounds and threshold scans.
//! - [`optimize`]: derivative-free maximization over measurement settings and local unitaries.
//!
//! Qubit 1 is the most significant bit of a computational-basis index everywhere.

#![forbid(unsafe_code)]

pub mod bell;
pub mod bounds;
pub mod distill;
mod error;
pub mod optimize;
pub mod qlinalg;
pub mod states;

pub use error::{Error, Result};
pub use qlinalg::{ComplexMatrix, DensityMatrix, QubitSubset, C64};

pub use bell::{BellOperator, BellValue, Family, MeasurementSettings, SpectralData};
pub use distill::{BlockVerdict, DistillReport, ThetaWeights};
pub use optimize::OptimizeOptions;
pub use states::GhzWeights;
