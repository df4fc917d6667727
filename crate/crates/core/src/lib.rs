//! Reconstruction of a harmonic potential on a spherical cap from satellite
//! and ground data, and selection of a near-optimal reconstruction among many
//! candidates from noisy discrete ground samples alone.
//!
//! The numerical core is generic over the scalar type (see [`Real`]); the
//! aliases at the crate root fix it to `f64` or `f32`. The experiment harness
//! in [`experiments`] works in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chooser;
pub mod error;
pub mod experiments;
pub mod field;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod sphharm;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SphCoeffsF64 = sphharm::SphCoeffs<f64>;
pub type SphCoeffsF32 = sphharm::SphCoeffs<f32>;
pub type UnitDirectionF64 = sphharm::UnitDirection<f64>;
pub type CapGeometryF64 = quadrature::CapGeometry<f64>;
pub type QuadratureRuleF64 = quadrature::QuadratureRule<f64>;
pub type QuadratureRuleF32 = quadrature::QuadratureRule<f32>;
pub type DiscreteFieldF64 = field::DiscreteField<f64>;
pub type DiscreteFieldF32 = field::DiscreteField<f32>;
pub type CandidateParamsF64 = kernels::CandidateParams<f64>;
pub type KernelSymbolsF64 = kernels::KernelSymbols<f64>;
pub type SelectionReportF64 = chooser::SelectionReport<f64>;
pub type SelectionReportF32 = chooser::SelectionReport<f32>;
