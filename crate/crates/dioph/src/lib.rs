//! Exact lattice tools, principal angles and explicit constructions for exponents of
//! Diophantine approximation of real subspaces by rational subspaces.

pub mod angles;
pub mod arith;
pub mod constructions;
pub mod error;
pub mod estimation;
pub mod lattice;
pub mod scalar;
pub mod series;
pub mod target;

pub use error::{Error, Result};
pub use scalar::{Field, MpFloat, Real};

pub type Realization32 = angles::SubspaceRealization<f32>;
pub type Realization64 = angles::SubspaceRealization<f64>;
pub type RealizationMp = angles::SubspaceRealization<MpFloat>;
pub type Spectrum32 = angles::AngleSpectrum<f32>;
pub type Spectrum64 = angles::AngleSpectrum<f64>;
pub type SpectrumMp = angles::AngleSpectrum<MpFloat>;
