//! Comparison geometry on constant-curvature model spaces, harmonic growth
//! functionals, eigenfunction extensions and nodal-line experiments.

pub mod eigenextend;
pub mod error;
pub mod harmonic_spectral;
pub mod modelspace;
pub mod nodal2d;
pub mod ode;
pub mod quadrature;
pub mod scalar;
pub mod spharm;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use harmonic_spectral::{HarmonicField, Normalization, ProfileSet, RadialProfile};
pub use modelspace::{ComparisonPair, ModelSpace};
pub use quadrature::SphereRule;
pub use spharm::{SpherePoint, SphericalMode};

pub type ModelSpace64 = ModelSpace<f64>;
pub type ModelSpace32 = ModelSpace<f32>;
pub type ComparisonPair64 = ComparisonPair<f64>;
pub type ComparisonPair32 = ComparisonPair<f32>;
pub type RadialProfile64 = RadialProfile<f64>;
pub type RadialProfile32 = RadialProfile<f32>;
pub type ProfileSet64 = ProfileSet<f64>;
pub type ProfileSet32 = ProfileSet<f32>;
pub type HarmonicField64 = HarmonicField<f64>;
pub type HarmonicField32 = HarmonicField<f32>;
pub type SphereRule64 = SphereRule<f64>;
pub type SphereRule32 = SphereRule<f32>;
pub type SpherePoint64 = SpherePoint<f64>;
pub type SpherePoint32 = SpherePoint<f32>;
