//! Computable pieces of ultradifferentiable microlocal analysis: weight
//! sequences, FBI transforms, wavefront estimation, almost-analytic
//! extensions and polynomial symbol calculus.

pub mod almost_analytic;
pub mod distributions;
pub mod error;
pub mod fbi;
pub mod jet;
pub mod quadrature;
pub mod scalar;
pub mod symbols;
pub mod wavefront;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Weights = weights::WeightSequence<f64>;
pub type Weights32 = weights::WeightSequence<f32>;
pub type Dist = distributions::Distribution<f64>;
pub type Dist32 = distributions::Distribution<f32>;
pub type Generator = fbi::EllipticPolynomial<f64>;
pub type Wavefront = wavefront::WavefrontEstimate<f64>;
/// Exact real polynomials.
pub type RatPoly = symbols::Polynomial<num_rational::Rational64>;
/// Exact symbols; complex rationals so that `i*xi` parses.
pub type Symbol = symbols::PolySymbol<num_complex::Complex<num_rational::Rational64>>;
pub type FieldSystem = symbols::VectorFieldSystem<num_rational::Rational64>;
