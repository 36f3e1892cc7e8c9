//! Modified Bernstein operators for functions with an inner singularity.
//!
//! For a weight `w(x) = |x - xi|^alpha` the operator `Bbar_n` replaces `f`
//! near `xi` by a chord blended in with a C^2 smoothstep, then applies the
//! classical Bernstein operator. The crate provides the basis, the bridge
//! construction, the operator and its second derivative, weighted moduli of
//! smoothness, and experiment drivers that check the direct and inverse
//! approximation estimates numerically.
//!
//! The numerical modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the experiments use.

pub mod basis;
pub mod bridge;
pub mod calibration;
pub mod error;
pub mod experiments;
pub mod moduli;
pub mod operator;
pub mod scalar;
pub mod weight;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Weight = weight::SingularWeight<f64>;
pub type Function = weight::TestFunction<f64>;
pub type Nodes = bridge::BridgeNodes<f64>;
pub type Joiner = bridge::LinearJoiner<f64>;
pub type Coefficients = operator::SurrogateCoefficients<f64>;
pub type Modulus = moduli::ModulusQuery<f64>;

pub type Weight32 = weight::SingularWeight<f32>;
pub type Function32 = weight::TestFunction<f32>;
pub type Coefficients32 = operator::SurrogateCoefficients<f32>;
