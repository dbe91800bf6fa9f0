//! Bootstrapped preparation of large photon-number Fock states by iterative
//! beamsplitter fusion.

pub mod analytics;
pub mod baselines;
pub mod combinatorics;
pub mod error;
pub mod eta_opt;
pub mod exact;
pub mod fock_prob;
pub mod growth_sim;
pub mod oracle;
pub mod scalar;

pub use error::{FockError, Result};
pub use fock_prob::{PhotonCount, PrecisionMode, PrecisionPolicy};

/// Double-precision reflectivity.
pub type Reflectivity = fock_prob::Reflectivity<f64>;
/// Exact rational reflectivity.
pub type ExactReflectivity = fock_prob::Reflectivity<num_rational::BigRational>;
pub type SubtractionDistribution = fock_prob::SubtractionDistribution<f64>;
pub type ExactSubtractionDistribution =
    fock_prob::SubtractionDistribution<num_rational::BigRational>;
