//! Discrete-time complex Lorenz map: orbit generation, equilibrium stability,
//! Lyapunov spectra, regime classification, and a scenario harness for batch
//! reproduction runs.

pub mod classifier;
pub mod cubic;
pub mod equilibria;
pub mod error;
pub mod experiments;
pub mod lyapunov;
pub mod map;
pub mod scenario;
pub mod types;

pub use error::{Error, Result};
pub use types::{ComplexScalar, OrbitConfig, State3, SystemParams};
