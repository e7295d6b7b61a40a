//! Sensitivity analysis of a lossy Mach-Zehnder interferometer with a
//! variable input beam splitter, fed by squeezed vacuum and coherent light.

pub mod allocator;
pub mod config;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod interferometer;
pub mod qcrb;
pub mod search;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use gaussian::{Channel, QuadratureState};
pub use interferometer::{InterferometerConfig, Method, SensitivityReport};
