//! Detuned nonlinear Jaynes-Cummings dynamics of a trapped ion.
//!
//! The crate evolves the motional state of an ion driven on a vibrational
//! sideband by a quantized pump field, evaluates quadrature-squeezing,
//! sub-Poisson and anomalous-correlation nonclassicality criteria, computes
//! regularized P functions, and simulates a probe-based reconstruction of the
//! vibronic state from no-fluorescence statistics.
//!
//! Units: ħ = 1, frequencies in units of the coupling |κ|, times in 1/|κ|.

pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod measurement;
pub mod phasespace;

pub use criteria::{c_ac, c_sq, criteria_scan, mandel_q, CriteriaResult};
pub use dynamics::{oracle_evolve, reduced_rho, ModelParams, MotionalInput, Propagator};
pub use error::{Error, Result};
pub use fock::{MomentSet, MotionalDensityMatrix, Truncation};
