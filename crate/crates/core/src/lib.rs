//! Steering and Bell-nonlocality tools for single-click detection.
//!
//! Alice holds a detector that either clicks or stays silent; Bob holds a
//! qubit. The crate builds the resulting assemblages, locates the detector
//! efficiency below which a local-hidden-state model exists, evaluates the
//! optimal linear steering witness, and handles the two-sided Bell setting.

pub mod bell;
pub mod error;
pub mod lhs;
pub mod linalg;
pub mod quantum;
pub mod sim;
pub mod thresholds;
pub mod tol;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use quantum::{Assemblage, MeasurementFamily, Outcome, SchmidtState};
