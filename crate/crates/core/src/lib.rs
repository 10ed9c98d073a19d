//! Continuous g-fusion frames on finite-dimensional spaces with a quadrature
//! measure: assembly of the frame operator, K-frame bounds, resolutions of the
//! identity, atomic decompositions, pair operators and direct sums.

pub mod atomic;
pub mod campaign;
pub mod direct_sum;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod pair;
pub mod par;
pub mod random;
pub mod report;
pub mod resolution;
pub mod rng;
pub mod system;
pub mod tolerances;

pub use error::{Error, Result};
pub use linalg::{Operator, Subspace};
pub use measure::{CoefficientField, MeasureNodes, Node};
pub use report::{Provenance, VerificationReport};
pub use system::{FrameBounds, FrameClass, FusionTerm, GFusionSystem};
