//! Numerical convex geometry: oracle-based bodies, log-concave measures,
//! positions, body constants, Ball's body, Minkowski content of fibers,
//! waist-inequality checks and convex equipartitions.

pub mod ballbody;
pub mod bodies;
pub mod constants;
pub mod error;
pub mod linalg;
pub mod localization;
pub mod maps;
pub mod measures;
pub mod positions;
pub mod quad;
pub mod report;
pub mod rng;
pub mod special;
pub mod suite;
pub mod waist;

pub use bodies::{ConvexBody, EllipsoidResult, Flat, HPolytope};
pub use error::{Error, Result};
pub use measures::{MCEstimate, MeasureModel, Points};
pub use report::{CheckRecord, Quantity, Status, VerificationReport};
