//! Convex localization for ℓ = 1: dyadic equipartitions by halfspace
//! bisection, peak-point witnesses and the barycentric Spingarn bound.

mod partition;
mod peak;
mod spingarn;

pub use partition::*;
pub use peak::*;
pub use spingarn::*;

#[cfg(test)]
mod tests;
