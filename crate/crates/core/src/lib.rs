//! Monte Carlo toolkit for random polytopes inscribed in convex bodies.
//!
//! Points are drawn on the boundary of a convex body `K` with a positive
//! density; their convex hull `K_n` is the random polytope. The crate
//! estimates the intrinsic-volume deficit `V_j(K) - E V_j(K_n)` by three
//! independent routes and evaluates the curvature functionals that govern
//! its asymptotics.

pub mod bodies;
pub mod error;
pub mod estimators;
pub mod functionals;
pub mod hull;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod selftest;
pub mod stats;

pub use bodies::{Body, BodyKind, BoundaryPoint, CurvatureEval};
pub use error::{Error, Result};
pub use estimators::{Estimate, Route};
pub use linalg::{Frame, VecD};
pub use rng::SeedSpec;
pub use sampling::{Density, DensitySpec};
