//! Periodic and brake billiard trajectories in smooth convex bodies.
//!
//! Trajectories are found as limits of critical points of a penalized
//! loop-space Lagrangian `E − ε∫U_δ` as `ε → 0`, cross-checked against
//! an exact reflection-law shooting solver and against variational
//! bounds on the length of the shortest periodic trajectory.

pub mod error;
pub mod exact;
pub mod geometry;
pub mod harness;
mod lp;
pub mod loopspace;
pub mod penalty;
pub mod saddle;
pub mod trajectory;
pub mod variational;

pub use error::{Error, Result};
pub use geometry::{minkowski_sum, Body, Point, Shape};
