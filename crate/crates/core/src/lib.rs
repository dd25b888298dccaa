//! Weighted semi-inner products, weighted contraction rates and contraction
//! certificates for finite-dimensional discretizations of ODEs and PDEs.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`] and [`sip`]: grid functions, ℓ^p and discrete Sobolev norms and
//!   their right-Gateaux semi-inner products.
//! - [`linalg`] and [`measures`]: linear operators, matrix measures and weighted
//!   contraction rates.
//! - [`weights`]: weight families Θ(t,u) and the radius-b rate optimizer.
//! - [`flows`]: integration, variational equations, growth-bound checks and
//!   Lyapunov exponents.
//! - [`geometry`]: subspace, submanifold, symmetry, limit-cycle and
//!   phase-locking certifiers.
//! - [`pde`]: semi-discretized PDE experiments.

pub mod error;
pub mod flows;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod measures;
pub mod pde;
pub mod report;
pub mod sampler;
pub mod sip;
pub mod systems;
pub mod weights;

pub use error::{Error, Result};
pub use flows::{Trajectory, VectorField};
pub use grid::{Boundary, Grid, GridFunction};
pub use linalg::LinearOp;
pub use measures::{Method, RateEstimate};
pub use report::{ContractionReport, HypothesisCheck};
pub use sampler::StateSampler;
pub use sip::{NormKind, NormSpec, Space};
pub use weights::WeightFamily;
