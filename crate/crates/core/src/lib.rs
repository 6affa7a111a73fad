//! Desk-scale relativistic Vlasov-Maxwell lab.
//!
//! Regularized particles carry the distribution function; fields come from the
//! retarded light-cone representation (homogeneous Kirchhoff part plus the
//! velocity and acceleration terms); a Picard loop couples the two. Diagnostics
//! deposit moments on a grid and check every inequality of the continuation
//! argument as a margin that must stay non-negative.
//!
//! Units: Heaviside-Lorentz with c = m = q = 1, so `div E = rho`.

// `!(x >= 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initial_field;
pub mod kernels;
pub mod kinematics;
pub mod lightcone;
pub mod manufactured;
pub mod model;
pub mod picard;
pub mod quadrature;
pub mod retarded;
pub mod scenario;
pub mod simulation;
pub mod spherical_mean;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{
    FieldDecomposition, FieldSample, Mollifier, Momentum3, Particle, Position3, UnitVector3,
    Velocity3,
};
