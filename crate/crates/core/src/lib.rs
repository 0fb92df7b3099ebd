//! Analysis toolkit for the open Michaelis-Menten system with substrate
//! inflow,
//!
//! ```text
//! ds/dt = k0 - k1 (eT - c) s + km1 c
//! dc/dt = k1 (eT - c) s - (km1 + k2) c
//! ```
//!
//! covering simulation, quasi-steady-state reductions, slow-manifold
//! computation, validity diagnostics, phase-plane geometry and the
//! behavior at infinity.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod io;
pub mod jet;
pub mod linalg;
pub mod manifold;
pub mod model;
pub mod phase_plane;
pub mod poincare;
pub mod reductions;
pub mod roots;

pub use error::{Error, Result};
pub use integrate::{IntegratorConfig, Trajectory};
pub use model::{RateParameters, State};
