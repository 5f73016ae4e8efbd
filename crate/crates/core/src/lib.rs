//! Finite-volume simulation and verification tools for the one-dimensional
//! degenerate Keller–Segel system
//!
//! ```text
//! u_t = ( (u+ε)^m )_xx - ( (u+ε)^(q-2) u v_x )_x,   0 = v_xx - γ v + u,
//! ```
//!
//! with a porous-medium mode (drift off) compared against Barenblatt solutions.

pub mod analysis;
pub mod elliptic;
pub mod error;
pub mod export;
pub mod harness;
pub mod interface;
pub mod model;
pub mod numeric;
pub mod pme;
pub mod stepper;

pub use error::{Aborted, Error, Result};
pub use harness::{ClaimId, HarnessOptions, Status, Tolerances, VerificationReport};
pub use interface::{InterfacePair, SignConvention};
pub use model::{
    Grid1D, Hole, InitialData, ScalarField, Scenario, SolverState, Trajectory, WindowStatus,
};
