//! Peak-to-peak error bounds for linear state estimators under stealthy
//! full-sensor attacks.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! * [`linalg`]: dense small-matrix numerics (expm, eigenvalues, Lyapunov and
//!   Riccati solvers).
//! * [`peaknorm`]: induced L∞ (peak-to-peak) and H∞ norms of LTI channels.
//! * [`analysis`]: nominal and attacked error bounds, detector threshold and
//!   the attack-robustness verdict.
//! * [`synthesis`]: Kalman baseline and the β-scalarised H∞ LMI observer design
//!   with an embedded barrier interior-point solver.
//! * [`sim`]: closed-loop RK4 simulation, the safety-filter deactivation
//!   attack, the robust CBF filter and the batch experiment protocols.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
mod error;
pub mod linalg;
pub mod peaknorm;
pub mod sim;
pub mod stats;
pub mod synthesis;

pub use error::{Error, Result};
pub use linalg::Matrix;
