//! Output regulation for a first-order hyperbolic heat-exchanger model.
//!
//! The plant is `x_t = −x_z + g(z) x + b(z) u + b_d(z) d` on `z ∈ [0, 1]` with
//! an inflow boundary `x(0, t) = 0`. A finite-dimensional exosystem generates
//! the disturbance `d` and the reference `y_r`. The crate covers the pieces
//! needed to design and test a regulator for it:
//!
//! * [`plant`]: the upwind/Euler solver and open-loop simulation,
//! * [`exosystem`]: the skew-symmetric signal generator and its eigenpairs,
//! * [`spectral`]: resolvent actions and transfer values,
//! * [`synth`]: feedforward gain, regulator equations and observer gain,
//! * [`closed_loop`]: plant + regulator co-simulation and tracking metrics.

pub mod closed_loop;
pub mod error;
pub mod exosystem;
pub mod grid;
pub mod linalg;
mod ode;
pub mod plant;
pub mod spectral;
pub mod synth;
pub mod trace;

pub use closed_loop::{
    regulator_step, simulate_disturbed, simulate_feedforward, simulate_output_feedback, tracking_metrics,
    windowed_max_error, FeedforwardSetup, RegulatorStep, TrackingMetrics,
};
pub use error::{Error, Result};
pub use exosystem::{EigenPair, ExoSystem};
pub use grid::{Profile, Scalar, SpatialGrid, C64};
pub use plant::{plant_step, simulate_open_loop, PlantConfig, PlantState, SimOptions};
pub use spectral::{plant_transfer, resolvent_apply, transfer_value, unit_transfer, TransferValue};
pub use synth::{
    assemble_params, choose_ly, pi0_residual, pi_residual, separation_residual, solve_gamma, solve_pi, solve_pi0,
    synthesize, RegulatorParams, SynthOptions,
};
pub use trace::{Sample, SimTrace, Snapshot};

pub use nalgebra;
