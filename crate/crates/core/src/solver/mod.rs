//! Explicit conservative finite-volume solver for orthotropic p-Laplacian
//! type equations `u_t = Σ_i ∂_i A_i(x, u, ∂_i u)` on a box.

mod field;
mod flux;
mod grid;
mod initial;
mod run;
mod scheme;
pub mod snapshot;

use thiserror::Error;

pub use field::ScalarField;
pub use flux::{
    envelope_check, signed_power, EnvelopeReport, EnvelopeViolation, Flux, FluxKind, FluxModel,
};
pub use grid::{Grid, IndexBox, DEFAULT_MAX_CELLS};
pub use initial::{make_initial_datum, InitialShape};
pub use run::{run, Cadence, RunConfig, Trajectory, FLUSH_RELATIVE};
pub use scheme::{
    stable_dt, step_explicit, Evolution, StepAudit, Stepper, SINGULAR_GRADIENT_FLOOR,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("support reached the boundary collar at t = {time}")]
    SupportReachedBoundary { time: f64 },
    #[error("non-finite value produced at t = {time}")]
    Instability { time: f64 },
    #[error("step budget of {steps} exhausted at t = {time}")]
    StepBudget { time: f64, steps: u64 },
    #[error("snapshot I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Format(String),
}

impl SolverError {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SolverError::SupportReachedBoundary { .. }
                | SolverError::Instability { .. }
                | SolverError::StepBudget { .. }
        )
    }
}
