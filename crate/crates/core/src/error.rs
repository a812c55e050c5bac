use thiserror::Error;

/// Errors raised by the simulator and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigenvalue branch ambiguous at r = {radius} µm: {detail}")]
    BranchAmbiguity { radius: f64, detail: String },

    #[error("soft-core formula evaluated at the anti-blockade pole (|V_R - 2Δ| = {distance} rad/µs)")]
    Resonance { distance: f64 },

    #[error("no interaction range: |V_R(r)| never reaches |Δ| = {detuning} rad/µs")]
    NoRange { detuning: f64 },

    #[error("density error: {0}")]
    Density(String),

    #[error("geometry error: atoms {i} and {j} are {distance} µm apart")]
    Geometry { i: usize, j: usize, distance: f64 },

    #[error("integration error: {0}")]
    Integration(String),

    #[error("integrator failure at event {event}: {detail}")]
    Stiffness { event: usize, detail: String },

    #[error("capacity error: {atoms} atoms exceeds the state-vector limit of {limit}")]
    Capacity { atoms: usize, limit: usize },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("model not identifiable: {0}")]
    Unidentifiable(String),

    #[error("fixed-point search did not converge (last residual {residual:e})")]
    Search { residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
