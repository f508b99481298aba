use thiserror::Error;

use crate::instant::InstantSolution;

/// Errors raised while evaluating the system model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The device cannot keep enough energy for next-slot sensing even when
    /// harvesting for the whole data slot.
    #[error("device {device} can never afford transmission (minimum harvesting ratio {ratio:.6} >= 1)")]
    InfeasibleDevice { device: usize, ratio: f64 },

    #[error("transmit power is undefined at harvesting ratio {mu}")]
    UndefinedPower { mu: f64 },

    #[error("negative transmission energy {energy:e} J at harvesting ratio {mu}")]
    InfeasibleMu { mu: f64, energy: f64 },

    #[error("energy-consumption denominator {value:e} J is not positive for device {device}")]
    DegenerateDenominator { device: usize, value: f64 },
}

/// Errors raised by the solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),

    /// The heuristic placed every channel but could not satisfy all
    /// constraints. The best-effort solution is attached.
    #[error("scenario is infeasible for the heuristic: {}", .0.report.feasibility.summary())]
    InfeasibleScenario(Box<InstantSolution>),

    #[error("instance too large: {assignments} assignments exceed the cap of {cap}")]
    InstanceTooLarge { assignments: String, cap: u64 },

    #[error("no feasible solution among {enumerated} assignments")]
    NoFeasibleSolution { enumerated: u64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("reports refer to different scenarios ({left} vs {right})")]
    MismatchedScenario { left: String, right: String },
}
