use serde::{Deserialize, Serialize};

use crate::allocation::Allocation;
use crate::error::ModelError;
use crate::objective::{
    check_feasibility_with, evaluate_with, tail_probability, FeasibilityReport, ObjectiveBreakdown,
};
use crate::scenario::Scenario;
use crate::throughput::{bits_for_rate, user_rate, RateContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Instant,
    Oracle,
    OracleStrict,
}

/// Outcome of one solve, shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub scenario_id: String,
    pub objective: ObjectiveBreakdown,
    /// bits/s per user
    pub rates: Vec<f64>,
    pub mu: Vec<f64>,
    /// Unweighted `P(X_k >= delivered bits)` per user.
    pub tail_probability: Vec<f64>,
    pub feasibility: FeasibilityReport,
    pub wall_clock_s: f64,
    /// Objective change across one harvesting-ratio grid step, as a
    /// percentage of the total. Only set by grid-based solvers.
    pub grid_tolerance_pct: Option<f64>,
    pub assignments_enumerated: Option<u64>,
}

impl SolveReport {
    pub fn build(
        solver: SolverKind,
        scenario: &Scenario,
        ctx: &RateContext,
        allocation: &Allocation,
        wall_clock_s: f64,
    ) -> Result<Self, ModelError> {
        let objective = evaluate_with(scenario, ctx, allocation)?;
        let rates: Vec<f64> = (0..scenario.num_devices()).map(|k| user_rate(scenario, ctx, allocation, k)).collect();
        let tail_probability = rates
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let bits = bits_for_rate(scenario, r, allocation.mu[k]);
                tail_probability(&scenario.devices[k].buffer, bits)
            })
            .collect();
        Ok(Self {
            solver,
            scenario_id: scenario.fingerprint(),
            objective,
            rates,
            mu: allocation.mu.clone(),
            tail_probability,
            feasibility: check_feasibility_with(scenario, ctx, allocation),
            wall_clock_s,
            grid_tolerance_pct: None,
            assignments_enumerated: None,
        })
    }

    pub fn total(&self) -> f64 {
        self.objective.total
    }

    pub fn total_ee(&self) -> f64 {
        self.objective.total_ee()
    }

    /// Copy with the wall-clock field zeroed; everything else is a pure
    /// function of the inputs.
    pub fn without_timing(&self) -> Self {
        Self { wall_clock_s: 0.0, ..self.clone() }
    }
}
