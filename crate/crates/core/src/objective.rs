//! Energy-efficiency / spectral-efficiency objective and the feasibility
//! checks for the eight problem constraints.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::allocation::Allocation;
use crate::energy::{consumed_energy, harvested_energy, max_transmit_energy, transmit_power};
use crate::error::ModelError;
use crate::scenario::{BufferDistribution, Scenario};
use crate::throughput::{bits_for_rate, user_rate, RateContext};

/// Rounding allowance for the energy-balance constraints (J). Budgets are
/// O(1e-3) J, so this is several thousand ulps.
pub const ENERGY_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// bits/s/J
    pub ee_per_user: Vec<f64>,
    /// eta-weighted tail probabilities
    pub se_per_user: Vec<f64>,
    pub total: f64,
}

impl ObjectiveBreakdown {
    pub fn total_ee(&self) -> f64 {
        self.ee_per_user.iter().sum()
    }

    pub fn total_se(&self) -> f64 {
        self.se_per_user.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
}

impl ConstraintId {
    pub const ALL: [ConstraintId; 8] = [Self::C1, Self::C2, Self::C3, Self::C4, Self::C5, Self::C6, Self::C7, Self::C8];

    pub fn describe(self) -> &'static str {
        match self {
            Self::C1 => "minimum rate (bits/s)",
            Self::C2 => "energy causality (J)",
            Self::C3 => "AP harvesting budget (J)",
            Self::C4 => "PU interference (W)",
            Self::C5 => "each channel assigned once (columns)",
            Self::C6 => "binary assignment (entries)",
            Self::C7 => "non-negative transmit energy (J)",
            Self::C8 => "harvesting ratio in (0, 1)",
        }
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Status of one constraint family. `slack` is the worst item; `items` holds
/// one slack per user, PU or column depending on the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintStatus {
    pub id: ConstraintId,
    pub slack: f64,
    pub items: Vec<f64>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub constraints: Vec<ConstraintStatus>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn get(&self, id: ConstraintId) -> &ConstraintStatus {
        self.constraints.iter().find(|c| c.id == id).expect("every constraint is reported")
    }

    pub fn violated(&self) -> impl Iterator<Item = &ConstraintStatus> {
        self.constraints.iter().filter(|c| !c.satisfied)
    }

    pub fn summary(&self) -> String {
        if self.feasible {
            return "feasible".to_owned();
        }
        self.violated()
            .map(|c| format!("{} {} slack {:e}", c.id, c.id.describe(), c.slack))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// `R_k / (rho mu T_d + E_res - E_sen + E_idle)`.
pub fn ee_for_rate(scenario: &Scenario, k: usize, rate: f64, mu: f64) -> Result<f64, ModelError> {
    let denom = consumed_energy(&scenario.devices[k], mu, &scenario.timing);
    if !(denom > 0.0) {
        return Err(ModelError::DegenerateDenominator { device: k, value: denom });
    }
    Ok(rate / denom)
}

pub fn energy_efficiency(
    scenario: &Scenario,
    ctx: &RateContext,
    allocation: &Allocation,
    k: usize,
) -> Result<f64, ModelError> {
    ee_for_rate(scenario, k, user_rate(scenario, ctx, allocation, k), allocation.mu[k])
}

/// `P(X >= bits)` for the buffer occupancy `X`.
pub fn tail_probability(dist: &BufferDistribution, bits: f64) -> f64 {
    let bits = bits.max(0.0);
    match *dist {
        BufferDistribution::Uniform { a, b } => {
            if bits <= a {
                1.0
            } else if bits >= b {
                0.0
            } else {
                (b - bits) / (b - a)
            }
        }
        BufferDistribution::Exponential { lambda } => (-lambda * bits).exp(),
    }
}

pub fn se_for_rate(scenario: &Scenario, k: usize, rate: f64, mu: f64) -> f64 {
    let bits = bits_for_rate(scenario, rate, mu);
    scenario.eta[k] * tail_probability(&scenario.devices[k].buffer, bits)
}

pub fn se_term(scenario: &Scenario, ctx: &RateContext, allocation: &Allocation, k: usize) -> f64 {
    se_for_rate(scenario, k, user_rate(scenario, ctx, allocation, k), allocation.mu[k])
}

/// One user's `(ee, se)` contribution at total rate `rate`.
pub fn user_objective(scenario: &Scenario, k: usize, rate: f64, mu: f64) -> Result<(f64, f64), ModelError> {
    Ok((ee_for_rate(scenario, k, rate, mu)?, se_for_rate(scenario, k, rate, mu)))
}

/// Sensing-error-weighted interference factor `I_{k,m}` (interference at PU
/// `m` per watt transmitted by device `k`).
pub fn pu_interference(scenario: &Scenario, k: usize, m: usize) -> f64 {
    let s = &scenario.sensing;
    let factors = &scenario.devices[k].cross_interference;
    let busy: f64 = s.unavailable.iter().zip(&s.p_correct_busy).map(|(&n, p)| p * factors[n][m]).sum();
    let missed: f64 = s.available.iter().zip(&s.p_missed_busy).map(|(&n, p)| p * factors[n][m]).sum();
    busy + missed
}

/// Left-hand side of the interference constraint at PU `m`:
/// `sum_k P_k(mu_k) I_{k,m}`. Infinite when some ratio leaves no
/// transmission time.
pub fn interference_load(scenario: &Scenario, mu: &[f64], m: usize) -> f64 {
    (0..scenario.num_devices())
        .map(|k| {
            transmit_power(&scenario.devices[k], mu[k], &scenario.timing)
                .map_or(f64::INFINITY, |p| p * pu_interference(scenario, k, m))
        })
        .sum()
}

/// Left-hand side of the AP budget constraint: `T_d sum_k rho_k mu_k`.
pub fn harvest_load(scenario: &Scenario, mu: &[f64]) -> f64 {
    scenario.devices.iter().zip(mu).map(|(d, &m)| harvested_energy(d.harvest_rate, m, scenario.timing.data)).sum()
}

pub fn evaluate(scenario: &Scenario, allocation: &Allocation) -> Result<ObjectiveBreakdown, ModelError> {
    evaluate_with(scenario, &RateContext::new(scenario), allocation)
}

pub fn evaluate_with(
    scenario: &Scenario,
    ctx: &RateContext,
    allocation: &Allocation,
) -> Result<ObjectiveBreakdown, ModelError> {
    let mut ee_per_user = Vec::with_capacity(scenario.num_devices());
    let mut se_per_user = Vec::with_capacity(scenario.num_devices());
    for k in 0..scenario.num_devices() {
        let rate = user_rate(scenario, ctx, allocation, k);
        let (ee, se) = user_objective(scenario, k, rate, allocation.mu[k])?;
        ee_per_user.push(ee);
        se_per_user.push(se);
    }
    let total = ee_per_user.iter().zip(&se_per_user).map(|(e, s)| e + s).sum();
    Ok(ObjectiveBreakdown { ee_per_user, se_per_user, total })
}

pub fn check_feasibility(scenario: &Scenario, allocation: &Allocation) -> FeasibilityReport {
    check_feasibility_with(scenario, &RateContext::new(scenario), allocation)
}

pub fn check_feasibility_with(scenario: &Scenario, ctx: &RateContext, allocation: &Allocation) -> FeasibilityReport {
    let timing = &scenario.timing;
    let k_count = scenario.num_devices();
    let mu = &allocation.mu;

    let status = |id, items: Vec<f64>, ok: &dyn Fn(f64) -> bool| {
        let slack = items.iter().copied().fold(f64::INFINITY, f64::min);
        let satisfied = items.iter().all(|&s| ok(s));
        ConstraintStatus { id, slack: if items.is_empty() { 0.0 } else { slack }, items, satisfied }
    };
    let non_negative = |s: f64| s >= 0.0;
    let within_tol = |s: f64| s >= -ENERGY_TOL;

    let c1 = (0..k_count).map(|k| user_rate(scenario, ctx, allocation, k) - scenario.min_rate(k)).collect();
    let c2 = scenario
        .devices
        .iter()
        .zip(mu)
        .map(|(d, &m)| {
            let harvested = harvested_energy(d.harvest_rate, m, timing.data);
            let transmit = max_transmit_energy(d, m, timing);
            (d.residual_energy + harvested) - (transmit + 2.0 * d.sensing_energy)
        })
        .collect();
    let c3 = vec![scenario.ap_energy_budget - harvest_load(scenario, mu)];
    let c4 = (0..scenario.num_pus()).map(|m| scenario.pu_thresholds[m] - interference_load(scenario, mu, m)).collect();
    let c5 = (0..allocation.num_channels())
        .map(|n| if allocation.column_sum(n) == 1 { 0.0 } else { -1.0 })
        .collect::<Vec<_>>();
    let c6_violations = allocation.g.iter().flatten().filter(|&&v| v > 1).count();
    let c7 = scenario.devices.iter().zip(mu).map(|(d, &m)| max_transmit_energy(d, m, timing)).collect();
    let c8 = mu.iter().map(|&m| m.min(1.0 - m)).collect();

    let mut c5_status = status(ConstraintId::C5, c5, &non_negative);
    c5_status.slack = c5_status.items.iter().sum();
    let constraints = vec![
        status(ConstraintId::C1, c1, &non_negative),
        status(ConstraintId::C2, c2, &within_tol),
        status(ConstraintId::C3, c3, &non_negative),
        status(ConstraintId::C4, c4, &non_negative),
        c5_status,
        ConstraintStatus {
            id: ConstraintId::C6,
            slack: -(c6_violations as f64),
            items: vec![-(c6_violations as f64)],
            satisfied: c6_violations == 0,
        },
        status(ConstraintId::C7, c7, &within_tol),
        status(ConstraintId::C8, c8, &|s| s > 0.0),
    ];
    let feasible = constraints.iter().all(|c| c.satisfied);
    FeasibilityReport { constraints, feasible }
}
