//! INSTANT: joint subchannel allocation and harvesting-ratio optimization.
//!
//! Every device starts halfway between its minimum harvesting ratio and 1.
//! Channels are then placed in two passes: a minimum-rate pass hands each
//! channel to the unsatisfied user with the best rate on it, and a
//! marginal-objective pass hands each leftover channel to the user whose
//! extra channel yields the largest objective. Finally each user's ratio is
//! re-optimized in ascending order of harvest rate, keeping the others fixed
//! and accepting only moves that respect the minimum rate, the AP budget and
//! every PU threshold.

use std::cmp::Ordering;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::allocation::Allocation;
use crate::energy::{min_harvesting_ratio, MU_EPS};
use crate::error::{ModelError, SolveError};
use crate::objective::{harvest_load, interference_load, user_objective};
use crate::report::{SolveReport, SolverKind};
use crate::scenario::Scenario;
use crate::search::{grid_golden_maximize, SearchOutcome};
use crate::throughput::RateContext;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantConfig {
    /// Grid density of the harvesting-ratio scan.
    pub grid_points: usize,
    /// Golden-section stopping width on the ratio.
    pub mu_tolerance: f64,
}

impl Default for InstantConfig {
    fn default() -> Self {
        Self { grid_points: 256, mu_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationPass {
    MinRate,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEvent {
    pub channel: usize,
    pub user: usize,
    pub pass: AllocationPass,
    /// Rate the winner gets from this channel alone.
    pub channel_rate: f64,
    /// Winner's total rate after the grant.
    pub user_rate: f64,
    /// Objective with the grant (marginal pass only).
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    MinRate,
    ApBudget,
    Interference,
    NoImprovement,
    NoFeasibleRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarvestDecision {
    pub user: usize,
    pub mu_before: f64,
    pub mu_candidate: Option<f64>,
    pub accepted: bool,
    pub rejection: Option<RejectionReason>,
    /// User's `ee + se` before and after the decision.
    pub contribution_before: f64,
    pub contribution_after: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub channel_events: Vec<ChannelEvent>,
    pub harvest_decisions: Vec<HarvestDecision>,
    /// Rate or objective evaluations spent placing channels.
    pub allocation_evaluations: usize,
    /// Objective evaluations spent in the harvesting-ratio searches.
    pub harvest_evaluations: usize,
    pub golden_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantSolution {
    pub allocation: Allocation,
    pub report: SolveReport,
    pub trace: SolverTrace,
}

/// Search interval `[mu_min + eps, 1 - eps]` for device `k`.
pub fn mu_bounds(scenario: &Scenario, k: usize) -> Result<(f64, f64), ModelError> {
    let lo = min_harvesting_ratio(&scenario.devices[k], &scenario.timing)? + MU_EPS;
    let hi = 1.0 - MU_EPS;
    Ok((lo.min(hi), hi))
}

/// Checks the minimum-rate, AP-budget and interference constraints after
/// moving device `k` to `mu_k`, all other ratios unchanged.
pub fn local_gates(
    scenario: &Scenario,
    ctx: &RateContext,
    allocation: &Allocation,
    k: usize,
    mu_k: f64,
) -> Result<(), RejectionReason> {
    let rate = ctx.rate_over(scenario, k, allocation.channels_of(k), mu_k);
    if rate < scenario.min_rate(k) {
        return Err(RejectionReason::MinRate);
    }
    let mut mu = allocation.mu.clone();
    mu[k] = mu_k;
    if harvest_load(scenario, &mu) > scenario.ap_energy_budget {
        return Err(RejectionReason::ApBudget);
    }
    if (0..scenario.num_pus()).any(|m| interference_load(scenario, &mu, m) > scenario.pu_thresholds[m]) {
        return Err(RejectionReason::Interference);
    }
    Ok(())
}

fn contribution(scenario: &Scenario, ctx: &RateContext, allocation: &Allocation, k: usize, mu: f64) -> Option<f64> {
    let rate = ctx.rate_over(scenario, k, allocation.channels_of(k), mu);
    user_objective(scenario, k, rate, mu).ok().map(|(ee, se)| ee + se)
}

/// Unconstrained maximizer of user `k`'s `ee + se` over its ratio interval,
/// for the channels it currently holds.
pub fn optimize_mu_local(scenario: &Scenario, allocation: &Allocation, k: usize) -> Result<f64, ModelError> {
    let ctx = RateContext::new(scenario);
    let cfg = InstantConfig::default();
    let (lo, hi) = mu_bounds(scenario, k)?;
    let out = grid_golden_maximize(
        |mu| contribution(scenario, &ctx, allocation, k, mu),
        lo,
        hi,
        cfg.grid_points,
        cfg.mu_tolerance,
    );
    Ok(out.map_or(lo, |o| o.argmax))
}

/// Maximizer of user `k`'s `ee + se` restricted to ratios that pass
/// [`local_gates`].
pub fn optimize_mu_constrained(
    scenario: &Scenario,
    ctx: &RateContext,
    allocation: &Allocation,
    k: usize,
    config: &InstantConfig,
) -> Result<Option<SearchOutcome>, ModelError> {
    let (lo, hi) = mu_bounds(scenario, k)?;
    Ok(grid_golden_maximize(
        |mu| {
            local_gates(scenario, ctx, allocation, k, mu).ok()?;
            contribution(scenario, ctx, allocation, k, mu)
        },
        lo,
        hi,
        config.grid_points,
        config.mu_tolerance,
    ))
}

pub fn solve_instant(scenario: &Scenario) -> Result<InstantSolution, SolveError> {
    solve_instant_with(scenario, &InstantConfig::default())
}

pub fn solve_instant_with(scenario: &Scenario, config: &InstantConfig) -> Result<InstantSolution, SolveError> {
    if config.grid_points < 2 || !(config.mu_tolerance > 0.0) {
        return Err(SolveError::InvalidConfig("need at least 2 grid points and a positive tolerance".into()));
    }
    scenario.validate()?;
    let started = Instant::now();
    let ctx = RateContext::new(scenario);
    let k_count = scenario.num_devices();
    let n_count = scenario.num_channels();

    let mu = (0..k_count)
        .map(|k| min_harvesting_ratio(&scenario.devices[k], &scenario.timing).map(|m| 0.5 * (m + 1.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut alloc = Allocation::empty(k_count, n_count, mu);
    let mut trace = SolverTrace::default();
    let mut rates = vec![0.0; k_count];

    // Minimum-rate pass.
    let mut unsatisfied: Vec<usize> = (0..k_count).collect();
    let mut next_channel = 0;
    while next_channel < n_count && !unsatisfied.is_empty() {
        let n = next_channel;
        let mut best: Option<(usize, f64)> = None;
        for &k in &unsatisfied {
            let r = ctx.channel_rate(scenario, k, n, alloc.mu[k]);
            trace.allocation_evaluations += 1;
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((k, r));
            }
        }
        let (k, r) = best.expect("unsatisfied set is non-empty");
        alloc.assign(n, k);
        rates[k] += r;
        trace.channel_events.push(ChannelEvent {
            channel: n,
            user: k,
            pass: AllocationPass::MinRate,
            channel_rate: r,
            user_rate: rates[k],
            objective: None,
        });
        if rates[k] >= scenario.min_rate(k) {
            unsatisfied.retain(|&u| u != k);
        }
        next_channel += 1;
    }

    // Marginal-objective pass over the channels left.
    let mut contrib = (0..k_count)
        .map(|k| contribution_at_rate(scenario, k, rates[k], alloc.mu[k]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total: f64 = contrib.iter().sum();
    for n in next_channel..n_count {
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for k in 0..k_count {
            let r = ctx.channel_rate(scenario, k, n, alloc.mu[k]);
            let with = contribution_at_rate(scenario, k, rates[k] + r, alloc.mu[k])?;
            let objective = total - contrib[k] + with;
            trace.allocation_evaluations += 1;
            if best.is_none_or(|(_, o, _, _)| objective > o) {
                best = Some((k, objective, r, with));
            }
        }
        let (k, objective, r, with) = best.expect("at least one device");
        alloc.assign(n, k);
        rates[k] += r;
        total += with - contrib[k];
        contrib[k] = with;
        trace.channel_events.push(ChannelEvent {
            channel: n,
            user: k,
            pass: AllocationPass::Marginal,
            channel_rate: r,
            user_rate: rates[k],
            objective: Some(objective),
        });
    }

    // Harvesting-ratio pass, lowest mean harvest rate first.
    let mut order: Vec<usize> = (0..k_count).collect();
    order.sort_by(|&a, &b| {
        scenario.devices[a].harvest_rate.total_cmp(&scenario.devices[b].harvest_rate).then(a.cmp(&b))
    });
    for k in order {
        let mu_before = alloc.mu[k];
        let before = contribution(scenario, &ctx, &alloc, k, mu_before).unwrap_or(f64::NEG_INFINITY);
        let current_ok = local_gates(scenario, &ctx, &alloc, k, mu_before).is_ok();
        let search = optimize_mu_constrained(scenario, &ctx, &alloc, k, config)?;
        let mut decision = HarvestDecision {
            user: k,
            mu_before,
            mu_candidate: search.map(|s| s.argmax),
            accepted: false,
            rejection: None,
            contribution_before: before,
            contribution_after: before,
        };
        match search {
            None => decision.rejection = Some(RejectionReason::NoFeasibleRatio),
            Some(s) => {
                trace.harvest_evaluations += s.evaluations;
                trace.golden_iterations += s.golden_iterations;
                if let Err(reason) = local_gates(scenario, &ctx, &alloc, k, s.argmax) {
                    decision.rejection = Some(reason);
                } else if current_ok && s.value.partial_cmp(&before) == Some(Ordering::Less) {
                    decision.rejection = Some(RejectionReason::NoImprovement);
                } else {
                    alloc.mu[k] = s.argmax;
                    decision.accepted = true;
                    decision.contribution_after = s.value;
                }
            }
        }
        trace.harvest_decisions.push(decision);
    }

    let report = SolveReport::build(SolverKind::Instant, scenario, &ctx, &alloc, started.elapsed().as_secs_f64())?;
    let solution = InstantSolution { allocation: alloc, report, trace };
    if solution.report.feasibility.feasible {
        Ok(solution)
    } else {
        Err(SolveError::InfeasibleScenario(Box::new(solution)))
    }
}

fn contribution_at_rate(scenario: &Scenario, k: usize, rate: f64, mu: f64) -> Result<f64, ModelError> {
    user_objective(scenario, k, rate, mu).map(|(ee, se)| ee + se)
}

/// Runs INSTANT and returns the solution whether or not it is feasible.
pub fn solve_instant_best_effort(scenario: &Scenario) -> Result<InstantSolution, SolveError> {
    match solve_instant(scenario) {
        Err(SolveError::InfeasibleScenario(sol)) => Ok(*sol),
        other => other,
    }
}
