//! Exhaustive reference solver for small instances.
//!
//! Enumerates all `K^N` complete channel assignments. For each one the
//! harvesting ratios are chosen on a per-user uniform grid over
//! `[mu_min + eps, 1 - eps]`: every user first takes its individually best
//! grid point (the objective is separable across users), and only when the
//! AP budget or a PU threshold couples the users do a few rounds of cyclic
//! coordinate descent run. `strict` mode replaces coordinate descent with a
//! full joint grid search (K <= 3 only).
//!
//! The coupling constraints depend on the ratios alone, never on which user
//! holds which channel, so everything is tabulated once per scenario: rate of
//! every (user, channel, grid point), and when memory allows, every user's
//! objective for every channel subset.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::allocation::Allocation;
use crate::energy::{harvested_energy, transmit_power};
use crate::error::{ModelError, SolveError};
use crate::instant::mu_bounds;
use crate::objective::{check_feasibility_with, pu_interference, user_objective};
use crate::report::{SolveReport, SolverKind};
use crate::scenario::Scenario;
use crate::search::uniform_grid;
use crate::throughput::RateContext;

/// Largest per-subset table (in f64 entries) kept in memory.
const MEMO_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub mu_grid_points: usize,
    pub max_assignments: u64,
    pub coordinate_descent_rounds: usize,
    /// Joint grid search over all users' ratios instead of coordinate descent.
    pub strict: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { mu_grid_points: 256, max_assignments: 1 << 20, coordinate_descent_rounds: 3, strict: false }
    }
}

impl OracleConfig {
    fn validate(&self, k: usize) -> Result<(), SolveError> {
        if self.mu_grid_points < 8 {
            return Err(SolveError::InvalidConfig("mu_grid_points must be at least 8".into()));
        }
        if self.strict && k > 3 {
            return Err(SolveError::InvalidConfig("strict joint search is limited to K <= 3".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub allocation: Allocation,
    pub report: SolveReport,
}

/// Per-scenario tables shared by every assignment.
struct Tables {
    k: usize,
    n: usize,
    grid: Vec<Vec<f64>>,
    /// `[k][n][i]`
    channel_rate: Vec<Vec<Vec<f64>>>,
    /// `[k][i]`
    harvest: Vec<Vec<f64>>,
    /// `[k][m][i]`
    interference: Vec<Vec<Vec<f64>>>,
    min_rate: Vec<f64>,
    budget: f64,
    thresholds: Vec<f64>,
}

impl Tables {
    fn new(scenario: &Scenario, ctx: &RateContext, points: usize) -> Result<Self, ModelError> {
        let k = scenario.num_devices();
        let n = scenario.num_channels();
        let timing = &scenario.timing;
        let grid = (0..k)
            .map(|u| mu_bounds(scenario, u).map(|(lo, hi)| uniform_grid(lo, hi, points).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>, _>>()?;
        let channel_rate = (0..k)
            .map(|u| (0..n).map(|c| grid[u].iter().map(|&mu| ctx.channel_rate(scenario, u, c, mu)).collect()).collect())
            .collect();
        let harvest = (0..k)
            .map(|u| {
                let d = &scenario.devices[u];
                grid[u].iter().map(|&mu| harvested_energy(d.harvest_rate, mu, timing.data)).collect()
            })
            .collect();
        let interference = (0..k)
            .map(|u| {
                (0..scenario.num_pus())
                    .map(|m| {
                        let factor = pu_interference(scenario, u, m);
                        grid[u]
                            .iter()
                            .map(|&mu| transmit_power(&scenario.devices[u], mu, timing).map(|p| p * factor))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            k,
            n,
            grid,
            channel_rate,
            harvest,
            interference,
            min_rate: (0..k).map(|u| scenario.min_rate(u)).collect(),
            budget: scenario.ap_energy_budget,
            thresholds: scenario.pu_thresholds.clone(),
        })
    }

    /// Objective of user `u` at every grid point for the given per-point
    /// rates; `-inf` where the minimum rate is missed.
    fn values_from_rates(
        &self,
        scenario: &Scenario,
        u: usize,
        rates: &[f64],
        out: &mut [f64],
    ) -> Result<(), ModelError> {
        for (i, (&rate, slot)) in rates.iter().zip(out.iter_mut()).enumerate() {
            *slot = if rate >= self.min_rate[u] {
                let (ee, se) = user_objective(scenario, u, rate, self.grid[u][i])?;
                ee + se
            } else {
                f64::NEG_INFINITY
            };
        }
        Ok(())
    }

    /// Rates of user `u` on channel subset `mask`, summed in ascending
    /// channel order like [`crate::throughput::user_rate`].
    fn rates_for_mask(&self, u: usize, mask: u64, out: &mut [f64]) {
        out.iter_mut().for_each(|r| *r = -0.0);
        for c in 0..self.n {
            if mask >> c & 1 == 1 {
                for (r, add) in out.iter_mut().zip(&self.channel_rate[u][c]) {
                    *r += add;
                }
            }
        }
    }

    fn coupling_ok(&self, idx: &[usize]) -> bool {
        let harvest: f64 = (0..self.k).map(|u| self.harvest[u][idx[u]]).sum();
        if harvest > self.budget {
            return false;
        }
        self.thresholds.iter().enumerate().all(|(m, &th)| {
            let load: f64 = (0..self.k).map(|u| self.interference[u][m][idx[u]]).sum();
            load <= th
        })
    }
}

/// First index of the maximum finite value (`None` if all are `-inf`).
fn best_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v > f64::NEG_INFINITY && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

struct Memo {
    /// `[u][mask]` -> values over the grid
    values: Vec<Vec<Vec<f64>>>,
    best: Vec<Vec<Option<usize>>>,
}

fn build_memo(scenario: &Scenario, t: &Tables) -> Result<Memo, ModelError> {
    let g = t.grid[0].len();
    let subsets = 1usize << t.n;
    let mut values = Vec::with_capacity(t.k);
    let mut best = Vec::with_capacity(t.k);
    let mut rates = vec![0.0; g];
    for u in 0..t.k {
        let mut rows = Vec::with_capacity(subsets);
        let mut bests = Vec::with_capacity(subsets);
        for mask in 0..subsets as u64 {
            t.rates_for_mask(u, mask, &mut rates);
            let mut row = vec![0.0; g];
            t.values_from_rates(scenario, u, &rates, &mut row)?;
            bests.push(best_index(&row));
            rows.push(row);
        }
        values.push(rows);
        best.push(bests);
    }
    Ok(Memo { values, best })
}

/// Best feasible ratio indices for fixed per-user rows, or `None`.
fn optimize_ratios(t: &Tables, rows: &[&[f64]], start: &[usize], config: &OracleConfig) -> Option<Vec<usize>> {
    if t.coupling_ok(start) {
        return Some(start.to_vec());
    }
    if config.strict {
        return joint_search(t, rows);
    }
    let mut idx = start.to_vec();
    for _ in 0..config.coordinate_descent_rounds {
        let mut changed = false;
        for u in 0..t.k {
            let current = idx[u];
            let mut chosen: Option<usize> = None;
            for j in 0..rows[u].len() {
                let v = rows[u][j];
                if v == f64::NEG_INFINITY || chosen.is_some_and(|c| v <= rows[u][c]) {
                    continue;
                }
                idx[u] = j;
                if t.coupling_ok(&idx) {
                    chosen = Some(j);
                }
            }
            // Nothing fits: fall back to the lowest admissible ratio, which
            // minimizes both harvested energy and transmit power.
            let next = chosen.unwrap_or_else(|| rows[u].iter().position(|v| *v > f64::NEG_INFINITY).unwrap());
            idx[u] = next;
            changed |= next != current;
        }
        if !changed {
            break;
        }
    }
    t.coupling_ok(&idx).then_some(idx)
}

fn joint_search(t: &Tables, rows: &[&[f64]]) -> Option<Vec<usize>> {
    let admissible: Vec<Vec<usize>> =
        rows.iter().map(|r| (0..r.len()).filter(|&j| r[j] > f64::NEG_INFINITY).collect()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut cursor = vec![0usize; t.k];
    let mut idx = vec![0usize; t.k];
    'outer: loop {
        for u in 0..t.k {
            idx[u] = admissible[u][cursor[u]];
        }
        if t.coupling_ok(&idx) {
            let v: f64 = (0..t.k).map(|u| rows[u][idx[u]]).sum();
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, idx.clone()));
            }
        }
        // odometer, last user fastest
        for u in (0..t.k).rev() {
            cursor[u] += 1;
            if cursor[u] < admissible[u].len() {
                continue 'outer;
            }
            cursor[u] = 0;
        }
        break;
    }
    best.map(|(_, i)| i)
}

fn total_of(rows: &[&[f64]], idx: &[usize]) -> f64 {
    rows.iter().zip(idx).map(|(r, &i)| r[i]).sum()
}

/// Largest objective change one grid step either side of the chosen
/// ratios, summed over users.
fn grid_step_variation(rows: &[&[f64]], idx: &[usize]) -> f64 {
    rows.iter()
        .zip(idx)
        .map(|(r, &i)| {
            let left = i.checked_sub(1).map(|j| r[j]);
            let right = r.get(i + 1).copied();
            [left, right].into_iter().flatten().filter(|v| v.is_finite()).map(|v| (v - r[i]).abs()).fold(0.0, f64::max)
        })
        .sum()
}

pub fn solve_oracle(scenario: &Scenario, config: &OracleConfig) -> Result<OracleSolution, SolveError> {
    scenario.validate()?;
    let k = scenario.num_devices();
    let n = scenario.num_channels();
    config.validate(k)?;
    let total_assignments = u32::try_from(n)
        .ok()
        .and_then(|e| (k as u64).checked_pow(e))
        .filter(|&a| a <= config.max_assignments)
        .ok_or_else(|| SolveError::InstanceTooLarge { assignments: format!("{k}^{n}"), cap: config.max_assignments })?;
    let started = Instant::now();
    let ctx = RateContext::new(scenario);
    let tables = Tables::new(scenario, &ctx, config.mu_grid_points)?;
    let g = config.mu_grid_points;
    let memo = if n < 63 && k.saturating_mul(g).saturating_mul(1usize << n.min(62)) <= MEMO_LIMIT {
        Some(build_memo(scenario, &tables)?)
    } else {
        None
    };

    let mut owners = vec![0usize; n];
    let mut masks = vec![0u64; k];
    let mut rates = vec![0.0; g];
    let mut incumbent: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    let mut enumerated = 0u64;
    loop {
        enumerated += 1;
        masks.iter_mut().for_each(|m| *m = 0);
        for (c, &u) in owners.iter().enumerate() {
            masks[u] |= 1 << c;
        }
        let owned: Vec<Vec<f64>> = if memo.is_some() {
            Vec::new()
        } else {
            let mut owned = Vec::with_capacity(k);
            for u in 0..k {
                tables.rates_for_mask(u, masks[u], &mut rates);
                let mut row = vec![0.0; g];
                tables.values_from_rates(scenario, u, &rates, &mut row)?;
                owned.push(row);
            }
            owned
        };
        let row_refs: Vec<&[f64]> = match &memo {
            Some(m) => (0..k).map(|u| m.values[u][masks[u] as usize].as_slice()).collect(),
            None => owned.iter().map(Vec::as_slice).collect(),
        };
        let start: Option<Vec<usize>> = (0..k)
            .map(|u| match &memo {
                Some(m) => m.best[u][masks[u] as usize],
                None => best_index(row_refs[u]),
            })
            .collect();
        if let Some(start) = start {
            let bound = total_of(&row_refs, &start);
            if incumbent.as_ref().is_none_or(|(v, _, _)| bound > *v) {
                if let Some(idx) = optimize_ratios(&tables, &row_refs, &start, config) {
                    let v = total_of(&row_refs, &idx);
                    if incumbent.as_ref().is_none_or(|(b, _, _)| v > *b) {
                        incumbent = Some((v, owners.clone(), idx));
                    }
                }
            }
        }
        // odometer, last channel fastest
        let mut c = n;
        loop {
            if c == 0 {
                break;
            }
            c -= 1;
            owners[c] += 1;
            if owners[c] < k {
                break;
            }
            owners[c] = 0;
            if c == 0 {
                c = usize::MAX;
                break;
            }
        }
        if c == usize::MAX {
            break;
        }
    }
    debug_assert_eq!(enumerated, total_assignments);

    let (_, best_owners, idx) = incumbent.ok_or(SolveError::NoFeasibleSolution { enumerated })?;
    let mu: Vec<f64> = (0..k).map(|u| tables.grid[u][idx[u]]).collect();
    let allocation = Allocation::from_owners(&best_owners, mu);

    let mut best_masks = vec![0u64; k];
    for (c, &u) in best_owners.iter().enumerate() {
        best_masks[u] |= 1 << c;
    }
    let mut rows = Vec::with_capacity(k);
    for u in 0..k {
        tables.rates_for_mask(u, best_masks[u], &mut rates);
        let mut row = vec![0.0; g];
        tables.values_from_rates(scenario, u, &rates, &mut row)?;
        rows.push(row);
    }
    let row_refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();

    let kind = if config.strict { SolverKind::OracleStrict } else { SolverKind::Oracle };
    let mut report = SolveReport::build(kind, scenario, &ctx, &allocation, started.elapsed().as_secs_f64())?;
    debug_assert!(check_feasibility_with(scenario, &ctx, &allocation).feasible);
    let total = report.total().abs();
    report.grid_tolerance_pct =
        Some(if total > 0.0 { 100.0 * grid_step_variation(&row_refs, &idx) / total } else { 0.0 });
    report.assignments_enumerated = Some(enumerated);
    Ok(OracleSolution { allocation, report })
}

/// Relative shortfall of the heuristic against the oracle, in percent.
/// Slightly negative values (the heuristic's continuous ratio beating the
/// oracle's grid) are clamped at minus the oracle's grid tolerance.
pub fn gap(instant_report: &SolveReport, oracle_report: &SolveReport) -> Result<f64, SolveError> {
    if instant_report.scenario_id != oracle_report.scenario_id {
        return Err(SolveError::MismatchedScenario {
            left: instant_report.scenario_id.clone(),
            right: oracle_report.scenario_id.clone(),
        });
    }
    let oracle = oracle_report.total();
    let instant = instant_report.total();
    if oracle == instant {
        return Ok(0.0);
    }
    let pct = 100.0 * (oracle - instant) / oracle.abs();
    Ok(match oracle_report.grid_tolerance_pct {
        Some(tol) => pct.max(-tol),
        None => pct,
    })
}
