//! Multi-slot replay of the residual-energy recursion.
//!
//! Each slot draws the realized harvest rates, solves the allocation problem
//! for the devices that can afford to sense, and carries
//! `E_res + E_har - E_tr - E_sen` into the next slot. Devices that cannot
//! afford sensing, or whose minimum harvesting ratio reaches 1, sit the slot
//! out: they harvest for the whole data slot, do not sense and do not
//! transmit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::Allocation;
use crate::energy::{harvested_energy, max_transmit_energy, min_harvesting_ratio};
use crate::error::{ModelError, SolveError};
use crate::instant::solve_instant;
use crate::objective::{ConstraintId, ENERGY_TOL};
use crate::oracle::{solve_oracle, OracleConfig};
use crate::report::SolveReport;
use crate::scenario::{substream, Scenario};
use crate::throughput::bits_for_rate;

const STREAM_SIM_HARVEST: u64 = 16;
const STREAM_SIM_BUFFER: u64 = 17;

/// How the per-slot harvest rate is drawn around its mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarvestModel {
    DeterministicMean,
    /// `rho_t = rho_av * U(low, high)`; mean-preserving when `low + high = 2`.
    IidUniform {
        low: f64,
        high: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimSolver {
    Instant,
    Oracle(OracleConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub slots: usize,
    pub seed: u64,
    pub harvest_model: HarvestModel,
    /// Draw a fresh buffer occupancy every slot instead of once.
    pub regenerate_buffers: bool,
    pub solver: SimSolver,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            slots: 100,
            seed: 0,
            harvest_model: HarvestModel::IidUniform { low: 0.5, high: 1.5 },
            regenerate_buffers: true,
            solver: SimSolver::Instant,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.slots == 0 {
            return Err(ModelError::InvalidScenario("a simulation needs at least one slot".into()));
        }
        if let HarvestModel::IidUniform { low, high } = self.harvest_model {
            if !(low > 0.0 && low <= high && high.is_finite()) {
                return Err(ModelError::InvalidScenario("harvest multipliers need 0 < low <= high".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dormancy {
    /// Residual energy below one sensing period.
    LowResidual,
    /// Even harvesting the whole data slot leaves no transmission budget.
    NoFeasibleRatio,
}

/// One device in one slot. Energies in joules, rate in bits/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSlot {
    pub device: usize,
    pub dormant: Option<Dormancy>,
    pub harvest_rate: f64,
    pub mu: f64,
    pub channels: usize,
    pub e_res_start: f64,
    pub e_har: f64,
    pub e_tr: f64,
    /// Zero for dormant devices, which skip sensing.
    pub e_sen: f64,
    pub e_res_end: f64,
    pub rate: f64,
    pub buffer_bits: f64,
    pub delivered_bits: f64,
}

impl DeviceSlot {
    /// `E_res_start + E_har - E_tr - E_sen`, evaluated in that order.
    pub fn recursion(&self) -> f64 {
        self.e_res_start + self.e_har - self.e_tr - self.e_sen
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub devices: Vec<DeviceSlot>,
    /// Total objective over the active devices; `None` when nothing was solved.
    pub objective: Option<f64>,
    pub feasible: bool,
    pub violated: Vec<ConstraintId>,
    pub error: Option<String>,
}

impl SlotRecord {
    pub fn active_devices(&self) -> impl Iterator<Item = &DeviceSlot> {
        self.devices.iter().filter(|d| d.dormant.is_none())
    }
}

fn realized_rate(model: HarvestModel, rho_av: f64, seed: u64, slot: usize, k: usize) -> f64 {
    match model {
        HarvestModel::DeterministicMean => rho_av,
        HarvestModel::IidUniform { low, high } => {
            let u: f64 = substream(seed, STREAM_SIM_HARVEST, slot as u64, k as u64).random();
            rho_av * (low + (high - low) * u)
        }
    }
}

fn solve(scenario: &Scenario, solver: SimSolver) -> (Option<(Allocation, SolveReport)>, Option<String>) {
    match solver {
        SimSolver::Instant => match solve_instant(scenario) {
            Ok(sol) => (Some((sol.allocation, sol.report)), None),
            Err(SolveError::InfeasibleScenario(sol)) => {
                let msg = format!("infeasible: {}", sol.report.feasibility.summary());
                (Some((sol.allocation, sol.report)), Some(msg))
            }
            Err(e) => (None, Some(e.to_string())),
        },
        SimSolver::Oracle(cfg) => match solve_oracle(scenario, &cfg) {
            Ok(sol) => (Some((sol.allocation, sol.report)), None),
            Err(e) => (None, Some(e.to_string())),
        },
    }
}

/// Runs `config.slots` slots starting from the scenario's residual energies.
/// Solver failures are recorded per slot and never abort the run.
pub fn run_simulation(scenario: &Scenario, config: &SimConfig) -> Result<Vec<SlotRecord>, ModelError> {
    scenario.validate()?;
    config.validate()?;
    let k_count = scenario.num_devices();
    let timing = scenario.timing;
    let mut residual: Vec<f64> = scenario.devices.iter().map(|d| d.residual_energy).collect();
    let mut buffers = vec![0.0; k_count];
    let mut records = Vec::with_capacity(config.slots);

    for slot in 0..config.slots {
        if slot == 0 || config.regenerate_buffers {
            for (k, x) in buffers.iter_mut().enumerate() {
                let mut rng = substream(config.seed, STREAM_SIM_BUFFER, slot as u64, k as u64);
                *x = scenario.devices[k].buffer.sample(&mut rng);
            }
        }

        let mut slot_devices = Vec::with_capacity(k_count);
        let mut dormancy = Vec::with_capacity(k_count);
        for (k, base) in scenario.devices.iter().enumerate() {
            let mut d = base.clone();
            d.residual_energy = residual[k];
            d.harvest_rate = realized_rate(config.harvest_model, base.harvest_rate, config.seed, slot, k);
            let state = if residual[k] < d.sensing_energy - ENERGY_TOL {
                Some(Dormancy::LowResidual)
            } else if min_harvesting_ratio(&d, &timing).is_err() {
                Some(Dormancy::NoFeasibleRatio)
            } else {
                None
            };
            dormancy.push(state);
            slot_devices.push(d);
        }

        let active: Vec<usize> = (0..k_count).filter(|&k| dormancy[k].is_none()).collect();
        let mut sub = scenario.clone();
        sub.devices = active
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let mut d = slot_devices[k].clone();
                d.id = j;
                d
            })
            .collect();
        sub.eta = active.iter().map(|&k| scenario.eta[k]).collect();

        let (solved, error) = if active.is_empty() { (None, None) } else { solve(&sub, config.solver) };

        let mut devices = Vec::with_capacity(k_count);
        for (k, d) in slot_devices.iter().enumerate() {
            let e_res_start = residual[k];
            let mut rec = DeviceSlot {
                device: k,
                dormant: dormancy[k],
                harvest_rate: d.harvest_rate,
                mu: 1.0,
                channels: 0,
                e_res_start,
                e_har: harvested_energy(d.harvest_rate, 1.0, timing.data),
                e_tr: 0.0,
                e_sen: 0.0,
                e_res_end: 0.0,
                rate: 0.0,
                buffer_bits: buffers[k],
                delivered_bits: 0.0,
            };
            if dormancy[k].is_none() {
                rec.e_sen = d.sensing_energy;
                let j = active.iter().position(|&a| a == k).expect("active device");
                // Without an allocation the device senses, then harvests
                // for the whole data slot and stays silent.
                if let Some((alloc, report)) = &solved {
                    let mu = alloc.mu[j];
                    rec.mu = mu;
                    rec.channels = alloc.channels_of(j).count();
                    rec.e_har = harvested_energy(d.harvest_rate, mu, timing.data);
                    rec.e_tr = max_transmit_energy(&sub.devices[j], mu, &timing).max(0.0);
                    rec.rate = report.rates[j];
                    rec.delivered_bits = bits_for_rate(&sub, rec.rate, mu).min(buffers[k]);
                }
            }
            rec.e_res_end = rec.recursion();
            residual[k] = rec.e_res_end;
            devices.push(rec);
        }

        let (objective, feasible, violated) = match &solved {
            Some((_, report)) => (
                Some(report.total()),
                report.feasibility.feasible,
                report.feasibility.violated().map(|c| c.id).collect(),
            ),
            None => (None, error.is_none(), Vec::new()),
        };
        records.push(SlotRecord { slot, devices, objective, feasible, violated, error });
    }
    Ok(records)
}
