//! Per-slot energy bookkeeping.
//!
//! Every device transmits with its whole budget: whatever is left after
//! reserving sensing energy for this slot and the next. The harvesting ratio
//! `mu` is therefore the only continuous decision per device.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::scenario::{Device, SlotTiming};

/// Distance kept from the open ends of `0 < mu < 1`.
pub const MU_EPS: f64 = 1e-6;

/// One device's energy flows for one slot (all in joules).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub harvested: f64,
    pub transmit: f64,
    pub sensing: f64,
    pub idle: f64,
    pub consumed: f64,
    pub residual_next: f64,
}

pub fn harvested_energy(rho_av: f64, mu: f64, data_slot: f64) -> f64 {
    rho_av * mu * data_slot
}

/// Transmission budget `E_res + E_har - 2 E_sen`. Negative means the device
/// cannot transmit at this ratio.
pub fn max_transmit_energy(device: &Device, mu: f64, timing: &SlotTiming) -> f64 {
    device.residual_energy + harvested_energy(device.harvest_rate, mu, timing.data) - 2.0 * device.sensing_energy
}

/// Root of `max_transmit_energy(mu) = 0`, without clamping.
pub fn unclamped_min_harvesting_ratio(device: &Device, timing: &SlotTiming) -> f64 {
    (2.0 * device.sensing_energy - device.residual_energy) / (device.harvest_rate * timing.data)
}

/// Smallest harvesting ratio with a non-negative transmission budget,
/// clamped to `[MU_EPS, 1 - MU_EPS]`.
pub fn min_harvesting_ratio(device: &Device, timing: &SlotTiming) -> Result<f64, ModelError> {
    let ratio = unclamped_min_harvesting_ratio(device, timing);
    if ratio >= 1.0 - MU_EPS {
        return Err(ModelError::InfeasibleDevice { device: device.id, ratio });
    }
    Ok(ratio.clamp(MU_EPS, 1.0 - MU_EPS))
}

/// Transmission time `(1 - mu) T_d`.
pub fn transmit_time(mu: f64, timing: &SlotTiming) -> f64 {
    (1.0 - mu) * timing.data
}

pub fn transmit_power(device: &Device, mu: f64, timing: &SlotTiming) -> Result<f64, ModelError> {
    if !(mu < 1.0) {
        return Err(ModelError::UndefinedPower { mu });
    }
    Ok(max_transmit_energy(device, mu, timing) / transmit_time(mu, timing))
}

/// Energy spent in the slot other than transmission and next-slot reserve:
/// `rho mu T_d + E_res - E_sen + E_idle`. This is the EE denominator.
pub fn consumed_energy(device: &Device, mu: f64, timing: &SlotTiming) -> f64 {
    harvested_energy(device.harvest_rate, mu, timing.data) + device.residual_energy - device.sensing_energy
        + device.idle_energy(timing)
}

pub fn ledger_for_device(device: &Device, mu: f64, timing: &SlotTiming) -> Result<EnergyLedger, ModelError> {
    let transmit = max_transmit_energy(device, mu, timing);
    if transmit < 0.0 {
        return Err(ModelError::InfeasibleMu { mu, energy: transmit });
    }
    let harvested = harvested_energy(device.harvest_rate, mu, timing.data);
    let sensing = device.sensing_energy;
    let idle = device.idle_energy(timing);
    Ok(EnergyLedger {
        harvested,
        transmit,
        sensing,
        idle,
        consumed: transmit + sensing + idle,
        residual_next: device.residual_energy + harvested - transmit - sensing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::BufferDistribution;

    fn device(residual: f64, sensing: f64, rho: f64) -> Device {
        Device {
            id: 0,
            residual_energy: residual,
            sensing_energy: sensing,
            idle_power: 2e-4,
            sensing_time: 0.005,
            idle_energy: Some(1e-6),
            harvest_rate: rho,
            gains: vec![1e-6],
            received_interference: 0.0,
            buffer: BufferDistribution::Uniform { a: 0.0, b: 1e4 },
            cross_interference: vec![vec![]],
        }
    }

    // rho * T_d = 2 mJ at mu = 1, so rho * mu * T_d = 2 mJ needs mu = 1;
    // with T_d = 0.1 and rho = 0.04, mu = 0.5 gives 2 mJ.
    fn timing() -> SlotTiming {
        SlotTiming::new(0.01, 0.1)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn harvest_products() {
        assert!(close(harvested_energy(0.05, 0.2, 0.1), 1.0e-3));
        assert_eq!(harvested_energy(0.05, 0.0, 0.1), 0.0);
        assert!(close(harvested_energy(0.05, 1.0, 0.1), 5.0e-3));
    }

    #[test]
    fn transmit_budget_examples() {
        let d = device(3e-3, 2e-3, 0.04);
        assert!(close(max_transmit_energy(&d, 0.5, &timing()), 1.0e-3));
        let d = device(4e-3, 2e-3, 0.04);
        assert!(max_transmit_energy(&d, 0.0, &timing()).abs() < 1e-18);
        let d = device(0.0, 2e-3, 0.02);
        assert!(close(max_transmit_energy(&d, 0.5, &timing()), -3.0e-3));
    }

    #[test]
    fn min_ratio_examples() {
        let d = device(3e-3, 2e-3, 0.02);
        assert!(close(min_harvesting_ratio(&d, &timing()).unwrap(), 0.5));
        let d = device(5e-3, 2e-3, 0.02);
        assert_eq!(min_harvesting_ratio(&d, &timing()).unwrap(), MU_EPS);
        let d = device(0.0, 2e-3, 0.02);
        assert!(matches!(
            min_harvesting_ratio(&d, &timing()),
            Err(ModelError::InfeasibleDevice { ratio, .. }) if close(ratio, 2.0)
        ));
    }

    #[test]
    fn transmit_power_examples() {
        let d = device(3e-3, 2e-3, 0.04);
        assert!(close(transmit_power(&d, 0.5, &timing()).unwrap(), 0.02));
        let d0 = device(3e-3, 2e-3, 0.02);
        assert!(transmit_power(&d0, 0.5, &timing()).unwrap().abs() < 1e-15);
        // mu = 0.9: budget 3 + 3.6 - 4 = 2.6 mJ over 0.01 s.
        let p = transmit_power(&d, 0.9, &timing()).unwrap();
        let budget = 3e-3 + 0.04 * 0.9 * 0.1 - 4e-3;
        assert!(close(p, budget / ((1.0 - 0.9) * 0.1)));
        assert!(close(p, 0.26));
        assert!(matches!(transmit_power(&d, 1.0, &timing()), Err(ModelError::UndefinedPower { .. })));
    }

    #[test]
    fn ledger_full_budget_leaves_sensing_reserve() {
        let d = device(3e-3, 2e-3, 0.04);
        let l = ledger_for_device(&d, 0.5, &timing()).unwrap();
        assert!(close(l.residual_next, 2e-3));
        assert!(close(l.consumed, l.transmit + l.sensing + l.idle));
        // E_con = rho mu T_d + E_res - E_sen + E_idle
        assert!(close(l.consumed, 2e-3 + 3e-3 - 2e-3 + 1e-6));
        assert!(close(l.consumed, consumed_energy(&d, 0.5, &timing())));
    }

    #[test]
    fn ledger_rejects_negative_budget() {
        let d = device(0.0, 2e-3, 0.02);
        assert!(matches!(ledger_for_device(&d, 0.5, &timing()), Err(ModelError::InfeasibleMu { .. })));
    }

    #[test]
    fn idle_energy_falls_back_to_power_times_window() {
        let mut d = device(3e-3, 2e-3, 0.04);
        d.idle_energy = None;
        assert!(close(d.idle_energy(&timing()), 2e-4 * 0.005));
    }
}
