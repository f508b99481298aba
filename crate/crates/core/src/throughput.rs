//! Uplink rates per subchannel and per user.

use std::f64::consts::LN_2;

use crate::allocation::Allocation;
use crate::energy::{max_transmit_energy, transmit_time};
use crate::error::ModelError;
use crate::scenario::{BitsDefinition, Device, ModelOptions, Scenario, SlotTiming};

/// Effective gains `H[k][n] = |h_kn|^2 / (gamma (N0 + I_k))`, computed once
/// per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RateContext {
    effective_gain: Vec<Vec<f64>>,
}

impl RateContext {
    pub fn new(scenario: &Scenario) -> Self {
        let effective_gain = scenario
            .devices
            .iter()
            .map(|d| {
                let denom = scenario.snr_gap * (scenario.noise_power + d.received_interference);
                d.gains.iter().map(|g| g / denom).collect()
            })
            .collect();
        Self { effective_gain }
    }

    pub fn effective_gain(&self, k: usize, n: usize) -> f64 {
        self.effective_gain[k][n]
    }

    /// Rate of device `k` on allocation column `n`; zero when the device has
    /// no transmission budget at this ratio.
    pub fn channel_rate(&self, scenario: &Scenario, k: usize, n: usize, mu: f64) -> f64 {
        subchannel_rate_unchecked(
            self.effective_gain[k][n],
            mu,
            &scenario.devices[k],
            &scenario.timing,
            scenario.bandwidth,
            scenario.options,
        )
    }

    /// Sum of [`Self::channel_rate`] over the given columns.
    pub fn rate_over<I>(&self, scenario: &Scenario, k: usize, channels: I, mu: f64) -> f64
    where
        I: IntoIterator<Item = usize>,
    {
        channels.into_iter().map(|n| self.channel_rate(scenario, k, n, mu)).sum()
    }
}

/// Rate of one device on one subchannel:
/// `(t_tr / T) * B * log2(1 + H E_tr / t_tr)`, with the bandwidth factor
/// dropped when `rate_includes_bandwidth` is off.
pub fn subchannel_rate(
    effective_gain: f64,
    mu: f64,
    device: &Device,
    timing: &SlotTiming,
    bandwidth: f64,
    options: ModelOptions,
) -> Result<f64, ModelError> {
    let energy = max_transmit_energy(device, mu, timing);
    if energy < 0.0 {
        return Err(ModelError::InfeasibleMu { mu, energy });
    }
    Ok(subchannel_rate_unchecked(effective_gain, mu, device, timing, bandwidth, options))
}

fn subchannel_rate_unchecked(
    effective_gain: f64,
    mu: f64,
    device: &Device,
    timing: &SlotTiming,
    bandwidth: f64,
    options: ModelOptions,
) -> f64 {
    let t_tr = transmit_time(mu, timing);
    let energy = max_transmit_energy(device, mu, timing);
    if t_tr <= 0.0 || energy <= 0.0 {
        return 0.0;
    }
    let scale = if options.rate_includes_bandwidth { bandwidth } else { 1.0 };
    scale * (t_tr / timing.slot) * (effective_gain * energy / t_tr).ln_1p() / LN_2
}

/// Total rate of user `k` over the channels it holds.
pub fn user_rate(scenario: &Scenario, ctx: &RateContext, allocation: &Allocation, k: usize) -> f64 {
    ctx.rate_over(scenario, k, allocation.channels_of(k), allocation.mu[k])
}

/// Bits a device with total rate `rate` delivers in the slot.
pub fn bits_for_rate(scenario: &Scenario, rate: f64, mu: f64) -> f64 {
    match scenario.options.bits_definition {
        BitsDefinition::TransmitTime => rate * transmit_time(mu, &scenario.timing),
        BitsDefinition::SlotTotal => rate * scenario.timing.slot,
    }
}

pub fn delivered_bits(scenario: &Scenario, ctx: &RateContext, allocation: &Allocation, k: usize) -> f64 {
    bits_for_rate(scenario, user_rate(scenario, ctx, allocation, k), allocation.mu[k])
}
