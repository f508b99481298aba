//! Problem instances and seeded scenario generation.
//!
//! A [`Scenario`] is an immutable snapshot of one time slot: the devices with
//! their energy state and channel gains, the sensed channel sets, the primary
//! users' interference thresholds and the access point's energy budget.
//! [`generate_scenario`] draws random instances with Rayleigh fading over a
//! power-law path loss. Every random quantity comes from its own substream
//! keyed by `(seed, kind, device, channel)`, so a scenario with more channels
//! or more devices extends a smaller one generated from the same seed instead
//! of reshuffling it.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ModelError;

/// Slot partition: a control slot for sensing and reporting, then a data slot
/// split between harvesting and uplink transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotTiming {
    /// Full slot length T (s).
    pub slot: f64,
    /// Control slot T_c (s).
    pub control: f64,
    /// Data slot T_d (s).
    pub data: f64,
}

impl SlotTiming {
    pub fn new(control: f64, data: f64) -> Self {
        Self { slot: control + data, control, data }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.control > 0.0 && self.data > 0.0 && self.slot > 0.0) {
            return invalid("slot durations must be strictly positive");
        }
        if (self.slot - (self.control + self.data)).abs() > 1e-12 * self.slot {
            return invalid("slot length must equal control + data");
        }
        Ok(())
    }
}

impl Default for SlotTiming {
    fn default() -> Self {
        Self::new(0.010, 0.090)
    }
}

/// Distribution of the number of bits waiting in a device buffer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BufferDistribution {
    Uniform { a: f64, b: f64 },
    Exponential { lambda: f64 },
}

impl BufferDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Uniform { a, b } => 0.5 * (a + b),
            Self::Exponential { lambda } => 1.0 / lambda,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Self::Uniform { a, b } if 0.0 <= a && a < b && b.is_finite() => Ok(()),
            Self::Exponential { lambda } if lambda > 0.0 && lambda.is_finite() => Ok(()),
            other => invalid(format!("bad buffer distribution {other:?}")),
        }
    }

    /// Draws one buffer occupancy by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        match *self {
            Self::Uniform { a, b } => a + (b - a) * u,
            Self::Exponential { lambda } => -u.ln() / lambda,
        }
    }
}

/// One energy-harvesting secondary device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: usize,
    /// Residual energy at the start of the slot (J).
    pub residual_energy: f64,
    /// Energy spent on sensing per slot (J).
    pub sensing_energy: f64,
    /// Idle power (W), drawn during the part of the control slot not spent sensing.
    pub idle_power: f64,
    /// Sensing time (s), at most the control slot.
    pub sensing_time: f64,
    /// Aggregate idle energy per slot (J). Takes precedence over
    /// `idle_power * (control - sensing_time)` when present.
    #[serde(default)]
    pub idle_energy: Option<f64>,
    /// Mean harvesting rate (W).
    pub harvest_rate: f64,
    /// Power gain |h|^2 towards the AP on each allocatable channel.
    pub gains: Vec<f64>,
    /// Interference received from primary users at the AP for this device (W).
    pub received_interference: f64,
    pub buffer: BufferDistribution,
    /// Interference caused at each PU per watt transmitted, indexed
    /// `[absolute channel][pu]` over all sensed channels.
    pub cross_interference: Vec<Vec<f64>>,
}

impl Device {
    pub fn idle_energy(&self, timing: &SlotTiming) -> f64 {
        self.idle_energy.unwrap_or(self.idle_power * (timing.control - self.sensing_time))
    }
}

/// Outcome of cooperative sensing, abstracted to channel sets and decision
/// probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingModel {
    /// Channels sensed busy (N_u), absolute indices.
    pub unavailable: Vec<usize>,
    /// Channels sensed idle (N_a). Allocation column `j` is `available[j]`.
    pub available: Vec<usize>,
    /// P1,n for every channel of `unavailable`, same order.
    pub p_correct_busy: Vec<f64>,
    /// P2,n for every channel of `available`, same order.
    pub p_missed_busy: Vec<f64>,
}

impl SensingModel {
    pub fn total_channels(&self) -> usize {
        self.unavailable.len() + self.available.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let total = self.total_channels();
        let mut seen = vec![false; total];
        for &c in self.unavailable.iter().chain(&self.available) {
            if c >= total {
                return invalid(format!("channel index {c} out of range {total}"));
            }
            if std::mem::replace(&mut seen[c], true) {
                return invalid(format!("channel {c} appears twice in the sensed sets"));
            }
        }
        if self.p_correct_busy.len() != self.unavailable.len() || self.p_missed_busy.len() != self.available.len() {
            return invalid("one sensing probability per sensed channel is required");
        }
        if self.p_correct_busy.iter().chain(&self.p_missed_busy).any(|p| !(0.0..=1.0).contains(p)) {
            return invalid("sensing probabilities must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Switches between literal and dimensioned readings of the rate formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Multiply the per-channel spectral efficiency by the bandwidth so rates
    /// come out in bits/s. `false` keeps bits/s/Hz.
    pub rate_includes_bandwidth: bool,
    pub bits_definition: BitsDefinition,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { rate_includes_bandwidth: true, bits_definition: BitsDefinition::TransmitTime }
    }
}

/// How many bits a device delivers in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitsDefinition {
    /// `R_k * t_tr`.
    TransmitTime,
    /// `R_k * T`; `R_k` already averages over the slot.
    SlotTotal,
}

/// A complete single-slot problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub devices: Vec<Device>,
    /// Interference threshold of every primary user (W).
    pub pu_thresholds: Vec<f64>,
    pub timing: SlotTiming,
    /// Per-subchannel bandwidth (Hz).
    pub bandwidth: f64,
    /// Noise power over one subchannel (W).
    pub noise_power: f64,
    /// SNR gap (linear).
    pub snr_gap: f64,
    /// Energy the AP can radiate for harvesting per slot (J).
    pub ap_energy_budget: f64,
    pub sensing: SensingModel,
    /// Spectral-efficiency weight per device.
    pub eta: Vec<f64>,
    /// Slope of the linear minimum-rate function.
    pub min_rate_coeff: f64,
    #[serde(default)]
    pub options: ModelOptions,
}

impl Scenario {
    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_channels(&self) -> usize {
        self.sensing.available.len()
    }

    pub fn num_pus(&self) -> usize {
        self.pu_thresholds.len()
    }

    /// Minimum rate `h(E[X_k])` in bits/s: the mean buffer drained at
    /// `min_rate_coeff` of its size per slot.
    pub fn min_rate(&self, k: usize) -> f64 {
        self.min_rate_coeff * self.devices[k].buffer.mean() / self.timing.slot
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.eta.iter_mut().for_each(|e| *e = eta);
    }

    /// Short content hash used to tie solver reports to their instance.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let scenario: Self = serde_json::from_str(text)
            .map_err(|e| ModelError::InvalidScenario(format!("malformed scenario JSON: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.devices.len();
        let n = self.num_channels();
        let m = self.num_pus();
        if k == 0 || n == 0 {
            return invalid("at least one device and one allocatable channel are required");
        }
        self.timing.validate()?;
        self.sensing.validate()?;
        for (name, v) in [
            ("bandwidth", self.bandwidth),
            ("noise_power", self.noise_power),
            ("snr_gap", self.snr_gap),
            ("ap_energy_budget", self.ap_energy_budget),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive and finite"));
            }
        }
        if !(self.min_rate_coeff >= 0.0 && self.min_rate_coeff.is_finite()) {
            return invalid("min_rate_coeff must be non-negative");
        }
        if self.eta.len() != k || self.eta.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return invalid("one non-negative eta per device is required");
        }
        if self.pu_thresholds.iter().any(|t| !(*t > 0.0)) {
            return invalid("PU thresholds must be positive");
        }
        let total = self.sensing.total_channels();
        for (i, d) in self.devices.iter().enumerate() {
            let bad = |what: &str| invalid(format!("device {i}: {what}"));
            if d.id != i {
                return bad("ids must equal positions");
            }
            if !(d.residual_energy >= 0.0) || !(d.sensing_energy > 0.0) || !(d.harvest_rate > 0.0) {
                return bad("need residual >= 0, sensing > 0 and harvest rate > 0");
            }
            if !(d.idle_power >= 0.0) || !(d.sensing_time >= 0.0) || d.sensing_time > self.timing.control {
                return bad("idle power must be >= 0 and sensing time within the control slot");
            }
            if d.idle_energy.is_some_and(|e| !(e >= 0.0)) {
                return bad("idle energy must be non-negative");
            }
            if !(d.received_interference >= 0.0) {
                return bad("received interference must be non-negative");
            }
            if d.gains.len() != n || d.gains.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                return bad("one finite non-negative gain per allocatable channel is required");
            }
            if d.cross_interference.len() != total
                || d.cross_interference
                    .iter()
                    .any(|row| row.len() != m || row.iter().any(|f| !(*f >= 0.0 && f.is_finite())))
            {
                return bad("cross-interference must be a non-negative [channel][pu] matrix");
            }
            d.buffer.validate()?;
        }
        Ok(())
    }
}

/// Parameter map for [`generate_scenario`]. Every field has a default, so a
/// partial JSON object is a valid override set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub timing: SlotTiming,
    pub sensing_time: f64,
    pub bandwidth: f64,
    pub noise_power: f64,
    pub interference_threshold: f64,
    pub snr_gap: f64,
    pub sensing_energy: f64,
    pub residual_energy: f64,
    pub idle_energy: f64,
    /// Range of the mean harvest rate drawn per device (W).
    pub harvest_rate_range: (f64, f64),
    /// Device-to-AP distance range (m); the lower end keeps the path loss finite.
    pub distance_range: (f64, f64),
    /// Device-to-PU distance range (m) for the default cross-interference factors.
    pub pu_distance_range: (f64, f64),
    pub path_loss_exponent: f64,
    /// Rayleigh scale of the fading amplitude.
    pub rayleigh_sigma: f64,
    pub buffer: BufferDistribution,
    pub eta: f64,
    pub eta_per_device: Option<Vec<f64>>,
    pub min_rate_coeff: f64,
    pub ap_energy_budget_per_device: f64,
    /// Absolute AP budget; overrides the per-device default when present.
    pub ap_energy_budget: Option<f64>,
    /// Number of sensed-busy channels; defaults to half the allocatable count.
    pub unavailable_channels: Option<usize>,
    pub p_correct_busy: f64,
    pub p_missed_busy: f64,
    pub received_interference: f64,
    pub options: ModelOptions,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            timing: SlotTiming::default(),
            sensing_time: 0.005,
            bandwidth: 62.5e3,
            noise_power: 1e-13,
            interference_threshold: 5e-13,
            snr_gap: 1.0,
            sensing_energy: 2e-3,
            residual_energy: 3e-3,
            idle_energy: 1e-6,
            harvest_rate_range: (0.02, 0.10),
            distance_range: (1.0, 50.0),
            pu_distance_range: (150.0, 300.0),
            path_loss_exponent: 3.0,
            rayleigh_sigma: std::f64::consts::FRAC_1_SQRT_2,
            buffer: BufferDistribution::Uniform { a: 0.0, b: 1e5 },
            eta: 0.0,
            eta_per_device: None,
            min_rate_coeff: 0.1,
            ap_energy_budget_per_device: 6e-3,
            ap_energy_budget: None,
            unavailable_channels: None,
            p_correct_busy: 0.9,
            p_missed_busy: 0.1,
            received_interference: 0.0,
            options: ModelOptions::default(),
        }
    }
}

impl ScenarioParams {
    fn validate(&self) -> Result<(), ModelError> {
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo < hi && hi.is_finite();
        if !range_ok(self.harvest_rate_range) {
            return invalid("harvest_rate_range must satisfy 0 < lo < hi");
        }
        if !range_ok(self.distance_range) || !range_ok(self.pu_distance_range) {
            return invalid("distance ranges must satisfy 0 < lo < hi");
        }
        if !(self.path_loss_exponent > 0.0) || !(self.rayleigh_sigma > 0.0) {
            return invalid("path-loss exponent and Rayleigh scale must be positive");
        }
        if !(self.sensing_time >= 0.0 && self.sensing_time <= self.timing.control) {
            return invalid("sensing time must lie within the control slot");
        }
        if !(self.idle_energy >= 0.0) {
            return invalid("idle energy must be non-negative");
        }
        if !(self.ap_energy_budget_per_device > 0.0) {
            return invalid("ap_energy_budget_per_device must be positive");
        }
        Ok(())
    }
}

const STREAM_DEVICE: u64 = 1;
const STREAM_GAIN: u64 = 2;
const STREAM_PU_LINK: u64 = 3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent RNG for one `(seed, kind, i, j)` cell.
pub(crate) fn substream(seed: u64, kind: u64, i: u64, j: u64) -> ChaCha8Rng {
    let key = [kind, i, j].into_iter().fold(splitmix64(seed), |acc, v| splitmix64(acc ^ v));
    ChaCha8Rng::seed_from_u64(key)
}

/// Power gain `(Z * d^-beta)^2` with Rayleigh `Z` and uniform `d` in `(lo, hi]`.
fn path_gain(rng: &mut ChaCha8Rng, sigma: f64, (lo, hi): (f64, f64), beta: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    let z = sigma * (-2.0 * u.ln()).sqrt();
    let v: f64 = rng.random();
    let d = hi - v * (hi - lo);
    let h = z * d.powf(-beta);
    h * h
}

/// Draws a scenario with `k` devices, `n` allocatable channels and `m` PUs.
pub fn generate_scenario(
    seed: u64,
    k: usize,
    n: usize,
    m: usize,
    params: &ScenarioParams,
) -> Result<Scenario, ModelError> {
    if k == 0 || n == 0 {
        return invalid("scenario generation needs K >= 1 and N >= 1");
    }
    params.validate()?;
    let n_unavailable = params.unavailable_channels.unwrap_or(n / 2);
    let total = n + n_unavailable;
    let timing = params.timing;
    let idle_window = timing.control - params.sensing_time;
    let idle_power = if idle_window > 0.0 { params.idle_energy / idle_window } else { 0.0 };

    let devices = (0..k)
        .map(|i| {
            let mut rng = substream(seed, STREAM_DEVICE, i as u64, 0);
            let (lo, hi) = params.harvest_rate_range;
            let harvest_rate = rng.random_range(lo..hi);
            let gains = (0..n)
                .map(|c| {
                    let mut rng = substream(seed, STREAM_GAIN, i as u64, c as u64);
                    path_gain(&mut rng, params.rayleigh_sigma, params.distance_range, params.path_loss_exponent)
                })
                .collect();
            let pu_links: Vec<f64> = (0..m)
                .map(|p| {
                    let mut rng = substream(seed, STREAM_PU_LINK, i as u64, p as u64);
                    path_gain(&mut rng, params.rayleigh_sigma, params.pu_distance_range, params.path_loss_exponent)
                })
                .collect();
            Device {
                id: i,
                residual_energy: params.residual_energy,
                sensing_energy: params.sensing_energy,
                idle_power,
                sensing_time: params.sensing_time,
                idle_energy: Some(params.idle_energy),
                harvest_rate,
                gains,
                received_interference: params.received_interference,
                buffer: params.buffer,
                cross_interference: vec![pu_links; total],
            }
        })
        .collect();

    let eta = match &params.eta_per_device {
        Some(v) if v.len() == k => v.clone(),
        Some(v) => return invalid(format!("eta_per_device has {} entries for {k} devices", v.len())),
        None => vec![params.eta; k],
    };

    let scenario = Scenario {
        devices,
        pu_thresholds: vec![params.interference_threshold; m],
        timing,
        bandwidth: params.bandwidth,
        noise_power: params.noise_power,
        snr_gap: params.snr_gap,
        ap_energy_budget: params.ap_energy_budget.unwrap_or(params.ap_energy_budget_per_device * k as f64),
        sensing: SensingModel {
            available: (0..n).collect(),
            unavailable: (n..total).collect(),
            p_correct_busy: vec![params.p_correct_busy; n_unavailable],
            p_missed_busy: vec![params.p_missed_busy; n],
        },
        eta,
        min_rate_coeff: params.min_rate_coeff,
        options: params.options,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError::InvalidScenario(msg.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_scenario(seed: u64) -> Scenario {
        generate_scenario(seed, 2, 4, 1, &ScenarioParams::default()).unwrap()
    }

    #[test]
    fn defaults_match_experiment_setup() {
        let s = default_scenario(7);
        assert_eq!(s.bandwidth, 62_500.0);
        assert_eq!(s.noise_power, 1e-13);
        assert_eq!(s.pu_thresholds, vec![5e-13]);
        assert_eq!(s.devices[0].sensing_energy, 2e-3);
        assert_eq!(s.devices[0].residual_energy, 3e-3);
        let idle = s.devices[0].idle_power * (s.timing.control - s.devices[0].sensing_time);
        assert!((idle - 1e-6).abs() < 1e-18);
        assert_eq!(s.devices[0].idle_energy(&s.timing), 1e-6);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(default_scenario(7), default_scenario(7));
        assert_eq!(default_scenario(7).fingerprint(), default_scenario(7).fingerprint());
    }

    #[test]
    fn different_seeds_give_different_gains() {
        let a = default_scenario(7);
        let b = default_scenario(8);
        let differs = a.devices.iter().zip(&b.devices).any(|(x, y)| x.gains.iter().zip(&y.gains).any(|(g, h)| g != h));
        assert!(differs);
    }

    #[test]
    fn larger_instances_extend_smaller_ones() {
        let p = ScenarioParams::default();
        let small = generate_scenario(3, 2, 8, 1, &p).unwrap();
        let big = generate_scenario(3, 4, 16, 1, &p).unwrap();
        for (s, b) in small.devices.iter().zip(&big.devices) {
            assert_eq!(s.harvest_rate, b.harvest_rate);
            assert_eq!(s.gains[..], b.gains[..8]);
        }
    }

    #[test]
    fn rejects_empty_dimensions_and_bad_overrides() {
        let p = ScenarioParams::default();
        assert!(generate_scenario(1, 0, 4, 1, &p).is_err());
        assert!(generate_scenario(1, 2, 0, 1, &p).is_err());
        let bad = ScenarioParams { distance_range: (0.0, 50.0), ..p.clone() };
        assert!(generate_scenario(1, 2, 4, 1, &bad).is_err());
        let bad = ScenarioParams { buffer: BufferDistribution::Uniform { a: 5.0, b: 5.0 }, ..p.clone() };
        assert!(generate_scenario(1, 2, 4, 1, &bad).is_err());
        let bad = ScenarioParams { p_missed_busy: 1.5, ..p };
        assert!(generate_scenario(1, 2, 4, 1, &bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = default_scenario(11);
        let back = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn partial_param_maps_fill_defaults() {
        let p: ScenarioParams = serde_json::from_str(r#"{"eta": 2.5, "min_rate_coeff": 0.3}"#).unwrap();
        assert_eq!(p.eta, 2.5);
        assert_eq!(p.bandwidth, 62.5e3);
    }

    #[test]
    fn buffer_means() {
        assert_eq!(BufferDistribution::Uniform { a: 0.0, b: 1000.0 }.mean(), 500.0);
        assert_eq!(BufferDistribution::Exponential { lambda: 1e-3 }.mean(), 1000.0);
    }

    #[test]
    fn sensing_sets_must_be_disjoint() {
        let mut s = default_scenario(1);
        s.sensing.unavailable[0] = 0;
        assert!(s.validate().is_err());
    }
}
