//! Scenario configuration.
//!
//! Files are sectioned `key = value` text (a TOML subset). Road and speed
//! figures are written in miles and mph, the units the reference scenario
//! is quoted in, and converted to SI on load. Every key is optional; a
//! missing key takes the reference default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::delay::{Complexity, FogScaling, QueueFormula};
use crate::detector::{DensityCount, DetectorConfig, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::model::{BEACON_PERIOD_MS, DEFAULT_BEACON_BITS};
use crate::probability::DetectionProbParams;
use crate::traffic::GreenshieldParams;

pub const METERS_PER_MILE: f64 = 1609.344;
pub const MPS_PER_MPH: f64 = 0.44704;
pub const LANE_WIDTH_M: f64 = 3.7;
pub const MAX_VEHICLES: u32 = 4000;
pub const MAX_ROGUE_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayConfig {
    pub bandwidth_hz: f64,
    pub tx_power: f64,
    pub channel_coeff: f64,
    pub noise_power: f64,
    /// Fog queue service rate, beacons/s. The arrival rate comes from the run.
    pub service_rate: f64,
    pub queue_formula: QueueFormula,
    pub cycles_per_bit: f64,
    pub fog: FogScaling,
    pub complexity: Complexity,
}

impl Default for DelayConfig {
    fn default() -> Self {
        DelayConfig {
            bandwidth_hz: 1e7,
            tx_power: 1.0,
            channel_coeff: 1.0,
            noise_power: 0.1,
            service_rate: 1e5,
            queue_formula: QueueFormula::Closed,
            cycles_per_bit: 10.0,
            fog: FogScaling::PerObu { per_obu: 1e6 },
            complexity: Complexity::Linear,
        }
    }
}

/// Validated scenario in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub road_length_m: f64,
    pub lanes: u8,
    pub n_vehicles: u32,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub tx_range_m: f64,
    pub beacon_period_ms: u64,
    pub beacon_size_bits: u32,
    pub rogue_fraction: f64,
    pub sybil_ids_per_rogue: u32,
    pub rogue_speed_factor: f64,
    /// Half-width of the uniform multiplicative jitter on honest speeds.
    pub honest_jitter: f64,
    pub base_loss: f64,
    pub density_coeff: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub threshold_policy: ThresholdPolicy,
    pub density_count: DensityCount,
    pub greenshield: GreenshieldParams,
    pub delay: DelayConfig,
    pub prob: DetectionProbParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let road_length_m = 5.0 * METERS_PER_MILE;
        let lanes = 2;
        let speed_max_mps = 65.0 * MPS_PER_MPH;
        ScenarioConfig {
            road_length_m,
            lanes,
            n_vehicles: 500,
            speed_min_mps: 30.0 * MPS_PER_MPH,
            speed_max_mps,
            tx_range_m: 500.0,
            beacon_period_ms: BEACON_PERIOD_MS,
            beacon_size_bits: DEFAULT_BEACON_BITS,
            rogue_fraction: 0.1,
            sybil_ids_per_rogue: 3,
            rogue_speed_factor: 0.2,
            honest_jitter: 0.05,
            base_loss: 0.01,
            density_coeff: 1.0,
            duration_s: 30.0,
            seed: 1,
            threshold_policy: ThresholdPolicy::default(),
            density_count: DensityCount::ObservedIds,
            greenshield: GreenshieldParams {
                s_max: speed_max_mps,
                rho_max: GreenshieldParams::jam_count(road_length_m, lanes),
            },
            delay: DelayConfig::default(),
            prob: DetectionProbParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn rounds(&self) -> u64 {
        (self.duration_s * 1000.0 / self.beacon_period_ms as f64).round() as u64
    }

    pub fn rogue_count(&self) -> u32 {
        (self.rogue_fraction * f64::from(self.n_vehicles) + 1e-9).floor() as u32
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            policy: self.threshold_policy,
            greenshield: self.greenshield,
            density_count: self.density_count,
        }
    }

    /// Hex digest of the canonical JSON form; identifies the run inputs.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.threshold_policy = ThresholdPolicy::SpeedProportional { alpha };
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} must be positive")))
            }
        }
        fn unit(field: &str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} outside [0, 1]")))
            }
        }

        if !(2..=MAX_VEHICLES).contains(&self.n_vehicles) {
            return Err(Error::config(
                "n_vehicles",
                format!("{} outside [2, {MAX_VEHICLES}]; detection needs at least two vehicles", self.n_vehicles),
            ));
        }
        positive("road_length", self.road_length_m)?;
        if !(1..=2).contains(&self.lanes) {
            return Err(Error::config("lanes", format!("{} not in {{1, 2}}", self.lanes)));
        }
        positive("speed_min", self.speed_min_mps)?;
        positive("speed_max", self.speed_max_mps)?;
        if self.speed_min_mps > self.speed_max_mps {
            return Err(Error::config("speed_min", "exceeds speed_max"));
        }
        positive("tx_range_m", self.tx_range_m)?;
        if self.beacon_period_ms == 0 {
            return Err(Error::config("beacon_period_ms", "must be positive"));
        }
        if self.beacon_size_bits == 0 {
            return Err(Error::config("beacon_size_bytes", "must be positive"));
        }
        if !(0.0..=MAX_ROGUE_FRACTION).contains(&self.rogue_fraction) {
            return Err(Error::config(
                "rogue_fraction",
                format!("{} outside [0, {MAX_ROGUE_FRACTION}]", self.rogue_fraction),
            ));
        }
        if self.sybil_ids_per_rogue == 0 {
            return Err(Error::config("sybil_ids_per_rogue", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.rogue_speed_factor) {
            return Err(Error::config("rogue_speed_factor", "outside [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.honest_jitter) {
            return Err(Error::config("honest_jitter", "outside [0, 1)"));
        }
        unit("base_loss", self.base_loss)?;
        if !(self.density_coeff.is_finite() && self.density_coeff >= 0.0) {
            return Err(Error::config("density_coeff", "must be nonnegative"));
        }
        if self.rounds() == 0 {
            return Err(Error::config("duration_s", "shorter than one beacon period"));
        }
        self.threshold_policy.validate()?;
        self.greenshield.validate()?;
        self.prob.validate()?;

        let d = &self.delay;
        positive("delay.bandwidth_hz", d.bandwidth_hz)?;
        positive("delay.tx_power", d.tx_power)?;
        positive("delay.noise_power", d.noise_power)?;
        if !d.channel_coeff.is_finite() {
            return Err(Error::config("delay.channel_coeff", "must be finite"));
        }
        positive("delay.service_rate", d.service_rate)?;
        positive("delay.cycles_per_bit", d.cycles_per_bit)?;
        match d.fog {
            FogScaling::PerObu { per_obu } => positive("delay.per_obu_cycles", per_obu)?,
            FogScaling::Fixed { capability } => positive("delay.fixed_capability", capability)?,
        }
        if let Complexity::Affine { slope, intercept } = d.complexity {
            if !(slope >= 0.0 && intercept >= 0.0) {
                return Err(Error::config("delay.complexity", "affine terms must be nonnegative"));
            }
        }
        Ok(())
    }
}

// On-disk schema. Every field optional; units as named.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ConfigFile {
    #[serde(default)]
    scenario: ScenarioSection,
    #[serde(default)]
    attack: AttackSection,
    #[serde(default)]
    mobility: MobilitySection,
    #[serde(default)]
    channel: ChannelSection,
    #[serde(default)]
    detector: DetectorSection,
    #[serde(default)]
    greenshield: GreenshieldSection,
    #[serde(default)]
    delay: DelaySection,
    #[serde(default)]
    probability: ProbabilitySection,
    pub(crate) sweep: Option<crate::sweep::SweepSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    n_vehicles: Option<u32>,
    road_length_mi: Option<f64>,
    lanes: Option<u8>,
    speed_min_mph: Option<f64>,
    speed_max_mph: Option<f64>,
    tx_range_m: Option<f64>,
    beacon_period_ms: Option<u64>,
    beacon_size_bytes: Option<u32>,
    duration_s: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttackSection {
    rogue_fraction: Option<f64>,
    sybil_ids_per_rogue: Option<u32>,
    rogue_speed_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MobilitySection {
    honest_jitter: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    base_loss: Option<f64>,
    density_coeff: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ThresholdMode {
    #[default]
    SpeedProportional,
    Fixed,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    threshold: Option<ThresholdMode>,
    alpha: Option<f64>,
    fixed_value_mps: Option<f64>,
    density_count: Option<DensityCount>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GreenshieldSection {
    free_flow_mph: Option<f64>,
    jam_density: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FogMode {
    PerObu,
    Fixed,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ComplexityKind {
    Linear,
    Affine,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DelaySection {
    bandwidth_hz: Option<f64>,
    tx_power: Option<f64>,
    channel_coeff: Option<f64>,
    noise_power: Option<f64>,
    service_rate: Option<f64>,
    queue_formula: Option<QueueFormula>,
    cycles_per_bit: Option<f64>,
    fog_scaling: Option<FogMode>,
    per_obu_cycles: Option<f64>,
    fixed_capability: Option<f64>,
    complexity: Option<ComplexityKind>,
    complexity_slope: Option<f64>,
    complexity_intercept: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbabilitySection {
    x_fog: Option<f64>,
    p_reach: Option<f64>,
    p_honest_correct: Option<f64>,
    p_rogue_correct: Option<f64>,
}

impl ConfigFile {
    pub(crate) fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub(crate) fn to_config(&self) -> Result<ScenarioConfig> {
        let mut c = ScenarioConfig::default();
        let s = &self.scenario;
        if let Some(v) = s.n_vehicles {
            c.n_vehicles = v;
        }
        if let Some(v) = s.road_length_mi {
            c.road_length_m = v * METERS_PER_MILE;
        }
        if let Some(v) = s.lanes {
            c.lanes = v;
        }
        if let Some(v) = s.speed_min_mph {
            c.speed_min_mps = v * MPS_PER_MPH;
        }
        if let Some(v) = s.speed_max_mph {
            c.speed_max_mps = v * MPS_PER_MPH;
        }
        if let Some(v) = s.tx_range_m {
            c.tx_range_m = v;
        }
        if let Some(v) = s.beacon_period_ms {
            c.beacon_period_ms = v;
        }
        if let Some(v) = s.beacon_size_bytes {
            c.beacon_size_bits = v.checked_mul(8).ok_or_else(|| {
                Error::config("beacon_size_bytes", "too large")
            })?;
        }
        if let Some(v) = s.duration_s {
            c.duration_s = v;
        }
        if let Some(v) = s.seed {
            c.seed = v;
        }

        let a = &self.attack;
        if let Some(v) = a.rogue_fraction {
            c.rogue_fraction = v;
        }
        if let Some(v) = a.sybil_ids_per_rogue {
            c.sybil_ids_per_rogue = v;
        }
        if let Some(v) = a.rogue_speed_factor {
            c.rogue_speed_factor = v;
        }
        if let Some(v) = self.mobility.honest_jitter {
            c.honest_jitter = v;
        }
        if let Some(v) = self.channel.base_loss {
            c.base_loss = v;
        }
        if let Some(v) = self.channel.density_coeff {
            c.density_coeff = v;
        }

        let d = &self.detector;
        c.threshold_policy = match d.threshold.as_ref().unwrap_or(&ThresholdMode::SpeedProportional) {
            ThresholdMode::SpeedProportional => ThresholdPolicy::SpeedProportional {
                alpha: d.alpha.unwrap_or(0.3),
            },
            ThresholdMode::Fixed => ThresholdPolicy::Fixed {
                value: d.fixed_value_mps.ok_or_else(|| {
                    Error::config("detector.fixed_value_mps", "required when threshold = \"fixed\"")
                })?,
            },
        };
        if let Some(v) = d.density_count {
            c.density_count = v;
        }

        c.greenshield = GreenshieldParams {
            s_max: self
                .greenshield
                .free_flow_mph
                .map_or(c.speed_max_mps, |v| v * MPS_PER_MPH),
            rho_max: self
                .greenshield
                .jam_density
                .unwrap_or_else(|| GreenshieldParams::jam_count(c.road_length_m, c.lanes)),
        };

        let ds = &self.delay;
        let dc = &mut c.delay;
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = ds.$f { dc.$f = v; } )* };
        }
        take!(bandwidth_hz, tx_power, channel_coeff, noise_power, service_rate, queue_formula, cycles_per_bit);
        dc.fog = match ds.fog_scaling {
            None | Some(FogMode::PerObu) => FogScaling::PerObu {
                per_obu: ds.per_obu_cycles.unwrap_or(1e6),
            },
            Some(FogMode::Fixed) => FogScaling::Fixed {
                capability: ds.fixed_capability.ok_or_else(|| {
                    Error::config("delay.fixed_capability", "required when fog_scaling = \"fixed\"")
                })?,
            },
        };
        dc.complexity = match ds.complexity {
            None | Some(ComplexityKind::Linear) => Complexity::Linear,
            Some(ComplexityKind::Affine) => Complexity::Affine {
                slope: ds.complexity_slope.unwrap_or(1.0),
                intercept: ds.complexity_intercept.unwrap_or(0.0),
            },
        };

        let p = &self.probability;
        if let Some(v) = p.x_fog {
            c.prob.x_fog = v;
        }
        if let Some(v) = p.p_reach {
            c.prob.p_reach = v;
        }
        if let Some(v) = p.p_honest_correct {
            c.prob.p_honest_correct = v;
        }
        if let Some(v) = p.p_rogue_correct {
            c.prob.p_rogue_correct = v;
        }

        c.validate()?;
        Ok(c)
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    ConfigFile::parse(text)?.to_config()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}
