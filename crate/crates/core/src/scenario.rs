//! Problem instance: sensors, UAV mission, channel parameters and solver
//! tolerances, plus the TOML scenario file format.
//!
//! Channel quantities are given in dB/dBm in the file and converted to linear
//! values exactly once, when [`ChannelParams`] is constructed. The dB inputs are
//! kept alongside so a scenario serializes back to the identical file.

use std::path::Path;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{FadingDist, FadingModel};
use crate::error::{Error, Result};

/// Horizontal coordinate in meters.
pub type Point = Vector2<f64>;

/// Default number of fading blocks per slot.
pub const DEFAULT_BLOCKS_PER_SLOT: usize = 100;
pub const DEFAULT_KAPPA: f64 = 1e-4;
pub const DEFAULT_MAX_OUTER: usize = 50;
pub const DEFAULT_MAX_SCA: usize = 100;
/// Largest seed a scenario file can hold (TOML integers are signed 64-bit).
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sensor {
    pub position: Point,
    /// Data to deliver, bits.
    pub data_bits: f64,
    /// Transmit power, watts.
    pub tx_power: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mission {
    /// Flight altitude H, meters.
    pub altitude: f64,
    /// Maximum speed, m/s.
    pub v_max: f64,
    /// Horizon T, seconds.
    pub horizon: f64,
    /// Slot length, seconds.
    pub slot_len: f64,
    pub num_slots: usize,
    pub q_start: Point,
    pub q_end: Point,
    pub blocks_per_slot: usize,
}

impl Mission {
    /// Maximum displacement per slot, meters.
    pub fn d_max(&self) -> f64 {
        self.slot_len * self.v_max
    }
}

/// Channel parameters as they appear in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub beta0_db: f64,
    pub noise_dbm: f64,
    pub gamma_db: f64,
    pub alpha: f64,
    pub rician_k: f64,
    pub epsilon: f64,
    pub bandwidth_hz: f64,
}

/// Validated channel parameters with linear-scale values and the cached
/// outage quantile `F⁻¹(ε)` of the fading distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    config: ChannelConfig,
    beta0: f64,
    noise_power: f64,
    snr_gap: f64,
    fading: FadingDist,
    outage_quantile: f64,
}

impl ChannelParams {
    pub fn new(config: ChannelConfig) -> Result<Self> {
        let c = &config;
        for (name, v) in [
            ("beta0_db", c.beta0_db),
            ("noise_dbm", c.noise_dbm),
            ("gamma_db", c.gamma_db),
            ("alpha", c.alpha),
            ("rician_k", c.rician_k),
            ("epsilon", c.epsilon),
            ("bandwidth_hz", c.bandwidth_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("channel.{name} must be finite")));
            }
        }
        if c.alpha < 2.0 {
            return Err(Error::Validation(format!(
                "channel.alpha must be >= 2, got {}",
                c.alpha
            )));
        }
        if c.gamma_db < 0.0 {
            return Err(Error::Validation(format!(
                "channel.gamma_db must be >= 0 (snr gap >= 1), got {}",
                c.gamma_db
            )));
        }
        if c.rician_k < 0.0 {
            return Err(Error::Validation(format!(
                "channel.rician_k must be >= 0, got {}",
                c.rician_k
            )));
        }
        if !(c.epsilon > 0.0 && c.epsilon < 1.0) {
            return Err(Error::Validation(format!(
                "channel.epsilon must lie in (0, 1), got {}",
                c.epsilon
            )));
        }
        if c.bandwidth_hz <= 0.0 {
            return Err(Error::Validation(format!(
                "channel.bandwidth_hz must be > 0, got {}",
                c.bandwidth_hz
            )));
        }
        let fading = FadingDist::new(c.rician_k)?;
        let outage_quantile = fading.inv_cdf(c.epsilon)?;
        Ok(Self {
            beta0: db_to_linear(c.beta0_db),
            noise_power: dbm_to_watts(c.noise_dbm),
            snr_gap: db_to_linear(c.gamma_db),
            fading,
            outage_quantile,
            config,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    /// Reference power gain at 1 m, linear.
    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// Noise power, watts.
    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// SNR gap, linear.
    pub fn snr_gap(&self) -> f64 {
        self.snr_gap
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn bandwidth(&self) -> f64 {
        self.config.bandwidth_hz
    }

    pub fn fading(&self) -> &FadingDist {
        &self.fading
    }

    /// `F⁻¹(ε)`: the fading power level exceeded with probability `1 − ε`.
    pub fn outage_quantile(&self) -> f64 {
        self.outage_quantile
    }

    /// Same channel with a different outage target.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(ChannelConfig {
            epsilon,
            ..self.config.clone()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_max_sca")]
    pub max_sca: usize,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_max_outer() -> usize {
    DEFAULT_MAX_OUTER
}
fn default_max_sca() -> usize {
    DEFAULT_MAX_SCA
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            seed: 0,
            max_outer: DEFAULT_MAX_OUTER,
            max_sca: DEFAULT_MAX_SCA,
        }
    }
}

/// A validated problem instance. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub sensors: Vec<Sensor>,
    pub mission: Mission,
    pub channel: ChannelParams,
    pub solver: SolverConfig,
}

/// Derived per-instance constants.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstants {
    /// Maximum displacement per slot, meters.
    pub d_max: f64,
    /// Energy per fully-awake slot for each sensor, joules.
    pub energy: Vec<f64>,
    /// Normalized demand for each sensor, bps/Hz (rate-slots).
    pub demand: Vec<f64>,
}

impl Scenario {
    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn num_slots(&self) -> usize {
        self.mission.num_slots
    }

    pub fn derived(&self) -> DerivedConstants {
        let dt = self.mission.slot_len;
        DerivedConstants {
            d_max: self.mission.d_max(),
            energy: self.sensors.iter().map(|s| dt * s.tx_power).collect(),
            demand: self
                .sensors
                .iter()
                .map(|s| s.data_bits / (self.channel.bandwidth() * dt))
                .collect(),
        }
    }

    /// Per-slot energy `E_k = δt·P_k`.
    pub fn slot_energy(&self, k: usize) -> f64 {
        self.mission.slot_len * self.sensors[k].tx_power
    }

    /// Normalized demand `r_k = S_k / (B·δt)`.
    pub fn demand(&self, k: usize) -> f64 {
        self.sensors[k].data_bits / (self.channel.bandwidth() * self.mission.slot_len)
    }

    /// Arithmetic mean of the sensor positions.
    pub fn sensor_centroid(&self) -> Point {
        let sum = self
            .sensors
            .iter()
            .fold(Point::zeros(), |acc, s| acc + s.position);
        sum / self.sensors.len() as f64
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let channel = ChannelParams::new(file.channel)?;
        let m = &file.mission;
        for (name, v) in [
            ("H", m.altitude),
            ("v_max", m.v_max),
            ("T", m.horizon),
            ("dt", m.slot_len),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "mission.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !m.q0.iter().chain(m.q_f.iter()).all(|v| v.is_finite()) {
            return Err(Error::Validation("mission.q0/qF must be finite".into()));
        }
        let ratio = m.horizon / m.slot_len;
        let num_slots = ratio.round();
        if (m.horizon - num_slots * m.slot_len).abs() > 1e-9 * m.horizon {
            return Err(Error::Validation(format!(
                "mission.T = {} is not an integer multiple of dt = {}",
                m.horizon, m.slot_len
            )));
        }
        let num_slots = num_slots as usize;
        if num_slots < 2 {
            return Err(Error::Validation(format!(
                "mission needs at least 2 slots, T/dt = {num_slots}"
            )));
        }
        let blocks_per_slot = m.blocks_per_slot.unwrap_or(DEFAULT_BLOCKS_PER_SLOT);
        if blocks_per_slot < 1 {
            return Err(Error::Validation("mission.L must be >= 1".into()));
        }
        let q_start = Point::new(m.q0[0], m.q0[1]);
        let q_end = Point::new(m.q_f[0], m.q_f[1]);
        let span = (q_end - q_start).norm();
        if span > m.v_max * m.horizon {
            return Err(Error::Validation(format!(
                "endpoint unreachable: |qF - q0| = {span} m exceeds v_max*T = {} m",
                m.v_max * m.horizon
            )));
        }
        if m.v_max * m.slot_len > 0.1 * m.altitude {
            log::warn!(
                "v_max*dt = {} m is not small against H = {} m; slot positions are coarse",
                m.v_max * m.slot_len,
                m.altitude
            );
        }
        let mission = Mission {
            altitude: m.altitude,
            v_max: m.v_max,
            horizon: m.horizon,
            slot_len: m.slot_len,
            num_slots,
            q_start,
            q_end,
            blocks_per_slot,
        };

        if file.sensors.is_empty() {
            return Err(Error::Validation("at least one sensor is required".into()));
        }
        let mut sensors = Vec::with_capacity(file.sensors.len());
        for (k, s) in file.sensors.iter().enumerate() {
            if !(s.x.is_finite() && s.y.is_finite()) {
                return Err(Error::Validation(format!(
                    "sensor {k}: position must be finite"
                )));
            }
            if !(s.data_bits.is_finite() && s.data_bits > 0.0) {
                return Err(Error::Validation(format!(
                    "sensor {k}: data_bits must be > 0, got {}",
                    s.data_bits
                )));
            }
            if !(s.power_w.is_finite() && s.power_w > 0.0) {
                return Err(Error::Validation(format!(
                    "sensor {k}: power_w must be > 0, got {}",
                    s.power_w
                )));
            }
            sensors.push(Sensor {
                position: Point::new(s.x, s.y),
                data_bits: s.data_bits,
                tx_power: s.power_w,
            });
        }

        let solver = file.solver.unwrap_or_default();
        if solver.seed > MAX_SEED {
            return Err(Error::Validation(format!(
                "solver.seed must be <= {MAX_SEED}, got {}",
                solver.seed
            )));
        }
        if !(solver.kappa > 0.0) {
            return Err(Error::Validation(format!(
                "solver.kappa must be > 0, got {}",
                solver.kappa
            )));
        }

        Ok(Scenario {
            sensors,
            mission,
            channel,
            solver,
        })
    }

    pub fn to_file(&self) -> ScenarioFile {
        let m = &self.mission;
        ScenarioFile {
            mission: MissionFile {
                altitude: m.altitude,
                v_max: m.v_max,
                horizon: m.horizon,
                slot_len: m.slot_len,
                q0: [m.q_start.x, m.q_start.y],
                q_f: [m.q_end.x, m.q_end.y],
                blocks_per_slot: Some(m.blocks_per_slot),
            },
            channel: self.channel.config().clone(),
            solver: Some(self.solver.clone()),
            sensors: self
                .sensors
                .iter()
                .map(|s| SensorFile {
                    x: s.position.x,
                    y: s.position.y,
                    data_bits: s.data_bits,
                    power_w: s.tx_power,
                })
                .collect(),
        }
    }

    pub fn parse_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::parse("scenario", e.message()))?;
        Self::from_file(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScenarioFile = toml::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.message()))?;
        Self::from_file(file)
    }

    /// Copy with every sensor's data size replaced.
    pub fn with_data_bits(&self, bits: f64) -> Result<Self> {
        let mut file = self.to_file();
        file.sensors.iter_mut().for_each(|s| s.data_bits = bits);
        Self::from_file(file)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut s = self.clone();
        s.channel = self.channel.with_epsilon(epsilon)?;
        Ok(s)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        let mut file = self.to_file();
        file.mission.horizon = horizon;
        Self::from_file(file)
    }
}

/// Places `count` sensors uniformly at random in the square
/// `[-half_width, half_width]²`. Deterministic in `seed`.
pub fn random_sensor_positions(count: usize, half_width: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Point::new(
                rng.random_range(-half_width..=half_width),
                rng.random_range(-half_width..=half_width),
            )
        })
        .collect()
}

// --- file format -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub mission: MissionFile,
    pub channel: ChannelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    pub sensors: Vec<SensorFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionFile {
    #[serde(rename = "H")]
    pub altitude: f64,
    pub v_max: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "dt")]
    pub slot_len: f64,
    pub q0: [f64; 2],
    #[serde(rename = "qF")]
    pub q_f: [f64; 2],
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub blocks_per_slot: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorFile {
    pub x: f64,
    pub y: f64,
    pub data_bits: f64,
    pub power_w: f64,
}
