//! Browser bindings for the planner.
//!
//! Each export takes and returns JSON text. The `*_json` functions hold the
//! logic and run natively; the `#[wasm_bindgen]` wrappers only convert errors.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use uav_wsn::baselines::{compare, straight_trajectory, Scheme};
use uav_wsn::channel::{rate_at, FadingDist, FadingModel};
use uav_wsn::scenario::{ChannelParams, Scenario, ScenarioFile, SensorFile};

/// The four-sensor reference scenario the page starts from.
pub const DEFAULT_SCENARIO: &str = include_str!("../../../scenarios/paper_sec4.toml");

/// Largest grid accepted by the browser operations, to keep the page responsive.
pub const MAX_SLOTS: usize = 400;
pub const MAX_SENSORS: usize = 12;
pub const MAX_SWEEP_POINTS: usize = 12;

/// Overrides applied to the reference scenario.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Request {
    /// Mission duration, seconds.
    pub horizon: Option<f64>,
    /// Data per sensor, bits.
    pub data_bits: Option<f64>,
    pub epsilon: Option<f64>,
    pub rician_k: Option<f64>,
    /// Sensor positions `[x, y]` in meters; replaces the reference layout.
    pub sensors: Option<Vec<[f64; 2]>>,
}

impl Request {
    pub fn scenario(&self) -> Result<Scenario, String> {
        let mut file: ScenarioFile = Scenario::parse_toml(DEFAULT_SCENARIO)
            .map_err(|e| e.to_string())?
            .to_file();
        if let Some(t) = self.horizon {
            file.mission.horizon = t;
        }
        if let Some(e) = self.epsilon {
            file.channel.epsilon = e;
        }
        if let Some(k) = self.rician_k {
            file.channel.rician_k = k;
        }
        if let Some(pos) = &self.sensors {
            let template = file.sensors[0].clone();
            file.sensors = pos
                .iter()
                .map(|&[x, y]| SensorFile {
                    x,
                    y,
                    ..template.clone()
                })
                .collect();
        }
        if let Some(bits) = self.data_bits {
            file.sensors.iter_mut().for_each(|s| s.data_bits = bits);
        }
        let s = Scenario::from_file(file).map_err(|e| e.to_string())?;
        if s.num_slots() > MAX_SLOTS {
            return Err(format!(
                "at most {MAX_SLOTS} slots in the browser, got {}",
                s.num_slots()
            ));
        }
        if s.num_sensors() > MAX_SENSORS {
            return Err(format!(
                "at most {MAX_SENSORS} sensors in the browser, got {}",
                s.num_sensors()
            ));
        }
        Ok(s)
    }
}

fn parse_request(json: &str) -> Result<Request, String> {
    if json.trim().is_empty() {
        return Ok(Request::default());
    }
    serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SensorOut {
    pub x: f64,
    pub y: f64,
    /// Energy spent with the optimized schedule, joules.
    pub energy_j: f64,
    /// Slot (0-based) of closest approach.
    pub closest_slot: usize,
    pub closest_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolveOut {
    pub theta: f64,
    pub theta_straight: Option<f64>,
    pub theta_static: Option<f64>,
    /// LP objective after each outer iteration.
    pub theta_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub slot_len: f64,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub trajectory: Vec<[f64; 2]>,
    pub straight: Vec<[f64; 2]>,
    pub static_point: [f64; 2],
    /// Wake-up fraction per sensor and slot.
    pub schedule: Vec<Vec<f64>>,
    pub sensors: Vec<SensorOut>,
}

/// Optimizes trajectory and schedule and evaluates both baselines.
pub fn solve_json(request: &str) -> Result<String, String> {
    let s = parse_request(request)?.scenario()?;
    let cmp = compare(&s);
    let sol = cmp.optimized.as_ref().ok_or_else(|| {
        cmp.results
            .iter()
            .find(|r| r.scheme == Scheme::Optimized)
            .and_then(|r| r.error.clone())
            .unwrap_or_else(|| "optimization failed".into())
    })?;
    let xy = |p: &uav_wsn::scenario::Point| [p.x, p.y];
    let energy = s.derived().energy;
    let sensors = s
        .sensors
        .iter()
        .enumerate()
        .map(|(k, sn)| {
            let (m, d) = sol.trajectory.closest_approach(&sn.position);
            SensorOut {
                x: sn.position.x,
                y: sn.position.y,
                energy_j: energy[k] * sol.schedule.awake_slots(k),
                closest_slot: m,
                closest_m: d,
            }
        })
        .collect();
    let out = SolveOut {
        theta: sol.theta,
        theta_straight: cmp.theta(Scheme::Straight),
        theta_static: cmp.theta(Scheme::Static),
        theta_trace: sol.trace.theta.clone(),
        outer_iterations: sol.trace.outer_iterations,
        converged: sol.trace.converged,
        slot_len: s.mission.slot_len,
        start: xy(&s.mission.q_start),
        end: xy(&s.mission.q_end),
        trajectory: sol.trajectory.points().iter().map(xy).collect(),
        straight: straight_trajectory(&s).points().iter().map(xy).collect(),
        static_point: xy(&s.sensor_centroid()),
        schedule: (0..s.num_sensors())
            .map(|k| sol.schedule.row(k).to_vec())
            .collect(),
        sensors,
    };
    Ok(serde_json::to_string(&out).expect("solve output serializes"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FadingOut {
    pub rician_k: f64,
    pub epsilon: f64,
    /// `F⁻¹(ε)`: fading power exceeded with probability `1 − ε`.
    pub quantile: f64,
    /// `[z, F(z)]` samples of the fading-power CDF.
    pub cdf: Vec<[f64; 2]>,
    /// `[horizontal distance, rate]`: outage-constrained rate in bps/Hz.
    pub rate: Vec<[f64; 2]>,
    /// Same distances with no fading margin (`F⁻¹(ε) = 1`).
    pub rate_mean: Vec<[f64; 2]>,
}

/// Fading-power CDF, the outage quantile and the resulting rate-distance curve.
pub fn fading_json(rician_k: f64, epsilon: f64) -> Result<String, String> {
    let s = Request {
        rician_k: Some(rician_k),
        epsilon: Some(epsilon),
        ..Default::default()
    }
    .scenario()?;
    let dist = FadingDist::new(rician_k).map_err(|e| e.to_string())?;
    let cdf = (0..=200)
        .map(|i| {
            let z = 0.015 * i as f64;
            dist.cdf(z).map(|f| [z, f]).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let p: &ChannelParams = &s.channel;
    let (power, h) = (s.sensors[0].tx_power, s.mission.altitude);
    let margin = p.outage_quantile();
    let distances = (0..=100).map(|i| 10.0 * i as f64);
    let rate = distances
        .clone()
        .map(|d| [d, rate_at(h * h + d * d, power, p)])
        .collect();
    let rate_mean = distances
        .map(|d| {
            let r = rate_at(h * h + d * d, power, p);
            // Undo the margin: 2^R − 1 scales linearly with F⁻¹(ε).
            [
                d,
                ((r.exp2() - 1.0) / margin).ln_1p() / std::f64::consts::LN_2,
            ]
        })
        .collect();
    let out = FadingOut {
        rician_k,
        epsilon,
        quantile: margin,
        cdf,
        rate,
        rate_mean,
    };
    Ok(serde_json::to_string(&out).expect("fading output serializes"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub data_bits: f64,
    pub optimized: Option<f64>,
    pub straight: Option<f64>,
    pub r#static: Option<f64>,
}

/// Min-max energy of the three schemes for each data size (bits).
pub fn sweep_json(request: &str, data_bits: &[f64]) -> Result<String, String> {
    if data_bits.is_empty() || data_bits.len() > MAX_SWEEP_POINTS {
        return Err(format!(
            "need 1..={MAX_SWEEP_POINTS} data sizes, got {}",
            data_bits.len()
        ));
    }
    let base = parse_request(request)?;
    let rows = data_bits
        .iter()
        .map(|&bits| {
            let s = Request {
                data_bits: Some(bits),
                ..base.clone()
            }
            .scenario()?;
            let cmp = compare(&s);
            Ok(SweepRow {
                data_bits: bits,
                optimized: cmp.theta(Scheme::Optimized),
                straight: cmp.theta(Scheme::Straight),
                r#static: cmp.theta(Scheme::Static),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(serde_json::to_string(&rows).expect("sweep output serializes"))
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = defaultScenario)]
pub fn default_scenario() -> String {
    DEFAULT_SCENARIO.to_string()
}

#[wasm_bindgen]
pub fn solve(request: &str) -> Result<String, JsValue> {
    js(solve_json(request))
}

#[wasm_bindgen]
pub fn fading(rician_k: f64, epsilon: f64) -> Result<String, JsValue> {
    js(fading_json(rician_k, epsilon))
}

#[wasm_bindgen]
pub fn sweep(request: &str, data_bits: Vec<f64>) -> Result<String, JsValue> {
    js(sweep_json(request, &data_bits))
}
