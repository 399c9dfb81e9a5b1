#![allow(dead_code)]

use std::path::PathBuf;

use uav_wsn::scenario::{ChannelConfig, MissionFile, Scenario, ScenarioFile, SensorFile};

pub fn shipped_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/paper_sec4.toml")
}

/// The shipped four-sensor scenario with horizon `t` seconds.
pub fn shipped(t: f64) -> Scenario {
    Scenario::load(shipped_path())
        .unwrap()
        .with_horizon(t)
        .unwrap()
}

pub fn channel_config(epsilon: f64) -> ChannelConfig {
    ChannelConfig {
        beta0_db: -60.0,
        noise_dbm: -110.0,
        gamma_db: 7.0,
        alpha: 2.0,
        rician_k: 10.0,
        epsilon,
        bandwidth_hz: 1e6,
    }
}

/// A scenario file with the default channel and `dt = 0.5`, `v_max = 50`.
pub fn file(horizon: f64, q0: [f64; 2], qf: [f64; 2], sensors: &[(f64, f64, f64)]) -> ScenarioFile {
    ScenarioFile {
        mission: MissionFile {
            altitude: 100.0,
            v_max: 50.0,
            horizon,
            slot_len: 0.5,
            q0,
            q_f: qf,
            blocks_per_slot: None,
        },
        channel: channel_config(1e-2),
        solver: None,
        sensors: sensors
            .iter()
            .map(|&(x, y, bits)| SensorFile {
                x,
                y,
                data_bits: bits,
                power_w: 0.1,
            })
            .collect(),
    }
}

pub fn scenario(horizon: f64, q0: [f64; 2], qf: [f64; 2], sensors: &[(f64, f64, f64)]) -> Scenario {
    Scenario::from_file(file(horizon, q0, qf, sensors)).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
