//! Monte-Carlo replay of a block allocation: draws the small-scale fading of
//! every allocated block and checks outage calibration and delivered data.

use serde::{Deserialize, Serialize};

use crate::bcd::BlockAllocation;
use crate::channel::{block_rate, large_scale_gain, FadingSampler};
use crate::scenario::Scenario;
use crate::trajectory::Trajectory;

/// Width of the outage acceptance band, in binomial standard deviations.
pub const OUTAGE_BAND_SIGMAS: f64 = 4.0;
/// Allowed shortfall of delivered bits, in per-mission standard deviations.
pub const DELIVERY_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotSim {
    pub slot: usize,
    pub blocks: u64,
    pub failures: u64,
}

/// Totals for one sensor over all simulated missions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSim {
    pub missions: u32,
    pub n_blocks: u64,
    pub failed_blocks: u64,
    /// Sum over missions of the bits that would be delivered with no outage.
    pub nominal_bits: f64,
    pub delivered_bits: f64,
    pub slots: Vec<SlotSim>,
}

impl SensorSim {
    pub fn empirical_outage(&self) -> f64 {
        if self.n_blocks == 0 {
            f64::NAN
        } else {
            self.failed_blocks as f64 / self.n_blocks as f64
        }
    }
}

/// Simulates `missions` independent collections. Block `(k, m)` of mission
/// `i` uses its own random stream, so results do not depend on evaluation
/// order. A block succeeds iff its instantaneous rate reaches the stored
/// `rates[k][m]`, and then delivers `R·B·δt/L` bits.
pub fn simulate_collection(
    s: &Scenario,
    n: &BlockAllocation,
    rates: &[Vec<f64>],
    q: &Trajectory,
    seed: u64,
    missions: u32,
) -> Vec<SensorSim> {
    let (k_count, m_count) = (n.num_sensors(), n.num_slots());
    let units: Vec<(usize, usize)> = (0..k_count)
        .flat_map(|k| (0..m_count).map(move |m| (k, m)))
        .filter(|&(k, m)| n.get(k, m) > 0)
        .collect();
    let bits_per_rate = s.channel.bandwidth() * s.mission.slot_len / f64::from(n.blocks_per_slot());
    let h = s.mission.altitude;

    let run = |&(k, m): &(usize, usize)| -> (usize, SlotSim, f64, f64) {
        let sensor = &s.sensors[k];
        let beta = large_scale_gain(&q.points()[m], &sensor.position, &s.channel, h);
        let rate = rates[k][m];
        let blocks = n.get(k, m);
        let mut failures = 0u64;
        for i in 0..missions {
            let stream = (u64::from(i) << 32) | (k * m_count + m) as u64;
            let mut fading = FadingSampler::new(*s.channel.fading(), seed, stream);
            for _ in 0..blocks {
                let c = block_rate(fading.next_sample(), beta, sensor.tx_power, &s.channel);
                if c < rate {
                    failures += 1;
                }
            }
        }
        let total = u64::from(blocks) * u64::from(missions);
        let nominal = total as f64 * rate * bits_per_rate;
        let delivered = (total - failures) as f64 * rate * bits_per_rate;
        let slot = SlotSim {
            slot: m,
            blocks: total,
            failures,
        };
        (k, slot, nominal, delivered)
    };

    #[cfg(feature = "parallel")]
    let per_unit: Vec<_> = {
        use rayon::prelude::*;
        units.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_unit: Vec<_> = units.iter().map(run).collect();

    let mut out: Vec<SensorSim> = (0..k_count)
        .map(|_| SensorSim {
            missions,
            n_blocks: 0,
            failed_blocks: 0,
            nominal_bits: 0.0,
            delivered_bits: 0.0,
            slots: Vec::new(),
        })
        .collect();
    for (k, slot, nominal, delivered) in per_unit {
        let o = &mut out[k];
        o.n_blocks += slot.blocks;
        o.failed_blocks += slot.failures;
        o.nominal_bits += nominal;
        o.delivered_bits += delivered;
        o.slots.push(slot);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorVerdict {
    pub sensor: usize,
    /// Per mission.
    pub nominal_bits: f64,
    /// Mean per mission.
    pub delivered_bits: f64,
    pub required_bits: f64,
    pub empirical_outage: f64,
    /// Blocks simulated over all missions.
    pub n_blocks: u64,
    /// Acceptance band for the empirical outage.
    pub ci_low: f64,
    pub ci_high: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    /// Per-slot failure counts, included for failing sensors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slot_histogram: Vec<SlotSim>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub epsilon: f64,
    pub seed: u64,
    pub missions: u32,
    pub total_blocks: u64,
    pub pass: bool,
    pub sensors: Vec<SensorVerdict>,
}

/// Per-sensor checks:
/// - the empirical outage lies in `ε ± 4·√(ε(1−ε)/n)` over all `n` blocks;
/// - mean delivered bits per mission reach `(1 − ε − 3σ)·S_k`, where
///   `σ = √(ε(1−ε)/n_k)` and `n_k` is the blocks allocated per mission;
/// - at least one block is allocated.
pub fn verify_report(s: &Scenario, sims: &[SensorSim], seed: u64) -> VerifyReport {
    let eps = s.channel.epsilon();
    let missions = sims.first().map_or(0, |x| x.missions);
    let sensors: Vec<SensorVerdict> = sims
        .iter()
        .enumerate()
        .map(|(k, sim)| {
            let mut diagnostics = Vec::new();
            let n = sim.n_blocks as f64;
            let per_mission = f64::from(sim.missions.max(1));
            let half = OUTAGE_BAND_SIGMAS * (eps * (1.0 - eps) / n).sqrt();
            let (ci_low, ci_high) = (eps - half, eps + half);
            let outage = sim.empirical_outage();
            let sigma = (eps * (1.0 - eps) / (n / per_mission)).sqrt();
            let required = (1.0 - eps - DELIVERY_SIGMAS * sigma) * s.sensors[k].data_bits;
            let delivered = sim.delivered_bits / per_mission;
            if sim.n_blocks == 0 {
                diagnostics.push("demand unmet: no blocks allocated".to_string());
            } else {
                if !(outage >= ci_low && outage <= ci_high) {
                    diagnostics.push(format!(
                        "empirical outage {outage:.3e} outside [{ci_low:.3e}, {ci_high:.3e}]"
                    ));
                }
                if !(delivered >= required) {
                    diagnostics.push(format!(
                        "delivered {delivered:.6e} bits per mission, below required {required:.6e}"
                    ));
                }
            }
            let pass = diagnostics.is_empty();
            SensorVerdict {
                sensor: k,
                nominal_bits: sim.nominal_bits / per_mission,
                delivered_bits: delivered,
                required_bits: required,
                empirical_outage: outage,
                n_blocks: sim.n_blocks,
                ci_low,
                ci_high,
                pass,
                diagnostics,
                slot_histogram: if pass { Vec::new() } else { sim.slots.clone() },
            }
        })
        .collect();
    VerifyReport {
        epsilon: eps,
        seed,
        missions,
        total_blocks: sims.iter().map(|x| x.n_blocks).sum(),
        pass: sensors.iter().all(|v| v.pass),
        sensors,
    }
}
