//! Block coordinate descent between the schedule LP and the trajectory SCA,
//! plus rounding of the relaxed schedule to whole fading blocks.

use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::rate_table;
use crate::error::{Error, Result};
use crate::lp::{build_schedule_lp, solve_schedule, LpSolution, Schedule};
use crate::sca::{eval_eta, sca_optimize, ScaTrace};
use crate::scenario::Scenario;
use crate::trajectory::Trajectory;

/// Per-outer-iteration record of the alternating solve.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveTrace {
    /// LP objective at the initial trajectory, then after each trajectory update.
    pub theta: Vec<f64>,
    /// Exact weighted-min throughput of the previous schedule on the updated
    /// trajectory; must stay ≥ 1.
    pub eta: Vec<f64>,
    pub sca: Vec<ScaTrace>,
    pub lp_iterations: Vec<usize>,
    /// Relative duality gap of each LP solve.
    pub lp_certificate: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Wall time per stage, seconds. Not reproducible; kept out of summaries.
    pub lp_seconds: Vec<f64>,
    pub sca_seconds: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub schedule: Schedule,
    pub trajectory: Trajectory,
    /// Min-max energy of the relaxed schedule, joules.
    pub theta: f64,
    pub lp: LpSolution,
    pub trace: SolveTrace,
}

/// Alternates the schedule LP and the trajectory SCA from `q0` until the
/// fractional decrease of the LP objective drops below `kappa` (taken from
/// `s.solver`).
pub fn optimize(s: &Scenario, q0: &Trajectory) -> Result<Solution> {
    q0.check(s)?;
    let cfg = &s.solver;
    let mut trace = SolveTrace::default();

    let started = Instant::now();
    let mut lp = solve_schedule(&build_schedule_lp(s, q0.points()))?;
    record_lp(&mut trace, &lp, started);
    let mut q = q0.clone();

    for r in 0..cfg.max_outer {
        let decrease = if r == 0 {
            1.0
        } else {
            let prev = trace.theta[r - 1];
            (prev - lp.theta) / prev.abs().max(f64::MIN_POSITIVE)
        };
        if decrease < cfg.kappa {
            trace.converged = true;
            break;
        }

        let started = Instant::now();
        let (q_next, sca) = sca_optimize(s, &lp.schedule, &q, cfg.kappa, cfg.max_sca)?;
        trace.sca_seconds.push(started.elapsed().as_secs_f64());
        trace.eta.push(eval_eta(s, &lp.schedule, &q_next));
        trace.sca.push(sca);
        trace.outer_iterations += 1;

        let started = Instant::now();
        match solve_schedule(&build_schedule_lp(s, q_next.points())) {
            Ok(next) => {
                record_lp(&mut trace, &next, started);
                lp = next;
                q = q_next;
            }
            Err(e @ Error::Infeasible { .. }) | Err(e @ Error::Solver(_)) => {
                log::warn!(
                    "keeping previous iterate: schedule LP failed on the updated trajectory: {e}"
                );
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if !trace.converged {
        log::info!(
            "outer loop stopped at the iteration cap ({})",
            cfg.max_outer
        );
    }
    Ok(Solution {
        schedule: lp.schedule.clone(),
        theta: lp.theta,
        trajectory: q,
        lp,
        trace,
    })
}

fn record_lp(trace: &mut SolveTrace, lp: &LpSolution, started: Instant) {
    trace.lp_seconds.push(started.elapsed().as_secs_f64());
    trace.theta.push(lp.theta);
    trace.lp_iterations.push(lp.iterations);
    trace.lp_certificate.push(lp.certificate);
}

/// Whole fading blocks per sensor and slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockAllocation {
    num_sensors: usize,
    num_slots: usize,
    blocks_per_slot: u32,
    n: Vec<u32>,
}

impl BlockAllocation {
    pub fn zeros(num_sensors: usize, num_slots: usize, blocks_per_slot: u32) -> Self {
        Self {
            num_sensors,
            num_slots,
            blocks_per_slot,
            n: vec![0; num_sensors * num_slots],
        }
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn blocks_per_slot(&self) -> u32 {
        self.blocks_per_slot
    }

    pub fn get(&self, k: usize, m: usize) -> u32 {
        self.n[k * self.num_slots + m]
    }

    pub fn set(&mut self, k: usize, m: usize, v: u32) {
        self.n[k * self.num_slots + m] = v;
    }

    pub fn slot_total(&self, m: usize) -> u32 {
        (0..self.num_sensors).map(|k| self.get(k, m)).sum()
    }

    pub fn sensor_total(&self, k: usize) -> u32 {
        self.n[k * self.num_slots..(k + 1) * self.num_slots]
            .iter()
            .sum()
    }

    /// `N / L` as a fractional schedule.
    pub fn to_schedule(&self) -> Schedule {
        let l = f64::from(self.blocks_per_slot);
        Schedule::from_rows(
            (0..self.num_sensors)
                .map(|k| {
                    (0..self.num_slots)
                        .map(|m| f64::from(self.get(k, m)) / l)
                        .collect()
                })
                .collect(),
        )
    }

    pub fn is_valid(&self) -> bool {
        (0..self.num_slots).all(|m| self.slot_total(m) <= self.blocks_per_slot)
    }
}

/// Rounds `L·x` to the nearest integer. Where a slot then holds more than
/// `L` blocks, entries that were rounded up are decremented in order of
/// increasing fractional part (ties to the lower sensor index).
pub fn round_schedule(x: &Schedule, blocks_per_slot: u32) -> BlockAllocation {
    let l = f64::from(blocks_per_slot);
    let (k_count, m_count) = (x.num_sensors(), x.num_slots());
    let mut out = BlockAllocation::zeros(k_count, m_count, blocks_per_slot);
    for m in 0..m_count {
        let mut rounded_up = Vec::new();
        for k in 0..k_count {
            let v = (l * x.get(k, m)).clamp(0.0, l);
            let n = v.round();
            if n > v {
                rounded_up.push((v - v.floor(), k));
            }
            out.set(k, m, n as u32);
        }
        rounded_up.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut excess = out.slot_total(m).saturating_sub(blocks_per_slot);
        for &(_, k) in &rounded_up {
            if excess == 0 {
                break;
            }
            out.set(k, m, out.get(k, m) - 1);
            excess -= 1;
        }
    }
    out
}

/// Per-sensor energy and nominal throughput of a schedule on a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorReport {
    pub energy_j: f64,
    /// `Σ_m x_k[m] R_k[m]`, bps/Hz-slots.
    pub throughput: f64,
    /// Throughput over demand `r_k`.
    pub ratio: f64,
}

pub fn evaluate_solution(s: &Scenario, x: &Schedule, q: &Trajectory) -> Vec<SensorReport> {
    evaluate_with_rates(s, x, &rate_table(s, q.points()))
}

pub fn evaluate_with_rates(s: &Scenario, x: &Schedule, rates: &[Vec<f64>]) -> Vec<SensorReport> {
    (0..s.num_sensors())
        .map(|k| {
            let throughput: f64 = x.row(k).iter().zip(&rates[k]).map(|(a, r)| a * r).sum();
            SensorReport {
                energy_j: x.awake_slots(k) * s.slot_energy(k),
                throughput,
                ratio: throughput / s.demand(k),
            }
        })
        .collect()
}
