use serde::{Deserialize, Serialize};

use super::{LinearProgram, LpStatus, RowKind};
use crate::channel::rate_table;
use crate::error::{Error, Result};
use crate::scenario::{Point, Scenario};

/// Relaxed wake-up schedule: `x[k][m] ∈ [0, 1]` is the fraction of slot `m`
/// during which sensor `k` transmits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    num_sensors: usize,
    num_slots: usize,
    x: Vec<f64>,
}

impl Schedule {
    pub fn zeros(num_sensors: usize, num_slots: usize) -> Self {
        Self {
            num_sensors,
            num_slots,
            x: vec![0.0; num_sensors * num_slots],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let num_sensors = rows.len();
        let num_slots = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == num_slots), "ragged schedule");
        Self {
            num_sensors,
            num_slots,
            x: rows.into_iter().flatten().collect(),
        }
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.x[k * self.num_slots + m]
    }

    pub fn set(&mut self, k: usize, m: usize, v: f64) {
        self.x[k * self.num_slots + m] = v;
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.x[k * self.num_slots..(k + 1) * self.num_slots]
    }

    pub fn slot_total(&self, m: usize) -> f64 {
        (0..self.num_sensors).map(|k| self.get(k, m)).sum()
    }

    /// Wake-up time of sensor `k` in slot units.
    pub fn awake_slots(&self, k: usize) -> f64 {
        self.row(k).iter().sum()
    }

    /// Checks the box and one-sensor-per-slot constraints.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.x.iter().all(|&v| v >= -tol && v <= 1.0 + tol)
            && (0..self.num_slots).all(|m| self.slot_total(m) <= 1.0 + tol)
    }
}

/// The schedule LP for a fixed trajectory, with the rate table it was built
/// from. Variables are `x[k][m]` at index `k·M + m`, then `θ`.
#[derive(Clone, Debug)]
pub struct ScheduleLp {
    pub lp: LinearProgram,
    pub rates: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    pub demand: Vec<f64>,
}

impl ScheduleLp {
    /// Builds the LP from explicit per-slot energies, demands and rates.
    pub fn from_rates(energy: Vec<f64>, demand: Vec<f64>, rates: Vec<Vec<f64>>) -> Self {
        let k_count = energy.len();
        assert_eq!(demand.len(), k_count);
        assert_eq!(rates.len(), k_count);
        let m_count = rates.first().map_or(0, Vec::len);

        let mut lp = LinearProgram::new();
        for k in 0..k_count {
            for m in 0..m_count {
                lp.add_var(format!("x_{}_{}", k + 1, m + 1), 0.0, 1.0);
            }
        }
        let theta = lp.add_var("theta", 1.0, f64::INFINITY);

        for k in 0..k_count {
            let mut coeffs: Vec<(usize, f64)> =
                (0..m_count).map(|m| (k * m_count + m, energy[k])).collect();
            coeffs.push((theta, -1.0));
            lp.add_row(format!("energy_{}", k + 1), coeffs, RowKind::Le, 0.0);
        }
        for k in 0..k_count {
            let coeffs = (0..m_count)
                .filter(|&m| rates[k][m] > 0.0)
                .map(|m| (k * m_count + m, rates[k][m]))
                .collect();
            lp.add_row(format!("demand_{}", k + 1), coeffs, RowKind::Ge, demand[k]);
        }
        for m in 0..m_count {
            let coeffs = (0..k_count).map(|k| (k * m_count + m, 1.0)).collect();
            lp.add_row(format!("slot_{}", m + 1), coeffs, RowKind::Le, 1.0);
        }
        Self {
            lp,
            rates,
            energy,
            demand,
        }
    }

    pub fn num_sensors(&self) -> usize {
        self.energy.len()
    }

    pub fn num_slots(&self) -> usize {
        self.rates.first().map_or(0, Vec::len)
    }

    pub fn theta_var(&self) -> usize {
        self.num_sensors() * self.num_slots()
    }
}

/// Builds the schedule LP for `s` along the trajectory `points`.
pub fn build_schedule_lp(s: &Scenario, points: &[Point]) -> ScheduleLp {
    let d = s.derived();
    ScheduleLp::from_rates(d.energy, d.demand, rate_table(s, points))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub schedule: Schedule,
    /// Min-max energy, joules.
    pub theta: f64,
    pub status: LpStatus,
    /// Relative primal-dual gap of the returned vertex.
    pub certificate: f64,
    pub primal_residual: f64,
    pub iterations: usize,
}

/// Solves the schedule LP. Infeasibility names the sensors whose demand
/// cannot be met.
pub fn solve_schedule(slp: &ScheduleLp) -> Result<LpSolution> {
    let k_count = slp.num_sensors();
    let m_count = slp.num_slots();
    let res = slp.lp.solve();
    match res.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            let mut sensors: Vec<usize> = (0..k_count)
                .filter(|&k| slp.rates[k].iter().sum::<f64>() < slp.demand[k])
                .collect();
            if sensors.is_empty() {
                sensors = res
                    .infeasible_rows
                    .iter()
                    .filter(|&&r| r >= k_count && r < 2 * k_count)
                    .map(|r| r - k_count)
                    .collect();
            }
            if sensors.is_empty() {
                sensors = (0..k_count).collect();
            }
            return Err(Error::Infeasible { sensors });
        }
        other => {
            return Err(Error::Solver(format!(
                "schedule LP ended with status {other:?} after {} iterations",
                res.iterations
            )))
        }
    }

    let mut schedule = Schedule::zeros(k_count, m_count);
    for k in 0..k_count {
        for m in 0..m_count {
            schedule.set(k, m, res.x[k * m_count + m].clamp(0.0, 1.0));
        }
    }
    let theta = (0..k_count)
        .map(|k| schedule.awake_slots(k) * slp.energy[k])
        .fold(0.0, f64::max);
    Ok(LpSolution {
        schedule,
        theta,
        status: res.status,
        certificate: res.gap.max(res.dual_infeasibility),
        primal_residual: res.primal_residual,
        iterations: res.iterations,
    })
}
