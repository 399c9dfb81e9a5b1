//! Reference schemes (straight flight and a static collector) and the
//! comparison/sweep driver. Every scheme's schedule comes from the same LP.

use std::fmt;
use std::str::FromStr;
use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::bcd::{optimize, Solution};
use crate::error::{Error, Result};
use crate::lp::{build_schedule_lp, solve_schedule, LpSolution};
use crate::scenario::{Point, Scenario};
use crate::trajectory::Trajectory;

/// Constant-speed straight flight from `q0` to `qF`.
pub fn straight_trajectory(s: &Scenario) -> Trajectory {
    Trajectory::straight(s.mission.q_start, s.mission.q_end, s.num_slots())
}

/// Collector hovering at the sensor centroid (at altitude `H`) for the whole
/// mission, with its schedule optimized by the LP. Endpoints do not apply.
pub fn static_collector(s: &Scenario) -> Result<(Point, LpSolution)> {
    let c = s.sensor_centroid();
    let traj = Trajectory::stationary(c, s.num_slots());
    Ok((c, solve_schedule(&build_schedule_lp(s, traj.points()))?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Optimized,
    Straight,
    Static,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Optimized, Scheme::Straight, Scheme::Static];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Optimized => "optimized",
            Scheme::Straight => "straight",
            Scheme::Static => "static",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    /// Min-max energy, joules; `None` when the schedule LP is infeasible.
    pub theta: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

impl SchemeResult {
    pub fn feasible(&self) -> bool {
        self.theta.is_some()
    }
}

/// One comparison point: the three schemes, plus the full optimized
/// solution when it succeeded.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub results: Vec<SchemeResult>,
    pub optimized: Option<Solution>,
}

impl Comparison {
    pub fn theta(&self, scheme: Scheme) -> Option<f64> {
        self.results.iter().find(|r| r.scheme == scheme)?.theta
    }
}

/// Runs all three schemes on `s`.
pub fn compare(s: &Scenario) -> Comparison {
    let mut results = Vec::with_capacity(3);
    let mut optimized = None;

    let t = Instant::now();
    let q0 = straight_trajectory(s);
    match optimize(s, &q0) {
        Ok(sol) => {
            results.push(SchemeResult {
                scheme: Scheme::Optimized,
                theta: Some(sol.theta),
                iterations: sol.trace.outer_iterations,
                seconds: t.elapsed().as_secs_f64(),
                error: None,
            });
            optimized = Some(sol);
        }
        Err(e) => results.push(failed(Scheme::Optimized, e, t)),
    }

    let t = Instant::now();
    results.push(match solve_schedule(&build_schedule_lp(s, q0.points())) {
        Ok(lp) => lp_result(Scheme::Straight, &lp, t),
        Err(e) => failed(Scheme::Straight, e, t),
    });

    let t = Instant::now();
    results.push(match static_collector(s) {
        Ok((_, lp)) => lp_result(Scheme::Static, &lp, t),
        Err(e) => failed(Scheme::Static, e, t),
    });

    Comparison { results, optimized }
}

fn lp_result(scheme: Scheme, lp: &LpSolution, t: Instant) -> SchemeResult {
    SchemeResult {
        scheme,
        theta: Some(lp.theta),
        iterations: 0,
        seconds: t.elapsed().as_secs_f64(),
        error: None,
    }
}

fn failed(scheme: Scheme, e: Error, t: Instant) -> SchemeResult {
    SchemeResult {
        scheme,
        theta: None,
        iterations: 0,
        seconds: t.elapsed().as_secs_f64(),
        error: Some(e.to_string()),
    }
}

/// Scenario parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    /// Data size of every sensor, bits.
    #[serde(rename = "S")]
    DataBits,
    #[serde(rename = "eps")]
    Epsilon,
    /// Mission horizon, seconds.
    #[serde(rename = "T")]
    Horizon,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::DataBits => "S",
            SweepVar::Epsilon => "eps",
            SweepVar::Horizon => "T",
        }
    }

    pub fn apply(self, s: &Scenario, value: f64) -> Result<Scenario> {
        match self {
            SweepVar::DataBits => s.with_data_bits(value),
            SweepVar::Epsilon => s.with_epsilon(value),
            SweepVar::Horizon => s.with_horizon(value),
        }
    }
}

/// A sweep specification such as `S=2e6:2e6:2e7` or `eps=1e-4,1e-3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let bad = |msg: &str| Error::parse(format!("sweep `{spec}`"), msg);
        let (name, grid) = spec
            .split_once('=')
            .ok_or_else(|| bad("expected <var>=<grid>"))?;
        let var = match name.trim() {
            "S" => SweepVar::DataBits,
            "eps" => SweepVar::Epsilon,
            "T" => SweepVar::Horizon,
            other => {
                return Err(bad(&format!(
                    "unknown variable `{other}` (use S, eps or T)"
                )))
            }
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| bad(&format!("`{t}`: {e}")))
        };
        let values = if grid.contains(':') {
            let parts: Vec<&str> = grid.split(':').collect();
            let [start, step, stop] = parts[..] else {
                return Err(bad("range must be start:step:stop"));
            };
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) || stop < start {
                return Err(bad("range needs step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + step * i as f64).collect()
        } else {
            grid.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        if values.is_empty() {
            return Err(bad("empty grid"));
        }
        Ok(Sweep { var, values })
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub comparison: std::result::Result<Comparison, String>,
}

/// Runs [`compare`] at every grid value, from scratch each time. Points run
/// in parallel when the `parallel` feature is enabled.
pub fn sweep(s: &Scenario, sweep: &Sweep) -> Vec<SweepPoint> {
    let run = |&value: &f64| SweepPoint {
        value,
        comparison: sweep
            .var
            .apply(s, value)
            .map(|sc| compare(&sc))
            .map_err(|e| e.to_string()),
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        sweep.values.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep.values.iter().map(run).collect()
    }
}
