//! Successive convex approximation of the trajectory subproblem.
//!
//! The outage rate is convex in the squared horizontal distance, so its
//! first-order expansion at `q_l` is a global lower bound that is a concave
//! quadratic in `q`. Each iteration maximizes that bound and re-expands.

mod blocktri;
mod p4;

use serde::{Deserialize, Serialize};

pub use p4::{bound_value, solve_p4, P4Result, P4Status};

use crate::channel::rate_at;
use crate::error::Result;
use crate::lp::Schedule;
use crate::scenario::{ChannelParams, Point, Scenario};
use crate::trajectory::Trajectory;

/// Expansion coefficients of the rate lower bound at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCoeffs {
    /// Rate at the expansion point, bps/Hz.
    pub a: f64,
    /// Decay per m² of squared horizontal distance, bps/Hz/m².
    pub i: f64,
    /// Squared 3-D distance at the expansion point, m².
    pub j: f64,
}

pub fn bound_coeffs(
    q_l: &Point,
    w: &Point,
    tx_power: f64,
    p: &ChannelParams,
    altitude: f64,
) -> BoundCoeffs {
    let j = altitude * altitude + (q_l - w).norm_squared();
    let a = rate_at(j, tx_power, p);
    let signal = p.outage_quantile() * tx_power * p.beta0();
    let noise = p.noise_power() * p.snr_gap();
    let i = signal * 0.5 * p.alpha() * std::f64::consts::LOG2_E
        / (j * (noise * j.powf(0.5 * p.alpha()) + signal));
    BoundCoeffs { a, i, j }
}

/// `A − I‖q − w‖² + I‖q_l − w‖²`.
pub fn eval_rate_lb(q: &Point, q_l: &Point, w: &Point, c: &BoundCoeffs) -> f64 {
    c.a - c.i * ((q - w).norm_squared() - (q_l - w).norm_squared())
}

/// Weighted minimum throughput `min_k (1/r_k) Σ_m x_k[m] R_k[m]` with exact rates.
pub fn eval_eta(s: &Scenario, x: &Schedule, q: &Trajectory) -> f64 {
    let h = s.mission.altitude;
    s.sensors
        .iter()
        .enumerate()
        .map(|(k, sn)| {
            let total: f64 = q
                .points()
                .iter()
                .enumerate()
                .filter(|&(m, _)| x.get(k, m) != 0.0)
                .map(|(m, p)| {
                    let d2 = h * h + (p - sn.position).norm_squared();
                    x.get(k, m) * rate_at(d2, sn.tx_power, &s.channel)
                })
                .sum();
            total / s.demand(k)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ScaTrace {
    /// Subproblem objective after each iteration.
    pub eta_lb: Vec<f64>,
    /// Exact objective at the starting trajectory, then after each iteration.
    pub eta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations that kept the previous trajectory.
    pub fallbacks: usize,
    pub newton_steps: usize,
    /// Largest KKT residual over the solved subproblems.
    pub max_kkt_residual: f64,
    #[serde(skip)]
    pub iterates: Vec<Trajectory>,
}

/// Runs the SCA loop from `q0` until the fractional increase of the
/// subproblem objective drops below `kappa` or `max_iter` is reached.
pub fn sca_optimize(
    s: &Scenario,
    x: &Schedule,
    q0: &Trajectory,
    kappa: f64,
    max_iter: usize,
) -> Result<(Trajectory, ScaTrace)> {
    q0.check(s)?;
    let mut q = q0.clone();
    let mut prev = eval_eta(s, x, &q);
    let mut trace = ScaTrace {
        eta: vec![prev],
        ..Default::default()
    };
    for _ in 0..max_iter {
        let res = solve_p4(s, x, &q)?;
        trace.iterations += 1;
        trace.newton_steps += res.newton_steps;
        match &res.status {
            P4Status::Solved => {
                trace.max_kkt_residual = trace.max_kkt_residual.max(res.kkt_residual)
            }
            P4Status::Fallback(msg) => {
                log::debug!("trajectory subproblem kept expansion point: {msg}");
                trace.fallbacks += 1;
            }
            P4Status::Degenerate => {}
        }
        q = res.trajectory;
        trace.eta_lb.push(res.eta_lb);
        trace.eta.push(eval_eta(s, x, &q));
        trace.iterates.push(q.clone());
        let increase = (res.eta_lb - prev) / prev.abs().max(f64::MIN_POSITIVE);
        prev = res.eta_lb;
        if increase < kappa {
            trace.converged = true;
            break;
        }
    }
    Ok((q, trace))
}
