//! Convex trajectory subproblem: maximize the weighted minimum of the
//! concave throughput lower bounds subject to the per-slot speed limit and
//! fixed endpoints.
//!
//! Solved with a log-barrier interior-point method. Each Newton system is
//! block-tridiagonal in the positions (speed constraints couple neighbours)
//! plus a rank-K term from the throughput constraints; the latter is kept
//! as an explicit K+1 augmented system so nothing is formed with `1/s²`
//! weights. Coordinates are shifted to `q0` and scaled by `D_max`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::blocktri::BlockTridiag;
use super::{bound_coeffs, eval_eta};
use crate::error::{Error, Result};
use crate::lp::Schedule;
use crate::scenario::{Point, Scenario};
use crate::trajectory::Trajectory;

/// Relative loss against the expansion point tolerated before falling back.
const ACCEPT_TOL: f64 = 1e-9;
/// Multiplier above which a throughput constraint counts as binding.
const BINDING_MULTIPLIER: f64 = 1e-3;
/// Relative slack left under a fixed sensor's achieved value.
const FLOOR_MARGIN: f64 = 1e-13;
const BARRIER_GROWTH: f64 = 10.0;
const REL_GAP_TOL: f64 = 1e-7;
/// Newton decrement `λ²` below which a centering step is finished.
const CENTERING_TOL: f64 = 1e-10;
const MAX_NEWTON_PER_CENTER: usize = 60;
const MAX_CENTERINGS: usize = 40;
/// Speed slack `1 − ‖Δy‖²` wanted at the barrier start.
const START_SPEED_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum P4Status {
    /// Interior-point solve finished and improved on the expansion point.
    Solved,
    /// Nothing to optimize (no free slots, no rate terms, or a trajectory
    /// forced to the straight line); the expansion point is returned.
    Degenerate,
    /// The solve failed or did not improve; the expansion point is returned.
    Fallback(String),
}

#[derive(Clone, Debug)]
pub struct P4Result {
    pub trajectory: Trajectory,
    /// Bound objective `min_k (1/r_k) Σ_m x_k[m] R^lb_k[m]` at the returned
    /// trajectory.
    pub eta_lb: f64,
    pub status: P4Status,
    /// Max of the Lagrangian stationarity residual (relative to the size of
    /// its terms) and the relative duality gap at the end of the first
    /// barrier phase.
    pub kkt_residual: f64,
    pub newton_steps: usize,
}

/// Rate-bound terms in scaled coordinates: `g_k(y) = base_k − Σ_m a_km ‖y_m − w_k‖²`.
struct BoundModel {
    base: Vec<f64>,
    weight: Vec<Vec<f64>>,
    sensors: Vec<Vector2<f64>>,
}

impl BoundModel {
    fn values(&self, y: &[Vector2<f64>]) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.weight)
            .zip(&self.sensors)
            .map(|((b, a), w)| {
                b - a
                    .iter()
                    .zip(y)
                    .filter(|(a, _)| **a != 0.0)
                    .map(|(a, p)| a * (p - w).norm_squared())
                    .sum::<f64>()
            })
            .collect()
    }
}

/// Solves the convex subproblem for schedule `x` with the lower bound
/// expanded at `q_l`.
pub fn solve_p4(s: &Scenario, x: &Schedule, q_l: &Trajectory) -> Result<P4Result> {
    q_l.check(s)?;
    let k_count = s.num_sensors();
    let m_count = s.num_slots();
    if x.num_sensors() != k_count || x.num_slots() != m_count {
        return Err(Error::Validation(
            "schedule shape does not match scenario".into(),
        ));
    }

    let scale = s.mission.d_max();
    let origin = s.mission.q_start;
    let to_scaled = |p: &Point| (p - origin) / scale;
    let y_l: Vec<Vector2<f64>> = q_l.points().iter().map(to_scaled).collect();

    let h = s.mission.altitude;
    let mut base = vec![0.0; k_count];
    let mut weight = vec![vec![0.0; m_count]; k_count];
    for (k, sensor) in s.sensors.iter().enumerate() {
        let r_k = s.demand(k);
        for m in 0..m_count {
            let xk = x.get(k, m);
            if xk == 0.0 {
                continue;
            }
            let q = &q_l.points()[m];
            let c = bound_coeffs(q, &sensor.position, sensor.tx_power, &s.channel, h);
            base[k] += xk * (c.a + c.i * (q - sensor.position).norm_squared()) / r_k;
            weight[k][m] = xk * c.i * scale * scale / r_k;
        }
    }
    let model = BoundModel {
        base,
        weight,
        sensors: s.sensors.iter().map(|sn| to_scaled(&sn.position)).collect(),
    };
    let value_at_l = eval_eta(s, x, q_l);

    let keep = |status: P4Status| P4Result {
        trajectory: q_l.clone(),
        eta_lb: value_at_l,
        status,
        kkt_residual: 0.0,
        newton_steps: 0,
    };

    let free = m_count.saturating_sub(2);
    let has_terms = model
        .weight
        .iter()
        .any(|row| row[1..m_count - 1].iter().any(|&a| a > 0.0));
    if free == 0 || !has_terms {
        return Ok(keep(P4Status::Degenerate));
    }
    let y_start = y_l[0];
    let y_end = y_l[m_count - 1];
    let straight_step = (y_end - y_start).norm() / (m_count - 1) as f64;
    if straight_step >= 1.0 - 1e-9 {
        return Ok(keep(P4Status::Degenerate));
    }

    // Strictly feasible start: blend towards the straight line if needed.
    let y_straight: Vec<Vector2<f64>> = (0..m_count)
        .map(|m| y_start + (y_end - y_start) * (m as f64 / (m_count - 1) as f64))
        .collect();
    let mut y = None;
    for tau in [0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0] {
        let cand: Vec<Vector2<f64>> = y_l
            .iter()
            .zip(&y_straight)
            .map(|(a, b)| a * (1.0 - tau) + b * tau)
            .collect();
        if min_speed_slack(&cand) > START_SPEED_SLACK || tau == 1.0 {
            y = Some(cand);
            break;
        }
    }
    let Some(y) = y else {
        return Ok(keep(P4Status::Fallback(
            "no strictly feasible start".into(),
        )));
    };

    let mut solver = Barrier::new(&model, y, vec![None; k_count]);
    if let Err(msg) = solver.run() {
        return Ok(keep(P4Status::Fallback(msg)));
    }
    let kkt_residual = solver.kkt;
    let mut newton_steps = solver.newton_steps;

    // The max-min optimum is often degenerate (a sensor already served at
    // its best rate pins the objective). Break ties lexicographically: fix
    // the binding sensors just below their achieved values and maximize the
    // minimum over the rest.
    let mut floors = vec![None; k_count];
    let mut y = solver.y.clone();
    loop {
        let g = model.values(&y);
        let mut fixed_any = false;
        for (k, lam) in solver.multipliers().into_iter().enumerate() {
            if lam.is_some_and(|l| l >= BINDING_MULTIPLIER) {
                floors[k] = Some(g[k] - FLOOR_MARGIN * g[k].abs().max(1.0));
                fixed_any = true;
            }
        }
        if !fixed_any || floors.iter().all(Option::is_some) {
            break;
        }
        solver = Barrier::new(&model, y.clone(), floors.clone());
        let ok = solver.run().is_ok();
        newton_steps += solver.newton_steps;
        if !ok {
            break;
        }
        y = solver.y.clone();
    }

    let mut points: Vec<Point> = y.iter().map(|p| origin + p * scale).collect();
    points[0] = s.mission.q_start;
    points[m_count - 1] = s.mission.q_end;
    let traj = Trajectory::new(points);
    if let Err(e) = traj.check(s) {
        return Ok(keep(P4Status::Fallback(e.to_string())));
    }
    // Evaluated on the unscaled trajectory, the same way as `value_at_l`.
    let mut value = bound_value(s, x, q_l, &traj);
    let mut traj = traj;
    let threshold = value_at_l - ACCEPT_TOL * value_at_l.abs().max(1.0);
    if value < threshold {
        // The barrier stops within its duality gap of the optimum, which can
        // leave a sensor pinned at the expansion point a hair below its value
        // there. The objective is concave along the segment from `q_l`, so the
        // points meeting the threshold form an interval [0, τ*]; take τ*.
        let at = |tau: f64| bound_value(s, x, q_l, &blend(q_l, &traj, tau));
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if at(mid) >= threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo > 0.0 {
            value = at(lo);
            traj = blend(q_l, &traj, lo);
        }
    }
    if !(value >= threshold) {
        return Ok(P4Result {
            newton_steps,
            kkt_residual,
            ..keep(P4Status::Fallback(format!(
                "worse than expansion point ({value} < {value_at_l})"
            )))
        });
    }
    Ok(P4Result {
        trajectory: traj,
        eta_lb: value,
        status: P4Status::Solved,
        kkt_residual,
        newton_steps,
    })
}

/// `min_k (1/r_k) Σ_m x_k[m] R^lb_k[m](q)` with the bound expanded at `q_l`.
pub fn bound_value(s: &Scenario, x: &Schedule, q_l: &Trajectory, q: &Trajectory) -> f64 {
    let h = s.mission.altitude;
    s.sensors
        .iter()
        .enumerate()
        .map(|(k, sn)| {
            let total: f64 = (0..s.num_slots())
                .filter(|&m| x.get(k, m) != 0.0)
                .map(|m| {
                    let ql = &q_l.points()[m];
                    let c = bound_coeffs(ql, &sn.position, sn.tx_power, &s.channel, h);
                    x.get(k, m) * super::eval_rate_lb(&q.points()[m], ql, &sn.position, &c)
                })
                .sum();
            total / s.demand(k)
        })
        .fold(f64::INFINITY, f64::min)
}

fn blend(a: &Trajectory, b: &Trajectory, tau: f64) -> Trajectory {
    let mut points: Vec<Point> = a
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| p + (q - p) * tau)
        .collect();
    let n = points.len();
    points[0] = a.points()[0];
    points[n - 1] = a.points()[n - 1];
    Trajectory::new(points)
}

fn min_speed_slack(y: &[Vector2<f64>]) -> f64 {
    y.windows(2)
        .map(|w| 1.0 - (w[1] - w[0]).norm_squared())
        .fold(f64::INFINITY, f64::min)
}

/// Barrier method for `max η  s.t.  g_k(y) ≥ η` (free sensors),
/// `g_k(y) ≥ floor_k` (fixed sensors) and the speed limits.
struct Barrier<'a> {
    model: &'a BoundModel,
    floor: Vec<Option<f64>>,
    y: Vec<Vector2<f64>>,
    eta: f64,
    t: f64,
    newton_steps: usize,
    kkt: f64,
}

struct NewtonStep {
    dy: Vec<Vector2<f64>>,
    deta: f64,
    decrement_sq: f64,
    stationarity: f64,
}

impl<'a> Barrier<'a> {
    fn new(model: &'a BoundModel, y: Vec<Vector2<f64>>, floor: Vec<Option<f64>>) -> Self {
        let gmin = model
            .values(&y)
            .into_iter()
            .zip(&floor)
            .filter(|(_, f)| f.is_none())
            .map(|(g, _)| g)
            .fold(f64::INFINITY, f64::min);
        let spread = gmin.abs().max(1e-9);
        Self {
            model,
            floor,
            eta: gmin - 1e-2 * spread,
            t: 1.0,
            y,
            newton_steps: 0,
            kkt: f64::INFINITY,
        }
    }

    fn num_constraints(&self) -> f64 {
        (self.model.base.len() + self.y.len() - 1) as f64
    }

    fn run(&mut self) -> std::result::Result<(), String> {
        let ncon = self.num_constraints();
        self.t = ncon / self.eta.abs().max(1e-9);
        for _ in 0..MAX_CENTERINGS {
            self.center()?;
            let gap = ncon / self.t;
            if gap <= REL_GAP_TOL * self.eta.abs().max(1.0) {
                return Ok(());
            }
            self.t *= BARRIER_GROWTH;
        }
        Ok(())
    }

    fn slacks(&self, y: &[Vector2<f64>], eta: f64) -> Vec<f64> {
        self.model
            .values(y)
            .into_iter()
            .zip(&self.floor)
            .map(|(g, f)| g - f.unwrap_or(eta))
            .collect()
    }

    fn feasible(&self, y: &[Vector2<f64>], eta: f64) -> bool {
        min_speed_slack(y) > 0.0 && self.slacks(y, eta).iter().all(|&s| s > 0.0)
    }

    /// Dual estimates `1/(t·s_k)` of the free throughput constraints.
    fn multipliers(&self) -> Vec<Option<f64>> {
        self.slacks(&self.y, self.eta)
            .into_iter()
            .zip(&self.floor)
            .map(|(s, f)| f.is_none().then(|| 1.0 / (self.t * s)))
            .collect()
    }

    fn center(&mut self) -> std::result::Result<(), String> {
        for _ in 0..MAX_NEWTON_PER_CENTER {
            let step = self.newton_step().ok_or("singular Newton system")?;
            self.kkt = step
                .stationarity
                .max(self.num_constraints() / self.t / self.eta.abs().max(1.0));
            if !(step.decrement_sq.is_finite()) {
                return Err("non-finite Newton decrement".into());
            }
            if step.decrement_sq <= CENTERING_TOL {
                return Ok(());
            }
            let lambda = step.decrement_sq.sqrt();
            let mut alpha = if lambda <= 0.25 {
                1.0
            } else {
                1.0 / (1.0 + lambda)
            };
            loop {
                let y_new: Vec<Vector2<f64>> = self
                    .y
                    .iter()
                    .zip(&step.dy)
                    .map(|(p, d)| p + d * alpha)
                    .collect();
                let eta_new = self.eta + alpha * step.deta;
                if self.feasible(&y_new, eta_new) {
                    if y_new == self.y {
                        // Step below floating-point resolution.
                        return Ok(());
                    }
                    self.y = y_new;
                    self.eta = eta_new;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-20 {
                    return Err("line search stalled".into());
                }
            }
            self.newton_steps += 1;
        }
        Ok(())
    }

    fn newton_step(&self) -> Option<NewtonStep> {
        let y = &self.y;
        let n = y.len();
        let free = n - 2;
        let k_count = self.model.base.len();
        let slack = self.slacks(y, self.eta);
        let coupled: Vec<f64> = self
            .floor
            .iter()
            .map(|f| if f.is_none() { 1.0 } else { 0.0 })
            .collect();

        // Gradients of g_k with respect to free points.
        let grad_g: Vec<Vec<Vector2<f64>>> = (0..k_count)
            .map(|k| {
                (1..n - 1)
                    .map(|m| -2.0 * self.model.weight[k][m] * (y[m] - self.model.sensors[k]))
                    .collect()
            })
            .collect();

        let mut diag = vec![Matrix2::<f64>::zeros(); free];
        let mut lower = vec![Matrix2::<f64>::zeros(); free.saturating_sub(1)];
        let mut grad_y = vec![Vector2::<f64>::zeros(); free];
        // Componentwise sum of |terms| in grad_y, to scale the residual.
        let mut grad_mag = vec![Vector2::<f64>::zeros(); free];

        for k in 0..k_count {
            for i in 0..free {
                let a = self.model.weight[k][i + 1];
                if a != 0.0 {
                    diag[i] += Matrix2::identity() * (2.0 * a / slack[k]);
                    grad_y[i] -= grad_g[k][i] / slack[k];
                    grad_mag[i] += grad_g[k][i].abs() / slack[k];
                }
            }
        }
        // Speed pair p joins points p and p+1.
        for p in 0..n - 1 {
            let d = y[p + 1] - y[p];
            let c = 1.0 - d.norm_squared();
            let hess = d * d.transpose() * (4.0 / (c * c)) + Matrix2::identity() * (2.0 / c);
            let gd = d * (2.0 / c);
            if p < free {
                // point p+1 is free
                diag[p] += hess;
                grad_y[p] += gd;
                grad_mag[p] += gd.abs();
            }
            if p >= 1 {
                // point p is free
                diag[p - 1] += hess;
                grad_y[p - 1] -= gd;
                grad_mag[p - 1] += gd.abs();
            }
            if p >= 1 && p < free {
                lower[p - 1] -= hess;
            }
        }
        let grad_eta = -self.t + slack.iter().zip(&coupled).map(|(s, e)| e / s).sum::<f64>();

        let fact = factor_regularized(&mut diag, &lower)?;
        let z0 = fact.solve(&grad_y);
        let z: Vec<Vec<Vector2<f64>>> = grad_g.iter().map(|gk| fact.solve(gk)).collect();

        let dim = k_count + 1;
        let mut mat = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        for a in 0..k_count {
            for b in 0..k_count {
                mat[(a, b)] = dot(&grad_g[a], &z[b]);
            }
            mat[(a, a)] += slack[a] * slack[a];
            mat[(a, k_count)] = coupled[a];
            mat[(k_count, a)] = coupled[a];
            rhs[a] = -dot(&grad_g[a], &z0);
        }
        rhs[k_count] = grad_eta;
        let sol = mat.lu().solve(&rhs)?;
        let mu = sol.rows(0, k_count);
        let deta = sol[k_count];

        let mut dy = vec![Vector2::<f64>::zeros(); n];
        for i in 0..free {
            let mut v = -z0[i];
            for k in 0..k_count {
                v -= z[k][i] * mu[k];
            }
            dy[i + 1] = v;
        }
        let decrement_sq = -(dot(&grad_y, &dy[1..n - 1]) + grad_eta * deta);
        // Lagrangian stationarity relative to the size of its terms, with
        // multipliers 1/(t·slack).
        let eta_mag = self.t + slack.iter().zip(&coupled).map(|(s, e)| e / s).sum::<f64>();
        let stationarity = grad_y
            .iter()
            .zip(&grad_mag)
            .flat_map(|(g, m)| [g.x.abs() / (self.t + m.x), g.y.abs() / (self.t + m.y)])
            .fold(grad_eta.abs() / eta_mag, f64::max);
        Some(NewtonStep {
            dy,
            deta,
            decrement_sq,
            stationarity,
        })
    }
}

/// Factors the position Hessian. Near-active speed limits make it badly
/// conditioned; if a pivot is lost to cancellation, retry with a growing
/// diagonal shift (a damped Newton step).
fn factor_regularized(diag: &mut [Matrix2<f64>], lower: &[Matrix2<f64>]) -> Option<BlockTridiag> {
    if let Some(f) = BlockTridiag::factor(diag, lower) {
        return Some(f);
    }
    let scale = diag.iter().map(|d| d.amax()).fold(0.0, f64::max);
    let mut shift = 1e-14 * scale;
    let mut applied = 0.0;
    for _ in 0..8 {
        for d in diag.iter_mut() {
            *d += Matrix2::identity() * (shift - applied);
        }
        applied = shift;
        if let Some(f) = BlockTridiag::factor(diag, lower) {
            return Some(f);
        }
        shift *= 100.0;
    }
    None
}

fn dot(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u.dot(v)).sum()
}
