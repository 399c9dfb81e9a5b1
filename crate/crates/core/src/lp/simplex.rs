//! Dense revised simplex for small bounded LPs.
//!
//! Rows are equilibrated, turned into equalities with slack/surplus columns
//! and solved with a two-phase bounded-variable primal simplex. The basis
//! inverse is kept explicitly and updated in product form, with a fresh
//! Gauss-Jordan inversion every [`REFACTOR_EVERY`] pivots. Pricing is
//! Dantzig's rule; after a run of degenerate pivots the solver switches to
//! Bland's smallest-index rule until progress resumes, which rules out
//! cycling.

use super::{LinearProgram, LpResult, LpStatus, RowKind};

const FEAS_TOL: f64 = 1e-10;
const OPT_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN: usize = 30;

#[derive(Clone, Copy, PartialEq, Debug)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    /// Sparse columns of the scaled equality system.
    cols: Vec<Vec<(usize, f64)>>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    binv: Vec<f64>,
    x_basic: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn binv_row(&self, i: usize) -> &[f64] {
        &self.binv[i * self.m..(i + 1) * self.m]
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLower => 0.0,
            VarState::AtUpper => self.upper[j],
            VarState::Basic => {
                let i = self.basis.iter().position(|&b| b == j).unwrap();
                self.x_basic[i]
            }
        }
    }

    /// Recomputes `B⁻¹` from scratch and the basic values from it.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * m + c] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-14 {
                return false;
            }
            if piv != col {
                for k in 0..m {
                    a.swap(col * m + k, piv * m + k);
                    inv.swap(col * m + k, piv * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;
        self.recompute_basic_values();
        true
    }

    fn recompute_basic_values(&mut self) {
        let mut r = self.rhs.clone();
        for (j, st) in self.state.iter().enumerate() {
            if *st == VarState::AtUpper {
                for &(i, v) in &self.cols[j] {
                    r[i] -= v * self.upper[j];
                }
            }
        }
        let m = self.m;
        self.x_basic = (0..m)
            .map(|i| self.binv_row(i).iter().zip(&r).map(|(a, b)| a * b).sum())
            .collect();
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = self.cost[j];
            if cb != 0.0 {
                for (p, b) in pi.iter_mut().zip(self.binv_row(i)) {
                    *p += cb * b;
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, j: usize, pi: &[f64]) -> f64 {
        self.cost[j] - self.cols[j].iter().map(|&(i, v)| pi[i] * v).sum::<f64>()
    }

    fn step(&mut self, bland: bool) -> (Step, bool) {
        let pi = self.duals();
        // Entering variable.
        let mut entering = None;
        let mut best = 0.0;
        for j in 0..self.cols.len() {
            let dir = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower => 1.0,
                VarState::AtUpper => -1.0,
            };
            if self.upper[j] <= 0.0 {
                continue;
            }
            let d = self.reduced_cost(j, &pi);
            let gain = -d * dir;
            if gain > OPT_TOL {
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some((j, dir));
                }
            }
        }
        let Some((q, dir)) = entering else {
            return (Step::Optimal, false);
        };

        // alpha = B⁻¹ a_q
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, v) in &self.cols[q] {
            for (r, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[r * m + i] * v;
            }
        }

        // Ratio test: x_B(t) = x_B - t·dir·alpha. Ties go to the smallest
        // basic variable index.
        let mut ratios = Vec::new();
        for r in 0..m {
            let delta = -dir * alpha[r];
            let jb = self.basis[r];
            if delta < -PIVOT_TOL {
                ratios.push((r, self.x_basic[r].max(0.0) / -delta, VarState::AtLower));
            } else if delta > PIVOT_TOL && self.upper[jb].is_finite() {
                let room = (self.upper[jb] - self.x_basic[r]).max(0.0);
                ratios.push((r, room / delta, VarState::AtUpper));
            }
        }
        let t_min = ratios.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        let (t_max, leave) = if self.upper[q] <= t_min {
            (self.upper[q], None)
        } else {
            let (r, _, to) = ratios
                .iter()
                .filter(|e| e.1 <= t_min + 1e-12)
                .min_by_key(|e| self.basis[e.0])
                .copied()
                .unwrap();
            (t_min, Some((r, to)))
        };
        if t_max.is_infinite() {
            return (Step::Unbounded, false);
        }
        self.iterations += 1;
        let degenerate = t_max <= 1e-12;

        for r in 0..m {
            self.x_basic[r] -= t_max * dir * alpha[r];
        }
        match leave {
            None => {
                // Bound flip of the entering variable.
                self.state[q] = if dir > 0.0 {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some((r, to)) => {
                let old = self.basis[r];
                self.state[old] = to;
                self.state[q] = VarState::Basic;
                self.basis[r] = q;
                self.x_basic[r] = self.value_after_entering(q, dir, t_max);
                let piv = alpha[r];
                let row_r: Vec<f64> = self.binv_row(r).iter().map(|v| v / piv).collect();
                for i in 0..m {
                    if i == r {
                        continue;
                    }
                    let f = alpha[i];
                    if f != 0.0 {
                        let row = &mut self.binv[i * m..(i + 1) * m];
                        for (a, b) in row.iter_mut().zip(&row_r) {
                            *a -= f * b;
                        }
                    }
                }
                self.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);
                self.pivots_since_refactor += 1;
                if self.pivots_since_refactor >= REFACTOR_EVERY {
                    self.refactor();
                }
            }
        }
        (Step::Moved, degenerate)
    }

    fn value_after_entering(&self, q: usize, dir: f64, t: f64) -> f64 {
        if dir > 0.0 {
            t
        } else {
            self.upper[q] - t
        }
    }

    fn run(&mut self, max_iter: usize) -> Option<LpStatus> {
        let mut degenerate_run = 0;
        loop {
            if self.iterations >= max_iter {
                return None;
            }
            let (step, degenerate) = self.step(degenerate_run >= DEGENERATE_RUN);
            match step {
                Step::Optimal => return Some(LpStatus::Optimal),
                Step::Unbounded => return Some(LpStatus::Unbounded),
                Step::Moved => {
                    degenerate_run = if degenerate { degenerate_run + 1 } else { 0 };
                }
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram) -> LpResult {
    let n = lp.num_vars();
    let m = lp.rows.len();

    // Row equilibration and sign normalization so every rhs is >= 0.
    let mut row_factor = Vec::with_capacity(m);
    for row in &lp.rows {
        let scale = row
            .coeffs
            .iter()
            .map(|(_, v)| v.abs())
            .fold(0.0f64, f64::max);
        let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        let sign = if row.rhs * scale < 0.0 { -1.0 } else { 1.0 };
        row_factor.push(scale * sign);
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            if v != 0.0 {
                cols[j].push((i, v * row_factor[i]));
            }
        }
    }
    let rhs: Vec<f64> = lp
        .rows
        .iter()
        .zip(&row_factor)
        .map(|(r, f)| r.rhs * f)
        .collect();
    let mut upper = lp.upper.clone();

    let mut basis = vec![usize::MAX; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let coef = match row.kind {
            RowKind::Le => 1.0,
            RowKind::Ge => -1.0,
            RowKind::Eq => continue,
        } * row_factor[i].signum();
        let j = cols.len();
        cols.push(vec![(i, coef)]);
        upper.push(f64::INFINITY);
        if coef > 0.0 {
            basis[i] = j;
        }
    }
    let first_artificial = cols.len();
    for i in 0..m {
        if basis[i] == usize::MAX {
            basis[i] = cols.len();
            cols.push(vec![(i, 1.0)]);
            upper.push(f64::INFINITY);
        }
    }
    let total = cols.len();
    let mut state = vec![VarState::AtLower; total];
    for &j in &basis {
        state[j] = VarState::Basic;
    }

    let phase1_cost: Vec<f64> = (0..total)
        .map(|j| if j >= first_artificial { 1.0 } else { 0.0 })
        .collect();
    let mut tab = Tableau {
        m,
        cols,
        upper,
        rhs,
        cost: phase1_cost,
        basis,
        state,
        binv: Vec::new(),
        x_basic: Vec::new(),
        pivots_since_refactor: 0,
        iterations: 0,
    };
    let max_iter = 50 * (total + m) + 1000;
    let mut status = LpStatus::Optimal;
    if !tab.refactor() {
        status = LpStatus::Failed;
    }

    if status == LpStatus::Optimal && first_artificial < total {
        match tab.run(max_iter) {
            Some(LpStatus::Optimal) => {}
            _ => status = LpStatus::Failed,
        }
        tab.refactor();
        let infeasibility: f64 = (first_artificial..total).map(|j| tab.value(j)).sum();
        if status == LpStatus::Optimal && infeasibility > FEAS_TOL * (m as f64).max(1.0) {
            let rows = (first_artificial..total)
                .filter(|&j| tab.value(j) > FEAS_TOL)
                .map(|j| tab.cols[j][0].0)
                .collect();
            return LpResult::infeasible(lp, rows, tab.iterations);
        }
        // Artificials are pinned at zero from here on.
        for j in first_artificial..total {
            tab.upper[j] = 0.0;
        }
    }

    if status == LpStatus::Optimal {
        tab.cost = (0..total)
            .map(|j| if j < n { lp.objective[j] } else { 0.0 })
            .collect();
        status = tab.run(max_iter).unwrap_or(LpStatus::Failed);
        tab.refactor();
    }

    let mut x: Vec<f64> = (0..n).map(|j| tab.value(j)).collect();
    for (v, u) in x.iter_mut().zip(&lp.upper) {
        *v = v.clamp(0.0, *u);
    }
    let pi = tab.duals();
    let duals: Vec<f64> = pi.iter().zip(&row_factor).map(|(p, f)| p * f).collect();
    LpResult::finish(lp, status, x, duals, tab.iterations)
}
