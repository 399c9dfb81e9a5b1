//! Linear programming: a small general LP model, a revised simplex solver
//! with a duality certificate, and the wake-up schedule LP built on top.

mod schedule;
mod simplex;

use std::fmt::Write as _;

pub use schedule::{build_schedule_lp, solve_schedule, LpSolution, Schedule, ScheduleLp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `minimize cᵀx  s.t.  rows,  0 ≤ x ≤ upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    /// Upper bounds, `f64::INFINITY` when unbounded above.
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit or a singular basis.
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers in the original row scaling.
    pub duals: Vec<f64>,
    /// Relative primal-dual gap `(cᵀx − D(y)) / |cᵀx|`.
    pub gap: f64,
    /// Largest violation of dual sign/feasibility conditions.
    pub dual_infeasibility: f64,
    /// Largest absolute row or bound violation of `x`.
    pub primal_residual: f64,
    /// For infeasible problems, rows whose phase-1 artificial stayed positive.
    pub infeasible_rows: Vec<usize>,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self {
            var_names: Vec::new(),
            objective: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, upper: f64) -> usize {
        self.var_names.push(name.into());
        self.objective.push(cost);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        kind: RowKind,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            kind,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn solve(&self) -> LpResult {
        simplex::solve(self)
    }

    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Largest row or bound violation of `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, act) in self.rows.iter().zip(self.row_activity(x)) {
            let viol = match row.kind {
                RowKind::Le => act - row.rhs,
                RowKind::Ge => row.rhs - act,
                RowKind::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (v, u) in x.iter().zip(&self.upper) {
            worst = worst.max(-v).max(v - u);
        }
        worst
    }

    /// Lagrangian dual value and dual infeasibility for multipliers `y`.
    ///
    /// For a minimization, `y ≤ 0` on `≤` rows and `y ≥ 0` on `≥` rows; the
    /// dual function is `bᵀy + Σ_j u_j·min(0, c_j − a_jᵀy)`, which lower-bounds
    /// every feasible objective value.
    pub fn dual_value(&self, y: &[f64]) -> (f64, f64) {
        let mut infeas = 0.0f64;
        let mut value = 0.0;
        for (row, &yi) in self.rows.iter().zip(y) {
            value += row.rhs * yi;
            match row.kind {
                RowKind::Le => infeas = infeas.max(yi),
                RowKind::Ge => infeas = infeas.max(-yi),
                RowKind::Eq => {}
            }
        }
        let mut reduced = self.objective.clone();
        for (row, &yi) in self.rows.iter().zip(y) {
            for &(j, v) in &row.coeffs {
                reduced[j] -= v * yi;
            }
        }
        for (d, u) in reduced.iter().zip(&self.upper) {
            if *d < 0.0 {
                if u.is_finite() {
                    value += u * d;
                } else {
                    infeas = infeas.max(-d);
                }
            }
        }
        (value, infeas)
    }

    /// Writes the problem in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, first: bool, v: f64, name: &str| {
            match (v < 0.0, first) {
                (true, _) => write!(out, " - {} {name}", -v),
                (false, true) => write!(out, " {v} {name}"),
                (false, false) => write!(out, " + {v} {name}"),
            }
            .expect("writing to a String");
        };
        out.push_str("Minimize\n obj:");
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, first, c, &self.var_names[j]);
                first = false;
            }
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            let mut first = true;
            for &(j, v) in &row.coeffs {
                term(&mut out, first, v, &self.var_names[j]);
                first = false;
            }
            if first {
                out.push_str(" 0 x_dummy");
            }
            let op = match row.kind {
                RowKind::Le => "<=",
                RowKind::Ge => ">=",
                RowKind::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for (name, u) in self.var_names.iter().zip(&self.upper) {
            if u.is_finite() {
                let _ = writeln!(out, " 0 <= {name} <= {u}");
            } else {
                let _ = writeln!(out, " {name} >= 0");
            }
        }
        out.push_str("End\n");
        out
    }
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl LpResult {
    fn infeasible(lp: &LinearProgram, rows: Vec<usize>, iterations: usize) -> Self {
        Self {
            status: LpStatus::Infeasible,
            x: vec![0.0; lp.num_vars()],
            objective: f64::NAN,
            duals: vec![0.0; lp.rows.len()],
            gap: f64::NAN,
            dual_infeasibility: f64::NAN,
            primal_residual: f64::NAN,
            infeasible_rows: rows,
            iterations,
        }
    }

    fn finish(
        lp: &LinearProgram,
        status: LpStatus,
        x: Vec<f64>,
        duals: Vec<f64>,
        iterations: usize,
    ) -> Self {
        let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let (dual, dual_infeasibility) = lp.dual_value(&duals);
        let gap = (objective - dual) / objective.abs().max(1e-12);
        Self {
            status,
            primal_residual: lp.primal_residual(&x),
            objective,
            x,
            duals,
            gap,
            dual_infeasibility,
            infeasible_rows: Vec::new(),
            iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", -3.0, f64::INFINITY);
        let y = lp.add_var("y", -5.0, f64::INFINITY);
        lp.add_row("a", vec![(x, 1.0)], RowKind::Le, 4.0);
        lp.add_row("b", vec![(y, 2.0)], RowKind::Le, 12.0);
        lp.add_row("c", vec![(x, 3.0), (y, 2.0)], RowKind::Le, 18.0);
        let r = lp.solve();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 36.0).abs() < 1e-12);
        assert!((r.x[0] - 2.0).abs() < 1e-12 && (r.x[1] - 6.0).abs() < 1e-12);
        assert!(r.gap.abs() < 1e-12);
    }

    #[test]
    fn bounded_variables_and_equalities() {
        // min x + 2y - z, x + y + z = 2, y >= 0.5, z <= 1, x <= 1
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 1.0, 1.0);
        let y = lp.add_var("y", 2.0, f64::INFINITY);
        let z = lp.add_var("z", -1.0, 1.0);
        lp.add_row("sum", vec![(x, 1.0), (y, 1.0), (z, 1.0)], RowKind::Eq, 2.0);
        lp.add_row("ylo", vec![(y, 1.0)], RowKind::Ge, 0.5);
        let r = lp.solve();
        assert_eq!(r.status, LpStatus::Optimal);
        // z = 1, y = 0.5, x = 0.5 -> 0.5 + 1 - 1 = 0.5
        assert!((r.objective - 0.5).abs() < 1e-12, "{:?}", r);
        assert!(r.primal_residual < 1e-12);
        assert!(r.gap.abs() < 1e-12 && r.dual_infeasibility < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 1.0, 1.0);
        lp.add_row("need", vec![(x, 1.0)], RowKind::Ge, 2.0);
        let r = lp.solve();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert_eq!(r.infeasible_rows, vec![0]);
    }

    #[test]
    fn detects_unboundedness() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", -1.0, f64::INFINITY);
        let y = lp.add_var("y", 0.0, f64::INFINITY);
        lp.add_row("r", vec![(x, 1.0), (y, -1.0)], RowKind::Le, 1.0);
        assert_eq!(lp.solve().status, LpStatus::Unbounded);
    }

    #[test]
    fn lp_format_dump() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 1.0, 1.0);
        let t = lp.add_var("t", -2.0, f64::INFINITY);
        lp.add_row("c1", vec![(x, 0.5), (t, -1.0)], RowKind::Le, 0.0);
        let text = lp.to_lp_format();
        assert!(text.starts_with("Minimize\n obj: 1 x - 2 t\n"));
        assert!(text.contains(" c1: 0.5 x - 1 t <= 0\n"));
        assert!(text.contains(" 0 <= x <= 1\n"));
        assert!(text.contains(" t >= 0\n"));
        assert!(text.ends_with("End\n"));
    }
}
