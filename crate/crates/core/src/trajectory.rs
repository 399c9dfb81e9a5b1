use crate::error::{Error, Result};
use crate::scenario::{Point, Scenario};

/// Speed-constraint slack allowed when checking a trajectory, meters.
pub const SPEED_TOL: f64 = 1e-6;

/// UAV horizontal positions, one per slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    points: Vec<Point>,
}

impl Trajectory {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    /// Constant-speed straight line from `start` to `end` over `n` points.
    pub fn straight(start: Point, end: Point, n: usize) -> Self {
        assert!(n >= 2);
        let points = (0..n)
            .map(|m| {
                if m == n - 1 {
                    end
                } else {
                    start + (end - start) * (m as f64 / (n - 1) as f64)
                }
            })
            .collect();
        Self { points }
    }

    /// Every point at `p`.
    pub fn stationary(p: Point, n: usize) -> Self {
        Self { points: vec![p; n] }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest distance covered in one slot.
    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    /// Minimum horizontal distance to `w` and the slot where it is attained.
    pub fn closest_approach(&self, w: &Point) -> (usize, f64) {
        self.points
            .iter()
            .enumerate()
            .map(|(m, q)| (m, (q - w).norm()))
            .fold(
                (0, f64::INFINITY),
                |best, cur| if cur.1 < best.1 { cur } else { best },
            )
    }

    /// Checks point count, exact endpoints and the per-slot speed limit.
    pub fn check(&self, s: &Scenario) -> Result<()> {
        let m = &s.mission;
        if self.points.len() != m.num_slots {
            return Err(Error::Validation(format!(
                "trajectory has {} points, scenario has {} slots",
                self.points.len(),
                m.num_slots
            )));
        }
        if self.points[0] != m.q_start || self.points[self.points.len() - 1] != m.q_end {
            return Err(Error::Validation(
                "trajectory endpoints differ from q0/qF".into(),
            ));
        }
        self.check_speed(m.d_max())
    }

    pub fn check_speed(&self, d_max: f64) -> Result<()> {
        for (i, w) in self.points.windows(2).enumerate() {
            let step = (w[1] - w[0]).norm();
            if step > d_max + SPEED_TOL {
                return Err(Error::Validation(format!(
                    "trajectory step {} -> {} covers {step} m, more than D_max = {d_max} m",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(())
    }
}
