//! On-disk solution bundle: one directory per run.
//!
//! ```text
//! scenario.toml    the scenario that was solved
//! trajectory.csv   slot,x,y
//! schedule.csv     slot,sensor,fraction,blocks
//! blocks.csv       slot,sensor,blocks,rate
//! summary.json     objective, per-sensor figures, iteration counts, timing
//! trace.json       per-iteration traces
//! ```
//!
//! Slot and sensor indices in files are 1-based.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bcd::{evaluate_with_rates, round_schedule, BlockAllocation, Solution, SolveTrace};
use crate::channel::rate_table;
use crate::error::{Error, Result};
use crate::lp::Schedule;
use crate::scenario::{Point, Scenario, SolverConfig};
use crate::trajectory::Trajectory;

pub const SCHEMA_VERSION: u32 = 1;

pub const SCENARIO_FILE: &str = "scenario.toml";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const BLOCKS_FILE: &str = "blocks.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.json";
pub const VERIFY_FILE: &str = "verify.json";

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    slot: usize,
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleRow {
    slot: usize,
    sensor: usize,
    fraction: f64,
    blocks: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlockRow {
    slot: usize,
    sensor: usize,
    blocks: u32,
    rate: f64,
}

/// A solved instance: everything the verifier needs.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub scenario: Scenario,
    pub trajectory: Trajectory,
    pub schedule: Schedule,
    pub blocks: BlockAllocation,
    /// `R_k[m]` used for the allocation, bps/Hz (K×M).
    pub rates: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSummary {
    pub sensor: usize,
    pub energy_j: f64,
    pub throughput: f64,
    /// Throughput over demand with the relaxed schedule.
    pub ratio: f64,
    pub energy_rounded_j: f64,
    /// Throughput over demand after rounding to whole blocks.
    pub ratio_rounded: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub lp_seconds: f64,
    pub sca_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub theta: f64,
    pub theta_rounded: f64,
    pub theta_initial: f64,
    pub num_sensors: usize,
    pub num_slots: usize,
    pub blocks_per_slot: u32,
    pub outer_iterations: usize,
    pub sca_iterations: usize,
    pub converged: bool,
    pub solver: SolverConfig,
    pub sensors: Vec<SensorSummary>,
    /// Wall-clock figures; the only non-reproducible part of the summary.
    pub timing: Timing,
}

impl Bundle {
    /// Rounds the relaxed schedule to `L` blocks per slot and tabulates rates.
    pub fn from_solution(s: &Scenario, sol: &Solution) -> Self {
        let blocks = round_schedule(&sol.schedule, s.mission.blocks_per_slot as u32);
        Self {
            scenario: s.clone(),
            rates: rate_table(s, sol.trajectory.points()),
            trajectory: sol.trajectory.clone(),
            schedule: sol.schedule.clone(),
            blocks,
        }
    }

    pub fn summarize(&self, sol: &Solution, total_seconds: f64) -> Summary {
        let s = &self.scenario;
        let relaxed = evaluate_with_rates(s, &self.schedule, &self.rates);
        let rounded = evaluate_with_rates(s, &self.blocks.to_schedule(), &self.rates);
        let sensors: Vec<SensorSummary> = relaxed
            .iter()
            .zip(&rounded)
            .enumerate()
            .map(|(k, (a, b))| SensorSummary {
                sensor: k + 1,
                energy_j: a.energy_j,
                throughput: a.throughput,
                ratio: a.ratio,
                energy_rounded_j: b.energy_j,
                ratio_rounded: b.ratio,
            })
            .collect();
        let tr = &sol.trace;
        Summary {
            schema_version: SCHEMA_VERSION,
            theta: sol.theta,
            theta_rounded: sensors
                .iter()
                .map(|x| x.energy_rounded_j)
                .fold(0.0, f64::max),
            theta_initial: tr.theta.first().copied().unwrap_or(sol.theta),
            num_sensors: s.num_sensors(),
            num_slots: s.num_slots(),
            blocks_per_slot: self.blocks.blocks_per_slot(),
            outer_iterations: tr.outer_iterations,
            sca_iterations: tr.sca.iter().map(|t| t.iterations).sum(),
            converged: tr.converged,
            solver: s.solver.clone(),
            sensors,
            timing: Timing {
                total_seconds,
                lp_seconds: tr.lp_seconds.iter().sum(),
                sca_seconds: tr.sca_seconds.iter().sum(),
            },
        }
    }

    /// Writes the bundle files into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path, summary: &Summary, trace: &SolveTrace) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join(SCENARIO_FILE), &self.scenario.to_toml())?;

        let rows = self
            .trajectory
            .points()
            .iter()
            .enumerate()
            .map(|(m, p)| TrajectoryRow {
                slot: m + 1,
                x: p.x,
                y: p.y,
            });
        write_csv(&dir.join(TRAJECTORY_FILE), rows)?;

        let (k_count, m_count) = (self.blocks.num_sensors(), self.blocks.num_slots());
        let cells = || (0..m_count).flat_map(move |m| (0..k_count).map(move |k| (k, m)));
        write_csv(
            &dir.join(SCHEDULE_FILE),
            cells().map(|(k, m)| ScheduleRow {
                slot: m + 1,
                sensor: k + 1,
                fraction: self.schedule.get(k, m),
                blocks: self.blocks.get(k, m),
            }),
        )?;
        write_csv(
            &dir.join(BLOCKS_FILE),
            cells().map(|(k, m)| BlockRow {
                slot: m + 1,
                sensor: k + 1,
                blocks: self.blocks.get(k, m),
                rate: self.rates[k][m],
            }),
        )?;
        write_json(&dir.join(SUMMARY_FILE), summary)?;
        write_json(&dir.join(TRACE_FILE), trace)
    }

    /// Reads a bundle written by [`Bundle::write`].
    pub fn read(dir: &Path) -> Result<Self> {
        let scenario = Scenario::load(dir.join(SCENARIO_FILE))?;
        let (k_count, m_count) = (scenario.num_sensors(), scenario.num_slots());
        let l = scenario.mission.blocks_per_slot as u32;

        let traj_rows: Vec<TrajectoryRow> = read_csv(&dir.join(TRAJECTORY_FILE))?;
        let mut points = vec![Point::new(f64::NAN, f64::NAN); m_count];
        for r in &traj_rows {
            let m = index(r.slot, m_count, TRAJECTORY_FILE, "slot")?;
            points[m] = Point::new(r.x, r.y);
        }
        if traj_rows.len() != m_count || points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(corrupt(
                TRAJECTORY_FILE,
                format!("expected {m_count} finite points"),
            ));
        }
        let trajectory = Trajectory::new(points);
        trajectory.check(&scenario)?;

        let mut schedule = Schedule::zeros(k_count, m_count);
        let sched_rows: Vec<ScheduleRow> = read_csv(&dir.join(SCHEDULE_FILE))?;
        for r in &sched_rows {
            let m = index(r.slot, m_count, SCHEDULE_FILE, "slot")?;
            let k = index(r.sensor, k_count, SCHEDULE_FILE, "sensor")?;
            schedule.set(k, m, r.fraction);
        }

        let mut blocks = BlockAllocation::zeros(k_count, m_count, l);
        let mut rates = vec![vec![f64::NAN; m_count]; k_count];
        let block_rows: Vec<BlockRow> = read_csv(&dir.join(BLOCKS_FILE))?;
        if block_rows.len() != k_count * m_count {
            return Err(corrupt(
                BLOCKS_FILE,
                format!("expected {} rows", k_count * m_count),
            ));
        }
        for r in &block_rows {
            let m = index(r.slot, m_count, BLOCKS_FILE, "slot")?;
            let k = index(r.sensor, k_count, BLOCKS_FILE, "sensor")?;
            if !(r.rate >= 0.0 && r.rate.is_finite()) {
                return Err(corrupt(
                    BLOCKS_FILE,
                    format!("bad rate {} at slot {}", r.rate, r.slot),
                ));
            }
            blocks.set(k, m, r.blocks);
            rates[k][m] = r.rate;
        }
        if rates.iter().flatten().any(|r| r.is_nan()) {
            return Err(corrupt(BLOCKS_FILE, "missing (slot, sensor) rows".into()));
        }
        if !blocks.is_valid() {
            return Err(corrupt(
                BLOCKS_FILE,
                format!("a slot holds more than L = {l} blocks"),
            ));
        }
        Ok(Self {
            scenario,
            trajectory,
            schedule,
            blocks,
            rates,
        })
    }
}

fn corrupt(file: &str, msg: String) -> Error {
    Error::parse(file, msg)
}

fn index(one_based: usize, len: usize, file: &str, what: &str) -> Result<usize> {
    if one_based == 0 || one_based > len {
        return Err(corrupt(
            file,
            format!("{what} index {one_based} out of range 1..={len}"),
        ));
    }
    Ok(one_based - 1)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    text.push('\n');
    write_text(path, &text)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let csv_err = |e: csv::Error| Error::parse(path.display().to_string(), e);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let name = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(PathBuf::from(path), io),
        other => Error::parse(name.clone(), format!("{other:?}")),
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::parse(name, e))
}
