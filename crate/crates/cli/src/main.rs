use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use uav_wsn::baselines::{compare, straight_trajectory, sweep, Comparison, Sweep, SweepPoint};
use uav_wsn::bcd::optimize;
use uav_wsn::bundle::{Bundle, VERIFY_FILE};
use uav_wsn::lp::build_schedule_lp;
use uav_wsn::mc_verify::{simulate_collection, verify_report};
use uav_wsn::scenario::{Scenario, MAX_SEED};
use uav_wsn::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_SOLVER: u8 = 5;
const EXIT_VERIFY_FAILED: u8 = 6;

/// Blocks simulated by `verify` when `--n-reps` is not given.
const DEFAULT_VERIFY_BLOCKS: u64 = 100_000;

#[derive(Parser)]
#[command(
    name = "uav-wsn",
    version,
    about = "Plan UAV trajectories and sensor wake-up schedules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize trajectory and schedule and write a solution bundle.
    Solve {
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "run")]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Write the final schedule LP in CPLEX LP format to this file.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Write every SCA iterate to <out>/iterates/.
        #[arg(long)]
        dump_iterates: bool,
    },
    /// Compare the optimized design with straight flight and a static collector.
    Compare {
        scenario: PathBuf,
        /// Output directory for comparison.csv and per-point bundles.
        #[arg(long, default_value = "compare")]
        out: PathBuf,
        /// Sweep grid, e.g. `S=2e6:2e6:2e7`, `eps=1e-4,1e-3,1e-2` or `T=50,100`.
        #[arg(long)]
        sweep: Option<String>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Monte-Carlo check of a solution bundle.
    Verify {
        run_dir: PathBuf,
        /// Fading seed; defaults to the scenario's solver seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated missions; defaults to enough for 10^5 blocks.
        #[arg(long)]
        n_reps: Option<u32>,
        /// Report path; defaults to <run_dir>/verify.json.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverFlags {
    /// Relative improvement threshold for both loops.
    #[arg(long)]
    kappa: Option<f64>,
    /// Fading seed recorded in the scenario (at most 2^63 - 1).
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
    seed: Option<u64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_sca: Option<usize>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } | Error::Parse { .. } | Error::Validation(_) => EXIT_INPUT,
            Error::Infeasible { .. } => EXIT_INFEASIBLE,
            Error::Domain(_) | Error::NonConvergence(_) | Error::Solver(_) => EXIT_SOLVER,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        msg: msg.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve {
            scenario,
            out,
            solver,
            dump_lp,
            dump_iterates,
        } => cmd_solve(&scenario, &out, &solver, dump_lp.as_deref(), dump_iterates),
        Command::Compare {
            scenario,
            out,
            sweep,
            solver,
        } => cmd_compare(&scenario, &out, sweep.as_deref(), &solver),
        Command::Verify {
            run_dir,
            seed,
            n_reps,
            report,
        } => cmd_verify(&run_dir, seed, n_reps, report.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn load_scenario(path: &Path, flags: &SolverFlags) -> Result<Scenario, Failure> {
    let mut s = Scenario::load(path)?;
    if let Some(k) = flags.kappa {
        if !(k > 0.0) {
            return Err(usage(format!("--kappa must be > 0, got {k}")));
        }
        s.solver.kappa = k;
    }
    if let Some(seed) = flags.seed {
        s.solver.seed = seed;
    }
    if let Some(n) = flags.max_outer {
        s.solver.max_outer = n;
    }
    if let Some(n) = flags.max_sca {
        s.solver.max_sca = n;
    }
    Ok(s)
}

fn cmd_solve(
    path: &Path,
    out: &Path,
    flags: &SolverFlags,
    dump_lp: Option<&Path>,
    dump_iterates: bool,
) -> CmdResult {
    let s = load_scenario(path, flags)?;
    let started = Instant::now();
    let sol = optimize(&s, &straight_trajectory(&s))?;
    let bundle = Bundle::from_solution(&s, &sol);
    let summary = bundle.summarize(&sol, started.elapsed().as_secs_f64());
    bundle.write(out, &summary, &sol.trace)?;

    if let Some(lp_path) = dump_lp {
        let text = build_schedule_lp(&s, sol.trajectory.points())
            .lp
            .to_lp_format();
        write_file(lp_path, text.as_bytes())?;
    }
    if dump_iterates {
        let dir = out.join("iterates");
        fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        for (r, sca) in sol.trace.sca.iter().enumerate() {
            for (l, q) in sca.iterates.iter().enumerate() {
                let mut text = String::from("slot,x,y\n");
                for (m, p) in q.points().iter().enumerate() {
                    text.push_str(&format!("{},{},{}\n", m + 1, p.x, p.y));
                }
                write_file(
                    &dir.join(format!("outer_{:02}_sca_{:03}.csv", r + 1, l + 1)),
                    text.as_bytes(),
                )?;
            }
        }
    }

    println!(
        "theta = {} J (rounded: {} J)",
        summary.theta, summary.theta_rounded
    );
    println!(
        "outer iterations = {}, SCA iterations = {}, converged = {}",
        summary.outer_iterations, summary.sca_iterations, summary.converged
    );
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    variable: &'a str,
    value: Option<f64>,
    scheme: String,
    theta: Option<f64>,
    feasible: bool,
    iterations: usize,
    seconds: f64,
    error: Option<String>,
}

fn cmd_compare(
    path: &Path,
    out: &Path,
    sweep_spec: Option<&str>,
    flags: &SolverFlags,
) -> CmdResult {
    let s = load_scenario(path, flags)?;
    let sw = sweep_spec
        .map(str::parse::<Sweep>)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let points: Vec<SweepPoint> = match &sw {
        Some(sw) => sweep(&s, sw),
        None => vec![SweepPoint {
            value: f64::NAN,
            comparison: Ok(compare(&s)),
        }],
    };
    let variable = sw.as_ref().map_or("none", |x| x.var.name());

    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let csv_path = out.join("comparison.csv");
    let csv_err = |e: csv::Error| {
        Failure::from(Error::Parse {
            what: csv_path.display().to_string(),
            msg: e.to_string(),
        })
    };
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    let mut any_ok = false;

    for (i, p) in points.iter().enumerate() {
        let value = (!p.value.is_nan()).then_some(p.value);
        let cmp: &Comparison = match &p.comparison {
            Ok(c) => c,
            Err(msg) => {
                eprintln!("point {}: {msg}", i + 1);
                continue;
            }
        };
        any_ok |= cmp.results.iter().any(|r| r.feasible());
        for r in &cmp.results {
            w.serialize(ComparisonRow {
                variable,
                value,
                scheme: r.scheme.to_string(),
                theta: r.theta,
                feasible: r.feasible(),
                iterations: r.iterations,
                seconds: r.seconds,
                error: r.error.clone(),
            })
            .map_err(csv_err)?;
            let theta = r
                .theta
                .map_or_else(|| "infeasible".to_string(), |t| format!("{t}"));
            match value {
                Some(v) => println!("{variable}={v}  {:<9} theta = {theta}", r.scheme),
                None => println!("{:<9} theta = {theta}", r.scheme),
            }
        }
        if let Some(sol) = &cmp.optimized {
            let sc = match (&sw, value) {
                (Some(sw), Some(v)) => sw.var.apply(&s, v)?,
                _ => s.clone(),
            };
            let bundle = Bundle::from_solution(&sc, sol);
            let seconds = cmp.results[0].seconds;
            bundle.write(
                &out.join(format!("point_{:02}", i + 1)),
                &bundle.summarize(sol, seconds),
                &sol.trace,
            )?;
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: csv_path.clone(),
        source: e,
    })?;
    println!("wrote {}", csv_path.display());
    if !any_ok {
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            msg: "every comparison point failed".into(),
        });
    }
    Ok(())
}

fn cmd_verify(
    dir: &Path,
    seed: Option<u64>,
    n_reps: Option<u32>,
    report: Option<&Path>,
) -> CmdResult {
    if n_reps == Some(0) {
        return Err(usage("--n-reps must be at least 1"));
    }
    let bundle = Bundle::read(dir)?;
    let s = &bundle.scenario;
    let seed = seed.unwrap_or(s.solver.seed);
    let per_mission: u64 = (0..s.num_sensors())
        .map(|k| u64::from(bundle.blocks.sensor_total(k)))
        .sum();
    let missions = n_reps.unwrap_or_else(|| {
        DEFAULT_VERIFY_BLOCKS
            .div_ceil(per_mission.max(1))
            .clamp(1, u64::from(u32::MAX)) as u32
    });
    let sims = simulate_collection(
        s,
        &bundle.blocks,
        &bundle.rates,
        &bundle.trajectory,
        seed,
        missions,
    );
    let rep = verify_report(s, &sims, seed);

    let path = report.map_or_else(|| dir.join(VERIFY_FILE), Path::to_path_buf);
    let mut text = serde_json::to_string_pretty(&rep).expect("report serializes");
    text.push('\n');
    write_file(&path, text.as_bytes())?;

    for v in &rep.sensors {
        println!(
            "sensor {}: outage {:.5} in [{:.5}, {:.5}], delivered {:.6e} / required {:.6e} bits: {}",
            v.sensor + 1,
            v.empirical_outage,
            v.ci_low,
            v.ci_high,
            v.delivered_bits,
            v.required_bits,
            if v.pass { "pass" } else { "FAIL" }
        );
        for d in &v.diagnostics {
            println!("  {d}");
        }
    }
    println!(
        "{} missions, {} blocks: {}",
        rep.missions,
        rep.total_blocks,
        if rep.pass { "PASS" } else { "FAIL" }
    );
    if rep.pass {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY_FAILED,
            msg: format!("verification failed, see {}", path.display()),
        })
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, bytes).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}
