//! Command-line front end: preprocess roadmap bundles, answer planning
//! queries, run benchmark sweeps, drive the lattice verification lab,
//! and render scenes.
//!
//! Exit codes: 0 solved/ok, 2 planner timeout, 3 start could not be
//! attached, 4 bundle/scenario robot mismatch, 1 any other error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tileplan::lattice;
use tileplan::planners::{self, PlanParams, PlanResult, PlanStatus, Query};
use tileplan::roadmap::{self, RoadmapBundle};
use tileplan::robot::RobotSpec;
use tileplan::scenario::{self, RunRecord, ScenarioFile, ScenarioKind};

#[derive(Parser)]
#[command(name = "tileplan", version, about = "Tiling-roadmap planning for planar multi-link robots")]
struct Cli {
    /// Chatty progress output on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlannerChoice {
    Trdrrt,
    Rrt,
}

impl PlannerChoice {
    fn name(&self) -> &'static str {
        match self {
            PlannerChoice::Trdrrt => "trdrrt",
            PlannerChoice::Rrt => "rrt",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a roadmap bundle for a robot (once per robot type).
    Preprocess {
        /// Comma-separated link lengths of a free-flying open chain.
        #[arg(long, conflicts_with = "scenario")]
        links: Option<String>,
        /// Take the robot description from a scenario file instead.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Number of base configurations.
        #[arg(long)]
        n: usize,
        /// Neighbors per vertex; defaults to ceil(2 e ln n).
        #[arg(long)]
        k: Option<usize>,
        /// Interpolation resolution, radians per joint substep.
        #[arg(long, default_value_t = roadmap::DEFAULT_STEP)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output bundle path.
        #[arg(long)]
        out: PathBuf,
        /// Also export the bundle as JSON for debugging.
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Worker threads for the per-anchor roadmap builds (0 = all
        /// cores). The result is identical for any value.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Revalidate the finished bundle (slow).
        #[arg(long)]
        audit: bool,
    },
    /// Answer one query with the selected planner.
    Plan {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        planner: PlannerChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 60_000)]
        time_budget_ms: u64,
        #[arg(long, default_value_t = 200_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.05)]
        goal_bias: f64,
        /// Per-joint extension cap for the RRT baseline, radians.
        #[arg(long, default_value_t = 0.5)]
        step_rad: f64,
        /// Write the result (status, stats, waypoints, samples) here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the solution to an SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        svg_frames: usize,
    },
    /// Seeded batch runs with a CSV of per-run records.
    Bench {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated planner list.
        #[arg(long, default_value = "trdrrt,rrt")]
        planners: String,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        /// Base seed; run r uses seeds + r.
        #[arg(long, default_value_t = 0)]
        seeds: u64,
        #[arg(long, default_value_t = 60_000)]
        time_budget_ms: u64,
        #[arg(long, default_value_t = 200_000)]
        max_iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for parallel runs (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Lattice and coverage verification lab.
    Lattice {
        #[command(subcommand)]
        mode: LatticeMode,
    },
    /// Render a scenario (optionally with a solved path) to SVG.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        /// A result JSON produced by `plan --out`.
        #[arg(long)]
        result: Option<PathBuf>,
        #[arg(long, default_value_t = 12)]
        frames: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one of the built-in scenario analogs.
    Scenario {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum LatticeMode {
    /// Evaluate the head-coverage line walk closed forms.
    Line {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 1)]
        i: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate lattice points within a radius.
    Grid {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-link toy: expand the real tiling graph and compare the
    /// reached head sets against the independent pivot-walk oracle.
    Coverage {
        /// Base directions (angle interval 2 pi / n).
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
        #[arg(long, default_value_t = 1.0)]
        probe_radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized checks of the distance inequalities.
    Bounds {
        /// Comma-separated link lengths (default three unit links).
        #[arg(long, default_value = "1,1,1")]
        links: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// On-disk result format: enough context to re-run, plus the raw plan.
#[derive(Serialize, Deserialize)]
struct ResultFile {
    planner: String,
    scenario: String,
    seed: u64,
    result: PlanResult,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    VERBOSE.store(cli.verbose, std::sync::atomic::Ordering::Relaxed);
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

static VERBOSE: std::sync::atomic::AtomicBool = std::sync::atomic::AtomicBool::new(false);

macro_rules! vlog {
    ($($arg:tt)*) => {
        if VERBOSE.load(std::sync::atomic::Ordering::Relaxed) {
            eprintln!($($arg)*);
        }
    };
}

fn parse_links(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad link length {t:?}: {e}")))
        .collect()
}

fn configure_rayon(jobs: usize) {
    if jobs > 0 {
        // Ignore failure if a pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

fn load_pair(
    bundle_path: &PathBuf,
    scenario_path: &PathBuf,
) -> Result<(RoadmapBundle, ScenarioFile), String> {
    let t0 = std::time::Instant::now();
    let bundle = roadmap::load_bundle(bundle_path).map_err(|e| e.to_string())?;
    vlog!(
        "loaded bundle {} (n={}, k={}, {} roadmaps) in {:.0} ms",
        bundle_path.display(),
        bundle.n(),
        bundle.k,
        bundle.roadmaps.len(),
        t0.elapsed().as_secs_f64() * 1e3
    );
    let sc = scenario::load_scenario(scenario_path).map_err(|e| e.to_string())?;
    vlog!(
        "loaded scenario {:?} ({} obstacles, {} links)",
        sc.name,
        sc.scene.obstacles.len(),
        sc.robot.link_count()
    );
    Ok((bundle, sc))
}

fn robots_match(bundle: &RoadmapBundle, sc: &ScenarioFile) -> bool {
    bundle.spec == sc.robot
}

fn run_one(
    bundle: &RoadmapBundle,
    sc: &ScenarioFile,
    planner: PlannerChoice,
    params: &PlanParams,
) -> Result<PlanResult, String> {
    let query = Query {
        start: sc.start_configuration().map_err(|e| e.to_string())?,
        target: sc.target.clone(),
        scene: sc.scene.clone(),
    };
    let res = match planner {
        PlannerChoice::Trdrrt => planners::drrt_plan(bundle, &query, params),
        PlannerChoice::Rrt => planners::rrt_plan(&bundle.spec, &query, params),
    };
    res.map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Preprocess {
            links,
            scenario: scenario_path,
            n,
            k,
            step,
            seed,
            out,
            json_out,
            jobs,
            audit,
        } => {
            configure_rayon(jobs);
            let spec: RobotSpec = match (links, scenario_path) {
                (Some(ls), None) => {
                    RobotSpec::open_chain(parse_links(&ls)?).map_err(|e| e.to_string())?
                }
                (None, Some(p)) => scenario::load_scenario(&p).map_err(|e| e.to_string())?.robot,
                _ => return Err("pass exactly one of --links or --scenario".into()),
            };
            let t0 = std::time::Instant::now();
            let bundle =
                roadmap::build_bundle(&spec, n, k, step, seed).map_err(|e| e.to_string())?;
            let elapsed = t0.elapsed().as_secs_f64();
            roadmap::save_bundle(&bundle, &out).map_err(|e| e.to_string())?;
            if let Some(jp) = &json_out {
                roadmap::save_bundle_json(&bundle, jp).map_err(|e| e.to_string())?;
            }
            println!(
                "bundle: n={} k={} step={} seed={} anchors={} ({:.2}s)",
                bundle.n(),
                bundle.k,
                bundle.step,
                seed,
                bundle.roadmaps.len(),
                elapsed
            );
            for rm in &bundle.roadmaps {
                println!(
                    "  roadmap anchor {}: {} vertices, {} edges",
                    rm.anchor,
                    bundle.n(),
                    rm.edge_count()
                );
            }
            if audit {
                roadmap::audit_bundle(&bundle, 20, seed).map_err(|e| format!("audit failed: {e}"))?;
                println!("audit: ok");
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Plan {
            bundle,
            scenario: scenario_path,
            planner,
            seed,
            time_budget_ms,
            max_iters,
            goal_bias,
            step_rad,
            out,
            svg,
            svg_frames,
        } => {
            let (bundle, sc) = load_pair(&bundle, &scenario_path)?;
            if !robots_match(&bundle, &sc) {
                eprintln!("error: bundle robot does not match scenario robot");
                return Ok(ExitCode::from(4));
            }
            let params = PlanParams {
                max_iters,
                time_budget_ms,
                goal_bias,
                step_rad,
                k_start: 0,
                seed,
            };
            let res = run_one(&bundle, &sc, planner, &params)?;
            println!(
                "{}: {} in {:.1} ms, {} iterations, tree {}, self_checks {}, obstacle_checks {}",
                planner.name(),
                match res.status {
                    PlanStatus::Solved => "solved",
                    PlanStatus::Timeout => "timeout",
                    PlanStatus::StartIsolated => "start isolated",
                },
                res.stats.wall_time_ms,
                res.stats.iterations,
                res.stats.tree_size,
                res.stats.self_collision_checks,
                res.stats.obstacle_checks,
            );
            if let Some(op) = &out {
                let rf = ResultFile {
                    planner: planner.name().into(),
                    scenario: sc.name.clone(),
                    seed,
                    result: res.clone(),
                };
                std::fs::write(op, serde_json::to_string_pretty(&rf).unwrap())
                    .map_err(|e| e.to_string())?;
            }
            if let Some(sp) = &svg {
                let svg_text = scenario::render_svg(&sc, res.path.as_ref(), svg_frames);
                std::fs::write(sp, svg_text).map_err(|e| e.to_string())?;
            }
            Ok(match res.status {
                PlanStatus::Solved => ExitCode::SUCCESS,
                PlanStatus::Timeout => ExitCode::from(2),
                PlanStatus::StartIsolated => ExitCode::from(3),
            })
        }

        Command::Bench {
            bundle,
            scenario: scenario_path,
            planners: planner_list,
            runs,
            seeds,
            time_budget_ms,
            max_iters,
            out,
            jobs,
        } => {
            configure_rayon(jobs);
            let (bundle, sc) = load_pair(&bundle, &scenario_path)?;
            if !robots_match(&bundle, &sc) {
                eprintln!("error: bundle robot does not match scenario robot");
                return Ok(ExitCode::from(4));
            }
            let mut choices = Vec::new();
            for p in planner_list.split(',') {
                match p.trim() {
                    "trdrrt" => choices.push(PlannerChoice::Trdrrt),
                    "rrt" => choices.push(PlannerChoice::Rrt),
                    other => return Err(format!("unknown planner {other:?}")),
                }
            }
            let mut jobs_list = Vec::new();
            for &planner in &choices {
                for r in 0..runs {
                    jobs_list.push((planner, seeds + r));
                }
            }
            use rayon::prelude::*;
            let records: Vec<RunRecord> = jobs_list
                .par_iter()
                .map(|&(planner, seed)| match run_one(
                    &bundle,
                    &sc,
                    planner,
                    &PlanParams {
                        max_iters,
                        time_budget_ms,
                        seed,
                        ..Default::default()
                    },
                ) {
                    Ok(res) => RunRecord {
                        planner: planner.name().into(),
                        scenario: sc.name.clone(),
                        seed,
                        solved: res.status == PlanStatus::Solved,
                        wall_time_ms: res.stats.wall_time_ms,
                        iterations: res.stats.iterations,
                        self_checks: res.stats.self_collision_checks,
                        obstacle_checks: res.stats.obstacle_checks,
                    },
                    // A failed run (bad start, internal error) counts
                    // as unsolved rather than aborting the batch.
                    Err(e) => {
                        eprintln!("run {planner} seed {seed} failed: {e}", planner = planner.name());
                        RunRecord {
                            planner: planner.name().into(),
                            scenario: sc.name.clone(),
                            seed,
                            solved: false,
                            wall_time_ms: 0.0,
                            iterations: 0,
                            self_checks: 0,
                            obstacle_checks: 0,
                        }
                    }
                })
                .collect();
            let csv = scenario::records_to_csv(&records);
            if let Some(op) = &out {
                std::fs::write(op, &csv).map_err(|e| e.to_string())?;
            }
            for &planner in &choices {
                let times: Vec<f64> = records
                    .iter()
                    .filter(|r| r.planner == planner.name())
                    .map(|r| r.wall_time_ms)
                    .collect();
                let solved = records
                    .iter()
                    .filter(|r| r.planner == planner.name() && r.solved)
                    .count();
                let a = scenario::aggregate(&times).map_err(|e| e.to_string())?;
                println!(
                    "{:8} solved {}/{}  wall_ms min {:.1} | p25 {:.1} | median {:.1} | p75 {:.1} | max {:.1} | mean {:.1}",
                    planner.name(),
                    solved,
                    times.len(),
                    a.min,
                    a.p25,
                    a.median,
                    a.p75,
                    a.max,
                    a.mean
                );
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Lattice { mode } => run_lattice(mode),

        Command::Render {
            scenario: scenario_path,
            result,
            frames,
            out,
        } => {
            let sc = scenario::load_scenario(&scenario_path).map_err(|e| e.to_string())?;
            let path = match &result {
                Some(rp) => {
                    let text = std::fs::read_to_string(rp).map_err(|e| e.to_string())?;
                    let rf: ResultFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
                    rf.result.path
                }
                None => None,
            };
            let svg = scenario::render_svg(&sc, path.as_ref(), frames);
            std::fs::write(&out, svg).map_err(|e| e.to_string())?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }

        Command::Scenario {
            kind,
            scale,
            seed,
            out,
        } => {
            let kind: ScenarioKind = kind.parse().map_err(|e: scenario::ScenarioError| e.to_string())?;
            let sc = scenario::generate_scenario(kind, scale, seed);
            scenario::save_scenario(&sc, &out).map_err(|e| e.to_string())?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_lattice(mode: LatticeMode) -> Result<ExitCode, String> {
    match mode {
        LatticeMode::Line { n, l, i, out } => {
            if n < 2 {
                return Err(format!("n must be at least 2, got {n}"));
            }
            let p = lattice::line_point(i, n, l);
            let d = lattice::spacing(n, l);
            println!("q_{i} = ({:.7}, {:.7})", p.x, p.y);
            println!("spacing = {:.7}", d);
            if let Some(op) = &out {
                let mut text = String::from("i,x,y,spacing\n");
                for step in 0..=i {
                    let q = lattice::line_point(step, n, l);
                    text.push_str(&format!("{step},{},{},{d}\n", q.x, q.y));
                }
                std::fs::write(op, text).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        LatticeMode::Grid {
            alpha,
            l,
            radius,
            out,
        } => {
            let lat = lattice::Lattice::new(alpha, l).map_err(|e| e.to_string())?;
            let pts = lattice::lattice_points(&lat, radius).map_err(|e| e.to_string())?;
            println!(
                "lattice alpha={alpha} l={l}: dx={:.6} dy={:.6} spacing={:.6}, {} points within r={radius}",
                lat.dx(),
                lat.dy(),
                lat.neighbor_spacing(),
                pts.len()
            );
            if let Some(op) = &out {
                let mut text = String::from("x,y\n");
                for p in &pts {
                    text.push_str(&format!("{},{}\n", p.x, p.y));
                }
                std::fs::write(op, text).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        LatticeMode::Coverage {
            n,
            rounds,
            probe_radius,
            out,
        } => {
            if n < 2 {
                return Err(format!("n must be at least 2, got {n}"));
            }
            let bundle = lattice::toy::toy_bundle(n).map_err(|e| e.to_string())?;
            let reached = lattice::toy::tiling_heads(&bundle, rounds);
            let oracle = lattice::toy::enumerate_heads(n, rounds);
            let mut all_match = true;
            for depth in 0..=rounds {
                let matched = reached[depth] == oracle[depth];
                all_match &= matched;
                println!(
                    "depth {depth}: reached {} heads, oracle {} — {}",
                    reached[depth].len(),
                    oracle[depth].len(),
                    if matched { "match" } else { "MISMATCH" }
                );
            }
            // Gap report against the designed rotation pair.
            let spec = RobotSpec::open_chain(vec![1.0]).unwrap();
            let alpha = std::f64::consts::TAU / n as f64;
            let report = lattice::verify_head_coverage(&spec, &[0.0], alpha, rounds, probe_radius)
                .map_err(|e| e.to_string())?;
            println!(
                "coverage: n={} alpha={:.5} rounds={} explored={} max_gap={:.5}",
                report.n, report.alpha, report.rounds, report.explored_vertices, report.max_gap
            );
            if let Some(op) = &out {
                let text = format!(
                    "n,alpha,rounds,explored,max_gap\n{},{},{},{},{}\n",
                    report.n, report.alpha, report.rounds, report.explored_vertices, report.max_gap
                );
                std::fs::write(op, text).map_err(|e| e.to_string())?;
            }
            Ok(if all_match {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        LatticeMode::Bounds {
            links,
            trials,
            seed,
            out,
        } => {
            let spec =
                RobotSpec::open_chain(parse_links(&links)?).map_err(|e| e.to_string())?;
            let report = lattice::verify_bounds_suite(&spec, trials, seed);
            if report.all_hold() {
                println!("all bounds hold ({} trials)", report.trials);
            } else {
                println!(
                    "violations: rotation={} perturbation={} translation={} metric={}",
                    report.rotation_bound_violations,
                    report.perturbation_bound_violations,
                    report.translation_identity_violations,
                    report.metric_axiom_violations
                );
                for c in &report.counterexamples {
                    println!("  {c}");
                }
            }
            if let Some(op) = &out {
                std::fs::write(op, serde_json::to_string_pretty(&report).unwrap())
                    .map_err(|e| e.to_string())?;
            }
            Ok(if report.all_hold() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
