//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers.
//!
//! Heavyweight fixtures (roadmap bundles) are built once and shared;
//! all runs are seeded, so the suite is reproducible end to end.

use std::sync::LazyLock;

use tileplan::geometry2d::{Aabb, Point2, Polygon};
use tileplan::lattice::{self, toy};
use tileplan::planners::{
    self, drrt_plan, rrt_plan, validate::validate_path, PlanParams, PlanStatus, Query,
};
use tileplan::roadmap::{self, build_bundle, RoadmapBundle};
use tileplan::robot::{self, Configuration, RobotSpec, Scene};
use tileplan::scenario::{generate_scenario, ScenarioFile, ScenarioKind};
use tileplan::tiling::{CfgId, TileVertex, TilingGraph};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const PREP_SEED: u64 = 1;

struct Fixtures {
    tight: ScenarioFile,
    coiled: ScenarioFile,
    bricks: ScenarioFile,
    gripper: ScenarioFile,
    tight_bundle: RoadmapBundle,
    coiled_bundle: RoadmapBundle,
    bricks_bundle: RoadmapBundle,
    gripper_bundle: RoadmapBundle,
}

static FIXTURES: LazyLock<Fixtures> = LazyLock::new(|| {
    let tight = generate_scenario(ScenarioKind::Tight, 1.0, 0);
    let coiled = generate_scenario(ScenarioKind::Coiled, 1.0, 0);
    let bricks = generate_scenario(ScenarioKind::BricksOpen, 1.0, 0);
    let gripper = generate_scenario(ScenarioKind::Gripper, 1.0, 0);
    let step = roadmap::DEFAULT_STEP;
    let tight_bundle = build_bundle(&tight.robot, 500, None, step, PREP_SEED).unwrap();
    let coiled_bundle = build_bundle(&coiled.robot, 500, None, step, PREP_SEED).unwrap();
    let bricks_bundle = build_bundle(&bricks.robot, 500, None, step, PREP_SEED).unwrap();
    let gripper_bundle = build_bundle(&gripper.robot, 2000, None, step, PREP_SEED).unwrap();
    Fixtures {
        tight,
        coiled,
        bricks,
        gripper,
        tight_bundle,
        coiled_bundle,
        bricks_bundle,
        gripper_bundle,
    }
});

fn query_of(sc: &ScenarioFile) -> Query {
    Query {
        start: sc.start_configuration().unwrap(),
        target: sc.target.clone(),
        scene: sc.scene.clone(),
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Criterion 1: on every tiling-roadmap run the search performs zero
/// self-collision checks, while the RRT baseline on the same
/// (scenario, seed) pairs always performs some.
#[test]
fn criterion_01_self_collision_elimination() {
    let f = &*FIXTURES;
    let cases: [(&str, &ScenarioFile, &RoadmapBundle); 4] = [
        ("tight", &f.tight, &f.tight_bundle),
        ("coiled", &f.coiled, &f.coiled_bundle),
        ("bricks_open", &f.bricks, &f.bricks_bundle),
        ("gripper", &f.gripper, &f.gripper_bundle),
    ];
    let mut drrt_solved = 0usize;
    let mut total = 0usize;
    for (name, sc, bundle) in cases {
        let query = query_of(sc);
        for seed in 0..10u64 {
            total += 1;
            let params = PlanParams {
                seed,
                time_budget_ms: 60_000,
                ..Default::default()
            };
            let res = drrt_plan(bundle, &query, &params).unwrap();
            assert_eq!(
                res.stats.self_collision_checks, 0,
                "{name} seed {seed}: search performed self-collision checks"
            );
            if res.status == PlanStatus::Solved {
                drrt_solved += 1;
            }
            let rrt_params = PlanParams {
                seed,
                time_budget_ms: 10_000,
                ..Default::default()
            };
            let rrt = rrt_plan(&bundle.spec, &query, &rrt_params).unwrap();
            assert!(
                rrt.stats.self_collision_checks > 0,
                "{name} seed {seed}: baseline reported no self checks"
            );
        }
    }
    assert!(
        drrt_solved >= total * 9 / 10,
        "tiling planner solved only {drrt_solved}/{total}"
    );
    println!(
        "ACCEPTANCE 01 self-collision elimination: PASS \
         ({drrt_solved}/{total} solved, search self-checks all zero, baseline always > 0)"
    );
}

/// Criterion 2: re-anchoring any roadmap vertex at any other anchor
/// lands exactly on a stored vertex (within 1e-12).
#[test]
fn criterion_02_cross_anchoring_audit() {
    let mut worst = 0.0f64;
    for (links, n) in [(2usize, 50usize), (4, 200)] {
        let spec = RobotSpec::open_chain(vec![1.0; links]).unwrap();
        let bundle = build_bundle(&spec, n, None, roadmap::DEFAULT_STEP, PREP_SEED).unwrap();
        let anchors = spec.pivot_anchors();
        for &j in &anchors {
            for i in 0..bundle.n() {
                let v = bundle.anchored_vertex(j, i);
                for &j2 in &anchors {
                    if j2 == j {
                        continue;
                    }
                    let re = roadmap::anchor_config(&v, j2).unwrap();
                    let stored = bundle.anchored_vertex(j2, i);
                    let d = robot::anchor_sum_distance(&re, &stored).unwrap();
                    worst = worst.max(d);
                    assert!(
                        d <= 1e-12,
                        "m={} n={n} cfg {i}: j={j} -> j'={j2} off by {d}",
                        links + 1
                    );
                }
            }
        }
        // The full audit also revalidates plans and sweeps.
        roadmap::audit_bundle(&bundle, 3, 7).unwrap();
    }
    println!(
        "ACCEPTANCE 02 cross-anchoring audit: PASS (worst deviation {worst:.2e} <= 1e-12)"
    );
}

/// Criterion 3: the single-link toy reproduces the independent
/// pivot-walk enumeration exactly at depths 1..3, with 12 reached
/// head positions at depth 1.
#[test]
fn criterion_03_single_link_toy_reproduction() {
    let bundle = toy::toy_bundle(12).unwrap();
    let reached = toy::tiling_heads(&bundle, 3);
    let oracle = toy::enumerate_heads_exact12(3);
    assert_eq!(reached[1].len(), 12, "depth-1 cardinality");
    for depth in 1..=3 {
        assert_eq!(
            reached[depth], oracle[depth],
            "reached-head set mismatch at depth {depth}"
        );
    }
    println!(
        "ACCEPTANCE 03 single-link toy: PASS (depth 1..3 head sets match exact enumeration: {}, {}, {} positions)",
        reached[1].len(),
        reached[2].len(),
        reached[3].len()
    );
}

/// Criterion 4: line-walk closed forms, evaluated against independent
/// arithmetic and against a walk on the real tiling graph.
#[test]
fn criterion_04_coverage_formulas() {
    let l = 1.0;
    for n in [6usize, 12, 24, 100] {
        let alpha = std::f64::consts::PI / n as f64;
        let expected_spacing = 2.0 * l * (alpha / 2.0).sin();
        assert!((lattice::spacing(n, l) - expected_spacing).abs() <= 1e-9);
        for i in 0..=50 {
            let q = lattice::line_point(i, n, l);
            let expect = Point2::new(
                i as f64 * l * (alpha.cos() - 1.0),
                i as f64 * l * alpha.sin(),
            );
            assert!(q.dist(expect) <= 1e-9, "q_{i} off for n={n}");
            if i > 0 {
                let prev = lattice::line_point(i - 1, n, l);
                assert!((q.dist(prev) - expected_spacing).abs() <= 1e-9);
            }
        }
    }
    // The same walk executed on the real tiling graph.
    let spec = RobotSpec::open_chain(vec![1.0]).unwrap();
    for n in [6usize, 12] {
        let heads = lattice::s1_walk(&spec, &[0.0], n, 50).unwrap();
        for (i, h) in heads.iter().enumerate() {
            assert!(
                h.dist(lattice::line_point(i, n, l)) <= 1e-9,
                "graph walk off line at i={i}, n={n}"
            );
        }
    }
    println!(
        "ACCEPTANCE 04 coverage formulas: PASS (spacing n in {{6,12,24,100}}, q_i for i<=50, graph walk within 1e-9)"
    );
}

/// Criterion 5: distance-inequality suite at 10^4 trials plus the
/// lattice path-length bound on 100 random vertex pairs.
#[test]
fn criterion_05_inequality_suite() {
    let spec = RobotSpec::open_chain(vec![1.0; 3]).unwrap();
    let report = lattice::verify_bounds_suite(&spec, 10_000, 2024);
    assert!(report.all_hold(), "violations: {:?}", report.counterexamples);

    let mut rng = ChaCha12Rng::seed_from_u64(5);
    for _ in 0..100 {
        let alpha = rng.random_range(0.15..=std::f64::consts::FRAC_PI_2);
        let lat = lattice::Lattice::new(alpha, 1.0).unwrap();
        let (a, b) = (rng.random_range(-12i64..=12), rng.random_range(-12i64..=12));
        let (c, d) = (rng.random_range(-12i64..=12), rng.random_range(-12i64..=12));
        let p = Point2::new((a + b) as f64 * lat.dx(), (a - b) as f64 * lat.dy());
        let q = Point2::new((c + d) as f64 * lat.dx(), (c - d) as f64 * lat.dy());
        let path = lattice::zigzag_path(&lat, p, q).unwrap();
        let m = 4usize;
        let dist = m as f64 * p.dist(q);
        let bound = lattice::kappa_bound(&lat, dist, m).unwrap();
        assert!(
            (path.len() - 1) as f64 <= bound + 1e-9,
            "path length {} exceeds bound {bound}",
            path.len() - 1
        );
    }
    println!(
        "ACCEPTANCE 05 inequality suite: PASS (10000 trials x 4 bounds, 100 lattice paths within kappa)"
    );
}

/// Criterion 6: 20/20 solved on the tight and coiled scenes at n=500
/// within 60 s each, with every path revalidated independently.
#[test]
fn criterion_06_solve_rate_with_validation() {
    let f = &*FIXTURES;
    for (name, sc, bundle) in [
        ("tight", &f.tight, &f.tight_bundle),
        ("coiled", &f.coiled, &f.coiled_bundle),
    ] {
        let query = query_of(sc);
        let mut worst_ms = 0.0f64;
        for seed in 0..20u64 {
            let params = PlanParams {
                seed,
                time_budget_ms: 60_000,
                ..Default::default()
            };
            let res = drrt_plan(bundle, &query, &params).unwrap();
            assert_eq!(res.status, PlanStatus::Solved, "{name} seed {seed} unsolved");
            worst_ms = worst_ms.max(res.stats.wall_time_ms);
            let path = res.path.unwrap();
            validate_path(&sc.robot, &sc.scene, &sc.target, &query.start, &path.waypoints)
                .unwrap_or_else(|e| panic!("{name} seed {seed}: invalid path: {e}"));
        }
        println!(
            "ACCEPTANCE 06 solve rate [{name}]: PASS (20/20 solved, worst {worst_ms:.0} ms, all paths validated)"
        );
    }
}

/// Criterion 7: growing the base set trades preprocessing time for
/// query time on the coiled scene. Unsolved queries are charged the
/// full time budget.
#[test]
fn criterion_07_preprocessing_query_tradeoff() {
    let f = &*FIXTURES;
    let sc = &f.coiled;
    let query = query_of(sc);
    let budget_ms = 3_000u64;
    let ns = [50usize, 100, 200, 400, 800];
    let mut prep_times = Vec::new();
    let mut medians = Vec::new();
    for &n in &ns {
        let t0 = std::time::Instant::now();
        let bundle =
            build_bundle(&sc.robot, n, None, roadmap::DEFAULT_STEP, PREP_SEED).unwrap();
        prep_times.push(t0.elapsed().as_secs_f64());
        let mut times = Vec::new();
        for seed in 0..20u64 {
            let params = PlanParams {
                seed,
                time_budget_ms: budget_ms,
                max_iters: usize::MAX / 2,
                ..Default::default()
            };
            let res = drrt_plan(&bundle, &query, &params).unwrap();
            times.push(if res.status == PlanStatus::Solved {
                res.stats.wall_time_ms
            } else {
                budget_ms as f64
            });
        }
        medians.push(median(&mut times));
    }
    for w in prep_times.windows(2) {
        assert!(w[1] > w[0], "preprocessing time not increasing: {prep_times:?}");
    }
    let rho = spearman(&ns.map(|n| n as f64), &medians);
    assert!(
        rho <= 0.0,
        "median query time not non-increasing: medians {medians:?}, rho {rho}"
    );
    println!(
        "ACCEPTANCE 07 preprocessing/query tradeoff: PASS (prep {:?} s, query medians {:?} ms, spearman {rho:.2})",
        prep_times.iter().map(|t| (t * 10.0).round() / 10.0).collect::<Vec<_>>(),
        medians.iter().map(|t| (t * 10.0).round() / 10.0).collect::<Vec<_>>()
    );
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut out = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let rank = (i + j) as f64 / 2.0 + 1.0;
            for &t in &idx[i..=j] {
                out[t] = rank;
            }
            i = j + 1;
        }
        out
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..rx.len() {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx).powi(2);
        vy += (ry[i] - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Criterion 8: on the self-collision-dominated coiled scene the
/// tiling planner's median wall time does not exceed the baseline's.
#[test]
fn criterion_08_speedup_direction() {
    let f = &*FIXTURES;
    let query = query_of(&f.coiled);
    let mut tr = Vec::new();
    let mut rr = Vec::new();
    for seed in 0..10u64 {
        let params = PlanParams {
            seed,
            time_budget_ms: 60_000,
            ..Default::default()
        };
        let a = drrt_plan(&f.coiled_bundle, &query, &params).unwrap();
        assert_eq!(a.status, PlanStatus::Solved);
        tr.push(a.stats.wall_time_ms);
        let b = rrt_plan(&f.coiled.robot, &query, &params).unwrap();
        rr.push(if b.status == PlanStatus::Solved {
            b.stats.wall_time_ms
        } else {
            60_000.0
        });
    }
    let tr_med = median(&mut tr);
    let rr_med = median(&mut rr);
    assert!(
        tr_med <= rr_med,
        "tiling median {tr_med:.1} ms > baseline median {rr_med:.1} ms"
    );
    println!(
        "ACCEPTANCE 08 speedup direction: PASS (tiling median {tr_med:.1} ms <= baseline median {rr_med:.1} ms)"
    );
}

/// Criterion 9: the swept-polygon screen is one-sided conservative:
/// whenever the dense per-sample check finds an obstacle collision,
/// the screen must reject the edge.
#[test]
fn criterion_09_sweep_conservativeness() {
    let spec = RobotSpec::open_chain(vec![1.0; 3]).unwrap();
    let bundle = build_bundle(&spec, 60, Some(10), roadmap::DEFAULT_STEP, 11).unwrap();
    let graph = TilingGraph::new(&bundle, None);
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let ws = Aabb::new(Point2::new(-30.0, -30.0), Point2::new(30.0, 30.0));
    let mut colliding_pairs = 0;
    let mut checked = 0;
    while checked < 100 {
        // Random tiling edge: random vertex, random translation,
        // random neighbor.
        let i = rng.random_range(0..bundle.n() as u32);
        let t = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let v = TileVertex {
            id: CfgId::Base(i),
            translation: t,
        };
        let nbrs = graph.neighbors(&v);
        if nbrs.is_empty() {
            continue;
        }
        let (_, edge) = nbrs[rng.random_range(0..nbrs.len())];
        // Random small scene near the sweep.
        let cx = rng.random_range(-2.0..2.0) + t.x;
        let cy = rng.random_range(-2.0..2.0) + t.y;
        let w = rng.random_range(0.2..1.5);
        let h = rng.random_range(0.2..1.5);
        let scene = Scene {
            obstacles: vec![
                Polygon::rect(Point2::new(cx, cy), Point2::new(cx + w, cy + h)).unwrap(),
            ],
            workspace: ws,
        };
        let boxes = scene.obstacle_aabbs();
        checked += 1;

        // Dense oracle: every stored sample of the motion, translated.
        let samples = graph.edge_samples(&edge);
        let dense_collides = samples
            .iter()
            .any(|c| robot::obstacle_collides(&spec, c, &scene));
        let screen_free = graph.edge_obstacle_free(&edge, &scene, &boxes);
        if dense_collides {
            colliding_pairs += 1;
            assert!(
                !screen_free,
                "sweep screen accepted an edge the dense check rejects"
            );
        }
    }
    assert!(
        colliding_pairs >= 10,
        "test scenes too easy: only {colliding_pairs} colliding pairs"
    );
    println!(
        "ACCEPTANCE 09 sweep conservativeness: PASS (100 edge/scene pairs, {colliding_pairs} collisions, no false acceptance)"
    );
}

/// Criterion 10 (library half): identical inputs reproduce identical
/// plans and stats; the CLI-level byte-identity checks live in the
/// cli integration test.
#[test]
fn criterion_10_determinism() {
    let f = &*FIXTURES;
    let query = query_of(&f.coiled);
    let params = PlanParams {
        seed: 4,
        ..Default::default()
    };
    let a = drrt_plan(&f.coiled_bundle, &query, &params).unwrap();
    let b = drrt_plan(&f.coiled_bundle, &query, &params).unwrap();
    assert_eq!(a.path, b.path);
    let (mut sa, mut sb) = (a.stats.clone(), b.stats.clone());
    sa.wall_time_ms = 0.0;
    sb.wall_time_ms = 0.0;
    assert_eq!(sa, sb);

    // Bundle rebuilds are byte-identical.
    let b1 = build_bundle(&f.coiled.robot, 40, Some(8), roadmap::DEFAULT_STEP, 3).unwrap();
    let b2 = build_bundle(&f.coiled.robot, 40, Some(8), roadmap::DEFAULT_STEP, 3).unwrap();
    assert_eq!(roadmap::bundle_to_bytes(&b1), roadmap::bundle_to_bytes(&b2));
    println!("ACCEPTANCE 10 determinism (library): PASS (identical plans, identical bundle bytes)");
}
