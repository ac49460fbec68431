//! Query-stage planners: the tiling-roadmap discrete-RRT and a
//! classical RRT baseline, instrumented with the same counters so the
//! two are directly comparable.
//!
//! The discrete planner never calls the self-collision predicate from
//! its search loop; the only self-collision work a query pays for is
//! validating the start and attaching it to the base roadmaps, and
//! that work is accounted separately in
//! [`PlanStats::attachment_self_checks`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry2d::{Aabb, Point2};
use crate::roadmap::{self, connect_start, reconstruct_about_anchor, RoadmapBundle};
use crate::robot::{
    self, angle_delta, counters, obstacle_collides, self_collides, Configuration, RobotSpec,
    RobotVariant, Scene,
};
use crate::tiling::{canonical_key, KeyMap, TileVertex, TilingGraph, VertexKey};

pub mod validate;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("start configuration is invalid: {0}")]
    InvalidStart(String),
    #[error("bundle robot does not match query robot")]
    RobotMismatch,
    #[error(transparent)]
    Robot(#[from] robot::RobotError),
    #[error(transparent)]
    Roadmap(#[from] roadmap::RoadmapError),
}

/// Where the robot must end up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetRegion {
    /// The head must reach the disc.
    HeadDisc { center: Point2, radius: f64 },
    /// Head and tail must both reach the disc (gripper tasks).
    BothEndpointsDisc { center: Point2, radius: f64 },
}

impl TargetRegion {
    pub fn center(&self) -> Point2 {
        match *self {
            TargetRegion::HeadDisc { center, .. } => center,
            TargetRegion::BothEndpointsDisc { center, .. } => center,
        }
    }
}

/// Boundary-inclusive target test.
pub fn goal_test(c: &Configuration, t: &TargetRegion) -> bool {
    match *t {
        TargetRegion::HeadDisc { center, radius } => c.head().dist(center) <= radius,
        TargetRegion::BothEndpointsDisc { center, radius } => {
            let m = c.anchor_count();
            c.head().dist(center) <= radius
                && c.anchor(m).unwrap().dist(center) <= radius
        }
    }
}

/// A motion-planning query.
#[derive(Debug, Clone)]
pub struct Query {
    pub start: Configuration,
    pub target: TargetRegion,
    pub scene: Scene,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanParams {
    pub max_iters: usize,
    pub time_budget_ms: u64,
    pub goal_bias: f64,
    /// Per-joint cap on one RRT extension, radians.
    pub step_rad: f64,
    /// Neighbors tried per roadmap when attaching the start (0 means
    /// the bundle's k).
    pub k_start: usize,
    pub seed: u64,
}

impl Default for PlanParams {
    fn default() -> Self {
        PlanParams {
            max_iters: 200_000,
            time_budget_ms: 60_000,
            goal_bias: 0.05,
            step_rad: 0.5,
            k_start: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Solved,
    Timeout,
    StartIsolated,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub iterations: u64,
    pub tree_size: u64,
    /// Self-collision predicate calls made by the search itself.
    pub self_collision_checks: u64,
    /// Obstacle work: configuration-vs-scene checks plus swept-polygon
    /// edge screenings.
    pub obstacle_checks: u64,
    /// Self-collision predicate calls spent validating the start and
    /// attaching it to the base roadmaps, before the search begins.
    pub attachment_self_checks: u64,
    pub wall_time_ms: f64,
}

/// A solved path: the vertex chain plus the dense interpolation of
/// every traversed edge (edge_samples[i] runs from waypoints[i] to
/// waypoints[i+1], endpoints included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub waypoints: Vec<Configuration>,
    pub edge_samples: Vec<Vec<Configuration>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub path: Option<PlannedPath>,
    pub stats: PlanStats,
}

/// Uniform steering sample: head uniform in the workspace box, joint
/// angles i.i.d. in [0, 2pi). Never collision-checked. An anchored
/// robot has no free head, so only its angles are drawn.
pub fn random_sample(spec: &RobotSpec, workspace: &Aabb, rng: &mut impl Rng) -> Configuration {
    let angles: Vec<f64> = (0..spec.link_count())
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    match spec.variant {
        RobotVariant::OpenChain => {
            let head = Point2::new(
                rng.random_range(workspace.min.x..=workspace.max.x),
                rng.random_range(workspace.min.y..=workspace.max.y),
            );
            reconstruct_from_head(spec, head, &angles)
        }
        RobotVariant::Anchored {
            joint_index,
            anchor_position,
        } => reconstruct_about_anchor(&spec.link_lengths, joint_index + 1, anchor_position, &angles),
    }
}

fn reconstruct_from_head(spec: &RobotSpec, head: Point2, angles: &[f64]) -> Configuration {
    reconstruct_about_anchor(&spec.link_lengths, 1, head, angles)
}

/// Goal-biased variant: the head is pinned to the target center. For
/// anchored robots this degenerates to a plain uniform draw.
fn goal_biased_sample(
    spec: &RobotSpec,
    target: &TargetRegion,
    workspace: &Aabb,
    rng: &mut impl Rng,
) -> Configuration {
    let angles: Vec<f64> = (0..spec.link_count())
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    match spec.variant {
        RobotVariant::OpenChain => reconstruct_from_head(spec, target.center(), &angles),
        RobotVariant::Anchored {
            joint_index,
            anchor_position,
        } => {
            let _ = workspace;
            reconstruct_about_anchor(&spec.link_lengths, joint_index + 1, anchor_position, &angles)
        }
    }
}

/// Picks the neighbor whose outgoing direction in R^{2m} is closest
/// (max cosine) to the direction toward the random sample. Ties break
/// toward the lowest canonical key. Neighbor embeddings are produced
/// on demand by `embed_into`, so the brute-force scan allocates
/// nothing per candidate.
pub fn direction_oracle<'n>(
    q_near_embed: &[f64],
    q_rnd_embed: &[f64],
    nbrs: &'n [(TileVertex, crate::tiling::TileEdge)],
    mut embed_into: impl FnMut(&TileVertex, &mut [f64]),
) -> Option<&'n (TileVertex, crate::tiling::TileEdge)> {
    let dim = q_near_embed.len();
    let mut target = vec![0.0; dim];
    let mut tnorm2 = 0.0;
    for k in 0..dim {
        let t = q_rnd_embed[k] - q_near_embed[k];
        target[k] = t;
        tnorm2 += t * t;
    }
    if tnorm2 == 0.0 || nbrs.is_empty() {
        return None;
    }
    let tnorm = tnorm2.sqrt();
    let mut scratch = vec![0.0; dim];
    let mut best: Option<(f64, VertexKey, &(TileVertex, crate::tiling::TileEdge))> = None;
    for entry in nbrs {
        let (v, _) = entry;
        embed_into(v, &mut scratch);
        let mut dot = 0.0;
        let mut norm2 = 0.0;
        for k in 0..dim {
            let d = scratch[k] - q_near_embed[k];
            dot += d * target[k];
            norm2 += d * d;
        }
        if norm2 == 0.0 {
            continue;
        }
        let cos = dot / (norm2.sqrt() * tnorm);
        let key = canonical_key(v);
        let better = match &best {
            None => true,
            Some((bc, bk, _)) => cos > *bc || (cos == *bc && key < *bk),
        };
        if better {
            best = Some((cos, key, entry));
        }
    }
    best.map(|(_, _, e)| e)
}

struct Tree {
    vertices: Vec<TileVertex>,
    parents: Vec<usize>,
    edges: Vec<Option<crate::tiling::TileEdge>>,
    embeds: Vec<f64>,
    dim: usize,
    keys: KeyMap<usize>,
    /// Tiling neighbors of each node, filled lazily the first time the
    /// node is expanded (the list is deterministic, so caching cannot
    /// change the search).
    neighbor_cache: Vec<Option<Vec<(TileVertex, crate::tiling::TileEdge)>>>,
}

impl Tree {
    fn new(dim: usize) -> Tree {
        Tree {
            vertices: Vec::new(),
            parents: Vec::new(),
            edges: Vec::new(),
            embeds: Vec::new(),
            dim,
            keys: KeyMap::default(),
            neighbor_cache: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.vertices.len()
    }

    fn contains(&self, key: &VertexKey) -> bool {
        self.keys.contains_key(key)
    }

    fn push(
        &mut self,
        v: TileVertex,
        parent: usize,
        edge: Option<crate::tiling::TileEdge>,
        embed: &[f64],
    ) -> usize {
        let idx = self.vertices.len();
        self.keys.insert(canonical_key(&v), idx);
        self.vertices.push(v);
        self.parents.push(parent);
        self.edges.push(edge);
        self.embeds.extend_from_slice(embed);
        self.neighbor_cache.push(None);
        idx
    }

    /// Index of the nearest node; ties go to the lowest index.
    fn nearest(&self, q: &[f64]) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for i in 0..self.len() {
            let row = &self.embeds[i * self.dim..(i + 1) * self.dim];
            let mut d = 0.0;
            for (a, b) in row.iter().zip(q) {
                let x = a - b;
                d += x * x;
            }
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

fn validate_start(
    spec: &RobotSpec,
    start: &Configuration,
    scene: &Scene,
) -> Result<(), PlanError> {
    start
        .validate(spec)
        .map_err(|e| PlanError::InvalidStart(e.to_string()))?;
    if let Some(j) = spec.anchored_anchor() {
        let RobotVariant::Anchored { anchor_position, .. } = spec.variant else {
            unreachable!()
        };
        if start.anchor(j)?.dist(anchor_position) > 1e-9 {
            return Err(PlanError::InvalidStart(
                "start does not respect the pinned anchor".into(),
            ));
        }
    }
    if self_collides(spec, start) {
        return Err(PlanError::InvalidStart("start is in self-collision".into()));
    }
    if obstacle_collides(spec, start, scene) {
        return Err(PlanError::InvalidStart(
            "start collides with an obstacle or leaves the workspace".into(),
        ));
    }
    Ok(())
}

/// Tiling-roadmap discrete-RRT query.
///
/// At every iteration the tree is grown along one tiling-roadmap edge
/// chosen by the direction oracle; the edge is screened against the
/// obstacles via its precomputed swept polygons and the endpoint
/// configuration is checked against the scene, and that is the entire
/// collision bill — `stats.self_collision_checks` is zero on return.
pub fn drrt_plan(
    bundle: &RoadmapBundle,
    query: &Query,
    params: &PlanParams,
) -> Result<PlanResult, PlanError> {
    let t0 = std::time::Instant::now();
    let spec = &bundle.spec;
    if query.start.anchor_count() != spec.anchor_count() {
        return Err(PlanError::RobotMismatch);
    }
    let entry_self0 = counters::self_checks();
    let entry_obs0 = counters::obstacle_checks();
    validate_start(spec, &query.start, &query.scene)?;

    let mut stats = PlanStats::default();

    // A start already inside the target needs no roadmap at all.
    if goal_test(&query.start, &query.target) {
        stats.attachment_self_checks = counters::self_checks() - entry_self0;
        stats.obstacle_checks = counters::obstacle_checks() - entry_obs0;
        stats.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
        return Ok(PlanResult {
            status: PlanStatus::Solved,
            path: Some(PlannedPath {
                waypoints: vec![query.start.clone()],
                edge_samples: vec![],
            }),
            stats,
        });
    }

    let k_start = if params.k_start == 0 {
        bundle.k
    } else {
        params.k_start
    };
    let attachment = match connect_start(bundle, &query.start, k_start, bundle.step) {
        Ok(att) => att,
        Err(roadmap::RoadmapError::StartIsolated) => {
            stats.attachment_self_checks = counters::self_checks() - entry_self0;
            stats.obstacle_checks = counters::obstacle_checks() - entry_obs0;
            stats.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
            return Ok(PlanResult {
                status: PlanStatus::StartIsolated,
                path: None,
                stats,
            });
        }
        Err(e) => return Err(e.into()),
    };
    stats.attachment_self_checks = counters::self_checks() - entry_self0;

    let graph = TilingGraph::new(bundle, Some(&attachment));
    let obstacle_aabbs = query.scene.obstacle_aabbs();
    let dim = spec.anchor_count() * 2;
    let mut tree = Tree::new(dim);
    let root = graph.start_vertex().unwrap();
    tree.push(root, 0, None, &query.start.embed());

    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let budget = std::time::Duration::from_millis(params.time_budget_ms);

    // Everything from here on is the search proper: these counters
    // must not move for self-collision.
    let search_self0 = counters::self_checks();
    let search_obs0 = counters::obstacle_checks();
    let search_sweep0 = counters::sweep_checks();
    let mut solved_at: Option<usize> = None;

    let mut seen_scratch = KeyMap::default();
    let mut rnd_embed = vec![0.0; dim];
    let mut new_embed = vec![0.0; dim];

    while stats.iterations < params.max_iters as u64 && t0.elapsed() < budget {
        stats.iterations += 1;
        let q_rnd = if rng.random_range(0.0..1.0) < params.goal_bias {
            goal_biased_sample(spec, &query.target, &query.scene.workspace, &mut rng)
        } else {
            random_sample(spec, &query.scene.workspace, &mut rng)
        };
        for (k, p) in q_rnd.anchors().iter().enumerate() {
            rnd_embed[2 * k] = p.x;
            rnd_embed[2 * k + 1] = p.y;
        }
        let near_idx = tree.nearest(&rnd_embed);
        let near_vertex = tree.vertices[near_idx];
        let near_embed = tree.embeds[near_idx * dim..(near_idx + 1) * dim].to_vec();

        if tree.neighbor_cache[near_idx].is_none() {
            let mut nbrs = Vec::new();
            graph.neighbors_into(&near_vertex, &mut nbrs, &mut seen_scratch);
            tree.neighbor_cache[near_idx] = Some(nbrs);
        }
        let nbrs = tree.neighbor_cache[near_idx].as_ref().unwrap();
        let Some((q_new, edge)) =
            direction_oracle(&near_embed, &rnd_embed, nbrs, |v, out| graph.embed_into(v, out))
        else {
            continue;
        };
        if tree.contains(&canonical_key(q_new)) {
            continue;
        }
        if !graph.edge_obstacle_free(edge, &query.scene, &obstacle_aabbs) {
            continue;
        }
        let new_cfg = graph.realize(q_new);
        if obstacle_collides(spec, &new_cfg, &query.scene) {
            continue;
        }
        graph.embed_into(q_new, &mut new_embed);
        let idx = tree.push(*q_new, near_idx, Some(*edge), &new_embed);
        if goal_test(&new_cfg, &query.target) {
            solved_at = Some(idx);
            break;
        }
    }

    stats.self_collision_checks = counters::self_checks() - search_self0;
    stats.obstacle_checks = (counters::obstacle_checks() - search_obs0)
        + (counters::sweep_checks() - search_sweep0);
    stats.tree_size = tree.len() as u64;

    let (status, path) = match solved_at {
        Some(goal_idx) => {
            let mut chain = Vec::new();
            let mut at = goal_idx;
            loop {
                chain.push(at);
                if at == 0 {
                    break;
                }
                at = tree.parents[at];
            }
            chain.reverse();
            let waypoints: Vec<Configuration> = chain
                .iter()
                .map(|&i| graph.realize(&tree.vertices[i]))
                .collect();
            let edge_samples: Vec<Vec<Configuration>> = chain[1..]
                .iter()
                .map(|&i| graph.edge_samples(&tree.edges[i].unwrap()))
                .collect();
            (
                PlanStatus::Solved,
                Some(PlannedPath {
                    waypoints,
                    edge_samples,
                }),
            )
        }
        None => (PlanStatus::Timeout, None),
    };
    stats.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(PlanResult {
        status,
        path,
        stats,
    })
}

/// Classical RRT baseline: anchored joint-angle steering with dense
/// self- and obstacle-collision validation of every extension.
pub fn rrt_plan(
    spec: &RobotSpec,
    query: &Query,
    params: &PlanParams,
) -> Result<PlanResult, PlanError> {
    let t0 = std::time::Instant::now();
    if query.start.anchor_count() != spec.anchor_count() {
        return Err(PlanError::RobotMismatch);
    }
    let self0 = counters::self_checks();
    let obs0 = counters::obstacle_checks();
    validate_start(spec, &query.start, &query.scene)?;

    let mut stats = PlanStats::default();
    if goal_test(&query.start, &query.target) {
        stats.self_collision_checks = counters::self_checks() - self0;
        stats.obstacle_checks = counters::obstacle_checks() - obs0;
        stats.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
        return Ok(PlanResult {
            status: PlanStatus::Solved,
            path: Some(PlannedPath {
                waypoints: vec![query.start.clone()],
                edge_samples: vec![],
            }),
            stats,
        });
    }

    let dim = spec.anchor_count() * 2;
    let mut nodes: Vec<Configuration> = vec![query.start.clone()];
    let mut parents: Vec<usize> = vec![0];
    let mut samples_per_edge: Vec<Vec<Configuration>> = vec![Vec::new()];
    let mut embeds: Vec<f64> = query.start.embed();

    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let budget = std::time::Duration::from_millis(params.time_budget_ms);
    let validation_step = roadmap::DEFAULT_STEP;
    let mut solved_at = None;

    while stats.iterations < params.max_iters as u64 && t0.elapsed() < budget {
        stats.iterations += 1;
        let q_rnd = if rng.random_range(0.0..1.0) < params.goal_bias {
            goal_biased_sample(spec, &query.target, &query.scene.workspace, &mut rng)
        } else {
            random_sample(spec, &query.scene.workspace, &mut rng)
        };
        let rnd_embed = q_rnd.embed();
        // Nearest tree node, lowest index on ties.
        let mut near = 0usize;
        let mut best = f64::INFINITY;
        for i in 0..nodes.len() {
            let row = &embeds[i * dim..(i + 1) * dim];
            let d: f64 = row
                .iter()
                .zip(&rnd_embed)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best {
                best = d;
                near = i;
            }
        }
        let q_near = &nodes[near];

        // Steering pivot: the anchor of q_near closest to the
        // corresponding anchor of the sample (the pinned anchor for
        // anchored robots).
        let pivot = match spec.anchored_anchor() {
            Some(j) => j,
            None => {
                let mut bj = 1;
                let mut bd = f64::INFINITY;
                for j in 1..=spec.anchor_count() {
                    let d = q_near.anchor(j).unwrap().dist(q_rnd.anchor(j).unwrap());
                    if d < bd {
                        bd = d;
                        bj = j;
                    }
                }
                bj
            }
        };
        let near_angles = q_near.link_angles();
        let rnd_angles = q_rnd.link_angles();
        let new_angles: Vec<f64> = near_angles
            .iter()
            .zip(&rnd_angles)
            .map(|(&a, &b)| {
                let d = angle_delta(a, b);
                a + d.clamp(-params.step_rad, params.step_rad)
            })
            .collect();
        let pivot_pos = q_near.anchor(pivot).unwrap();
        let q_new = reconstruct_about_anchor(&spec.link_lengths, pivot, pivot_pos, &new_angles);

        // Dense validation of the extension, counted.
        let Some(motion) = validate_anchored_motion(
            spec,
            q_near,
            &q_new,
            pivot,
            pivot_pos,
            validation_step,
            &query.scene,
        ) else {
            continue;
        };
        nodes.push(q_new.clone());
        parents.push(near);
        samples_per_edge.push(motion);
        embeds.extend_from_slice(&q_new.embed());
        if goal_test(&q_new, &query.target) {
            solved_at = Some(nodes.len() - 1);
            break;
        }
    }

    stats.self_collision_checks = counters::self_checks() - self0;
    stats.obstacle_checks = counters::obstacle_checks() - obs0;
    stats.tree_size = nodes.len() as u64;

    let (status, path) = match solved_at {
        Some(goal_idx) => {
            let mut chain = Vec::new();
            let mut at = goal_idx;
            loop {
                chain.push(at);
                if at == 0 {
                    break;
                }
                at = parents[at];
            }
            chain.reverse();
            let waypoints: Vec<Configuration> =
                chain.iter().map(|&i| nodes[i].clone()).collect();
            let edge_samples: Vec<Vec<Configuration>> = chain[1..]
                .iter()
                .map(|&i| samples_per_edge[i].clone())
                .collect();
            (
                PlanStatus::Solved,
                Some(PlannedPath {
                    waypoints,
                    edge_samples,
                }),
            )
        }
        None => (PlanStatus::Timeout, None),
    };
    stats.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok(PlanResult {
        status,
        path,
        stats,
    })
}

/// Shorter-arc interpolation about a fixed pivot from `a` to `b`,
/// validated sample by sample for self-collision and obstacles, plus
/// the continuous fold-crossing test. Returns the dense samples.
fn validate_anchored_motion(
    spec: &RobotSpec,
    a: &Configuration,
    b: &Configuration,
    pivot: usize,
    pivot_pos: Point2,
    step: f64,
    scene: &Scene,
) -> Option<Vec<Configuration>> {
    let a_angles = a.link_angles();
    let b_angles = b.link_angles();
    let deltas: Vec<f64> = a_angles
        .iter()
        .zip(&b_angles)
        .map(|(&x, &y)| angle_delta(x, y))
        .collect();
    // Continuous fold check on consecutive link pairs.
    let pi = std::f64::consts::PI;
    for i in 0..deltas.len().saturating_sub(1) {
        let rel0 = a_angles[i + 1] - a_angles[i];
        let drel = deltas[i + 1] - deltas[i];
        for w in -2i32..=2 {
            let target = pi + std::f64::consts::TAU * w as f64;
            if drel.abs() < 1e-15 {
                if (rel0 - target).abs() <= robot::EPS_FOLD {
                    return None;
                }
            } else {
                let t = (target - rel0) / drel;
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    return None;
                }
            }
        }
    }
    let max_delta = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let substeps = if max_delta == 0.0 {
        0
    } else {
        (max_delta / step).ceil() as usize
    };
    let mut out = Vec::with_capacity(substeps + 1);
    for k in 0..=substeps {
        let t = if substeps == 0 {
            0.0
        } else {
            k as f64 / substeps as f64
        };
        let angles: Vec<f64> = a_angles
            .iter()
            .zip(&deltas)
            .map(|(&s, &d)| s + d * t)
            .collect();
        let c = reconstruct_about_anchor(&spec.link_lengths, pivot, pivot_pos, &angles);
        if self_collides(spec, &c) || obstacle_collides(spec, &c, scene) {
            return None;
        }
        out.push(c);
    }
    // Same continuous-time crossing screen the roadmap plans get.
    let interp = roadmap::AnchoredInterp::new(spec, a, b, pivot, step);
    if roadmap::motion_crosses_self(spec, &interp) {
        return None;
    }
    Some(out)
}
