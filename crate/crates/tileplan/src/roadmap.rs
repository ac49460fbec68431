//! Preprocessing: base configuration sampling, anchored base roadmaps
//! with validated local plans and precomputed swept polygons, start
//! attachment, and bundle persistence.
//!
//! All roadmap vertices are derived from one shared set of base
//! configurations by a single exact vector subtraction per anchor, so
//! a configuration that is a vertex of one roadmap re-anchors onto a
//! vertex of every other roadmap with no accumulated arithmetic.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry2d::{inflate, GeometryError, Point2, Polygon, EPS_GEO};
use crate::robot::{
    self, anchor_sum_distance, angle_delta, self_collides, translate, Configuration, RobotSpec,
    RobotVariant,
};

/// On-disk format revision for the binary bundle container.
pub const FORMAT_VERSION: u32 = 1;
/// Leading bytes of a bundle file.
pub const MAGIC: [u8; 4] = *b"TILE";
/// Attempts per base configuration before sampling gives up.
pub const REJECTION_BUDGET: usize = 10_000;
/// Default per-joint interpolation resolution in radians.
pub const DEFAULT_STEP: f64 = 0.05;
/// Swept-hull pieces regroup once the largest per-joint rotation in
/// the piece exceeds this, keeping hulls reasonably tight.
const SWEEP_GROUP_SPAN: f64 = std::f64::consts::FRAC_PI_3;

#[derive(Debug, Error)]
pub enum RoadmapError {
    #[error("sampling failed: {0} rejections without a self-collision-free configuration")]
    SamplingFailure(usize),
    #[error("start configuration could not be attached to any base roadmap")]
    StartIsolated,
    #[error("n must be at least 2 for neighbor selection, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Robot(#[from] robot::RobotError),
    #[error("configuration {0} in the base set is in self-collision")]
    BaseConfigInCollision(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a bundle file (bad magic)")]
    BadMagic,
    #[error("unsupported bundle format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("bundle checksum mismatch (file corrupted)")]
    ChecksumMismatch,
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("malformed bundle json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The shared pool of self-collision-free base configurations, all
/// stored with the head at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseConfigSet {
    configs: Vec<Configuration>,
    pub seed: u64,
}

impl BaseConfigSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn config(&self, i: usize) -> &Configuration {
        &self.configs[i]
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    /// Builds a set from explicitly chosen configurations (the lattice
    /// lab uses hand-designed ones). Every configuration must be
    /// self-collision-free.
    pub fn from_configs(
        spec: &RobotSpec,
        configs: Vec<Configuration>,
        seed: u64,
    ) -> Result<BaseConfigSet, RoadmapError> {
        for (i, c) in configs.iter().enumerate() {
            c.validate(spec)?;
            if self_collides(spec, c) {
                return Err(RoadmapError::BaseConfigInCollision(i));
            }
        }
        Ok(BaseConfigSet { configs, seed })
    }
}

/// Uniform rejection sampling of n self-collision-free configurations,
/// head at the origin, angles i.i.d. in [0, 2pi). Deterministic for a
/// given seed.
pub fn sample_base_configs(
    spec: &RobotSpec,
    n: usize,
    seed: u64,
) -> Result<BaseConfigSet, RoadmapError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut configs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut accepted = None;
        for _ in 0..REJECTION_BUDGET {
            let angles: Vec<f64> = (0..spec.link_count())
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            let c = robot::from_angles(
                spec,
                &robot::AngleForm {
                    head: Point2::ORIGIN,
                    angles,
                },
            )?;
            if !self_collides(spec, &c) {
                accepted = Some(c);
                break;
            }
        }
        configs.push(accepted.ok_or(RoadmapError::SamplingFailure(REJECTION_BUDGET))?);
    }
    Ok(BaseConfigSet { configs, seed })
}

/// Translate c so its j'th anchor (1-based) lands exactly on the
/// origin.
pub fn anchor_config(c: &Configuration, j: usize) -> Result<Configuration, robot::RobotError> {
    let p = c.anchor(j)?;
    Ok(translate(c, Point2::new(-p.x, -p.y)))
}

/// Neighbor count k = ceil(2e ln n), clamped to n-1.
pub fn default_k(n: usize) -> Result<usize, RoadmapError> {
    if n < 2 {
        return Err(RoadmapError::TooFewSamples(n));
    }
    let k = (2.0 * std::f64::consts::E * (n as f64).ln()).ceil() as usize;
    Ok(k.min(n - 1))
}

/// A fully validated anchored motion: dense samples with anchor j
/// fixed at the origin, plus per-link conservative swept polygons.
#[derive(Debug, Clone)]
pub struct LocalPath {
    pub anchor: usize,
    pub samples: Vec<Configuration>,
    /// One list of convex pieces per link.
    pub swept: Vec<Vec<Polygon>>,
}

/// Anchored shorter-arc joint interpolation between two configurations
/// that share anchor j at the origin.
#[derive(Debug, Clone)]
pub struct AnchoredInterp {
    pub anchor: usize,
    start_angles: Vec<f64>,
    deltas: Vec<f64>,
    pub substeps: usize,
    lengths: Vec<f64>,
}

impl AnchoredInterp {
    pub fn new(
        spec: &RobotSpec,
        a: &Configuration,
        b: &Configuration,
        j: usize,
        step: f64,
    ) -> Self {
        debug_assert!(step > 0.0);
        let start_angles = a.link_angles();
        let end_angles = b.link_angles();
        let deltas: Vec<f64> = start_angles
            .iter()
            .zip(&end_angles)
            .map(|(&s, &e)| angle_delta(s, e))
            .collect();
        let max_delta = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let substeps = if max_delta == 0.0 {
            0
        } else {
            (max_delta / step).ceil() as usize
        };
        AnchoredInterp {
            anchor: j,
            start_angles,
            deltas,
            substeps,
            lengths: spec.link_lengths.clone(),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.substeps + 1
    }

    /// Signed per-joint angle change over the whole interpolation.
    pub fn total_deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// The k'th sample (0-based), anchored at the origin.
    pub fn sample(&self, k: usize) -> Configuration {
        let t = if self.substeps == 0 {
            0.0
        } else {
            k as f64 / self.substeps as f64
        };
        self.at(t)
    }

    /// Interpolation at an arbitrary parameter in [0, 1].
    pub fn at(&self, t: f64) -> Configuration {
        let angles: Vec<f64> = self
            .start_angles
            .iter()
            .zip(&self.deltas)
            .map(|(&s, &d)| s + d * t)
            .collect();
        reconstruct_about_anchor(&self.lengths, self.anchor, Point2::ORIGIN, &angles)
    }

    pub fn samples(&self) -> Vec<Configuration> {
        (0..self.sample_count()).map(|k| self.sample(k)).collect()
    }
}

/// Forward kinematics outward from a pinned anchor (1-based index).
pub fn reconstruct_about_anchor(
    lengths: &[f64],
    anchor: usize,
    position: Point2,
    angles: &[f64],
) -> Configuration {
    debug_assert_eq!(lengths.len(), angles.len());
    let m = lengths.len() + 1;
    let jz = anchor - 1;
    let mut anchors = vec![Point2::ORIGIN; m];
    anchors[jz] = position;
    for i in jz..lengths.len() {
        let (s, c) = angles[i].sin_cos();
        anchors[i + 1] = Point2::new(anchors[i].x + lengths[i] * c, anchors[i].y + lengths[i] * s);
    }
    for i in (0..jz).rev() {
        let (s, c) = angles[i].sin_cos();
        anchors[i] = Point2::new(
            anchors[i + 1].x - lengths[i] * c,
            anchors[i + 1].y - lengths[i] * s,
        );
    }
    Configuration::from_anchors(anchors)
}

/// Does any consecutive link pair pass through an exact fold-back
/// somewhere along the interpolation? The relative angle between
/// links i and i+1 is linear in t, so crossings of pi (mod 2pi) land
/// between samples and would be invisible to the sampled check.
pub fn crosses_fold(interp: &AnchoredInterp) -> bool {
    let pi = std::f64::consts::PI;
    let tau = std::f64::consts::TAU;
    for i in 0..interp.start_angles.len().saturating_sub(1) {
        let rel0 = interp.start_angles[i + 1] - interp.start_angles[i];
        let drel = interp.deltas[i + 1] - interp.deltas[i];
        // Solve rel0 + drel * t = pi + 2 pi w for t in [0, 1].
        for w in -2i32..=2 {
            let target = pi + tau * w as f64;
            if drel.abs() < 1e-15 {
                if (rel0 - target).abs() <= crate::robot::EPS_FOLD {
                    return true;
                }
            } else {
                let t = (target - rel0) / drel;
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    return true;
                }
            }
        }
    }
    false
}

/// Continuous-time screen for crossings of non-adjacent links during
/// an anchored interpolation.
///
/// Within a parameter window the relative motion of link b in link a's
/// frame is driven only by the joints between them, so its points move
/// at most sum |delta_i| * lever_i. A pair whose separation at the
/// window start exceeds that bound cannot touch inside the window;
/// otherwise the window is bisected (checking the midpoint sample
/// directly) until either safety is proven or the bound collapses,
/// at which point the motion is conservatively rejected.
pub fn motion_crosses_self(spec: &RobotSpec, interp: &AnchoredInterp) -> bool {
    let n = spec.link_count();
    if n < 3 {
        return false; // no non-adjacent pairs; folds handled elsewhere
    }
    let deltas = interp.total_deltas();
    // Displacement bound of link b in link a's frame over the whole
    // interpolation: in that frame the chain between them is a sum of
    // terms L_t u(theta_t - theta_a), each rotating at |delta_t -
    // delta_a|. Scaled by the window span when recursing.
    let pair_bound = |a: usize, b: usize| -> f64 {
        let mut acc = 0.0;
        for t in (a + 1)..=b {
            acc += spec.link_lengths[t] * (deltas[t] - deltas[a]).abs();
        }
        acc
    };

    let substeps = interp.substeps.max(1);
    let mut cfg_lo = interp.at(0.0);
    for k in 0..substeps {
        let t_lo = k as f64 / substeps as f64;
        let t_hi = (k + 1) as f64 / substeps as f64;
        let cfg_hi = interp.at(t_hi);
        for a in 0..n {
            for b in (a + 2)..n {
                if !pair_window_safe(
                    interp, &cfg_lo, a, b, t_lo, t_hi, pair_bound(a, b), 28,
                ) {
                    return true;
                }
            }
        }
        cfg_lo = cfg_hi;
    }
    false
}

fn pair_window_safe(
    interp: &AnchoredInterp,
    cfg_lo: &Configuration,
    a: usize,
    b: usize,
    t_lo: f64,
    t_hi: f64,
    full_bound: f64,
    depth: u32,
) -> bool {
    let bound = full_bound * (t_hi - t_lo);
    let sa = cfg_lo.link(a);
    let sb = cfg_lo.link(b);
    // Cheap separation lower bound from the boxes first.
    let (ba, bb) = (sa.aabb(), sb.aabb());
    let gap_x = (bb.min.x - ba.max.x).max(ba.min.x - bb.max.x);
    let gap_y = (bb.min.y - ba.max.y).max(ba.min.y - bb.max.y);
    if gap_x.max(gap_y) > bound {
        return true;
    }
    let d = crate::geometry2d::seg_seg_distance(&sa, &sb);
    if d > bound {
        return true;
    }
    if depth == 0 || d <= 0.0 {
        return false;
    }
    let t_mid = 0.5 * (t_lo + t_hi);
    let cfg_mid = interp.at(t_mid);
    let dm = crate::geometry2d::seg_seg_distance(&cfg_mid.link(a), &cfg_mid.link(b));
    if dm <= 0.0 {
        return false;
    }
    pair_window_safe(interp, cfg_lo, a, b, t_lo, t_mid, full_bound, depth - 1)
        && pair_window_safe(interp, &cfg_mid, a, b, t_mid, t_hi, full_bound, depth - 1)
}

/// Anchored local planner. Interpolates each joint along the shorter
/// arc with at most `step` radians of per-joint change per substep and
/// validates every sample for self-collision; consecutive-link
/// fold-backs and non-adjacent link crossings are additionally
/// screened in continuous time, so an accepted plan is collision-free
/// along the whole motion, not only at the samples. Rejection is a
/// normal outcome, reported as None.
pub fn local_plan_anchored(
    spec: &RobotSpec,
    a: &Configuration,
    b: &Configuration,
    j: usize,
    step: f64,
) -> Option<LocalPath> {
    let interp = AnchoredInterp::new(spec, a, b, j, step);
    if crosses_fold(&interp) {
        return None;
    }
    let mut samples = Vec::with_capacity(interp.sample_count());
    for k in 0..interp.sample_count() {
        let c = interp.sample(k);
        if self_collides(spec, &c) {
            return None;
        }
        samples.push(c);
    }
    if motion_crosses_self(spec, &interp) {
        return None;
    }
    let swept = sweep_all_links(spec, &samples, j);
    Some(LocalPath {
        anchor: j,
        samples,
        swept,
    })
}

/// Links on the chain between the pivot anchor and the far endpoint of
/// `link` — the lever arm that scales the chord-deviation bound.
fn chain_links(anchor: usize, link: usize) -> std::ops::RangeInclusive<usize> {
    let jz = anchor - 1;
    if link >= jz {
        jz..=link
    } else {
        link..=jz - 1
    }
}

/// Conservative polygonal cover of the area swept by one link along
/// the sampled motion.
///
/// Consecutive samples are joined by chords that always lie inside the
/// convex hull of the sample endpoints; the true circular-arc motion
/// deviates from those chords by at most the sagitta bound
/// sum(L_i * dtheta_i^2 / 8) over the links between the pivot and the
/// moving endpoint, so inflating each hull by that margin makes the
/// union contain the exact swept region.
pub fn sweep_polygon(
    spec: &RobotSpec,
    samples: &[Configuration],
    link: usize,
    anchor: usize,
) -> Vec<Polygon> {
    // Per-substep joint deltas, recovered from the samples themselves.
    let sample_angles: Vec<Vec<f64>> = samples.iter().map(|c| c.link_angles()).collect();
    let substep_deltas: Vec<Vec<f64>> = sample_angles
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(&a, &b)| angle_delta(a, b))
                .collect()
        })
        .collect();
    sweep_polygon_with_deltas(spec, samples, &substep_deltas, link, anchor)
}

/// All-links sweep with the per-substep deltas computed once.
fn sweep_all_links(
    spec: &RobotSpec,
    samples: &[Configuration],
    anchor: usize,
) -> Vec<Vec<Polygon>> {
    let sample_angles: Vec<Vec<f64>> = samples.iter().map(|c| c.link_angles()).collect();
    let substep_deltas: Vec<Vec<f64>> = sample_angles
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(&a, &b)| angle_delta(a, b))
                .collect()
        })
        .collect();
    (0..spec.link_count())
        .map(|link| sweep_polygon_with_deltas(spec, samples, &substep_deltas, link, anchor))
        .collect()
}

fn sweep_polygon_with_deltas(
    spec: &RobotSpec,
    samples: &[Configuration],
    substep_deltas: &[Vec<f64>],
    link: usize,
    anchor: usize,
) -> Vec<Polygon> {
    assert!(!samples.is_empty());
    if samples.len() == 1 {
        let seg = samples[0].link(link);
        return vec![sliver(seg.a, seg.b, EPS_GEO)];
    }
    let chain = chain_links(anchor, link);
    let mut pieces = Vec::new();
    let mut group_start = 0usize;
    while group_start + 1 < samples.len() {
        // Grow the group until the accumulated worst-joint rotation
        // exceeds the span limit.
        let mut group_end = group_start + 1;
        let mut span = substep_deltas[group_start]
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()));
        while group_end + 1 < samples.len() {
            let step_max = substep_deltas[group_end]
                .iter()
                .fold(0.0f64, |m, d| m.max(d.abs()));
            if span + step_max > SWEEP_GROUP_SPAN {
                break;
            }
            span += step_max;
            group_end += 1;
        }

        let mut pts = Vec::with_capacity(2 * (group_end - group_start + 1));
        let mut margin = 0.0f64;
        for k in group_start..=group_end {
            let seg = samples[k].link(link);
            pts.push(seg.a);
            pts.push(seg.b);
            if k < group_end {
                let dev: f64 = chain
                    .clone()
                    .map(|i| spec.link_lengths[i] * substep_deltas[k][i].powi(2) / 8.0)
                    .sum();
                margin = margin.max(dev);
            }
        }
        // Absolute slack absorbs rounding in the sample positions; the
        // sagitta bound itself has almost none at the chord midpoints.
        pieces.push(inflated_hull(&pts, margin + EPS_GEO));
        group_start = group_end;
    }
    pieces
}

/// Hull of a point cloud inflated by `margin`; degenerates to a thin
/// sliver when the points are collinear.
fn inflated_hull(pts: &[Point2], margin: f64) -> Polygon {
    let hull = match crate::geometry2d::convex_hull_exact(pts) {
        Ok(h) => h,
        Err(_) => {
            // Collinear cloud: span the two extreme points.
            let (mut a, mut b) = (pts[0], pts[0]);
            let mut best = -1.0;
            for &p in pts {
                for &q in pts {
                    let d = p.dist(q);
                    if d > best {
                        best = d;
                        a = p;
                        b = q;
                    }
                }
            }
            sliver(a, b, EPS_GEO)
        }
    };
    if margin > 0.0 {
        inflate(&hull, margin).expect("hull is convex")
    } else {
        hull
    }
}

/// Quad of half-width `w` around segment ab (a degenerate sweep piece
/// for a stationary link).
fn sliver(a: Point2, b: Point2, w: f64) -> Polygon {
    let d = b.sub(a);
    let len = d.norm();
    let n = if len > 0.0 {
        Point2::new(-d.y / len, d.x / len)
    } else {
        Point2::new(0.0, 1.0)
    };
    let n = n.scale(w);
    Polygon::from_ccw_unchecked(vec![a.sub(n), b.sub(n), b.add(n), a.add(n)])
}

/// Persisted local plan: interpolation parameters plus the precomputed
/// swept polygons. Samples are rematerialized on demand from the
/// stored endpoint configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPlan {
    pub a: u32,
    pub b: u32,
    pub substeps: u32,
    pub swept: Vec<Vec<Polygon>>,
}

/// Roadmap over the base configurations anchored at one anchor point.
/// Vertex i is base config i translated so `anchor` sits at the
/// origin; vertices are derived, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseRoadmap {
    pub anchor: usize,
    pub edges: Vec<LocalPlan>,
    /// Per-vertex sorted list of (neighbor id, edge index).
    pub adjacency: Vec<Vec<(u32, u32)>>,
}

impl BaseRoadmap {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }
}

/// The per-robot precomputed artifact: the shared base set plus one
/// anchored roadmap per pivot anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadmapBundle {
    pub spec: RobotSpec,
    pub base: BaseConfigSet,
    pub k: usize,
    pub step: f64,
    pub roadmaps: Vec<BaseRoadmap>,
    pub format_version: u32,
}

impl RoadmapBundle {
    pub fn n(&self) -> usize {
        self.base.len()
    }

    /// Vertex i of the roadmap anchored at j: one exact vector
    /// subtraction from the stored base configuration.
    pub fn anchored_vertex(&self, j: usize, i: usize) -> Configuration {
        anchor_config(self.base.config(i), j).expect("anchor index validated at build time")
    }

    pub fn roadmap_for_anchor(&self, j: usize) -> Option<&BaseRoadmap> {
        self.roadmaps.iter().find(|r| r.anchor == j)
    }

    /// Rebuild the dense interpolation of a stored edge.
    pub fn materialize(&self, roadmap: &BaseRoadmap, plan: &LocalPlan) -> AnchoredInterp {
        let a = self.anchored_vertex(roadmap.anchor, plan.a as usize);
        let b = self.anchored_vertex(roadmap.anchor, plan.b as usize);
        let interp = AnchoredInterp::new(&self.spec, &a, &b, roadmap.anchor, self.step);
        debug_assert_eq!(interp.substeps as u32, plan.substeps);
        interp
    }
}

/// Distance-ordered k nearest neighbors of every anchored vertex,
/// brute force, ties broken by id.
fn knn_lists(embeds: &[Vec<f64>], k: usize) -> Vec<Vec<u32>> {
    let n = embeds.len();
    (0..n)
        .map(|i| {
            let mut d: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist: f64 = embeds[i]
                        .iter()
                        .zip(&embeds[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (dist, j as u32)
                })
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d.truncate(k);
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Builds the roadmap anchored at j over the given base set. Every
/// vertex attempts anchored local plans to its k nearest neighbors;
/// accepted plans become undirected edges, with vertex degrees capped
/// at k so the tiling graph keeps a bounded branching factor.
pub fn build_base_roadmap(
    spec: &RobotSpec,
    set: &BaseConfigSet,
    j: usize,
    k: usize,
    step: f64,
) -> BaseRoadmap {
    let n = set.len();
    let anchored: Vec<Configuration> = (0..n)
        .map(|i| anchor_config(set.config(i), j).expect("valid anchor"))
        .collect();
    let embeds: Vec<Vec<f64>> = anchored.iter().map(|c| c.embed()).collect();
    let knn = knn_lists(&embeds, k);

    // Union of directed kNN requests, planned once per unordered pair.
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut seen = HashMap::new();
    for (i, nbrs) in knn.iter().enumerate() {
        for &nb in nbrs {
            let key = (u32::min(i as u32, nb), u32::max(i as u32, nb));
            if seen.insert(key, ()).is_none() {
                pairs.push(key);
            }
        }
    }
    pairs.sort_unstable();

    let planned: Vec<Option<LocalPath>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            local_plan_anchored(spec, &anchored[a as usize], &anchored[b as usize], j, step)
        })
        .collect();
    let accepted: HashMap<(u32, u32), LocalPath> = pairs
        .into_iter()
        .zip(planned)
        .filter_map(|(pair, plan)| plan.map(|p| (pair, p)))
        .collect();

    // Deterministic degree-capped edge admission: every vertex claims
    // its rank-r neighbor before anyone claims rank r+1.
    let mut edges: Vec<LocalPlan> = Vec::new();
    let mut adjacency: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    let mut added: HashMap<(u32, u32), ()> = HashMap::new();
    for r in 0..k {
        for i in 0..n {
            let Some(&nb) = knn[i].get(r) else { continue };
            let key = (u32::min(i as u32, nb), u32::max(i as u32, nb));
            if added.contains_key(&key) {
                continue;
            }
            if adjacency[i].len() >= k || adjacency[nb as usize].len() >= k {
                continue;
            }
            let Some(path) = accepted.get(&key) else { continue };
            let edge_idx = edges.len() as u32;
            edges.push(LocalPlan {
                a: key.0,
                b: key.1,
                substeps: (path.samples.len() - 1) as u32,
                swept: path.swept.clone(),
            });
            adjacency[key.0 as usize].push((key.1, edge_idx));
            adjacency[key.1 as usize].push((key.0, edge_idx));
            added.insert(key, ());
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    BaseRoadmap {
        anchor: j,
        edges,
        adjacency,
    }
}

/// Samples one shared base set and builds every anchored roadmap from
/// it. Free-flying chains get one roadmap per anchor; an anchored
/// robot only ever pivots at its pinned joint, so it gets exactly one.
pub fn build_bundle(
    spec: &RobotSpec,
    n: usize,
    k: Option<usize>,
    step: f64,
    seed: u64,
) -> Result<RoadmapBundle, RoadmapError> {
    spec.validate()?;
    let k = match k {
        Some(k) => k,
        None => default_k(n)?,
    };
    let base = sample_base_configs(spec, n, seed)?;
    build_bundle_from_set(spec, base, k, step)
}

pub fn build_bundle_from_set(
    spec: &RobotSpec,
    base: BaseConfigSet,
    k: usize,
    step: f64,
) -> Result<RoadmapBundle, RoadmapError> {
    let anchors = spec.pivot_anchors();
    let roadmaps: Vec<BaseRoadmap> = anchors
        .par_iter()
        .map(|&j| build_base_roadmap(spec, &base, j, k, step))
        .collect();
    Ok(RoadmapBundle {
        spec: spec.clone(),
        base,
        k,
        step,
        roadmaps,
        format_version: FORMAT_VERSION,
    })
}

/// A start configuration attached to the base roadmaps by validated
/// anchored local plans. Query-scoped; never persisted into a bundle.
#[derive(Debug, Clone)]
pub struct StartAttachment {
    pub start: Configuration,
    pub edges: Vec<AttachEdge>,
}

#[derive(Debug, Clone)]
pub struct AttachEdge {
    pub anchor: usize,
    pub target: u32,
    pub path: LocalPath,
}

/// Connects the start to up to k nearest vertices of each base
/// roadmap. Fails only when every single attempt is rejected.
pub fn connect_start(
    bundle: &RoadmapBundle,
    s: &Configuration,
    k: usize,
    step: f64,
) -> Result<StartAttachment, RoadmapError> {
    s.validate(&bundle.spec)?;
    let m = bundle.spec.anchor_count();
    let mut edges = Vec::new();
    for roadmap in &bundle.roadmaps {
        let j = roadmap.anchor;
        let s_j = anchor_config(s, j)?;
        let s_anchors = s_j.anchors();
        // Squared distance to each anchored vertex, computed from the
        // stored base configs without materializing the copies.
        let mut by_dist: Vec<(f64, u32)> = (0..bundle.n())
            .map(|i| {
                let base = bundle.base.config(i).anchors();
                let off = base[j - 1];
                let mut d = 0.0;
                for t in 0..m {
                    let dx = (base[t].x - off.x) - s_anchors[t].x;
                    let dy = (base[t].y - off.y) - s_anchors[t].y;
                    d += dx * dx + dy * dy;
                }
                (d, i as u32)
            })
            .collect();
        by_dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, i) in by_dist.iter().take(k) {
            let target = bundle.anchored_vertex(j, i as usize);
            if let Some(path) = local_plan_anchored(&bundle.spec, &s_j, &target, j, step) {
                edges.push(AttachEdge {
                    anchor: j,
                    target: i,
                    path,
                });
            }
        }
    }
    if edges.is_empty() {
        return Err(RoadmapError::StartIsolated);
    }
    Ok(StartAttachment {
        start: s.clone(),
        edges,
    })
}

// ---------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RoadmapError> {
        if self.pos + n > self.buf.len() {
            return Err(RoadmapError::Malformed("unexpected end of file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, RoadmapError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, RoadmapError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, RoadmapError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, RoadmapError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn point(&mut self) -> Result<Point2, RoadmapError> {
        Ok(Point2::new(self.f64()?, self.f64()?))
    }
}

fn put_point(out: &mut Vec<u8>, p: Point2) {
    out.extend_from_slice(&p.x.to_le_bytes());
    out.extend_from_slice(&p.y.to_le_bytes());
}

/// Bundle serialized to its binary container, checksum included.
pub fn bundle_to_bytes(bundle: &RoadmapBundle) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let m = bundle.spec.anchor_count() as u32;
    out.extend_from_slice(&m.to_le_bytes());
    out.extend_from_slice(&(bundle.n() as u32).to_le_bytes());
    out.extend_from_slice(&(bundle.k as u32).to_le_bytes());
    out.extend_from_slice(&bundle.base.seed.to_le_bytes());
    out.extend_from_slice(&bundle.step.to_le_bytes());
    match bundle.spec.variant {
        RobotVariant::OpenChain => out.push(0),
        RobotVariant::Anchored {
            joint_index,
            anchor_position,
        } => {
            out.push(1);
            out.extend_from_slice(&(joint_index as u32).to_le_bytes());
            put_point(&mut out, anchor_position);
        }
    }
    for &l in &bundle.spec.link_lengths {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for c in bundle.base.configs() {
        for &a in c.anchors() {
            put_point(&mut out, a);
        }
    }
    out.extend_from_slice(&(bundle.roadmaps.len() as u32).to_le_bytes());
    for rm in &bundle.roadmaps {
        out.extend_from_slice(&(rm.anchor as u32).to_le_bytes());
        out.extend_from_slice(&(rm.edges.len() as u32).to_le_bytes());
        for e in &rm.edges {
            out.extend_from_slice(&e.a.to_le_bytes());
            out.extend_from_slice(&e.b.to_le_bytes());
            out.extend_from_slice(&e.substeps.to_le_bytes());
            for link_pieces in &e.swept {
                out.extend_from_slice(&(link_pieces.len() as u32).to_le_bytes());
                for piece in link_pieces {
                    out.extend_from_slice(&(piece.vertices().len() as u32).to_le_bytes());
                    for &v in piece.vertices() {
                        put_point(&mut out, v);
                    }
                }
            }
        }
        for adj in &rm.adjacency {
            out.extend_from_slice(&(adj.len() as u32).to_le_bytes());
            for &(nb, e) in adj {
                out.extend_from_slice(&nb.to_le_bytes());
                out.extend_from_slice(&e.to_le_bytes());
            }
        }
    }
    let checksum = fnv1a64(&out);
    out.extend_from_slice(&checksum.to_le_bytes());
    out
}

pub fn bundle_from_bytes(bytes: &[u8]) -> Result<RoadmapBundle, RoadmapError> {
    if bytes.len() < 16 {
        return Err(RoadmapError::Malformed("file too short".into()));
    }
    if bytes[0..4] != MAGIC {
        return Err(RoadmapError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(RoadmapError::UnsupportedVersion(version));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a64(payload) != stored {
        return Err(RoadmapError::ChecksumMismatch);
    }

    let mut cur = Cursor {
        buf: payload,
        pos: 8,
    };
    let m = cur.u32()? as usize;
    let n = cur.u32()? as usize;
    let k = cur.u32()? as usize;
    let seed = cur.u64()?;
    let step = cur.f64()?;
    let variant = match cur.u8()? {
        0 => RobotVariant::OpenChain,
        1 => {
            let joint_index = cur.u32()? as usize;
            let anchor_position = cur.point()?;
            RobotVariant::Anchored {
                joint_index,
                anchor_position,
            }
        }
        v => return Err(RoadmapError::Malformed(format!("unknown variant tag {v}"))),
    };
    if m < 2 {
        return Err(RoadmapError::Malformed(format!("bad anchor count {m}")));
    }
    let mut link_lengths = Vec::with_capacity(m - 1);
    for _ in 0..m - 1 {
        link_lengths.push(cur.f64()?);
    }
    let spec = RobotSpec {
        link_lengths,
        variant,
    };
    spec.validate()
        .map_err(|e| RoadmapError::Malformed(e.to_string()))?;

    let mut configs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut anchors = Vec::with_capacity(m);
        for _ in 0..m {
            anchors.push(cur.point()?);
        }
        configs.push(Configuration::from_anchors(anchors));
    }
    let roadmap_count = cur.u32()? as usize;
    let mut roadmaps = Vec::with_capacity(roadmap_count);
    for _ in 0..roadmap_count {
        let anchor = cur.u32()? as usize;
        if anchor < 1 || anchor > m {
            return Err(RoadmapError::Malformed(format!("bad anchor index {anchor}")));
        }
        let edge_count = cur.u32()? as usize;
        let mut edges = Vec::with_capacity(edge_count);
        for _ in 0..edge_count {
            let a = cur.u32()?;
            let b = cur.u32()?;
            if a as usize >= n || b as usize >= n {
                return Err(RoadmapError::Malformed("edge endpoint out of range".into()));
            }
            let substeps = cur.u32()?;
            let mut swept = Vec::with_capacity(m - 1);
            for _ in 0..m - 1 {
                let piece_count = cur.u32()? as usize;
                let mut pieces = Vec::with_capacity(piece_count);
                for _ in 0..piece_count {
                    let vcount = cur.u32()? as usize;
                    if vcount < 3 {
                        return Err(RoadmapError::Malformed("sweep piece underflow".into()));
                    }
                    let mut verts = Vec::with_capacity(vcount);
                    for _ in 0..vcount {
                        verts.push(cur.point()?);
                    }
                    pieces.push(Polygon::from_ccw_unchecked(verts));
                }
                swept.push(pieces);
            }
            edges.push(LocalPlan {
                a,
                b,
                substeps,
                swept,
            });
        }
        let mut adjacency = Vec::with_capacity(n);
        for _ in 0..n {
            let count = cur.u32()? as usize;
            let mut adj = Vec::with_capacity(count);
            for _ in 0..count {
                let nb = cur.u32()?;
                let e = cur.u32()?;
                if nb as usize >= n || e as usize >= edge_count {
                    return Err(RoadmapError::Malformed("adjacency out of range".into()));
                }
                adj.push((nb, e));
            }
            adjacency.push(adj);
        }
        roadmaps.push(BaseRoadmap {
            anchor,
            edges,
            adjacency,
        });
    }
    if cur.pos != payload.len() {
        return Err(RoadmapError::Malformed("trailing bytes".into()));
    }
    Ok(RoadmapBundle {
        spec,
        base: BaseConfigSet { configs, seed },
        k,
        step,
        roadmaps,
        format_version: version,
    })
}

pub fn save_bundle(bundle: &RoadmapBundle, path: &Path) -> Result<(), RoadmapError> {
    let bytes = bundle_to_bytes(bundle);
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<RoadmapBundle, RoadmapError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    bundle_from_bytes(&bytes)
}

/// Lossless textual export of the same content, for debugging.
pub fn save_bundle_json(bundle: &RoadmapBundle, path: &Path) -> Result<(), RoadmapError> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(f), bundle)?;
    Ok(())
}

pub fn load_bundle_json(path: &Path) -> Result<RoadmapBundle, RoadmapError> {
    let f = std::fs::File::open(path)?;
    let bundle: RoadmapBundle = serde_json::from_reader(std::io::BufReader::new(f))?;
    Ok(bundle)
}

// ---------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------

/// Slow full revalidation of a bundle: base set collision freedom, the
/// cross-anchoring structural identity, adjacency symmetry and degree
/// caps, sample validity of every stored plan, and spot-checked sweep
/// containment.
pub fn audit_bundle(
    bundle: &RoadmapBundle,
    interior_probes_per_edge: usize,
    seed: u64,
) -> Result<(), String> {
    let spec = &bundle.spec;
    for (i, c) in bundle.base.configs().iter().enumerate() {
        c.validate(spec)
            .map_err(|e| format!("base config {i}: {e}"))?;
        if self_collides(spec, c) {
            return Err(format!("base config {i} self-collides"));
        }
    }
    // Cross-anchoring: a vertex of one roadmap re-anchored at any
    // other pivot must coincide with the stored vertex there.
    let anchors = spec.pivot_anchors();
    for &j in &anchors {
        for i in 0..bundle.n() {
            let v = bundle.anchored_vertex(j, i);
            let vj = v.anchor(j).unwrap();
            if vj.x != 0.0 || vj.y != 0.0 {
                return Err(format!("vertex ({j},{i}) anchor not exactly at origin"));
            }
            for &j2 in &anchors {
                if j2 == j {
                    continue;
                }
                let re = anchor_config(&v, j2).unwrap();
                let stored = bundle.anchored_vertex(j2, i);
                let d = anchor_sum_distance(&re, &stored).unwrap();
                if d > 1e-12 {
                    return Err(format!(
                        "cross-anchor mismatch cfg {i}: j={j} -> j'={j2} differs by {d}"
                    ));
                }
            }
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for rm in &bundle.roadmaps {
        for (v, adj) in rm.adjacency.iter().enumerate() {
            if adj.len() > bundle.k {
                return Err(format!(
                    "vertex {v} of roadmap {} exceeds degree cap",
                    rm.anchor
                ));
            }
            for &(nb, e) in adj {
                let back = &rm.adjacency[nb as usize];
                if !back.contains(&(v as u32, e)) {
                    return Err(format!("asymmetric adjacency at ({v},{nb})"));
                }
            }
        }
        for (ei, plan) in rm.edges.iter().enumerate() {
            let interp = bundle.materialize(rm, plan);
            for (si, s) in interp.samples().iter().enumerate() {
                let aj = s.anchor(rm.anchor).unwrap();
                if aj.norm() > crate::robot::EPS_LEN {
                    return Err(format!("edge {ei} sample {si}: anchor drifted"));
                }
                if self_collides(spec, s) {
                    return Err(format!("edge {ei} sample {si} self-collides"));
                }
            }
            for _ in 0..interior_probes_per_edge {
                let t = rng.random_range(0.0..=1.0);
                let c = interp.at(t);
                for link in 0..spec.link_count() {
                    if !link_inside_pieces(&c, link, &plan.swept[link]) {
                        return Err(format!(
                            "edge {ei}: link {link} escapes its swept cover at t={t}"
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Endpoints and midpoint of the link inside the union of convex
/// pieces (probe used by the conservativeness checks).
pub fn link_inside_pieces(c: &Configuration, link: usize, pieces: &[Polygon]) -> bool {
    let seg = c.link(link);
    let mid = seg.a.add(seg.b).scale(0.5);
    [seg.a, mid, seg.b].iter().all(|&p| {
        pieces
            .iter()
            .any(|piece| crate::geometry2d::point_in_polygon(p, piece))
    })
}
