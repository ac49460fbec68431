//! Numerical lab for the head-coverage and reachability constructions
//! behind the tiling roadmap.
//!
//! The single-link pivot walk generates a two-generator lattice of
//! head positions; this module evaluates its closed forms (line
//! points, spacing, the path-length bound), walks the constructions on
//! the real tiling graph, and fuzzes the distance inequalities the
//! reachability analysis leans on. Everything here is executable
//! verification: each closed form is paired with an independent walk
//! or enumeration that must land on it.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry2d::Point2;
use crate::roadmap::{build_bundle_from_set, BaseConfigSet, RoadmapBundle, RoadmapError};
use crate::robot::{
    anchor_sum_distance, from_angles, rotate_about_anchor, to_angles, AngleForm, Configuration,
    RobotSpec,
};
use crate::tiling::{canonical_key, CfgId, TileVertex, TilingGraph, VertexKey};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("alpha {0} outside the valid domain {1}")]
    Domain(f64, &'static str),
    #[error("link length must be positive, got {0}")]
    BadLength(f64),
    #[error("({0}, {1}) is not a lattice point")]
    NotALatticePoint(f64, f64),
    #[error("lattice too dense to enumerate at this radius")]
    TooDense,
    #[error("designed configurations are not mutually connected in the first two roadmaps")]
    NotConnected,
    #[error(transparent)]
    Roadmap(#[from] RoadmapError),
}

/// The two-generator lattice of head positions reachable by rotating
/// the first link by +-alpha while alternating the pivot between the
/// first two anchors. Generators (dx, dy) and (dx, -dy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub alpha: f64,
    pub l: f64,
}

impl Lattice {
    pub fn new(alpha: f64, l: f64) -> Result<Lattice, LatticeError> {
        if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
            return Err(LatticeError::Domain(alpha, "(0, pi)"));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(LatticeError::BadLength(l));
        }
        Ok(Lattice { alpha, l })
    }

    pub fn dx(&self) -> f64 {
        self.l * (1.0 - self.alpha.cos())
    }

    pub fn dy(&self) -> f64 {
        self.l * self.alpha.sin()
    }

    /// Distance between neighboring lattice vertices: 2 L sin(a/2).
    pub fn neighbor_spacing(&self) -> f64 {
        2.0 * self.l * (self.alpha / 2.0).sin()
    }
}

/// i'th point of the head-coverage line walk with alpha = pi/n:
/// (i L (cos(pi/n) - 1), i L sin(pi/n)).
pub fn line_point(i: usize, n: usize, l: f64) -> Point2 {
    let alpha = std::f64::consts::PI / n as f64;
    Point2::new(
        i as f64 * l * (alpha.cos() - 1.0),
        i as f64 * l * alpha.sin(),
    )
}

/// Spacing of consecutive line points: 2 L sin(pi / 2n). Decreases
/// monotonically in n.
pub fn spacing(n: usize, l: f64) -> f64 {
    2.0 * l * (std::f64::consts::PI / (2.0 * n as f64)).sin()
}

/// All lattice points within `radius` of the origin. A point is
/// a (dx, dy) + b (dx, -dy) for integers a, b; equivalently
/// (s dx, t dy) with s + t even.
pub fn lattice_points(lat: &Lattice, radius: f64) -> Result<Vec<Point2>, LatticeError> {
    let dx = lat.dx();
    let dy = lat.dy();
    let smax = (radius / dx).floor();
    let tmax = (radius / dy).floor();
    if !(smax.is_finite() && tmax.is_finite()) || smax > 1e6 || tmax > 1e6 {
        return Err(LatticeError::TooDense);
    }
    let (smax, tmax) = (smax as i64, tmax as i64);
    let mut out = Vec::new();
    for s in -smax..=smax {
        for t in -tmax..=tmax {
            if (s + t) % 2 != 0 {
                continue;
            }
            let p = Point2::new(s as f64 * dx, t as f64 * dy);
            if p.norm() <= radius {
                out.push(p);
            }
        }
    }
    Ok(out)
}

fn snap_index(value: f64, unit: f64) -> Option<i64> {
    let s = value / unit;
    let r = s.round();
    if (s - r).abs() * unit > 1e-9 {
        return None;
    }
    Some(r as i64)
}

/// Lattice-edge path from p to q: horizontal progress first (zigzag
/// with the vertical component steered greedily toward the target,
/// positive y on ties), then pure vertical zigzag. Every consecutive
/// pair of output points is a lattice neighbor.
pub fn zigzag_path(lat: &Lattice, p: Point2, q: Point2) -> Result<Vec<Point2>, LatticeError> {
    let dx = lat.dx();
    let dy = lat.dy();
    let to_st = |pt: Point2| -> Result<(i64, i64), LatticeError> {
        let s = snap_index(pt.x, dx).ok_or(LatticeError::NotALatticePoint(pt.x, pt.y))?;
        let t = snap_index(pt.y, dy).ok_or(LatticeError::NotALatticePoint(pt.x, pt.y))?;
        if (s + t) % 2 != 0 {
            return Err(LatticeError::NotALatticePoint(pt.x, pt.y));
        }
        Ok((s, t))
    };
    let (mut s, mut t) = to_st(p)?;
    let (sq, tq) = to_st(q)?;
    let emit = |s: i64, t: i64| Point2::new(s as f64 * dx, t as f64 * dy);
    let mut out = vec![emit(s, t)];
    while s != sq {
        s += (sq - s).signum();
        t += match t.cmp(&tq) {
            std::cmp::Ordering::Less => 1,
            std::cmp::Ordering::Greater => -1,
            std::cmp::Ordering::Equal => 1,
        };
        out.push(emit(s, t));
    }
    let mut flip = 1i64;
    while t != tq {
        // Two vertical-phase steps cancel horizontally.
        s += flip;
        flip = -flip;
        t += (tq - t).signum();
        out.push(emit(s, t));
    }
    Ok(out)
}

/// Closed-form bound on the number of lattice steps needed to connect
/// two configurations at anchor-sum distance `dist` that differ by a
/// lattice translation:
/// (dist / (m L)) * (1 + sin a - cos a) / (sin a - sin a cos a).
pub fn kappa_bound(lat: &Lattice, dist: f64, m: usize) -> Result<f64, LatticeError> {
    if !(lat.alpha > 0.0 && lat.alpha <= std::f64::consts::FRAC_PI_2) {
        return Err(LatticeError::Domain(lat.alpha, "(0, pi/2]"));
    }
    let a = lat.alpha;
    let num = 1.0 + a.sin() - a.cos();
    let den = a.sin() - a.sin() * a.cos();
    Ok(dist / (m as f64 * lat.l) * (num / den))
}

// ---------------------------------------------------------------------
// Designed-configuration coverage on the real tiling graph
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n: usize,
    pub alpha: f64,
    pub rounds: usize,
    pub explored_vertices: usize,
    pub reached_heads: usize,
    /// Largest distance from any probe point to the nearest reached
    /// head position.
    pub max_gap: f64,
    pub probe_radius: f64,
}

fn snap_point(p: Point2) -> (i64, i64) {
    ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64)
}

/// Breadth-first expansion of a tiling graph, returning the visited
/// vertices per round (round 0 holds just the seed).
pub fn bfs_rounds(graph: &TilingGraph, seed: TileVertex, rounds: usize) -> Vec<Vec<TileVertex>> {
    let mut seen: HashMap<VertexKey, ()> = HashMap::new();
    seen.insert(canonical_key(&seed), ());
    let mut levels = vec![vec![seed]];
    for _ in 0..rounds {
        let mut next = Vec::new();
        for v in levels.last().unwrap() {
            for (nb, _) in graph.neighbors(v) {
                if seen.insert(canonical_key(&nb), ()).is_none() {
                    next.push(nb);
                }
            }
        }
        levels.push(next);
    }
    levels
}

/// Builds the designed bundle {C, C^alpha, C^-alpha} for the given
/// base angles (head at the origin) and verifies the mutual
/// connectivity the construction relies on.
pub fn designed_bundle(
    spec: &RobotSpec,
    base_angles: &[f64],
    alpha: f64,
) -> Result<RoadmapBundle, LatticeError> {
    let c = from_angles(
        spec,
        &AngleForm {
            head: Point2::ORIGIN,
            angles: base_angles.to_vec(),
        },
    )
    .map_err(RoadmapError::Robot)?;
    let c_plus = rotate_about_anchor(&c, 1, alpha).map_err(RoadmapError::Robot)?;
    let c_minus = rotate_about_anchor(&c, 1, -alpha).map_err(RoadmapError::Robot)?;
    let set = BaseConfigSet::from_configs(spec, vec![c, c_plus, c_minus], 0)?;
    let bundle = build_bundle_from_set(spec, set, 2, crate::roadmap::DEFAULT_STEP)?;
    for j in [1usize, 2] {
        let rm = bundle.roadmap_for_anchor(j).ok_or(LatticeError::NotConnected)?;
        for (a, b) in [(0usize, 1u32), (0, 2)] {
            if !rm.adjacency[a].iter().any(|&(nb, _)| nb == b) {
                return Err(LatticeError::NotConnected);
            }
        }
    }
    Ok(bundle)
}

/// Expands the designed tiling graph and measures how densely the
/// reached head positions cover a disc around the origin. The probe
/// grid resolution is a quarter of the lattice neighbor spacing.
pub fn verify_head_coverage(
    spec: &RobotSpec,
    base_angles: &[f64],
    alpha: f64,
    rounds: usize,
    probe_radius: f64,
) -> Result<CoverageReport, LatticeError> {
    let bundle = designed_bundle(spec, base_angles, alpha)?;
    let graph = TilingGraph::new(&bundle, None);
    let seed = TileVertex {
        id: CfgId::Base(0),
        translation: Point2::ORIGIN,
    };
    let levels = bfs_rounds(&graph, seed, rounds);
    let mut heads: Vec<Point2> = Vec::new();
    let mut seen = HashSet::new();
    for level in &levels {
        for v in level {
            let h = graph.realize(v).head();
            if seen.insert(snap_point(h)) {
                heads.push(h);
            }
        }
    }
    let lat = Lattice::new(alpha, spec.link_lengths[0])?;
    let resolution = lat.neighbor_spacing() / 4.0;
    let mut max_gap = 0.0f64;
    let cells = (probe_radius / resolution).ceil() as i64;
    for gx in -cells..=cells {
        for gy in -cells..=cells {
            let probe = Point2::new(gx as f64 * resolution, gy as f64 * resolution);
            if probe.norm() > probe_radius {
                continue;
            }
            let nearest = heads
                .iter()
                .map(|h| h.dist(probe))
                .fold(f64::INFINITY, f64::min);
            max_gap = max_gap.max(nearest);
        }
    }
    Ok(CoverageReport {
        n: bundle.n(),
        alpha,
        rounds,
        explored_vertices: levels.iter().map(Vec::len).sum(),
        reached_heads: heads.len(),
        max_gap,
        probe_radius,
    })
}

/// Executes the line-walk construction on the real tiling graph:
/// alternately move C -> C' pivoting at the head (first roadmap) and
/// C' -> C pivoting at the second anchor. Returns the head position
/// after every completed round; round i must land on
/// `line_point(i, n, l)`.
pub fn s1_walk(
    spec: &RobotSpec,
    base_angles: &[f64],
    n: usize,
    steps: usize,
) -> Result<Vec<Point2>, LatticeError> {
    let alpha = std::f64::consts::PI / n as f64;
    let bundle = designed_bundle(spec, base_angles, alpha)?;
    let graph = TilingGraph::new(&bundle, None);
    let mut v = TileVertex {
        id: CfgId::Base(0),
        translation: Point2::ORIGIN,
    };
    let mut heads = vec![graph.realize(&v).head()];
    for _ in 0..steps {
        // Pivot at the head onto the rotated copy.
        let (vp, _) = graph
            .neighbors(&v)
            .into_iter()
            .find(|(nb, e)| nb.id == CfgId::Base(1) && e.anchor == 1)
            .ok_or(LatticeError::NotConnected)?;
        // Pivot at the second anchor back onto the base copy.
        let (vn, _) = graph
            .neighbors(&vp)
            .into_iter()
            .find(|(nb, e)| nb.id == CfgId::Base(0) && e.anchor == 2)
            .ok_or(LatticeError::NotConnected)?;
        v = vn;
        heads.push(graph.realize(&v).head());
    }
    Ok(heads)
}

// ---------------------------------------------------------------------
// Single-link toy model
// ---------------------------------------------------------------------

pub mod toy {
    //! The single-link robot with n evenly spaced base directions.
    //!
    //! Serves as the exactly analyzable instance: the reachable head
    //! positions per expansion round are enumerated here by direct
    //! pivot-walk simulation, independent of the roadmap machinery,
    //! and (for n = 12) in exact integer arithmetic over half-integer
    //! combinations of 1 and sqrt(3).

    use super::*;

    /// Builds the toy bundle: one unit link, n base configurations at
    /// fixed angle intervals of 2 pi / n, complete base roadmaps.
    pub fn toy_bundle(n: usize) -> Result<RoadmapBundle, RoadmapError> {
        let spec = RobotSpec::open_chain(vec![1.0]).unwrap();
        let configs: Vec<Configuration> = (0..n)
            .map(|i| {
                from_angles(
                    &spec,
                    &AngleForm {
                        head: Point2::ORIGIN,
                        angles: vec![i as f64 * std::f64::consts::TAU / n as f64],
                    },
                )
                .unwrap()
            })
            .collect();
        let set = BaseConfigSet::from_configs(&spec, configs, 0)?;
        build_bundle_from_set(&spec, set, n - 1, crate::roadmap::DEFAULT_STEP)
    }

    /// Reached-head sets per BFS depth on the real tiling graph,
    /// snapped to a 1e-9 grid.
    pub fn tiling_heads(bundle: &RoadmapBundle, depth: usize) -> Vec<HashSet<(i64, i64)>> {
        let graph = TilingGraph::new(bundle, None);
        let seed = TileVertex {
            id: CfgId::Base(0),
            translation: Point2::ORIGIN,
        };
        let levels = bfs_rounds(&graph, seed, depth);
        let mut out = Vec::new();
        let mut acc: HashSet<(i64, i64)> = HashSet::new();
        for level in &levels {
            for v in level {
                acc.insert(snap_point(graph.realize(v).head()));
            }
            out.push(acc.clone());
        }
        out
    }

    /// Direct pivot-walk enumeration, independent of the roadmap
    /// machinery: a state is (head position, link direction index);
    /// pivoting at the head re-aims the link, pivoting at the free end
    /// moves the head to tail - u_new. Returns accumulated reached-head
    /// sets per depth, snapped to the same 1e-9 grid.
    pub fn enumerate_heads(n: usize, depth: usize) -> Vec<HashSet<(i64, i64)>> {
        let dirs: Vec<Point2> = (0..n)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / n as f64;
                Point2::new(a.cos(), a.sin())
            })
            .collect();
        let mut states: HashSet<((i64, i64), usize)> = HashSet::new();
        let start = (snap_point(Point2::ORIGIN), 0usize);
        states.insert(start);
        let mut frontier: Vec<(Point2, usize)> = vec![(Point2::ORIGIN, 0)];
        let mut heads: HashSet<(i64, i64)> = HashSet::new();
        heads.insert(snap_point(Point2::ORIGIN));
        let mut out = vec![heads.clone()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (head, dir) in frontier {
                for nd in 0..n {
                    if nd == dir {
                        continue;
                    }
                    // Head pivot: direction changes, head stays.
                    let s1 = (snap_point(head), nd);
                    if states.insert(s1) {
                        next.push((head, nd));
                    }
                    // Tail pivot: head swings to tail - u_new.
                    let tail = head.add(dirs[dir]);
                    let nh = tail.sub(dirs[nd]);
                    let s2 = (snap_point(nh), nd);
                    if states.insert(s2) {
                        next.push((nh, nd));
                    }
                }
            }
            for (h, _) in &next {
                heads.insert(snap_point(*h));
            }
            out.push(heads.clone());
            frontier = next;
        }
        out
    }

    /// Numbers of the form (a + b sqrt(3)) / 2 with integer a, b.
    /// Closed under the arithmetic of the 12-direction toy, so the
    /// n = 12 enumeration is exact.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct HalfRoot3(pub i64, pub i64);

    impl HalfRoot3 {
        pub const ZERO: HalfRoot3 = HalfRoot3(0, 0);

        pub fn add(self, o: HalfRoot3) -> HalfRoot3 {
            HalfRoot3(self.0 + o.0, self.1 + o.1)
        }

        pub fn sub(self, o: HalfRoot3) -> HalfRoot3 {
            HalfRoot3(self.0 - o.0, self.1 - o.1)
        }

        pub fn to_f64(self) -> f64 {
            (self.0 as f64 + self.1 as f64 * 3.0f64.sqrt()) / 2.0
        }
    }

    /// (cos, sin) of k * 30 degrees, exactly.
    pub fn unit12(k: usize) -> (HalfRoot3, HalfRoot3) {
        const TABLE: [((i64, i64), (i64, i64)); 12] = [
            ((2, 0), (0, 0)),
            ((0, 1), (1, 0)),
            ((1, 0), (0, 1)),
            ((0, 0), (2, 0)),
            ((-1, 0), (0, 1)),
            ((0, -1), (1, 0)),
            ((-2, 0), (0, 0)),
            ((0, -1), (-1, 0)),
            ((-1, 0), (0, -1)),
            ((0, 0), (-2, 0)),
            ((1, 0), (0, -1)),
            ((0, 1), (-1, 0)),
        ];
        let ((a, b), (c, d)) = TABLE[k % 12];
        (HalfRoot3(a, b), HalfRoot3(c, d))
    }

    /// Exact-arithmetic version of [`enumerate_heads`] for n = 12.
    pub fn enumerate_heads_exact12(depth: usize) -> Vec<HashSet<(i64, i64)>> {
        type Pos = (HalfRoot3, HalfRoot3);
        let mut states: HashSet<(Pos, usize)> = HashSet::new();
        let origin: Pos = (HalfRoot3::ZERO, HalfRoot3::ZERO);
        states.insert((origin, 0));
        let mut frontier: Vec<(Pos, usize)> = vec![(origin, 0)];
        let snap = |p: &Pos| snap_point(Point2::new(p.0.to_f64(), p.1.to_f64()));
        let mut heads: HashSet<(i64, i64)> = HashSet::new();
        heads.insert(snap(&origin));
        let mut out = vec![heads.clone()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (head, dir) in frontier {
                let (cx, cy) = unit12(dir);
                for nd in 0..12usize {
                    if nd == dir {
                        continue;
                    }
                    if states.insert((head, nd)) {
                        next.push((head, nd));
                    }
                    let (nx, ny) = unit12(nd);
                    let moved = (head.0.add(cx).sub(nx), head.1.add(cy).sub(ny));
                    if states.insert((moved, nd)) {
                        next.push((moved, nd));
                    }
                }
            }
            for (h, _) in &next {
                heads.insert(snap(h));
            }
            out.push(heads.clone());
            frontier = next;
        }
        out
    }
}

// ---------------------------------------------------------------------
// Randomized inequality suite
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub trials: usize,
    pub rotation_bound_violations: usize,
    pub perturbation_bound_violations: usize,
    pub translation_identity_violations: usize,
    pub metric_axiom_violations: usize,
    pub counterexamples: Vec<String>,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.rotation_bound_violations == 0
            && self.perturbation_bound_violations == 0
            && self.translation_identity_violations == 0
            && self.metric_axiom_violations == 0
    }
}

fn random_configuration(spec: &RobotSpec, rng: &mut impl Rng) -> Configuration {
    let head = Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    let angles: Vec<f64> = (0..spec.link_count())
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    from_angles(spec, &AngleForm { head, angles }).unwrap()
}

/// Fuzzes the distance inequalities underpinning the reachability
/// argument. Any candidate violation is recomputed from its stored
/// inputs before being reported.
pub fn verify_bounds_suite(spec: &RobotSpec, trials: usize, seed: u64) -> BoundsReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let m = spec.anchor_count() as f64;
    let lmax = spec.max_link_length();
    let mut report = BoundsReport {
        trials,
        rotation_bound_violations: 0,
        perturbation_bound_violations: 0,
        translation_identity_violations: 0,
        metric_axiom_violations: 0,
        counterexamples: Vec::new(),
    };
    let note = |examples: &mut Vec<String>, s: String| {
        if examples.len() < 8 {
            examples.push(s);
        }
    };

    for _ in 0..trials {
        // Rotation about the head: d(C, C^a) < m^2 L a / 2.
        let c = random_configuration(spec, &mut rng);
        let alpha = rng.random_range(f64::EPSILON..=std::f64::consts::PI);
        let rotated = rotate_about_anchor(&c, 1, alpha).unwrap();
        let d = anchor_sum_distance(&c, &rotated).unwrap();
        let bound = m * m * lmax * alpha / 2.0;
        if d >= bound {
            // Re-verify by direct recomputation before reporting.
            let d2 = anchor_sum_distance(&c, &rotate_about_anchor(&c, 1, alpha).unwrap()).unwrap();
            if d2 >= bound {
                report.rotation_bound_violations += 1;
                note(
                    &mut report.counterexamples,
                    format!("rotation: d={d2} bound={bound} alpha={alpha}"),
                );
            }
        }

        // Per-joint perturbation with the head fixed:
        // d(C, C') <= L (m-1)^3 dtheta.
        let af = to_angles(spec, &c).unwrap();
        let dtheta = rng.random_range(0.0..=0.1f64);
        let perturbed = AngleForm {
            head: af.head,
            angles: af
                .angles
                .iter()
                .map(|&a| a + rng.random_range(-dtheta..=dtheta))
                .collect(),
        };
        let c2 = from_angles(spec, &perturbed).unwrap();
        let d = anchor_sum_distance(&c, &c2).unwrap();
        let bound = lmax * (m - 1.0).powi(3) * dtheta + 1e-12;
        if d > bound {
            let d2 = anchor_sum_distance(&c, &from_angles(spec, &perturbed).unwrap()).unwrap();
            if d2 > bound {
                report.perturbation_bound_violations += 1;
                note(
                    &mut report.counterexamples,
                    format!("perturbation: d={d2} bound={bound} dtheta={dtheta}"),
                );
            }
        }

        // Translation moves every anchor by |p|: d(C, C+p) = m |p|.
        let p = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let moved = crate::robot::translate(&c, p);
        let d = anchor_sum_distance(&c, &moved).unwrap();
        if (d - m * p.norm()).abs() > 1e-12 * (1.0 + m * p.norm()) {
            report.translation_identity_violations += 1;
            note(
                &mut report.counterexamples,
                format!("translation: d={d} expected={}", m * p.norm()),
            );
        }

        // Metric axioms on a random triple.
        let b = random_configuration(spec, &mut rng);
        let r = random_configuration(spec, &mut rng);
        let dab = anchor_sum_distance(&c, &b).unwrap();
        let dba = anchor_sum_distance(&b, &c).unwrap();
        let dar = anchor_sum_distance(&c, &r).unwrap();
        let drb = anchor_sum_distance(&r, &b).unwrap();
        let daa = anchor_sum_distance(&c, &c).unwrap();
        if dab < 0.0 || (dab - dba).abs() > 1e-12 || dab > dar + drb + 1e-9 || daa > 1e-12 {
            report.metric_axiom_violations += 1;
            note(
                &mut report.counterexamples,
                format!("metric: dab={dab} dba={dba} dar+drb={}", dar + drb),
            );
        }
    }
    report
}
