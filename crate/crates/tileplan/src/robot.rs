//! Robot description, configuration representation and the collision
//! predicates and metrics everything else is built on.
//!
//! A configuration is stored as the m anchor points of the chain, not
//! as joint angles; translation of a configuration is then exact
//! vector addition, which the roadmap machinery depends on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry2d::{seg_polygon_intersect, Aabb, Point2, Polygon, Segment};

/// Relative tolerance on link lengths.
pub const EPS_LEN: f64 = 1e-7;
/// Two consecutive links count as overlapping when their relative
/// angle is within this tolerance of a full fold-back.
pub const EPS_FOLD: f64 = 1e-6;

pub mod counters {
    //! Thread-local tallies of collision predicate invocations.
    //!
    //! The planner reports per-run check counts from deltas of these,
    //! and tests use them to certify that the tiling-graph query path
    //! performs no self-collision checks at all.
    use std::cell::Cell;

    thread_local! {
        static SELF_CHECKS: Cell<u64> = const { Cell::new(0) };
        static OBSTACLE_CHECKS: Cell<u64> = const { Cell::new(0) };
        static SWEEP_CHECKS: Cell<u64> = const { Cell::new(0) };
    }

    pub fn self_checks() -> u64 {
        SELF_CHECKS.with(|c| c.get())
    }

    pub fn obstacle_checks() -> u64 {
        OBSTACLE_CHECKS.with(|c| c.get())
    }

    pub fn sweep_checks() -> u64 {
        SWEEP_CHECKS.with(|c| c.get())
    }

    pub(crate) fn bump_self() {
        SELF_CHECKS.with(|c| c.set(c.get() + 1));
    }

    pub(crate) fn bump_obstacle() {
        OBSTACLE_CHECKS.with(|c| c.set(c.get() + 1));
    }

    pub(crate) fn bump_sweep() {
        SWEEP_CHECKS.with(|c| c.set(c.get() + 1));
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RobotError {
    #[error("expected {expected} {what}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("link {link} has length {got}, expected {expected}")]
    InvalidConfiguration { link: usize, expected: f64, got: f64 },
    #[error("anchor index {0} out of range 1..={1}")]
    AnchorOutOfRange(usize, usize),
    #[error("robot needs at least one link")]
    NoLinks,
    #[error("link lengths must be positive and finite")]
    BadLinkLength,
    #[error("anchored joint index {0} out of range 1..={1}")]
    BadJointIndex(usize, usize),
}

/// How the robot is attached to the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotVariant {
    /// Free-flying open chain.
    OpenChain,
    /// Open chain with one interior joint pinned to a fixed point.
    /// `joint_index` is 1-based over the m-2 interior anchor points,
    /// so the pinned anchor is `joint_index + 1`.
    Anchored {
        joint_index: usize,
        anchor_position: Point2,
    },
}

/// Immutable description of a robot: m-1 link lengths plus variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub link_lengths: Vec<f64>,
    pub variant: RobotVariant,
}

impl RobotSpec {
    pub fn open_chain(link_lengths: Vec<f64>) -> Result<RobotSpec, RobotError> {
        let spec = RobotSpec {
            link_lengths,
            variant: RobotVariant::OpenChain,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn anchored(
        link_lengths: Vec<f64>,
        joint_index: usize,
        anchor_position: Point2,
    ) -> Result<RobotSpec, RobotError> {
        let spec = RobotSpec {
            link_lengths,
            variant: RobotVariant::Anchored {
                joint_index,
                anchor_position,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RobotError> {
        if self.link_lengths.is_empty() {
            return Err(RobotError::NoLinks);
        }
        if self
            .link_lengths
            .iter()
            .any(|&l| !(l.is_finite() && l > 0.0))
        {
            return Err(RobotError::BadLinkLength);
        }
        if let RobotVariant::Anchored { joint_index, .. } = self.variant {
            let joints = self.anchor_count().saturating_sub(2);
            if joint_index < 1 || joint_index > joints {
                return Err(RobotError::BadJointIndex(joint_index, joints));
            }
        }
        Ok(())
    }

    /// Number of anchor points m (one more than the number of links).
    pub fn anchor_count(&self) -> usize {
        self.link_lengths.len() + 1
    }

    pub fn link_count(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn max_link_length(&self) -> f64 {
        self.link_lengths.iter().cloned().fold(0.0, f64::max)
    }

    /// 1-based index of the pinned anchor, if any.
    pub fn anchored_anchor(&self) -> Option<usize> {
        match self.variant {
            RobotVariant::OpenChain => None,
            RobotVariant::Anchored { joint_index, .. } => Some(joint_index + 1),
        }
    }

    /// Anchor indices usable as pivots of anchored motions. The whole
    /// chain for a free-flying robot, only the pinned anchor otherwise.
    pub fn pivot_anchors(&self) -> Vec<usize> {
        match self.variant {
            RobotVariant::OpenChain => (1..=self.anchor_count()).collect(),
            RobotVariant::Anchored { joint_index, .. } => vec![joint_index + 1],
        }
    }
}

/// Robot state as the ordered anchor points of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    anchors: Vec<Point2>,
}

impl Configuration {
    /// Wraps anchor points without checking link lengths; use
    /// [`Configuration::validate`] when the invariant matters.
    pub fn from_anchors(anchors: Vec<Point2>) -> Configuration {
        Configuration { anchors }
    }

    pub fn anchors(&self) -> &[Point2] {
        &self.anchors
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn head(&self) -> Point2 {
        self.anchors[0]
    }

    /// 1-based anchor access, mirroring the j(C) notation.
    pub fn anchor(&self, j: usize) -> Result<Point2, RobotError> {
        if j < 1 || j > self.anchors.len() {
            return Err(RobotError::AnchorOutOfRange(j, self.anchors.len()));
        }
        Ok(self.anchors[j - 1])
    }

    pub fn validate(&self, spec: &RobotSpec) -> Result<(), RobotError> {
        if self.anchors.len() != spec.anchor_count() {
            return Err(RobotError::ShapeMismatch {
                what: "anchors",
                expected: spec.anchor_count(),
                got: self.anchors.len(),
            });
        }
        for (i, l) in spec.link_lengths.iter().enumerate() {
            let got = self.anchors[i + 1].dist(self.anchors[i]);
            if (got - l).abs() > EPS_LEN * l {
                return Err(RobotError::InvalidConfiguration {
                    link: i + 1,
                    expected: *l,
                    got,
                });
            }
        }
        Ok(())
    }

    pub fn link(&self, i: usize) -> Segment {
        Segment::new(self.anchors[i], self.anchors[i + 1])
    }

    pub fn links(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.anchors.len() - 1).map(|i| self.link(i))
    }

    /// Flat (x1,y1,...,xm,ym) embedding used by nearest-neighbor
    /// search.
    pub fn embed(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.anchors.len() * 2);
        for p in &self.anchors {
            out.push(p.x);
            out.push(p.y);
        }
        out
    }

    /// Absolute link angles, in [0, 2pi).
    pub fn link_angles(&self) -> Vec<f64> {
        (0..self.anchors.len() - 1)
            .map(|i| {
                let d = self.anchors[i + 1].sub(self.anchors[i]);
                normalize_angle(d.y.atan2(d.x))
            })
            .collect()
    }
}

/// Configuration as head position plus absolute link angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleForm {
    pub head: Point2,
    pub angles: Vec<f64>,
}

/// Wrap into [0, 2pi).
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = a.rem_euclid(two_pi);
    if r == two_pi {
        0.0
    } else {
        r
    }
}

/// Signed difference b - a wrapped to [-pi, pi), i.e. the shorter arc.
/// An exact half-turn resolves to -pi, which keeps the interpolated
/// relative angle of an opposed link pair moving through zero rather
/// than through the fold.
pub fn angle_delta(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut d = (b - a).rem_euclid(std::f64::consts::TAU);
    if d >= pi {
        d -= std::f64::consts::TAU;
    }
    d
}

/// Forward kinematics from head position and absolute link angles.
pub fn from_angles(spec: &RobotSpec, af: &AngleForm) -> Result<Configuration, RobotError> {
    if af.angles.len() != spec.link_count() {
        return Err(RobotError::ShapeMismatch {
            what: "angles",
            expected: spec.link_count(),
            got: af.angles.len(),
        });
    }
    let mut anchors = Vec::with_capacity(spec.anchor_count());
    anchors.push(af.head);
    for (i, &theta) in af.angles.iter().enumerate() {
        let l = spec.link_lengths[i];
        let prev = anchors[i];
        anchors.push(Point2::new(prev.x + l * theta.cos(), prev.y + l * theta.sin()));
    }
    Ok(Configuration { anchors })
}

/// Inverse of [`from_angles`] up to angle normalization.
pub fn to_angles(spec: &RobotSpec, c: &Configuration) -> Result<AngleForm, RobotError> {
    c.validate(spec)?;
    Ok(AngleForm {
        head: c.head(),
        angles: c.link_angles(),
    })
}

/// Every anchor shifted by p; link lengths are preserved exactly.
pub fn translate(c: &Configuration, p: Point2) -> Configuration {
    Configuration {
        anchors: c.anchors.iter().map(|a| a.add(p)).collect(),
    }
}

/// Rigid rotation of the whole chain about anchor j (1-based) by alpha
/// radians counter-clockwise.
pub fn rotate_about_anchor(
    c: &Configuration,
    j: usize,
    alpha: f64,
) -> Result<Configuration, RobotError> {
    let pivot = c.anchor(j)?;
    let (s, cos) = alpha.sin_cos();
    let anchors = c
        .anchors
        .iter()
        .map(|&a| {
            let d = a.sub(pivot);
            Point2::new(pivot.x + cos * d.x - s * d.y, pivot.y + s * d.x + cos * d.y)
        })
        .collect();
    Ok(Configuration { anchors })
}

/// Self-collision test: any two links that do not share a joint
/// intersect, or a consecutive pair folds back onto itself.
pub fn self_collides(spec: &RobotSpec, c: &Configuration) -> bool {
    counters::bump_self();
    let n = spec.link_count();
    debug_assert_eq!(c.anchor_count(), n + 1);
    // Rule (ii): consecutive fold-back. The only positive-length
    // overlap of two segments sharing an endpoint is a relative angle
    // of exactly pi.
    let pi = std::f64::consts::PI;
    for i in 0..n.saturating_sub(1) {
        let d1 = c.anchors[i + 1].sub(c.anchors[i]);
        let d2 = c.anchors[i + 2].sub(c.anchors[i + 1]);
        let rel = angle_delta(d1.y.atan2(d1.x), d2.y.atan2(d2.x));
        if (rel.abs() - pi).abs() <= EPS_FOLD {
            return true;
        }
    }
    // Rule (i): non-adjacent link pairs.
    for i in 0..n {
        let si = c.link(i);
        let bi = si.aabb();
        for k in (i + 2)..n {
            let sk = c.link(k);
            if !bi.intersects(&sk.aabb()) {
                continue;
            }
            if crate::geometry2d::seg_seg_intersect(&si, &sk) {
                return true;
            }
        }
    }
    false
}

/// Workspace scene: polygonal obstacles inside a bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub obstacles: Vec<Polygon>,
    pub workspace: Aabb,
}

impl Scene {
    pub fn empty(workspace: Aabb) -> Scene {
        Scene {
            obstacles: Vec::new(),
            workspace,
        }
    }

    pub fn obstacle_aabbs(&self) -> Vec<Aabb> {
        self.obstacles.iter().map(|o| o.aabb()).collect()
    }
}

/// Obstacle-collision test: a link hits an obstacle or an anchor
/// leaves the workspace box. The box is convex, so anchors inside
/// imply links inside.
pub fn obstacle_collides(spec: &RobotSpec, c: &Configuration, scene: &Scene) -> bool {
    counters::bump_obstacle();
    debug_assert_eq!(c.anchor_count(), spec.anchor_count());
    if c.anchors.iter().any(|&a| !scene.workspace.contains(a)) {
        return true;
    }
    for link in c.links() {
        let lb = link.aabb();
        for obs in &scene.obstacles {
            if lb.intersects(&obs.aabb()) && seg_polygon_intersect(&link, obs) {
                return true;
            }
        }
    }
    false
}

/// Euclidean distance between the R^{2m} embeddings of two
/// configurations.
pub fn euclid_distance(a: &Configuration, b: &Configuration) -> Result<f64, RobotError> {
    if a.anchor_count() != b.anchor_count() {
        return Err(RobotError::ShapeMismatch {
            what: "anchors",
            expected: a.anchor_count(),
            got: b.anchor_count(),
        });
    }
    let mut acc = 0.0;
    for (p, q) in a.anchors.iter().zip(&b.anchors) {
        let d = p.sub(*q);
        acc += d.x * d.x + d.y * d.y;
    }
    Ok(acc.sqrt())
}

/// Sum over anchors of pointwise Euclidean distances.
pub fn anchor_sum_distance(a: &Configuration, b: &Configuration) -> Result<f64, RobotError> {
    if a.anchor_count() != b.anchor_count() {
        return Err(RobotError::ShapeMismatch {
            what: "anchors",
            expected: a.anchor_count(),
            got: b.anchor_count(),
        });
    }
    Ok(a.anchors
        .iter()
        .zip(&b.anchors)
        .map(|(p, q)| p.dist(*q))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn unit_spec(links: usize) -> RobotSpec {
        RobotSpec::open_chain(vec![1.0; links]).unwrap()
    }

    fn cfg(points: &[(f64, f64)]) -> Configuration {
        Configuration::from_anchors(points.iter().map(|&(x, y)| p(x, y)).collect())
    }

    fn random_config(rng: &mut impl Rng, spec: &RobotSpec) -> Configuration {
        let head = p(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let angles: Vec<f64> = (0..spec.link_count())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        from_angles(spec, &AngleForm { head, angles }).unwrap()
    }

    #[test]
    fn from_angles_basics() {
        let s1 = unit_spec(1);
        let c = from_angles(
            &s1,
            &AngleForm {
                head: p(0.0, 0.0),
                angles: vec![0.0],
            },
        )
        .unwrap();
        assert_eq!(c.anchors(), &[p(0.0, 0.0), p(1.0, 0.0)]);

        let s2 = unit_spec(2);
        let c = from_angles(
            &s2,
            &AngleForm {
                head: p(0.0, 0.0),
                angles: vec![PI / 2.0, PI / 2.0],
            },
        )
        .unwrap();
        for (got, want) in c.anchors().iter().zip([p(0.0, 0.0), p(0.0, 1.0), p(0.0, 2.0)]) {
            assert!(got.dist(want) < 1e-12);
        }

        let s3 = RobotSpec::open_chain(vec![2.0, 1.0]).unwrap();
        let c = from_angles(
            &s3,
            &AngleForm {
                head: p(1.0, 1.0),
                angles: vec![0.0, PI / 2.0],
            },
        )
        .unwrap();
        for (got, want) in c.anchors().iter().zip([p(1.0, 1.0), p(3.0, 1.0), p(3.0, 2.0)]) {
            assert!(got.dist(want) < 1e-12);
        }
    }

    #[test]
    fn angle_roundtrip_fuzz() {
        let spec = unit_spec(4);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let c = random_config(&mut rng, &spec);
            let af = to_angles(&spec, &c).unwrap();
            let back = from_angles(&spec, &af).unwrap();
            for (a, b) in c.anchors().iter().zip(back.anchors()) {
                assert!(a.dist(*b) <= EPS_LEN);
            }
        }
    }

    #[test]
    fn to_angles_rejects_bad_lengths() {
        let spec = unit_spec(1);
        let bad = cfg(&[(0.0, 0.0), (1.5, 0.0)]);
        assert!(matches!(
            to_angles(&spec, &bad),
            Err(RobotError::InvalidConfiguration { .. })
        ));
    }

    #[test]
    fn translate_and_anchor() {
        let c = cfg(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(translate(&c, p(0.0, 0.0)), c);
        assert_eq!(
            translate(&c, p(2.0, 3.0)).anchors(),
            &[p(2.0, 3.0), p(3.0, 3.0)]
        );
        let back = translate(&translate(&c, p(0.3, -0.7)), p(-0.3, 0.7));
        assert_eq!(back, c);

        assert_eq!(c.anchor(1).unwrap(), p(0.0, 0.0));
        assert_eq!(c.anchor(2).unwrap(), p(1.0, 0.0));
        assert!(matches!(c.anchor(3), Err(RobotError::AnchorOutOfRange(3, 2))));
        let t = p(4.0, 5.0);
        assert_eq!(translate(&c, t).anchor(2).unwrap(), c.anchor(2).unwrap().add(t));
    }

    #[test]
    fn rotation_cases() {
        let c = cfg(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(rotate_about_anchor(&c, 1, 0.0).unwrap(), c);
        let r = rotate_about_anchor(&c, 1, PI / 2.0).unwrap();
        assert!(r.anchors()[1].dist(p(0.0, 1.0)) < 1e-12);

        let c3 = cfg(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let r3 = rotate_about_anchor(&c3, 1, 0.1).unwrap();
        assert!(r3.anchors()[1].dist(p(0.1f64.cos(), 0.1f64.sin())) < 1e-12);
        assert!(r3.anchors()[2].dist(p(2.0 * 0.1f64.cos(), 2.0 * 0.1f64.sin())) < 1e-12);
    }

    #[test]
    fn self_collision_cases() {
        let s2 = unit_spec(2);
        let free = from_angles(
            &s2,
            &AngleForm {
                head: p(0.0, 0.0),
                angles: vec![0.0, PI / 2.0],
            },
        )
        .unwrap();
        assert!(!self_collides(&s2, &free));

        let folded = from_angles(
            &s2,
            &AngleForm {
                head: p(0.0, 0.0),
                angles: vec![0.0, PI],
            },
        )
        .unwrap();
        assert!(self_collides(&s2, &folded));

        // Third link crosses the first.
        let s3 = unit_spec(3);
        let crossing = from_angles(
            &s3,
            &AngleForm {
                head: p(0.0, 0.0),
                angles: vec![0.0, 3.0 * PI / 4.0, 3.0 * PI / 2.0],
            },
        )
        .unwrap();
        assert!(self_collides(&s3, &crossing));
    }

    #[test]
    fn single_link_never_self_collides() {
        let s1 = unit_spec(1);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = random_config(&mut rng, &s1);
            assert!(!self_collides(&s1, &c));
        }
    }

    #[test]
    fn self_collision_translation_and_rotation_invariant() {
        let spec = unit_spec(5);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let c = random_config(&mut rng, &spec);
            let hit = self_collides(&spec, &c);
            let t = p(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            assert_eq!(hit, self_collides(&spec, &translate(&c, t)));
            let j = rng.random_range(1..=spec.anchor_count());
            let alpha = rng.random_range(0.0..std::f64::consts::TAU);
            let r = rotate_about_anchor(&c, j, alpha).unwrap();
            assert_eq!(hit, self_collides(&spec, &r));
        }
    }

    #[test]
    fn obstacle_collision_cases() {
        let spec = unit_spec(2);
        let ws = Aabb::new(p(-10.0, -10.0), p(10.0, 10.0));
        let empty = Scene::empty(ws);
        let c = from_angles(
            &spec,
            &AngleForm {
                head: p(0.0, 0.0),
                angles: vec![0.0, PI / 2.0],
            },
        )
        .unwrap();
        assert!(!obstacle_collides(&spec, &c, &empty));

        let blocked = Scene {
            obstacles: vec![Polygon::rect(p(0.4, -0.5), p(0.6, 0.5)).unwrap()],
            workspace: ws,
        };
        assert!(obstacle_collides(&spec, &c, &blocked));

        let tiny_ws = Scene::empty(Aabb::new(p(-0.5, -0.5), p(0.5, 0.5)));
        assert!(obstacle_collides(&spec, &c, &tiny_ws));
    }

    #[test]
    fn euclid_distance_cases() {
        let c = cfg(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(euclid_distance(&c, &c).unwrap(), 0.0);
        let moved = translate(&c, p(3.0, 4.0));
        let d = euclid_distance(&c, &moved).unwrap();
        assert!((d - 50.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            euclid_distance(&moved, &c).unwrap(),
            euclid_distance(&c, &moved).unwrap()
        );
        let other = cfg(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert!(euclid_distance(&c, &other).is_err());
    }

    #[test]
    fn anchor_sum_distance_cases() {
        let c = cfg(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(anchor_sum_distance(&c, &c).unwrap(), 0.0);
        let moved = translate(&c, p(0.3, 0.4));
        let d = anchor_sum_distance(&c, &moved).unwrap();
        assert!((d - 1.5).abs() < 1e-12, "translation moves each anchor by 0.5");
    }

    #[test]
    fn anchor_sum_metric_axioms_fuzz() {
        let spec = unit_spec(3);
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..10_000 {
            let a = random_config(&mut rng, &spec);
            let b = random_config(&mut rng, &spec);
            let c = random_config(&mut rng, &spec);
            let dab = anchor_sum_distance(&a, &b).unwrap();
            let dba = anchor_sum_distance(&b, &a).unwrap();
            let dac = anchor_sum_distance(&a, &c).unwrap();
            let dcb = anchor_sum_distance(&c, &b).unwrap();
            assert!(dab >= 0.0);
            assert!((dab - dba).abs() < 1e-12);
            assert!(dab <= dac + dcb + 1e-9, "triangle inequality");
            assert!(anchor_sum_distance(&a, &a).unwrap() < 1e-12);
        }
    }

    #[test]
    fn rotation_distance_bound_fuzz() {
        // Rotating about the head moves anchor j along an arc of
        // radius at most (j-1) L_max, so the anchor-sum distance stays
        // below m^2 L_max alpha / 2.
        let spec = unit_spec(3);
        let m = spec.anchor_count() as f64;
        let lmax = spec.max_link_length();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..10_000 {
            let c = random_config(&mut rng, &spec);
            let alpha = rng.random_range(f64::EPSILON..=PI);
            let r = rotate_about_anchor(&c, 1, alpha).unwrap();
            let d = anchor_sum_distance(&c, &r).unwrap();
            assert!(d < m * m * lmax * alpha / 2.0, "d={d} alpha={alpha}");
        }
    }

    #[test]
    fn angle_perturbation_bound_fuzz() {
        let spec = unit_spec(3);
        let m = spec.anchor_count() as f64;
        let lmax = spec.max_link_length();
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        for _ in 0..10_000 {
            let c = random_config(&mut rng, &spec);
            let af = to_angles(&spec, &c).unwrap();
            let dtheta = rng.random_range(0.0..=0.1f64);
            let perturbed = AngleForm {
                head: af.head,
                angles: af
                    .angles
                    .iter()
                    .map(|&a| a + rng.random_range(-dtheta..=dtheta))
                    .collect(),
            };
            let c2 = from_angles(&spec, &perturbed).unwrap();
            let d = anchor_sum_distance(&c, &c2).unwrap();
            assert!(d <= lmax * (m - 1.0).powi(3) * dtheta + 1e-9);
        }
    }

    #[test]
    fn anchored_variant_joint_indexing() {
        let spec = RobotSpec::anchored(vec![1.0; 10], 5, p(0.0, 0.0)).unwrap();
        assert_eq!(spec.anchor_count(), 11);
        assert_eq!(spec.anchored_anchor(), Some(6));
        assert_eq!(spec.pivot_anchors(), vec![6]);
        assert!(RobotSpec::anchored(vec![1.0; 10], 10, p(0.0, 0.0)).is_err());
    }
}
