//! Independent dense path validator.
//!
//! Deliberately reconstructs everything from the waypoints alone: it
//! finds the shared pivot anchor of each consecutive pair, re-runs the
//! shorter-arc interpolation at its own resolution, and checks
//! self-collision, obstacles, link lengths and the target predicate
//! from scratch. It shares no state with the planners beyond the
//! primitive predicates, so a bug in edge bookkeeping or swept-volume
//! screening cannot hide from it.

use thiserror::Error;

use crate::geometry2d::Point2;
use crate::planners::{goal_test, TargetRegion};
use crate::roadmap::reconstruct_about_anchor;
use crate::robot::{
    angle_delta, obstacle_collides, self_collides, Configuration, RobotSpec, Scene, EPS_FOLD,
};

/// Interpolation resolution of the validator, radians per joint step.
pub const VALIDATION_RESOLUTION: f64 = 0.01;
/// Two anchors are "the same point" for pivot detection below this.
pub const PIVOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("path has no waypoints")]
    Empty,
    #[error("waypoint {0} violates the link-length invariant: {1}")]
    BadWaypoint(usize, String),
    #[error("waypoints {0} and {1} share no fixed anchor")]
    NoPivot(usize, usize),
    #[error("segment {0}->{1} self-collides at t={2}")]
    SelfCollision(usize, usize, f64),
    #[error("segment {0}->{1} hits an obstacle or leaves the workspace at t={2}")]
    ObstacleCollision(usize, usize, f64),
    #[error("segment {0}->{1} passes through a folded configuration")]
    FoldCrossing(usize, usize),
    #[error("final waypoint does not satisfy the target predicate")]
    TargetMissed,
    #[error("path does not start at the query start")]
    WrongStart,
}

/// Full revalidation of a waypoint path against a scene and target.
pub fn validate_path(
    spec: &RobotSpec,
    scene: &Scene,
    target: &TargetRegion,
    start: &Configuration,
    waypoints: &[Configuration],
) -> Result<(), PathError> {
    if waypoints.is_empty() {
        return Err(PathError::Empty);
    }
    for (i, w) in waypoints.iter().enumerate() {
        w.validate(spec)
            .map_err(|e| PathError::BadWaypoint(i, e.to_string()))?;
    }
    let first = &waypoints[0];
    if first
        .anchors()
        .iter()
        .zip(start.anchors())
        .any(|(a, b)| a.dist(*b) > 1e-9)
    {
        return Err(PathError::WrongStart);
    }
    for i in 0..waypoints.len().saturating_sub(1) {
        validate_segment(spec, scene, &waypoints[i], &waypoints[i + 1], i)?;
    }
    let last = waypoints.last().unwrap();
    if !goal_test(last, target) {
        return Err(PathError::TargetMissed);
    }
    Ok(())
}

fn validate_segment(
    spec: &RobotSpec,
    scene: &Scene,
    a: &Configuration,
    b: &Configuration,
    index: usize,
) -> Result<(), PathError> {
    let pivot = find_pivot(a, b).ok_or(PathError::NoPivot(index, index + 1))?;
    let pivot_pos = a.anchor(pivot).unwrap();

    let a_angles = a.link_angles();
    let b_angles = b.link_angles();
    let deltas: Vec<f64> = a_angles
        .iter()
        .zip(&b_angles)
        .map(|(&x, &y)| angle_delta(x, y))
        .collect();

    // Fold crossings sit between samples; catch them analytically.
    let pi = std::f64::consts::PI;
    for i in 0..deltas.len().saturating_sub(1) {
        let rel0 = a_angles[i + 1] - a_angles[i];
        let drel = deltas[i + 1] - deltas[i];
        for w in -2i32..=2 {
            let target = pi + std::f64::consts::TAU * w as f64;
            if drel.abs() < 1e-15 {
                if (rel0 - target).abs() <= EPS_FOLD {
                    return Err(PathError::FoldCrossing(index, index + 1));
                }
            } else {
                let t = (target - rel0) / drel;
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    return Err(PathError::FoldCrossing(index, index + 1));
                }
            }
        }
    }

    let max_delta = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let substeps = if max_delta == 0.0 {
        0
    } else {
        (max_delta / VALIDATION_RESOLUTION).ceil() as usize
    };
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
        if self_collides(spec, &c) {
            return Err(PathError::SelfCollision(index, index + 1, t));
        }
        if obstacle_collides(spec, &c, scene) {
            return Err(PathError::ObstacleCollision(index, index + 1, t));
        }
    }
    Ok(())
}

/// The lowest-index anchor held in place between two configurations.
pub fn find_pivot(a: &Configuration, b: &Configuration) -> Option<usize> {
    for j in 1..=a.anchor_count() {
        let pa: Point2 = a.anchor(j).ok()?;
        let pb: Point2 = b.anchor(j).ok()?;
        if pa.dist(pb) <= PIVOT_TOLERANCE {
            return Some(j);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry2d::{Aabb, Polygon};
    use crate::robot::{from_angles, AngleForm, RobotSpec};
    use std::f64::consts::PI;

    fn spec2() -> RobotSpec {
        RobotSpec::open_chain(vec![1.0, 1.0]).unwrap()
    }

    fn cfg(spec: &RobotSpec, head: (f64, f64), angles: &[f64]) -> Configuration {
        from_angles(
            spec,
            &AngleForm {
                head: Point2::new(head.0, head.1),
                angles: angles.to_vec(),
            },
        )
        .unwrap()
    }

    fn empty_scene() -> Scene {
        Scene::empty(Aabb::new(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0)))
    }

    #[test]
    fn accepts_single_anchored_rotation() {
        let spec = spec2();
        let a = cfg(&spec, (0.0, 0.0), &[0.0, PI / 2.0]);
        let b = cfg(&spec, (0.0, 0.0), &[PI / 4.0, PI / 2.0 + PI / 4.0]);
        let target = TargetRegion::HeadDisc {
            center: Point2::ORIGIN,
            radius: 1.0,
        };
        validate_path(&spec, &empty_scene(), &target, &a, &[a.clone(), b]).unwrap();
    }

    #[test]
    fn rejects_teleport_segment() {
        let spec = spec2();
        let a = cfg(&spec, (0.0, 0.0), &[0.0, PI / 2.0]);
        let b = cfg(&spec, (3.0, 3.0), &[0.0, PI / 2.0]);
        let target = TargetRegion::HeadDisc {
            center: Point2::new(3.0, 3.0),
            radius: 1.0,
        };
        let err =
            validate_path(&spec, &empty_scene(), &target, &a, &[a.clone(), b]).unwrap_err();
        assert_eq!(err, PathError::NoPivot(0, 1));
    }

    #[test]
    fn rejects_obstacle_sweep() {
        let spec = spec2();
        let a = cfg(&spec, (0.0, 0.0), &[0.0, 0.0]);
        // Rotating the whole chain about the head sweeps through the
        // block above.
        let b = cfg(&spec, (0.0, 0.0), &[PI / 2.0, PI / 2.0]);
        let scene = Scene {
            obstacles: vec![
                Polygon::rect(Point2::new(0.8, 0.8), Point2::new(1.6, 1.6)).unwrap(),
            ],
            workspace: Aabb::new(Point2::new(-10.0, -10.0), Point2::new(10.0, 10.0)),
        };
        let target = TargetRegion::HeadDisc {
            center: Point2::ORIGIN,
            radius: 1.0,
        };
        let err = validate_path(&spec, &scene, &target, &a, &[a.clone(), b]).unwrap_err();
        assert!(matches!(err, PathError::ObstacleCollision(0, 1, _)));
    }

    #[test]
    fn rejects_missed_target() {
        let spec = spec2();
        let a = cfg(&spec, (0.0, 0.0), &[0.0, 0.0]);
        let target = TargetRegion::HeadDisc {
            center: Point2::new(5.0, 5.0),
            radius: 0.1,
        };
        let err = validate_path(&spec, &empty_scene(), &target, &a.clone(), &[a]).unwrap_err();
        assert_eq!(err, PathError::TargetMissed);
    }
}
