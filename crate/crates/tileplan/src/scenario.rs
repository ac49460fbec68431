//! Scenario files, built-in scene generators, run statistics, and SVG
//! rendering.
//!
//! The four generators are analogs of the benchmark scenes this kind
//! of planner is exercised on: a long chain in tight corridors, a
//! coiled chain that must unwind, a chain threading a wall gap, and a
//! two-armed anchored robot. They reproduce the structure (link
//! counts, clutter style, start character), not any particular scene
//! pixel for pixel, and are deterministic for a given (kind, scale,
//! seed).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry2d::{Aabb, Point2, Polygon};
use crate::planners::{PlannedPath, TargetRegion};
use crate::robot::{
    from_angles, obstacle_collides, self_collides, AngleForm, Configuration, RobotSpec,
    RobotVariant, Scene,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("non-finite number in field {0}")]
    NonFinite(String),
    #[error("obstacle {index} is not a valid polygon: {reason}")]
    BadObstacle { index: usize, reason: String },
    #[error("workspace box is degenerate")]
    BadWorkspace,
    #[error("robot spec invalid: {0}")]
    BadRobot(String),
    #[error("start configuration is in self-collision")]
    StartSelfCollision,
    #[error("start configuration intersects obstacle {0}")]
    StartInCollision(usize),
    #[error("start configuration leaves the workspace")]
    StartOutsideWorkspace,
    #[error("start does not respect the pinned anchor")]
    StartOffAnchor,
    #[error("target radius must be positive")]
    BadTarget,
    #[error("unknown scenario kind {0:?}")]
    UnknownKind(String),
    #[error("aggregate of zero records")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMetadata {
    pub generator: Option<String>,
    pub scale: Option<f64>,
    pub seed: Option<u64>,
    /// Marks generated scenes as structural analogs rather than
    /// digitized replicas.
    pub analog: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub metadata: ScenarioMetadata,
    pub robot: RobotSpec,
    pub scene: Scene,
    pub start: AngleForm,
    pub target: TargetRegion,
}

impl ScenarioFile {
    pub fn start_configuration(&self) -> Result<Configuration, ScenarioError> {
        from_angles(&self.robot, &self.start).map_err(|e| ScenarioError::BadRobot(e.to_string()))
    }

    /// Full semantic validation: finite numbers, simple polygons, a
    /// positive target, and a start inside the free space.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.robot
            .validate()
            .map_err(|e| ScenarioError::BadRobot(e.to_string()))?;
        if !(self.start.head.is_finite() && self.start.angles.iter().all(|a| a.is_finite())) {
            return Err(ScenarioError::NonFinite("start".into()));
        }
        let ws = self.scene.workspace;
        if !(ws.min.is_finite() && ws.max.is_finite() && ws.min.x < ws.max.x && ws.min.y < ws.max.y)
        {
            return Err(ScenarioError::BadWorkspace);
        }
        for (i, obs) in self.scene.obstacles.iter().enumerate() {
            obs.revalidate().map_err(|e| ScenarioError::BadObstacle {
                index: i,
                reason: e.to_string(),
            })?;
        }
        match self.target {
            TargetRegion::HeadDisc { center, radius }
            | TargetRegion::BothEndpointsDisc { center, radius } => {
                if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
                    return Err(ScenarioError::BadTarget);
                }
            }
        }
        let start = self.start_configuration()?;
        if let RobotVariant::Anchored {
            joint_index,
            anchor_position,
        } = self.robot.variant
        {
            let pinned = start.anchor(joint_index + 1).map_err(|e| {
                ScenarioError::BadRobot(e.to_string())
            })?;
            if pinned.dist(anchor_position) > 1e-9 {
                return Err(ScenarioError::StartOffAnchor);
            }
        }
        if self_collides(&self.robot, &start) {
            return Err(ScenarioError::StartSelfCollision);
        }
        if start.anchors().iter().any(|&a| !ws.contains(a)) {
            return Err(ScenarioError::StartOutsideWorkspace);
        }
        for (i, obs) in self.scene.obstacles.iter().enumerate() {
            let single = Scene {
                obstacles: vec![obs.clone()],
                workspace: ws,
            };
            if obstacle_collides(&self.robot, &start, &single) {
                return Err(ScenarioError::StartInCollision(i));
            }
        }
        Ok(())
    }
}

/// Canonical serialization used by both save and re-save, so a loaded
/// file re-serializes byte-identically.
pub fn scenario_to_json(s: &ScenarioFile) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("scenario serializes");
    out.push('\n');
    out
}

pub fn save_scenario(s: &ScenarioFile, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario_to_json(s))?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    load_scenario_str(&text)
}

/// Strict parse (unknown fields rejected, field path reported) plus
/// full semantic validation.
pub fn load_scenario_str(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let s: ScenarioFile =
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    s.validate()?;
    Ok(s)
}

// ---------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Tight,
    Coiled,
    BricksOpen,
    Gripper,
}

impl std::str::FromStr for ScenarioKind {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tight" => Ok(ScenarioKind::Tight),
            "coiled" => Ok(ScenarioKind::Coiled),
            "bricks_open" => Ok(ScenarioKind::BricksOpen),
            "gripper" => Ok(ScenarioKind::Gripper),
            other => Err(ScenarioError::UnknownKind(other.to_string())),
        }
    }
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Tight => "tight",
            ScenarioKind::Coiled => "coiled",
            ScenarioKind::BricksOpen => "bricks_open",
            ScenarioKind::Gripper => "gripper",
        }
    }
}

/// Deterministic analog scene for the given kind. `scale` is a pure
/// similarity: link lengths and scene geometry scale together, so
/// solvability is scale-invariant. The seed is recorded in the
/// metadata; the geometry itself does not depend on it.
pub fn generate_scenario(kind: ScenarioKind, scale: f64, seed: u64) -> ScenarioFile {
    assert!(scale > 0.0 && scale.is_finite());
    let s = scale;
    let rect = |x0: f64, y0: f64, x1: f64, y1: f64| {
        Polygon::rect(Point2::new(x0 * s, y0 * s), Point2::new(x1 * s, y1 * s)).unwrap()
    };
    let deg = |d: f64| d.to_radians();
    let file = match kind {
        ScenarioKind::Tight => {
            // Nine links snaking through a serpentine of two offset
            // corridor walls.
            let robot = RobotSpec::open_chain(vec![1.0 * s; 9]).unwrap();
            let scene = Scene {
                obstacles: vec![rect(0.0, 3.0, 16.0, 4.0), rect(6.0, 7.0, 22.0, 8.0)],
                workspace: Aabb::new(Point2::new(0.0, 0.0), Point2::new(22.0 * s, 12.0 * s)),
            };
            ScenarioFile {
                name: "tight".into(),
                metadata: ScenarioMetadata {
                    generator: Some("tight".into()),
                    scale: Some(scale),
                    seed: Some(seed),
                    analog: true,
                },
                robot,
                scene,
                start: AngleForm {
                    head: Point2::new(1.5 * s, 1.5 * s),
                    angles: vec![0.0; 9],
                },
                target: TargetRegion::HeadDisc {
                    center: Point2::new(3.0 * s, 10.0 * s),
                    radius: 1.0 * s,
                },
            }
        }
        ScenarioKind::Coiled => {
            // Ten links wound into a spiral around the head; the head
            // must escape the coil and travel to the disc. The joint
            // turns decay geometrically, giving a 570-degree wrap with
            // under a sixth of a link of clearance between the arms.
            let robot = RobotSpec::open_chain(vec![1.0 * s; 10]).unwrap();
            let mut angles = Vec::with_capacity(10);
            let mut acc = 0.0;
            let mut turn = 79.6;
            angles.push(deg(acc));
            for _ in 1..10 {
                acc += turn;
                turn *= 0.9415;
                angles.push(deg(acc));
            }
            let scene = Scene {
                obstacles: vec![rect(4.0, 4.5, 5.2, 5.7)],
                workspace: Aabb::new(
                    Point2::new(-13.0 * s, -13.0 * s),
                    Point2::new(14.0 * s, 13.0 * s),
                ),
            };
            ScenarioFile {
                name: "coiled".into(),
                metadata: ScenarioMetadata {
                    generator: Some("coiled".into()),
                    scale: Some(scale),
                    seed: Some(seed),
                    analog: true,
                },
                robot,
                scene,
                start: AngleForm {
                    head: Point2::new(0.0, 0.0),
                    angles,
                },
                target: TargetRegion::HeadDisc {
                    center: Point2::new(10.0 * s, -5.0 * s),
                    radius: 0.75 * s,
                },
            }
        }
        ScenarioKind::BricksOpen => {
            // Twelve links folded into an accordion on the left, with
            // a brick wall whose only gap is 2.5 links high, plus two
            // loose bricks beyond it.
            let robot = RobotSpec::open_chain(vec![1.0 * s; 12]).unwrap();
            let scene = Scene {
                obstacles: vec![
                    rect(9.0, 0.0, 10.5, 5.75),
                    rect(9.0, 8.25, 10.5, 14.0),
                    rect(13.0, 2.5, 15.0, 4.0),
                    rect(13.0, 10.0, 15.0, 11.5),
                ],
                workspace: Aabb::new(Point2::new(0.0, 0.0), Point2::new(20.0 * s, 14.0 * s)),
            };
            let angles: Vec<f64> = (0..12)
                .map(|i| if i % 2 == 0 { deg(-60.0) } else { deg(60.0) })
                .collect();
            ScenarioFile {
                name: "bricks_open".into(),
                metadata: ScenarioMetadata {
                    generator: Some("bricks_open".into()),
                    scale: Some(scale),
                    seed: Some(seed),
                    analog: true,
                },
                robot,
                scene,
                start: AngleForm {
                    head: Point2::new(2.0 * s, 7.2 * s),
                    angles,
                },
                target: TargetRegion::HeadDisc {
                    center: Point2::new(16.5 * s, 7.0 * s),
                    radius: 1.0 * s,
                },
            }
        }
        ScenarioKind::Gripper => {
            // Ten links pinned at the middle joint; both endpoints
            // must close on the disc between the two flanking blocks.
            let robot =
                RobotSpec::anchored(vec![1.0 * s; 10], 5, Point2::new(0.0, 0.0)).unwrap();
            let scene = Scene {
                obstacles: vec![rect(-2.6, 1.2, -1.6, 2.0), rect(1.6, 1.2, 2.6, 2.0)],
                workspace: Aabb::new(
                    Point2::new(-7.0 * s, -7.0 * s),
                    Point2::new(7.0 * s, 7.0 * s),
                ),
            };
            ScenarioFile {
                name: "gripper".into(),
                metadata: ScenarioMetadata {
                    generator: Some("gripper".into()),
                    scale: Some(scale),
                    seed: Some(seed),
                    analog: true,
                },
                robot,
                scene,
                start: AngleForm {
                    head: Point2::new(-5.0 * s, 0.0),
                    angles: vec![0.0; 10],
                },
                target: TargetRegion::BothEndpointsDisc {
                    center: Point2::new(0.0, 3.1 * s),
                    radius: 1.3 * s,
                },
            }
        }
    };
    debug_assert!(file.validate().is_ok());
    file
}

// ---------------------------------------------------------------------
// Run statistics
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub planner: String,
    pub scenario: String,
    pub seed: u64,
    pub solved: bool,
    pub wall_time_ms: f64,
    pub iterations: u64,
    pub self_checks: u64,
    pub obstacle_checks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
    pub mean: f64,
}

/// Inclusive linear-interpolation quantile of pre-sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Order statistics of one numeric series.
pub fn aggregate(values: &[f64]) -> Result<Aggregate, ScenarioError> {
    if values.is_empty() {
        return Err(ScenarioError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(Aggregate {
        count: sorted.len(),
        min: sorted[0],
        p25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        p75: quantile_sorted(&sorted, 0.75),
        max: *sorted.last().unwrap(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
    })
}

pub const CSV_HEADER: &str =
    "planner,scenario,seed,solved,wall_time_ms,iterations,self_checks,obstacle_checks";

pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.planner,
            r.scenario,
            r.seed,
            r.solved,
            r.wall_time_ms,
            r.iterations,
            r.self_checks,
            r.obstacle_checks
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>, ScenarioError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(ScenarioError::EmptyInput)?;
    if header.trim() != CSV_HEADER {
        return Err(ScenarioError::Schema {
            path: "csv header".into(),
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(ScenarioError::Schema {
                path: format!("csv line {}", ln + 2),
                message: "wrong field count".into(),
            });
        }
        let parse_err = |what: &str| ScenarioError::Schema {
            path: format!("csv line {}", ln + 2),
            message: format!("bad {what}"),
        };
        out.push(RunRecord {
            planner: f[0].to_string(),
            scenario: f[1].to_string(),
            seed: f[2].parse().map_err(|_| parse_err("seed"))?,
            solved: f[3].parse().map_err(|_| parse_err("solved"))?,
            wall_time_ms: f[4].parse().map_err(|_| parse_err("wall_time_ms"))?,
            iterations: f[5].parse().map_err(|_| parse_err("iterations"))?,
            self_checks: f[6].parse().map_err(|_| parse_err("self_checks"))?,
            obstacle_checks: f[7].parse().map_err(|_| parse_err("obstacle_checks"))?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------

/// Renders a scenario (and optionally a solved path as `frames`
/// interpolated ghost poses with decreasing opacity) to a standalone
/// SVG document.
pub fn render_svg(scenario: &ScenarioFile, result: Option<&PlannedPath>, frames: usize) -> String {
    let ws = scenario.scene.workspace;
    let pad = 0.05 * (ws.max.x - ws.min.x).max(ws.max.y - ws.min.y);
    // SVG y grows downward; mirror about the workspace midline.
    let fy = |y: f64| ws.max.y + ws.min.y - y;
    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        ws.min.x - pad,
        ws.min.y - pad,
        (ws.max.x - ws.min.x) + 2.0 * pad,
        (ws.max.y - ws.min.y) + 2.0 * pad,
    ));
    svg.push('\n');
    let stroke = 0.02 * (ws.max.x - ws.min.x).max(ws.max.y - ws.min.y);
    svg.push_str(&format!(
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="white" stroke="#444" stroke-width="{}"/>"##,
        ws.min.x,
        ws.min.y,
        ws.max.x - ws.min.x,
        ws.max.y - ws.min.y,
        stroke * 0.5,
    ));
    svg.push('\n');
    for obs in &scenario.scene.obstacles {
        let pts: Vec<String> = obs
            .vertices()
            .iter()
            .map(|p| format!("{},{}", p.x, fy(p.y)))
            .collect();
        svg.push_str(&format!(
            r##"<polygon points="{}" fill="#9a9a9a" stroke="#6f6f6f" stroke-width="{}"/>"##,
            pts.join(" "),
            stroke * 0.3,
        ));
        svg.push('\n');
    }
    let (center, radius) = match scenario.target {
        TargetRegion::HeadDisc { center, radius }
        | TargetRegion::BothEndpointsDisc { center, radius } => (center, radius),
    };
    svg.push_str(&format!(
        r##"<circle cx="{}" cy="{}" r="{}" fill="#58c15f" fill-opacity="0.55"/>"##,
        center.x,
        fy(center.y),
        radius,
    ));
    svg.push('\n');

    // Poses to draw: the start alone, or frames along the solved path.
    let poses: Vec<(Configuration, f64)> = match result {
        None => vec![(scenario.start_configuration().unwrap(), 1.0)],
        Some(path) => {
            let flat: Vec<&Configuration> = if path.edge_samples.is_empty() {
                path.waypoints.iter().collect()
            } else {
                path.edge_samples.iter().flatten().collect()
            };
            let n = frames.max(1);
            (0..n)
                .map(|k| {
                    let idx = if n == 1 {
                        0
                    } else {
                        k * (flat.len() - 1) / (n - 1)
                    };
                    let opacity = 1.0 - 0.8 * (k as f64) / n.max(2) as f64;
                    (flat[idx].clone(), opacity)
                })
                .collect()
        }
    };
    for (cfg, opacity) in &poses {
        let pts: Vec<String> = cfg
            .anchors()
            .iter()
            .map(|p| format!("{},{}", p.x, fy(p.y)))
            .collect();
        svg.push_str(&format!(
            r##"<polyline points="{}" fill="none" stroke="#2a6fdb" stroke-width="{}" stroke-opacity="{}"/>"##,
            pts.join(" "),
            stroke,
            opacity,
        ));
        svg.push('\n');
        for (i, p) in cfg.anchors().iter().enumerate() {
            let (fill, r) = if i == 0 {
                ("#d43f3f", stroke * 1.6)
            } else {
                ("#2a6fdb", stroke * 1.1)
            };
            svg.push_str(&format!(
                r##"<circle cx="{}" cy="{}" r="{}" fill="{}" fill-opacity="{}"/>"##,
                p.x,
                fy(p.y),
                r,
                fill,
                opacity,
            ));
            svg.push('\n');
        }
    }
    svg.push_str("</svg>\n");
    svg
}
