//! C ABI over the tiling-roadmap planner.
//!
//! Everything crosses the boundary through opaque handles and plain C
//! types; a thread-local message string carries error detail next to
//! the numeric status codes. All entry points catch panics.
//!
//! The matching header is generated into `include/tileplan.h` at build
//! time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tileplan::planners::{self, PlanParams, PlanResult, PlanStatus, Query};
use tileplan::roadmap::{self, RoadmapBundle};
use tileplan::robot::RobotSpec;
use tileplan::scenario::{self, ScenarioFile, ScenarioKind};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    TpOk = 0,
    TpErrIo = 1,
    TpErrFormat = 2,
    TpErrInvalidArg = 3,
    TpErrRobotMismatch = 4,
    TpErrPlanning = 5,
    TpErrPanic = 6,
}

/// Planner selector.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TpPlanner {
    TpPlannerTilingDrrt = 0,
    TpPlannerRrt = 1,
}

/// Query parameters. Zero-initialize and override what you need;
/// zeros select the library defaults.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct TpPlanParams {
    pub max_iters: u64,
    pub time_budget_ms: u64,
    pub goal_bias: f64,
    pub step_rad: f64,
    pub k_start: u64,
    pub seed: u64,
}

/// Per-run counters mirrored from the planner.
#[repr(C)]
#[derive(Clone, Copy, Default)]
pub struct TpStats {
    pub iterations: u64,
    pub tree_size: u64,
    pub self_collision_checks: u64,
    pub obstacle_checks: u64,
    pub attachment_self_checks: u64,
    pub wall_time_ms: f64,
}

/// Terminal state of a finished plan call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum TpPlanOutcome {
    TpSolved = 0,
    TpTimeout = 2,
    TpStartIsolated = 3,
}

pub struct TpBundle(RoadmapBundle);
pub struct TpScenario(ScenarioFile);
pub struct TpResult(PlanResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap());
}

/// Message describing the most recent failure on this thread. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, TpStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(TpStatus::TpErrInvalidArg);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        TpStatus::TpErrInvalidArg
    })
}

fn guard(f: impl FnOnce() -> TpStatus) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            TpStatus::TpErrPanic
        }
    }
}

// ---------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------

/// Builds a roadmap bundle for a free-flying open chain.
/// `k == 0` selects the default neighbor count, `step <= 0` the
/// default interpolation resolution.
///
/// # Safety
/// `links` must point to `n_links` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_bundle_build(
    links: *const f64,
    n_links: usize,
    n: u32,
    k: u32,
    step: f64,
    seed: u64,
    out: *mut *mut TpBundle,
) -> TpStatus {
    guard(|| {
        if links.is_null() || out.is_null() || n_links == 0 {
            set_error("null or empty argument");
            return TpStatus::TpErrInvalidArg;
        }
        let lengths = std::slice::from_raw_parts(links, n_links).to_vec();
        let spec = match RobotSpec::open_chain(lengths) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return TpStatus::TpErrInvalidArg;
            }
        };
        let k = if k == 0 { None } else { Some(k as usize) };
        let step = if step > 0.0 { step } else { roadmap::DEFAULT_STEP };
        match roadmap::build_bundle(&spec, n as usize, k, step, seed) {
            Ok(b) => {
                *out = Box::into_raw(Box::new(TpBundle(b)));
                TpStatus::TpOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TpStatus::TpErrInvalidArg
            }
        }
    })
}

/// # Safety
/// `path` must be a valid C string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_bundle_load(path: *const c_char, out: *mut *mut TpBundle) -> TpStatus {
    guard(|| {
        let path = match cstr_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null output pointer");
            return TpStatus::TpErrInvalidArg;
        }
        match roadmap::load_bundle(Path::new(path)) {
            Ok(b) => {
                *out = Box::into_raw(Box::new(TpBundle(b)));
                TpStatus::TpOk
            }
            Err(e) => {
                set_error(&e.to_string());
                match e {
                    roadmap::RoadmapError::Io(_) => TpStatus::TpErrIo,
                    _ => TpStatus::TpErrFormat,
                }
            }
        }
    })
}

/// # Safety
/// `bundle` must come from this library; `path` must be a C string.
#[no_mangle]
pub unsafe extern "C" fn tp_bundle_save(bundle: *const TpBundle, path: *const c_char) -> TpStatus {
    guard(|| {
        let path = match cstr_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let Some(bundle) = bundle.as_ref() else {
            set_error("null bundle");
            return TpStatus::TpErrInvalidArg;
        };
        match roadmap::save_bundle(&bundle.0, Path::new(path)) {
            Ok(()) => TpStatus::TpOk,
            Err(e) => {
                set_error(&e.to_string());
                TpStatus::TpErrIo
            }
        }
    })
}

/// Number of base configurations in the bundle.
///
/// # Safety
/// `bundle` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_bundle_size(bundle: *const TpBundle) -> u32 {
    bundle.as_ref().map_or(0, |b| b.0.n() as u32)
}

/// # Safety
/// `bundle` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tp_bundle_free(bundle: *mut TpBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

// ---------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------

/// # Safety
/// `path` must be a valid C string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_scenario_load(
    path: *const c_char,
    out: *mut *mut TpScenario,
) -> TpStatus {
    guard(|| {
        let path = match cstr_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if out.is_null() {
            set_error("null output pointer");
            return TpStatus::TpErrInvalidArg;
        }
        match scenario::load_scenario(Path::new(path)) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(TpScenario(s)));
                TpStatus::TpOk
            }
            Err(e) => {
                set_error(&e.to_string());
                match e {
                    scenario::ScenarioError::Io(_) => TpStatus::TpErrIo,
                    _ => TpStatus::TpErrFormat,
                }
            }
        }
    })
}

/// Builds one of the built-in analog scenes: "tight", "coiled",
/// "bricks_open" or "gripper".
///
/// # Safety
/// `kind` must be a valid C string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tp_scenario_generate(
    kind: *const c_char,
    scale: f64,
    seed: u64,
    out: *mut *mut TpScenario,
) -> TpStatus {
    guard(|| {
        let kind = match cstr_arg(kind) {
            Ok(k) => k,
            Err(s) => return s,
        };
        if out.is_null() || !(scale > 0.0) || !scale.is_finite() {
            set_error("bad scale or null output");
            return TpStatus::TpErrInvalidArg;
        }
        let kind: ScenarioKind = match kind.parse() {
            Ok(k) => k,
            Err(_) => {
                set_error("unknown scenario kind");
                return TpStatus::TpErrInvalidArg;
            }
        };
        let sc = scenario::generate_scenario(kind, scale, seed);
        *out = Box::into_raw(Box::new(TpScenario(sc)));
        TpStatus::TpOk
    })
}

/// # Safety
/// `scenario` must come from this library; `path` must be a C string.
#[no_mangle]
pub unsafe extern "C" fn tp_scenario_save(
    scenario: *const TpScenario,
    path: *const c_char,
) -> TpStatus {
    guard(|| {
        let path = match cstr_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let Some(sc) = scenario.as_ref() else {
            set_error("null scenario");
            return TpStatus::TpErrInvalidArg;
        };
        match scenario::save_scenario(&sc.0, Path::new(path)) {
            Ok(()) => TpStatus::TpOk,
            Err(e) => {
                set_error(&e.to_string());
                TpStatus::TpErrIo
            }
        }
    })
}

/// # Safety
/// `scenario` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tp_scenario_free(scenario: *mut TpScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

// ---------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------

/// Runs a planner on a (bundle, scenario) pair. A successful call
/// always produces a result handle, whatever the planning outcome.
///
/// # Safety
/// All pointers must be valid; `params` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn tp_plan(
    bundle: *const TpBundle,
    scenario: *const TpScenario,
    planner: TpPlanner,
    params: *const TpPlanParams,
    out: *mut *mut TpResult,
) -> TpStatus {
    guard(|| {
        let (Some(bundle), Some(sc)) = (bundle.as_ref(), scenario.as_ref()) else {
            set_error("null bundle or scenario");
            return TpStatus::TpErrInvalidArg;
        };
        if out.is_null() {
            set_error("null output pointer");
            return TpStatus::TpErrInvalidArg;
        }
        if bundle.0.spec != sc.0.robot {
            set_error("bundle robot does not match scenario robot");
            return TpStatus::TpErrRobotMismatch;
        }
        let defaults = PlanParams::default();
        let p = params.as_ref();
        let pick = |v: u64, d: u64| if v == 0 { d } else { v };
        let params = PlanParams {
            max_iters: pick(p.map_or(0, |p| p.max_iters), defaults.max_iters as u64) as usize,
            time_budget_ms: pick(p.map_or(0, |p| p.time_budget_ms), defaults.time_budget_ms),
            goal_bias: p.map_or(defaults.goal_bias, |p| {
                if p.goal_bias > 0.0 {
                    p.goal_bias
                } else {
                    defaults.goal_bias
                }
            }),
            step_rad: p.map_or(defaults.step_rad, |p| {
                if p.step_rad > 0.0 {
                    p.step_rad
                } else {
                    defaults.step_rad
                }
            }),
            k_start: p.map_or(0, |p| p.k_start as usize),
            seed: p.map_or(0, |p| p.seed),
        };
        let start = match sc.0.start_configuration() {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return TpStatus::TpErrFormat;
            }
        };
        let query = Query {
            start,
            target: sc.0.target.clone(),
            scene: sc.0.scene.clone(),
        };
        let res = match planner {
            TpPlanner::TpPlannerTilingDrrt => planners::drrt_plan(&bundle.0, &query, &params),
            TpPlanner::TpPlannerRrt => planners::rrt_plan(&bundle.0.spec, &query, &params),
        };
        match res {
            Ok(r) => {
                *out = Box::into_raw(Box::new(TpResult(r)));
                TpStatus::TpOk
            }
            Err(e) => {
                set_error(&e.to_string());
                TpStatus::TpErrPlanning
            }
        }
    })
}

/// # Safety
/// `result` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_result_outcome(result: *const TpResult) -> TpPlanOutcome {
    match result.as_ref().map(|r| r.0.status) {
        Some(PlanStatus::Solved) => TpPlanOutcome::TpSolved,
        Some(PlanStatus::StartIsolated) => TpPlanOutcome::TpStartIsolated,
        _ => TpPlanOutcome::TpTimeout,
    }
}

/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tp_result_stats(result: *const TpResult, out: *mut TpStats) -> TpStatus {
    guard(|| {
        let (Some(r), Some(out)) = (result.as_ref(), out.as_mut()) else {
            set_error("null argument");
            return TpStatus::TpErrInvalidArg;
        };
        let s = &r.0.stats;
        *out = TpStats {
            iterations: s.iterations,
            tree_size: s.tree_size,
            self_collision_checks: s.self_collision_checks,
            obstacle_checks: s.obstacle_checks,
            attachment_self_checks: s.attachment_self_checks,
            wall_time_ms: s.wall_time_ms,
        };
        TpStatus::TpOk
    })
}

/// Number of waypoints in the solved path (0 when unsolved).
///
/// # Safety
/// `result` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_result_waypoint_count(result: *const TpResult) -> usize {
    result
        .as_ref()
        .and_then(|r| r.0.path.as_ref())
        .map_or(0, |p| p.waypoints.len())
}

/// Anchor points per configuration.
///
/// # Safety
/// `result` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_result_anchor_count(result: *const TpResult) -> usize {
    result
        .as_ref()
        .and_then(|r| r.0.path.as_ref())
        .and_then(|p| p.waypoints.first())
        .map_or(0, |c| c.anchor_count())
}

/// Copies waypoint `index` as interleaved x,y doubles (anchor_count
/// pairs) into `buf`.
///
/// # Safety
/// `buf` must hold at least `2 * tp_result_anchor_count` doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_result_waypoint(
    result: *const TpResult,
    index: usize,
    buf: *mut f64,
    buf_len: usize,
) -> TpStatus {
    guard(|| {
        let Some(path) = result.as_ref().and_then(|r| r.0.path.as_ref()) else {
            set_error("no path in result");
            return TpStatus::TpErrInvalidArg;
        };
        let Some(wp) = path.waypoints.get(index) else {
            set_error("waypoint index out of range");
            return TpStatus::TpErrInvalidArg;
        };
        let needed = wp.anchor_count() * 2;
        if buf.is_null() || buf_len < needed {
            set_error("buffer too small");
            return TpStatus::TpErrInvalidArg;
        }
        let out = std::slice::from_raw_parts_mut(buf, needed);
        for (i, a) in wp.anchors().iter().enumerate() {
            out[2 * i] = a.x;
            out[2 * i + 1] = a.y;
        }
        TpStatus::TpOk
    })
}

/// Serializes the full result (status, stats, waypoints, samples) to
/// JSON. Free the returned string with `tp_string_free`.
///
/// # Safety
/// `result` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tp_result_to_json(result: *const TpResult) -> *mut c_char {
    let Some(r) = result.as_ref() else {
        return std::ptr::null_mut();
    };
    match serde_json::to_string(&r.0) {
        Ok(s) => CString::new(s).map_or(std::ptr::null_mut(), CString::into_raw),
        Err(_) => std::ptr::null_mut(),
    }
}

/// # Safety
/// `s` must have been returned by `tp_result_to_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn tp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `result` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tp_result_free(result: *mut TpResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
