//! End-to-end exercise of the C ABI from the Rust side, plus a syntax
//! check of the generated header with a real C compiler when one is
//! available.

use std::ffi::{CStr, CString};
use std::process::Command;

use tileplan_ffi::*;

#[test]
fn build_plan_roundtrip_through_c_abi() {
    unsafe {
        let links = [1.0f64];
        let mut bundle: *mut TpBundle = std::ptr::null_mut();
        let st = tp_bundle_build(links.as_ptr(), 1, 24, 8, 0.05, 7, &mut bundle);
        assert!(st == TpStatus::TpOk, "{:?}", errmsg());
        assert_eq!(tp_bundle_size(bundle), 24);

        let dir = std::env::temp_dir().join("tileplan_ffi_test");
        std::fs::create_dir_all(&dir).unwrap();
        let bundle_path = CString::new(dir.join("toy.bundle").to_str().unwrap()).unwrap();
        assert!(tp_bundle_save(bundle, bundle_path.as_ptr()) == TpStatus::TpOk);

        let mut reloaded: *mut TpBundle = std::ptr::null_mut();
        assert!(tp_bundle_load(bundle_path.as_ptr(), &mut reloaded) == TpStatus::TpOk);
        assert_eq!(tp_bundle_size(reloaded), 24);

        // A scenario for the same single-link robot.
        let sc_json = r#"{
            "name": "ffi-smoke",
            "metadata": {"generator": null, "scale": null, "seed": null, "analog": false},
            "robot": {"link_lengths": [1.0], "variant": {"kind": "open_chain"}},
            "scene": {"obstacles": [], "workspace": {"min": {"x": -9.0, "y": -9.0}, "max": {"x": 9.0, "y": 9.0}}},
            "start": {"head": {"x": 0.0, "y": 0.0}, "angles": [0.0]},
            "target": {"kind": "head_disc", "center": {"x": 4.0, "y": 1.0}, "radius": 0.5}
        }"#;
        let sc_path = dir.join("smoke.scenario.json");
        std::fs::write(&sc_path, sc_json).unwrap();
        let sc_cpath = CString::new(sc_path.to_str().unwrap()).unwrap();
        let mut scenario: *mut TpScenario = std::ptr::null_mut();
        assert!(
            tp_scenario_load(sc_cpath.as_ptr(), &mut scenario) == TpStatus::TpOk,
            "{:?}",
            errmsg()
        );

        let params = TpPlanParams {
            max_iters: 50_000,
            time_budget_ms: 30_000,
            goal_bias: 0.05,
            step_rad: 0.5,
            k_start: 0,
            seed: 3,
        };
        let mut result: *mut TpResult = std::ptr::null_mut();
        let st = tp_plan(
            bundle,
            scenario,
            TpPlanner::TpPlannerTilingDrrt,
            &params,
            &mut result,
        );
        assert!(st == TpStatus::TpOk, "{:?}", errmsg());
        assert!(tp_result_outcome(result) == TpPlanOutcome::TpSolved);

        let mut stats = TpStats::default();
        assert!(tp_result_stats(result, &mut stats) == TpStatus::TpOk);
        assert_eq!(stats.self_collision_checks, 0);
        assert!(stats.obstacle_checks > 0);

        let n_wp = tp_result_waypoint_count(result);
        assert!(n_wp >= 2);
        let anchors = tp_result_anchor_count(result);
        assert_eq!(anchors, 2);
        let mut buf = vec![0.0f64; anchors * 2];
        assert!(
            tp_result_waypoint(result, n_wp - 1, buf.as_mut_ptr(), buf.len()) == TpStatus::TpOk
        );
        let head = (buf[0], buf[1]);
        let d = ((head.0 - 4.0).powi(2) + (head.1 - 1.0).powi(2)).sqrt();
        assert!(d <= 0.5 + 1e-9, "final head misses the target: {d}");

        let json = tp_result_to_json(result);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        assert!(text.contains("\"status\""));
        tp_string_free(json);

        // Mismatched robot is refused.
        let links2 = [1.0f64, 1.0];
        let mut bundle2: *mut TpBundle = std::ptr::null_mut();
        assert!(tp_bundle_build(links2.as_ptr(), 2, 8, 3, 0.05, 1, &mut bundle2) == TpStatus::TpOk);
        let mut r2: *mut TpResult = std::ptr::null_mut();
        assert!(
            tp_plan(bundle2, scenario, TpPlanner::TpPlannerRrt, &params, &mut r2)
                == TpStatus::TpErrRobotMismatch
        );

        tp_result_free(result);
        tp_scenario_free(scenario);
        tp_bundle_free(bundle);
        tp_bundle_free(reloaded);
        tp_bundle_free(bundle2);
    }
}

#[test]
fn error_paths_report_messages() {
    unsafe {
        let mut bundle: *mut TpBundle = std::ptr::null_mut();
        let bogus = CString::new("/nonexistent/path/bundle.bin").unwrap();
        assert!(tp_bundle_load(bogus.as_ptr(), &mut bundle) == TpStatus::TpErrIo);
        assert!(!errmsg().is_empty());

        let st = tp_bundle_build(std::ptr::null(), 0, 4, 2, 0.05, 0, &mut bundle);
        assert!(st == TpStatus::TpErrInvalidArg);
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tileplan.h");
    assert!(header.exists(), "header not generated by build script");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "tp_bundle_build",
        "tp_bundle_load",
        "tp_plan",
        "tp_result_stats",
        "tp_last_error",
    ] {
        assert!(text.contains(symbol), "header misses {symbol}");
    }
    // Compile-check with a real C compiler when present.
    for cc in ["clang", "cc", "gcc"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            let out = Command::new(cc)
                .args(["-std=c11", "-fsyntax-only", "-x", "c"])
                .arg(&header)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{cc} rejected the header:\n{}",
                String::from_utf8_lossy(&out.stderr)
            );
            return;
        }
    }
}

fn errmsg() -> String {
    unsafe {
        CStr::from_ptr(tp_last_error())
            .to_string_lossy()
            .into_owned()
    }
}
