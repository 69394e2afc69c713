use std::ffi::{CStr, CString};
use std::ptr;

use fsdv_ffi::*;

fn small_config() -> *mut FsdvConfig {
    let cfg = fsdv_config_default();
    unsafe {
        assert_eq!(fsdv_config_set_n_vehicles(cfg, 60), FsdvStatus::Ok);
        assert_eq!(fsdv_config_set_duration(cfg, 2.0), FsdvStatus::Ok);
        assert_eq!(fsdv_config_set_seed(cfg, 7), FsdvStatus::Ok);
    }
    cfg
}

#[test]
fn run_and_read_metrics() {
    let cfg = small_config();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(fsdv_run(cfg, &mut report), FsdvStatus::Ok);
        let mut rounds = 0.0;
        assert_eq!(fsdv_report_metric(report, FsdvMetric::Rounds, &mut rounds), FsdvStatus::Ok);
        assert_eq!(rounds, 20.0);
        let mut plr = -1.0;
        assert_eq!(fsdv_report_metric(report, FsdvMetric::Plr, &mut plr), FsdvStatus::Ok);
        assert!((0.0..=1.0).contains(&plr));

        let json = fsdv_report_json(report);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        fsdv_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["rounds"], 20);

        fsdv_report_free(report);
        fsdv_config_free(cfg);
    }
}

#[test]
fn tpr_not_applicable_without_rogues() {
    let cfg = small_config();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(fsdv_config_set_rogue_fraction(cfg, 0.0), FsdvStatus::Ok);
        assert_eq!(fsdv_run(cfg, &mut report), FsdvStatus::Ok);
        let mut tpr = 42.0;
        assert_eq!(fsdv_report_metric(report, FsdvMetric::Tpr, &mut tpr), FsdvStatus::NotApplicable);
        assert_eq!(tpr, 42.0);
        fsdv_report_free(report);
        fsdv_config_free(cfg);
    }
}

#[test]
fn rejected_setter_keeps_previous_value() {
    let cfg = small_config();
    unsafe {
        assert_eq!(fsdv_config_set_rogue_fraction(cfg, 0.9), FsdvStatus::Validation);
        let msg = CStr::from_ptr(fsdv_last_error()).to_str().unwrap();
        assert!(msg.contains("rogue_fraction"), "{msg}");
        assert_eq!(fsdv_config_set_alpha(cfg, 0.0), FsdvStatus::Validation);
        // still runnable with the earlier values
        let mut report = ptr::null_mut();
        assert_eq!(fsdv_run(cfg, &mut report), FsdvStatus::Ok);
        fsdv_report_free(report);
        fsdv_config_free(cfg);
    }
}

#[test]
fn parse_errors_map_to_status() {
    let mut cfg = ptr::null_mut();
    let good = CString::new("[scenario]\nn_vehicles = 40\nduration_s = 1.0\n").unwrap();
    let bad = CString::new("[scenario]\nn_vehicles = \"many\"\n").unwrap();
    let missing = CString::new("/nonexistent/fsdv.toml").unwrap();
    unsafe {
        assert_eq!(fsdv_config_parse(good.as_ptr(), &mut cfg), FsdvStatus::Ok);
        assert!(!cfg.is_null());
        fsdv_config_free(cfg);
        cfg = ptr::null_mut();
        assert_eq!(fsdv_config_parse(bad.as_ptr(), &mut cfg), FsdvStatus::Parse);
        assert!(cfg.is_null());
        assert_eq!(fsdv_config_load(missing.as_ptr(), &mut cfg), FsdvStatus::Io);
        assert_eq!(fsdv_config_parse(ptr::null(), &mut cfg), FsdvStatus::NullPointer);
        assert_eq!(fsdv_run(ptr::null(), ptr::null_mut()), FsdvStatus::NullPointer);
    }
}

#[test]
fn analytic_wrappers() {
    unsafe {
        let (mut s, mut clamped) = (0.0, false);
        assert_eq!(fsdv_guard_speed(50.0, 30.0, 100.0, &mut s, &mut clamped), FsdvStatus::Ok);
        assert_eq!((s, clamped), (15.0, false));
        assert_eq!(fsdv_guard_speed(150.0, 30.0, 100.0, &mut s, &mut clamped), FsdvStatus::Ok);
        assert_eq!((s, clamped), (0.0, true));

        assert_eq!(fsdv_classify(20.0, 10.0, 6.0), 1);
        assert_eq!(fsdv_classify(20.0, 18.0, 6.0), 0);
        assert_eq!(fsdv_classify(20.0, 14.0, 6.0), 1);

        let mut d = 0.0;
        assert_eq!(fsdv_communication_delay(1000, 1000.0, 1.0, 1.0, 1.0, &mut d), FsdvStatus::Ok);
        assert_eq!(d, 1.0);
        assert_eq!(fsdv_communication_delay(1000, 1000.0, 0.0, 1.0, 1.0, &mut d), FsdvStatus::ZeroCapacity);

        let mut neg = false;
        assert_eq!(fsdv_queuing_delay(5.0, 10.0, true, &mut d, &mut neg), FsdvStatus::Ok);
        assert!((d - 0.1).abs() < 1e-15 && !neg);
        assert_eq!(fsdv_queuing_delay(0.5, 10.0, false, &mut d, &mut neg), FsdvStatus::Ok);
        assert!(d < 0.0 && neg);
        assert_eq!(fsdv_queuing_delay(10.0, 10.0, false, &mut d, ptr::null_mut()), FsdvStatus::UnstableQueue);

        assert_eq!(fsdv_processing_delay(1000, 10.0, 1e6, &mut d), FsdvStatus::Ok);
        assert!((d - 0.01).abs() < 1e-15);

        let (mut exact, mut approx) = (0.0, 0.0);
        assert_eq!(fsdv_correct_detection_probability(1.0, 0.9, 0.5, 0.4, &mut d), FsdvStatus::Ok);
        assert!((d - 0.81).abs() < 1e-12);
        assert_eq!(
            fsdv_incorrect_detection_probability(1.0, 0.9, 0.5, 0.4, &mut exact, &mut approx),
            FsdvStatus::Ok
        );
        assert!((exact - 0.19).abs() < 1e-12);
        assert!((approx - 0.64).abs() < 1e-12);
        assert_eq!(fsdv_correct_detection_probability(1.0, 1.5, 0.5, 0.4, &mut d), FsdvStatus::Validation);
    }
}

#[test]
fn guard_election_over_arrays() {
    let xs = [0.0, 10.0, 20.0];
    let ys = [0.0, 0.0, 0.0];
    let ids = [1u32, 2, 3];
    let mut g = 0;
    unsafe {
        assert_eq!(fsdv_select_guard(xs.as_ptr(), ys.as_ptr(), ids.as_ptr(), 3, &mut g), FsdvStatus::Ok);
        assert_eq!(g, 2);
        assert_eq!(
            fsdv_select_guard(xs.as_ptr(), ys.as_ptr(), ids.as_ptr(), 1, &mut g),
            FsdvStatus::GuardUnavailable
        );
        assert_eq!(
            fsdv_select_guard(ptr::null(), ptr::null(), ptr::null(), 0, &mut g),
            FsdvStatus::GuardUnavailable
        );
    }
}

#[test]
fn header_declares_entry_points() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fsdv.h")).unwrap();
    for name in [
        "FSDV_H",
        "typedef struct FsdvConfig FsdvConfig;",
        "FSDV_STATUS_NOT_APPLICABLE",
        "fsdv_run(",
        "fsdv_report_metric(",
        "fsdv_last_error(",
        "fsdv_select_guard(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
