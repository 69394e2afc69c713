use std::collections::{BTreeMap, BTreeSet};

use fsdv_core::model::{Classification, VehicleId};
use fsdv_core::sim::{self, broadcast_round, initialize, step_mobility, Event, Receiver};
use fsdv_core::{guard, trace, ScenarioConfig};
use proptest::prelude::*;

fn desk(n: u32, rogue_fraction: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_vehicles: n,
        rogue_fraction,
        duration_s: 5.0,
        seed,
        ..ScenarioConfig::default()
    }
}

#[test]
fn twenty_percent_rogues_all_caught() {
    let cfg = ScenarioConfig {
        duration_s: 10.0,
        ..desk(100, 0.2, 1)
    };
    assert_eq!(cfg.rounds(), 100);
    let r = sim::run(&cfg).unwrap();
    assert_eq!(r.tpr, Some(1.0));
}

#[test]
fn no_rogues_means_tpr_not_applicable() {
    for seed in 1..4 {
        let r = sim::run(&desk(80, 0.0, seed)).unwrap();
        assert_eq!(r.tpr, None);
        assert!(r.fpr.is_some());
        assert!(r.to_json().contains("\"tpr\": null"));
        assert_eq!(r.csv_row()[2], "NA");
    }
}

#[test]
fn identity_counts_at_initialization() {
    let w = initialize(&ScenarioConfig {
        sybil_ids_per_rogue: 3,
        ..desk(10, 0.4, 3)
    })
    .unwrap();
    assert_eq!(w.vehicles.iter().filter(|v| v.is_rogue).count(), 4);
    let fabricated: usize = w.vehicles.iter().map(|v| v.fabricated_ids.len()).sum();
    assert_eq!(fabricated, 12);
    assert_eq!(w.identity_count(), 22);
}

#[test]
fn rogue_sets_nest_across_fractions() {
    let rogues = |f: f64| -> BTreeSet<VehicleId> {
        initialize(&desk(200, f, 9))
            .unwrap()
            .vehicles
            .iter()
            .filter(|v| v.is_rogue)
            .map(|v| v.physical_id)
            .collect()
    };
    let mut prev = BTreeSet::new();
    for f in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let cur = rogues(f);
        assert!(prev.is_subset(&cur));
        prev = cur;
    }
}

#[test]
fn conservation_every_round() {
    let cfg = desk(150, 0.3, 4);
    let mut w = initialize(&cfg).unwrap();
    for _ in 0..30 {
        step_mobility(&mut w, &cfg).unwrap();
        let e = guard::select_guard(&w.vehicles).unwrap();
        let pos = w.vehicles.iter().find(|v| v.physical_id == e.guard).unwrap().position;
        let b = broadcast_round(&mut w, &cfg, Receiver { id: e.guard, position: pos });
        assert_eq!(b.delivered.len() + b.dropped.len(), b.emitted as usize);
        assert!(b.delivered.iter().any(|m| m.sender == e.guard));
    }
    assert_eq!(w.clock_ms, 30 * cfg.beacon_period_ms);
    for v in &w.vehicles {
        assert!((0.0..cfg.road_length_m).contains(&v.position.x));
    }
}

#[test]
fn observed_identities_bounded() {
    let cfg = desk(120, 0.4, 5);
    let r = sim::run(&cfg).unwrap();
    let bound = cfg.n_vehicles as usize + (cfg.rogue_count() * cfg.sybil_ids_per_rogue) as usize;
    assert!(r.identities_observed().len() <= bound);
    assert_eq!(r.tally.emitted, r.tally.dropped + r.tally.honest_classified + r.tally.rogue_classified);
}

#[test]
fn reports_are_reproducible() {
    let cfg = desk(100, 0.2, 77);
    let (a, la) = sim::run_logged(&cfg).unwrap();
    let (b, lb) = sim::run_logged(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(la, lb);
    let other = sim::run(&ScenarioConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(a.to_json(), other.to_json());
}

#[test]
fn zero_jitter_has_no_false_positives() {
    for seed in 1..4 {
        let cfg = ScenarioConfig {
            honest_jitter: 0.0,
            ..desk(200, 0.3, seed)
        };
        assert_eq!(sim::run(&cfg).unwrap().fpr, Some(0.0));
    }
}

#[test]
fn loss_cap_still_delivers() {
    let cfg = ScenarioConfig {
        base_loss: 1.0,
        ..desk(60, 0.0, 2)
    };
    assert_eq!(sim::loss_probability(&cfg, 10), sim::MAX_LOSS);
    let r = sim::run(&ScenarioConfig { duration_s: 30.0, ..cfg }).unwrap();
    // the guard's own beacon is never lost, one per round
    let others = r.tally.emitted - r.rounds;
    let loss = r.tally.dropped as f64 / others as f64;
    assert!((loss - sim::MAX_LOSS).abs() < 0.02, "loss {loss}");
    assert!(r.plr < sim::MAX_LOSS);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn plr_non_decreasing_in_density_coeff(seed in 0u64..1000, lo in 0.0..2.0f64, step in 0.0..3.0f64) {
        let base = ScenarioConfig { duration_s: 2.0, ..desk(120, 0.2, seed) };
        let a = sim::run(&ScenarioConfig { density_coeff: lo, ..base.clone() }).unwrap();
        let b = sim::run(&ScenarioConfig { density_coeff: lo + step, ..base }).unwrap();
        prop_assert!(b.plr >= a.plr);
    }
}

#[test]
fn trace_playback() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/platoon.fcd.xml");
    let t = trace::import_trace(path).unwrap();
    assert_eq!(t.steps.len(), 20);
    let cfg = ScenarioConfig {
        rogue_fraction: 0.25,
        ..ScenarioConfig::default()
    };
    let (r, log) = sim::run_with_trace(&cfg, t).unwrap();
    assert_eq!(r.rounds, 20);
    assert_eq!(r.aborted_rounds, 0);
    // 12 vehicles, 3 rogues with 3 fabricated ids each
    let senders: BTreeSet<VehicleId> = log
        .iter()
        .filter_map(|e| match e {
            Event::Beacon(b) | Event::Drop(b) => Some(b.sender),
            _ => None,
        })
        .collect();
    assert_eq!(senders.len(), 21);
    assert_eq!(r.tpr, Some(1.0));
}

#[test]
fn event_log_text_form() {
    let (_, log) = sim::run_logged(&desk(100, 0.4, 3)).unwrap();
    let mut out = Vec::new();
    sim::write_event_log(&mut out, &log).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    for line in text.lines() {
        *kinds.entry(line.split(',').next().unwrap()).or_default() += 1;
    }
    assert_eq!(kinds.values().sum::<usize>(), log.len());
    assert!(kinds.contains_key("BEACON") && kinds.contains_key("DETECT"));
    let detects = log.iter().filter(|e| matches!(e, Event::Detect { classification: Classification::Rogue, .. })).count();
    assert!(detects > 0);
}
