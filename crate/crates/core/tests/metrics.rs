//! Recounts detection metrics from the raw event log and compares them
//! with the report.

use std::collections::BTreeMap;

use fsdv_core::metrics::{average_throughput, overhead, packet_loss_ratio};
use fsdv_core::model::{Classification, VehicleId};
use fsdv_core::sim::{self, initialize, Event};
use fsdv_core::ScenarioConfig;

fn recount(cfg: &ScenarioConfig) {
    let (report, log) = sim::run_logged(cfg).unwrap();
    let world = initialize(cfg).unwrap();

    let mut flagged: BTreeMap<VehicleId, bool> = BTreeMap::new();
    let (mut emitted, mut dropped, mut bits, mut announce_bits) = (0u64, 0u64, 0u64, 0u64);
    for e in &log {
        match e {
            Event::Detect { sender, classification, .. } => {
                *flagged.entry(*sender).or_default() |= *classification == Classification::Rogue;
            }
            Event::Beacon(b) => {
                emitted += 1;
                bits += u64::from(b.size_bits);
            }
            Event::Drop(_) => {
                emitted += 1;
                dropped += 1;
            }
            Event::Announce(a) => announce_bits += 64 + 32 * a.rogue_ids.len() as u64 + 64,
        }
    }
    let (mut tp, mut rogues, mut fp, mut honest) = (0, 0, 0, 0);
    for (id, f) in &flagged {
        let (_, is_rogue) = world.owner_of(*id).unwrap();
        if is_rogue {
            rogues += 1;
            tp += u32::from(*f);
        } else {
            honest += 1;
            fp += u32::from(*f);
        }
    }
    let rate = |k: u32, n: u32| (n > 0).then(|| f64::from(k) / f64::from(n));
    assert_eq!(report.tpr, rate(tp, rogues));
    assert_eq!(report.fpr, rate(fp, honest));
    assert_eq!(report.plr, dropped as f64 / emitted as f64);
    assert_eq!(report.delivered_bits, bits);
    assert_eq!(report.avg_throughput, bits as f64 / cfg.duration_s);
    assert_eq!(report.overhead_bits, announce_bits);
    assert_eq!(report.overhead_bits, overhead(&log));
}

#[test]
fn report_matches_event_log() {
    for (n, f, jitter, seed) in [(60, 0.0, 0.05, 1), (120, 0.2, 0.05, 2), (200, 0.4, 0.3, 3), (80, 0.1, 0.5, 4)] {
        recount(&ScenarioConfig {
            n_vehicles: n,
            rogue_fraction: f,
            honest_jitter: jitter,
            duration_s: 4.0,
            seed,
            ..ScenarioConfig::default()
        });
    }
}

#[test]
fn throughput_and_loss_examples() {
    assert_eq!(average_throughput(2048 * 100, 10.0), 20480.0);
    assert_eq!(average_throughput(0, 10.0), 0.0);
    assert_eq!(packet_loss_ratio(100, 25).unwrap(), 0.25);
    assert!(packet_loss_ratio(10, 11).is_err());
}

#[test]
fn no_rogues_no_overhead() {
    let (r, log) = sim::run_logged(&ScenarioConfig {
        n_vehicles: 50,
        rogue_fraction: 0.0,
        duration_s: 3.0,
        ..ScenarioConfig::default()
    })
    .unwrap();
    assert_eq!(r.overhead_bits, 0);
    assert!(!log.iter().any(|e| matches!(e, Event::Announce(_))));
}
