//! Evaluation metrics and the per-run report.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::delay::DelayBreakdown;
use crate::error::{Error, Result};
use crate::model::{Classification, VehicleId};
use crate::probability::{
    correct_detection_probability, incorrect_detection_probability, BeaconTally,
    DetectionProbParams,
};
use crate::sim::Event;

/// Sentinel written wherever a rate is undefined.
pub const NOT_APPLICABLE: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// Physical vehicle behind the identity.
    pub owner: VehicleId,
    pub ground_truth: Classification,
    /// Rogue once the identity has been flagged in any round.
    pub classification: Classification,
    pub rounds_observed: u64,
}

/// Every identity the guard classified at least once.
pub type Ledger = BTreeMap<VehicleId, LedgerEntry>;

fn rate(ledger: &Ledger, truth: Classification) -> Option<f64> {
    let (total, flagged) = ledger
        .values()
        .filter(|e| e.ground_truth == truth)
        .fold((0u64, 0u64), |(t, f), e| {
            (t + 1, f + u64::from(e.classification == Classification::Rogue))
        });
    (total > 0).then(|| flagged as f64 / total as f64)
}

/// Fraction of rogue identities (physical and fabricated) flagged at least
/// once.
pub fn true_positive_rate(ledger: &Ledger) -> Option<f64> {
    rate(ledger, Classification::Rogue)
}

pub fn false_positive_rate(ledger: &Ledger) -> Option<f64> {
    rate(ledger, Classification::Honest)
}

/// Alternate count: a rogue vehicle is caught when any of its identities is.
pub fn true_positive_rate_per_vehicle(ledger: &Ledger) -> Option<f64> {
    let mut rogue_vehicles: BTreeMap<VehicleId, bool> = BTreeMap::new();
    for e in ledger.values().filter(|e| e.ground_truth == Classification::Rogue) {
        *rogue_vehicles.entry(e.owner).or_default() |= e.classification == Classification::Rogue;
    }
    (!rogue_vehicles.is_empty()).then(|| {
        rogue_vehicles.values().filter(|&&c| c).count() as f64 / rogue_vehicles.len() as f64
    })
}

pub fn packet_loss_ratio(emitted: u64, dropped: u64) -> Result<f64> {
    if dropped > emitted {
        return Err(Error::Accounting { emitted, dropped });
    }
    Ok(if emitted == 0 {
        0.0
    } else {
        dropped as f64 / emitted as f64
    })
}

/// Bits per second.
pub fn average_throughput(delivered_bits: u64, duration_s: f64) -> f64 {
    debug_assert!(duration_s > 0.0);
    delivered_bits as f64 / duration_s
}

/// Non-beacon bits: every rogue announcement with its threshold record.
pub fn overhead(events: &[Event]) -> u64 {
    events
        .iter()
        .map(|e| match e {
            Event::Announce(a) => a.overhead_bits(),
            _ => 0,
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub config_digest: String,
    pub rounds: u64,
    /// Rounds skipped because fewer than two vehicles were present.
    pub aborted_rounds: u64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tpr_per_vehicle: Option<f64>,
    pub plr: f64,
    pub avg_throughput: f64,
    pub overhead_bits: u64,
    pub delays: DelayBreakdown,
    pub prob_calibration: DetectionProbParams,
    pub tally: BeaconTally,
    pub delivered_bits: u64,
    pub clamped_rounds: u64,
    pub stale_dropped: u64,
    /// Rogue identities that never reached a guard.
    pub unobserved_rogue_identities: u64,
    pub ledger: Ledger,
}

#[derive(Serialize)]
struct LedgerRow {
    id: VehicleId,
    owner: VehicleId,
    ground_truth: Classification,
    classification: Classification,
    rounds_observed: u64,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    config_digest: &'a str,
    rounds: u64,
    aborted_rounds: u64,
    tpr: Option<f64>,
    fpr: Option<f64>,
    tpr_per_vehicle: Option<f64>,
    plr: f64,
    avg_throughput: f64,
    overhead_bits: u64,
    d_c: f64,
    d_q: Option<f64>,
    d_p: f64,
    d_t: Option<f64>,
    negative_queue_delay: bool,
    x_fog: f64,
    p_reach: f64,
    p_honest_correct: f64,
    p_rogue_correct: f64,
    p_correct: f64,
    p_incorrect_exact: f64,
    p_incorrect_approx: f64,
    emitted: u64,
    dropped: u64,
    delivered_bits: u64,
    clamped_rounds: u64,
    stale_dropped: u64,
    unobserved_rogue_identities: u64,
    ledger: Vec<LedgerRow>,
}

/// Columns of the CSV row form, in order.
pub const CSV_COLUMNS: [&str; 16] = [
    "config_digest",
    "rounds",
    "tpr",
    "fpr",
    "tpr_per_vehicle",
    "plr",
    "avg_throughput",
    "overhead_bits",
    "d_c",
    "d_q",
    "d_p",
    "d_t",
    "p_reach",
    "p_honest_correct",
    "p_rogue_correct",
    "unobserved_rogue_identities",
];

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NOT_APPLICABLE.to_string(), |x| x.to_string())
}

impl SimReport {
    fn doc(&self) -> ReportDoc<'_> {
        let p = &self.prob_calibration;
        let inc = incorrect_detection_probability(p);
        ReportDoc {
            config_digest: &self.config_digest,
            rounds: self.rounds,
            aborted_rounds: self.aborted_rounds,
            tpr: self.tpr,
            fpr: self.fpr,
            tpr_per_vehicle: self.tpr_per_vehicle,
            plr: self.plr,
            avg_throughput: self.avg_throughput,
            overhead_bits: self.overhead_bits,
            d_c: self.delays.d_c,
            d_q: self.delays.d_q,
            d_p: self.delays.d_p,
            d_t: self.delays.d_t,
            negative_queue_delay: self.delays.negative_queue_delay,
            x_fog: p.x_fog,
            p_reach: p.p_reach,
            p_honest_correct: p.p_honest_correct,
            p_rogue_correct: p.p_rogue_correct,
            p_correct: correct_detection_probability(p).probability,
            p_incorrect_exact: inc.exact,
            p_incorrect_approx: inc.approx,
            emitted: self.tally.emitted,
            dropped: self.tally.dropped,
            delivered_bits: self.delivered_bits,
            clamped_rounds: self.clamped_rounds,
            stale_dropped: self.stale_dropped,
            unobserved_rogue_identities: self.unobserved_rogue_identities,
            ledger: self
                .ledger
                .iter()
                .map(|(id, e)| LedgerRow {
                    id: *id,
                    owner: e.owner,
                    ground_truth: e.ground_truth,
                    classification: e.classification,
                    rounds_observed: e.rounds_observed,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc()).expect("report serializes")
    }

    pub fn csv_row(&self) -> Vec<String> {
        let p = &self.prob_calibration;
        vec![
            self.config_digest.clone(),
            self.rounds.to_string(),
            fmt_opt(self.tpr),
            fmt_opt(self.fpr),
            fmt_opt(self.tpr_per_vehicle),
            self.plr.to_string(),
            self.avg_throughput.to_string(),
            self.overhead_bits.to_string(),
            self.delays.d_c.to_string(),
            fmt_opt(self.delays.d_q),
            self.delays.d_p.to_string(),
            fmt_opt(self.delays.d_t),
            p.p_reach.to_string(),
            p.p_honest_correct.to_string(),
            p.p_rogue_correct.to_string(),
            self.unobserved_rogue_identities.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_COLUMNS).map_err(io)?;
        w.write_record(self.csv_row()).map_err(io)?;
        w.flush()?;
        Ok(())
    }

    pub fn identities_observed(&self) -> BTreeSet<VehicleId> {
        self.ledger.keys().copied().collect()
    }
}
