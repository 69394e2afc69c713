//! Detection loop run at the guard node each beacon round.
//!
//! The guard keeps a neighbor table of every identity it has heard from,
//! derives the regional speed from Greenshield's model using the observed
//! density, and flags any sender whose reported speed falls short of that
//! regional speed by at least the dynamic threshold. Senders reporting a
//! speed above the regional estimate are never flagged: the attack being
//! detected is a fake congestion illusion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guard::{self, GuardElection};
use crate::model::{BeaconMessage, Classification, VehicleId, VehicleState};
use crate::traffic::{self, DensitySample, GreenshieldParams};

/// Fixed part of a rogue announcement.
pub const ANNOUNCE_HEADER_BITS: u64 = 64;
/// Each announced rogue id.
pub const ANNOUNCE_BITS_PER_ID: u64 = 32;
/// Regional speed and threshold (two 32-bit floats) carried with every
/// announcement.
pub const THRESHOLD_RECORD_BITS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub sender: VehicleId,
    pub last_timestamp: u64,
    pub last_reported_speed: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborTable {
    entries: BTreeMap<VehicleId, NeighborEntry>,
}

impl NeighborTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: VehicleId) -> Option<&NeighborEntry> {
        self.entries.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NeighborEntry> {
        self.entries.values()
    }

    /// Adds an unseen sender or refreshes a known one. A beacon older than
    /// the stored timestamp is rejected and the table is left untouched.
    pub fn update(&mut self, beacon: &BeaconMessage) -> Result<()> {
        match self.entries.get_mut(&beacon.sender) {
            Some(entry) => {
                if beacon.timestamp < entry.last_timestamp {
                    return Err(Error::StaleBeacon {
                        sender: beacon.sender,
                        stored: entry.last_timestamp,
                        got: beacon.timestamp,
                    });
                }
                entry.last_timestamp = beacon.timestamp;
                entry.last_reported_speed = beacon.reported_speed;
            }
            None => {
                self.entries.insert(
                    beacon.sender,
                    NeighborEntry {
                        sender: beacon.sender,
                        last_timestamp: beacon.timestamp,
                        last_reported_speed: beacon.reported_speed,
                    },
                );
            }
        }
        Ok(())
    }
}

pub fn update_neighbors(table: &mut NeighborTable, beacon: &BeaconMessage) -> Result<()> {
    table.update(beacon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdPolicy {
    Fixed { value: f64 },
    /// Threshold is `alpha` times the regional speed, so it shrinks as
    /// traffic slows.
    SpeedProportional { alpha: f64 },
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::SpeedProportional { alpha: 0.3 }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdPolicy::Fixed { value } if !(value.is_finite() && value >= 0.0) => Err(
                Error::config("detector.threshold_fixed", "must be a finite nonnegative speed"),
            ),
            ThresholdPolicy::SpeedProportional { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                Err(Error::config("detector.alpha", format!("{alpha} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

pub fn dynamic_threshold(s_g: f64, policy: &ThresholdPolicy) -> f64 {
    match *policy {
        ThresholdPolicy::Fixed { value } => value,
        ThresholdPolicy::SpeedProportional { alpha } => alpha * s_g,
    }
}

/// Honest only when the shortfall is strictly below the threshold; a
/// shortfall exactly equal to it is rogue.
pub fn classify(s_g: f64, s_rcvd: f64, s_th: f64) -> Classification {
    if s_g - s_rcvd < s_th {
        Classification::Honest
    } else {
        Classification::Rogue
    }
}

/// Which identities count as `N` in the density product.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityCount {
    /// Every distinct sender heard this round, fabricated ones included.
    #[default]
    ObservedIds,
    /// Only senders that are known physical vehicles (simulator ground truth).
    PhysicalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub policy: ThresholdPolicy,
    pub greenshield: GreenshieldParams,
    pub density_count: DensityCount,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeaconVerdict {
    pub sender: VehicleId,
    pub reported_speed: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRound {
    pub guard: VehicleId,
    pub density: DensitySample,
    pub s_g: f64,
    pub s_th: f64,
    /// Guard speed hit the zero floor because density exceeded jam density.
    pub clamped: bool,
    pub classifications: BTreeMap<VehicleId, Classification>,
    /// Ids classified rogue, ascending.
    pub rogue_list: Vec<VehicleId>,
    /// One verdict per accepted beacon, in processing order.
    pub verdicts: Vec<BeaconVerdict>,
    pub stale_dropped: u64,
}

impl DetectionRound {
    pub fn announcement(&self, round_index: u64) -> Option<Announcement> {
        if self.rogue_list.is_empty() {
            return None;
        }
        Some(Announcement {
            round_index,
            guard: self.guard,
            s_g: self.s_g,
            s_th: self.s_th,
            rogue_ids: self.rogue_list.clone(),
        })
    }
}

/// Rogue-list broadcast sent by the guard at the end of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Announcement {
    pub round_index: u64,
    pub guard: VehicleId,
    pub s_g: f64,
    pub s_th: f64,
    pub rogue_ids: Vec<VehicleId>,
}

impl Announcement {
    pub fn message_bits(&self) -> u64 {
        ANNOUNCE_HEADER_BITS + ANNOUNCE_BITS_PER_ID * self.rogue_ids.len() as u64
    }

    /// Everything this broadcast adds to the channel beyond beacons.
    pub fn overhead_bits(&self) -> u64 {
        self.message_bits() + THRESHOLD_RECORD_BITS
    }

    /// `round_index,guard_id,s_g,s_th,id1,id2,...`
    pub fn to_record(&self) -> String {
        let mut s = format!("{},{},{},{}", self.round_index, self.guard, self.s_g, self.s_th);
        for id in &self.rogue_ids {
            let _ = write!(s, ",{id}");
        }
        s
    }
}

/// Guard-side detector with a neighbor table that persists across rounds.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    table: NeighborTable,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Self {
        Detector {
            config,
            table: NeighborTable::new(),
        }
    }

    pub fn table(&self) -> &NeighborTable {
        &self.table
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Runs one round for an already elected guard. `physical` is only
    /// consulted under [`DensityCount::PhysicalOnly`].
    pub fn round(
        &mut self,
        guard: VehicleId,
        beacons: &[BeaconMessage],
        physical: &BTreeSet<VehicleId>,
    ) -> DetectionRound {
        let mut ordered: Vec<&BeaconMessage> = beacons.iter().collect();
        ordered.sort_by_key(|b| b.timestamp);

        let mut accepted = Vec::with_capacity(ordered.len());
        let mut stale_dropped = 0;
        for b in ordered {
            match self.table.update(b) {
                Ok(()) => accepted.push(b),
                Err(_) => stale_dropped += 1,
            }
        }

        let senders: BTreeSet<VehicleId> = accepted.iter().map(|b| b.sender).collect();
        let vehicle_count = match self.config.density_count {
            DensityCount::ObservedIds => senders.len(),
            DensityCount::PhysicalOnly => senders.iter().filter(|id| physical.contains(id)).count(),
        } as u64;
        let per_id = if senders.is_empty() {
            0
        } else {
            (accepted.len() / senders.len()) as u64
        };
        let density = traffic::density(per_id, vehicle_count);
        let speed = traffic::guard_speed(density.rho as f64, &self.config.greenshield);
        let s_g = speed.speed;
        let s_th = dynamic_threshold(s_g, &self.config.policy);

        let mut classifications = BTreeMap::new();
        let mut verdicts = Vec::with_capacity(accepted.len());
        for b in accepted {
            let c = classify(s_g, b.reported_speed, s_th);
            verdicts.push(BeaconVerdict {
                sender: b.sender,
                reported_speed: b.reported_speed,
                classification: c,
            });
            let slot = classifications.entry(b.sender).or_insert(c);
            if c == Classification::Rogue {
                *slot = Classification::Rogue;
            }
        }
        let rogue_list = classifications
            .iter()
            .filter(|(_, c)| **c == Classification::Rogue)
            .map(|(id, _)| *id)
            .collect();

        DetectionRound {
            guard,
            density,
            s_g,
            s_th,
            clamped: speed.clamped,
            classifications,
            rogue_list,
            verdicts,
            stale_dropped,
        }
    }
}

/// Elects the guard among `vehicles` and runs a single round with a fresh
/// neighbor table.
pub fn run_detection_round(
    beacons: &[BeaconMessage],
    vehicles: &[VehicleState],
    config: &DetectorConfig,
) -> Result<DetectionRound> {
    let election: GuardElection = guard::select_guard(vehicles)?;
    let physical = vehicles.iter().map(|v| v.physical_id).collect();
    Ok(Detector::new(*config).round(election.guard, beacons, &physical))
}
