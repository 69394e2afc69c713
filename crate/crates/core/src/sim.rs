//! Deterministic discrete-time simulation.
//!
//! Vehicles circulate on a ring road laid out along the x axis. Every beacon
//! period the world advances, the vehicle nearest the centroid becomes the
//! guard, every identity within its transmission range beacons over a lossy
//! channel, and the guard runs one detection round on what arrives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ScenarioConfig, LANE_WIDTH_M};
use crate::delay::{self, ChannelParams, ComputeParams, DelayBreakdown, QueueParams};
use crate::detector::{Announcement, Detector};
use crate::error::{Error, Result};
use crate::guard;
use crate::metrics::{self, LedgerEntry, SimReport};
use crate::model::{
    euclidean_distance, BeaconMessage, Classification, Position, VehicleId, VehicleState,
    FABRICATED_ID_BASE,
};
use crate::probability::{self, BeaconTally};
use crate::trace::Trace;

/// Channel loss never exceeds this.
pub const MAX_LOSS: f64 = 0.95;
/// Fabricated identities claim a position within this many meters of the
/// rogue's own.
pub const SYBIL_POSITION_JITTER_M: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Beacon(BeaconMessage),
    Drop(BeaconMessage),
    Detect {
        round: u64,
        sender: VehicleId,
        reported_speed: f64,
        classification: Classification,
    },
    Announce(Announcement),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let beacon = |f: &mut fmt::Formatter<'_>, tag: &str, b: &BeaconMessage| {
            write!(
                f,
                "{tag},{},{},{},{},{},{}",
                b.sender, b.timestamp, b.position.x, b.position.y, b.reported_speed, b.size_bits
            )
        };
        match self {
            Event::Beacon(b) => beacon(f, "BEACON", b),
            Event::Drop(b) => beacon(f, "DROP", b),
            Event::Detect {
                round,
                sender,
                reported_speed,
                classification,
            } => write!(f, "DETECT,{round},{sender},{reported_speed},{classification}"),
            Event::Announce(a) => write!(f, "ANNOUNCE,{}", a.to_record()),
        }
    }
}

pub fn write_event_log<W: Write>(mut out: W, events: &[Event]) -> Result<()> {
    for e in events {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Mobility {
    Ring,
    Trace {
        trace: Trace,
        next_step: usize,
        /// Every trace vehicle with its rogue marking, indexed by trace order.
        roster: Vec<VehicleState>,
    },
}

#[derive(Debug, Clone)]
pub struct World {
    pub clock_ms: u64,
    pub round: u64,
    /// Vehicles present this round, ordered by physical id.
    pub vehicles: Vec<VehicleState>,
    pub event_log: Vec<Event>,
    rng: ChaCha8Rng,
    mobility: Mobility,
    /// Ground truth for every identity that can ever broadcast.
    owners: BTreeMap<VehicleId, (VehicleId, bool)>,
}

impl World {
    pub fn identity_count(&self) -> usize {
        self.owners.len()
    }

    pub fn owner_of(&self, id: VehicleId) -> Option<(VehicleId, bool)> {
        self.owners.get(&id).copied()
    }

    fn mark_rogues(&mut self, rogue_count: usize, sybil_ids: u32) {
        let mut order: Vec<usize> = (0..self.vehicles.len()).collect();
        order.shuffle(&mut self.rng);
        let mut rogue_idx: Vec<usize> = order.into_iter().take(rogue_count).collect();
        rogue_idx.sort_unstable();

        let mut next = FABRICATED_ID_BASE;
        for i in rogue_idx {
            let v = &mut self.vehicles[i];
            v.is_rogue = true;
            for _ in 0..sybil_ids {
                v.fabricated_ids.insert(VehicleId(next));
                next += 1;
            }
        }
        self.owners.clear();
        for v in &self.vehicles {
            for id in v.identities() {
                self.owners.insert(id, (v.physical_id, v.is_rogue));
            }
        }
    }
}

pub fn initialize(config: &ScenarioConfig) -> Result<World> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vehicles = (0..config.n_vehicles)
        .map(|i| {
            let x = rng.random_range(0.0..config.road_length_m);
            let lane = rng.random_range(0..config.lanes);
            let speed = rng.random_range(config.speed_min_mps..=config.speed_max_mps);
            VehicleState {
                lane,
                ..VehicleState::honest(
                    i + 1,
                    Position::new(x, f64::from(lane) * LANE_WIDTH_M),
                    speed,
                )
            }
        })
        .collect();
    let mut world = World {
        clock_ms: 0,
        round: 0,
        vehicles,
        event_log: Vec::new(),
        rng,
        mobility: Mobility::Ring,
        owners: BTreeMap::new(),
    };
    world.mark_rogues(config.rogue_count() as usize, config.sybil_ids_per_rogue);
    Ok(world)
}

/// Builds a world that replays `trace` instead of ring-road mobility.
pub fn initialize_with_trace(config: &ScenarioConfig, trace: Trace) -> Result<World> {
    config.validate()?;
    trace.validate()?;
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vehicles = (0..trace.vehicle_count() as u32)
        .map(|i| VehicleState::honest(i + 1, Position::ORIGIN, 0.0))
        .collect();
    let mut world = World {
        clock_ms: 0,
        round: 0,
        vehicles,
        event_log: Vec::new(),
        rng,
        mobility: Mobility::Ring,
        owners: BTreeMap::new(),
    };
    let rogues = (config.rogue_fraction * world.vehicles.len() as f64 + 1e-9).floor() as usize;
    world.mark_rogues(rogues, config.sybil_ids_per_rogue);
    world.mobility = Mobility::Trace {
        trace,
        next_step: 0,
        roster: std::mem::take(&mut world.vehicles),
    };
    Ok(world)
}

/// Moves every vehicle forward by `speed * period`, wrapping at the road end.
pub fn advance_positions(vehicles: &mut [VehicleState], period_s: f64, road_length_m: f64) {
    for v in vehicles {
        v.position.x = (v.position.x + v.true_speed * period_s).rem_euclid(road_length_m);
    }
}

/// Physical vehicles within `range` of each vehicle along the ring,
/// the vehicle itself included.
fn ring_neighbor_counts(vehicles: &[VehicleState], range: f64, road: f64) -> Vec<usize> {
    let n = vehicles.len();
    if 2.0 * range >= road {
        return vec![n; n];
    }
    let mut xs: Vec<f64> = vehicles.iter().map(|v| v.position.x).collect();
    xs.sort_by(f64::total_cmp);
    let count = |lo: f64, hi: f64| {
        xs.partition_point(|&x| x <= hi) - xs.partition_point(|&x| x < lo)
    };
    vehicles
        .iter()
        .map(|v| {
            let x = v.position.x;
            let (lo, hi) = (x - range, x + range);
            if lo < 0.0 {
                count(0.0, hi) + count(lo + road, road)
            } else if hi >= road {
                count(lo, road) + count(0.0, hi - road)
            } else {
                count(lo, hi)
            }
        })
        .collect()
}

/// Advances the world by one beacon period.
///
/// On the ring, positions advance with the current speeds, then every
/// speed is reset to Greenshield's equilibrium for the vehicle's local
/// density times a uniform jitter factor. Under trace playback the next
/// recorded timestep replaces positions and speeds.
pub fn step_mobility(world: &mut World, config: &ScenarioConfig) -> Result<()> {
    let period_s = config.beacon_period_ms as f64 / 1000.0;
    world.clock_ms += config.beacon_period_ms;
    world.round += 1;
    match &mut world.mobility {
        Mobility::Ring => {
            advance_positions(&mut world.vehicles, period_s, config.road_length_m);
            let counts =
                ring_neighbor_counts(&world.vehicles, config.tx_range_m, config.road_length_m);
            let gs = &config.greenshield;
            for (v, local) in world.vehicles.iter_mut().zip(counts) {
                let eq = crate::traffic::guard_speed(local as f64, gs).speed;
                let u: f64 = world.rng.random_range(-1.0..=1.0);
                let speed = eq * (1.0 + config.honest_jitter * u);
                v.true_speed = speed.clamp(0.0, gs.s_max);
            }
        }
        Mobility::Trace {
            trace,
            next_step,
            roster,
        } => {
            let step = trace.steps.get(*next_step).ok_or_else(|| Error::Trace {
                path: "fcd-export".into(),
                reason: "playback past last timestep".into(),
            })?;
            *next_step += 1;
            let mut vehicles: Vec<VehicleState> = step
                .iter()
                .map(|sample| VehicleState {
                    position: sample.position,
                    true_speed: sample.speed.max(0.0),
                    lane: sample.lane,
                    ..roster[sample.vehicle].clone()
                })
                .collect();
            vehicles.sort_by_key(|v| v.physical_id);
            world.vehicles = vehicles;
        }
    }
    Ok(())
}

/// The station whose reception scope defines the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub id: VehicleId,
    pub position: Position,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Broadcast {
    pub emitted: u64,
    pub delivered: Vec<BeaconMessage>,
    pub dropped: Vec<BeaconMessage>,
    pub p_loss: f64,
    /// Physical vehicles inside the receiver's range.
    pub regional_vehicles: usize,
    pub regional_mean_speed: f64,
}

pub fn loss_probability(config: &ScenarioConfig, transmitters: usize) -> f64 {
    (config.base_loss + config.density_coeff * transmitters as f64 / config.greenshield.rho_max)
        .min(MAX_LOSS)
}

/// One beacon from every identity within range of `receiver`. Honest
/// vehicles report their true speed; rogues report a fraction of the
/// regional mean under every identity they own. Each beacon except the
/// receiver's own is dropped independently with the density-dependent
/// loss probability.
pub fn broadcast_round(world: &mut World, config: &ScenarioConfig, receiver: Receiver) -> Broadcast {
    let regional: Vec<usize> = world
        .vehicles
        .iter()
        .enumerate()
        .filter(|(_, v)| euclidean_distance(v.position, receiver.position) <= config.tx_range_m)
        .map(|(i, _)| i)
        .collect();
    if regional.is_empty() {
        return Broadcast::default();
    }
    let mean_speed = regional
        .iter()
        .map(|&i| world.vehicles[i].true_speed)
        .sum::<f64>()
        / regional.len() as f64;
    let transmitters: usize = regional
        .iter()
        .map(|&i| 1 + world.vehicles[i].fabricated_ids.len())
        .sum();
    let p_loss = loss_probability(config, transmitters);
    let rogue_report = config.rogue_speed_factor * mean_speed;

    let mut out = Broadcast {
        p_loss,
        regional_vehicles: regional.len(),
        regional_mean_speed: mean_speed,
        ..Broadcast::default()
    };
    for i in regional {
        let v = &world.vehicles[i];
        let mut beacons = Vec::with_capacity(1 + v.fabricated_ids.len());
        let speed = if v.is_rogue { rogue_report } else { v.true_speed };
        beacons.push(BeaconMessage {
            size_bits: config.beacon_size_bits,
            ..BeaconMessage::new(v.physical_id, world.clock_ms, v.position, speed)
        });
        for &fid in &v.fabricated_ids {
            let dx = world
                .rng
                .random_range(-SYBIL_POSITION_JITTER_M..=SYBIL_POSITION_JITTER_M);
            let pos = Position::new(v.position.x + dx, v.position.y);
            beacons.push(BeaconMessage {
                size_bits: config.beacon_size_bits,
                ..BeaconMessage::new(fid, world.clock_ms, pos, rogue_report)
            });
        }
        for b in beacons {
            out.emitted += 1;
            let lost = b.sender != receiver.id && world.rng.random::<f64>() < p_loss;
            if lost {
                world.event_log.push(Event::Drop(b));
                out.dropped.push(b);
            } else {
                world.event_log.push(Event::Beacon(b));
                out.delivered.push(b);
            }
        }
    }
    out
}

#[derive(Debug, Default)]
struct Accumulator {
    tally: BeaconTally,
    delivered_bits: u64,
    regional_vehicles: u64,
    clamped_rounds: u64,
    stale_dropped: u64,
    aborted_rounds: u64,
    detection_rounds: u64,
}

/// Runs the ring-road scenario described by `config`.
pub fn run(config: &ScenarioConfig) -> Result<SimReport> {
    let world = initialize(config)?;
    Ok(drive(config, world)?.0)
}

/// Like [`run`], also returning the event log.
pub fn run_logged(config: &ScenarioConfig) -> Result<(SimReport, Vec<Event>)> {
    let world = initialize(config)?;
    drive(config, world)
}

pub fn run_with_trace(config: &ScenarioConfig, trace: Trace) -> Result<(SimReport, Vec<Event>)> {
    let world = initialize_with_trace(config, trace)?;
    drive(config, world)
}

fn drive(config: &ScenarioConfig, mut world: World) -> Result<(SimReport, Vec<Event>)> {
    let rounds = match &world.mobility {
        Mobility::Ring => config.rounds(),
        Mobility::Trace { trace, .. } => trace.steps.len() as u64,
    };
    let mut detector = Detector::new(config.detector());
    let mut ledger: BTreeMap<VehicleId, LedgerEntry> = BTreeMap::new();
    let mut acc = Accumulator::default();

    for _ in 0..rounds {
        step_mobility(&mut world, config)?;
        let election = match guard::select_guard(&world.vehicles) {
            Ok(e) => e,
            // Fewer than two vehicles present: detection skipped this round.
            Err(Error::GuardUnavailable(_)) => {
                acc.aborted_rounds += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let guard_pos = world
            .vehicles
            .iter()
            .find(|v| v.physical_id == election.guard)
            .map(|v| v.position)
            .expect("guard is a present vehicle");
        let receiver = Receiver {
            id: election.guard,
            position: guard_pos,
        };
        let bc = broadcast_round(&mut world, config, receiver);
        acc.tally.emitted += bc.emitted;
        acc.tally.dropped += bc.dropped.len() as u64;
        acc.delivered_bits += bc.delivered.iter().map(|b| u64::from(b.size_bits)).sum::<u64>();
        acc.regional_vehicles += bc.regional_vehicles as u64;

        let physical: BTreeSet<VehicleId> = world.vehicles.iter().map(|v| v.physical_id).collect();
        let round = detector.round(election.guard, &bc.delivered, &physical);
        acc.detection_rounds += 1;
        acc.clamped_rounds += u64::from(round.clamped);
        acc.stale_dropped += round.stale_dropped;

        for v in &round.verdicts {
            let (owner, is_rogue) = world
                .owner_of(v.sender)
                .expect("every sender is a known identity");
            let truth = if is_rogue {
                Classification::Rogue
            } else {
                Classification::Honest
            };
            match (truth, v.classification) {
                (Classification::Honest, c) => {
                    acc.tally.honest_classified += 1;
                    acc.tally.honest_correct += u64::from(c == Classification::Honest);
                }
                (Classification::Rogue, c) => {
                    acc.tally.rogue_classified += 1;
                    acc.tally.rogue_correct += u64::from(c == Classification::Rogue);
                }
            }
            let entry = ledger.entry(v.sender).or_insert(LedgerEntry {
                owner,
                ground_truth: truth,
                classification: Classification::Honest,
                rounds_observed: 0,
            });
            entry.rounds_observed += 1;
            if v.classification == Classification::Rogue {
                entry.classification = Classification::Rogue;
            }
            world.event_log.push(Event::Detect {
                round: world.round,
                sender: v.sender,
                reported_speed: v.reported_speed,
                classification: v.classification,
            });
        }
        if let Some(a) = round.announcement(world.round) {
            world.event_log.push(Event::Announce(a));
        }
    }

    let duration_s = rounds as f64 * config.beacon_period_ms as f64 / 1000.0;
    let per_round = acc.detection_rounds.max(1) as f64;
    let delays = analytic_delays(
        config,
        (acc.delivered_bits as f64 / per_round).round() as u64,
        acc.regional_vehicles as f64 / per_round,
        (acc.tally.emitted - acc.tally.dropped) as f64 / duration_s,
    )?;

    let rogue_identities = world.owners.values().filter(|(_, r)| *r).count();
    let observed_rogue = ledger
        .values()
        .filter(|e| e.ground_truth == Classification::Rogue)
        .count();
    let report = SimReport {
        config_digest: config.digest(),
        rounds,
        aborted_rounds: acc.aborted_rounds,
        tpr: metrics::true_positive_rate(&ledger),
        fpr: metrics::false_positive_rate(&ledger),
        tpr_per_vehicle: metrics::true_positive_rate_per_vehicle(&ledger),
        plr: metrics::packet_loss_ratio(acc.tally.emitted, acc.tally.dropped)?,
        avg_throughput: metrics::average_throughput(acc.delivered_bits, duration_s),
        overhead_bits: metrics::overhead(&world.event_log),
        delays,
        prob_calibration: probability::calibrate([&acc.tally]),
        tally: acc.tally,
        delivered_bits: acc.delivered_bits,
        clamped_rounds: acc.clamped_rounds,
        stale_dropped: acc.stale_dropped,
        unobserved_rogue_identities: (rogue_identities - observed_rogue) as u64,
        ledger,
    };
    Ok((report, world.event_log))
}

/// Delay figures for a guard forwarding `x_bits` per round to a fog built
/// from `obu_count` vehicles, with beacons arriving at `arrival_rate` per
/// second.
pub fn analytic_delays(
    config: &ScenarioConfig,
    x_bits: u64,
    obu_count: f64,
    arrival_rate: f64,
) -> Result<DelayBreakdown> {
    let d = &config.delay;
    let d_c = delay::communication_delay(&ChannelParams {
        x_bits,
        bandwidth_hz: d.bandwidth_hz,
        tx_power: d.tx_power,
        channel_coeff: d.channel_coeff,
        noise_power: d.noise_power,
    })?;
    let queue = delay::queuing_delay_with(
        &QueueParams {
            arrival_rate,
            service_rate: d.service_rate,
        },
        d.queue_formula,
    )
    .ok();
    let d_p = delay::processing_delay(
        &ComputeParams {
            cycles_per_bit: d.cycles_per_bit,
            fog_capability: d.fog.capability(obu_count),
            complexity: d.complexity,
        },
        x_bits,
    );
    let d_q = queue.map(|q| q.seconds);
    Ok(DelayBreakdown {
        d_c,
        d_q,
        d_p,
        d_t: d_q.map(|q| delay::total_delay(d_c, q, d_p)),
        negative_queue_delay: queue.is_some_and(|q| q.negative),
    })
}
