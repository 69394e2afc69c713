//! Shared domain types: positions, identities, vehicle state and the beacon
//! message that every other module consumes.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beacon payload size: 256 bytes.
pub const DEFAULT_BEACON_BITS: u32 = 2048;

/// Beacon period in milliseconds.
pub const BEACON_PERIOD_MS: u64 = 100;

/// First id of the range reserved for fabricated (Sybil) identities.
pub const FABRICATED_ID_BASE: u32 = 0x8000_0000;

/// A point in the road plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        let p = Position { x, y };
        if p.is_finite() {
            Ok(p)
        } else {
            Err(Error::config("position", format!("non-finite coordinate ({x}, {y})")))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

pub fn euclidean_distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Broadcast identity. Physical vehicles use ids below
/// [`FABRICATED_ID_BASE`]; fabricated identities live above it.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl VehicleId {
    pub fn is_fabricated(self) -> bool {
        self.0 >= FABRICATED_ID_BASE
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub physical_id: VehicleId,
    pub position: Position,
    /// m/s
    pub true_speed: f64,
    pub lane: u8,
    pub is_rogue: bool,
    pub fabricated_ids: BTreeSet<VehicleId>,
}

impl VehicleState {
    pub fn honest(id: u32, position: Position, true_speed: f64) -> Self {
        VehicleState {
            physical_id: VehicleId(id),
            position,
            true_speed,
            lane: 0,
            is_rogue: false,
            fabricated_ids: BTreeSet::new(),
        }
    }

    /// Every identity this vehicle broadcasts under, physical id first.
    pub fn identities(&self) -> impl Iterator<Item = VehicleId> + '_ {
        std::iter::once(self.physical_id).chain(self.fabricated_ids.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeaconMessage {
    pub sender: VehicleId,
    /// Milliseconds since run start.
    pub timestamp: u64,
    pub position: Position,
    /// m/s
    pub reported_speed: f64,
    pub size_bits: u32,
}

impl BeaconMessage {
    pub fn new(sender: VehicleId, timestamp: u64, position: Position, reported_speed: f64) -> Self {
        BeaconMessage {
            sender,
            timestamp,
            position,
            reported_speed,
            size_bits: DEFAULT_BEACON_BITS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::config("beacon.position", "non-finite coordinate"));
        }
        if !(self.reported_speed.is_finite() && self.reported_speed >= 0.0) {
            return Err(Error::config(
                "beacon.reported_speed",
                format!("{} is not a finite nonnegative speed", self.reported_speed),
            ));
        }
        if self.size_bits == 0 {
            return Err(Error::config("beacon.size_bits", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Honest,
    Rogue,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Honest => "honest",
            Classification::Rogue => "rogue",
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BeaconRecord {
    sender_id: u32,
    timestamp_ms: u64,
    x_m: f64,
    y_m: f64,
    speed_mps: f64,
    size_bits: u32,
}

impl From<&BeaconMessage> for BeaconRecord {
    fn from(b: &BeaconMessage) -> Self {
        BeaconRecord {
            sender_id: b.sender.0,
            timestamp_ms: b.timestamp,
            x_m: b.position.x,
            y_m: b.position.y,
            speed_mps: b.reported_speed,
            size_bits: b.size_bits,
        }
    }
}

/// Writes beacons in the trace-dump form: a header line, then one
/// comma-separated record per beacon.
pub fn write_beacons<W: Write>(out: W, beacons: &[BeaconMessage]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for b in beacons {
        w.serialize(BeaconRecord::from(b))
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_beacons<R: Read>(input: R) -> Result<Vec<BeaconMessage>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize::<BeaconRecord>() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let beacon = BeaconMessage {
            sender: VehicleId(rec.sender_id),
            timestamp: rec.timestamp_ms,
            position: Position::new(rec.x_m, rec.y_m),
            reported_speed: rec.speed_mps,
            size_bits: rec.size_bits,
        };
        beacon.validate()?;
        out.push(beacon);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0)), 5.0);
        assert_eq!(euclidean_distance(Position::new(1.0, 1.0), Position::new(1.0, 1.0)), 0.0);
        let d = euclidean_distance(Position::ORIGIN, Position::new(1.0, 1.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn try_new_rejects_nan() {
        assert!(Position::try_new(f64::NAN, 0.0).is_err());
        assert!(Position::try_new(0.0, f64::INFINITY).is_err());
        assert!(Position::try_new(1.0, 2.0).is_ok());
    }

    #[test]
    fn beacon_validation() {
        let mut b = BeaconMessage::new(VehicleId(1), 0, Position::ORIGIN, 10.0);
        assert_eq!(b.size_bits, 2048);
        assert!(b.validate().is_ok());
        b.reported_speed = -1.0;
        assert!(b.validate().is_err());
    }

    #[test]
    fn wire_header() {
        let mut buf = Vec::new();
        write_beacons(&mut buf, &[BeaconMessage::new(VehicleId(7), 100, Position::new(1.5, 3.7), 20.0)])
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("sender_id,timestamp_ms,x_m,y_m,speed_mps,size_bits"));
        assert_eq!(lines.next(), Some("7,100,1.5,3.7,20.0,2048"));
    }

    fn coord() -> impl Strategy<Value = f64> {
        -1e6..1e6f64
    }

    proptest! {
        #[test]
        fn triangle_inequality(ax in coord(), ay in coord(), bx in coord(), by in coord(), cx in coord(), cy in coord()) {
            let (a, b, c) = (Position::new(ax, ay), Position::new(bx, by), Position::new(cx, cy));
            let lhs = euclidean_distance(a, c);
            let rhs = euclidean_distance(a, b) + euclidean_distance(b, c);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-9);
            prop_assert_eq!(euclidean_distance(a, b), euclidean_distance(b, a));
        }

        #[test]
        fn beacon_wire_round_trip(
            id in any::<u32>(), ts in any::<u64>(), x in coord(), y in coord(),
            speed in 0.0..100.0f64, bits in 1u32..100_000,
        ) {
            let b = BeaconMessage { sender: VehicleId(id), timestamp: ts, position: Position::new(x, y), reported_speed: speed, size_bits: bits };
            let mut buf = Vec::new();
            write_beacons(&mut buf, &[b]).unwrap();
            let back = read_beacons(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(back[0].position.x.to_bits(), x.to_bits());
            prop_assert_eq!(back[0].position.y.to_bits(), y.to_bits());
            prop_assert_eq!(back[0].reported_speed.to_bits(), speed.to_bits());
            prop_assert_eq!(back[0], b);
        }
    }
}
