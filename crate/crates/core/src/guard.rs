//! Guard-node election: the vehicle closest to the centroid of all physical
//! vehicle positions runs detection for the round.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{euclidean_distance, Position, VehicleId, VehicleState};

#[derive(Debug, Clone, PartialEq)]
pub struct GuardElection {
    pub centroid: Position,
    pub guard: VehicleId,
    pub distances: BTreeMap<VehicleId, f64>,
}

impl GuardElection {
    pub fn guard_distance(&self) -> f64 {
        self.distances[&self.guard]
    }
}

pub fn centroid(positions: &[Position]) -> Result<Position> {
    if positions.is_empty() {
        return Err(Error::EmptyInput("centroid of zero positions"));
    }
    let n = positions.len() as f64;
    let (sx, sy) = positions
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Ok(Position::new(sx / n, sy / n))
}

/// Elects among `(id, position)` pairs. Equal distances go to the lowest id.
pub fn elect(candidates: &[(VehicleId, Position)]) -> Result<GuardElection> {
    if candidates.len() < 2 {
        return Err(Error::GuardUnavailable(candidates.len()));
    }
    let positions: Vec<Position> = candidates.iter().map(|(_, p)| *p).collect();
    let centroid = centroid(&positions)?;

    let mut distances = BTreeMap::new();
    let mut best: Option<(f64, VehicleId)> = None;
    for &(id, pos) in candidates {
        let d = euclidean_distance(centroid, pos);
        distances.insert(id, d);
        best = match best {
            Some((bd, bid)) if bd < d || (bd == d && bid < id) => Some((bd, bid)),
            _ => Some((d, id)),
        };
    }
    let (_, guard) = best.expect("at least two candidates");
    Ok(GuardElection {
        centroid,
        guard,
        distances,
    })
}

/// Only physical positions take part; fabricated identities have none.
pub fn select_guard(vehicles: &[VehicleState]) -> Result<GuardElection> {
    let candidates: Vec<_> = vehicles
        .iter()
        .map(|v| (v.physical_id, v.position))
        .collect();
    elect(&candidates)
}
