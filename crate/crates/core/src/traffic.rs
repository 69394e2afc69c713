//! Greenshield's linear speed-density relation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Road space occupied by one stopped vehicle, per lane.
pub const JAM_SPACING_M: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenshieldParams {
    /// Free-flow speed (m/s).
    pub s_max: f64,
    /// Jam density, in vehicles per aggregation window.
    pub rho_max: f64,
}

impl GreenshieldParams {
    pub fn new(s_max: f64, rho_max: f64) -> Result<Self> {
        let p = GreenshieldParams { s_max, rho_max };
        p.validate()?;
        Ok(p)
    }

    /// Jam vehicle count for a road of the given length and lane count.
    pub fn jam_count(road_length_m: f64, lanes: u8) -> f64 {
        road_length_m / JAM_SPACING_M * f64::from(lanes)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_max.is_finite() && self.s_max > 0.0) {
            return Err(Error::config("greenshield.s_max", "must be positive"));
        }
        if !(self.rho_max.is_finite() && self.rho_max > 0.0) {
            return Err(Error::config("greenshield.rho_max", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensitySample {
    pub beacon_count_per_id: u64,
    pub vehicle_count: u64,
    pub rho: u64,
}

pub fn density(beacon_count_per_id: u64, vehicle_count: u64) -> DensitySample {
    DensitySample {
        beacon_count_per_id,
        vehicle_count,
        rho: beacon_count_per_id * vehicle_count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardSpeed {
    pub speed: f64,
    /// Set when `rho > rho_max` and the speed was floored at zero.
    pub clamped: bool,
}

pub fn guard_speed(rho: f64, params: &GreenshieldParams) -> GuardSpeed {
    debug_assert!(rho >= 0.0);
    let raw = params.s_max - rho / params.rho_max * params.s_max;
    if raw < 0.0 {
        GuardSpeed {
            speed: 0.0,
            clamped: true,
        }
    } else {
        GuardSpeed {
            speed: raw,
            clamped: false,
        }
    }
}
