//! Closed-form probability of classifying beacons correctly, and a hook to
//! estimate its parameters from simulated runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionProbParams {
    /// Probability the guard manages to form the fog.
    pub x_fog: f64,
    /// Probability a beacon reaches the guard.
    pub p_reach: f64,
    /// Probability an honest sender is classified honest.
    pub p_honest_correct: f64,
    /// Probability a rogue sender is classified rogue.
    pub p_rogue_correct: f64,
}

impl Default for DetectionProbParams {
    fn default() -> Self {
        DetectionProbParams {
            x_fog: 1.0,
            p_reach: 1.0,
            p_honest_correct: 0.5,
            p_rogue_correct: 0.5,
        }
    }
}

impl DetectionProbParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("x_fog", self.x_fog),
            ("p_reach", self.p_reach),
            ("p_honest_correct", self.p_honest_correct),
            ("p_rogue_correct", self.p_rogue_correct),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(
                    format!("probability.{name}"),
                    format!("{v} outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }

    /// Whether both closed forms are guaranteed to stay inside [0, 1].
    pub fn is_normalized(&self) -> bool {
        self.x_fog * (self.p_honest_correct + self.p_rogue_correct) * self.p_reach <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectDetection {
    pub probability: f64,
    /// The formula does not normalize; set when the value exceeds 1.
    pub exceeds_one: bool,
}

pub fn correct_detection_probability(p: &DetectionProbParams) -> CorrectDetection {
    let probability =
        p.x_fog * (p.p_honest_correct * p.p_reach + p.p_rogue_correct * p.p_reach);
    CorrectDetection {
        probability,
        exceeds_one: probability > 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncorrectDetection {
    pub exact: f64,
    /// Drops the honest term, `1 - X P2 P`.
    pub approx: f64,
}

pub fn incorrect_detection_probability(p: &DetectionProbParams) -> IncorrectDetection {
    let exact = 1.0 - (p.x_fog * p.p_honest_correct + p.x_fog * p.p_rogue_correct) * p.p_reach;
    let approx = 1.0 - p.x_fog * p.p_rogue_correct * p.p_reach;
    IncorrectDetection { exact, approx }
}

/// Beacon-level counts accumulated by a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconTally {
    pub emitted: u64,
    pub dropped: u64,
    pub honest_classified: u64,
    pub honest_correct: u64,
    pub rogue_classified: u64,
    pub rogue_correct: u64,
}

impl BeaconTally {
    pub fn merge(&mut self, other: &BeaconTally) {
        self.emitted += other.emitted;
        self.dropped += other.dropped;
        self.honest_classified += other.honest_classified;
        self.honest_correct += other.honest_correct;
        self.rogue_classified += other.rogue_classified;
        self.rogue_correct += other.rogue_correct;
    }
}

/// Estimates model parameters from pooled run tallies. `P` is the delivery
/// ratio; `P1` and `P2` are the joint rates of (honest, judged honest) and
/// (rogue, judged rogue) over all classified beacons, so `P1 + P2` is the
/// classification accuracy. The fog always forms in simulation, so `X = 1`.
pub fn calibrate<'a>(tallies: impl IntoIterator<Item = &'a BeaconTally>) -> DetectionProbParams {
    let mut total = BeaconTally::default();
    for t in tallies {
        total.merge(t);
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let classified = total.honest_classified + total.rogue_classified;
    DetectionProbParams {
        x_fog: 1.0,
        p_reach: if total.emitted == 0 {
            1.0
        } else {
            1.0 - ratio(total.dropped, total.emitted)
        },
        p_honest_correct: ratio(total.honest_correct, classified),
        p_rogue_correct: ratio(total.rogue_correct, classified),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(x: f64, p: f64, p1: f64, p2: f64) -> DetectionProbParams {
        DetectionProbParams {
            x_fog: x,
            p_reach: p,
            p_honest_correct: p1,
            p_rogue_correct: p2,
        }
    }

    #[test]
    fn correct_examples() {
        assert_eq!(correct_detection_probability(&params(1.0, 1.0, 0.5, 0.5)).probability, 1.0);
        assert_eq!(correct_detection_probability(&params(0.7, 0.0, 0.9, 0.9)).probability, 0.0);
        let c = correct_detection_probability(&params(0.9, 0.95, 0.6, 0.3));
        assert!((c.probability - 0.7695).abs() < 1e-12);
        assert!(!c.exceeds_one);
    }

    #[test]
    fn flags_unnormalized() {
        let p = params(1.0, 1.0, 0.8, 0.9);
        assert!(!p.is_normalized());
        assert!(correct_detection_probability(&p).exceeds_one);
    }

    #[test]
    fn incorrect_examples() {
        let i = incorrect_detection_probability(&params(1.0, 1.0, 0.0, 1.0));
        assert_eq!((i.exact, i.approx), (0.0, 0.0));
        let i = incorrect_detection_probability(&params(1.0, 1.0, 0.5, 0.5));
        assert_eq!((i.exact, i.approx), (0.0, 0.5));
        let i = incorrect_detection_probability(&params(0.9, 0.95, 0.6, 0.3));
        assert!((i.exact - 0.2305).abs() < 1e-12);
        assert!((i.approx - 0.7435).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(params(1.0, 1.0, 0.5, 0.5).validate().is_ok());
        assert!(params(1.1, 1.0, 0.5, 0.5).validate().is_err());
        assert!(params(1.0, 1.0, -0.1, 0.5).validate().is_err());
    }

    #[test]
    fn calibration_pools_counts() {
        let a = BeaconTally {
            emitted: 100,
            dropped: 10,
            honest_classified: 60,
            honest_correct: 60,
            rogue_classified: 30,
            rogue_correct: 27,
        };
        let b = BeaconTally {
            emitted: 100,
            dropped: 30,
            honest_classified: 50,
            honest_correct: 49,
            rogue_classified: 20,
            rogue_correct: 20,
        };
        let p = calibrate([&a, &b]);
        assert_eq!(p.x_fog, 1.0);
        assert!((p.p_reach - 0.8).abs() < 1e-12);
        assert!((p.p_honest_correct - 109.0 / 160.0).abs() < 1e-12);
        assert!((p.p_rogue_correct - 47.0 / 160.0).abs() < 1e-12);
        assert!(p.is_normalized());
    }
}
