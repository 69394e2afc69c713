//! Analytic delay pipeline at the fog layer: Shannon-rate transfer,
//! queueing, processing, and their sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub x_bits: u64,
    pub bandwidth_hz: f64,
    pub tx_power: f64,
    pub channel_coeff: f64,
    pub noise_power: f64,
}

impl ChannelParams {
    pub fn snr(&self) -> f64 {
        self.tx_power * self.channel_coeff * self.channel_coeff / self.noise_power
    }

    /// Shannon capacity in bits/s.
    pub fn rate(&self) -> f64 {
        self.bandwidth_hz * (1.0 + self.snr()).log2()
    }
}

pub fn communication_delay(p: &ChannelParams) -> Result<f64> {
    let snr = p.snr();
    if !(snr.is_finite() && snr > 0.0 && p.bandwidth_hz > 0.0) {
        return Err(Error::ZeroCapacity { snr });
    }
    Ok(p.x_bits as f64 / p.rate())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// Arrivals per second.
    pub arrival_rate: f64,
    /// Services per second.
    pub service_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueFormula {
    /// `1 - 1/λ + λ² / (μ² (μ - λ))`, evaluated as written.
    #[default]
    Closed,
    /// Textbook M/M/1 waiting time in queue, `λ / (μ (μ - λ))`.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueDelay {
    pub seconds: f64,
    /// The closed form came out negative, which has no physical meaning.
    pub negative: bool,
}

pub fn queuing_delay(p: &QueueParams) -> Result<QueueDelay> {
    queuing_delay_with(p, QueueFormula::Closed)
}

pub fn queuing_delay_with(p: &QueueParams, formula: QueueFormula) -> Result<QueueDelay> {
    let (lambda, mu) = (p.arrival_rate, p.service_rate);
    if !(lambda > 0.0 && mu > 0.0) || mu <= lambda {
        return Err(Error::UnstableQueue {
            arrival: lambda,
            service: mu,
        });
    }
    let seconds = match formula {
        QueueFormula::Closed => 1.0 - 1.0 / lambda + lambda * lambda / (mu * mu * (mu - lambda)),
        QueueFormula::Standard => lambda / (mu * (mu - lambda)),
    };
    Ok(QueueDelay {
        seconds,
        negative: seconds < 0.0,
    })
}

/// Work units needed to process `x` bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Complexity {
    #[default]
    Linear,
    Affine {
        slope: f64,
        intercept: f64,
    },
}

impl Complexity {
    pub fn work(&self, x_bits: u64) -> f64 {
        let x = x_bits as f64;
        match *self {
            Complexity::Linear => x,
            Complexity::Affine { slope, intercept } => slope * x + intercept,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComputeParams {
    pub cycles_per_bit: f64,
    /// Aggregate fog computation capability, cycles/s.
    pub fog_capability: f64,
    pub complexity: Complexity,
}

pub fn processing_delay(p: &ComputeParams, x_bits: u64) -> f64 {
    p.complexity.work(x_bits) * p.cycles_per_bit / p.fog_capability
}

pub fn total_delay(d_c: f64, d_q: f64, d_p: f64) -> f64 {
    d_c + d_q + d_p
}

/// How the fog's aggregate capability is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FogScaling {
    /// Every regional OBU contributes `per_obu` cycles/s.
    PerObu { per_obu: f64 },
    Fixed { capability: f64 },
}

impl FogScaling {
    pub fn capability(&self, obu_count: f64) -> f64 {
        match *self {
            FogScaling::PerObu { per_obu } => per_obu * obu_count.max(1.0),
            FogScaling::Fixed { capability } => capability,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub d_c: f64,
    /// `None` when the queue is unstable.
    pub d_q: Option<f64>,
    pub d_p: f64,
    pub d_t: Option<f64>,
    pub negative_queue_delay: bool,
}
