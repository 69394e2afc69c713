//! SUMO floating-car-data (FCD) import.
//!
//! Expected shape:
//!
//! ```xml
//! <fcd-export>
//!   <timestep time="0.00">
//!     <vehicle id="veh0" x="12.3" y="4.5" speed="13.9" lane="e1_0"/>
//!   </timestep>
//! </fcd-export>
//! ```

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Position;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    /// Index into [`Trace::vehicle_ids`].
    pub vehicle: usize,
    pub position: Position,
    pub speed: f64,
    pub lane: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Trace vehicle ids in order of first appearance.
    pub vehicle_ids: Vec<String>,
    pub steps: Vec<Vec<TraceSample>>,
}

impl Trace {
    pub fn vehicle_count(&self) -> usize {
        self.vehicle_ids.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.vehicle_count() < 2 {
            return Err(Error::config(
                "trace.vehicles",
                format!("{} vehicle(s); detection needs at least two", self.vehicle_count()),
            ));
        }
        if self.steps.is_empty() {
            return Err(Error::config("trace.timesteps", "no timestep elements"));
        }
        Ok(())
    }
}

fn attr<'a>(node: roxmltree::Node<'a, '_>, name: &str, path: &str) -> Result<&'a str> {
    node.attribute(name).ok_or_else(|| Error::Trace {
        path: path.to_string(),
        reason: format!("missing attribute `{name}`"),
    })
}

fn number(node: roxmltree::Node<'_, '_>, name: &str, path: &str) -> Result<f64> {
    let raw = attr(node, name, path)?;
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Trace {
            path: path.to_string(),
            reason: format!("attribute `{name}` is not a finite number: {raw:?}"),
        })
}

/// SUMO lane ids end in `_<index>`; anything else maps to lane 0.
fn lane_index(lane: Option<&str>) -> u8 {
    lane.and_then(|l| l.rsplit_once('_'))
        .and_then(|(_, idx)| idx.parse::<u8>().ok())
        .map_or(0, |i| i.min(1))
}

pub fn parse_trace(xml: &str) -> Result<Trace> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| Error::Trace {
        path: "document".into(),
        reason: e.to_string(),
    })?;
    let root = doc.root_element();
    let root_name = root.tag_name().name().to_string();

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut vehicle_ids = Vec::new();
    let mut steps = Vec::new();
    for (t, step) in root
        .children()
        .filter(|n| n.is_element() && n.tag_name().name() == "timestep")
        .enumerate()
    {
        let step_path = format!("{root_name}/timestep[{}]", t + 1);
        let mut samples = Vec::new();
        for (v, node) in step
            .children()
            .filter(|n| n.is_element() && n.tag_name().name() == "vehicle")
            .enumerate()
        {
            let mut path = format!("{step_path}/vehicle[{}]", v + 1);
            let id = attr(node, "id", &path)?;
            path.push_str(&format!("[@id={id:?}]"));
            let x = number(node, "x", &path)?;
            let y = number(node, "y", &path)?;
            let speed = number(node, "speed", &path)?;
            let vehicle = *index.entry(id.to_string()).or_insert_with(|| {
                vehicle_ids.push(id.to_string());
                vehicle_ids.len() - 1
            });
            samples.push(TraceSample {
                vehicle,
                position: Position::new(x, y),
                speed,
                lane: lane_index(node.attribute("lane")),
            });
        }
        steps.push(samples);
    }
    Ok(Trace { vehicle_ids, steps })
}

pub fn import_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let trace = parse_trace(&text)?;
    trace.validate()?;
    Ok(trace)
}
