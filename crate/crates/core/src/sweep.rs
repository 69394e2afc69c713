//! Parameter sweeps over seeded runs.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{ConfigFile, ScenarioConfig};
use crate::error::{Error, Result};
use crate::metrics::{fmt_opt, SimReport};
use crate::sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NVehicles,
    RogueFraction,
    ThresholdAlpha,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVariable::NVehicles => "n_vehicles",
            SweepVariable::RogueFraction => "rogue_fraction",
            SweepVariable::ThresholdAlpha => "threshold_alpha",
        })
    }
}

/// `[sweep]` section of a sweep spec file; the other sections describe the
/// base scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    variable: SweepVariable,
    values: Vec<f64>,
    seeds: Vec<u64>,
    note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub base: ScenarioConfig,
    /// Free text copied to the output, e.g. a scale caveat.
    pub note: Option<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep.values", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("sweep.seeds", "must not be empty"));
        }
        for &v in &self.values {
            self.cell_config(v, self.seeds[0])?;
        }
        Ok(())
    }

    /// Base config with the swept variable set to `value` and the seed set.
    pub fn cell_config(&self, value: f64, seed: u64) -> Result<ScenarioConfig> {
        let mut c = self.base.clone();
        c.seed = seed;
        match self.variable {
            SweepVariable::NVehicles => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::config("sweep.values", format!("{value} is not a vehicle count")));
                }
                c.n_vehicles = value as u32;
            }
            SweepVariable::RogueFraction => c.rogue_fraction = value,
            SweepVariable::ThresholdAlpha => c.set_alpha(value),
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let file = ConfigFile::parse(text)?;
    let section = file
        .sweep
        .clone()
        .ok_or_else(|| Error::config("sweep", "missing [sweep] section"))?;
    let spec = SweepSpec {
        variable: section.variable,
        values: section.values,
        seeds: section.seeds,
        base: file.to_config()?,
        note: section.note,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_sweep(path: impl AsRef<Path>) -> Result<SweepSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_sweep(&text)
}

pub const PRESETS: [(&str, &str); 3] = [
    ("fig2", "threshold alpha 0.1..0.9, n=200, 20% rogues, 10 seeds"),
    ("fig3", "n_vehicles 50..400 (500..4000 scaled down 10x), 20% rogues, 5 seeds"),
    ("rogues", "rogue fraction 0.1..0.4, n=200, 10 seeds"),
];

fn desk_base() -> ScenarioConfig {
    ScenarioConfig {
        n_vehicles: 200,
        rogue_fraction: 0.2,
        ..ScenarioConfig::default()
    }
}

pub fn preset(name: &str) -> Option<SweepSpec> {
    let spec = match name {
        "fig2" => SweepSpec {
            variable: SweepVariable::ThresholdAlpha,
            values: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            seeds: (1..=10).collect(),
            base: desk_base(),
            note: None,
        },
        "fig3" => SweepSpec {
            variable: SweepVariable::NVehicles,
            values: (1..=8).map(|k| f64::from(k * 50)).collect(),
            seeds: (1..=5).collect(),
            base: desk_base(),
            note: Some(
                "desk scale: n_vehicles 500..4000 downsampled 10x to 50..400 on the same road".into(),
            ),
        },
        "rogues" => SweepSpec {
            variable: SweepVariable::RogueFraction,
            values: vec![0.1, 0.2, 0.3, 0.4],
            seeds: (1..=10).collect(),
            base: desk_base(),
            note: None,
        },
        _ => return None,
    };
    Some(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub plr: f64,
    pub throughput: f64,
    pub overhead_bits: f64,
    pub d_c: f64,
    pub d_q: Option<f64>,
    pub d_p: f64,
    pub d_t: Option<f64>,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "value",
    "tpr",
    "fpr",
    "plr",
    "throughput",
    "overhead_bits",
    "d_c",
    "d_q",
    "d_p",
    "d_t",
];

impl SweepRow {
    fn fields(&self) -> [String; 10] {
        [
            self.value.to_string(),
            fmt_opt(self.tpr),
            fmt_opt(self.fpr),
            self.plr.to_string(),
            self.throughput.to_string(),
            self.overhead_bits.to_string(),
            self.d_c.to_string(),
            fmt_opt(self.d_q),
            self.d_p.to_string(),
            fmt_opt(self.d_t),
        ]
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Mean over the defined entries; undefined when none are.
fn mean_defined(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = xs.flatten().collect();
    (!defined.is_empty()).then(|| mean(defined.into_iter()))
}

impl SweepRow {
    pub fn from_reports(value: f64, reports: &[SimReport]) -> Self {
        SweepRow {
            value,
            tpr: mean_defined(reports.iter().map(|r| r.tpr)),
            fpr: mean_defined(reports.iter().map(|r| r.fpr)),
            plr: mean(reports.iter().map(|r| r.plr)),
            throughput: mean(reports.iter().map(|r| r.avg_throughput)),
            overhead_bits: mean(reports.iter().map(|r| r.overhead_bits as f64)),
            d_c: mean(reports.iter().map(|r| r.delays.d_c)),
            d_q: mean_defined(reports.iter().map(|r| r.delays.d_q)),
            d_p: mean(reports.iter().map(|r| r.delays.d_p)),
            d_t: mean_defined(reports.iter().map(|r| r.delays.d_t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
    pub note: Option<String>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SWEEP_COLUMNS).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.fields()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Two-column `value,<metric>` series for one metric column.
    pub fn series(&self, metric: &str) -> Option<String> {
        let col = SWEEP_COLUMNS.iter().position(|c| *c == metric && *c != "value")?;
        let mut s = format!("{},{metric}\n", self.variable);
        for row in &self.rows {
            let f = row.fields();
            s.push_str(&f[0]);
            s.push(',');
            s.push_str(&f[col]);
            s.push('\n');
        }
        Some(s)
    }

    /// Writes `sweep.csv`, one `<metric>.csv` series per metric, and
    /// `notes.txt` when the spec carries a note.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.csv"), self.to_csv())?;
        for metric in &SWEEP_COLUMNS[1..] {
            let series = self.series(metric).expect("known column");
            std::fs::write(dir.join(format!("{metric}.csv")), series)?;
        }
        if let Some(note) = &self.note {
            std::fs::write(dir.join("notes.txt"), format!("{note}\n"))?;
        }
        Ok(())
    }
}

/// Runs every (value, seed) cell on up to `workers` threads and averages
/// over seeds. Rows come out in spec order whatever the completion order.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepTable> {
    spec.validate()?;
    let cells: Vec<(f64, u64)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let run_cell = |&(value, seed): &(f64, u64)| {
        spec.cell_config(value, seed)
            .and_then(|c| sim::run(&c))
            .map_err(|e| Error::Sweep {
                value,
                seed,
                source: Box::new(e),
            })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let results: Vec<Result<SimReport>> = pool.install(|| cells.par_iter().map(run_cell).collect());
    let reports = results.into_iter().collect::<Result<Vec<_>>>()?;

    let rows = spec
        .values
        .iter()
        .zip(reports.chunks(spec.seeds.len()))
        .map(|(&v, chunk)| SweepRow::from_reports(v, chunk))
        .collect();
    Ok(SweepTable {
        variable: spec.variable,
        rows,
        note: spec.note.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(variable: SweepVariable, values: Vec<f64>) -> SweepSpec {
        SweepSpec {
            variable,
            values,
            seeds: vec![1],
            base: ScenarioConfig {
                n_vehicles: 40,
                rogue_fraction: 0.2,
                duration_s: 1.0,
                ..ScenarioConfig::default()
            },
            note: None,
        }
    }

    #[test]
    fn presets_validate() {
        for (name, _) in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn parse_spec_file() {
        let spec = parse_sweep(
            "[scenario]\nn_vehicles = 60\n[sweep]\nvariable = \"rogue_fraction\"\nvalues = [0.1, 0.2]\nseeds = [3, 4]\n",
        )
        .unwrap();
        assert_eq!(spec.variable, SweepVariable::RogueFraction);
        assert_eq!(spec.base.n_vehicles, 60);
        assert_eq!(spec.seeds, vec![3, 4]);
        assert!(parse_sweep("[scenario]\nn_vehicles = 60\n").is_err());
        assert!(parse_sweep("[sweep]\nvariable = \"rogue_fraction\"\nvalues = []\nseeds = [1]\n").is_err());
    }

    #[test]
    fn bad_cell_is_reported() {
        let spec = tiny(SweepVariable::RogueFraction, vec![0.1, 0.9]);
        assert!(spec.validate().is_err());
        let spec = tiny(SweepVariable::NVehicles, vec![10.5]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn singleton_matches_run() {
        let spec = tiny(SweepVariable::ThresholdAlpha, vec![0.3]);
        let table = run_sweep(&spec, 1).unwrap();
        let report = sim::run(&spec.cell_config(0.3, 1).unwrap()).unwrap();
        assert_eq!(table.rows, vec![SweepRow::from_reports(0.3, std::slice::from_ref(&report))]);
        assert_eq!(table.rows[0].tpr, report.tpr);
        assert_eq!(table.rows[0].plr, report.plr);
    }

    #[test]
    fn csv_shape() {
        let mut spec = tiny(SweepVariable::NVehicles, vec![20.0, 40.0]);
        spec.base.rogue_fraction = 0.0;
        let table = run_sweep(&spec, 2).unwrap();
        let csv = table.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "value,tpr,fpr,plr,throughput,overhead_bits,d_c,d_q,d_p,d_t");
        assert!(lines[1].starts_with("20,NA,"));
        assert_eq!(
            table.series("plr").unwrap().lines().next(),
            Some("n_vehicles,plr")
        );
        assert!(table.series("value").is_none());
    }
}
