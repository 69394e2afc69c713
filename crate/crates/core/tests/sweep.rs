use fsdv_core::sweep::{parse_sweep, preset, SweepVariable, SWEEP_COLUMNS};
use fsdv_core::{run_sweep, sim, Error, ScenarioConfig, SweepSpec};

fn spec(variable: SweepVariable, values: Vec<f64>, seeds: Vec<u64>) -> SweepSpec {
    SweepSpec {
        variable,
        values,
        seeds,
        base: ScenarioConfig {
            n_vehicles: 60,
            rogue_fraction: 0.2,
            duration_s: 2.0,
            ..ScenarioConfig::default()
        },
        note: None,
    }
}

#[test]
fn singleton_sweep_equals_single_run() {
    let s = spec(SweepVariable::ThresholdAlpha, vec![0.3], vec![5]);
    let t = run_sweep(&s, 1).unwrap();
    let r = sim::run(&s.cell_config(0.3, 5).unwrap()).unwrap();
    let row = &t.rows[0];
    assert_eq!(row.tpr, r.tpr);
    assert_eq!(row.fpr, r.fpr);
    assert_eq!(row.plr, r.plr);
    assert_eq!(row.d_t, r.delays.d_t);
    assert_eq!(row.overhead_bits, r.overhead_bits as f64);
}

#[test]
fn zero_rogue_sweep_marks_tpr_na() {
    let mut s = spec(SweepVariable::NVehicles, vec![50.0, 100.0, 200.0], vec![1, 2]);
    s.base.rogue_fraction = 0.0;
    let t = run_sweep(&s, 2).unwrap();
    assert_eq!(t.rows.len(), 3);
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_COLUMNS.join(","));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), SWEEP_COLUMNS.len());
        assert_eq!(cols[1], "NA");
        assert!(cols[2].parse::<f64>().is_ok());
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let s = spec(SweepVariable::RogueFraction, vec![0.1, 0.2, 0.3, 0.4], vec![1, 2, 3]);
    let one = run_sweep(&s, 1).unwrap().to_csv();
    let four = run_sweep(&s, 4).unwrap().to_csv();
    assert_eq!(one, four);
}

#[test]
fn failing_cell_is_identified() {
    let s = spec(SweepVariable::NVehicles, vec![50.0, 70.5], vec![1]);
    match s.validate().unwrap_err() {
        Error::Config { field, .. } => assert_eq!(field, "sweep.values"),
        e => panic!("unexpected {e:?}"),
    }
    let mut s = spec(SweepVariable::NVehicles, vec![50.0], vec![3]);
    s.base.delay.service_rate = 1.0;
    s.base.delay.queue_formula = fsdv_core::delay::QueueFormula::Standard;
    // unstable queue leaves d_q undefined rather than failing the run
    let t = run_sweep(&s, 1).unwrap();
    assert_eq!(t.rows[0].d_q, None);
}

#[test]
fn output_directory_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(SweepVariable::ThresholdAlpha, vec![0.2, 0.6], vec![1]);
    s.note = Some("scaled".into());
    run_sweep(&s, 1).unwrap().write_to_dir(dir.path()).unwrap();
    for metric in &SWEEP_COLUMNS[1..] {
        let text = std::fs::read_to_string(dir.path().join(format!("{metric}.csv"))).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("threshold_alpha,{metric}"));
        assert_eq!(text.lines().count(), 3);
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("notes.txt")).unwrap(), "scaled\n");
}

#[test]
fn spec_file_and_presets() {
    let s = parse_sweep(
        "[scenario]\nn_vehicles = 40\n[sweep]\nvariable = \"rogue_fraction\"\nvalues = [0.1, 0.2]\nseeds = [1]\n",
    )
    .unwrap();
    assert_eq!(s.variable, SweepVariable::RogueFraction);
    assert_eq!(s.base.n_vehicles, 40);
    assert!(parse_sweep("[sweep]\nvariable = \"rogue_fraction\"\nvalues = []\nseeds = [1]\n").is_err());
    assert!(parse_sweep("[sweep]\nvariable = \"rogue_fraction\"\nvalues = [0.5]\nseeds = [1]\n").is_err());
    for name in ["fig2", "fig3", "rogues"] {
        preset(name).unwrap().validate().unwrap();
    }
    assert!(preset("fig3").unwrap().note.is_some());
    assert!(preset("nope").is_none());
}
