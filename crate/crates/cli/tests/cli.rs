use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_scatter1d");

fn run(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).current_dir(dir);
    if let Some(n) = threads {
        cmd.env("SCATTER1D_THREADS", n);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Delta on a step, boosted box packet, one short frame and a small oracle grid.
fn small_scenario() -> Value {
    json!({
        "label": "small",
        "potential": {"c": 0.0, "d": 0.0, "v0": 1.0, "deltas": [[0.0, -0.125]]},
        "packet": {"a": -2.01, "b": -0.01, "boost": 0.5},
        "evolution": {"x_grid": {"start": 0.0, "stop": 5.0, "step": 0.01}, "times": [1.0]},
        "series": {"times": {"start": 0.0, "stop": 2.0, "step": 1.0}},
        "outputs": ["frames", "time_series", "amplitudes", "bound_states"]
    })
}

fn with_oracle(mut v: Value, tolerance: f64) -> Value {
    v["compare"] = json!(true);
    v["oracle"] = json!({
        "grid": {"x_min": -20.0, "x_max": 20.0, "dx": 0.01, "dt": 4e-4, "absorbing_margin": 5.0},
        "tolerance": tolerance
    });
    v
}

fn write_scenario(dir: &Path, v: &Value) -> String {
    let p = dir.join("scenario.json");
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unknown_field_exits_2_with_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = small_scenario();
    v["packet"]["width"] = json!(1.0);
    let path = write_scenario(tmp.path(), &v);
    let o = run(&["--out", "o", "scenario", &path], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("packet.width"), "{}", stderr(&o));
    assert!(!tmp.path().join("o").exists(), "nothing may be written for a rejected scenario");
}

#[test]
fn packet_past_c_exits_2_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = small_scenario();
    v["packet"]["b"] = json!(0.3);
    let path = write_scenario(tmp.path(), &v);
    let o = run(&["--out", "o", "scenario", &path], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("precondition"), "{}", stderr(&o));
}

#[test]
fn compare_records_the_l2_difference() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), &with_oracle(small_scenario(), 1e-2));
    let o = run(&["--out", "o", "scenario", &path], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&tmp.path().join("o"));
    let c = &m["comparisons"][0];
    assert_eq!(c["t"], json!(1.0));
    assert_eq!(c["points"], json!(501));
    let rel = c["relative_l2"].as_f64().unwrap();
    assert!(rel > 0.0 && rel < 1e-2, "relative L2 {rel}");
    assert!(c["l2"].as_f64().unwrap() > 0.0);
    assert!(tmp.path().join("o/comparison.csv").exists());
}

#[test]
fn missed_tolerance_exits_3_after_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), &with_oracle(small_scenario(), 1e-12));
    let o = run(&["--out", "o", "oracle", "--scenario", &path], tmp.path(), None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let m = manifest(&tmp.path().join("o"));
    assert_eq!(m["tolerance_failures"].as_array().unwrap().len(), 1);
    assert!(tmp.path().join("o/oracle/frame_000.csv").exists());
    // the oracle command writes grid frames only
    assert!(!tmp.path().join("o/frames").exists());
}

#[test]
fn csv_output_is_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), &small_scenario());
    for (dir, threads) in [("a", Some("1")), ("b", Some("2")), ("c", None)] {
        let o = run(&["--out", dir, "scenario", &path], tmp.path(), threads);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["frames/frame_000.csv", "series.csv", "amplitudes.csv", "bound_states.json"] {
        let a = std::fs::read(tmp.path().join("a").join(file)).unwrap();
        for other in ["b", "c"] {
            let b = std::fs::read(tmp.path().join(other).join(file)).unwrap();
            assert!(a == b, "{file} differs between runs a and {other}");
        }
    }
}

#[test]
fn manifest_records_every_default() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_scenario(tmp.path(), &with_oracle(small_scenario(), 1e-2));
    let o = run(&["--out", "o", "scenario", &path], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&tmp.path().join("o"));
    let s = &m["scenario"];
    let has = |v: &Value, keys: &[&str]| {
        for k in keys {
            assert!(v.get(k).is_some(), "missing {k} in {v}");
        }
    };
    has(&s["params"], &["m", "hbar"]);
    has(
        &s["evolution"]["momentum"],
        &["rule", "p_max", "tail_tolerance", "p_max_cap", "min_nodes", "gauss_order", "phase_per_panel", "error_samples", "warn_above"],
    );
    has(&s["evolution"], &["side", "form"]);
    has(&s["series"]["quadrature"], &["x_step", "tail_mass", "edge_warning"]);
    has(&s["amplitudes"], &["p_min", "p_max", "count", "sheet", "identity_tolerance"]);
    has(&s["bound_states"], &["scan_points", "floor", "tolerance"]);
    assert!(s["bound_states"]["gamma_max"].as_f64().unwrap() > 0.0);
    has(
        &s["oracle"]["grid"],
        &["x_min", "x_max", "dx", "dt", "absorbing_margin", "absorbing_strength", "drift_limit", "richardson"],
    );
    has(&s["oracle"], &["window", "tolerance"]);
    // automatic cutoffs are resolved per frame
    assert!(m["frame_reports"][0]["p_max"].as_f64().unwrap() > 0.0);
    assert!(m["resolved"]["oracle_window"].is_array());
    assert_eq!(m["resolved"]["series_times"], json!(3));
}

#[test]
fn amplitudes_subcommand_prints_csv() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("step.json"), r#"{"c": 0, "d": 0, "v0": 1}"#).unwrap();
    let o = run(&["amplitudes", "--potential", "step.json", "--p-grid", "-3:3:40"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("p,q_re,q_im,tl_re,tl_im,rl_re,rl_im,tr_re,tr_im,rr_re,rr_im,uni1"));
    assert_eq!(lines.count(), 40);

    let o = run(&["amplitudes", "--potential", "step.json", "--p-grid", "-1:1:3"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2), "p = 0 lies on the grid");
    let o = run(&["amplitudes", "--potential", "step.json", "--p-grid", "1:2"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bound_states_subcommand_reports_the_delta_level() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("delta.json"), r#"{"c": 0, "d": 0, "v0": 0, "deltas": [[0, -0.125]]}"#).unwrap();
    let o = run(&["--out", "o", "bound-states", "--potential", "delta.json"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("o/bound_states.json")).unwrap()).unwrap();
    let states = v.as_array().unwrap();
    assert_eq!(states.len(), 1);
    assert!((states[0]["gamma"].as_f64().unwrap() - 0.125).abs() < 1e-10);
    assert!((states[0]["energy"].as_f64().unwrap() + 1.0 / 128.0).abs() < 1e-10);
    for k in ["n_squared", "residue_re", "residue_im"] {
        assert!(states[0].get(k).is_some());
    }
}

#[test]
fn figure_presets_print_as_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["figure", "fig4", "--print-scenario"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["potential"]["deltas"], json!([[0.0, -0.125]]));
    assert_eq!(v["potential"]["v0"], json!(1.0));
    assert_eq!(v["evolution"]["times"], json!([5.0]));
    assert_eq!(v["compare"], json!(true));
    // the printed preset is itself a valid scenario file
    std::fs::write(tmp.path().join("p.json"), &o.stdout).unwrap();
    let s = scatter1d_cli::scenario::Scenario::load(&tmp.path().join("p.json")).unwrap();
    s.validate().unwrap();
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["figure", "fig2", "--print-scenario"], tmp.path(), Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}
