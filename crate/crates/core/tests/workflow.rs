use std::path::{Path, PathBuf};

use lfc_core::plant::LoadProfile;
use lfc_core::workflow::{
    cmd_compare, cmd_replay, cmd_simulate, Overrides, RunRecord, RECORD_FILE, TRACE_FILE,
};
use lfc_core::{ControllerKind, Error, Scenario};

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn write_scenario(dir: &Path, s: &Scenario) -> PathBuf {
    let p = dir.join("s.toml");
    s.save(&p).unwrap();
    p
}

#[test]
fn simulate_writes_one_row_per_step_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let rec = cmd_simulate(
        &bundled("step02"),
        &out,
        &Overrides {
            controller: Some(ControllerKind::Pid),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(rec.controller, ControllerKind::Pid);
    let trace = std::fs::read_to_string(out.join(TRACE_FILE)).unwrap();
    assert!(
        trace.starts_with("t,delta_f,dp_mtg,dp_deg,dp_fc,dp_bess,dp_fess,dp_pv,dp_stpg,load,u\n")
    );
    let r = rows(&trace);
    assert_eq!(r.len(), 2001);
    assert_eq!(r[2000][0], 20.0);

    let loaded = RunRecord::load(&out.join(RECORD_FILE)).unwrap();
    assert_eq!(loaded.trace_sha256, rec.trace_sha256);
    assert!(cmd_replay(&out.join(RECORD_FILE)).unwrap().identical);
}

#[test]
fn replay_detects_a_tampered_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    cmd_simulate(&bundled("step03"), &out, &Overrides::default()).unwrap();
    let path = out.join(TRACE_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(
        &path,
        text.replacen("0.0000000000000000e0", "1.0000000000000000e0", 1),
    )
    .unwrap();
    assert!(!cmd_replay(&out.join(RECORD_FILE)).unwrap().identical);
}

#[test]
fn zero_load_stays_at_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), &Scenario::step_load("quiet", 0.0, 2.0, 1));
    cmd_simulate(&p, &dir.path().join("out"), &Overrides::default()).unwrap();
    let r = rows(&std::fs::read_to_string(dir.path().join("out").join(TRACE_FILE)).unwrap());
    assert_eq!(r.len(), 201);
    assert!(r.iter().all(|row| row[1..].iter().all(|&v| v == 0.0)));
}

#[test]
fn load_step_lands_on_the_right_sample() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::step_load("two-step", 0.4, 6.0, 1);
    s.load = LoadProfile::step_at(0.4, 4.0, 0.3);
    let p = write_scenario(dir.path(), &s);
    cmd_simulate(&p, &dir.path().join("out"), &Overrides::default()).unwrap();
    let r = rows(&std::fs::read_to_string(dir.path().join("out").join(TRACE_FILE)).unwrap());
    let load_at = |t: f64| r.iter().find(|row| (row[0] - t).abs() < 1e-9).unwrap()[9];
    assert_eq!(load_at(3.99), 0.4);
    assert_eq!(load_at(4.0), 0.7);
    assert_eq!(load_at(4.01), 0.7);
}

#[test]
fn compare_runs_duplicates_identically() {
    let dir = tempfile::tempdir().unwrap();
    let kinds = [
        ControllerKind::Pid,
        ControllerKind::Narma,
        ControllerKind::Pid,
    ];
    let out = dir.path().join("cmp");
    let metrics = cmd_compare(&bundled("step02"), &out, &kinds, &Overrides::default()).unwrap();
    let labels: Vec<_> = metrics.iter().map(|(l, _)| l.as_str()).collect();
    assert_eq!(labels, ["pid", "narma", "pid_2"]);
    assert_eq!(metrics[0].1, metrics[2].1);

    let csv = std::fs::read_to_string(out.join("compare_trace.csv")).unwrap();
    assert!(
        csv.starts_with("t,load,delta_f_pid,u_pid,delta_f_narma,u_narma,delta_f_pid_2,u_pid_2\n")
    );
    for row in rows(&csv) {
        assert_eq!(row[2..4], row[6..8]);
    }
}

#[test]
fn missing_weights_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::step_load("no-weights", 0.2, 1.0, 1);
    s.controller = ControllerKind::Narma;
    s.narma.weights_file = Some("absent.txt".into());
    let p = write_scenario(dir.path(), &s);
    let err = cmd_simulate(&p, &dir.path().join("out"), &Overrides::default()).unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
}

#[test]
fn bundled_scenarios_round_trip_through_toml() {
    for name in ["step02", "step03", "step04_plus_03at4"] {
        let path = bundled(name);
        let s = Scenario::load(&path).unwrap();
        let again = Scenario::parse(&s.to_toml_string().unwrap(), &path).unwrap();
        assert_eq!(again, s, "{name}");
    }
}
