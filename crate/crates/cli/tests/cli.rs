use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/config/benchmark.toml")
}

fn vsmfarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsmfarm"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn trim_writes_operating_point_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("trim");
    let o = vsmfarm(&["trim", "--config", s(&config()), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let op = fs::read_to_string(out.join("operating_point.toml")).unwrap();
    assert!(op.contains("residual_norm"));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"trim\""));
    assert!(manifest.contains("timestamp = \"0\""));
    assert!(manifest.contains("role = \"config\""));
    assert!(manifest.contains("file = \"operating_point.toml\""));
}

#[test]
fn malformed_config_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "format_version = 1\n[machine\nr_s = ").unwrap();
    let out = tmp.path().join("out");
    let o = vsmfarm(&["trim", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.exists());
    let leftovers: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 1, "{leftovers:?}");
}

#[test]
fn unreachable_power_is_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config()).unwrap().replace("p_grid_pu = 0.7", "p_grid_pu = 5.0");
    let cfg = tmp.path().join("heavy.toml");
    fs::write(&cfg, text).unwrap();
    // Controllers designed at the nominal point, so only the trim is at stake.
    let ctl = tmp.path().join("base");
    let o = vsmfarm(&["baseline", "--config", s(&config()), "--out", s(&ctl)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("trim");
    let o = vsmfarm(&[
        "trim",
        "--config",
        s(&cfg),
        "--controllers",
        s(&ctl.join("controllers.toml")),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("infeasible target"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn missing_controller_file_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere.toml");
    let out = tmp.path().join("out");
    let o = vsmfarm(&["trim", "--config", s(&config()), "--controllers", s(&missing), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("nowhere.toml"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn decoupled_margins_cover_every_loop() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let o = vsmfarm(&["margins", "--config", s(&config()), "--decoupled", "--stage-label", "A", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("margins.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("stage,unit,loop,phi_m_deg,omega_o"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 28);
    assert!(rows.iter().all(|r| r.starts_with("A,")));
}

#[test]
fn unknown_loop_in_sequence_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq.txt");
    fs::write(&seq, "VSMQ\nTORQUE\n").unwrap();
    let out = tmp.path().join("r");
    let o = vsmfarm(&["redesign", "--config", s(&config()), "--sequence", s(&seq), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lin");
    let run = || {
        let o = vsmfarm(&["linearize", "--config", s(&config()), "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        fs::remove_dir_all(&out).unwrap();
        files
    };
    let a = run();
    let b = run();
    assert_eq!(a.len(), 4);
    assert!(a == b);
}

#[test]
fn linearize_accepts_its_own_operating_point() {
    let tmp = tempfile::tempdir().unwrap();
    let trim = tmp.path().join("trim");
    assert!(vsmfarm(&["trim", "--config", s(&config()), "--out", s(&trim)]).status.success());
    let out = tmp.path().join("lin");
    let op = trim.join("operating_point.toml");
    let o = vsmfarm(&["linearize", "--config", s(&config()), "--op", s(&op), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("role = \"operating_point\""));
}

#[test]
fn zero_iteration_redesign_returns_the_input() {
    let tmp = tempfile::tempdir().unwrap();
    let base = tmp.path().join("base");
    assert!(vsmfarm(&["baseline", "--config", s(&config()), "--stage-label", "A", "--out", s(&base)])
        .status
        .success());
    let seq = tmp.path().join("seq.txt");
    fs::write(&seq, "VSMQ\nGSCq\nGSCd\nRSCd\nRSCq\nVSMP\nVDC\n").unwrap();
    let out = tmp.path().join("r");
    let ctl = base.join("controllers.toml");
    let o = vsmfarm(&[
        "redesign",
        "--config",
        s(&config()),
        "--controllers",
        s(&ctl),
        "--sequence",
        s(&seq),
        "--iterations",
        "0",
        "--stage-label",
        "A",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("controllers.toml")).unwrap(), fs::read_to_string(&ctl).unwrap());
}

#[test]
fn compared_dip_overlays_both_sets_and_records_dt() {
    let tmp = tempfile::tempdir().unwrap();
    let base = tmp.path().join("base");
    assert!(vsmfarm(&["baseline", "--config", s(&config()), "--out", s(&base)]).status.success());
    let out = tmp.path().join("dip");
    let o = vsmfarm(&[
        "simulate",
        "--config",
        s(&config()),
        "--scenario",
        "voltage_dip",
        "--compare",
        s(&base.join("controllers.toml")),
        "--dt",
        "1e-4",
        "--tf",
        "1.6",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("voltage_dip.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("trd_udc") && header.contains("frd_udc"), "{header}");
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("dt = \"1e-4\""), "{manifest}");
}

#[test]
fn malformed_scenario_file_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("sc.toml");
    fs::write(&sc, "name = \"x\"\nduration_s = 1.0\n[[event]]\ntime_s = 2.0\ntarget = \"grid.voltage\"\nchange = 0.1\n")
        .unwrap();
    let out = tmp.path().join("sim");
    let o = vsmfarm(&["simulate", "--config", s(&config()), "--scenario", s(&sc), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.exists());
}
