use std::process::Command;

use satqkd::cli::{run_sweep, write_sweep_csv, SweepMode, SweepRequest, RATE_PER_SECOND_COLUMN, SWEEP_HEADER};
use satqkd::{ProtocolKind, ScenarioConfig, ScenarioPreset};

fn small_request() -> SweepRequest {
    let mut s = ScenarioPreset::Uplink11Db.scenario();
    s.distance_min_km = 200.0;
    s.distance_max_km = 1000.0;
    let mut req = SweepRequest::new(s, vec![ProtocolKind::Sarg04, ProtocolKind::Bb84]);
    req.step_km = 200.0;
    req
}

fn csv_text(req: &SweepRequest) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(&run_sweep(req).unwrap(), req.pulse_rate_hz, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn csv_rows_follow_protocol_then_distance() {
    let text = csv_text(&small_request());
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows[..5].iter().all(|r| r[2] == "bb84"));
    assert!(rows[5..].iter().all(|r| r[2] == "sarg04" && r[3] == "optimized"));
    let km: Vec<f64> = rows[..5].iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(km, vec![200.0, 400.0, 600.0, 800.0, 1000.0]);
    // past the critical distance the intensity cells are empty and the rate is zero
    let last = &rows[4];
    assert_eq!(last[4], "");
    assert_eq!(last[7], "0");
}

#[test]
fn csv_is_byte_stable() {
    let req = small_request();
    assert_eq!(csv_text(&req), csv_text(&req));
}

#[test]
fn pulse_rate_appends_column() {
    let mut req = small_request();
    req.pulse_rate_hz = Some(1e8);
    let text = csv_text(&req);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.last().copied(), Some(RATE_PER_SECOND_COLUMN));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let per_pulse: f64 = row[7].parse().unwrap();
    let per_second: f64 = row[10].parse().unwrap();
    assert!((per_second - per_pulse * 1e8).abs() <= 1e-6 * per_second);
}

#[test]
fn fixed_mu_mode_pins_mu() {
    let mut req = small_request();
    req.protocols = vec![ProtocolKind::Bb84];
    req.mode = SweepMode::FixedMu;
    req.mu = Some(0.1);
    let series = run_sweep(&req).unwrap();
    assert!(series[0].points.iter().all(|p| p.best_mu == Some(0.1)));
    assert!(series[0].points.iter().all(|p| p.eve_info_at_optimum.is_some()));
    let text = csv_text(&req);
    assert!(text.lines().skip(1).all(|l| l.contains(",fixed-mu,0.1,")));
}

#[test]
fn config_file_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ScenarioPreset::ALL {
        let path = dir.path().join(format!("{preset}.toml"));
        let s = preset.scenario();
        std::fs::write(&path, ScenarioConfig::from_scenario(&s).to_toml_string()).unwrap();
        let back = ScenarioConfig::load(&path).unwrap().resolve().unwrap();
        assert_eq!(back, s);
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_satqkd"))
}

#[test]
fn binary_writes_sweep_with_config_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("link.toml");
    std::fs::write(&config, "turb_loss_db = 8.0\ndistance_min_km = 300\ndistance_max_km = 900\n").unwrap();
    let out = dir.path().join("sweep.csv");
    let status = bin()
        .args(["--config", config.to_str().unwrap(), "sweep", "--scenario", "uplink5db"])
        .args(["--protocol", "bb84", "--lmax", "500", "--step", "100", "--out", out.to_str().unwrap()])
        .env("SATQKD_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    // config sets the lower end, the flag overrides the upper end
    let km: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(km, vec!["300", "400", "500"]);
}

#[test]
fn binary_rejects_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for args in [["--scenario", "mars", "--protocol", "bb84"], ["--scenario", "downlink", "--protocol", "e91"]] {
        let status = bin().arg("sweep").args(args).args(["--out", out.to_str().unwrap()]).status().unwrap();
        assert!(!status.success());
    }
    assert!(!bin().args(["sweep", "--mode", "sometimes"]).status().unwrap().success());
}

#[test]
fn binary_reports_crossings_and_critical_distance() {
    let out = bin().arg("crossing").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bb84 mu=0.1 crossing_loss_db=13.2"));

    let out = bin()
        .args(["critical-distance", "--scenario", "uplink11db", "--protocol", "sarg04"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("critical_distance_km="));
}
