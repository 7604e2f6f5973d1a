use std::path::Path;
use std::process::{Command, Output};

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .expect("run simulate")
}

const SMALL: &str = "\
[scenario]
name = small
n_symbols = 4096
seed = 3

[channel]
transmittance = 0.3

[receiver]
eta = 0.7
nep = 2.82e-12

[dsp]
calibration_symbols = 16384
";

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("s.scn");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_metrics_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = simulate(&["run", "--scenario", &scn, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("scenario,param,value,t_eff"));
    let echo = std::fs::read_to_string(out.join("scenario.resolved")).unwrap();
    assert!(echo.contains("seed = 3"));
    assert!(echo.contains("nep = 2.82e-12"));
}

#[test]
fn seed_override_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let strip = |p: &Path| {
        let text = std::fs::read_to_string(p.join("metrics.csv")).unwrap();
        text.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    let mut outs = Vec::new();
    for (name, seed) in [("a", "9"), ("b", "9"), ("c", "10")] {
        let out = dir.path().join(name);
        let o = simulate(&["run", "--scenario", &scn, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        outs.push(strip(&out));
    }
    assert_eq!(outs[0], outs[1]);
    assert_ne!(outs[0], outs[2]);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let out = dir.path().join("sweep");
    let o = simulate(&[
        "sweep",
        "--scenario",
        &scn,
        "--param",
        "channel.transmittance",
        "--values",
        "0.1:0.5:5",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.lines().nth(1).unwrap().starts_with("small,channel.transmittance,1.0000000000000001e-1"));
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_scenario(dir.path(), "[receiver]\neta = 1.5\n[pilot]\nenabled = true\n");
    let o = simulate(&["run", "--scenario", &bad, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("eta") && err.contains("heterodyne"), "{err}");

    let good = write_scenario(dir.path(), SMALL);
    let o = simulate(&[
        "sweep", "--scenario", &good, "--param", "receiver.colour", "--values", "0:1:2", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = simulate(&["run", "--scenario", "no/such/file.scn", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = simulate(&["run", "--scenario", &scn, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn presets_are_listed() {
    let o = simulate(&["presets", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in [
        "fig2a_nep", "fig2b_raman", "fig2c_adc", "fig3_rin", "fig4_sweeps", "fig5_filter", "fig6_phase", "sec6_key",
    ] {
        assert!(text.contains(name), "{name}");
    }
}
