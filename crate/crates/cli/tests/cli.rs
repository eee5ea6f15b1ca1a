use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn shape(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shape"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    cmd.output().expect("binary runs")
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn unknown_protocol_fails_with_valid_names() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "protocols = [\"stirap-magic\"]\n[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1\nt0 = 0.025\n",
    );
    let out_dir = tmp.path().join("out");
    let o = shape(&["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap()], None);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stirap-magic") && err.contains("line 1"), "{err}");
    for name in ["adiabatic", "shape", "rabi-pi", "composite-xyx", "stirap"] {
        assert!(err.contains(name), "{err}");
    }
    assert!(!out_dir.exists());
}

#[test]
fn unknown_protocol_on_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let o = shape(
        &["scan", "--config", &config("fig2_rabi_scan.toml"), "--protocols", "shape,bogus", "--out", tmp.path().to_str().unwrap()],
        None,
    );
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn fig2_config_echoes_dimensionless_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let o = shape(
        &["simulate", "--config", &config("fig2_detuning_scan.toml"), "--steps", "400", "--out", tmp.path().to_str().unwrap()],
        None,
    );
    // the config declares `scan`, so invoking `simulate` is refused
    assert!(!o.status.success());

    let cfg = write(
        tmp.path(),
        "fig2.toml",
        "time_unit = \"ns\"\n[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1\nt0 = 25\n",
    );
    let o = shape(&["simulate", "--config", &cfg, "--steps", "400", "--out", tmp.path().to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&read(tmp.path(), "manifest.json")).unwrap();
    let s = &m["inputs"]["scheme"];
    assert!((s["omega"].as_f64().unwrap() - 5.0).abs() < 1e-12);
    assert!((s["tau"].as_f64().unwrap() - 0.157).abs() < 5e-4);
    assert!((s["omega0"].as_f64().unwrap() - 31.4159).abs() < 1e-4);
    assert_eq!(m["inputs"]["integrator"], "midpoint-exponential");
    assert_eq!(m["results"]["shape"]["n_steps"], 400);
    assert!(m["input_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn rabi_error_scan_has_164_rows_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("fig2_rabi_scan.toml");
    let o = shape(&["scan", "--config", &cfg, "--out", a.path().to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = shape(&["scan", "--config", &cfg, "--out", b.path().to_str().unwrap()], Some(1));
    assert!(o.status.success());

    let csv = read(a.path(), "scan.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("perturbation,protocol,fidelity,resolution"));
    assert_eq!(lines.count(), 164);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    for name in ["scan.csv", "scan_reference_only.csv", "manifest.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name} differs between runs");
    }
}

#[test]
fn fig5b_ends_in_the_target_state() {
    let tmp = tempfile::tempdir().unwrap();
    let o = shape(&["figure", "fig5b", "--out", tmp.path().to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(tmp.path(), "fig5b.csv");
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(last[1], "p3");
    assert!(last[2].parse::<f64>().unwrap() >= 0.999, "{last:?}");
    let m: serde_json::Value = serde_json::from_str(&read(tmp.path(), "manifest.json")).unwrap();
    assert_eq!(m["inputs"]["figure"], "fig5b");
}

#[test]
fn figure_id_via_flag_and_unknown_id() {
    let tmp = tempfile::tempdir().unwrap();
    let o = shape(&["figure", "--figure", "fig4", "--out", tmp.path().to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(tmp.path().join("fig4.csv").exists());
    let o = shape(&["figure", "fig9", "--out", tmp.path().to_str().unwrap()], None);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig9"));
}

#[test]
fn static_scheme_synthesizes_zero_column() {
    let tmp = tempfile::tempdir().unwrap();
    let o = shape(&["synthesize", "--config", &config("square_synthesize.toml"), "--out", tmp.path().to_str().unwrap()], None);
    assert!(o.status.success());
    let csv = read(tmp.path(), "synthesize.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap() == 0.0));
}

#[test]
fn stirap_synthesis_stays_below_omega0() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "samples = 201\n[scheme]\nname = \"stirap-sin4\"\nomega0 = 5\nperiod = 0.26\ndelay_fraction = 0.2\ndetuning = 0.5\n",
    );
    let o = shape(&["synthesize", "--config", &cfg, "--out", tmp.path().to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(tmp.path(), "synthesize.csv");
    let peak = csv
        .lines()
        .skip(1)
        .map(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(peak > 0.0 && peak <= 1.0, "{peak}");
}

#[test]
fn config_errors_are_line_anchored() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[scheme]\nname = \"allen-eberly\"\nomega0 = 5\nbeta = 1\nt0 = 0.025\nomgea = 3\n");
    let o = shape(&["simulate", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()], None);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 6") && err.contains("omgea"), "{err}");

    let cfg = write(tmp.path(), "d.toml", "[scheme]\nname = \"allen-eberly\"\nomega0 = -5\nbeta = 1\nt0 = 0.025\n");
    let o = shape(&["simulate", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()], None);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn missing_output_directory_parent_is_created_and_failed_runs_leave_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    // the output path is an existing file, so nothing can be written
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let o = shape(&["figure", "fig4", "--out", blocker.join("sub").to_str().unwrap()], None);
    assert!(!o.status.success());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);

    let nested = tmp.path().join("a/b/c");
    let o = shape(&["figure", "fig4", "--out", nested.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(nested.join("manifest.json").exists());
}
