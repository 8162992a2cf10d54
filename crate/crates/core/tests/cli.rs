use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fracstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracstab"))
        .args(args)
        .output()
        .expect("spawn fracstab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn mlf_eval_prints_twelve_digits() {
    let o = fracstab(&["mlf", "eval", "--q", "0.5", "--z", "-1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.427583576156");
}

#[test]
fn mlf_eval_two_parameter() {
    // E_{1,2}(z) = (e^z - 1)/z
    let o = fracstab(&["mlf", "eval", "--q", "1", "--beta", "2", "--z", "-2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    let want = (1.0 - (-2.0f64).exp()) / 2.0;
    assert!((v - want).abs() < 1e-11, "{v} vs {want}");
}

#[test]
fn missing_config_exits_2_and_names_file() {
    let o = fracstab(&["run", "missing.conf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.conf"), "{}", stderr(&o));
}

#[test]
fn usage_error_exits_2_with_usage() {
    let o = fracstab(&["mlf", "eval", "--q", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = fracstab(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn demo_lmi_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracstab(&["demo", "lmi", "--q", "0.5", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("result = PASS"));
    let order: Vec<usize> = ["[scenario]", "[certificate]", "[verification]", "[timing]"]
        .iter()
        .map(|s| text.find(s).unwrap_or_else(|| panic!("missing {s}")))
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
    for f in ["report.txt", "report.json", "trajectory.csv", "envelope.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], serde_json::Value::Bool(true));
}

#[test]
fn trajectory_csv_schema_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracstab(&["demo", "lmi", "--levels", "2", "--horizon", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(dir.path().join("trajectory.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["t", "l_0", "u_0", "l_1", "u_1", "l_2", "u_2", "norm"]);
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|x| x.parse().unwrap()).collect();
        // nested cuts, norm = largest endpoint magnitude
        assert!(v[1] <= v[3] && v[3] <= v[5] && v[6] <= v[4] && v[4] <= v[2]);
        let norm = v[1..7].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert_eq!(norm, v[7]);
        rows += 1;
    }
    assert_eq!(rows, 101);
}

#[test]
fn verify_accepts_own_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/delay.toml");
    let cfg = cfg.to_str().unwrap();
    let o = fracstab(&["simulate", cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = dir.path().join("trajectory.csv");
    let o = fracstab(&["verify", cfg, "--trajectory", traj.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("verification: PASS"));
}

#[test]
fn seed_override_changes_stochastic_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, seed: &str| {
        let o = fracstab(&["demo", "stochastic", "--seed", seed, "--horizon", "2", "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(dir.join("report.txt")).unwrap()
    };
    let ra = run(a.path(), "1");
    let rb = run(b.path(), "2");
    assert!(ra.contains("seed = 1"));
    assert_ne!(ra, rb);
}

#[test]
fn reports_identical_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, w) in [(a.path(), "1"), (b.path(), "4")] {
        let o = fracstab(&["demo", "stochastic", "--workers", w, "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["report.txt", "report.json", "moment.csv", "envelope.csv"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between worker counts");
    }
}

#[test]
fn sweep_writes_rows_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        r#"
[scenario]
name = "sweep-test"
q = 0.5
horizon = 2.0
step = 0.02
levels = 4
matrix = [[-1.0]]
initial = [{ triangular = [0.5, 1.0, 1.5] }]

[certificate]
kind = "lmi"

[sweep]
q = [0.4, 0.6, 0.8]
step = [0.02, 0.01]
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = fracstab(&["sweep", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert!(out.join("sweep.txt").exists());
}

#[test]
fn unknown_config_key_cites_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[scenario]\nname = \"x\"\nq = 0.5\nhorizon = 1.0\nstep = 0.1\nbogus = 3\n").unwrap();
    let o = fracstab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.toml:") && err.contains("bogus"), "{err}");
}

#[test]
fn certify_small_gain_rejects_unit_loop_gain() {
    let args = [
        "certify", "small-gain", "--m1", "1", "--m2", "1", "--kappa1", "1", "--kappa2", "1", "--gamma12", "1",
        "--gamma21", "1",
    ];
    let o = fracstab(&args);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("small-gain"));
}
