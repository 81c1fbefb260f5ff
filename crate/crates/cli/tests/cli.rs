use std::path::{Path, PathBuf};
use std::process::Command;

use adlreq_cli::run_args;

struct Work {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Work {
    fn new(body: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("config.toml");
        std::fs::write(&config, format!("schema_version = 1\n{body}")).unwrap();
        Work { dir, config }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, cmd: &str, out: &str, extra: &[&str]) -> Result<(), adlreq_cli::CliError> {
        let mut args: Vec<String> = vec![
            cmd.into(),
            "--config".into(),
            self.config.display().to_string(),
            "--out".into(),
            self.path(out).display().to_string(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        run_args(args)
    }
}

const TWO_TRIALS: &str = "seed = 3\n[inputs.synthetic]\ntrials = 2\n";

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(String::from)
        .collect()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path.join("manifest.json")).unwrap()).unwrap()
}

fn stage(m: &serde_json::Value, name: &str) -> (u64, u64, u64) {
    let s = m["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["stage"] == name)
        .unwrap_or_else(|| panic!("no stage {name}"));
    (
        s["input"].as_u64().unwrap(),
        s["kept"].as_u64().unwrap(),
        s["excluded"].as_u64().unwrap(),
    )
}

#[test]
fn simulate_writes_one_record_per_model_and_trial() {
    let w = Work::new(TWO_TRIALS);
    w.run("simulate", "out", &[]).unwrap();
    let index = data_rows(&w.path("out/records/index.csv"));
    // 40 cylinders and 5 hands per trial, no objects for the default tasks
    assert_eq!(index.len(), 90);
    let m = manifest(&w.path("out"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 3);
    assert_eq!(stage(&m, "load"), (2, 2, 0));
    assert_eq!(stage(&m, "filter"), (2, 2, 0));
    assert_eq!(stage(&m, "inverse_dynamics"), (2, 2, 0));
    assert_eq!(stage(&m, "torque_screen"), (90, 90, 0));
    assert!(m.get("timing").is_none());
    for row in index.iter().take(5) {
        let file = row.split(',').nth(2).unwrap();
        assert!(w.path("out/records").join(file).is_file(), "{file}");
    }
}

#[test]
fn validation_errors_exit_2_without_outputs() {
    let w = Work::new("[stack]\nmasses = []\n");
    let out = w.path("out");
    let status = Command::new(env!("CARGO_BIN_EXE_adlreq"))
        .args(["simulate", "--config"])
        .arg(&w.config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("mass"));
    assert!(!out.exists());

    let missing_out = Command::new(env!("CARGO_BIN_EXE_adlreq"))
        .args(["fit"])
        .output()
        .unwrap();
    assert_eq!(missing_out.status.code(), Some(2));

    let unknown = Work::new("[stack]\nmass = [1.0]\n");
    assert_eq!(unknown.run("simulate", "out", &[]).unwrap_err().exit_code(), 2);
}

#[test]
fn runtime_errors_exit_1() {
    let w = Work::new("");
    let missing = w.path("nowhere/trial.csv");
    let e = w.run("summarize", "out", &[missing.to_str().unwrap()]).unwrap_err();
    assert_eq!(e.exit_code(), 1, "{e}");
}

#[test]
fn fit_one_group_and_table_round_trip() {
    let w = Work::new("seed = 8\n[inputs.synthetic]\ntrials = 1\ntasks = [\"III\"]\n[stack]\ninclude_hand = false\ninclude_humerus = false\n");
    w.run("simulate", "out", &[]).unwrap();
    w.run("fit", "out", &[]).unwrap();
    let text = std::fs::read_to_string(w.path("out/coefficients.csv")).unwrap();
    let table = adlreq::regression::CoefficientTable::parse_csv(&text).unwrap();
    // one (task, body) group: five joints at five percentiles
    assert_eq!(table.entries().count(), 25);
    assert!(table.entries().all(|e| e.combo.task == adlreq::trajectory::Task::III));
    assert_eq!(table.to_csv_with(adlreq_cli::format::fmt6), text);
    assert!(text.contains("# records=20\n"));
    assert_eq!(data_rows(&w.path("out/skipped.csv")).len(), 0);

    // EF peak torque is positive for an ulna cylinder and its fit is tight
    let ef = table
        .entries()
        .find(|e| e.combo.joint == adlreq::chain::ReportJoint::EF && e.percentile == 100)
        .unwrap();
    assert!(ef.k > 0.0 && ef.r > 0.99, "{ef:?}");
}

#[test]
fn predict_accepts_extremes_only() {
    let w = Work::new(TWO_TRIALS);
    w.run("simulate", "out", &[]).unwrap();
    w.run("fit", "out", &[]).unwrap();
    w.run(
        "predict",
        "out",
        &["--component", "EF/III/Hand=0.5", "--component", "WF/III/Hand=0.5"],
    )
    .unwrap();
    let rows = data_rows(&w.path("out/predict.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("EF,0,"));

    let e = w
        .run(
            "predict",
            "p50",
            &["--component", "EF/III/Hand=0.5", "--percentile", "50"],
        )
        .unwrap_err();
    assert_eq!(e.exit_code(), 2);
    let e = w.run("predict", "bad", &["--component", "EF/III"]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn optimize_wrist_tables() {
    let w = Work::new(TWO_TRIALS);
    w.run("simulate", "out", &[]).unwrap();
    w.run("optimize-wrist", "out", &[]).unwrap();
    let rows = data_rows(&w.path("out/wrist_requirements.csv"));
    assert_eq!(rows.len(), 10);
    for kind in ["baseline", "SO", "SNO", "DO", "DNO"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{kind},"))).count(), 2);
    }
    assert_eq!(data_rows(&w.path("out/wrist_statistics.csv")).len(), 2);
    assert!(std::fs::read_to_string(w.path("out/wrist_torque.svg"))
        .unwrap()
        .starts_with("<svg"));

    let b = Work::new(&format!("{TWO_TRIALS}[wrist]\nkinds = []\n"));
    b.run(
        "optimize-wrist",
        "base",
        &["--records", w.path("out/records").to_str().unwrap()],
    )
    .unwrap();
    let rows = data_rows(&b.path("base/wrist_requirements.csv"));
    assert_eq!(rows.len(), 2);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(&f[7..11], &["0", "0", "0", "0"]);
        assert_eq!(f[12], "0");
    }
}

#[test]
fn optimize_wrist_sample_file() {
    let w = Work::new("[wrist]\nkinds = [\"DO\"]\ngrid_step = 5.0\n");
    let good = w.path("samples.csv");
    let mut text = String::from("tau_WD,tau_WF,nu_WF,nu_WD,q_WF,q_WD\n");
    for i in 0..40 {
        let s = (i as f64 * 0.37).sin();
        text.push_str(&format!(
            "{},{},{},{},0,0\n",
            -0.8 * s,
            s,
            100.0 * s,
            30.0 * (i as f64).cos()
        ));
    }
    std::fs::write(&good, text).unwrap();
    w.run("optimize-wrist", "out", &["--samples", good.to_str().unwrap()])
        .unwrap();
    assert_eq!(data_rows(&w.path("out/wrist_requirements.csv")).len(), 4);

    let bad = w.path("bad.csv");
    std::fs::write(&bad, "q_WF,q_WD,tau_WF,tau_WD,nu_WF\n0,0,1,1,1\n").unwrap();
    let e = w
        .run("optimize-wrist", "bad", &["--samples", bad.to_str().unwrap()])
        .unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("nu_WD"), "{e}");
}

#[test]
fn summarize_reports_every_task_and_joint() {
    let w = Work::new(TWO_TRIALS);
    w.run("summarize", "out", &[]).unwrap();
    let rows = data_rows(&w.path("out/kinematics.csv"));
    // five joints for each task plus the pooled group
    assert_eq!(rows.len(), 15);
    assert_eq!(rows.iter().filter(|r| r.starts_with("all,")).count(), 5);
}

#[test]
fn seed_flag_overrides_config_and_changes_output() {
    let w = Work::new(TWO_TRIALS);
    w.run("summarize", "a", &[]).unwrap();
    w.run("summarize", "b", &["--seed", "4"]).unwrap();
    assert_eq!(manifest(&w.path("b"))["seed"], 4);
    assert_ne!(
        std::fs::read(w.path("a/kinematics.csv")).unwrap(),
        std::fs::read(w.path("b/kinematics.csv")).unwrap()
    );
}

#[test]
fn trajectory_files_from_the_command_line() {
    let w = Work::new("");
    let csv = w.path("trial.csv");
    let mut text =
        String::from("# task=II\n# subject=S1\n# trial=1\ntime,shoulder_plane,shoulder_elev,SR,EF,PS,WF,WD\n");
    for k in 0..200 {
        let t = k as f64 * 0.01;
        let a = 30.0 * (t * 2.0).sin();
        text.push_str(&format!("{t},{a},{},0,{},0,{},0\n", 40.0 + a, 60.0 + a, a / 2.0));
    }
    std::fs::write(&csv, text).unwrap();
    w.run("summarize", "out", &[csv.to_str().unwrap()]).unwrap();
    let rows = data_rows(&w.path("out/kinematics.csv"));
    assert!(rows.iter().any(|r| r.starts_with("II,EF,")), "{rows:?}");
    let m = manifest(&w.path("out"));
    assert_eq!(m["inputs"][0]["path"], "trial.csv");
}

#[test]
fn timing_only_when_requested() {
    let w = Work::new(TWO_TRIALS);
    w.run("summarize", "out", &["--timing"]).unwrap();
    assert!(manifest(&w.path("out")).get("timing").is_some());
}
