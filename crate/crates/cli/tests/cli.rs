use std::path::Path;
use std::process::{Command, Output};

use tagsr_cli::{ParetoReport, RunConfig, SetMetrics};

fn tagsr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tagsr")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn planted_run(dir: &Path, generations: usize) {
    for (name, seed) in [("est", 1), ("test", 2), ("val", 3)] {
        ok(tagsr(&["gen", "--system", "planted", "--n", "250", "--seed", &seed.to_string(), "--out", &format!("{name}.csv")], dir));
    }
    std::fs::write(
        dir.join("run.toml"),
        format!("[gp]\npop_size = 12\ngenerations = {generations}\ncomplexity = 8\nseed = 3\n[data]\nest = [\"est.csv\"]\ntest = [\"test.csv\"]\nval = [\"val.csv\"]\n"),
    )
    .unwrap();
}

fn eval(dir: &Path, args: &[&str]) -> SetMetrics {
    let mut all = vec!["eval"];
    all.extend_from_slice(args);
    serde_json::from_str(&ok(tagsr(&all, dir))).unwrap()
}

#[test]
fn identify_then_evaluate_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    planted_run(d, 8);
    ok(tagsr(&["identify", "--config", "run.toml"], d));
    for f in ["pareto.json", "equations.txt", "progress.ndjson"] {
        assert!(d.join("out").join(f).is_file(), "{f}");
    }
    let report: ParetoReport = serde_json::from_str(&std::fs::read_to_string(d.join("out/pareto.json")).unwrap()).unwrap();
    assert!(!report.models.is_empty());
    assert_eq!(std::fs::read_to_string(d.join("out/progress.ndjson")).unwrap().lines().count(), 8);
    assert!(d.join("out/series/model0_1_val.csv").is_file());

    for (i, m) in report.models.iter().enumerate() {
        let again = eval(d, &["--model", "out/pareto.json", "--data", "val.csv", "--index", &i.to_string()]);
        assert_eq!(again, m.validation.sets[0]);
    }
    let head = eval(d, &["--model", "out/pareto.json", "--data", "val.csv"]);
    assert_eq!(head, report.headline_model().validation.sets[0]);
    let best = report.models.iter().filter_map(|m| m.validation.e_s).fold(f64::INFINITY, f64::min);
    assert_eq!(report.headline_model().validation.e_s, Some(best));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    planted_run(d, 4);
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = format!("out{workers}");
        ok(tagsr(&["identify", "--config", "run.toml", "--workers", workers, "--out", &out], d));
        outputs.push(std::fs::read(d.join(out).join("pareto.json")).unwrap());
    }
    ok(tagsr(&["identify", "--config", "run.toml", "--out", "again"], d));
    outputs.push(std::fs::read(d.join("again/pareto.json")).unwrap());
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn true_model_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(tagsr(&["gen", "--system", "planted", "--n", "200", "--seed", "5", "--out", "p.csv"], d));
    let m = eval(d, &["--model", "p.json", "--data", "p.csv"]);
    assert_eq!(m.e_s, Some(0.0));
    assert_eq!(m.e_p, Some(0.0));
    assert_eq!(m.bfr, Some(100.0));
}

#[test]
fn empty_model_scores_output_rms() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(tagsr(&["gen", "--system", "planted", "--n", "200", "--seed", "5", "--out", "p.csv"], d));
    std::fs::write(
        d.join("empty.json"),
        r#"{"channels": {"inputs": 1, "outputs": 1, "noise": 1}, "terms": [], "theta": [], "equation_strings": []}"#,
    )
    .unwrap();
    let m = eval(d, &["--model", "empty.json", "--data", "p.csv"]);
    let data = tagsr::DataSet::from_csv_path(&d.join("p.csv")).unwrap();
    let rms = (data.y().iter().map(|v| v * v).sum::<f64>() / data.len() as f64).sqrt();
    assert!((m.e_s.unwrap() - rms).abs() <= 1e-15 * rms);
}

#[test]
fn missing_data_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), "[data]\nest = [\"nope.csv\"]\ntest = [\"nope.csv\"]\nval = [\"nope.csv\"]\n").unwrap();
    let out = tagsr(&["identify", "--config", "run.toml"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
    assert!(!d.join("out/pareto.json").exists());
}

#[test]
fn delay_longer_than_data_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(tagsr(&["gen", "--system", "planted", "--n", "50", "--seed", "0", "--out", "p.csv"], d));
    std::fs::write(d.join("short.csv"), "u1,y1\n0.5,0.1\n").unwrap();
    let out = tagsr(&["eval", "--model", "p.json", "--data", "short.csv"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn init_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(tagsr(&["init-config"], dir.path()));
    assert_eq!(RunConfig::parse(&text).unwrap(), RunConfig::default());
    ok(tagsr(&["init-config", "--out", "run.toml"], dir.path()));
    assert_eq!(std::fs::read_to_string(dir.path().join("run.toml")).unwrap(), text);
}

#[test]
fn generators_write_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for system in ["planted", "boucwen", "cstr"] {
        let csv = format!("data/{system}.csv");
        ok(tagsr(&["gen", "--system", system, "--n", "300", "--seed", "2", "--out", &csv], d));
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join(format!("data/{system}.json"))).unwrap()).unwrap();
        assert_eq!(meta["system"], system);
        assert_eq!(meta["n"], 300);
        assert_eq!(tagsr::DataSet::from_csv_path(&d.join(&csv)).unwrap().len(), 300);
    }
}
