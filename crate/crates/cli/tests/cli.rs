use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;

fn jamlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jamlab")).current_dir(dir).args(args).output().unwrap()
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SWEEP: &[&str] =
    &["sweep", "--solid", "ball d=1 r=0.5", "--lambdas", "10,100,1000", "--reps", "40", "--seed", "3", "--out", "s.csv"];

#[test]
fn minimal_pack_records_its_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = jamlab(dir.path(), &["pack", "--dim", "1", "--solid", "ball d=1 r=0.5", "--lambda", "100", "--seed", "7", "--out", "p.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&dir.path().join("p.jsonl.manifest.json"));
    assert_eq!(m["status"], "complete");
    assert_eq!(m["config"]["mode"], "saturate");
    assert_eq!(m["config"]["eps"], 0.0);
    assert_eq!(m["config"]["reps"], 1);
    assert_eq!(m["replications"].as_array().unwrap().len(), 1);
    let line = std::fs::read_to_string(dir.path().join("p.jsonl")).unwrap();
    let rec: Value = serde_json::from_str(line.trim()).unwrap();
    let order = ["rep", "seed", "N", "virtual_time", "vacancy_bound", "wall_ms", "guard_saturated"];
    let at: Vec<usize> = order.iter().map(|k| line.find(&format!("\"{k}\":")).unwrap()).collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]), "{line}");
    assert_eq!(rec["seed"], m["replications"][0]["seed"]);
}

#[test]
fn sweep_writes_three_rows_and_details() {
    let dir = tempfile::tempdir().unwrap();
    let o = jamlab(dir.path(), SWEEP);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lambda,reps,mean_ratio,var_ratio,se_mean,se_var,ks");
    assert_eq!(lines.len(), 4);
    let detail = std::fs::read_to_string(dir.path().join("s.csv.detail.jsonl")).unwrap();
    assert_eq!(detail.lines().count(), 120);
    let m = manifest(&dir.path().join("s.csv.manifest.json"));
    assert_eq!(m["replications"].as_array().unwrap().len(), 120);
    assert!(m["summary"]["rate_fit"].is_object());
}

#[test]
fn replay_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert!(jamlab(dir.path(), SWEEP).status.success());
    let o = jamlab(dir.path(), &["replay", "s.csv.manifest.json", "--out", "again.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(dir.path().join("s.csv")).unwrap();
    let b = std::fs::read(dir.path().join("again.csv")).unwrap();
    assert_eq!(a, b);
    let m = manifest(&dir.path().join("again.csv.manifest.json"));
    assert_eq!(m["sources"]["replay_of"], "s.csv.manifest.json");

    let measure = ["measure", "--solid", "ball d=2 r=0.2", "--lambda", "50", "--box", "0:0.5,0:1", "--reps", "3", "--seed", "9", "--out", "m.csv"];
    assert!(jamlab(dir.path(), &measure).status.success());
    assert!(jamlab(dir.path(), &["replay", "m.csv.manifest.json", "--out", "m2.csv"]).status.success());
    assert_eq!(std::fs::read(dir.path().join("m.csv")).unwrap(), std::fs::read(dir.path().join("m2.csv")).unwrap());
}

#[test]
fn exact_saturation_in_the_plane_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = jamlab(dir.path(), &["pack", "--dim", "2", "--solid", "ball d=2 r=0.1", "--lambda", "100", "--eps", "0", "--seed", "1", "--out", "p.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`eps`"), "{}", stderr(&o));
    // nothing is written for a rejected config
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_file_keys_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "solid = \"ball d=1 r=0.5\"\nlambda = 50.0\nseed = 4\nout = \"f.jsonl\"\n").unwrap();
    let o = jamlab(dir.path(), &["pack", "--config", "run.toml", "--lambda", "80"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&dir.path().join("f.jsonl.manifest.json"));
    assert_eq!(m["config"]["lambda"], 80.0);
    assert_eq!(m["sources"]["file_values"]["lambda"], 50.0);
    assert_eq!(m["sources"]["flag_values"]["lambda"], 80.0);

    std::fs::write(dir.path().join("bad.toml"), "solid = \"ball d=1 r=0.5\"\nlamda = 50.0\n").unwrap();
    let o = jamlab(dir.path(), &["pack", "--config", "bad.toml", "--seed", "1", "--out", "g.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("lamda") && err.contains("`lambda`"), "{err}");

    std::fs::write(dir.path().join("typed.toml"), "solid = \"ball d=1 r=0.5\"\nreps = \"many\"\n").unwrap();
    let o = jamlab(dir.path(), &["pack", "--config", "typed.toml", "--lambda", "9", "--seed", "1", "--out", "h.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("reps"), "{}", stderr(&o));

    let o = jamlab(dir.path(), &["pack", "--solid", "ball d=1 r=0.5", "--seed", "1", "--out", "h.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`lambda`"), "{}", stderr(&o));
}

#[test]
fn runtime_failure_marks_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // a horizon far too short to saturate the baseline
    let o = jamlab(
        dir.path(),
        &["stabilize", "--solid", "ball d=1 r=0.5", "--lambda", "100", "--center", "50", "--horizon", "0.01", "--reps", "2", "--seed", "1", "--out", "t.csv"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let m = manifest(&dir.path().join("t.csv.manifest.json"));
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("horizon"));
}

#[test]
fn interrupted_run_leaves_an_incomplete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_jamlab"))
        .current_dir(dir.path())
        .args(["sweep", "--solid", "ball d=1 r=0.5", "--lambdas", "100000", "--reps", "100000", "--seed", "1", "--out", "big.csv"])
        .spawn()
        .unwrap();
    let detail = dir.path().join("big.csv.detail.jsonl");
    let start = Instant::now();
    while std::fs::metadata(&detail).map_or(0, |m| m.len()) == 0 && start.elapsed() < Duration::from_secs(60) {
        std::thread::sleep(Duration::from_millis(20));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    let m = manifest(&dir.path().join("big.csv.manifest.json"));
    assert_eq!(m["status"], "incomplete");
    // what was flushed is whole records in replication order
    let text = std::fs::read_to_string(&detail).unwrap();
    let full: Vec<&str> = text.lines().filter(|l| l.ends_with('}')).collect();
    assert!(!full.is_empty());
    for (k, l) in full.iter().enumerate() {
        let v: Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["rep"], k as u64);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["covariance", "--solid", "ball d=1 r=0.5", "--lambda", "60", "--box", "0:0.5", "--box", "0.5:1", "--reps", "40", "--seed", "5"];
    let one = Command::new(env!("CARGO_BIN_EXE_jamlab"))
        .current_dir(dir.path())
        .env("JAMLAB_THREADS", "1")
        .args(args)
        .args(["--out", "one.csv"])
        .output()
        .unwrap();
    assert!(one.status.success(), "{}", stderr(&one));
    let three = jamlab(dir.path(), &[&args[..], &["--threads", "3", "--out", "three.csv"]].concat());
    assert!(three.status.success(), "{}", stderr(&three));
    assert_eq!(std::fs::read(dir.path().join("one.csv")).unwrap(), std::fs::read(dir.path().join("three.csv")).unwrap());
    assert_eq!(manifest(&dir.path().join("one.csv.manifest.json"))["threads"], 1);
    assert_eq!(manifest(&dir.path().join("three.csv.manifest.json"))["threads"], 3);
}

#[test]
fn help_documents_column_orders() {
    let o = jamlab(Path::new("."), &["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("lambda, reps, mean_ratio, var_ratio, se_mean, se_var, ks"));
    assert!(text.contains("rep, f_id, point_integral, volume_integral"));
    assert!(text.contains("L, tau_hat, n, method"));
}
