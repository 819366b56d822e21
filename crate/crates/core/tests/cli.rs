use std::path::Path;
use std::process::Command;

fn soundsmc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_soundsmc")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn plan_prints_sample_counts() {
    assert_eq!(soundsmc(&["plan", "okamoto", "0.01", "0.95"]).1.trim(), "18445");
    assert_eq!(soundsmc(&["plan", "clopper_pearson", "0.01", "0.95"]).1.trim(), "9701");
    assert_eq!(soundsmc(&["plan", "hoeffding", "0.05", "0.9", "--support", "0,1"]).1.trim(), "600");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(soundsmc(&["plan"]).0, 2);
    assert_eq!(soundsmc(&["plan", "okamoto", "0.01", "1.5"]).0, 2);
    assert_eq!(soundsmc(&["frobnicate"]).0, 2);
}

#[test]
fn sequential_plan_on_fig2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("check.csv");
    let (code, out, err) = soundsmc(&[
        "check", "--model", "builtin:fig2:1000,1", "--prop", r#"{"kind":"p_reach","goal":"t1"}"#,
        "--mode", "sequential", "--eps", "0.01", "--gamma", "0.95", "--seed", "5",
        "--csv-out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("samples:  9701"), "{out}");
    let text = read(&csv);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "model,property,method,mode,k,gamma,estimate,lo,hi,sound,seconds");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // the model name "builtin:fig2:1000,1" is quoted and contains a comma
    let n = row.len();
    let (lo, hi): (f64, f64) = (row[n - 4].parse().unwrap(), row[n - 3].parse().unwrap());
    assert!(hi - lo <= 0.02);
    assert_eq!(row[n - 2], "sound");
    assert!(row.contains(&"cp_plan") && row.contains(&"9701"));
}

#[test]
fn file_model_and_property() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let prop = dir.path().join("p.json");
    std::fs::write(
        &model,
        r#"{"states":2,"initial":0,"transitions":[[0,0,0.5],[0,1,0.5],[1,1,1.0]],"rewards":[1,0],"labels":{"done":[1]}}"#,
    )
    .unwrap();
    std::fs::write(&prop, r#"{"kind":"e_cumulative","bound":4}"#).unwrap();
    let (code, out, err) = soundsmc(&[
        "check", "--model", model.to_str().unwrap(), "--prop", prop.to_str().unwrap(), "--k", "2000",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("method:   dkw (sound)"), "{out}");
    let (code, _, _) = soundsmc(&["check", "--model", "/nonexistent.json", "--prop", prop.to_str().unwrap(), "--k", "5"]);
    assert_eq!(code, 1);
    std::fs::write(&model, "{not json").unwrap();
    let (code, _, _) = soundsmc(&["check", "--model", model.to_str().unwrap(), "--prop", prop.to_str().unwrap(), "--k", "5"]);
    assert_eq!(code, 3);
}

#[test]
fn truncated_interval_when_epsilon_prime_given() {
    let (code, out, err) = soundsmc(&[
        "check", "--model", "builtin:chain:2,0.9", "--prop", r#"{"kind":"e_reach","goal":"goal"}"#,
        "--k", "5000", "--epsilon-prime", "0.01",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("truncated_dkw (sound given the bounding-set horizon)"), "{out}");
}

#[test]
fn unsound_methods_are_tagged_unsound() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["wald", "normal", "student_t"] {
        let csv = dir.path().join(format!("{method}.csv"));
        let (code, _, err) = soundsmc(&[
            "check", "--model", "builtin:fig2:10,1", "--prop", r#"{"kind":"p_reach","goal":"t1"}"#,
            "--method-prefs", method, "--k", "100", "--csv-out", csv.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let text = read(&csv);
        assert!(text.lines().nth(1).unwrap().contains(",unsound,"), "{text}");
    }
    let csv = dir.path().join("cr.csv");
    let (code, _, err) = soundsmc(&[
        "check", "--model", "builtin:fig2:10,1", "--prop", r#"{"kind":"p_reach","goal":"t1"}"#,
        "--mode", "sequential", "--eps", "0.05", "--method-prefs", "chow_robbins",
        "--csv-out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(read(&csv).contains(",unsound,"));
}

#[test]
fn coverage_summaries() {
    let (code, out, _) = soundsmc(&["coverage", "fixed", "--method", "wald", "--k", "50", "--gamma", "0.9"]);
    assert_eq!(code, 0);
    let min: f64 = out.lines().find_map(|l| l.strip_prefix("min coverage:")).unwrap().trim().parse().unwrap();
    assert!(min < 0.9);
    let (code, out, _) = soundsmc(&["coverage", "fixed", "--method", "okamoto", "--k", "50", "--gamma", "0.9"]);
    assert_eq!(code, 0);
    let min: f64 = out.lines().find_map(|l| l.strip_prefix("min coverage:")).unwrap().trim().parse().unwrap();
    assert!(min >= 0.98);
    assert_eq!(soundsmc(&["coverage", "fixed", "--method", "wald", "--k", "50", "--grid-points", "0"]).0, 2);
    let (code, _, _) = soundsmc(&[
        "coverage", "fixed", "--method", "wald", "--k", "50", "--csv-out", "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn bound_horizon_report() {
    let (code, out, _) = soundsmc(&["bound-horizon", "--states", "5", "--rmax", "1", "--pmin", "0.05", "--epsilon-prime", "1"]);
    assert_eq!(code, 0);
    let q: u64 = out.lines().next().unwrap().strip_prefix("q: ").unwrap().parse().unwrap();
    assert!(q > 100_000_000);
    assert!(out.contains("horizon:") && out.contains("reward cap:") && out.contains("tail weight:"));
}
