use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hvac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvac")).args(args).output().expect("spawn hvac")
}

fn ok(args: &[&str]) -> String {
    let o = hvac(args);
    assert!(o.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hvac-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 8] = ["--set", "n_et=15", "--set", "n_eo=5", "--set", "warm_epochs=2", "--set", "eval_days=1"];

#[test]
fn gen_train_online_pipeline() {
    let root = scratch("pipe");
    let store = root.join("store");
    let model = root.join("model");
    let online = root.join("online");
    ok(&["gen", "--out", s(&store), "--days", "6", "--seed", "3"]);
    assert!(store.join("store.csv").exists());
    assert!(store.join("state.json").exists());

    let mut a = vec!["train", "--out", s(&model), "--store", s(&store)];
    a.extend(SMALL);
    ok(&a);
    assert!(model.join("model.txt").exists());

    let model_file = model.join("model.txt");
    let mut a = vec![
        "online", "--out", s(&online), "--store", s(&store), "--model", s(&model_file),
        "--days", "2", "--checkpoint-every", "1",
    ];
    a.extend(SMALL);
    ok(&a);
    let curve = std::fs::read_to_string(online.join("learning_curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert!(lines.next().unwrap().starts_with("day,nrmse_l1"));
    assert_eq!(lines.count(), 2);
    assert!(online.join("checkpoints/day_002.txt").exists());
    assert!(online.join("manifest.json").exists());
    let _ = std::fs::remove_dir_all(&root);
}

#[test]
fn rule_baseline_holds_23() {
    let root = scratch("rule");
    let store = root.join("store");
    let out = root.join("rule");
    ok(&["gen", "--out", s(&store), "--days", "2"]);
    ok(&["baseline", "--kind", "rule", "--out", s(&out), "--store", s(&store)]);
    let mut r = csv::Reader::from_path(out.join("schedule.csv")).unwrap();
    let col = r.headers().unwrap().iter().position(|h| h == "t_set").unwrap();
    let mut n = 0;
    for rec in r.records() {
        assert_eq!(rec.unwrap()[col].parse::<f64>().unwrap(), 23.0);
        n += 1;
    }
    assert_eq!(n, 24);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(m["details"]["cost"].as_f64().unwrap() > 0.0);
    let _ = std::fs::remove_dir_all(&root);
}

#[test]
fn bad_input_exits_nonzero() {
    let root = scratch("bad");
    let o = hvac(&["gen", "--out", s(&root), "--set", "no_such_key=1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));

    let o = hvac(&["train", "--out", s(&root), "--store", s(&root.join("missing"))]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = hvac(&["baseline", "--kind", "magic", "--out", s(&root), "--store", s(&root)]);
    assert!(!o.status.success());
    let _ = std::fs::remove_dir_all(&root);
}

#[test]
fn config_file_is_echoed() {
    let root = scratch("cfg");
    std::fs::create_dir_all(&root).unwrap();
    let file = root.join("run.conf");
    std::fs::write(&file, "# desk run\nseed = 11\nlambda_h = 9\n").unwrap();
    let out = root.join("store");
    ok(&["gen", "--out", s(&out), "--config", s(&file), "--days", "1", "--set", "lambda_h=12.5"]);
    let echo = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.lines().any(|l| l.replace(' ', "") == "seed=11"), "{echo}");
    assert!(echo.lines().any(|l| l.replace(' ', "") == "lambda_h=12.5"), "{echo}");
    let _ = std::fs::remove_dir_all(&root);
}
