use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use changeprop::fixtures::{FixtureFiles, F1, F2, UNSOLVABLE};
use serde_json::Value;
use tempfile::TempDir;

fn write_fixture(dir: &Path, f: &FixtureFiles) -> [PathBuf; 4] {
    let files = [
        ("metamodel.json", f.metamodel),
        ("constraints.ocl", f.constraints),
        ("model.json", f.model),
        ("changes.json", f.changes),
    ];
    files.map(|(name, text)| {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    })
}

fn changeprop(files: &[PathBuf; 4], extra: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_changeprop"));
    for (flag, path) in ["--metamodel", "--constraints", "--model", "--changes"]
        .iter()
        .zip(files)
    {
        cmd.arg(flag).arg(path);
    }
    cmd.args(extra).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn first_cost(out: &Output) -> String {
    report(out)["plans"][0]["cost"]["exact"]
        .as_str()
        .unwrap()
        .to_owned()
}

#[test]
fn f1_defaults_find_the_rename() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F1);
    let out = changeprop(&files, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["status"], "plan_found");
    assert_eq!(r["plans"][0]["steps"][0], "SetAttr(op1,name,\"debit\")");
    assert_eq!(r["plans"][0]["cost"]["exact"], "1");
    assert_eq!(r["result_model"]["entities"].as_array().unwrap().len(), 3);
}

#[test]
fn out_dir_receives_report_and_repaired_model() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F1);
    let out_dir = dir.path().join("out");
    let out = changeprop(&files, &["--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let repaired = fs::read_to_string(out_dir.join("repaired_model.json")).unwrap();
    assert!(repaired.contains("\"debit\""));
    let r: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["plans"].as_array().unwrap().len(), 1);
}

#[test]
fn syntax_error_cites_its_line() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F1);
    fs::write(
        &files[1],
        "context Message inv ok:\n  self.name <> ''\ncontext Message inv broken: self.name = and\n",
    )
    .unwrap();
    let out = changeprop(&files, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    let cited = format!("{}:3:", files[1].display());
    assert!(err.contains(&cited), "{err}");
}

#[test]
fn malformed_model_json_is_located() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F1);
    fs::write(
        &files[2],
        "{\n  \"metamodel\": \"interaction\",\n  \"entities\": [,]\n}\n",
    )
    .unwrap();
    let out = changeprop(&files, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(&format!("{}:3:", files[2].display())), "{err}");
}

#[test]
fn strategies_agree_on_cost() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F2);
    let costs: Vec<String> = ["ucs", "astar", "exhaustive"]
        .iter()
        .map(|s| {
            let out = changeprop(&files, &["--strategy", s]);
            assert_eq!(out.status.code(), Some(0), "{s}");
            first_cost(&out)
        })
        .collect();
    assert_eq!(costs, ["3", "3", "3"]);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F1);
    for extra in [
        &["--frobnicate"][..],
        &["--costs", "create=1,create=2"],
        &["--costs", "teleport=1"],
        &["--strategy", "dfs"],
        &["--k", "0"],
    ] {
        let out = changeprop(&files, extra);
        assert_eq!(out.status.code(), Some(1), "{extra:?}");
        assert!(out.stdout.is_empty(), "{extra:?}");
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_changeprop"))
        .arg("--metamodel")
        .arg(&files[0])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn unsolvable_exits_two_with_diagnostics() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &UNSOLVABLE);
    let out = changeprop(&files, &[]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["status"], "no_plan_within_bound");
    assert!(!r["diagnostics"].as_array().unwrap().is_empty());
    assert!(r.get("result_model").is_none());
}

#[test]
fn failing_primary_change_exits_one() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F1);
    fs::write(
        &files[3],
        r#"[{"kind": "set_attr", "entity": "nobody", "attribute": "name", "value": "x"}]"#,
    )
    .unwrap();
    let out = changeprop(&files, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nobody"));
}

#[test]
fn reports_are_reproducible_and_thread_independent() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F2);
    let base = ["--k", "3", "--check-postulates", "--seed", "5"];
    let a = changeprop(&files, &base);
    let b = changeprop(&files, &base);
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = base.to_vec();
    threaded.extend(["--threads", "4"]);
    let c = changeprop(&files, &threaded);
    assert_eq!(report(&a)["plans"], report(&c)["plans"]);
    let r = report(&a);
    assert_eq!(r["config"]["seed"], 5);
    assert_eq!(r["postulates"]["P1"]["status"], "pass");
    assert_eq!(r["postulates"]["P6"]["status"], "pass");
}

#[test]
fn metric_selection() {
    let dir = TempDir::new().unwrap();
    let files = write_fixture(dir.path(), &F1);
    let none = report(&changeprop(&files, &["--metric", "none"]));
    assert!(none["plans"][0].get("proximity").is_none());
    let st = report(&changeprop(&files, &["--metric", "structural"]));
    assert_eq!(
        st["plans"][0]["proximity"]["structural"]["node"]["exact"],
        "1"
    );
}

#[test]
fn generated_instance_runs() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_changeprop"))
        .args(["generate", "--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 11);
    let files = [
        "metamodel.json",
        "constraints.ocl",
        "model.json",
        "changes.json",
    ]
    .map(|n| dir.path().join(n));
    let run = changeprop(&files, &["--max-depth", "4"]);
    assert!(matches!(run.status.code(), Some(0 | 2)));

    let bad = Command::new(env!("CARGO_BIN_EXE_changeprop"))
        .args(["generate", "--max-classes", "9", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
