use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_critfail"));
    c.env_remove("CRITFAIL_OUT_DIR");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Temp dir holding the unit triangle and the 0.6 / 1.8 demand files.
fn triangle() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.txt"), "0 1 1\n1 2 1\n0 2 1\n").unwrap();
    fs::write(dir.path().join("tm06.txt"), "0 1 0.6\n").unwrap();
    fs::write(dir.path().join("tm18.txt"), "0 1 1.8\n").unwrap();
    dir
}

fn k5(dir: &Path) {
    let mut s = String::new();
    for u in 0..5 {
        for v in u + 1..5 {
            s += &format!("{u} {v} 1\n");
        }
    }
    fs::write(dir.join("k5.txt"), s).unwrap();
    fs::write(dir.join("k5tm.txt"), "0 1 0.2\n").unwrap();
}

#[test]
fn abilene_has_94_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let topo = data("Abilene.graphml");
    let o = run(dir.path(), &["failures", "--topology", topo.to_str().unwrap(), "--f", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "94 scenarios");
    let csv = fs::read_to_string(dir.path().join("scenarios.csv")).unwrap();
    assert_eq!(csv.lines().count(), 95);
}

#[test]
fn impact_then_critical_labels_the_triangle() {
    let dir = triangle();
    let o = run(dir.path(), &["impact", "--topology", "tri.txt", "--tm", "tm06.txt", "--routing", "mcf"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(dir.path(), &["critical", "--impact", "impact.csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("labels: Worst,Worst,Worst"));
    let crit = fs::read_to_string(dir.path().join("critical.csv")).unwrap();
    assert_eq!(crit.lines().count(), 4);
}

#[test]
fn upgrade_plan_costs_2_4() {
    let dir = triangle();
    let o = run(dir.path(), &["upgrade", "--topology", "tri.txt", "--tm", "tm18.txt", "--predictor", "oracle"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plan = fs::read_to_string(dir.path().join("upgrade_plan.csv")).unwrap();
    let mut lines = plan.lines();
    assert_eq!(lines.next(), Some("link,a_e"));
    let cost: f64 = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((cost - 2.4).abs() < 1e-9, "{cost}");
}

#[test]
fn te_exit_codes() {
    let dir = triangle();
    let o = run(dir.path(), &["te", "--topology", "tri.txt", "--tm", "tm06.txt"]);
    assert_eq!(o.status.code(), Some(2));

    k5(dir.path());
    let o = run(dir.path(), &["te", "--topology", "k5.txt", "--tm", "k5tm.txt"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("te.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "te");
    assert_eq!(v["certification"]["status"], "certified-all");
    assert!(dir.path().join("te_protection.csv").exists());
    assert!(dir.path().join("te_routing.json").exists());
}

#[test]
fn usage_errors_exit_1() {
    let dir = triangle();
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["route", "--topology", "tri.txt"]).status.code(), Some(1));
    assert_eq!(
        run(dir.path(), &["route", "--topology", "tri.txt", "--tm", "tm06.txt", "--tm-total", "1"])
            .status
            .code(),
        Some(1)
    );
    // a generated matrix needs a seed
    assert_eq!(
        run(dir.path(), &["route", "--topology", "tri.txt", "--tm-total", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(run(dir.path(), &["failures", "--topology", "missing.txt"]).status.code(), Some(1));
    assert_eq!(
        run(dir.path(), &["validate", "--topology", "tri.txt", "--tm", "tm06.txt", "--predictor", "gat"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bad_input_exits_2() {
    let dir = triangle();
    fs::write(dir.path().join("bad.txt"), "0 1 -1\n").unwrap();
    let o = run(dir.path(), &["failures", "--topology", "bad.txt"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_and_env_supply_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let topo = data("Abilene.graphml");
    fs::write(dir.path().join("run.toml"), "f = 1\nout_dir = \"cfg-out\"\n").unwrap();
    let o = run(dir.path(), &["--config", "run.toml", "failures", "--topology", topo.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "14 scenarios");
    assert!(dir.path().join("cfg-out/scenarios.csv").exists());

    // explicit flags win over the config file
    let o = run(
        dir.path(),
        &["--config", "run.toml", "failures", "--topology", topo.to_str().unwrap(), "--f", "2"],
    );
    assert_eq!(stdout(&o).trim(), "94 scenarios");

    let o = bin()
        .current_dir(dir.path())
        .env("CRITFAIL_OUT_DIR", "env-out")
        .args(["failures", "--topology", topo.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("env-out/scenarios.csv").exists());
}

#[test]
fn runs_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(dir.path(), &["gen", "--nodes", "7", "--seed", "11", "--out-dir", out]);
        assert!(o.status.success());
        let o = run(
            dir.path(),
            &[
                "impact",
                "--topology",
                &format!("{out}/topology.txt"),
                "--tm",
                &format!("{out}/tm.txt"),
                "--threads",
                if out == "a" { "1" } else { "3" },
                "--out-dir",
                out,
            ],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = run(
            dir.path(),
            &["encode", "--topology", &format!("{out}/topology.txt"), "--tm", &format!("{out}/tm.txt"), "--impact", &format!("{out}/impact.csv"), "--out-dir", out],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["topology.txt", "tm.txt", "impact.csv", "graph.json", "labels.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn report_aggregates_pipeline_files() {
    let dir = triangle();
    k5(dir.path());
    let inst = ["--topology", "k5.txt", "--tm", "k5tm.txt"];
    let steps: Vec<Vec<&str>> = vec![
        [&["impact"][..], &inst[..]].concat(),
        [&["impact", "--method", "simplified", "--output", "simplified.csv"][..], &inst[..]].concat(),
        [&["validate", "--predictor", "simplified"][..], &inst[..]].concat(),
        [&["te"][..], &inst[..]].concat(),
        [&["upgrade"][..], &inst[..]].concat(),
        vec![
            "report", "--impact", "impact.csv", "--compare", "impact.csv", "simplified.csv",
            "--plan", "validation.json", "te.json", "upgrade.json", "--out-dir", "report",
        ],
    ];
    for s in &steps {
        let o = run(dir.path(), s);
        assert!(o.status.success(), "{s:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let counts = fs::read_to_string(dir.path().join("report/constraint_counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 4);
    assert!(counts.contains(",te,"));
    let cdf = fs::read_to_string(dir.path().join("report/reroute_error_cdf.csv")).unwrap();
    assert!(cdf.starts_with("threshold,fraction_within"));
    let dist = fs::read_to_string(dir.path().join("report/impact_distribution.csv")).unwrap();
    assert_eq!(dist.lines().count(), 21);

    let o = run(dir.path(), &["report"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn predictions_file_drives_critical_and_validate() {
    let dir = triangle();
    fs::write(
        dir.path().join("preds.csv"),
        "scenario_id,impact_pred,critical_prob\n0,2.0,0.9\n1,1.0,0.2\n2,1.5,0.7\n",
    )
    .unwrap();
    let o = run(dir.path(), &["critical", "--predictions", "preds.csv"]);
    assert!(o.status.success());
    let crit = fs::read_to_string(dir.path().join("critical.csv")).unwrap();
    let ids: Vec<&str> = crit.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids, ["0", "2"]);

    let o = run(
        dir.path(),
        &["validate", "--topology", "tri.txt", "--tm", "tm06.txt", "--predictor", "file:preds.csv", "--k", "1"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("worst scenario 0"));

    fs::write(dir.path().join("short.csv"), "0,2.0,0.9\n").unwrap();
    let o = run(
        dir.path(),
        &["validate", "--topology", "tri.txt", "--tm", "tm06.txt", "--predictor", "file:short.csv"],
    );
    assert_eq!(o.status.code(), Some(2));
}
