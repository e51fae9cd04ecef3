use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fpt(args: &[&str]) -> Output {
    fpt_with_env(args, &[])
}

fn fpt_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fpt"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analytic_grid_matches_the_closed_form() {
    let out = fpt(&[
        "analytic", "--em", "1", "--is", "1", "--sigma", "1", "--tmax", "5", "--points", "500",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# fpt analytic"));
    assert!(text.lines().any(|l| l == "t,cdf,pdf"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 500);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 5.0);
    // ½erfc(-4/√10) + ½e²erfc(6/√10), evaluated separately
    assert!((last[1] - 0.990_115_297_399_673_6).abs() < 1e-12);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
    assert!(stderr(&out).contains("\"mean_fpt\":1.0"));
}

#[test]
fn sample_fpt_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    let args = |p: &Path| {
        [
            "sample-fpt",
            "--em",
            "1",
            "--is",
            "1",
            "--sigma",
            "1",
            "--n",
            "1000",
            "--seed",
            "42",
            "-o",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain([path_str(p).to_owned()])
        .collect::<Vec<_>>()
    };
    let run = |p: &Path, threads: &str| {
        let owned = args(p);
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        assert!(fpt_with_env(&refs, &[("FPT_THREADS", threads)])
            .status
            .success());
        fs::read(p).unwrap()
    };
    let first = run(&a, "1");
    assert_eq!(first, run(&b, "1"));
    assert_eq!(first, run(&c, "3"));
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains("# seed: 42"));
    assert!(!text.contains('\r'));
    assert_eq!(data_rows(&text).len(), 1000);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"detector":{"threshold_energy":2.0,"noise_scale":0.5},"signal":{"kind":"constant","intensity":3.0},"analytic":{"points":10}}"#).unwrap();
    let out = fpt(&["--config", path_str(&cfg), "analytic", "--sigma", "0.25"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let config_line = text.lines().find(|l| l.starts_with("# config: ")).unwrap();
    let config: serde_json::Value =
        serde_json::from_str(&config_line["# config: ".len()..]).unwrap();
    assert_eq!(config["detector"]["threshold_energy"], 2.0);
    assert_eq!(config["detector"]["noise_scale"], 0.25);
    assert_eq!(config["signal"]["intensity"], 3.0);
    assert_eq!(data_rows(&text).len(), 10);
}

#[test]
fn schema_violations_exit_2_with_the_field() {
    let out = fpt(&["analytic", "--sigma", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("detector.noise_scale"),
        "{}",
        stderr(&out)
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"run":{"seed":1,"stepp":0.1}}"#).unwrap();
    let out = fpt(&["--config", path_str(&cfg), "detect"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("run.stepp"), "{}", stderr(&out));

    fs::write(
        &cfg,
        r#"{"signal":{"kind":"piecewise","breakpoints":[2.0,1.0],"levels":[1,1,1]}}"#,
    )
    .unwrap();
    let out = fpt(&["--config", path_str(&cfg), "detect"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("signal"), "{}", stderr(&out));

    let out = fpt(&["coincide", "--horizon", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("signal.kind"));

    let out = fpt(&["sample-fpt", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fpt: n:"), "{}", stderr(&out));
}

#[test]
fn numerical_preconditions_exit_3() {
    let out = fpt(&["pde", "--sigma", "0.01", "--n-cells", "64"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("Péclet"));
}

#[test]
fn detect_writes_csv_and_json_trains() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let json = dir.path().join("t.json");
    let out = fpt(&[
        "detect",
        "--is",
        "2",
        "--sigma",
        "0.000001",
        "--horizon",
        "100",
        "-o",
        path_str(&csv),
        "--json-out",
        path_str(&json),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let times: Vec<f64> = data_rows(&fs::read_to_string(&csv).unwrap())
        .into_iter()
        .map(|r| r[0])
        .collect();
    assert!((199..=200).contains(&times.len()), "{}", times.len());
    for w in times.windows(2) {
        assert!((w[1] - w[0] - 0.5).abs() < 1e-3);
    }
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["header"]["command"], "detect");
    assert_eq!(
        doc["train"]["timestamps"].as_array().unwrap().len(),
        times.len()
    );
    let record = stderr(&out).lines().next().unwrap().to_owned();
    let record: serde_json::Value = serde_json::from_str(&record).unwrap();
    assert_eq!(record["name"], "rate");
    assert!(record.get("std_error").is_some() && record.get("n").is_some());
}

#[test]
fn coincide_reports_ratio_and_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pair.json");
    let paths = dir.path().join("paths.csv");
    fs::write(&cfg, r#"{"signal":{"kind":"modulated_pair","mean":1,"relaxation_time":20,"amplitude":0.6,"cross_correlation":0.8},"run":{"horizon":20000,"step":0.01}}"#).unwrap();
    let out = fpt(&[
        "--config",
        path_str(&cfg),
        "coincide",
        "-o",
        "/dev/null",
        "--paths-out",
        path_str(&paths),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records: Vec<serde_json::Value> = stderr(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let get = |name: &str| {
        records.iter().find(|r| r["name"] == name).unwrap()["estimate"]
            .as_f64()
            .unwrap()
    };
    let measured = get("coincidence_ratio");
    let expect = get("intensity_moment_ratio");
    assert!(
        (measured / expect - 1.0).abs() < 0.1,
        "{measured} vs {expect}"
    );
    let rows = data_rows(&fs::read_to_string(&paths).unwrap());
    assert_eq!(rows[0].len(), 3);
    assert_eq!(rows.len(), 100_001);
}

#[test]
fn verify_quick_covers_every_check() {
    let out = fpt(&["verify", "--quick"]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]"))
        .collect();
    assert_eq!(lines.len(), 9, "{text}");
    for id in 1..=9 {
        assert!(lines.iter().any(|l| l.contains(&format!("] {id}. "))));
    }
    assert!(lines.iter().all(|l| l.contains('s')));
}
