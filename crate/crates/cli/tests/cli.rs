use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gcnsim");

fn gcnsim(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("GCNSIM_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Writes a preset's scenario to `dir/name.json`.
fn preset_file(dir: &Path, preset: &str) -> String {
    let o = gcnsim(&["show", preset]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.join(format!("{preset}.json"));
    fs::write(&path, stdout(&o)).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_is_repeatable_and_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset_file(tmp.path(), "fig4_bytes");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = gcnsim(&["run", &scenario, "--seeds", "0..3", "--out", out.to_str().unwrap(), "--trace"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["per_seed.csv", "connectivity.csv", "summary.json", "trace_seed0.csv", "trace_seed2.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
    let per_seed = read(&a, "per_seed.csv");
    assert!(per_seed.starts_with("seed,metric,value\n"));
    assert!(per_seed.contains("\n2,bytes_total,"));
    let summary: serde_json::Value = serde_json::from_str(&read(&a, "summary.json")).unwrap();
    assert_eq!(summary["bytes_total"]["n"], 3);
    assert!(read(&a, "trace_seed1.csv").lines().count() > 1);
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset_file(tmp.path(), "fig78_resiliency");
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = tmp.path().join(format!("w{workers}"));
        let o = Command::new(BIN)
            .args(["run", &scenario, "--seeds", "0,5,9", "--out", out.to_str().unwrap()])
            .env("GCNSIM_WORKERS", workers)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(read(&out, "per_seed.csv"));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn zero_workers_is_rejected() {
    let o = gcnsim(&["--workers", "0", "presets"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("workers"));
}

#[test]
fn empty_seed_range_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset_file(tmp.path(), "fig3_reach");
    let o = gcnsim(&["run", &scenario, "--seeds", "4..4", "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
}

#[test]
fn invalid_scenario_names_each_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset_file(tmp.path(), "fig3_reach");
    let mut json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&scenario).unwrap()).unwrap();
    json["group_prob"] = 1.5.into();
    json["duration"] = (-1.0).into();
    fs::write(&scenario, json.to_string()).unwrap();
    let o = gcnsim(&["run", &scenario, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("group_prob") && err.contains("duration"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn connectivity_preset_samples_every_second() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset_file(tmp.path(), "fig6_connectivity");
    let out = tmp.path().join("o");
    let o = gcnsim(&["run", &scenario, "--seeds", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(&out, "connectivity.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("seed,time,connected_fraction"));
    assert_eq!(lines.count(), 1000);
}

#[test]
fn compare_has_one_column_per_protocol() {
    let o = gcnsim(&["compare", "fig4_bytes", "--seeds", "0..2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert_eq!(table.lines().next(), Some("metric,gcn,smf"));
    let row = |name: &str| -> Vec<String> {
        table
            .lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap()
            .split(',')
            .map(String::from)
            .collect()
    };
    let total = row("bytes_total");
    let gcn: f64 = total[1].parse().unwrap();
    let smf: f64 = total[2].parse().unwrap();
    assert!(smf > gcn);
    let o = gcnsim(&["compare", "fig4_bytes", "--protocols", "gcn", "--seeds", "0..2"]);
    assert_eq!(stdout(&o).lines().next(), Some("metric,gcn"));
}

#[test]
fn single_value_sweep_matches_a_plain_run() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = preset_file(tmp.path(), "fig3_reach");
    let out = tmp.path().join("o");
    let o = gcnsim(&["run", &scenario, "--seeds", "0..4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let run: Vec<String> = read(&out, "per_seed.csv").lines().skip(1).map(String::from).collect();
    let o = gcnsim(&["sweep", "fig3_reach", "--param", "source_ttl", "--values", "3", "--seeds", "0..4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep = stdout(&o);
    let mut lines = sweep.lines();
    assert_eq!(lines.next(), Some("param,value,seed,metric,metric_value"));
    let swept: Vec<String> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(&f[..2], &["source_ttl", "3"]);
            f[2..].join(",")
        })
        .collect();
    assert_eq!(run, swept);
}

#[test]
fn sweep_over_ttl_covers_every_value() {
    let o = gcnsim(&["sweep", "fig3_reach", "--param", "source_ttl", "--values", "1,2,3,4", "--seeds", "0..3"]);
    assert!(o.status.success());
    let rows: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| l.contains(",discovered_fraction,"))
        .map(String::from)
        .collect();
    assert_eq!(rows.len(), 12);
    let mean = |v: &str| -> f64 {
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.split(',').nth(1) == Some(v))
            .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    assert!(mean("1") <= mean("2") && mean("2") <= mean("3") && mean("3") <= mean("4"));
}

#[test]
fn unknown_sweep_parameter_is_diagnosed() {
    let o = gcnsim(&["sweep", "fig3_reach", "--param", "no_such_knob", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_knob"), "{}", stderr(&o));
}

#[test]
fn unknown_preset_lists_the_known_ones() {
    let o = gcnsim(&["compare", "fig99"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("fig99") && err.contains("fig4_bytes"), "{err}");
}

#[test]
fn presets_are_listed_and_checkable() {
    let o = gcnsim(&["presets"]);
    let text = stdout(&o);
    for name in ["fig3_reach", "fig4_bytes", "fig6_connectivity", "fig78_resiliency", "fig1011_targeted", "sec3_matrix"] {
        assert!(text.contains(name));
    }
    let o = gcnsim(&["check", "fig4_bytes", "--seeds", "0..5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
}
