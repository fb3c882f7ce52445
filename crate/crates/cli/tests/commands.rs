use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "forecaster_id,round,horizon,variable,bin_lower,bin_upper,prob_percent\n";

fn ssi(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ssi"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, spd: &str, extra: &str) -> String {
    fs::write(dir.join("spd.csv"), format!("{HEADER}{spd}")).unwrap();
    let cfg = dir.join("run.toml");
    fs::write(
        &cfg,
        format!("spd_path = \"spd.csv\"\nout_dir = \"out\"\n{extra}"),
    )
    .unwrap();
    cfg.display().to_string()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(
        r.records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect()),
    );
    rows
}

fn col(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

fn histogram(id: &str, round: &str, edges: &[f64], pct: &[f64]) -> String {
    (0..pct.len())
        .map(|i| {
            format!(
                "{id},{round},1y,inflation,{},{},{}\n",
                edges[i],
                edges[i + 1],
                pct[i]
            )
        })
        .collect()
}

#[test]
fn moments_on_single_record() {
    let dir = tempfile::tempdir().unwrap();
    let spd = histogram(
        "F1",
        "2024-06-01",
        &[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0],
        &[10.0, 25.0, 35.0, 25.0, 5.0],
    );
    let cfg = write_config(dir.path(), &spd, "");
    let out = ssi(&["moments", "--config", &cfg], &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read_csv(&dir.path().join("out/moments.csv"));
    assert_eq!(rows.len(), 2);
    let median: f64 = rows[1][col(&rows, "median")].parse().unwrap();
    let bowley: f64 = rows[1][col(&rows, "bowley")].parse().unwrap();
    assert!((median + 0.2857).abs() < 1e-4);
    assert!((bowley + 0.0357).abs() < 1e-4);
    assert_eq!(rows[1][col(&rows, "flags")], "");
    assert!(dir.path().join("out/run.log").exists());
}

#[test]
fn empty_panel_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", "");
    let out = ssi(&["moments", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn missing_input_path_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "spd_path = \"nope.csv\"\n").unwrap();
    let out = ssi(&["moments", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
}

fn two_rounds() -> String {
    let edges = [0.0, 1.0, 2.0, 3.0, 4.0];
    let mut s = String::new();
    s += &histogram("F1", "2024-03-01", &edges, &[10.0, 20.0, 40.0, 30.0]);
    s += &histogram("F2", "2024-03-01", &edges, &[5.0, 25.0, 45.0, 25.0]);
    s += &histogram("F1", "2024-06-01", &edges, &[30.0, 40.0, 20.0, 10.0]);
    s += &histogram("F2", "2024-06-01", &edges, &[25.0, 45.0, 25.0, 5.0]);
    s
}

#[test]
fn ssi_on_two_round_panel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &two_rounds(), "");
    let out = ssi(
        &[
            "ssi",
            "--config",
            &cfg,
            "--out",
            dir.path().join("res").to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read_csv(&dir.path().join("res/ssi.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "2024-Q1");
    let shares = read_csv(&dir.path().join("res/class_shares.csv"));
    assert_eq!(shares.len(), 3);
}

#[test]
fn ssi_is_zero_when_medians_sit_on_target() {
    let dir = tempfile::tempdir().unwrap();
    // symmetric about 2 for one forecaster, skewed for the other, both with median 2
    let edges = [0.0, 1.0, 2.0, 3.0, 4.0];
    let mut spd = String::new();
    spd += &histogram("F1", "2024-03-01", &edges, &[10.0, 40.0, 40.0, 10.0]);
    spd += &histogram("F2", "2024-03-01", &edges, &[5.0, 45.0, 30.0, 20.0]);
    spd += &histogram("F1", "2024-06-01", &edges, &[20.0, 30.0, 30.0, 20.0]);
    spd += &histogram("F2", "2024-06-01", &edges, &[20.0, 30.0, 45.0, 5.0]);
    let cfg = write_config(dir.path(), &spd, "");
    let out = ssi(&["ssi", "--config", &cfg], &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read_csv(&dir.path().join("out/ssi.csv"));
    let c = col(&rows, "ssi");
    assert!(rows[1..]
        .iter()
        .all(|r| r[c].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn env_override_moves_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &two_rounds(), "");
    let out = ssi(&["signal", "--config", &cfg], &[("SSI_TARGET", "1.0")]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("out/signals.csv"));
    let c = col(&rows, "median_dev");
    // F1's first-round median is 2.5
    assert_eq!(rows[1][c].parse::<f64>().unwrap(), 1.5);
}

#[test]
fn gar_on_short_sample_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("gdp.csv"),
        "date,value\n2024-01-01,1.0\n2024-04-01,2.0\n2024-07-01,1.5\n",
    )
    .unwrap();
    let cfg = write_config(dir.path(), &two_rounds(), "gdp_path = \"gdp.csv\"\n");
    let out = ssi(&["gar", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
    let log = fs::read_to_string(dir.path().join("out/run.log")).unwrap();
    assert!(log.contains("level=error"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &two_rounds(), "");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        assert!(ssi(&["ssi", "--config", &cfg], &[]).status.success());
        let files = ["ssi.csv", "class_shares.csv", "run.log"];
        outputs.push(files.map(|f| fs::read(dir.path().join("out").join(f)).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn synth_writes_a_runnable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = ssi(
        &[
            "synth",
            "--out",
            data.to_str().unwrap(),
            "--forecasters",
            "5",
            "--quarters",
            "6",
        ],
        &[],
    );
    assert!(out.status.success());
    let cfg = data.join("run.toml");
    let out = ssi(&["signal", "--config", cfg.to_str().unwrap()], &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read_csv(&data.join("out/class_shares.csv")).len(), 7);
}
