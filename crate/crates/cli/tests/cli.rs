use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ssh_core::io::{load_recording, write_series_file};
use ssh_core::{Dataset, Format, Source, TimeSeries};

fn ssh_ts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssh-ts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = ssh_ts(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_bench(dir: &Path, experiment: &str, out: &str, extra: &[&str]) -> String {
    let path = dir.join(out);
    let mut args = vec![
        "bench",
        experiment,
        "--series",
        "400",
        "--queries",
        "3",
        "--out",
        p(&path),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    fs::read_to_string(path).unwrap()
}

#[test]
fn gen_is_deterministic_and_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    ok(&["gen", "--length", "500", "--seed", "4", "--out", p(&a)]);
    ok(&["gen", "--length", "500", "--seed", "4", "--out", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(load_recording(&a, Format::F64le).unwrap().len(), 500);
}

#[test]
fn zero_length_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssh_ts(&["gen", "--length", "0", "--out", p(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(ssh_ts(&["gen", "--bogus"]).status.code(), Some(2));
    assert_eq!(ssh_ts(&[]).status.code(), Some(2));
}

#[test]
fn build_query_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("walk.bin");
    let idx = dir.path().join("walk.idx");
    ok(&["gen", "--length", "3000", "--seed", "9", "--out", p(&rec)]);
    let flags = [
        "build",
        "--data",
        p(&rec),
        "--t",
        "64",
        "--W",
        "10",
        "--delta",
        "1",
        "--n",
        "12",
        "--d",
        "10",
        "--seed",
        "3",
    ];
    let mut args = flags.to_vec();
    args.extend(["--out", p(&idx)]);
    ok(&args);
    let again = dir.path().join("again.idx");
    let mut args = flags.to_vec();
    args.extend(["--out", p(&again), "--threads", "1"]);
    ok(&args);
    assert_eq!(fs::read(&idx).unwrap(), fs::read(&again).unwrap());

    let walk = load_recording(&rec, Format::F64le).unwrap();
    let window = TimeSeries::new(walk.values()[700..764].to_vec()).unwrap();
    let qfile = dir.path().join("q.csv");
    let qs = Dataset::from_series(vec![window], Source::InMemory).unwrap();
    write_series_file(&qs, &qfile, Format::Csv).unwrap();
    let out = ok(&[
        "query",
        "--index",
        p(&idx),
        "--query",
        p(&qfile),
        "--k",
        "5",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text
        .lines()
        .find(|l| l.starts_with("0,1,"))
        .expect("rank 1 row");
    assert_eq!(first, "0,1,700,0");
    assert_eq!(text.lines().filter(|l| l.starts_with("0,")).count(), 5);

    let out = ssh_ts(&[
        "query",
        "--index",
        p(&idx),
        "--query",
        p(&qfile),
        "--k",
        "5000",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: k = 5000"));
}

#[test]
fn wide_filter_parameter_sets_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("walk.bin");
    ok(&["gen", "--length", "2000", "--out", p(&rec)]);
    for (w, delta) in [("80", "3"), ("30", "5")] {
        let idx = dir.path().join(format!("{w}.idx"));
        ok(&[
            "build",
            "--data",
            p(&rec),
            "--t",
            "256",
            "--W",
            w,
            "--delta",
            delta,
            "--n",
            "15",
            "--d",
            "20",
            "--out",
            p(&idx),
        ]);
    }
}

#[test]
fn wrong_query_length_names_the_expected_length() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("walk.bin");
    let idx = dir.path().join("walk.idx");
    ok(&["gen", "--length", "1000", "--out", p(&rec)]);
    ok(&[
        "build",
        "--data",
        p(&rec),
        "--t",
        "96",
        "--W",
        "10",
        "--delta",
        "2",
        "--n",
        "8",
        "--out",
        p(&idx),
    ]);
    let qfile = dir.path().join("q.csv");
    fs::write(&qfile, "1,2,3,4,5\n").unwrap();
    let out = ssh_ts(&["query", "--index", p(&idx), "--query", p(&qfile)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expects length 96"));
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_parameters_fail_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("walk.bin");
    ok(&["gen", "--length", "1000", "--out", p(&rec)]);
    let out = ssh_ts(&[
        "build",
        "--data",
        p(&rec),
        "--t",
        "50",
        "--W",
        "60",
        "--out",
        p(&dir.path().join("i")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("W = 60"));
    let out = ssh_ts(&[
        "build",
        "--data",
        p(&rec),
        "--out",
        p(&dir.path().join("i")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = ssh_ts(&[
        "build",
        "--data",
        p(&dir.path().join("missing.bin")),
        "--t",
        "50",
        "--out",
        p(&dir.path().join("i")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pruning_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_bench(dir.path(), "pruning", "p.csv", &["--lengths", "64,96"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,ucr_pruned,ssh_hash_pruned,ssh_total_pruned");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("64,") && lines[2].starts_with("96,"));
}

#[test]
fn accuracy_emits_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let csv = small_bench(
        dir.path(),
        "accuracy",
        "a.csv",
        &["--lengths", "64", "--ks", "5,10", "--methods", "ssh,srp"],
    );
    for m in ["ssh", "srp"] {
        assert_eq!(
            csv.lines()
                .filter(|l| l.split(',').nth(1) == Some(m))
                .count(),
            2
        );
    }
}

#[test]
fn bench_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--lengths", "64", "--seed", "5"];
    let a = small_bench(dir.path(), "pruning", "a.csv", &args);
    let b = small_bench(
        dir.path(),
        "pruning",
        "b.csv",
        &[&args[..], &["--threads", "1"]].concat(),
    );
    assert_eq!(a, b);
    let sweep = ["--axis", "n", "--values", "4,8", "--t", "64", "--k", "5"];
    let a = small_bench(dir.path(), "sweep", "s1.csv", &sweep);
    let b = small_bench(dir.path(), "sweep", "s2.csv", &sweep);
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# shared\nlength = 300\nseed = 8\n").unwrap();
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    ok(&["--config", p(&cfg), "gen", "--out", p(&a)]);
    ok(&[
        "gen",
        "--config",
        p(&cfg),
        "--length",
        "200",
        "--out",
        p(&b),
    ]);
    assert_eq!(load_recording(&a, Format::F64le).unwrap().len(), 300);
    let b_walk = load_recording(&b, Format::F64le).unwrap();
    assert_eq!(b_walk.len(), 200);
    let direct = dir.path().join("c.bin");
    ok(&["gen", "--length", "200", "--seed", "8", "--out", p(&direct)]);
    assert_eq!(fs::read(&b).unwrap(), fs::read(&direct).unwrap());

    fs::write(&cfg, "nonsense = 1\n").unwrap();
    let out = ssh_ts(&["--config", p(&cfg), "gen", "--out", p(&a)]);
    assert_eq!(out.status.code(), Some(2));
}
