use std::collections::BTreeMap;
use std::fs;

use bregman_bench::csv::{parse_csv, strip_timing};
use bregman_bench::instance::Family;
use bregman_bench::manifest::{Algorithm, Params, RunManifest};
use bregman_bench::runner::{run_benchmark, AGGREGATE_HEADER};

fn params(dir: &std::path::Path) -> Params {
    Params {
        family: Some(Family::LpLs),
        n: vec![20],
        m: vec![30],
        seed: Some(5),
        reps: Some(1),
        max_iter: Some(50),
        out: Some(dir.to_path_buf()),
        ..Default::default()
    }
}

#[test]
fn one_replication_one_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let p = Params { algo: vec![Algorithm::Abpg], ..params(dir.path()) };
    let report = run_benchmark(&RunManifest::from_params(&p).unwrap()).unwrap();
    assert_eq!(report.trace_files.len(), 1);
    let agg = fs::read_to_string(&report.aggregate_file).unwrap();
    assert_eq!(agg.lines().count(), 2);
    assert_eq!(agg.lines().next().unwrap(), AGGREGATE_HEADER);
    let rows = parse_csv(&fs::read_to_string(&report.trace_files[0]).unwrap()).unwrap();
    assert_eq!(rows.len(), report.runs[0].iterations + 1);
    assert_eq!(rows.last().unwrap().psi, report.runs[0].obj);
}

#[test]
fn table_grid_has_one_row_per_size_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let p = Params { n: vec![10, 20, 50, 100], m: vec![100], max_iter: Some(5), ..params(dir.path()) };
    let report = run_benchmark(&RunManifest::from_params(&p).unwrap()).unwrap();
    assert_eq!(report.aggregate.len(), 16);
    let text = fs::read_to_string(&report.aggregate_file).unwrap();
    assert_eq!(text.lines().count(), 17);
    for n in [10, 20, 50, 100] {
        let group: Vec<_> = report.aggregate.iter().filter(|r| r.n == n).collect();
        assert_eq!(group.len(), 4);
        assert!(group.iter().any(|r| r.best_obj));
    }
}

#[test]
fn aggregate_means_recompute_from_run_finals() {
    let dir = tempfile::tempdir().unwrap();
    let p = Params { reps: Some(3), max_iter: Some(40), ..params(dir.path()) };
    let report = run_benchmark(&RunManifest::from_params(&p).unwrap()).unwrap();

    // Independent pass over the written files only.
    let mut sums: BTreeMap<String, (f64, f64, f64, usize)> = BTreeMap::new();
    for line in fs::read_to_string(&report.runs_file).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = sums.entry(f[4].to_string()).or_default();
        e.0 += f[6].parse::<f64>().unwrap();
        e.1 += f[7].parse::<f64>().unwrap();
        e.2 += f[8].parse::<f64>().unwrap();
        e.3 += 1;
    }
    let text = fs::read_to_string(&report.aggregate_file).unwrap();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (it, obj, acc, count) = sums[f[2]];
        assert_eq!(count, 3);
        let close = |s: &str, v: f64| (s.parse::<f64>().unwrap() - v / 3.0).abs() <= 1e-14 * (1.0 + v.abs());
        assert!(close(f[3], it) && close(f[4], obj) && close(f[5], acc), "{line}");
    }
    // Each trace's last row is the run's final.
    for (path, run) in report.trace_files.iter().zip(&report.runs) {
        let rows = parse_csv(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(rows.last().unwrap().psi, run.obj);
        assert_eq!(rows.last().unwrap().accuracy, run.acc);
    }
}

#[test]
fn identical_manifests_give_identical_files() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let r1 = run_benchmark(&RunManifest::from_params(&Params { reps: Some(2), ..params(d1.path()) }).unwrap()).unwrap();
    let r2 = run_benchmark(&RunManifest::from_params(&Params { reps: Some(2), ..params(d2.path()) }).unwrap()).unwrap();
    assert_eq!(r1.trace_files.len(), 8);
    for (a, b) in r1.trace_files.iter().zip(&r2.trace_files) {
        assert_eq!(a.file_name(), b.file_name());
        let (ta, tb) = (fs::read_to_string(a).unwrap(), fs::read_to_string(b).unwrap());
        assert_eq!(strip_timing(&ta), strip_timing(&tb));
    }
    assert_eq!(fs::read(&r1.aggregate_file).unwrap(), fs::read(&r2.aggregate_file).unwrap());
    assert_eq!(fs::read(&r1.runs_file).unwrap(), fs::read(&r2.runs_file).unwrap());
}

#[test]
fn kl_benchmark_runs_all_four_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let p = Params { family: Some(Family::NonnegKl), ..params(dir.path()) };
    let report = run_benchmark(&RunManifest::from_params(&p).unwrap()).unwrap();
    let algos: Vec<Algorithm> = report.runs.iter().map(|r| r.algorithm).collect();
    assert_eq!(algos, vec![Algorithm::Abpg, Algorithm::Bpg, Algorithm::Pgl, Algorithm::Pg]);
}
