use std::fs;
use std::process::Command;

use bregman_bench::csv::parse_csv;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bregman-kit"))
}

fn ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_then_run_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.bin");
    ok(cli().args(["gen", "--family", "lp-ls-eq", "--n", "30", "--m", "40", "--seed", "3", "--out"]).arg(&inst));
    let trace = dir.path().join("t.csv");
    ok(cli().arg("run").arg(&inst).args(["--algo", "pgl", "--max-iter", "20", "--out"]).arg(&trace));
    let rows = parse_csv(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(rows[0].k, 0);
    assert!(rows.len() <= 21);

    // The same instance from flags gives the same trace.
    let stdout = ok(cli().args([
        "run", "--family", "lp-ls-eq", "--n", "30", "--m", "40", "--seed", "3", "--algo", "pgl", "--max-iter", "20",
    ]));
    let again = parse_csv(&stdout).unwrap();
    assert_eq!(again.iter().map(|r| r.psi).collect::<Vec<_>>(), rows.iter().map(|r| r.psi).collect::<Vec<_>>());
}

#[test]
fn every_documented_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    ok(cli()
        .args(["bench", "--family", "lp-ls", "--algo", "abpg,rn", "--n", "12", "--m", "16", "--p", "1.5"])
        .args(["--theta-p", "0.1", "--theta1", "0.05", "--lambda", "0.5", "--alpha", "0.5", "--eta", "0.8"])
        .args(["--kappa", "1e-4", "--seed", "7", "--reps", "2", "--max-iter", "30", "--tol", "1e-8", "--out"])
        .arg(dir.path()));
    assert_eq!(fs::read_dir(dir.path().join("traces")).unwrap().count(), 4);
}

#[test]
fn unknown_flags_and_subcommands_are_errors() {
    for args in [&["run", "--bogus", "1"][..], &["frobnicate"], &["bench", "--max_iter", "3"], &[]] {
        let out = cli().args(args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
    }
}

#[test]
fn bench_reads_a_manifest_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let manifest = dir.path().join("m.toml");
    fs::write(
        &manifest,
        format!(
            "family = \"nonneg-kl\"\nalgo = \"bpg\"\nn = 10\nm = 15\nreps = 3\nmax-iter = 10\nout = {:?}\n",
            out.display().to_string()
        ),
    )
    .unwrap();
    ok(cli().arg("bench").arg(&manifest).args(["--reps", "2"]));
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 2);
    assert_eq!(fs::read_to_string(out.join("runs.csv")).unwrap().lines().count(), 3);

    fs::write(&manifest, "family = \"nonneg-kl\"\nwhatever = 1\n").unwrap();
    assert!(!cli().arg("bench").arg(&manifest).output().unwrap().status.success());
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bench", "--family", "lp-ls", "--n", "8", "--m", "8", "--max-iter", "3", "--reps", "2", "--out"];
    ok(cli().env("BREGMAN_KIT_THREADS", "1").args(args).arg(dir.path()));
    let out = cli().env("BREGMAN_KIT_THREADS", "zero").args(args).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn plot_writes_svg_and_rejects_missing_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    ok(cli().args(["bench", "--family", "lp-loss", "--n", "10", "--m", "40", "--max-iter", "30", "--out"]).arg(dir.path()));
    let traces: Vec<_> = fs::read_dir(dir.path().join("traces")).unwrap().map(|e| e.unwrap().path()).collect();
    let svg = dir.path().join("acc.svg");
    ok(cli().arg("plot").arg("accuracy").args(&traces).arg("--out").arg(&svg));
    let text = fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<polyline").count(), 4);

    let bare = dir.path().join("bare.csv");
    fs::write(&bare, "k,psi,step_norm,dir_norm,t,backtracks,accuracy,ms\n0,1,0,0,0,0,,0\n").unwrap();
    let out = cli().arg("plot").arg("accuracy").arg(&bare).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no plottable"));
}

#[test]
fn audit_exit_codes() {
    let out = ok(cli().args(["audit", "--family", "nonneg-kl", "--seed", "1"]));
    assert!(out.contains("PASS lsmad-sampled"));
    assert!(out.contains("all checks passed"));
}

#[test]
fn run_refuses_inapplicable_algorithms() {
    let out = cli().args(["run", "--family", "lp-ls", "--n", "5", "--m", "5", "--algo", "bpg"]).output().unwrap();
    assert!(!out.status.success());
}
