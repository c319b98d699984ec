use std::process::{Command, Output};

use tensorlab::bench::read_sweep_csv;

fn tensorlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tensorlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn no_arguments_is_usage_error() {
    let o = tensorlab(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(tensorlab(&["join", "--budget", "1000"]).status.code(), Some(1));
    assert_eq!(tensorlab(&["join", "--policy", "fastest"]).status.code(), Some(1));
    assert_eq!(tensorlab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tensorlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn small_auto_join_is_row_fits_in_memory() {
    let o = tensorlab(&["join", "--n", "1000", "--budget", "64MB", "--policy", "auto", "--reps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("path: row (FitsInMemory)"), "{}", stdout(&o));
}

#[test]
fn join_from_generated_files_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    for (file, seed) in [("l.rel", "1"), ("r.rel", "2")] {
        let o = tensorlab(&["gen", "--n", "3000", "--key-domain", "500", "--seed", seed, "--out", &p(file)]);
        assert_eq!(o.status.code(), Some(0));
    }
    let mut digests = Vec::new();
    for policy in ["force_row", "force_tensor"] {
        let o = tensorlab(&[
            "join", "--left", &p("l.rel"), "--right", &p("r.rel"), "--budget", "64KB", "--policy", policy, "--reps", "2",
            "--csv", &p("out.csv"),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let rows = read_sweep_csv(std::fs::File::open(p("out.csv")).unwrap()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].policy, policy);
        digests.push(rows[0].digest_hex.clone());
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn bench_fit_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    std::fs::write(
        p("grid.conf"),
        "repetitions = 2\nwarmup = 0\n[j]\noperation = join\nn = 500, 1000, 1500, 2000, 40000, 60000\nbudget = 1MB\npolicy = force_row, force_tensor\n",
    )
    .unwrap();
    let o = tensorlab(&["bench", "--config", &p("grid.conf"), "--out", &p("sweep.csv")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_sweep_csv(std::fs::File::open(p("sweep.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 12);

    let o = tensorlab(&["fit", "--input", &p("sweep.csv")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("operation,budget_bytes,path,linear_coeff"));
    assert!(text.lines().any(|l| l.starts_with("join,1048576,row,")));

    let o = tensorlab(&["report", "--inputs", &p("sweep.csv"), "--out-dir", &p("figs")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(p("figs")).unwrap().count(), 6);
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "[j]\noperation = join\nn = ten\n").unwrap();
    let o = tensorlab(&["bench", "--config", conf.to_str().unwrap(), "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn failing_cells_set_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    let out = dir.path().join("s.csv");
    std::fs::write(&conf, "repetitions = 1\n[s]\noperation = sort\nn = 100\npayload_width = 9000\nbudget = 64KB\npolicy = force_row\nsort_keys = key\n").unwrap();
    let o = tensorlab(&["bench", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rows = read_sweep_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(rows[0].is_error());
}
