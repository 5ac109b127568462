use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--layer-sizes",
    "2,8,8,1",
    "--n-interior",
    "100",
    "--n-boundary",
    "20",
    "--max-iter",
    "5",
    "--timeout",
    "100",
    "--eval-grid",
    "10",
    "--n-rays",
    "2000",
    "--image-bins",
    "10",
];

fn mapnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapnet")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mapnet(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = mapnet(args);
    assert!(!out.status.success(), "{args:?} should fail");
    String::from_utf8(out.stderr).unwrap()
}

fn solve_small(problem: &str, seed: &str, out: &Path) -> String {
    let mut args = vec!["solve", "--problem", problem, "--seeds", seed, "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    ok(&args)
}

/// run.csv with the time column dropped.
fn loss_csv(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            cols.remove(1);
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn solve_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let line = solve_small("A", "3", tmp.path());
    assert!(line.starts_with("problem=A seed=3 nmae="), "{line}");
    assert!(line.contains("termination=max_iter iterations=5"), "{line}");
    let seed = tmp.path().join("A/seed_3");
    for f in ["run.csv", "checkpoint.bin", "error_map.csv", "error_map.pgm", "config.toml"] {
        assert!(seed.join(f).is_file(), "missing {f}");
    }
    let run = fs::read_to_string(seed.join("run.csv")).unwrap();
    let mut lines = run.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iter,time_s,loss_total,loss_interior,loss_convexity,loss_boundary,nmae_or_blank,termination_reason"
    );
    assert_eq!(lines.count(), 6);
    assert!(run.trim_end().ends_with(",max_iter"));
    let summary = fs::read_to_string(tmp.path().join("A/summary.csv")).unwrap();
    assert!(summary.starts_with("problem,seed,metric,value,termination_reason,iterations,wall_time_s,final_loss\nA,3,nmae,"));
}

#[test]
fn zero_timeout_terminates_immediately() {
    let tmp = tempfile::tempdir().unwrap();
    let line = ok(&["solve", "--problem", "A", "--timeout", "0", "--out", tmp.path().to_str().unwrap()]);
    assert!(line.contains("termination=timeout iterations=0"), "{line}");
}

#[test]
fn invalid_input_is_rejected() {
    assert!(fails(&["solve", "--problem", "Z"]).contains("unknown problem 'Z'"));
    assert!(fails(&["solve", "--layer-sizes", "2,4,2"]).starts_with("error:"));
    assert!(fails(&["solve", "--n-interior", "0"]).contains("n_interior"));
    assert!(fails(&["sweep", "--axis", "colour", "--values", "1"]).contains("unknown sweep axis"));
    assert!(fails(&["sweep", "--axis", "depth", "--values", "two"]).contains("not a count"));
}

#[test]
fn identical_runs_write_identical_loss_csvs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    solve_small("B", "1", a.path());
    solve_small("B", "1", b.path());
    let p = "B/seed_1/run.csv";
    assert_eq!(loss_csv(&a.path().join(p)), loss_csv(&b.path().join(p)));
    let e = "B/seed_1/error_map.csv";
    assert_eq!(fs::read(a.path().join(e)).unwrap(), fs::read(b.path().join(e)).unwrap());
}

#[test]
fn raytrace_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let line = solve_small("D", "0", tmp.path());
    assert!(line.contains("image_nmae="), "{line}");
    let seed = tmp.path().join("D/seed_0");
    for f in ["traced.csv", "traced.pgm", "target.csv", "target.pgm"] {
        assert!(seed.join(f).is_file(), "missing {f}");
    }
    let ckpt = seed.join("checkpoint.bin");
    let out = tmp.path().join("one_ray");
    let line = ok(&[
        "raytrace",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--n-rays",
        "1",
        "--bins",
        "8x6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(line.starts_with("problem=D rays=1 bins=8x6"), "{line}");
    let traced = fs::read_to_string(out.join("traced.csv")).unwrap();
    let masses: Vec<f64> = traced
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(masses.len(), 48);
    let lit: Vec<f64> = masses.into_iter().filter(|&m| m > 0.0).collect();
    assert!(lit == vec![1.0] || fs::read_to_string(out.join("image_nmae.txt")).unwrap().contains("overflow_rays=1"));
    assert!(out.join("image_nmae.txt").is_file());

    let err = fails(&["raytrace", "--checkpoint", ckpt.to_str().unwrap(), "--problem", "E"]);
    assert!(err.contains("trained on problem D"), "{err}");
    let missing = tmp.path().join("nope.bin");
    assert!(fails(&["raytrace", "--checkpoint", missing.to_str().unwrap()]).starts_with("error:"));
}

#[test]
fn config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let text = ok(&["config", "--problem", "C", "--n-interior", "400", "--optimizer", "adam", "--lr", "0.01"]);
    assert!(text.contains("problem = \"C\""), "{text}");
    let path = tmp.path().join("run.toml");
    fs::write(&path, &text).unwrap();
    assert_eq!(ok(&["config", "--config", path.to_str().unwrap()]), text);
    // flags win over the file
    let text2 = ok(&["config", "--config", path.to_str().unwrap(), "--n-interior", "900"]);
    assert!(text2.contains("n_interior = 900"));
    fs::write(&path, "bogus_key = 1\n").unwrap();
    assert!(fails(&["config", "--config", path.to_str().unwrap()]).contains("bogus_key"));
}

#[test]
fn defaults_match_reference_setup() {
    let text = ok(&["config"]);
    for line in [
        "layer_sizes = [2, 32, 32, 32, 1]",
        "n_interior = 2500",
        "n_boundary = 500",
        "timeout_s = 15.0",
        "optimizer = \"lbfgs\"",
        "seeds = [0]",
    ] {
        assert!(text.contains(line), "missing {line} in\n{text}");
    }
}

#[test]
fn single_cell_sweep_matches_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let mut args = vec!["sweep", "--problem", "A", "--axis", "n_interior", "--values", "100", "--seeds", "2", "--out", out];
    args.extend_from_slice(SMALL);
    ok(&args);
    let solo = tempfile::tempdir().unwrap();
    solve_small("A", "2", solo.path());
    let cell = tmp.path().join("sweep_n_interior/n_interior=100/A/seed_2/run.csv");
    assert_eq!(loss_csv(&cell), loss_csv(&solo.path().join("A/seed_2/run.csv")));

    let tidy = fs::read_to_string(tmp.path().join("sweep_n_interior/sweep.csv")).unwrap();
    assert!(tidy.starts_with("axis_value,seed,final_nmae,wall_time_s\n100,2,"));
    let summary = fs::read_to_string(tmp.path().join("sweep_n_interior/sweep_summary.csv")).unwrap();
    let mut rows = summary.lines();
    assert_eq!(
        rows.next().unwrap(),
        "axis_value,n_seeds,mean_nmae,ci95_low,ci95_high,median_nmae,mean_wall_time_s"
    );
    let cols: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(cols[1], "1");
    // one seed: zero-width interval around the mean
    assert_eq!(cols[2], cols[3]);
    assert_eq!(cols[2], cols[4]);
}

#[test]
fn report_aggregates_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--problem", "C", "--seeds", "0,1", "--out", tmp.path().to_str().unwrap()];
    args.extend_from_slice(SMALL);
    ok(&args);
    solve_small("E", "0", tmp.path());
    let table = ok(&["report", tmp.path().to_str().unwrap()]);
    assert!(table.lines().next().unwrap().starts_with("problem"));
    let csv = fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "problem,metric,n_seeds,median,mean,ci95_half_width,best,worst,mean_wall_time_s");
    assert!(lines[1].starts_with("C,nmae,2,"));
    assert!(lines[2].starts_with("E,image_nmae,1,"));
    let empty = tempfile::tempdir().unwrap();
    assert!(fails(&["report", empty.path().to_str().unwrap()]).contains("no summary.csv"));
}
