use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn leafuptake(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafuptake")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

#[test]
fn no_subcommand_prints_usage_and_fails() {
    let o = leafuptake(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn steady_table_over_partition_grid() {
    let o = leafuptake(&["steady", "--vary", "k", "--grid", "0.5:2:0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "value,pct_droplet,pct_cuticle,pct_leaf");
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let sum: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 100.0).abs() < 1e-9);
    }
}

#[test]
fn steady_rejects_bad_variable() {
    let o = leafuptake(&["steady", "--vary", "volume", "--grid", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_writes_only_into_out_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[solver]\nt_end = 60.0\noutput_interval = 20.0\nn_cells = 16\n").unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = leafuptake(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(listing(&out_a), ["profiles.csv", "trajectory.csv"]);
    assert_eq!(listing(dir.path()), ["a", "b", "run.toml"]);
    for name in ["profiles.csv", "trajectory.csv"] {
        assert_eq!(fs::read(out_a.join(name)).unwrap(), fs::read(out_b.join(name)).unwrap());
    }
    let traj = fs::read_to_string(out_a.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t_min,compound,pct_droplet,pct_cuticle,pct_leaf,pct_rest\n"));
    // Times 0, 20, 40, 60 for two compounds.
    assert_eq!(traj.lines().count(), 1 + 4 * 2);
    let profiles = fs::read_to_string(out_a.join("profiles.csv")).unwrap();
    assert_eq!(profiles.lines().count(), 1 + 4 * 2 * 17);
}

#[test]
fn estimate_from_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = leafuptake(&["estimate", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert!(text.starts_with("param,mean,lo,hi,unit\n"));
    let lambda: f64 =
        text.lines().find(|l| l.starts_with("lambda_A,")).and_then(|l| l.split(',').nth(1)).unwrap().parse().unwrap();
    assert!((lambda - 0.858).abs() < 0.01);
}

#[test]
fn malformed_dataset_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "t_min,compound,compartment,mean_pct,ci_lo_pct,ci_hi_pct\n37,AJ,droplet,20,25,18\n").unwrap();
    let o = leafuptake(&["estimate", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn solver_breakdown_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("huge.toml");
    fs::write(&cfg, "[active]\nQ_A0 = 1e306\n[solver]\nt_end = 1.0\n").unwrap();
    let o = leafuptake(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("solver failure"));
}

#[test]
fn coarse_sweep_excludes_alpha_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = leafuptake(&[
        "sweep",
        "--alpha",
        "0:3:0.5",
        "--sigma",
        "1:5:1",
        "--bands",
        "droplet,leaf_tissue,rest",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(listing(&out), ["region.txt", "sweep.csv"]);
    let report = fs::read_to_string(out.join("region.txt")).unwrap();
    assert!(report.contains("alpha = 0: infeasible"), "{report}");
    assert!(!report.contains("region: empty"), "{report}");
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 7 * 5);
    let centre = table.lines().find(|l| l.starts_with("1.5,3,")).unwrap();
    assert!(centre.ends_with(",1"), "{centre}");
}

#[test]
fn empirical_table() {
    let o = leafuptake(&["empirical", "--logpow", "3.90", "--mcgowan", "272.42"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let value = |q: &str, unit: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(q) && l.ends_with(unit))
            .and_then(|l| l.split(',').nth(2))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("partition_wax_water", "1") / 797.33 - 1.0).abs() < 0.01);
    assert!((value("diffusion_AJ", "um^2/min") / 1.59e-3 - 1.0).abs() < 0.01);
    assert_eq!(leafuptake(&["empirical"]).status.code(), Some(1));
}
