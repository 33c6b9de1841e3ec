//! End-to-end checks of the `capmeter` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn capmeter(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capmeter")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
        .to_string()
}

fn number(text: &str, key: &str) -> f64 {
    value(text, key).split_whitespace().next().unwrap().trim_end_matches('%').parse().unwrap()
}

fn write_curve(dir: &Path, name: &str, points: &[(usize, f64, f64)]) -> PathBuf {
    let mut s = String::from("# scale=nll\nn,u_mean,u_stderr,record_count\n");
    for (n, u, se) in points {
        s.push_str(&format!("{n},{u:e},{se:e},30\n"));
    }
    let path = dir.join(name);
    fs::write(&path, s).unwrap();
    path
}

fn grid(lo: f64, hi: f64, count: usize) -> Vec<usize> {
    (0..count).map(|i| (lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).round() as usize).collect()
}

/// `u∞ + ∫_0^{1/N} a σ(-(b + c ln u)) du`, by Simpson's rule in `t = ln u`.
fn sigmoid_energy(a: f64, b: f64, c: f64, u_inf: f64, n: f64) -> f64 {
    let (hi, lo) = (-n.ln(), -n.ln() - 60.0);
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let f = |t: f64| a * t.exp() / (1.0 + (b + c * t).exp());
    let mut s = f(lo) + f(hi);
    for i in 1..steps {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    u_inf + s * h / 3.0
}

const RUN_ARGS: &[&str] = &[
    "run",
    "--synthetic",
    "d=20,kappa=1",
    "--learner",
    "logistic",
    "--epochs",
    "5",
    "--n-grid",
    "50:5000:12log",
    "--boots",
    "2",
    "--folds",
    "5",
    "--seeds",
    "3",
    "--seed",
    "7",
];

fn records_without_timestamp(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with("# timestamp=")).collect::<Vec<_>>().join("\n")
}

#[test]
fn run_writes_one_record_per_job_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let mut args = RUN_ARGS.to_vec();
    args.extend(["--out", "run1.records"]);
    let first = capmeter(dir.path(), &args);
    assert!(first.status.success(), "{}", stderr(&first));

    let text = fs::read_to_string(dir.path().join("run1.records")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 12 * 30);
    let mut per_n = std::collections::BTreeMap::new();
    for row in &rows {
        *per_n.entry(row.split(',').nth(1).unwrap().to_string()).or_insert(0) += 1;
    }
    assert_eq!(per_n.len(), 12);
    assert!(per_n.values().all(|&c| c == 30));
    assert!(dir.path().join("run1.records.manifest.json").exists());

    args.pop();
    args.push("run2.records");
    args.splice(0..0, ["--jobs", "2"]);
    let second = capmeter(dir.path(), &args);
    assert!(second.status.success());
    let strip = |name: &str| records_without_timestamp(&dir.path().join(name)).replace(name, "OUT");
    assert_eq!(strip("run1.records"), strip("run2.records"));
}

#[test]
fn single_thread_matches_parallel_run() {
    let dir = TempDir::new().unwrap();
    for (jobs, out) in [("1", "a.csv"), ("4", "b.csv")] {
        let mut args = vec!["--jobs", jobs];
        args.extend_from_slice(RUN_ARGS);
        let grid = args.iter().position(|a| *a == "--n-grid").unwrap() + 1;
        args[grid] = "50:200:4log";
        args.extend(["--out", out]);
        assert!(capmeter(dir.path(), &args).status.success());
    }
    let a = records_without_timestamp(&dir.path().join("a.csv")).replace("a.csv", "OUT");
    let b = records_without_timestamp(&dir.path().join("b.csv")).replace("b.csv", "OUT");
    assert_eq!(a, b);
}

#[test]
fn missing_learner_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = capmeter(dir.path(), &["run", "--synthetic", "d=5,kappa=0", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--learner"), "{}", stderr(&o));
}

#[test]
fn fit_recovers_a_known_sigmoid() {
    let dir = TempDir::new().unwrap();
    let points: Vec<(usize, f64, f64)> =
        grid(100.0, 1e5, 15).into_iter().map(|n| (n, sigmoid_energy(100.0, 20.0, 3.0, 0.1, n as f64), 0.005)).collect();
    let curve = write_curve(dir.path(), "truth.csv", &points);
    let o = capmeter(dir.path(), &["fit", "--curve", curve.to_str().unwrap(), "--method", "sigmoid", "--out", "r.txt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = number(&stdout(&o), "sigmoid.a");
    assert!((a / 100.0 - 1.0).abs() < 0.05, "a = {a}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!((json["sigmoid"]["a"].as_f64().unwrap() - a).abs() < 1e-5);
}

#[test]
fn capacity_per_parameter_is_reported() {
    // a constant capacity of 609 makes C(N_max) = 609 whatever the fit's shape
    let dir = TempDir::new().unwrap();
    let points: Vec<(usize, f64, f64)> =
        grid(50.0, 5000.0, 12).into_iter().map(|n| (n, 0.2 + 609.0 / n as f64, 1e-4)).collect();
    let curve = write_curve(dir.path(), "c.csv", &points);
    let o = capmeter(dir.path(), &["fit", "--curve", curve.to_str().unwrap(), "--params", "78902"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((number(&stdout(&o), "sigmoid.capacity_n_max") - 609.0).abs() < 1.0);
    assert_eq!(value(&stdout(&o), "capacity_per_param"), "0.77%");
}

#[test]
fn three_point_curve_cannot_be_fitted() {
    let dir = TempDir::new().unwrap();
    let curve = write_curve(dir.path(), "short.csv", &[(10, 0.3, 0.01), (20, 0.2, 0.01), (40, 0.1, 0.01)]);
    let o = capmeter(dir.path(), &["fit", "--curve", curve.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).to_lowercase().contains("degenerate"), "{}", stderr(&o));
}

#[test]
fn plot_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let points: Vec<(usize, f64, f64)> =
        grid(50.0, 5000.0, 12).into_iter().map(|n| (n, 0.1 + 30.0 / n as f64, 1e-3)).collect();
    let curve = write_curve(dir.path(), "c.csv", &points);
    for name in ["p1.svg", "p2.svg"] {
        assert!(capmeter(dir.path(), &["fit", "--curve", curve.to_str().unwrap(), "--plot", name]).status.success());
    }
    let svg = fs::read_to_string(dir.path().join("p1.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg, fs::read_to_string(dir.path().join("p2.svg")).unwrap());
}

#[test]
fn oracle_examples() {
    let dir = TempDir::new().unwrap();
    let o = capmeter(dir.path(), &["oracle", "--lambda", "1,1", "--eps", "1", "--n", "1000000000", "--exact"]);
    assert!(o.status.success());
    assert!((number(&stdout(&o), "capacity_exact(N=1000000000)") - 1.0).abs() < 1e-6);

    let o = capmeter(dir.path(), &["oracle", "--lambda", "1,0.1,0.001", "--eps", "0.2", "--dim-at", "101"]);
    assert_eq!(value(&stdout(&o), "pacbayes_effective_dim(N=101)"), "3");

    fs::write(dir.path().join("spec.txt"), "1.0\n0.5\n").unwrap();
    let o = capmeter(dir.path(), &["oracle", "--spectrum", "spec.txt"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

/// Fits `u∞ + k/N` curves and returns the JSON report paths.
fn fitted_reports(dir: &Path, models: &[(&str, f64, f64, (f64, f64))]) -> Vec<String> {
    models
        .iter()
        .map(|&(name, u_inf, k, (lo, hi))| {
            let points: Vec<(usize, f64, f64)> =
                grid(lo, hi, 12).into_iter().map(|n| (n, u_inf + k / n as f64, 1e-4)).collect();
            let curve = write_curve(dir, &format!("{name}.csv"), &points);
            let out = format!("{name}.txt");
            let o = capmeter(dir, &["fit", "--curve", curve.to_str().unwrap(), "--label", name, "--out", &out]);
            assert!(o.status.success(), "{}", stderr(&o));
            format!("{name}.json")
        })
        .collect()
}

fn compare(dir: &Path, reports: &[String]) -> String {
    let mut args = vec!["compare"];
    args.extend(reports.iter().map(String::as_str));
    let o = capmeter(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o)
}

#[test]
fn compare_reports_agreeing_and_reversed_rankings() {
    let dir = TempDir::new().unwrap();
    let agree =
        fitted_reports(dir.path(), &[("small", 0.1, 5.0, (50.0, 5000.0)), ("large", 0.2, 20.0, (50.0, 5000.0))]);
    let text = compare(dir.path(), &agree);
    let taus: Vec<&str> = text.lines().filter(|l| l.starts_with("kendall_tau")).collect();
    assert_eq!(taus.len(), 12);
    assert!(taus.iter().all(|l| l.ends_with("=1.000000")), "{text}");

    let reversed =
        fitted_reports(dir.path(), &[("lean", 0.6, 5.0, (50.0, 5000.0)), ("rich", 0.1, 20.0, (50.0, 5000.0))]);
    let text = compare(dir.path(), &reversed);
    assert!(text.lines().filter(|l| l.starts_with("kendall_tau")).all(|l| l.ends_with("=-1.000000")), "{text}");
}

#[test]
fn compare_with_one_shared_size_refuses_the_regression() {
    let dir = TempDir::new().unwrap();
    let reports =
        fitted_reports(dir.path(), &[("low", 0.1, 5.0, (50.0, 5000.0)), ("high", 0.2, 20.0, (5000.0, 500_000.0))]);
    let text = compare(dir.path(), &reports);
    assert_eq!(value(&text, "shared_n"), "5000");
    assert_eq!(value(&text, "kendall_tau(N=5000)"), "1.000000");
    assert!(text.contains("regression=refused"));
    assert!(text.lines().any(|l| l.starts_with("warning=")), "{text}");
}

#[test]
fn sgld_quadratic_capacities_track_the_oracle() {
    let dir = TempDir::new().unwrap();
    let args = [
        "sgld",
        "--learner",
        "quadratic",
        "--lambda",
        "1,1",
        "--prior-eps",
        "1",
        "--schedule",
        "5,10,20,40",
        "--chains",
        "10",
        "--batch",
        "1",
        "--min-steps",
        "500",
        "--samples",
        "200",
        "--seed",
        "2",
        "--out",
        "q.csv",
    ];
    let o = capmeter(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    // U(N) = 1/(N+2) for this energy; capacity by the same forward difference
    let u = |n: f64| 1.0 / (n + 2.0);
    let text = fs::read_to_string(dir.path().join("q.csv.capacities.csv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect();
    assert_eq!(rows.len(), 3);
    for (n, c) in rows {
        let next = 2.0 * n;
        let oracle = -n * n * (u(next) - u(n)) / (next - n);
        assert!((c - oracle).abs() <= 0.15, "N={n}: {c} vs {oracle}");
    }
}

#[test]
fn sgld_rejects_knn_and_oversized_schedules() {
    let dir = TempDir::new().unwrap();
    let o = capmeter(dir.path(), &["sgld", "--learner", "knn", "--synthetic", "d=5,kappa=0", "--out", "s.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learner not differentiable"));

    let o = capmeter(
        dir.path(),
        &[
            "sgld",
            "--learner",
            "logistic",
            "--synthetic",
            "d=5,kappa=0,rows=50",
            "--schedule",
            "5,10,20,400",
            "--out",
            "s.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).to_lowercase().contains("schedule"), "{}", stderr(&o));
}
