use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_orbtherm");
const TABLE1_CELSIUS: [f64; 10] = [2.6, 3.6, 2.6, 2.3, 0.2, 2.2, 6.3, 4.7, 15.9, 11.1];
const TABLE1_MEANS: [f64; 10] = [15.18, 2.30, 15.17, 14.80, 3.91, 0.63, 0.0, 1.70, 4.35, 6.15];

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
        .display()
        .to_string()
}

fn scratch(test: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(test);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows of a CSV file with a `time_s` (or other) header, comments skipped.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn genprofile(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let model = data("ten_node_moon.json");
    let mut args = vec!["genprofile", "--model", &model, "--output", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

#[test]
fn steady_prints_table1_temperatures() {
    let dir = scratch("steady");
    let out = dir.join("steady.csv");
    let stdout = ok(&[
        "steady",
        "--model",
        &data("ten_node_moon.json"),
        "--profile",
        &data("ten_node_const.csv"),
        "--output",
        out.to_str().unwrap(),
    ]);
    let celsius: Vec<f64> = stdout
        .lines()
        .filter(|l| l.ends_with("°C"))
        .map(|l| l.split_whitespace().rev().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(celsius.len(), 10, "{stdout}");
    for (got, want) in celsius.iter().zip(TABLE1_CELSIUS) {
        assert!((got - want).abs() <= 0.1, "{got} vs {want}");
    }
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("node,label,temperature_K\n"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn modes_prints_relaxation_times() {
    let stdout = ok(&["modes", "--model", &data("ten_node_moon.json"), "--format", "json", "--output", "/dev/null"]);
    assert!(stdout.contains("54.9"), "{stdout}");
    assert!(stdout.contains("5813.6"), "{stdout}");
    assert!(stdout.contains("Perron mode"));
}

#[test]
fn genprofile_contract() {
    let dir = scratch("genprofile");
    let a = genprofile(&dir, "a.csv", &["--duty", "0.7", "--baseline", "0.2", "-n", "111", "--period", "6660"]);
    let b = genprofile(&dir, "b.csv", &["--duty", "0.7", "--baseline", "0.2", "-n", "111", "--period", "6660"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = genprofile(&dir, "c.csv", &["--seed", "99"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let (header, rows) = table(&a);
    assert_eq!(header.len(), 11);
    assert_eq!(rows.len(), 111);
    for (j, want) in TABLE1_MEANS.iter().enumerate() {
        let mean = rows.iter().map(|r| r[j + 1]).sum::<f64>() / 111.0;
        assert!((mean - want).abs() <= 1e-9 * want.max(1.0), "node {}", j + 1);
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let model = data("ten_node_moon.json");
    let out = run(&["genprofile", "--model", &model, "--baseline", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--baseline"));
    for args in [
        vec!["frobnicate"],
        vec!["genprofile", "--model", &model, "--duty", "1"],
        vec!["genprofile", "--model", &model, "-n", "4"],
        vec!["periodic", "--model", &model, "--profile", "x.csv", "--order", "3"],
        vec!["steady"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_with_one() {
    let dir = scratch("domain");
    let missing = run(&["steady", "--model", "/nonexistent/model.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/model.json"));

    let profile = genprofile(&dir, "p.csv", &[]);
    let model = data("ten_node_moon.json");
    let bad_start = run(&["integrate", "--model", &model, "--profile", profile.to_str().unwrap(), "--start", "300,300"]);
    assert_eq!(bad_start.status.code(), Some(1));

    let short = genprofile(&dir, "short.csv", &["-n", "37"]);
    let lin = dir.join("lin.csv");
    let orc = dir.join("orc.csv");
    ok(&["periodic", "--model", &model, "--profile", profile.to_str().unwrap(), "-o", lin.to_str().unwrap()]);
    ok(&["cycle", "--model", &model, "--profile", short.to_str().unwrap(), "-o", orc.to_str().unwrap()]);
    let out = run(&["compare", "--linear", lin.to_str().unwrap(), "--oracle", orc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn periodic_first_order_columns_are_zero_mean() {
    let dir = scratch("periodic");
    let profile = genprofile(&dir, "p.csv", &["--hard-steps"]);
    let out = dir.join("periodic.csv");
    let summary = dir.join("periodic.json");
    ok(&[
        "periodic",
        "--model",
        &data("ten_node_moon.json"),
        "--profile",
        profile.to_str().unwrap(),
        "--order",
        "2",
        "--method",
        "fourier",
        "--cesaro",
        "-o",
        out.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    let (header, rows) = table(&out);
    assert_eq!(header.len(), 31);
    assert_eq!(header[11], "first_1_K");
    for j in 11..21 {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
        assert!(mean.abs() < 1e-9, "{}: {mean}", header[j]);
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["cesaro"], true);
    assert_eq!(json["min_K"].as_array().unwrap().len(), 10);
}

#[test]
fn pipeline_is_deterministic() {
    let dir = scratch("pipeline");
    let model = data("ten_node_moon.json");
    let profile = genprofile(&dir, "p.csv", &[]);
    let p = profile.to_str().unwrap();
    let mut outputs = Vec::new();
    for round in 0..2 {
        let lin = dir.join(format!("lin{round}.csv"));
        let orc = dir.join(format!("orc{round}.csv"));
        let delta = dir.join(format!("delta{round}.csv"));
        let summary = dir.join(format!("delta{round}.json"));
        ok(&["periodic", "--model", &model, "--profile", p, "-o", lin.to_str().unwrap()]);
        ok(&["cycle", "--model", &model, "--profile", p, "-o", orc.to_str().unwrap()]);
        let stdout = ok(&[
            "compare",
            "--linear",
            lin.to_str().unwrap(),
            "--oracle",
            orc.to_str().unwrap(),
            "-o",
            delta.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert!(stdout.contains("max |ΔT|"));
        outputs.push([lin, orc, delta, summary].map(|f| fs::read(f).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let (_, rows) = table(&dir.join("delta0.csv"));
    let worst = rows.iter().flat_map(|r| r[1..].iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(worst < 1.0, "{worst}");
}

#[test]
fn other_subcommands_run() {
    let dir = scratch("others");
    let model = data("ten_node_moon.json");
    let profile = genprofile(&dir, "p.csv", &[]);
    let p = profile.to_str().unwrap();
    let hc = ok(&["hotcold", "--model", &model, "--profile", p, "-o", dir.join("hc.csv").to_str().unwrap()]);
    assert!(hc.contains("hot case"));
    let jac = ok(&["jacobian", "--model", &model, "--variant", "heuristic-symmetrized", "--format", "json", "-o", dir.join("j.json").to_str().unwrap()]);
    assert!(jac.contains("Z-matrix: true"));
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("j.json")).unwrap()).unwrap();
    assert_eq!(j["variant"], "heuristic_symmetrized");
    let traj = dir.join("traj.csv");
    ok(&["integrate", "--model", &model, "--profile", p, "--periods", "0.5", "-o", traj.to_str().unwrap()]);
    let (_, rows) = table(&traj);
    assert_eq!(rows.len(), 57);
    // without --output the data goes to stdout
    let csv = ok(&["steady", "--model", &model]);
    assert!(csv.starts_with("node,label,temperature_K"));
}
