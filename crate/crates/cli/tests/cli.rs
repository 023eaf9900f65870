use std::path::Path;
use std::process::{Command, Output};

use cubepu::halton::{generate, HaltonConfig};
use cubepu::Point3;
use cubepu_cli::io::RESULT_HEADER;

fn cubepu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubepu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_file(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    format!("file:{}", path.display())
}

fn columns(line: &str) -> Vec<String> {
    line.split(',').map(str::to_string).collect()
}

#[test]
fn bench_reference_geometry() {
    let o = cubepu(&["bench", "--nodes", "halton:4913", "--subdomains", "512", "--kernel", "g", "--shape", "2.7", "--function", "f1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], RESULT_HEADER);
    assert_eq!(lines.len(), 2);
    let row = columns(lines[1]);
    assert_eq!(&row[..4], ["4913", "512", "6", "G"]);
    assert_eq!(row[4].parse::<f64>().unwrap(), 2.7);
    assert_eq!(row[5], "f1");
    assert_eq!(row[6], "");
    assert_eq!(row[7], "cube");
    let rmse: f64 = row[8].parse().unwrap();
    let max_err: f64 = row[9].parse().unwrap();
    assert!(rmse > 0.0 && rmse <= max_err && rmse < 1e-3);
    assert!(stderr(&o).contains("q = 6 (ceiling convention), search grid q = 5"));
}

#[test]
fn bench_json_mirrors_csv_fields() {
    let o = cubepu(&["bench", "--nodes", "halton:729", "--kernel", "m4", "--shape", "3", "--mmax", "40", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, RESULT_HEADER.split(',').collect::<Vec<_>>());
    assert_eq!(v["n"], 729);
    assert_eq!(v["d"], 64);
    assert_eq!(v["mmax"], 40);
    assert_eq!(v["kernel"], "M4");
}

#[test]
fn sweep_range_arithmetic() {
    let o = cubepu(&["sweep", "--nodes", "halton:729", "--shape-range", "1:10:19", "--kernel", "m4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "shape,rmse");
    assert_eq!(lines.len(), 20);
    let shapes: Vec<f64> = lines[1..].iter().map(|l| columns(l)[0].parse().unwrap()).collect();
    for (i, s) in shapes.iter().enumerate() {
        assert!((s - (1.0 + 0.5 * i as f64)).abs() < 1e-12);
    }
    assert!(stderr(&o).contains("best shape"));
}

#[test]
fn fit_file_nodes_on_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("# x y z f\n");
    for p in generate::<f64>(&HaltonConfig::new(600)).unwrap() {
        text += &format!("{} {} {} {}\n", p.x, p.y, p.z, p.x + p.y * p.z);
    }
    let nodes = write_file(dir.path(), "pts.csv", &text);
    let out = dir.path().join("values.csv");
    let o = cubepu(&["fit", "--nodes", &nodes, "--eval", "grid:11", "--subdomains", "64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let written = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = written.lines().collect();
    assert_eq!(lines[0], "x,y,z,value");
    assert_eq!(lines.len(), 1 + 1331);
    let centre: Vec<f64> = columns(lines[1 + 665]).iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(&centre[..3], [0.5, 0.5, 0.5]);
    assert!((centre[3] - 0.75).abs() < 1e-3);
}

#[test]
fn fit_output_round_trips_as_a_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = cubepu(&["fit", "--nodes", "halton:300", "--subdomains", "8", "--eval", "halton:25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    let file = write_file(dir.path(), "values.csv", &body);
    let parsed = cubepu_cli::io::read_points(Path::new(file.trim_start_matches("file:"))).unwrap();
    let expected: Vec<Point3> = generate(&HaltonConfig::new(25)).unwrap();
    assert_eq!(parsed.positions(), expected);
}

#[test]
fn identical_argv_gives_identical_numbers() {
    let args = ["bench", "--nodes", "halton:1000", "--subdomains", "125", "--kernel", "w4", "--function", "f2"];
    let a = stdout(&cubepu(&args));
    let b = stdout(&cubepu(&args));
    let strip = |s: &str| -> Vec<Vec<String>> {
        s.lines()
            .map(|l| {
                let mut c = columns(l);
                c.drain(10..13);
                c
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn compare_search_rows_agree() {
    let o = cubepu(&["compare-search", "--nodes", "halton:2000", "--subdomains", "216", "--kernel", "g", "--shape", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(columns).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][7], "cube");
    assert_eq!(rows[1][7], "no_cube");
    assert_eq!(rows[0][8], rows[1][8]);
    assert!(stderr(&o).contains("rmse identical: true"));
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["bench", "--bogus"],
        vec!["sweep", "--shape-range", "1:10"],
        vec!["bench", "--kernel", "xyz"],
        vec!["bench", "--shape", "1", "--shape-range", "1:2:3"],
        vec!["bench", "--shape", "-1", "--nodes", "halton:100"],
        vec!["bench", "--centers", "grid:3", "--subdomains", "10", "--nodes", "halton:100"],
        vec![],
    ] {
        let o = cubepu(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(cubepu(&["--help"]).status.code(), Some(0));
}

#[test]
fn input_errors_exit_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_file(dir.path(), "bad.txt", "0.5 2.0 0.5\n");
    let o = cubepu(&["fit", "--nodes", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    let mixed = write_file(dir.path(), "mixed.txt", "# header\n0.1 0.1 0.1\n0.2 0.2 0.2 1\n");
    let o = cubepu(&["fit", "--nodes", &mixed]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"));

    let o = cubepu(&["fit", "--nodes", "file:/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = write_file(dir.path(), "corner.txt", "0.1 0.1 0.1 1\n0.12 0.1 0.1 2\n");
    let o = cubepu(&["fit", "--nodes", &nodes, "--centers", "grid:4"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("captured no nodes"),"{}", stderr(&o));
}

#[test]
fn library_entry_point_reports_codes() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cubepu_cli::run(["cubepu", "bench", "--nodes", "halton:300", "--subdomains", "8"], &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
}
