use std::path::Path;
use std::process::{Command, Output};

fn cartan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartan")).args(args).output().expect("run cartan")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn parse_tuple(line: &str) -> Vec<f64> {
    let inner = line.split_once('(').unwrap().1.trim_end_matches(')');
    inner.split(',').map(|s| s.trim().parse().unwrap()).collect()
}

#[test]
fn frame_of_a_tilted_plane_prints_one_vector_per_normal() {
    let o = cartan(&["frame", "--lagrangian", "area3", "--slopes", "1 0", "--normalize"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].starts_with("v1 = ("));
    let v = parse_tuple(lines[0]);
    let h = 0.5f64.sqrt();
    assert!((v[0] - h).abs() < 1e-15 && v[1].abs() < 1e-15 && (v[2] + h).abs() < 1e-15, "{v:?}");
}

#[test]
fn frame_prints_seventeen_significant_digits() {
    let o = cartan(&["frame", "--lagrangian", "area3", "--slopes", "0.3 -0.7", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("vector,c1,c2,c3"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let value: f64 = row[1].parse().unwrap();
    let digits = row[1].trim_start_matches('-').replace('.', "").split('e').next().unwrap().trim_start_matches('0').len();
    assert!(digits >= 16, "{}", row[1]);
    assert!(value.is_finite());
}

#[test]
fn degenerate_four_dimensional_frame_warns_on_stderr() {
    let o = cartan(&["frame", "--lagrangian", "paper4d", "--slopes", "1 0; 0 0"]);
    assert!(o.status.success());
    assert!(stderr(&o).starts_with("warning: "));
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text.lines().map(parse_tuple).collect();
    assert_eq!(rows, vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, -1.0]]);
}

#[test]
fn volume_of_sheared_square_is_two() {
    let o = cartan(&["volume", "--vectors", "1 1; 0 2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 2.0);

    let o = cartan(&["volume", "--vectors", "1 0; 0 1", "--metric", "4 0; 0 9"]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 6.0);
}

#[test]
fn volume_reads_a_record_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.json");
    std::fs::write(&path, r#"{"vectors": [[1, 0, 0], [1, 1, 0], [1, 1, 1]]}"#).unwrap();
    let o = cartan(&["volume", "--input", path.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["volume"].as_f64().unwrap() - 1.0).abs() < 1e-15, "{v}");
}

#[test]
fn minkowski_check_passes_for_homogenized_area() {
    let o = cartan(&["check-minkowski", "--lagrangian", "area3", "--samples", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("passed: true"));
}

#[test]
fn config_errors_exit_two_with_a_reason_code() {
    for args in [
        vec!["frame", "--lagrangian", "area3", "--slopes", "1 x"],
        vec!["frame", "--lagrangian", "nonsense-name((", "--slopes", "1 0"],
        vec!["volume", "--vectors", "1 0; 0 1", "--metric", "1 2; 3 1"],
        vec!["frobnicate"],
        vec!["solve", "--lagrangian", "area3"],
    ] {
        let o = cartan(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        let line = err.lines().last().unwrap();
        assert!(line.starts_with("error[code="), "{args:?}: {line}");
        assert_eq!(err.lines().filter(|l| l.starts_with("error[")).count(), 1);
    }
}

#[test]
fn help_exits_zero() {
    assert!(cartan(&["--help"]).status.success());
    assert!(cartan(&["verify", "--help"]).status.success());
}

#[test]
fn solve_writes_graph_record_and_point_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("graph.json");
    let points = dir.path().join("points.csv");
    let o = cartan(&[
        "solve",
        "--lagrangian",
        "area3",
        "--domain",
        "0,1",
        "--resolution",
        "9",
        "--boundary",
        "x*x - y*y",
        "--output",
        graph.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    assert_eq!(record["resolution"], 9);
    let cloud = std::fs::read_to_string(&points).unwrap();
    let mut lines = cloud.lines();
    assert_eq!(lines.next(), Some("x1,x2,z1"));
    assert_eq!(lines.count(), 81);
}

#[test]
fn verify_classifies_frame_on_flat_patch_as_normal() {
    let o = cartan(&[
        "verify",
        "--lagrangian",
        "area3",
        "--domain",
        "0,1",
        "--resolution",
        "17",
        "--boundary",
        "0",
        "--field",
        "frame",
        "--seed",
        "7",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("field,psi,a0,da_dt,da_dt_order4,boundary_formula,classification,h_t,note")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "frame");
    assert_eq!(row[1], "random(seed=7)");
    assert_eq!(row[6], "normal");
}

#[test]
fn verify_accepts_a_solved_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("graph.json");
    let table = dir.path().join("table.csv");
    let solve = cartan(&[
        "solve", "--lagrangian", "area3", "--domain", "0,1", "--resolution", "9", "--boundary", "x + y", "-o",
        graph.to_str().unwrap(),
    ]);
    assert!(solve.status.success(), "{}", stderr(&solve));
    let o = cartan(&[
        "verify",
        "--lagrangian",
        "area3",
        "--graph",
        graph.to_str().unwrap(),
        "--boundary",
        "x + y",
        "--field",
        "frame",
        "--field",
        "tangent:1",
        "--csv",
        table.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().next().unwrap().starts_with("field"));
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().contains("non-normal"), "{csv}");
}

#[test]
fn run_executes_a_toml_config_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("vectors.toml"), "vectors = [[2.0, 0.0], [0.0, 3.0]]\n").unwrap();
    let cfg = dir.path().join("volume.toml");
    std::fs::write(&cfg, "command = \"volume\"\ninput = \"vectors.toml\"\n\n[output]\npath = \"out.txt\"\n").unwrap();
    let o = cartan(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written = std::fs::read_to_string(dir.path().join("out.txt")).unwrap();
    assert_eq!(written.trim().parse::<f64>().unwrap(), 6.0);
}

#[test]
fn run_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "command = \"volume\"\nvectorz = \"1 0; 0 1\"\n").unwrap();
    let o = cartan(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[code="));
    assert!(!Path::new(&dir.path().join("out.txt")).exists());
}
