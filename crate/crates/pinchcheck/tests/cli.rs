use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pinchcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinchcheck")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name).to_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn identity_matrix_is_elliptic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "id.txt", "n=2\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
    let o = pinchcheck(&["matrix-analyze", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["elliptic_height"], 4);
}

#[test]
fn jordan_block_splits_one_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "n1.json", "[[1, 1], [0, 1]]");
    let o = pinchcheck(&["matrix-analyze", &f, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("0.0,2,1,") && row.ends_with(",1,1"), "{text}");
}

#[test]
fn non_symplectic_matrix_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.txt", "n=1\n2 0\n0 1\n");
    let o = pinchcheck(&["matrix-analyze", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("residual"));
}

#[test]
fn full_turn_rotation_indices() {
    let o = pinchcheck(&["path-index", "rotation:2pi", "--omega", "1", "--m", "2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("omega,1,1,2"), "{text}");
    assert!(text.contains("m,2,3,2"), "{text}");
}

#[test]
fn path_index_input_errors_exit_two() {
    assert_eq!(pinchcheck(&["path-index", "rotation:2pi", "--omega", ""]).status.code(), Some(2));
    assert_eq!(pinchcheck(&["path-index", "spiral:1"]).status.code(), Some(2));
    assert_eq!(pinchcheck(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn bad_surfaces_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let neg = write(dir.path(), "neg.json", r#"{"kind":"ellipsoid","n":2,"radii":[-1.0,1.1]}"#);
    let extra = write(dir.path(), "extra.json", r#"{"kind":"ellipsoid","n":1,"radii":[1.0],"mass":2}"#);
    for f in [neg, extra] {
        assert_eq!(pinchcheck(&["verify", &f]).status.code(), Some(2));
    }
}

#[test]
fn verify_outside_pinching_reports_the_gate() {
    let o = pinchcheck(&["verify", &corpus("ellipsoid_1_1.3.json"), "--m-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdicts"]["pinching_gate"], false);
    assert!((v["verdicts"]["pinch_ratio"].as_f64().unwrap() - 1.3).abs() < 1e-12);
}

#[test]
fn verify_is_byte_reproducible_and_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let spec = corpus("circle.json");
    let a = pinchcheck(&["verify", &spec, "--seed", "3"]);
    let b = pinchcheck(&["verify", &spec, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(stdout(&a), std::fs::read_to_string(&out).unwrap());
}

#[test]
fn orbits_find_csv_has_coordinates() {
    let o = pinchcheck(&["orbits-find", &corpus("circle.json"), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "orbit,t,x1,x2");
}
