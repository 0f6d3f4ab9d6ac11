use std::path::Path;
use std::process::{Command, Output};

fn periodica(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_periodica"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bad_input_exits_with_code_2_and_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "t,y,sigma\n1,2,0.5\n2,abc,0.5\n3,1,0.5\n").unwrap();
    let o = periodica(dir.path(), &["periodogram", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn missing_file_and_bad_options_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = periodica(dir.path(), &["periodogram", "--input", "/nonexistent/file.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = periodica(dir.path(), &["simulate", "--design", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = periodica(dir.path(), &["--threads", "0", "simulate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_then_periodogram_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = periodica(&data, &["simulate", "--design", "example1", "--n", "40", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let input = data.join("simulated.csv");
    let pg = dir.path().join("pg");
    let o = periodica(&pg, &["periodogram", "--input", input.to_str().unwrap(), "--grid", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(pg.join("periodogram.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(pg.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "periodogram");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn rerun_detects_changed_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(periodica(&data, &["simulate", "--design", "i", "--n", "30"]).status.success());
    let input = data.join("simulated.csv");
    let pg = dir.path().join("pg");
    assert!(periodica(&pg, &["periodogram", "--input", input.to_str().unwrap(), "--grid", "20"]).status.success());
    let mut text = std::fs::read_to_string(&input).unwrap();
    text.push_str("1000,0,1\n");
    std::fs::write(&input, text).unwrap();
    let manifest = pg.join("manifest.json");
    let o = periodica(&dir.path().join("again"), &["rerun", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("input changed"));
}
