use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdjoin")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn agm_on_the_triangle_is_three_halves() {
    let o = run(&["bound", "--method", "agm", path(&data("triangle.toml"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("value: 3/2 (1.500000)"), "{}", stdout(&o));
}

#[test]
fn polymatroid_on_the_keyed_path_is_one() {
    let o = run(&["bound", "--method", "polymatroid", "--json", path(&data("path_key.toml"))]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["method"], "polymatroid");
    assert_eq!(v["value"], "1");
    let o = run(&["bound", "--method", "packing", path(&data("path.toml"))]);
    assert!(stdout(&o).contains("value: 2 "));
}

#[test]
fn coloring_on_a_single_relation_is_one() {
    let o = run(&["bound", "--method", "coloring", path(&data("single.toml"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("value: 1 (1.000000)"));
}

#[test]
fn parse_errors_exit_2_with_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "attributes = [\"x\"]\n[relations]\nR = [\"x\"]\n\n[[fds]]\nlhs = [\"x\"]\nrhs = \"w\"\n");
    let o = run(&["bound", path(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 7") && stderr(&o).contains("`w`"), "{}", stderr(&o));
    let o = run(&["bound", path(&dir.path().join("missing.toml"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn caps_exit_3() {
    let o = run(&["bound", "--method", "polymatroid", "--cap", "2", path(&data("triangle.toml"))]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let names: Vec<String> = (0..13).map(|i| format!("\"a{i}\"")).collect();
    let wide = write(dir.path(), "wide.toml", &format!("attributes = [{0}]\n[relations]\nR = [{0}]\n", names.join(", ")));
    let o = run(&["verify", path(&wide)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn product_synthesis_writes_nine_row_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("db.toml");
    let o = run(&["synth", path(&data("triangle.toml")), "--construction", "product", "--N", "9", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("predicted alpha: 1.500000"));
    let text = fs::read_to_string(&out).unwrap();
    let doc: toml::Table = text.parse().unwrap();
    for r in ["R", "S", "T"] {
        assert_eq!(doc["tables"][r]["rows"].as_array().unwrap().len(), 9);
    }
    let e = run(&["eval", path(&data("triangle.toml")), path(&out)]);
    assert!(stdout(&e).contains("join rows: 27"), "{}", stdout(&e));
}

#[test]
fn permutation_k4_gives_six_coset_rows() {
    let o = run(&["synth", path(&data("path.toml")), "--construction", "permutation", "--params", path(&data("permutation.toml"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: toml::Table = stdout(&o).parse().unwrap();
    assert_eq!(doc["tables"]["R"]["rows"].as_array().unwrap().len(), 6);
    assert!(stderr(&o).contains("size R: 6"));
}

#[test]
fn count_only_never_materializes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("db.toml");
    let (inst, params) = (data("path.toml"), data("permutation.toml"));
    let args = ["synth", path(&inst), "--construction", "permutation", "--params", path(&params), "--k", "1000"];
    let o = run(&[&args[..], &["--count-only", "--out", path(&out)]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("size R: "));
    assert!(!out.exists());
    let o = run(&args);
    assert_eq!(code(&o), 3);
}

#[test]
fn invalid_constructions_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "p.toml", "[coloring]\nvalues = 2\n[coloring.colors]\nx = [\"a\"]\ny = [\"b\"]\nz = [\"c\"]\n");
    let o = run(&["synth", path(&data("path_key.toml")), "--construction", "coloring", "--params", path(&params)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let o = run(&["synth", path(&data("triangle.toml")), "--construction", "product"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn component_evaluation_matches_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.toml");
    let o = run(&["synth", path(&data("triangle.toml")), "--construction", "coloring", "--values", "3", "--out", path(&db)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut dumps = Vec::new();
    for algo in ["baseline", "components"] {
        let dump = dir.path().join(format!("{algo}.toml"));
        let o = run(&["eval", path(&data("triangle.toml")), path(&db), "--algo", algo, "--dump", path(&dump)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        dumps.push(fs::read_to_string(dump).unwrap());
    }
    assert_eq!(dumps[0], dumps[1]);
    let o = run(&["eval", path(&data("path_key.toml")), path(&data("path_key_db.toml")), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["join_rows"], 2);
    assert_eq!(v["iterative_width"], 1);
}

#[test]
fn bag_projection_counts_every_preimage() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "q.toml",
        "attributes = [\"x\", \"y\", \"z\"]\n[relations]\nR = [\"x\", \"y\"]\nS = [\"y\", \"z\"]\n[query]\njoins = [\"R\", \"S\"]\nfree = [\"x\"]\n",
    );
    let db = write(dir.path(), "db.toml", "[tables.R]\nattributes = [\"x\", \"y\"]\nrows = [[\"a\", \"1\"], [\"a\", \"2\"]]\n[tables.S]\nattributes = [\"y\", \"z\"]\nrows = [[\"1\", \"p\"], [\"2\", \"p\"], [\"2\", \"q\"]]\n");
    let o = run(&["eval", path(&inst), path(&db), "--free-projection", "bag"]);
    assert!(stdout(&o).contains("join rows: 3") && stdout(&o).contains("projected rows (bag): 3"), "{}", stdout(&o));
    let o = run(&["eval", path(&inst), path(&db)]);
    assert!(stdout(&o).contains("projected rows (set): 1"), "{}", stdout(&o));
}

#[test]
fn empty_database_reports_undefined_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let db = write(dir.path(), "db.toml", "");
    let o = run(&["eval", path(&data("triangle.toml")), path(&db)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("join rows: 0") && stdout(&o).contains("alpha: undefined"));
}

#[test]
fn duplicate_rows_warn_and_bars_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let db = write(dir.path(), "db.toml", "[tables.R]\nattributes = [\"x\", \"y\"]\nrows = [[\"a\", \"1\"], [\"a\", \"1\"]]\n");
    let o = run(&["eval", path(&data("single.toml")), path(&db)]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("duplicate row"));
    let db = write(dir.path(), "bar.toml", "[tables.R]\nattributes = [\"x\", \"y\"]\nrows = [[\"a|b\", \"1\"]]\n");
    assert_eq!(code(&run(&["eval", path(&data("single.toml")), path(&db)])), 2);
}

#[test]
fn shipped_instances_verify() {
    for name in ["triangle.toml", "path.toml", "path_key.toml", "single.toml"] {
        let o = run(&["verify", path(&data(name))]);
        assert_eq!(code(&o), 0, "{name}: {}", stdout(&o));
        assert!(stdout(&o).contains("result: pass"));
    }
    let o = run(&["verify", "--json", path(&data("path_key.toml"))]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["coloring_bound"], 1.0);
}

#[test]
fn width_reports_layers() {
    let o = run(&["width", path(&data("path_key.toml"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("iterative width: 1"));
}

#[test]
fn commands_are_deterministic() {
    let (inst, params) = (data("triangle.toml"), data("triangle_gf3.toml"));
    let args = ["synth", path(&inst), "--construction", "vspace", "--params", path(&params)];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
