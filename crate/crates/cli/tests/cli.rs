use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use enrob_cli::svg::{render, Series};
use enrob_core::scan::{detect_kinks, uniform_grid};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enrob"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Compares with a golden file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

fn json_field(text: &str, key: &str) -> f64 {
    let start = text.find('{').expect("json body");
    let v: serde_json::Value = serde_json::from_str(&text[start..]).unwrap();
    v[key].as_f64().unwrap_or_else(|| panic!("no numeric field {key}"))
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    let non_herm = dir.path().join("nonherm.json");
    std::fs::write(&non_herm, r#"{"dim":2,"dims":[2],"re":[0.5,1,0,0.5],"im":[0,0,0,0]}"#).unwrap();
    let missing_dir = dir.path().join("nope").join("out.csv");
    let bell = data("bell.json");
    let bell = bell.to_str().unwrap();
    let ghz = data("ghz.json");
    let ghz = ghz.to_str().unwrap();
    let mixed = data("maximally-mixed.json");
    let mixed = mixed.to_str().unwrap();

    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["robustness", "--state", bell, "--model", "exact2q"], 0),
        (vec!["--help"], 0),
        (vec!["robustness", "--state", "does-not-exist.json"], 1),
        (vec!["robustness", "--state", garbage.to_str().unwrap()], 1),
        (vec!["robustness", "--state", non_herm.to_str().unwrap()], 1),
        (vec!["robustness", "--state", bell, "--quantifier", "xx"], 1),
        (vec!["robustness", "--state", ghz, "--k", "5"], 1),
        (vec!["robustness", "--state", ghz, "--model", "exact2q"], 1),
        (
            vec!["robustness", "--state", bell, "--out", missing_dir.to_str().unwrap()],
            1,
        ),
        (vec!["scan", "--family", "no-such-family"], 1),
        (vec!["scan", "--family", "werner", "--grid", "3"], 1),
        (vec!["scan", "--family", "werner", "--kink-threshold", "-1"], 1),
        (vec!["tomo", "--family", "ghz-w", "--shots", "-1"], 1),
        (vec!["tomo", "--family", "werner", "--grid", "3", "--shots", "abc"], 1),
        (vec!["witness", "--state", mixed, "--mode", "pure"], 1),
        (vec!["robustness", "--state", bell, "--max-iter", "2"], 2),
        (vec!["scan", "--family", "werner", "--grid", "5", "--max-iter", "2"], 2),
        (vec!["frobnicate"], 1),
    ];
    for (args, want) in cases {
        assert_eq!(code(&args), want, "enrob {}", args.join(" "));
    }
}

#[test]
fn robustness_values() {
    let bell = data("bell.json");
    let o = run(&[
        "robustness",
        "--state",
        bell.to_str().unwrap(),
        "--quantifier",
        "rr",
        "--model",
        "exact2q",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# model: exact2q"));
    assert!((json_field(&text, "value") - 2.0).abs() < 1e-6);

    let o = run(&["robustness", "--state", bell.to_str().unwrap(), "--quantifier", "gr"]);
    assert!((json_field(&stdout(&o), "value") - 1.0).abs() < 1e-6);

    let o = run(&["robustness", "--state", data("maximally-mixed.json").to_str().unwrap()]);
    assert!(json_field(&stdout(&o), "value").abs() < 1e-7);
}

#[test]
fn robustness_writes_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "robustness",
        "--state",
        data("ghz.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-6);
    assert_eq!(v["model"], "IntersectPpt");
}

#[test]
fn witness_modes() {
    let o = run(&[
        "witness",
        "--state",
        data("ghz.json").to_str().unwrap(),
        "--mode",
        "pure",
    ]);
    assert!(o.status.success());
    assert!((json_field(&stdout(&o), "lambda") - 0.5).abs() < 1e-6);

    let o = run(&[
        "witness",
        "--state",
        data("zero3.json").to_str().unwrap(),
        "--mode",
        "pure",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("state not detected as entangled"));
    assert!((json_field(&text, "lambda") - 1.0).abs() < 1e-9);

    let o = run(&[
        "witness",
        "--state",
        data("bell.json").to_str().unwrap(),
        "--mode",
        "sdp",
        "--quantifier",
        "rr",
    ]);
    assert!(o.status.success());
    assert!((json_field(&stdout(&o), "trace") - 4.0).abs() < 1e-8);
}

#[test]
fn scan_constant_family_has_no_kinks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let o = run(&[
        "scan",
        "--family",
        "constant-mixed",
        "--grid",
        "11",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no kinks"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "q,quantifier,model,value,dual_value,gap,status,witness_jump"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    for r in rows {
        let value: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!(value.abs() < 1e-7);
    }
}

#[test]
fn scan_family_file_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, kinks, svg) = (
        dir.path().join("s.csv"),
        dir.path().join("k.json"),
        dir.path().join("s.svg"),
    );
    let o = run(&[
        "scan",
        "--family",
        data("werner-line.json").to_str().unwrap(),
        "--model",
        "exact2q",
        "--grid",
        "21",
        "--out",
        csv.to_str().unwrap(),
        "--kinks",
        kinks.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let k: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&kinks).unwrap()).unwrap();
    assert_eq!(k["family"], "werner-line");
    // separable below q = 1/3, entangled above
    let phases = k["phases"].as_array().unwrap();
    assert_eq!(phases[0]["label"], "Separable");
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
    // the last row is the Bell state
    let text = std::fs::read_to_string(&csv).unwrap();
    let last: f64 = text.lines().last().unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((last - 2.0).abs() < 1e-6);
}

#[test]
fn scan_ghz_w_random_kink_compared() {
    let dir = tempfile::tempdir().unwrap();
    let kinks = dir.path().join("k.json");
    let o = run(&[
        "scan",
        "--family",
        "ghz-w",
        "--quantifier",
        "rr",
        "--k",
        "3",
        "--grid",
        "101",
        "--refine",
        "--out",
        dir.path().join("s.csv").to_str().unwrap(),
        "--kinks",
        kinks.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let k: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&kinks).unwrap()).unwrap();
    let c = &k["comparison"];
    assert_eq!(c["reference"], 0.47);
    assert!(c["deviation"].as_f64().unwrap().abs() <= 0.05);
    assert_eq!(k["kinks"].as_array().unwrap().len(), 1);
}

#[test]
fn tomo_exact_mode_matches_truth() {
    let o = run(&["tomo", "--family", "ghz-w", "--shots", "0", "--grid", "6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,estimate,stderr,truth,N,seed");
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - f[3]).abs() < 1e-8, "{line}");
        assert_eq!(f[2], 0.0);
    }
}

#[test]
fn tomo_is_deterministic() {
    let args = [
        "tomo", "--family", "ghz-w", "--shots", "10000", "--seed", "7", "--grid", "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    check_golden("tomo_ghz_w_rr_10000_seed7.csv", &stdout(&a));
}

#[test]
fn scan_is_deterministic() {
    let args = ["scan", "--family", "werner", "--grid", "11", "--quantifier", "gr"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn tomo_svg_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("t.svg");
    let o = run(&[
        "tomo",
        "--family",
        "werner",
        "--shots",
        "1000",
        "--grid",
        "5",
        "--out",
        dir.path().join("t.csv").to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let doc = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(doc.matches("<polyline").count(), 2);
    assert_eq!(doc.matches("<polygon").count(), 1);
}

#[test]
fn golden_abs_kink_svg() {
    let grid = uniform_grid(101);
    let values: Vec<f64> = grid.iter().map(|q| (q - 0.5).abs()).collect();
    let kinks = detect_kinks(&grid, &values, 10.0).unwrap();
    assert_eq!(kinks.len(), 1);
    let pts = grid.iter().copied().zip(values).collect();
    let doc = render("|q - 0.5|", &[Series::new("f", pts, "#1f4e9c")], &[kinks[0].location]).unwrap();
    assert_eq!(doc.matches(r#"class="kink""#).count(), 1);
    check_golden("abs_kink.svg", &doc);
}
