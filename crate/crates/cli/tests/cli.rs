use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equideg"))
}

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/configs")
        .join(format!("{name}.toml"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("equideg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

#[test]
fn analyze_example1() {
    let out = run(&["analyze", example("example1").to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["format_version"], 1);
    let r = &v["report"];
    assert_eq!(r["criterion"]["kind"], "eqcont1(ii)");
    assert_eq!(r["criterion"]["k"], 1);
    let l0 = r["resonances"][0]["lambda0"].as_f64().unwrap();
    assert!((l0 - (1.0 - 2f64.sqrt())).abs() < 1e-9);
    assert_eq!(r["predicted_periods"][0]["periods"]["divisors"], serde_json::json!([1]));
    assert_eq!(r["bif_ls"], 0);
}

#[test]
fn analyze_example2() {
    let out = run(&["analyze", example("example2").to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["report"];
    assert_eq!(r["criterion"]["kind"], "eqcont2(ii)");
    assert_eq!(r["criterion"]["k"], 2);
    assert!(r["criterion"]["lambda0"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(r["predicted_periods"][0]["periods"]["divisors"], serde_json::json!([2]));
}

#[test]
fn analyze_is_deterministic_and_text_mode_works() {
    let cfg = example("example3");
    let a = run(&["analyze", cfg.to_str().unwrap(), "--json"]);
    let b = run(&["analyze", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(a.stdout, b.stdout);
    let text = run(&["analyze", cfg.to_str().unwrap()]);
    assert_eq!(text.status.code(), Some(0));
    let s = String::from_utf8(text.stdout).unwrap();
    assert!(s.contains("criterion") && s.contains("Bif_LS       0"), "{s}");
}

#[test]
fn negative_definite_problem_exits_2() {
    let p = scratch("negdef.toml");
    std::fs::write(
        &p,
        "name = \"negdef\"\ndimension = 2\n[interval]\nlower = -1\nupper = 1\n\
         [[matrix]]\nrow = 0\ncol = 0\nterms = [[0, -1]]\n\
         [[matrix]]\nrow = 1\ncol = 1\nterms = [[0, -3]]\n\
         [perturbation]\nkind = \"kepler\"\na = 1\n",
    )
    .unwrap();
    let out = run(&["analyze", p.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let r = &json(&out)["report"];
    assert_eq!(r["criterion"]["kind"], "none");
    assert_eq!(r["bif"]["so2"], 0);
    assert_eq!(r["bif"]["zk"], serde_json::json!({}));
}

#[test]
fn parse_errors_carry_locations() {
    let p = scratch("broken.toml");
    std::fs::write(
        &p,
        "dimension = 2\n[interval]\nlower = -1\nupper = 1\n[[matrix]]\nrow = 0\ncol = 5\nterms = [[0, 1]]\n",
    )
    .unwrap();
    let out = run(&["analyze", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 7") && err.contains("matrix[0].col"), "{err}");
}

#[test]
fn continue_linear_problem_stays_put() {
    let cfg = scratch("linear.toml");
    std::fs::write(
        &cfg,
        "name = \"linear\"\ndimension = 1\n[interval]\nlower = -1\nupper = 1\n\
         [[matrix]]\nrow = 0\ncol = 0\nterms = [[0, 4], [1, 1]]\n",
    )
    .unwrap();
    let csv = scratch("linear.csv");
    let out = run(&[
        "continue",
        cfg.to_str().unwrap(),
        "--resonance",
        "0",
        "--amplitudes",
        "1,2,4",
        "--modes",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    for pt in v["branches"][0]["points"].as_array().unwrap() {
        assert_eq!(pt["lambda_drift"], 0.0);
        assert!(pt["lambda"].as_f64().unwrap().abs() < 1e-9);
        assert_eq!(pt["min_period_divisor"], 2);
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("lambda,amplitude,residual_norm,min_period_divisor,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn continue_example2() {
    let out = run(&[
        "continue",
        example("example2").to_str().unwrap(),
        "--resonance",
        "0",
        "--amplitudes",
        "10,20,40,80,160",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let pts = v["branches"][0]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 5);
    let last = pts[4]["lambda_drift"].as_f64().unwrap().abs();
    assert!(last < 0.05);
    assert!(pts.iter().all(|p| p["min_period_divisor"] == 2));
}

#[test]
fn unknown_resonance_is_an_error() {
    let out = run(&[
        "continue",
        example("example2").to_str().unwrap(),
        "--resonance",
        "0.25",
        "--amplitudes",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no resonance"));
}

#[test]
fn verify_examples_table_and_tamper() {
    let out = run(&["verify-examples", "--skip-continuation"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    let bad = run(&["verify-examples", "--skip-continuation", "--tamper", "jk"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));

    let j = run(&["verify-examples", "--skip-continuation", "--json"]);
    let v = json(&j);
    assert_eq!(v["all_pass"], true);
    assert_eq!(v["format_version"], 1);
}

#[test]
fn thread_cap_is_honoured() {
    let out = bin()
        .env("EQUIDEG_THREADS", "1")
        .args(["analyze", example("example2").to_str().unwrap(), "--json"])
        .output()
        .unwrap();
    let plain = run(&["analyze", example("example2").to_str().unwrap(), "--json"]);
    assert_eq!(out.stdout, plain.stdout);
}
