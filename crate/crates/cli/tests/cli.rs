use scbrauer::arith::{rat_int, FieldElem};
use scbrauer::newform::{save_fixture, NewformBuilder};
use scbrauer::verdict::Verdict;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scbrauer"))
        .arg("--fixture-dir")
        .arg(dir)
        .args(args)
        .env_remove("SCBRAUER_CACHE_DIR")
        .env_remove("SCBRAUER_OFFLINE")
        .output()
        .expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_in(&fixtures(), args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", stdout(o)))
}

#[test]
fn symbol_example() {
    let o = run(&["symbol", "2", "5", "--p", "5"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "-1"));
    let o = run(&["symbol", "-1", "-1", "--p", "2"]);
    assert_eq!(stdout(&o).trim(), "-1");
    let o = run(&["symbol", "-1", "-1", "--p", "inf"]);
    assert_eq!(stdout(&o).trim(), "-1");
    let o = run(&["symbol", "2", "64", "--p", "2"]);
    assert_eq!(stdout(&o).trim(), "1");
    let o = run(&["symbol", "1/3", "-7/5", "--p", "3", "--json"]);
    let v = json(&o);
    assert_eq!(v["symbol"], 1);
    assert_eq!(v["p"], 3);
}

#[test]
fn verdict_examples() {
    let o = run(&["verdict", "20.3.fixture", "--p", "2", "--desc", "20.3.desc"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "Ramified (Thm: Cor3.6, m_v=1)"));
    let o = run(&["verdict", "36.5", "--p", "2"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "Ramified (Thm: Cor3.6, m_v=1)"));
    let o = run(&["verdict", "24.3", "--p", "2"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "Ramified (Thm: Cor3.8, sign=-1)"));
}

#[test]
fn classify_lists_supercuspidal_primes() {
    let o = run(&["classify", "36.5.fixture"]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).lines().any(|l| l.starts_with("p = 2: supercuspidal")),
        "{}",
        stdout(&o)
    );
    let v = json(&run(&["--json", "classify", "36.5"]));
    let p2 = v["primes"].as_array().unwrap().iter().find(|p| p["p"] == 2).unwrap();
    assert_eq!(p2["supercuspidal"], true);
    assert_eq!(p2["n_p"], 2);
    assert_eq!(p2["places"].as_array().unwrap().len(), 1);
}

#[test]
fn aux_and_slope() {
    let o = run(&["aux", "20.3", "--p", "2", "--count", "3"]);
    assert_eq!(stdout(&o).trim(), "p' = 17, 37, 97");
    let v = json(&run(&["aux", "36.5", "--p", "2", "--json"]));
    assert_eq!(v["primes"], serde_json::json!([29]));
    assert_eq!(v["kind"], "p_prime");
    let v = json(&run(&["slope", "36.5", "--p", "2", "--json"]));
    assert_eq!(v["p_prime"], 29);
    assert_eq!(v["slopes"][0]["m_v"], 1);
    let v = json(&run(&["slope", "20.3", "--p", "2", "--nth", "2", "--json"]));
    assert_eq!(v["p_prime"], 37);
    assert_eq!(v["slopes"][0]["m_v"], 1);
    // p'' is for odd p only.
    let o = run(&["aux", "20.3", "--p", "2", "--kind", "dprime"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wrong case"));
}

#[test]
fn bound_flag_limits_the_search() {
    let o = run(&["--bound", "16", "aux", "20.3", "--p", "2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("search exhausted up to 16"));
    let o = run(&["--bound", "100000", "aux", "20.3", "--p", "2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient data"));
}

#[test]
fn json_verdict_round_trips_and_is_deterministic() {
    for (label, p) in [("20.3", "2"), ("36.5", "2"), ("24.3", "2")] {
        let a = run(&["--json", "verdict", label, "--p", p]);
        let b = run(&["--json", "verdict", label, "--p", p]);
        assert_eq!(code(&a), 0);
        assert_eq!(a.stdout, b.stdout, "byte-identical output");
        let v: Verdict = serde_json::from_str(&stdout(&a)).unwrap();
        assert!(v.is_coherent());
        assert_eq!(serde_json::to_value(&v).unwrap(), json(&a));
        assert!(a.stderr.is_empty());
    }
}

/// A level-24 weight-4 form, supercuspidal at 2, for the exceptional
/// even-weight branch which needs D(-1) from the user.
fn undetermined_setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let f = NewformBuilder::new("syn24", 24, 4)
        .fill(100, |n| {
            FieldElem::Rat(rat_int(if n % 2 == 0 || n % 3 == 0 { 0 } else { 1 }))
        })
        .build()
        .unwrap();
    save_fixture(&f, dir.path().join("syn24.json")).unwrap();
    std::fs::write(
        dir.path().join("syn24.desc.json"),
        r#"{ "kind": "exceptional", "d_kprime": 64 }"#,
    )
    .unwrap();
    dir
}

#[test]
fn undetermined_exits_2_and_names_the_missing_inputs() {
    let dir = undetermined_setup();
    let o = run_in(dir.path(), &["verdict", "syn24", "--p", "2"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(
        text.starts_with("Undetermined (Thm: Thm3.7; missing: d_minus_one)"),
        "{text}"
    );
    assert!(text.contains("missing inputs: d_minus_one"));
    assert!(text.contains("residual: "));

    let o = run_in(dir.path(), &["--json", "verdict", "syn24", "--p", "2"]);
    assert_eq!(code(&o), 2);
    let v: Verdict = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.missing_inputs, vec!["d_minus_one"]);
    assert!(v.residual.is_some());

    std::fs::write(
        dir.path().join("supplied.json"),
        r#"{ "kind": "exceptional", "d_kprime": 64, "d_minus_one": -1 }"#,
    )
    .unwrap();
    let o = run_in(dir.path(), &["verdict", "syn24", "--p", "2", "--desc", "supplied.json"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "Ramified (Thm: Thm3.7, sign=-1)"));
}

#[test]
fn errors_exit_1_with_nothing_on_stdout() {
    for args in [
        &["verdict", "99.9", "--p", "2"][..],
        &["verdict", "20.3", "--p", "4"],
        &["verdict", "20.3", "--p", "2", "--desc", "missing.desc"],
        &["symbol", "0", "5", "--p", "5"],
        &["symbol", "x", "5", "--p", "5"],
        &["symbol", "2", "5", "--p", "6"],
        &["--json", "aux", "20.3", "--p", "2", "--kind", "bogus"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "), "{args:?}");
    }
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["frobnicate"][..],
        &[],
        &["verdict", "20.3"],
        &["aux", "20.3", "--p", "two"],
        &["--nope", "classify", "x"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 64, "{args:?}");
        assert!(o.stdout.is_empty());
    }
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn conductor_violations_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixtures().join("20.3.json"), dir.path().join("20.3.json")).unwrap();
    std::fs::write(
        dir.path().join("20.3.desc.json"),
        r#"{ "kind": "dihedral_unramified", "k_disc": -3, "a_chi": 2, "r": 0, "s": 0 }"#,
    )
    .unwrap();
    let o = run_in(dir.path(), &["verdict", "20.3", "--p", "2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("consistency violation"));
}

// A minimal LMFDB cache entry (level 11, weight 2, rational coefficients).
const CACHE_11: &str = r#"{
  "label": "11.2.a.a", "fetched_at": 1700000000, "schema_version": 1,
  "payload": {
    "newform": { "label": "11.2.a.a", "level": 11, "weight": 2, "dim": 1, "field_poly": [0, 1],
                 "is_cm": false, "conrey_indexes": [1], "hecke_orbit_code": 11 },
    "hecke_nf": { "hecke_orbit_code": 11, "field_poly": [0, 1],
                  "an": [[1], [-2], [-1], [2], [1], [2], [-2], [0], [-2], [-2], [1]],
                  "ap": [[-2], [-1], [1], [-2], [1]], "maxp": 11 }
  }
}"#;

#[test]
fn fetch_works_offline_from_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    std::fs::create_dir(&cache).unwrap();
    let run_fetch = |label: &str| {
        Command::new(env!("CARGO_BIN_EXE_scbrauer"))
            .args(["--fixture-dir"])
            .arg(dir.path())
            .arg("--cache-dir")
            .arg(&cache)
            .args(["fetch", label])
            .env("SCBRAUER_OFFLINE", "1")
            .output()
            .unwrap()
    };
    let o = run_fetch("11.2.a.a");
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no cache entry"));

    std::fs::write(cache.join("11.2.a.a.json"), CACHE_11).unwrap();
    let o = run_fetch("11.2.a.a");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run_in(dir.path(), &["--json", "classify", "11.2.a.a"]);
    let v = json(&o);
    assert_eq!(v["level"], 11);
    assert_eq!(v["primes"][0]["supercuspidal"], false);
}
