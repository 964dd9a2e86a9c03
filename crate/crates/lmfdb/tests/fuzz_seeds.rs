//! Replays the `lmfdb_payload` fuzz corpus, then perturbs the parsed seeds
//! leaf by leaf to check that ingestion fails cleanly instead of panicking.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use scbrauer::newform::{from_json_str, to_json_string};
use scbrauer_lmfdb::ingest::newform_from_payload;
use serde_json::{json, Value};
use std::path::PathBuf;

fn seeds() -> Vec<(String, Value)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/lmfdb_payload");
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if let Ok(v) = serde_json::from_slice::<Value>(&std::fs::read(&path).unwrap()) {
            out.push((path.file_name().unwrap().to_string_lossy().into_owned(), v));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn prop(v: &Value) -> bool {
    match newform_from_payload(v) {
        Ok(f) => {
            f.validate().unwrap();
            assert_eq!(from_json_str(&to_json_string(&f)).unwrap(), f);
            true
        }
        Err(_) => false,
    }
}

#[test]
fn lmfdb_payload() {
    let ok: Vec<String> = seeds().into_iter().filter(|(_, v)| prop(v)).map(|(n, _)| n).collect();
    assert_eq!(ok, ["11.2.a.a.json", "20.3.cyclotomic.json", "20.3.shifted.json"]);
}

fn count_leaves(v: &Value) -> usize {
    match v {
        Value::Array(a) => a.iter().map(count_leaves).sum(),
        Value::Object(m) => m.values().map(count_leaves).sum(),
        _ => 1,
    }
}

/// The `i`-th leaf in traversal order; `i` is decremented as leaves are passed.
fn nth_leaf<'a>(v: &'a mut Value, i: &mut usize) -> Option<&'a mut Value> {
    match v {
        Value::Array(a) => a.iter_mut().find_map(|x| nth_leaf(x, i)),
        Value::Object(m) => m.values_mut().find_map(|x| nth_leaf(x, i)),
        leaf if *i == 0 => Some(leaf),
        _ => {
            *i -= 1;
            None
        }
    }
}

fn replacement(rng: &mut StdRng) -> Value {
    match rng.gen_range(0..8) {
        0 => json!(0),
        1 => json!(-1),
        2 => json!(rng.gen_range(-1000i64..1000)),
        3 => json!(i64::MAX),
        4 => json!("123456789012345678901234567890"),
        5 => json!(1.5),
        6 => Value::Null,
        _ => json!([]),
    }
}

#[test]
fn perturbed_payloads_never_panic() {
    let mut rng = StdRng::seed_from_u64(0x11fdb);
    for (_, seed) in seeds() {
        for _ in 0..150 {
            let mut v = seed.clone();
            for _ in 0..rng.gen_range(1..3) {
                let mut i = rng.gen_range(0..count_leaves(&v));
                let r = replacement(&mut rng);
                *nth_leaf(&mut v, &mut i).unwrap() = r;
            }
            prop(&v);
        }
    }
}
