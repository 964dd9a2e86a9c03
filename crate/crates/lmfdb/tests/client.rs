use proptest::prelude::*;
use scbrauer::arith::{primes_up_to, FieldDesc, FieldElem};
use scbrauer::newform::{load_fixture, NewformData, TwistAuto};
use scbrauer_lmfdb::ingest::{newform_from_payload, parse_integer};
use scbrauer_lmfdb::{Client, ClientConfig, HttpResponse, LmfdbError, Transport};
use serde_json::{json, Value};
use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

fn fixture(label: &str) -> NewformData {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    load_fixture(dir.join(format!("{label}.json"))).unwrap()
}

fn int_coords(x: &FieldElem) -> (i64, i64) {
    let (a, b) = match x {
        FieldElem::Rat(r) => (r.clone(), Default::default()),
        FieldElem::Quad(q) => (q.a.clone(), q.b.clone()),
    };
    assert!(a.is_integer() && b.is_integer(), "fixture coefficients are integral");
    (a.to_integer().try_into().unwrap(), b.to_integer().try_into().unwrap())
}

/// How the fake server writes a + b sqrt(d).
#[derive(Clone, Copy)]
enum Encoding {
    /// Root of x^2 - d, coordinates (a, b).
    Power,
    /// Root nu = 1 + sqrt(d) of x^2 - 2x + (1 - d), coordinates (a - b, b),
    /// with the second basis vector stored as (0 + 2 nu) / 2.
    Shifted,
    /// Sums of c * i^e; only for Q(i).
    Cyclotomic,
}

/// LMFDB-shaped records for a fixture: `an` up to 100 and `ap` up to the
/// largest prime below the fixture bound.
fn records(f: &NewformData, orbit: &[u64], enc: Encoding) -> Value {
    let FieldDesc::Quadratic(d) = f.hecke_field else {
        panic!("quadratic fixtures only")
    };
    let write = |x: &FieldElem| -> Value {
        let (a, b) = int_coords(x);
        match enc {
            Encoding::Power => json!([a, b]),
            Encoding::Shifted => json!([a - b, b.to_string()]),
            Encoding::Cyclotomic => json!([[a, 0], [b, 1]]),
        }
    };
    let an: Vec<Value> = (1..=100).map(|n| write(f.coefficient(n).unwrap())).collect();
    let primes = primes_up_to(f.coeff_bound);
    let ap: Vec<Value> = primes.iter().map(|&p| write(f.coefficient(p).unwrap())).collect();
    let mut hecke = json!({
        "hecke_orbit_code": 4242,
        "an": an,
        "ap": ap,
        "maxp": primes.last().unwrap(),
    });
    let poly = match enc {
        Encoding::Power => json!([-d, 0, 1]),
        Encoding::Shifted => {
            hecke["hecke_ring_numerators"] = json!([[1, 0], [0, 2]]);
            hecke["hecke_ring_denominators"] = json!([1, 2]);
            json!([1 - d, -2, 1])
        }
        Encoding::Cyclotomic => {
            hecke["hecke_ring_cyclotomic_generator"] = json!(4);
            json!([1, 0, 1])
        }
    };
    hecke["field_poly"] = poly.clone();
    let newform = json!({
        "label": f.label,
        "level": f.level,
        "weight": f.weight,
        "dim": 2,
        "field_poly": poly,
        "is_cm": false,
        "conrey_indexes": orbit,
        "hecke_orbit_code": 4242,
        "is_twist_minimal": true,
        "inner_twists": [[1, 1, 1, 1, 1, 1, 1], [17, 1, 1, 2, 1, -1, 1]],
    });
    json!({ "newform": newform, "hecke_nf": hecke })
}

fn assert_matches_fixture(got: &NewformData, want: &NewformData) {
    assert_eq!(got.label, want.label);
    assert_eq!(got.level, want.level);
    assert_eq!(got.weight, want.weight);
    assert_eq!(got.hecke_field, want.hecke_field);
    assert_eq!(got.f_field, want.f_field);
    assert_eq!(got.nebentypus.images(), want.nebentypus.images());
    for (n, a) in &got.coefficients {
        assert_eq!(int_coords(a), int_coords(want.coefficient(*n).unwrap()), "a_{n}");
    }
    let twists = |f: &NewformData| {
        let mut v: Vec<(TwistAuto, u64, bool)> = f
            .inner_twists
            .iter()
            .map(|t| (t.auto, t.chi.conrey().unwrap(), t.ramified))
            .collect();
        v.sort_by_key(|&(a, c, _)| (a == TwistAuto::Conj, c));
        v
    };
    assert_eq!(twists(got), twists(want));
}

#[derive(Default)]
struct FakeServer {
    /// Full records by label.
    forms: HashMap<String, Value>,
    /// Responses served before the routing table, in order.
    script: Mutex<VecDeque<Result<HttpResponse, String>>>,
    calls: AtomicUsize,
    delay: Duration,
}

impl FakeServer {
    fn with(label: &str, payload: Value) -> Self {
        let mut s = FakeServer::default();
        s.forms.insert(label.to_string(), payload);
        s
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn push(&self, r: Result<HttpResponse, String>) {
        self.script.lock().unwrap().push_back(r);
    }
}

fn ok(body: Value) -> HttpResponse {
    HttpResponse {
        status: 200,
        body: body.to_string(),
    }
}

fn status(code: u16) -> HttpResponse {
    HttpResponse {
        status: code,
        body: String::new(),
    }
}

impl Transport for FakeServer {
    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        std::thread::sleep(self.delay);
        if let Some(r) = self.script.lock().unwrap().pop_front() {
            return r;
        }
        let (path, query) = url.split_once('?').ok_or("no query")?;
        let params: HashMap<&str, &str> = query.split('&').filter_map(|kv| kv.split_once('=')).collect();
        if params.get("_format") != Some(&"json") {
            return Ok(status(400));
        }
        if path.ends_with("/api/mf_newforms/") {
            let data: Vec<Value> = self
                .forms
                .get(params["label"])
                .map(|p| p["newform"].clone())
                .into_iter()
                .collect();
            Ok(ok(json!({ "data": data })))
        } else if path.ends_with("/api/mf_hecke_nf/") {
            let code: i64 = params["hecke_orbit_code"].parse().unwrap();
            let data: Vec<Value> = self
                .forms
                .values()
                .filter(|p| p["hecke_nf"]["hecke_orbit_code"] == json!(code))
                .map(|p| p["hecke_nf"].clone())
                .collect();
            Ok(ok(json!({ "data": data })))
        } else {
            Ok(status(404))
        }
    }
}

fn config(dir: &tempfile::TempDir) -> ClientConfig {
    ClientConfig {
        base_url: "https://lmfdb.test".into(),
        cache_dir: dir.path().to_path_buf(),
        offline: false,
        max_retries: 3,
        backoff: Duration::ZERO,
        min_interval: Duration::ZERO,
    }
}

fn client_for(label: &str, payload: Value) -> (Client, Arc<FakeServer>, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let server = Arc::new(FakeServer::with(label, payload));
    (Client::with_transport(config(&dir), server.clone()), server, dir)
}

#[test]
fn records_reproduce_the_fixtures() {
    for (label, orbit) in [("20.3", vec![13u64, 17]), ("36.5", vec![17]), ("24.3", vec![17])] {
        let want = fixture(label);
        let got = newform_from_payload(&records(&want, &orbit, Encoding::Power)).unwrap();
        assert_matches_fixture(&got, &want);
        assert_eq!(got.coeff_bound, *primes_up_to(want.coeff_bound).last().unwrap());
        assert_eq!(got.is_p_minimal(2), Some(true));
    }
}

#[test]
fn nebentypus_is_picked_from_the_orbit_by_the_embedding() {
    let want = fixture("20.3");
    // Listing the conjugate first must not change the choice.
    let got = newform_from_payload(&records(&want, &[17, 13], Encoding::Power)).unwrap();
    assert_eq!(got.nebentypus.conrey(), Some(13));
    let err = newform_from_payload(&records(&want, &[1], Encoding::Power)).unwrap_err();
    assert!(
        matches!(err, LmfdbError::Schema { ref path, .. } if path == "conrey_indexes"),
        "{err}"
    );
}

#[test]
fn all_coefficient_encodings_agree() {
    let want = fixture("20.3");
    let power = newform_from_payload(&records(&want, &[13, 17], Encoding::Power)).unwrap();
    for enc in [Encoding::Shifted, Encoding::Cyclotomic] {
        let got = newform_from_payload(&records(&want, &[13, 17], enc)).unwrap();
        assert_matches_fixture(&got, &power);
    }
    let want = fixture("36.5");
    let got = newform_from_payload(&records(&want, &[17], Encoding::Shifted)).unwrap();
    assert_matches_fixture(&got, &want);
}

#[test]
fn inexact_and_malformed_coefficients_are_rejected() {
    let f = fixture("20.3");
    let mut p = records(&f, &[13, 17], Encoding::Power);
    p["hecke_nf"]["an"][2] = json!([1.0, 1]);
    let err = newform_from_payload(&p).unwrap_err();
    assert!(
        matches!(err, LmfdbError::Schema { ref path, .. } if path == "an[2][0]"),
        "{err}"
    );

    let mut p = records(&f, &[13, 17], Encoding::Power);
    p["hecke_nf"]["ap"][3] = json!([5, 5]);
    let err = newform_from_payload(&p).unwrap_err();
    assert!(
        matches!(err, LmfdbError::Schema { ref path, .. } if path == "ap[3]"),
        "{err}"
    );

    let mut p = records(&f, &[13, 17], Encoding::Power);
    p["hecke_nf"]["ap"].as_array_mut().unwrap().pop();
    assert!(matches!(newform_from_payload(&p), Err(LmfdbError::Schema { .. })));

    let mut p = records(&f, &[13, 17], Encoding::Power);
    p["newform"].as_object_mut().unwrap().remove("level");
    let err = newform_from_payload(&p).unwrap_err();
    assert!(
        matches!(err, LmfdbError::Schema { ref path, .. } if path == "newform.level"),
        "{err}"
    );
}

#[test]
fn unsupported_forms_are_reported_by_the_engine() {
    let f = fixture("20.3");
    let mut p = records(&f, &[13, 17], Encoding::Power);
    p["newform"]["dim"] = json!(4);
    assert!(matches!(
        newform_from_payload(&p),
        Err(LmfdbError::Engine(scbrauer::Error::Unsupported(_)))
    ));
    let mut p = records(&f, &[13, 17], Encoding::Power);
    p["newform"]["is_cm"] = json!(true);
    assert!(matches!(
        newform_from_payload(&p),
        Err(LmfdbError::Engine(scbrauer::Error::CmNotSupported))
    ));
}

#[test]
fn fetch_caches_and_serves_offline() {
    let f = fixture("20.3");
    let (client, server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    let got = client.fetch_newform("20.3").unwrap();
    assert_matches_fixture(&got, &f);
    assert_eq!(server.calls(), 2);
    client.fetch_newform("20.3").unwrap();
    assert_eq!(server.calls(), 2, "second fetch is served from the cache");
    assert!(dir.path().join("20.3.json").exists());

    let offline = Client::with_transport(
        ClientConfig {
            offline: true,
            ..config(&dir)
        },
        server.clone(),
    );
    assert_matches_fixture(&offline.fetch_newform("20.3").unwrap(), &f);
    assert!(matches!(offline.fetch_newform("36.5"), Err(LmfdbError::CacheMiss(_))));
    assert_eq!(server.calls(), 2);

    client.refresh("20.3").unwrap();
    assert_eq!(server.calls(), 4);
}

#[test]
fn retries_transient_failures() {
    let f = fixture("20.3");
    let (client, server, _dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    server.push(Ok(status(503)));
    server.push(Err("connection reset".into()));
    server.push(Ok(status(429)));
    client.fetch_newform("20.3").unwrap();
    assert_eq!(server.calls(), 5);
}

#[test]
fn gives_up_after_the_retry_budget() {
    let f = fixture("20.3");
    let (client, server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    for _ in 0..4 {
        server.push(Ok(status(502)));
    }
    assert!(matches!(client.fetch_newform("20.3"), Err(LmfdbError::Fetch(_))));
    assert_eq!(server.calls(), 4);
    assert!(!dir.path().join("20.3.json").exists());

    server.push(Ok(status(400)));
    assert!(matches!(client.fetch_newform("20.3"), Err(LmfdbError::Fetch(_))));
    assert_eq!(server.calls(), 5, "client errors are not retried");
}

#[test]
fn missing_forms_are_not_found() {
    let f = fixture("20.3");
    let (client, server, _dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    assert!(matches!(client.fetch_newform("21.3"), Err(LmfdbError::NotFound(_))));
    server.push(Ok(status(404)));
    assert!(matches!(client.fetch_newform("20.3"), Err(LmfdbError::NotFound(_))));
    server.push(Ok(HttpResponse {
        status: 200,
        body: "<html>".into(),
    }));
    assert!(matches!(client.fetch_newform("20.3"), Err(LmfdbError::Schema { .. })));
}

#[test]
fn bad_labels_never_reach_the_network_or_the_filesystem() {
    let f = fixture("20.3");
    let (client, server, _dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    for label in ["", "../20.3", "20.3/x", "20.3&level=1", ".hidden", "20 3"] {
        assert!(
            matches!(client.fetch_newform(label), Err(LmfdbError::Schema { .. })),
            "{label:?}"
        );
    }
    assert_eq!(server.calls(), 0);
}

#[test]
fn corrupt_cache_entries_are_errors() {
    let f = fixture("20.3");
    let (client, _server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    std::fs::write(dir.path().join("20.3.json"), "{ not json").unwrap();
    assert!(matches!(client.fetch_newform("20.3"), Err(LmfdbError::Schema { .. })));
}

#[test]
fn stale_schema_versions_are_refetched() {
    let f = fixture("20.3");
    let (client, server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    client.fetch_newform("20.3").unwrap();
    let path = dir.path().join("20.3.json");
    let mut entry: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    entry["schema_version"] = json!(0);
    std::fs::write(&path, entry.to_string()).unwrap();
    client.fetch_newform("20.3").unwrap();
    assert_eq!(server.calls(), 4);
}

#[test]
fn concurrent_fetches_share_one_download() {
    let f = fixture("20.3");
    let dir = tempfile::tempdir().unwrap();
    let mut server = FakeServer::with("20.3", records(&f, &[13, 17], Encoding::Power));
    server.delay = Duration::from_millis(20);
    let server = Arc::new(server);
    let client = Arc::new(Client::with_transport(config(&dir), server.clone()));
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let c = client.clone();
            std::thread::spawn(move || c.fetch_newform("20.3").map(|f| f.level))
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap().unwrap(), 20);
    }
    assert_eq!(server.calls(), 2);
}

#[test]
fn coefficient_ranges() {
    let f = fixture("36.5");
    let (client, _server, _dir) = client_for("36.5", records(&f, &[17], Encoding::Power));
    let c = client.fetch_coefficients("36.5", 50).unwrap();
    assert!(c.complete);
    assert_eq!(c.bound, 50);
    assert_eq!(c.coefficients.len(), 50);
    let c = client.fetch_coefficients("36.5", 10_000).unwrap();
    assert!(!c.complete);
    assert_eq!(c.bound, 499);
    // Beyond an's 100 terms only the primes are stored.
    assert!(c.coefficients.contains_key(&101) && !c.coefficients.contains_key(&102));
    assert_eq!(int_coords(&c.coefficients[&29]), int_coords(f.coefficient(29).unwrap()));
}

#[test]
fn small_coefficient_requests() {
    let f = fixture("20.3");
    let (client, _server, _dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    let c = client.fetch_coefficients("20.3", 20).unwrap();
    assert_eq!(int_coords(&c.coefficients[&17]), (1, -1));
    let c = client.fetch_coefficients("20.3", 1).unwrap();
    assert_eq!(c.coefficients.len(), 1);
    assert_eq!(int_coords(&c.coefficients[&1]), (1, 0));

    let f = fixture("36.5");
    let (client, _server, _dir) = client_for("36.5", records(&f, &[17], Encoding::Power));
    let c = client.fetch_coefficients("36.5", 30).unwrap();
    let sq = c.coefficients[&29].square();
    assert_eq!(sq.as_rational().map(|x| x.to_string()), Some("-421362".to_string()));
}

#[test]
fn unknown_labels_are_not_found() {
    let f = fixture("20.3");
    let (client, _server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    assert!(matches!(client.fetch_newform("xyz"), Err(LmfdbError::NotFound(_))));
    assert!(!dir.path().join("xyz.json").exists());
}

#[test]
fn cache_entries_must_match_their_label() {
    let f = fixture("20.3");
    let (client, _server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    client.fetch_newform("20.3").unwrap();
    let mut entry: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("20.3.json")).unwrap()).unwrap();
    entry["label"] = json!("36.5");
    std::fs::write(dir.path().join("36.5.json"), entry.to_string()).unwrap();
    let offline = Client::with_transport(
        ClientConfig {
            offline: true,
            ..config(&dir)
        },
        Arc::new(FakeServer::default()),
    );
    let err = offline.fetch_newform("36.5").unwrap_err();
    assert!(
        matches!(err, LmfdbError::Schema { ref path, .. } if path == "payload.newform.label"),
        "{err}"
    );
}

#[test]
fn export_replaces_existing_files() {
    let f = fixture("20.3");
    let (client, _server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Power));
    client.fetch_newform("20.3").unwrap();
    let out = dir.path().join("out.json");
    std::fs::write(&out, "old contents that are longer than nothing").unwrap();
    client.export_fixture("20.3", &out).unwrap();
    assert_matches_fixture(&load_fixture(&out).unwrap(), &f);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "out.json" && n != "20.3.json")
        .collect();
    assert!(leftovers.is_empty(), "temporary files left behind: {leftovers:?}");
}

#[test]
fn export_writes_a_loadable_fixture_with_provenance() {
    let f = fixture("20.3");
    let (client, _server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Shifted));
    let out = dir.path().join("export/20.3.json");
    assert!(matches!(
        client.export_fixture("20.3", &out),
        Err(LmfdbError::CacheMiss(_))
    ));
    client.fetch_newform("20.3").unwrap();
    client.export_fixture("20.3", &out).unwrap();
    let loaded = load_fixture(&out).unwrap();
    assert_matches_fixture(&loaded, &f);
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(raw["metadata"]["source"], "lmfdb");
    assert_eq!(raw["metadata"]["lmfdb_label"], "20.3");
    assert!(raw["metadata"]["fetched_at"].as_u64().unwrap() > 0);
}

#[test]
fn exported_fixture_gives_the_same_verdict() {
    use scbrauer::newform::places_above;
    use scbrauer::verdict::{decide, ErrorTermData, InertialDescriptor};
    let f = fixture("20.3");
    let (client, _server, dir) = client_for("20.3", records(&f, &[13, 17], Encoding::Cyclotomic));
    client.fetch_newform("20.3").unwrap();
    let out = dir.path().join("20.3.json.fixture");
    let g = client.export_fixture("20.3", &out).unwrap();
    let desc =
        InertialDescriptor::load(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/20.3.desc.json"))
            .unwrap();
    let v1 = decide(&f, 2, &places_above(&f, 2)[0], &desc, &ErrorTermData::default(), None).unwrap();
    let v2 = decide(&g, 2, &places_above(&g, 2)[0], &desc, &ErrorTermData::default(), None).unwrap();
    assert_eq!(v1.to_json(), v2.to_json());
}

proptest! {
    #[test]
    fn integers_parse_exactly(n in any::<i64>()) {
        prop_assert_eq!(parse_integer(&json!(n), "x").unwrap(), n.into());
        prop_assert_eq!(parse_integer(&json!(n.to_string()), "x").unwrap(), n.into());
        let big = format!("{n}{}", "9".repeat(30));
        prop_assert!(parse_integer(&json!(big), "x").is_ok());
    }

    #[test]
    fn floats_and_junk_are_rejected(x in any::<f64>(), s in "[^0-9-]{1,8}") {
        prop_assert!(parse_integer(&json!(x), "x").is_err());
        prop_assert!(parse_integer(&json!(s), "x").is_err());
    }
}
