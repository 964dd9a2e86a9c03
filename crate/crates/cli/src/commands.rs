use crate::resolve;
use crate::{Command, Global};
use anyhow::{anyhow, bail, Context, Result};
use scbrauer::arith::{factorize, is_prime, parse_rational, Rational};
use scbrauer::auxprimes::{qualifying_primes, AuxKind, AuxPrimeRequest};
use scbrauer::hilbert::{hilbert_symbol, QPlace};
use scbrauer::newform::{is_supercuspidal, load_fixture, local_decompose, places_above, NewformData, Place};
use scbrauer::verdict::{companion_slope, decide, ErrorTermData, InertialDescriptor, Status, Verdict};
use scbrauer_lmfdb::{Client, ClientConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct Report {
    pub text: String,
    pub json: Value,
    pub undetermined: bool,
}

impl Report {
    fn new(text: String, json: Value) -> Self {
        Report {
            text,
            json,
            undetermined: false,
        }
    }
}

/// One prime dividing the level, as printed by `classify`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeClass {
    pub p: u64,
    pub n_p: u32,
    pub n_prime: u64,
    pub c_p: u32,
    pub a_p: Option<String>,
    /// None when a_p is not stored.
    pub supercuspidal: Option<bool>,
    pub places: Vec<Place>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    pub level: u64,
    pub weight: u32,
    pub hecke_field: String,
    pub f_field: String,
    pub primes: Vec<PrimeClass>,
}

pub fn run(g: &Global, cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Fetch { label, refresh, out } => fetch(g, label, *refresh, out.as_deref()),
        Command::Classify { fixture } => classify(g, fixture),
        Command::Aux {
            fixture,
            p,
            kind,
            count,
        } => aux(g, fixture, *p, kind, *count),
        Command::Slope { fixture, p, nth } => slope(g, fixture, *p, *nth),
        Command::Symbol { a, b, p } => symbol(a, b, p),
        Command::Verdict {
            fixture,
            p,
            desc,
            err,
            place,
        } => verdict(g, fixture, *p, desc.as_deref(), err.as_deref(), *place),
    }
}

fn load(g: &Global, name: &str) -> Result<(NewformData, PathBuf)> {
    let path = resolve::file(name, &g.fixture_dir, "fixture")?;
    let f = load_fixture(&path).with_context(|| format!("loading {}", path.display()))?;
    Ok((f, path))
}

fn check_prime(p: u64) -> Result<()> {
    if !is_prime(p) {
        bail!("{p} is not prime");
    }
    Ok(())
}

fn fetch(g: &Global, label: &str, refresh: bool, out: Option<&Path>) -> Result<Report> {
    let mut config = ClientConfig::from_env();
    if let Some(dir) = &g.cache_dir {
        config.cache_dir = dir.clone();
    }
    let client = Client::new(config);
    let entry = if refresh {
        client.refresh(label)?
    } else {
        client.entry(label)?
    };
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| g.fixture_dir.join(format!("{label}.json")));
    let f = client.export_fixture(label, &path)?;
    let text = format!(
        "{label}: level {}, weight {}, Hecke field {}; wrote {}",
        f.level,
        f.weight,
        f.hecke_field,
        path.display()
    );
    let json = json!({ "label": label, "path": path.display().to_string(), "fetched_at": entry.fetched_at });
    Ok(Report::new(text, json))
}

fn classify(g: &Global, name: &str) -> Result<Report> {
    let (f, _) = load(g, name)?;
    let mut primes = Vec::new();
    for (p, _) in factorize(f.level) {
        let local = local_decompose(&f, p);
        let supercuspidal = is_supercuspidal(&local).ok();
        primes.push(PrimeClass {
            p,
            n_p: local.n_p,
            n_prime: local.n_prime,
            c_p: local.c_p,
            a_p: local.a_p.as_ref().map(ToString::to_string),
            supercuspidal,
            places: if supercuspidal == Some(true) {
                places_above(&f, p)
            } else {
                Vec::new()
            },
        });
    }
    let c = Classification {
        label: f.label.clone(),
        level: f.level,
        weight: f.weight,
        hecke_field: f.hecke_field.to_string(),
        f_field: f.f_field.to_string(),
        primes,
    };
    let mut text = format!(
        "{} (level {}, weight {}, E = {}, F = {})\n",
        c.label, c.level, c.weight, c.hecke_field, c.f_field
    );
    for pc in &c.primes {
        let status = match pc.supercuspidal {
            Some(true) => "supercuspidal",
            Some(false) => "not supercuspidal",
            None => "unknown (a_p not stored)",
        };
        let _ = writeln!(
            text,
            "p = {}: {status} (N_p={}, C_p={}, a_p={})",
            pc.p,
            pc.n_p,
            pc.c_p,
            pc.a_p.as_deref().unwrap_or("?")
        );
        for v in &pc.places {
            let _ = writeln!(text, "  {v}");
        }
    }
    Ok(Report::new(text, serde_json::to_value(&c)?))
}

fn aux(g: &Global, name: &str, p: u64, kind: &str, count: usize) -> Result<Report> {
    check_prime(p)?;
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let (f, _) = load(g, name)?;
    let kind: AuxKind = kind.parse()?;
    let local = local_decompose(&f, p);
    let bound = g.bound.unwrap_or(f.coeff_bound);
    let req = AuxPrimeRequest::new(&f, &local, kind, bound)?;
    let found = qualifying_primes(&f, &req)?;
    if found.is_empty() {
        return Err(scbrauer::Error::SearchExhausted { bound }.into());
    }
    let primes: Vec<u64> = found.into_iter().take(count).collect();
    let list: Vec<String> = primes.iter().map(u64::to_string).collect();
    let text = format!("{kind} = {}", list.join(", "));
    let json = json!({ "label": f.label, "p": p, "kind": kind.key(), "bound": bound, "primes": primes });
    Ok(Report::new(text, json))
}

fn slope(g: &Global, name: &str, p: u64, nth: usize) -> Result<Report> {
    check_prime(p)?;
    if nth == 0 {
        bail!("--nth is 1-based");
    }
    let (f, _) = load(g, name)?;
    let local = local_decompose(&f, p);
    let bound = g.bound.unwrap_or(f.coeff_bound);
    let req = AuxPrimeRequest::new(&f, &local, AuxKind::PPrime, bound)?;
    let q = *qualifying_primes(&f, &req)?
        .get(nth - 1)
        .ok_or(scbrauer::Error::SearchExhausted { bound })?;
    let mut text = String::new();
    let mut rows = Vec::new();
    for place in places_above(&f, p) {
        let s = companion_slope(&f, &place, q)?;
        let _ = writeln!(
            text,
            "m_v = {} at {place} (p' = {q}, a_p'^2 eps(p')^-1 = {})",
            s.m_v, s.value
        );
        rows.push(json!({ "place": place, "m_v": s.m_v, "parity": s.parity() }));
    }
    let value = companion_slope(&f, &places_above(&f, p)[0], q)?.value.to_string();
    let json = json!({ "label": f.label, "p": p, "p_prime": q, "value": value, "slopes": rows });
    Ok(Report::new(text, json))
}

fn rational_arg(s: &str, what: &str) -> Result<Rational> {
    let x = parse_rational(s).map_err(|_| anyhow!("{what}: {s:?} is not a rational number"))?;
    if x == Rational::from_integer(0.into()) {
        bail!("{what} must be nonzero");
    }
    Ok(x)
}

fn symbol(a: &str, b: &str, p: &str) -> Result<Report> {
    let x = rational_arg(a, "a")?;
    let y = rational_arg(b, "b")?;
    let place = match p {
        "inf" | "infinity" | "oo" => QPlace::Infinity,
        _ => {
            let q: u64 = p
                .parse()
                .map_err(|_| anyhow!("--p: {p:?} is neither a prime nor inf"))?;
            check_prime(q)?;
            QPlace::Finite(q)
        }
    };
    let s = hilbert_symbol(&x, &y, place);
    let p_json = match place {
        QPlace::Finite(q) => json!(q),
        QPlace::Infinity => json!("inf"),
    };
    Ok(Report::new(
        s.to_string(),
        json!({ "a": a, "b": b, "p": p_json, "symbol": s }),
    ))
}

/// The sidecar next to the fixture file, else in the fixture directory.
fn find_sidecar(g: &Global, fixture: &Path, label: &str, suffix: &str) -> Option<PathBuf> {
    fixture
        .parent()
        .and_then(|d| resolve::sidecar(d, label, suffix))
        .or_else(|| resolve::sidecar(&g.fixture_dir, label, suffix))
}

fn verdict(
    g: &Global,
    name: &str,
    p: u64,
    desc: Option<&str>,
    err: Option<&str>,
    place: Option<usize>,
) -> Result<Report> {
    check_prime(p)?;
    let (f, path) = load(g, name)?;
    let desc_path = match desc {
        Some(d) => resolve::file(d, &g.fixture_dir, "descriptor")?,
        None => find_sidecar(g, &path, &f.label, "desc")
            .ok_or_else(|| anyhow!("no inertial descriptor: pass --desc or add {}.desc.json", f.label))?,
    };
    let descriptor =
        InertialDescriptor::load(&desc_path).with_context(|| format!("loading {}", desc_path.display()))?;
    let err_path = match err {
        Some(e) => Some(resolve::file(e, &g.fixture_dir, "error-term")?),
        None => find_sidecar(g, &path, &f.label, "err"),
    };
    let terms = match &err_path {
        Some(p) => ErrorTermData::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ErrorTermData::default(),
    };
    let places = places_above(&f, p);
    let chosen: Vec<Place> = match place {
        Some(i) => vec![*places
            .get(i)
            .ok_or_else(|| anyhow!("only {} place(s) above {p}", places.len()))?],
        None => places,
    };
    let verdicts: Vec<Verdict> = chosen
        .iter()
        .map(|v| decide(&f, p, v, &descriptor, &terms, g.bound))
        .collect::<scbrauer::Result<_>>()?;

    let many = verdicts.len() > 1;
    let mut text = String::new();
    for v in &verdicts {
        if many {
            let _ = write!(text, "{}: ", v.place);
        }
        let _ = writeln!(text, "{v}");
        if v.status == Status::Undetermined {
            let _ = writeln!(text, "  missing inputs: {}", v.missing_inputs.join(", "));
            if let Some(r) = &v.residual {
                let _ = writeln!(text, "  residual: {r}");
            }
        }
    }
    let json = if many {
        serde_json::to_value(&verdicts)?
    } else {
        serde_json::to_value(&verdicts[0])?
    };
    Ok(Report {
        text,
        json,
        undetermined: verdicts.iter().any(|v| v.status == Status::Undetermined),
    })
}
