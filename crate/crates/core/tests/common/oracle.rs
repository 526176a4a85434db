//! Naive reference implementations used to check the library. Everything
//! here works straight off `Incident` fields and brute-force enumeration.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use incube::codebook::{CodebookTables, Domain, TriState};
use incube::ingest::Incident;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const UNKNOWN: &str = "Unknown";

/// (name, depth) of every hierarchy the cube exposes.
pub const HIERARCHIES: &[(&str, usize)] = &[
    ("time", 3),
    ("space", 4),
    ("attack", 1),
    ("target", 1),
    ("weapon", 1),
    ("perpetrator", 1),
    ("success", 1),
    ("suicide", 1),
    ("claimmode", 1),
    ("hostkidoutcome", 1),
    ("propextent", 1),
    ("crit1", 1),
    ("crit2", 1),
    ("crit3", 1),
    ("doubtterr", 1),
    ("nhours", 1),
    ("ndays", 1),
];

pub const LEVEL_NAMES: &[(&str, &[&str])] = &[
    ("time", &["year", "month", "day"]),
    ("space", &["region", "country", "provstate", "city"]),
    ("attack", &["attacktype"]),
    ("target", &["targtype"]),
    ("weapon", &["weaptype"]),
    ("perpetrator", &["gname"]),
    ("claimmode", &["claimmode"]),
    ("hostkidoutcome", &["hostkidoutcome"]),
    ("propextent", &["propextent"]),
];

pub fn level_name(dim: &str, level: usize) -> String {
    let name = LEVEL_NAMES.iter().find(|(d, _)| *d == dim).map_or(dim, |(_, l)| l[level]);
    format!("{dim}.{name}")
}

pub const MEASURES: &[&str] = &[
    "incident_count",
    "nkill",
    "nwound",
    "nkillus",
    "nkillter",
    "nwoundus",
    "nwoundte",
    "nperps",
    "nperpcap",
    "propvalue",
    "ransomamt",
    "ransompaid",
    "nhostkid",
    "nreleased",
];

/// `None` means unknown.
pub fn measure_value(inc: &Incident, measure: &str) -> Option<i64> {
    let cell = match measure {
        "incident_count" => return Some(1),
        "nkill" => inc.nkill,
        "nwound" => inc.nwound,
        "nkillus" => inc.nkillus,
        "nkillter" => inc.nkillter,
        "nwoundus" => inc.nwoundus,
        "nwoundte" => inc.nwoundte,
        "nperps" => inc.nperps,
        "nperpcap" => inc.nperpcap,
        "propvalue" => inc.propvalue,
        "ransomamt" => inc.ransomamt,
        "ransompaid" => inc.ransompaid,
        "nhostkid" => inc.nhostkid,
        "nreleased" => inc.nreleased,
        other => panic!("no measure {other}"),
    };
    cell.known()
}

fn coded(tables: &CodebookTables, domain: Domain, code: Option<u16>, unknown: u16) -> Option<String> {
    code.filter(|&c| c != unknown).map(|c| tables.label(domain, c).unwrap().to_string())
}

fn tri(t: TriState) -> Option<String> {
    match t {
        TriState::Yes => Some("Yes".into()),
        TriState::No => Some("No".into()),
        TriState::Unknown => None,
    }
}

fn text(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty() && !s.eq_ignore_ascii_case("unknown")).then(|| s.to_string())
}

/// Member labels of `inc` along hierarchy `dim`, root first, with unknown
/// levels (and everything under them) labelled "Unknown".
pub fn path_labels(inc: &Incident, dim: &str, tables: &CodebookTables) -> Vec<String> {
    let raw: Vec<Option<String>> = match dim {
        "time" => vec![
            inc.year.known().map(|v| v.to_string()),
            inc.month.known().map(|v| v.to_string()),
            inc.day.known().map(|v| v.to_string()),
        ],
        "space" => {
            if inc.country == 0 {
                vec![None; 4]
            } else {
                let region = tables.region_of_country(inc.country).unwrap();
                vec![
                    Some(tables.region_name(region).unwrap().to_string()),
                    Some(tables.country_name(inc.country).unwrap().to_string()),
                    text(&inc.provstate),
                    text(&inc.city),
                ]
            }
        }
        "attack" => vec![coded(tables, Domain::AttackType, inc.attack_types[0], 9)],
        "target" => vec![coded(tables, Domain::TargetType, inc.targets[0].targtype, 20)],
        "weapon" => vec![coded(tables, Domain::WeaponType, inc.weapons[0].weaptype, 13)],
        "perpetrator" => vec![text(&inc.perpetrators[0].gname)],
        "claimmode" => vec![coded(tables, Domain::ClaimMode, inc.claims[0].mode, 10)],
        "hostkidoutcome" => vec![coded(tables, Domain::HostageOutcome, inc.hostkidoutcome, 7)],
        "propextent" => vec![coded(tables, Domain::PropertyExtent, inc.propextent, 4)],
        "success" => vec![tri(inc.success)],
        "suicide" => vec![tri(inc.suicide)],
        "crit1" => vec![tri(inc.crit1)],
        "crit2" => vec![tri(inc.crit2)],
        "crit3" => vec![tri(inc.crit3)],
        "doubtterr" => vec![tri(inc.doubtterr)],
        "nhours" => vec![inc.nhours.known().map(|v| v.to_string())],
        "ndays" => vec![inc.ndays.known().map(|v| v.to_string())],
        other => panic!("no hierarchy {other}"),
    };
    let mut out = Vec::with_capacity(raw.len());
    let mut cut = false;
    for r in raw {
        cut |= r.is_none();
        out.push(if cut { UNKNOWN.to_string() } else { r.unwrap() });
    }
    out
}

/// A query in oracle terms: (hierarchy, depth) axes, (hierarchy, level,
/// allowed labels) filters, measure names.
#[derive(Debug, Clone)]
pub struct OracleQuery {
    pub group_by: Vec<(String, usize)>,
    pub filters: Vec<(String, usize, BTreeSet<String>)>,
    pub measures: Vec<String>,
}

impl OracleQuery {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "group_by": self.group_by.iter().map(|(h, d)| serde_json::json!({"hierarchy": h, "depth": d})).collect::<Vec<_>>(),
            "filters": self.filters.iter().map(|(h, l, m)| serde_json::json!({"dim": level_name(h, *l), "members": m})).collect::<Vec<_>>(),
            "measures": self.measures,
        })
    }
}

pub type Triple = (i64, u64, u64);
pub type OracleCells = BTreeMap<Vec<String>, BTreeMap<String, Triple>>;

/// Linear scan: filter, group, sum.
pub fn scan(incidents: &[Incident], q: &OracleQuery, tables: &CodebookTables) -> (OracleCells, u64) {
    let measures: Vec<String> =
        if q.measures.is_empty() { vec!["incident_count".to_string()] } else { q.measures.clone() };
    let mut cells = OracleCells::new();
    let mut total = 0;
    for inc in incidents {
        let passes = q
            .filters
            .iter()
            .all(|(h, level, allowed)| allowed.contains(&path_labels(inc, h, tables)[*level]));
        if !passes {
            continue;
        }
        total += 1;
        let key: Vec<String> = q
            .group_by
            .iter()
            .flat_map(|(h, depth)| path_labels(inc, h, tables).into_iter().take(*depth))
            .collect();
        let cell = cells.entry(key).or_default();
        for m in &measures {
            let t = cell.entry(m.clone()).or_insert((0, 0, 0));
            match measure_value(inc, m) {
                Some(v) => {
                    t.0 += v;
                    t.1 += 1;
                }
                None => t.2 += 1,
            }
        }
    }
    (cells, total)
}

/// A random query whose filter members are drawn from labels that occur in
/// the corpus, so every filter is valid.
pub fn random_query(rng: &mut impl Rng, incidents: &[Incident], tables: &CodebookTables) -> OracleQuery {
    let mut group_by = Vec::new();
    let mut dims: Vec<&(&str, usize)> = HIERARCHIES.iter().collect();
    for _ in 0..rng.random_range(0..=2) {
        let i = rng.random_range(0..dims.len());
        let (name, depth) = *dims.swap_remove(i);
        group_by.push((name.to_string(), rng.random_range(1..=depth)));
    }
    let mut filters = Vec::new();
    for _ in 0..rng.random_range(0..=2) {
        let &(name, depth) = HIERARCHIES.choose(rng).unwrap();
        let level = rng.random_range(0..depth);
        let members: BTreeSet<String> = (0..rng.random_range(1..=3))
            .map(|_| path_labels(incidents.choose(rng).unwrap(), name, tables)[level].clone())
            .collect();
        filters.push((name.to_string(), level, members));
    }
    let measures = (0..rng.random_range(0..=3)).map(|_| MEASURES.choose(rng).unwrap().to_string()).collect::<BTreeSet<_>>();
    OracleQuery { group_by, filters, measures: measures.into_iter().collect() }
}

/// Every subset of `universe` with its transaction count.
pub fn enumerate_itemsets(transactions: &[BTreeSet<String>]) -> BTreeMap<Vec<String>, u64> {
    let universe: Vec<String> = transactions.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    assert!(universe.len() <= 16, "exhaustive enumeration only for small universes");
    let mut out = BTreeMap::new();
    for mask in 1u32..(1 << universe.len()) {
        let set: Vec<String> =
            universe.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| s.clone()).collect();
        let count = transactions.iter().filter(|t| set.iter().all(|s| t.contains(s))).count() as u64;
        out.insert(set, count);
    }
    out
}

/// (antecedent, consequent) → (support, confidence, lift), by enumeration.
pub type OracleRules = BTreeMap<(Vec<String>, Vec<String>), (f64, f64, f64)>;

pub fn enumerate_rules(
    transactions: &[BTreeSet<String>],
    min_support: f64,
    min_confidence: f64,
) -> (BTreeMap<Vec<String>, u64>, OracleRules) {
    let n = transactions.len() as f64;
    let all = enumerate_itemsets(transactions);
    let frequent: BTreeMap<Vec<String>, u64> =
        all.iter().filter(|(_, &c)| c as f64 / n >= min_support).map(|(s, &c)| (s.clone(), c)).collect();
    let mut rules = OracleRules::new();
    for (set, &count) in frequent.iter().filter(|(s, _)| s.len() >= 2) {
        for mask in 1u32..(1 << set.len()) - 1 {
            let (a, c): (Vec<_>, Vec<_>) = set.iter().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
            let a: Vec<String> = a.into_iter().map(|(_, s)| s.clone()).collect();
            let c: Vec<String> = c.into_iter().map(|(_, s)| s.clone()).collect();
            let confidence = count as f64 / all[&a] as f64;
            if confidence >= min_confidence {
                let support = count as f64 / n;
                let lift = confidence / (all[&c] as f64 / n);
                rules.insert((a, c), (support, confidence, lift));
            }
        }
    }
    (frequent, rules)
}

pub type Seq = Vec<BTreeSet<String>>;

/// Subsequence containment by exhaustive search over element alignments.
pub fn occurs(sequence: &[BTreeSet<String>], pattern: &[BTreeSet<String>]) -> bool {
    match pattern.split_first() {
        None => true,
        Some((head, tail)) => (0..sequence.len())
            .any(|i| head.is_subset(&sequence[i]) && occurs(&sequence[i + 1..], tail)),
    }
}

fn nonempty_subsets(set: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
    let items: Vec<&String> = set.iter().collect();
    (1u32..(1 << items.len()))
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| (*s).clone()).collect())
        .collect()
}

/// Every pattern contained in `sequence`.
fn all_subsequences(sequence: &[BTreeSet<String>]) -> BTreeSet<Seq> {
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << sequence.len()) {
        let chosen: Vec<&BTreeSet<String>> =
            sequence.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, e)| e).collect();
        let mut partial: Vec<Seq> = vec![Vec::new()];
        for element in chosen {
            let subs = nonempty_subsets(element);
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    subs.iter().map(move |s| {
                        let mut q = p.clone();
                        q.push(s.clone());
                        q
                    })
                })
                .collect();
        }
        out.extend(partial);
    }
    out
}

/// Pattern → number of sequences containing it, for patterns meeting
/// `min_support`.
pub fn brute_force_sequences(db: &[Seq], min_support: u64) -> BTreeMap<Seq, u64> {
    let candidates: BTreeSet<Seq> = db.iter().flat_map(|s| all_subsequences(s)).collect();
    candidates
        .into_iter()
        .map(|p| {
            let n = db.iter().filter(|s| occurs(s, &p)).count() as u64;
            (p, n)
        })
        .filter(|&(_, n)| n >= min_support)
        .collect()
}

/// Relative closeness for rule arithmetic.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}
