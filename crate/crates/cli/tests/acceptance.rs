//! Acceptance gate. One PASS/FAIL line per criterion; exits non-zero if any fail.
//! Tolerances and time limits are pinned below.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use chrono::NaiveDate;
use http_body_util::BodyExt;
use incube::codebook::{
    format_event_id, parse_event_id, CodebookTables, CodedCell, CountryValidity, Domain, EventId,
};
use incube::cube::{aggregate, build_facts, CellQuery, CellResult, FactTable, GroupBy, Snapshot, SnapshotError};
use incube::ingest::{distribute_casualties, generate_synthetic, GeneratorProfile, Incident};
use incube::mining::{mine, mine_sequence_db, robust_z_scores, score_outliers, OutlierMethod, Transaction};
use incube_service::{answer_query, router, AppState};
use oracle::{close, OracleCells, Seq, Triple, HIERARCHIES, MEASURES};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tower::ServiceExt;

const EVENT_ID_LIMIT: Duration = Duration::from_secs(1);
const CODE_TABLE_LIMIT: Duration = Duration::from_secs(1);
const AGGREGATION_LIMIT: Duration = Duration::from_secs(30);
const APRIORI_LIMIT: Duration = Duration::from_secs(60);
const RULE_REL_TOL: f64 = 1e-12;
const OUTLIER_SCORE: f64 = 25.63;
const OUTLIER_TOL: f64 = 0.01;
const TRANSLATION_TOL: f64 = 1e-9;
const CORPUS_SIZE: usize = 10_000;
const CORPUS_SEED: u64 = 20_240_101;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn tables() -> &'static CodebookTables {
    CodebookTables::bundled()
}

fn within(started: Instant, limit: Duration) -> Outcome {
    let elapsed = started.elapsed();
    ensure!(elapsed < limit, "took {elapsed:?}, limit {limit:?}");
    Ok(format!("{elapsed:.2?}"))
}

fn event_id_law() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let year = rng.random_range(1970..=2100);
        let month = rng.random_range(1..=12);
        let first = NaiveDate::from_ymd_opt(year.into(), month.into(), 1).unwrap();
        let next = if month == 12 {
            NaiveDate::from_ymd_opt(i32::from(year) + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(year.into(), u32::from(month) + 1, 1)
        }
        .unwrap();
        let days = (next - first).num_days() as u8;
        let id = EventId::new(year, month, rng.random_range(1..=days), rng.random_range(0..=99))
            .map_err(|e| e.to_string())?;
        let text = format_event_id(&id);
        ensure!(text.len() == 12 && text.bytes().all(|b| b.is_ascii_digit()), "bad form {text}");
        ensure!(&text[8..10] == "00", "digits 9-10 of {text}");
        let back = parse_event_id(&text).map_err(|e| e.to_string())?;
        ensure!(back == id, "{text} reparsed as {back:?}");
        ensure!(format_event_id(&back) == text, "{text} reformatted differently");
    }
    for (text, seq) in [("199307250001", 1), ("199307250002", 2)] {
        let id = parse_event_id(text).map_err(|e| e.to_string())?;
        ensure!(id.date() == NaiveDate::from_ymd_opt(1993, 7, 25).unwrap(), "{text} date {}", id.date());
        ensure!(id.sequence() == seq, "{text} sequence {}", id.sequence());
    }
    within(started, EVENT_ID_LIMIT)
}

fn code_tables() -> Outcome {
    let started = Instant::now();
    let t = tables();
    let region_named = |country: &str| {
        let code = t.country_by_name(country).ok_or(format!("no country {country}"))?;
        let region = t.region_of_country(code).map_err(|e| e.to_string())?;
        Ok::<_, String>(t.region_name(region).unwrap_or_default().to_string())
    };
    ensure!(region_named("India")? == "South Asia", "India");
    ensure!(region_named("United States")? == "North America", "United States");
    let mut regions = 0;
    for (region, _) in t.regions() {
        regions += 1;
        let members = t.region_members(region).ok_or(format!("region {region} has no member list"))?;
        ensure!(!members.is_empty(), "region {region} is empty");
        for &c in members {
            ensure!(t.country_name(c).is_some(), "member {c} of region {region} unresolved");
            ensure!(t.region_of_country(c).ok() == Some(region), "member {c} maps elsewhere");
        }
    }
    ensure!(regions == 13, "{regions} regions");
    let subtypes: Vec<_> = t.domain(Domain::WeaponSubtype).keys().copied().collect();
    ensure!(subtypes.len() == 26, "{} weapon subtypes", subtypes.len());
    for s in subtypes {
        let parent = t.weapon_subtype_parent(s).map_err(|e| e.to_string())?;
        ensure!([1, 2, 5, 6, 8, 9].contains(&parent), "subtype {s} under type {parent}");
    }
    within(started, CODE_TABLE_LIMIT)
}

fn watersheds() -> Outcome {
    let t = tables();
    let code = |name: &str| t.country_by_name(name).ok_or(format!("no country {name}"));
    let at = |y, m, d| NaiveDate::from_ymd_opt(y, m, d).unwrap();
    let check = |country: &str, date: NaiveDate| t.country_validity_at_date(code(country)?, date).map_err(|e| e.to_string());
    let germany = code("Germany")?;
    ensure!(check("West Germany (FRG)", at(1989, 6, 1))? == CountryValidity::Valid, "West Germany 1989");
    let verdict = check("West Germany (FRG)", at(1991, 6, 1))?;
    ensure!(verdict == CountryValidity::Anachronism { suggested: Some(germany) }, "West Germany 1991: {verdict:?}");
    let verdict = check("Eritrea", at(1990, 6, 1))?;
    ensure!(matches!(verdict, CountryValidity::Anachronism { .. }), "Eritrea 1990: {verdict:?}");
    Ok("exact".into())
}

fn result_cells(result: &CellResult) -> OracleCells {
    result
        .cells
        .iter()
        .map(|c| (c.path.clone(), c.values.iter().map(|(m, v)| (m.clone(), (v.sum, v.known, v.unknown) as Triple)).collect()))
        .collect()
}

struct Corpus {
    incidents: Vec<Incident>,
    table: FactTable,
}

fn corpus() -> Corpus {
    let incidents = generate_synthetic(CORPUS_SEED, CORPUS_SIZE, &GeneratorProfile::default(), tables()).unwrap();
    let table = build_facts(&incidents, tables()).unwrap();
    Corpus { incidents, table }
}

fn oracle_aggregation(c: &Corpus) -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let oq = oracle::random_query(&mut rng, &c.incidents, tables());
        let q: CellQuery = serde_json::from_value(oq.to_json()).map_err(|e| e.to_string())?;
        let result = aggregate(&c.table, &q).map_err(|e| format!("query {i}: {e}"))?;
        let (expected, total) = oracle::scan(&c.incidents, &oq, tables());
        ensure!(result_cells(&result) == expected, "query {i} cells differ: {}", oq.to_json());
        ensure!(result.total == total, "query {i} total {} vs {total}", result.total);
    }
    within(started, AGGREGATION_LIMIT)
}

fn rollup_additivity(c: &Corpus) -> Outcome {
    let measures: Vec<String> = MEASURES.iter().map(|m| m.to_string()).collect();
    let grouped = |depth| {
        let mut q = CellQuery { measures: measures.clone(), ..CellQuery::default() };
        if depth > 0 {
            q.group_by.push(GroupBy { hierarchy: String::new(), depth });
        }
        q
    };
    let mut checked = 0;
    for &(hierarchy, max) in HIERARCHIES {
        for depth in 0..max {
            let mut parent_q = grouped(depth);
            let mut child_q = grouped(depth + 1);
            for q in [&mut parent_q, &mut child_q] {
                if let Some(g) = q.group_by.first_mut() {
                    g.hierarchy = hierarchy.to_string();
                }
            }
            let parents = result_cells(&aggregate(&c.table, &parent_q).map_err(|e| e.to_string())?);
            let children = result_cells(&aggregate(&c.table, &child_q).map_err(|e| e.to_string())?);
            let mut rolled: OracleCells = BTreeMap::new();
            for (path, values) in children {
                let cell = rolled.entry(path[..depth].to_vec()).or_default();
                for (m, (s, k, u)) in values {
                    let e = cell.entry(m).or_insert((0, 0, 0));
                    *e = (e.0 + s, e.1 + k, e.2 + u);
                }
            }
            ensure!(rolled == parents, "{hierarchy} depth {depth} to {}", depth + 1);
            checked += 1;
        }
    }
    Ok(format!("{checked} parent/child level pairs"))
}

fn apriori_oracle() -> Outcome {
    let started = Instant::now();
    let items = ["a", "b", "c", "d", "e", "f"];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut corpora = 0;
    for _ in 0..20 {
        let min_support = f64::from(rng.random_range(1..=20u32)) / 20.0;
        let min_confidence = f64::from(rng.random_range(1..=20u32)) / 20.0;
        for _ in 0..50 {
            let n = rng.random_range(0..=8);
            let txs: Vec<BTreeSet<String>> = (0..n)
                .map(|_| items.iter().filter(|_| rng.random_bool(0.5)).map(|s| s.to_string()).collect())
                .collect();
            let wrapped: Vec<Transaction> =
                txs.iter().enumerate().map(|(i, s)| Transaction { id: i.to_string(), items: s.clone() }).collect();
            let mined = mine(&wrapped, min_support, min_confidence).map_err(|e| e.to_string())?;
            let (frequent, rules) = oracle::enumerate_rules(&txs, min_support, min_confidence);
            let got: BTreeMap<Vec<String>, u64> = mined.itemsets.iter().map(|i| (i.items.clone(), i.count)).collect();
            ensure!(got == frequent, "itemsets differ at ({min_support}, {min_confidence}) on {txs:?}");
            ensure!(mined.rules.len() == rules.len(), "rule count at ({min_support}, {min_confidence}) on {txs:?}");
            for r in &mined.rules {
                let key = (r.antecedent.clone(), r.consequent.clone());
                let &(s, conf, lift) = rules.get(&key).ok_or(format!("extra rule {key:?}"))?;
                ensure!(
                    close(r.support, s, RULE_REL_TOL) && close(r.confidence, conf, RULE_REL_TOL) && close(r.lift, lift, RULE_REL_TOL),
                    "rule {key:?} metrics"
                );
            }
            corpora += 1;
        }
    }
    let elapsed = within(started, APRIORI_LIMIT)?;
    Ok(format!("20 threshold pairs x 50 corpora ({corpora}), {elapsed}"))
}

fn sequence_oracle() -> Outcome {
    let items = ["bomb", "assassin", "kidnap"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..500 {
        let entities = rng.random_range(0..=5);
        let db: Vec<Seq> = (0..entities)
            .map(|_| {
                let steps = rng.random_range(0..=4);
                (0..steps)
                    .map(|_| {
                        let mut e: BTreeSet<String> = items.iter().filter(|_| rng.random_bool(0.4)).map(|s| s.to_string()).collect();
                        if e.is_empty() {
                            e.insert(items.choose(&mut rng).unwrap().to_string());
                        }
                        e
                    })
                    .collect()
            })
            .collect();
        let min_support = rng.random_range(1..=3);
        let mined = mine_sequence_db(&db, min_support, None).map_err(|e| e.to_string())?;
        let got: BTreeMap<Seq, u64> = mined
            .iter()
            .map(|p| (p.elements.iter().map(|e| e.iter().cloned().collect()).collect(), p.support))
            .collect();
        ensure!(got.len() == mined.len(), "round {round}: duplicate patterns");
        ensure!(got == oracle::brute_force_sequences(&db, min_support), "round {round}: {db:?} at {min_support}");
    }
    Ok("500 random corpora, exact".into())
}

fn outliers() -> Outcome {
    let scores = robust_z_scores(&[7.0; 9]).map_err(|e| e.to_string())?;
    ensure!(scores.iter().all(|&s| s == 0.0), "constant series scored {scores:?}");

    let series: Vec<(Vec<String>, f64)> =
        [10.0, 12.0, 11.0, 13.0, 50.0].iter().enumerate().map(|(i, &v)| (vec![i.to_string()], v)).collect();
    let reports = score_outliers(&series, "value", 3.5, OutlierMethod::RobustZ).map_err(|e| e.to_string())?;
    let flagged: Vec<f64> = reports.iter().filter(|r| r.flagged).map(|r| r.value).collect();
    ensure!(flagged == [50.0], "flagged {flagged:?}");
    // median 12, |deviations| 2,0,1,1,38 so MAD 1; 38 / 1.4826
    let hand = 38.0 / 1.4826;
    ensure!((hand - OUTLIER_SCORE).abs() <= OUTLIER_TOL, "hand oracle {hand}");
    let score = reports[4].score;
    ensure!((score - OUTLIER_SCORE).abs() <= OUTLIER_TOL, "score {score}");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..100 {
        let n = rng.random_range(3..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1000.0..1000.0)).collect();
        let shift = rng.random_range(-1e4..1e4);
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let a = robust_z_scores(&xs).map_err(|e| e.to_string())?;
        let b = robust_z_scores(&shifted).map_err(|e| e.to_string())?;
        for (x, y) in a.iter().zip(&b) {
            ensure!((x - y).abs() <= TRANSLATION_TOL * x.abs().max(1.0), "series {i}: {x} vs {y}");
        }
    }
    Ok(format!("score {score:.4}, 100 translated series"))
}

fn casualties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let total: i64 = rng.random_range(0..100_000);
        let n = rng.random_range(1..=60);
        let out = distribute_casualties(&vec![(); n], CodedCell::Known(total)).map_err(|e| e.to_string())?;
        let values: Vec<i64> = out.iter().map(|c| c.known().unwrap_or(i64::MIN)).collect();
        ensure!(values.iter().sum::<i64>() == total, "({total}, {n}) sums to {}", values.iter().sum::<i64>());
        let (lo, hi) = (values.iter().min().unwrap(), values.iter().max().unwrap());
        ensure!(hi - lo <= 1, "({total}, {n}) spread {lo}..{hi}");
    }
    let four = distribute_casualties(&[(); 4], CodedCell::Known(10)).map_err(|e| e.to_string())?;
    ensure!(four == [3, 3, 2, 2].map(CodedCell::Known), "10 over 4 gave {four:?}");
    Ok("1000 pairs".into())
}

fn reseal(mut bytes: Vec<u8>) -> Vec<u8> {
    let body = bytes.len() - 32;
    let digest = Sha256::digest(&bytes[..body]);
    bytes[body..].copy_from_slice(&digest);
    bytes
}

fn snapshot_roundtrip(c: &Corpus) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("cube.snap");
    let snapshot = Snapshot::build(c.incidents.clone(), tables()).map_err(|e| e.to_string())?;
    snapshot.save(&path).map_err(|e| e.to_string())?;
    let back = Snapshot::load(&path, tables()).map_err(|e| e.to_string())?;
    ensure!(back == snapshot, "loaded snapshot differs");
    ensure!(back.table.schema() == snapshot.table.schema(), "schema differs");

    let mut bytes = snapshot.to_bytes();
    bytes[8..12].copy_from_slice(&2u32.to_le_bytes());
    let err = Snapshot::from_bytes(&reseal(bytes), tables()).err().ok_or("format version 2 accepted")?;
    ensure!(matches!(err, SnapshotError::UnsupportedFormat(2)) && err.is_version_mismatch(), "format tag: {err}");

    let source = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/codebook");
    let other = dir.path().join("codebook");
    std::fs::create_dir(&other).map_err(|e| e.to_string())?;
    for entry in std::fs::read_dir(source).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        std::fs::copy(entry.path(), other.join(entry.file_name())).map_err(|e| e.to_string())?;
    }
    std::fs::write(other.join("VERSION"), "some-other-codebook\n").map_err(|e| e.to_string())?;
    let other_tables = CodebookTables::load_dir(&other).map_err(|e| e.to_string())?;
    let err = Snapshot::load(&path, &other_tables).err().ok_or("codebook mismatch accepted")?;
    ensure!(matches!(err, SnapshotError::CodebookMismatch { .. }) && err.is_version_mismatch(), "codebook tag: {err}");
    Ok(format!("{} facts", back.table.rows()))
}

fn service_equivalence(c: &Corpus) -> Outcome {
    let snapshot = Snapshot::build(c.incidents.clone(), tables()).map_err(|e| e.to_string())?;
    let state = AppState::new(tables(), Some(snapshot.clone()));
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..50 {
        let oq = oracle::random_query(&mut rng, &c.incidents, tables());
        let body = oq.to_json().to_string();
        let request = Request::builder().method("POST").uri("/query").body(Body::from(body.clone())).unwrap();
        let (status, bytes) = runtime.block_on(async {
            let response = router(state.clone()).oneshot(request).await.unwrap();
            let status = response.status();
            (status, response.into_body().collect().await.unwrap().to_bytes())
        });
        ensure!(status == StatusCode::OK, "request {i} got {status}: {body}");
        let q: CellQuery = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        let expected = serde_json::to_vec(&answer_query(&snapshot, &q).map_err(|e| e.to_string())?).unwrap();
        ensure!(bytes.as_ref() == expected.as_slice(), "request {i} bytes differ: {body}");
    }
    Ok("50 requests byte-identical".into())
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, outcome: std::thread::Result<Outcome>| {
        let line = match outcome {
            Ok(Ok(detail)) => format!("PASS  {name}  ({detail})"),
            Ok(Err(why)) => format!("FAIL  {name}  ({why})"),
            Err(_) => format!("FAIL  {name}  (panicked)"),
        };
        failed += usize::from(line.starts_with("FAIL"));
        println!("{line}");
    };
    let guard = |f: &dyn Fn() -> Outcome| panic::catch_unwind(AssertUnwindSafe(f));

    report("event-id law", guard(&event_id_law));
    report("code-table fidelity", guard(&code_tables));
    report("watershed checks", guard(&watersheds));
    let c = corpus();
    report("oracle aggregation", guard(&|| oracle_aggregation(&c)));
    report("roll-up additivity", guard(&|| rollup_additivity(&c)));
    report("apriori oracle", guard(&apriori_oracle));
    report("sequence oracle", guard(&sequence_oracle));
    report("outlier checks", guard(&outliers));
    report("casualty distribution", guard(&casualties));
    report("snapshot roundtrip", guard(&|| snapshot_roundtrip(&c)));
    report("service equivalence", guard(&|| service_equivalence(&c)));

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
