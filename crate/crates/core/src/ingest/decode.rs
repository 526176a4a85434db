use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::incident::{slot_column, Incident, COLUMNS, REQUIRED_COLUMNS};
use super::reader::RawRecord;
use super::violation::{Rule, Severity, Violation};
use crate::codebook::{
    decode_coded_numeric, parse_event_id, Code, CodebookTables, CodedCell, Domain, FieldKind,
    TriState, UNKNOWN_COUNTRY,
};

struct CellDecoder<'a> {
    raw: &'a RawRecord,
    tables: &'a CodebookTables,
    violations: Vec<Violation>,
}

impl<'a> CellDecoder<'a> {
    fn cell(&self, column: &str) -> &'a str {
        self.raw.get(column).unwrap_or("")
    }

    fn error(&mut self, rule: Rule, column: &str, message: String) {
        self.violations.push(Violation::new(rule, Severity::Error, &[column], message));
    }

    fn text(&self, column: &str) -> String {
        self.cell(column).to_string()
    }

    fn numeric(&mut self, column: &str, kind: FieldKind) -> CodedCell {
        let raw = self.cell(column);
        if raw.trim().is_empty() {
            return CodedCell::Unknown;
        }
        match decode_coded_numeric(kind, raw) {
            Ok(cell) => cell,
            Err(e) => {
                self.error(Rule::D2, column, e.to_string());
                CodedCell::Unknown
            }
        }
    }

    fn count(&mut self, column: &str) -> CodedCell {
        self.numeric(column, FieldKind::Count)
    }

    fn date_part(&mut self, column: &str, range: std::ops::RangeInclusive<i64>) -> CodedCell {
        let cell = self.numeric(column, FieldKind::DatePart);
        match cell {
            CodedCell::Known(v) if !range.contains(&v) => {
                self.error(Rule::D3, column, format!("{column} {v} outside {range:?}"));
                CodedCell::Unknown
            }
            other => other,
        }
    }

    fn tri(&mut self, column: &str) -> TriState {
        let cell = self.numeric(column, FieldKind::TriState);
        TriState::from_cell(cell).unwrap_or_else(|| {
            self.error(Rule::D2, column, format!("{column} must be 1, 0 or -9, got {cell:?}"));
            TriState::Unknown
        })
    }

    fn raw_code(&mut self, column: &str) -> Option<i64> {
        self.numeric(column, FieldKind::Code).known()
    }

    fn code(&mut self, column: &str, domain: Domain) -> Option<Code> {
        let value = self.raw_code(column)?;
        match Code::try_from(value) {
            Ok(c) if self.tables.contains(domain, c) => Some(c),
            _ => {
                self.error(Rule::D3, column, format!("{column} {value} is not a known code"));
                None
            }
        }
    }

    fn country_code(&mut self, column: &str) -> Option<Code> {
        let value = self.raw_code(column)?;
        match Code::try_from(value) {
            Ok(UNKNOWN_COUNTRY) => None,
            Ok(c) if self.tables.country_name(c).is_some() => Some(c),
            _ => {
                self.error(Rule::D3, column, format!("{column} {value} is not a known country code"));
                None
            }
        }
    }

    fn date(&mut self, column: &str) -> Option<NaiveDate> {
        let raw = self.cell(column).trim();
        if raw.is_empty() {
            return None;
        }
        let parsed = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .or_else(|_| NaiveDate::parse_from_str(raw, "%m/%d/%Y"));
        match parsed {
            Ok(d) => Some(d),
            Err(_) => {
                self.error(Rule::D2, column, format!("{column} {raw:?} is not a date"));
                None
            }
        }
    }
}

/// Decode every cell by its field kind. Never fails: problems become
/// violations and the affected field falls back to unknown/absent.
pub fn decode_record(raw: &RawRecord, tables: &CodebookTables) -> (Incident, Vec<Violation>) {
    let mut d = CellDecoder { raw, tables, violations: Vec::new() };
    for column in REQUIRED_COLUMNS {
        if !raw.has_column(column) {
            d.violations.push(Violation::new(
                Rule::D4,
                Severity::Error,
                &[column],
                format!("required column {column} is missing"),
            ));
        }
    }

    let mut inc = Incident::default();
    let eventid_text = d.cell("eventid").trim().to_string();
    if raw.has_column("eventid") {
        match parse_event_id(&eventid_text) {
            Ok(id) => inc.eventid = Some(id),
            Err(e) => d.error(Rule::D1, "eventid", e.to_string()),
        }
    }

    inc.year = d.date_part("year", 1..=9999);
    inc.month = d.date_part("month", 1..=12);
    inc.day = d.date_part("day", 1..=31);
    inc.approxdate = d.text("approxdate");
    inc.extended = d.tri("extended");
    inc.resolution = d.date("resolution");

    inc.country = d.country_code("country").unwrap_or(UNKNOWN_COUNTRY);
    inc.region = d.raw_code("region").and_then(|v| match Code::try_from(v) {
        Ok(c) if tables.region_name(c).is_some() => Some(c),
        _ => {
            d.error(Rule::D3, "region", format!("region {v} is not a known code"));
            None
        }
    });
    inc.provstate = d.text("provstate");
    inc.city = d.text("city");
    inc.vicinity = d.tri("vicinity");
    inc.location = d.text("location");
    inc.summary = d.text("summary");

    inc.crit1 = d.tri("crit1");
    inc.crit2 = d.tri("crit2");
    inc.crit3 = d.tri("crit3");
    inc.doubtterr = d.tri("doubtterr");
    inc.alternative = d.code("alternative", Domain::Alternative);
    inc.multiple = d.tri("multiple");
    inc.conflict = d.tri("conflict");
    inc.success = d.tri("success");
    inc.suicide = d.tri("suicide");
    for (i, slot) in inc.attack_types.iter_mut().enumerate() {
        *slot = d.code(&format!("attacktype{}", i + 1), Domain::AttackType);
    }

    for (i, t) in inc.targets.iter_mut().enumerate() {
        let n = i + 1;
        t.targtype = d.code(&format!("targtype{n}"), Domain::TargetType);
        t.entity = d.code(&format!("entity{n}"), Domain::EntityType);
        t.corp = d.text(&format!("corp{n}"));
        t.target = d.text(&format!("target{n}"));
        t.natlty = d.country_code(&format!("natlty{n}"));
    }

    for (i, p) in inc.perpetrators.iter_mut().enumerate() {
        p.gname = d.text(&slot_column("gname", i));
        p.gsubname = d.text(&slot_column("gsubname", i));
    }
    inc.motive = d.text("motive");
    inc.guncertain = d.tri("guncertain");
    inc.nperps = d.count("nperps");
    inc.nperpcap = d.count("nperpcap");
    for (i, c) in inc.claims.iter_mut().enumerate() {
        c.claimed = d.tri(&if i == 0 { "claimed".to_string() } else { format!("claim{}", i + 1) });
        c.mode = d.code(&slot_column("claimmode", i), Domain::ClaimMode);
        c.confirmed = d.tri(&slot_column("claimconf", i));
    }
    inc.compclaim = d.tri("compclaim");

    for (i, w) in inc.weapons.iter_mut().enumerate() {
        w.weaptype = d.code(&format!("weaptype{}", i + 1), Domain::WeaponType);
        w.subtype = d.code(&format!("weapsubtype{}", i + 1), Domain::WeaponSubtype);
    }
    inc.weapdetail = d.text("weapdetail");

    inc.nkill = d.count("nkill");
    inc.nkillus = d.count("nkillus");
    inc.nkillter = d.count("nkillter");
    inc.nwound = d.count("nwound");
    inc.nwoundus = d.count("nwoundus");
    inc.nwoundte = d.count("nwoundte");

    inc.property = d.tri("property");
    inc.propextent = d.code("propextent", Domain::PropertyExtent);
    inc.propvalue = d.count("propvalue");
    inc.propcomment = d.text("propcomment");

    inc.ishostkid = d.tri("ishostkid");
    inc.nhostkid = d.count("nhostkid");
    inc.nhostkidus = d.count("nhostkidus");
    inc.nhours = d.count("nhours");
    inc.ndays = d.count("ndays");
    inc.divert = d.text("divert");
    inc.kidhijcountry = d.text("kidhijcountry");
    inc.ransom = d.tri("ransom");
    inc.ransomamt = d.count("ransomamt");
    inc.ransomamtus = d.count("ransomamtus");
    inc.ransompaid = d.count("ransompaid");
    inc.ransompaidus = d.count("ransompaidus");
    inc.ransomnote = d.text("ransomnote");
    inc.hostkidoutcome = d.code("hostkidoutcome", Domain::HostageOutcome);
    inc.nreleased = d.count("nreleased");

    inc.addnotes = d.text("addnotes");
    for (i, s) in inc.scite.iter_mut().enumerate() {
        *s = d.text(&format!("scite{}", i + 1));
    }

    inc.extras = raw
        .iter()
        .filter(|(k, _)| !COLUMNS.contains(k))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect::<BTreeMap<_, _>>();

    let mut violations = d.violations;
    for v in &mut violations {
        v.line = Some(raw.line());
        v.eventid = eventid_text.clone();
    }
    (inc, violations)
}
