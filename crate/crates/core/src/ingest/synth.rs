use std::collections::{BTreeSet, HashMap};

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::incident::{ClaimSlot, Incident, PerpetratorSlot, TargetSlot, WeaponSlot};
use super::IngestError;
use crate::codebook::{
    Code, CodebookTables, CodedCell, CountryValidity, Domain, EventId, TriState,
};

/// Knobs for synthetic corpora. Every field has a default, so a profile file
/// only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorProfile {
    pub start_year: u16,
    pub end_year: u16,
    /// Probability that an optional cell is left unknown.
    pub unknown_rate: f64,
    /// Probability that each further slot of a multi-slot group is filled.
    pub multi_slot_rate: f64,
    /// Number of distinct perpetrator group names.
    pub groups: u32,
    /// Restrict locations to these country codes; empty means every country
    /// that belongs to a region.
    pub countries: Vec<Code>,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        Self {
            start_year: 1970,
            end_year: 2017,
            unknown_rate: 0.1,
            multi_slot_rate: 0.15,
            groups: 40,
            countries: Vec::new(),
        }
    }
}

impl GeneratorProfile {
    pub fn validate(&self, tables: &CodebookTables) -> Result<(), IngestError> {
        let bad = |msg: String| Err(IngestError::InvalidProfile(msg));
        let years = EventId::MIN_YEAR..=EventId::MAX_YEAR;
        if !years.contains(&self.start_year) || !years.contains(&self.end_year) {
            return bad(format!("years must lie in {years:?}"));
        }
        if self.start_year > self.end_year {
            return bad("start_year after end_year".into());
        }
        for (name, rate) in [("unknown_rate", self.unknown_rate), ("multi_slot_rate", self.multi_slot_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return bad(format!("{name} {rate} outside [0, 1]"));
            }
        }
        if self.groups == 0 {
            return bad("groups must be at least 1".into());
        }
        for c in &self.countries {
            if tables.region_of_country(*c).is_err() {
                return bad(format!("country {c} has no region"));
            }
        }
        Ok(())
    }
}

const ATTACK_WEIGHTS: [(Code, u32); 9] =
    [(1, 10), (2, 24), (3, 48), (4, 2), (5, 2), (6, 7), (7, 6), (8, 1), (9, 4)];
const WEAPON_WEIGHTS: [(Code, u32); 13] = [
    (1, 1), (2, 2), (3, 1), (4, 1), (5, 32), (6, 50), (7, 1), (8, 6), (9, 3), (10, 1), (11, 1), (12, 1), (13, 8),
];

/// Deterministic synthetic incidents for a `(seed, profile)` pair. Every
/// incident passes validation without Error-severity violations.
pub fn generate_synthetic(
    seed: u64,
    n: usize,
    profile: &GeneratorProfile,
    tables: &CodebookTables,
) -> Result<Vec<Incident>, IngestError> {
    profile.validate(tables)?;
    let first = NaiveDate::from_ymd_opt(profile.start_year.into(), 1, 1).expect("valid year");
    let last = NaiveDate::from_ymd_opt(profile.end_year.into(), 12, 31).expect("valid year");
    let span_days = (last - first).num_days() + 1;
    if n as i64 > span_days * 50 {
        return Err(IngestError::InvalidProfile(format!(
            "{n} incidents do not fit {span_days} days of event ids"
        )));
    }

    let pool: Vec<Code> = if profile.countries.is_empty() {
        tables.countries().map(|(c, _)| c).filter(|c| tables.region_of_country(*c).is_ok()).collect()
    } else {
        profile.countries.clone()
    };
    let usable = pool.iter().any(|c| {
        (profile.start_year..=profile.end_year).any(|y| {
            [(1, 1), (12, 31)].iter().any(|(m, d)| {
                let day = NaiveDate::from_ymd_opt(y.into(), *m, *d).expect("valid date");
                tables.country_validity_at_date(*c, day) == Ok(CountryValidity::Valid)
            })
        })
    });
    if n > 0 && !usable {
        return Err(IngestError::InvalidProfile(
            "no listed country exists during the year range".into(),
        ));
    }
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        profile,
        tables,
        pool,
        first,
        span_days,
        per_day: HashMap::new(),
    };
    Ok((0..n).map(|_| gen.incident()).collect())
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    profile: &'a GeneratorProfile,
    tables: &'a CodebookTables,
    pool: Vec<Code>,
    first: NaiveDate,
    span_days: i64,
    per_day: HashMap<NaiveDate, u8>,
}

impl Generator<'_> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn unknown(&mut self) -> bool {
        self.chance(self.profile.unknown_rate)
    }

    fn another_slot(&mut self) -> bool {
        self.chance(self.profile.multi_slot_rate)
    }

    fn weighted(&mut self, weights: &[(Code, u32)]) -> Code {
        let total: u32 = weights.iter().map(|(_, w)| w).sum();
        let mut pick = self.rng.random_range(0..total);
        for (code, w) in weights {
            if pick < *w {
                return *code;
            }
            pick -= w;
        }
        unreachable!("pick is below the weight total")
    }

    fn tri(&mut self, p_yes: f64) -> TriState {
        if self.unknown() {
            TriState::Unknown
        } else if self.chance(p_yes) {
            TriState::Yes
        } else {
            TriState::No
        }
    }

    /// Heavy-tailed non-negative count, unknown at the profile rate.
    fn count(&mut self, scale: f64) -> CodedCell {
        if self.unknown() {
            return CodedCell::Unknown;
        }
        let u: f64 = self.rng.random();
        CodedCell::Known(((scale + 1.0).powf(u * u) - 1.0).floor() as i64)
    }

    fn domain_code(&mut self, domain: Domain) -> Code {
        let codes: Vec<Code> = self.tables.domain(domain).keys().copied().collect();
        *codes.choose(&mut self.rng).expect("non-empty domain")
    }

    /// Distinct codes for a multi-slot group, filled from slot 1.
    fn slots<const N: usize>(&mut self, mut draw: impl FnMut(&mut Self) -> Code) -> [Option<Code>; N] {
        let mut out = [None; N];
        let mut used = BTreeSet::new();
        for i in 0..N {
            if i > 0 && !self.another_slot() {
                break;
            }
            let code = (0..64).map(|_| draw(self)).find(|c| !used.contains(c));
            match code {
                Some(c) => {
                    used.insert(c);
                    out[i] = Some(c);
                }
                None => break,
            }
        }
        out
    }

    fn date_and_country(&mut self) -> (NaiveDate, u8, Code) {
        loop {
            let date = self.first + Duration::days(self.rng.random_range(0..self.span_days));
            let seq = self.per_day.get(&date).copied().unwrap_or(0);
            if seq > 99 {
                continue;
            }
            for _ in 0..16 {
                let country = *self.pool.choose(&mut self.rng).expect("non-empty pool");
                if self.tables.country_validity_at_date(country, date) == Ok(CountryValidity::Valid) {
                    self.per_day.insert(date, seq + 1);
                    return (date, seq, country);
                }
            }
        }
    }

    fn incident(&mut self) -> Incident {
        let (date, seq, country) = self.date_and_country();
        let eventid = EventId::new(date.year() as u16, date.month() as u8, date.day() as u8, seq)
            .expect("generated dates stay in the event id range");
        let mut inc = Incident {
            eventid: Some(eventid),
            year: CodedCell::Known(date.year().into()),
            month: CodedCell::Known(date.month().into()),
            day: CodedCell::Known(date.day().into()),
            country,
            region: self.tables.region_of_country(country).ok(),
            ..Incident::default()
        };
        if self.unknown() {
            inc.day = CodedCell::Unknown;
            inc.approxdate = format!("{} {}", date.format("%B"), date.year());
            if self.chance(0.5) {
                inc.month = CodedCell::Unknown;
                inc.approxdate = date.year().to_string();
            }
        }

        let country_name = self.tables.country_name(country).unwrap_or_default().to_string();
        if !self.unknown() {
            let province = self.rng.random_range(1..=5);
            inc.provstate = format!("{country_name} Province {province}");
            if !self.unknown() {
                inc.city = format!("City {province}-{}", self.rng.random_range(1..=8));
            }
        }
        inc.vicinity = self.tri(0.1);
        inc.summary = format!("Synthetic incident {eventid}");

        inc.crit1 = self.tri(0.95);
        inc.crit2 = self.tri(0.95);
        inc.crit3 = self.tri(0.85);
        if date.year() >= 1998 {
            inc.doubtterr = self.tri(0.15);
            if inc.doubtterr == TriState::Yes {
                inc.alternative = Some(self.rng.random_range(1..=4));
            }
        }
        inc.multiple = self.tri(0.15);
        inc.conflict = self.tri(0.1);
        inc.success = self.tri(0.9);
        inc.suicide = self.tri(0.04);
        inc.attack_types = self.slots(|g| g.weighted(&ATTACK_WEIGHTS));

        let target_types: [Option<Code>; 3] = self.slots(|g| g.domain_code(Domain::TargetType));
        for (slot, targtype) in inc.targets.iter_mut().zip(target_types) {
            if let Some(t) = targtype {
                *slot = TargetSlot {
                    targtype: Some(t),
                    entity: Some(self.rng.random_range(1..=26)),
                    corp: format!("Entity {}", self.rng.random_range(1..=50)),
                    target: format!("Target {}", self.rng.random_range(1..=500)),
                    natlty: Some(if self.chance(0.85) { country } else { *self.pool.choose(&mut self.rng).expect("non-empty pool") }),
                };
            }
        }

        let groups = self.profile.groups;
        let names: [Option<Code>; 3] = self.slots(|g| g.rng.random_range(1..=groups) as Code);
        for (slot, name) in inc.perpetrators.iter_mut().zip(names) {
            if let Some(k) = name {
                *slot = PerpetratorSlot { gname: format!("Group {k:02}"), gsubname: String::new() };
            }
        }
        if self.unknown() {
            inc.perpetrators[0].gname = "Unknown".into();
        }
        inc.motive = String::new();
        inc.guncertain = self.tri(0.1);
        inc.nperps = self.count(30.0);
        inc.nperpcap = self.count(5.0);
        for i in 0..3 {
            if inc.perpetrators[i].gname.is_empty() {
                break;
            }
            let claimed = self.tri(0.3);
            let mode = (claimed == TriState::Yes).then(|| self.domain_code(Domain::ClaimMode));
            let confirmed = if claimed == TriState::Yes { self.tri(0.5) } else { TriState::Unknown };
            inc.claims[i] = ClaimSlot { claimed, mode, confirmed };
        }
        inc.compclaim = if inc.perpetrators[1].gname.is_empty() { TriState::Unknown } else { self.tri(0.2) };

        let weapon_types: [Option<Code>; 4] = self.slots(|g| g.weighted(&WEAPON_WEIGHTS));
        for (slot, weaptype) in inc.weapons.iter_mut().zip(weapon_types) {
            let Some(t) = weaptype else { break };
            let subtypes = self.tables.weapon_subtypes_of(t);
            let subtype = if !subtypes.is_empty() && self.chance(0.8) {
                subtypes.choose(&mut self.rng).copied()
            } else {
                None
            };
            *slot = WeaponSlot { weaptype: Some(t), subtype };
        }

        inc.nkill = self.count(150.0);
        inc.nwound = self.count(300.0);
        inc.nkillus = if self.chance(0.05) { self.count(5.0) } else { CodedCell::Known(0) };
        inc.nwoundus = if self.chance(0.05) { self.count(5.0) } else { CodedCell::Known(0) };
        inc.nkillter = self.count(4.0);
        inc.nwoundte = self.count(3.0);

        inc.property = self.tri(0.45);
        if inc.property == TriState::Yes {
            let extent = self.weighted(&[(1, 1), (2, 6), (3, 70), (4, 23)]);
            inc.propextent = Some(extent);
            inc.propvalue = match extent {
                _ if self.unknown() => CodedCell::Unknown,
                1 => CodedCell::Known(self.rng.random_range(1_000_000_000..5_000_000_000)),
                2 => CodedCell::Known(self.rng.random_range(1_000_000..1_000_000_000)),
                3 => CodedCell::Known(self.rng.random_range(100..1_000_000)),
                _ => CodedCell::Unknown,
            };
        }

        let hostage = inc.attack_types.iter().flatten().any(|a| matches!(a, 4..=6));
        if hostage {
            inc.ishostkid = TriState::Yes;
            inc.nhostkid = self.count(40.0);
            inc.nhostkidus = CodedCell::Known(0);
            if self.chance(0.4) {
                inc.nhours = CodedCell::Known(self.rng.random_range(1..24));
            } else if !self.unknown() {
                let days = self.rng.random_range(1..=90);
                inc.ndays = CodedCell::Known(days);
                inc.extended = TriState::Yes;
                inc.resolution = Some(date + Duration::days(days));
            }
            inc.ransom = self.tri(0.3);
            if inc.ransom == TriState::Yes {
                inc.ransomamt = self.count(2_000_000.0);
                inc.ransompaid = if self.chance(0.3) { self.count(500_000.0) } else { CodedCell::Known(0) };
            }
            inc.hostkidoutcome = Some(self.rng.random_range(1..=7));
            inc.nreleased = match inc.nhostkid {
                CodedCell::Known(total) if !self.unknown() => CodedCell::Known(self.rng.random_range(0..=total)),
                _ => CodedCell::Unknown,
            };
            if self.chance(0.05) {
                inc.divert = self.tables.country_name(*self.pool.choose(&mut self.rng).expect("non-empty pool")).unwrap_or_default().to_string();
            }
        } else {
            inc.ishostkid = if self.unknown() { TriState::Unknown } else { TriState::No };
            inc.extended = if self.chance(0.02) { TriState::Yes } else { TriState::No };
            if inc.extended == TriState::Yes {
                inc.resolution = Some(date + Duration::days(self.rng.random_range(1..=10)));
            }
        }
        inc.scite[0] = format!("Synthetic source {}", self.rng.random_range(1..=1000));
        inc
    }
}
