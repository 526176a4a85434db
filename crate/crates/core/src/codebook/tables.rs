use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::CodebookError;

pub type Code = u16;

/// Coded domains other than countries and regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    AttackType,
    TargetType,
    EntityType,
    WeaponType,
    WeaponSubtype,
    ClaimMode,
    HostageOutcome,
    PropertyExtent,
    Alternative,
}

impl Domain {
    pub const ALL: [Domain; 9] = [
        Domain::AttackType,
        Domain::TargetType,
        Domain::EntityType,
        Domain::WeaponType,
        Domain::WeaponSubtype,
        Domain::ClaimMode,
        Domain::HostageOutcome,
        Domain::PropertyExtent,
        Domain::Alternative,
    ];

    fn file_name(self) -> &'static str {
        match self {
            Domain::AttackType => "attack_types.csv",
            Domain::TargetType => "target_types.csv",
            Domain::EntityType => "entity_types.csv",
            Domain::WeaponType => "weapon_types.csv",
            Domain::WeaponSubtype => "weapon_subtypes.csv",
            Domain::ClaimMode => "claim_modes.csv",
            Domain::HostageOutcome => "hostage_outcomes.csv",
            Domain::PropertyExtent => "property_extents.csv",
            Domain::Alternative => "alternatives.csv",
        }
    }

    /// The code that means "cannot be determined", where the domain has one.
    pub fn unknown_code(self) -> Option<Code> {
        match self {
            Domain::AttackType => Some(9),
            Domain::TargetType => Some(20),
            Domain::WeaponType => Some(13),
            Domain::ClaimMode => Some(10),
            Domain::HostageOutcome => Some(7),
            Domain::PropertyExtent => Some(4),
            Domain::EntityType | Domain::WeaponSubtype | Domain::Alternative => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WatershedEvent {
    /// Country exists from the date on.
    Independence,
    /// Country exists from the date on, absorbing `related`.
    Unification,
    /// Country ceases to exist on the date.
    Termination,
    /// Country becomes `related` on the date.
    Rename,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Watershed {
    pub country: Code,
    pub event: WatershedEvent,
    pub date: NaiveDate,
    /// Predecessor (for starts) or successor (for ends) when one is determined.
    pub related: Option<Code>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountryValidity {
    Valid,
    Anachronism { suggested: Option<Code> },
}

#[derive(Debug, Clone)]
struct Region {
    name: String,
    members: Vec<Code>,
}

const BUNDLED: &[(&str, &str)] = &[
    ("VERSION", include_str!("../../data/codebook/VERSION")),
    ("countries.csv", include_str!("../../data/codebook/countries.csv")),
    ("regions.csv", include_str!("../../data/codebook/regions.csv")),
    ("region_members.csv", include_str!("../../data/codebook/region_members.csv")),
    ("watersheds.csv", include_str!("../../data/codebook/watersheds.csv")),
    ("attack_types.csv", include_str!("../../data/codebook/attack_types.csv")),
    ("target_types.csv", include_str!("../../data/codebook/target_types.csv")),
    ("entity_types.csv", include_str!("../../data/codebook/entity_types.csv")),
    ("weapon_types.csv", include_str!("../../data/codebook/weapon_types.csv")),
    ("weapon_subtypes.csv", include_str!("../../data/codebook/weapon_subtypes.csv")),
    ("claim_modes.csv", include_str!("../../data/codebook/claim_modes.csv")),
    ("hostage_outcomes.csv", include_str!("../../data/codebook/hostage_outcomes.csv")),
    ("property_extents.csv", include_str!("../../data/codebook/property_extents.csv")),
    ("alternatives.csv", include_str!("../../data/codebook/alternatives.csv")),
];

/// Every coded domain of the incident codebook. Immutable once built.
#[derive(Debug, Clone)]
pub struct CodebookTables {
    version: String,
    countries: BTreeMap<Code, String>,
    country_by_name: HashMap<String, Code>,
    regions: BTreeMap<Code, Region>,
    region_of: HashMap<Code, Code>,
    domains: BTreeMap<Domain, BTreeMap<Code, String>>,
    subtype_parent: BTreeMap<Code, Code>,
    watersheds: Vec<Watershed>,
}

impl CodebookTables {
    /// Tables bundled with the crate.
    pub fn bundled() -> &'static CodebookTables {
        static TABLES: std::sync::OnceLock<CodebookTables> = std::sync::OnceLock::new();
        TABLES.get_or_init(|| {
            let files: HashMap<&str, &str> = BUNDLED.iter().copied().collect();
            Self::from_sources(|name| Ok(files[name].to_string()))
                .expect("bundled codebook tables are well-formed")
        })
    }

    /// Load a table directory with the same file layout as `data/codebook`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, CodebookError> {
        let dir = dir.as_ref();
        Self::from_sources(|name| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|e| CodebookError::Table {
                file: name.to_string(),
                message: format!("{}: {e}", path.display()),
            })
        })
    }

    fn from_sources(
        mut read: impl FnMut(&str) -> Result<String, CodebookError>,
    ) -> Result<Self, CodebookError> {
        let version = read("VERSION")?.trim().to_string();
        if version.is_empty() {
            return Err(table_err("VERSION", "empty version tag"));
        }

        let countries: BTreeMap<Code, String> = rows(&read("countries.csv")?, "countries.csv", 2)?
            .into_iter()
            .map(|r| Ok((code(&r[0], "countries.csv")?, r[1].clone())))
            .collect::<Result<_, CodebookError>>()?;
        let country_by_name = countries.iter().map(|(c, n)| (n.clone(), *c)).collect();

        let mut regions: BTreeMap<Code, Region> = BTreeMap::new();
        for r in rows(&read("regions.csv")?, "regions.csv", 2)? {
            regions.insert(
                code(&r[0], "regions.csv")?,
                Region { name: r[1].clone(), members: Vec::new() },
            );
        }
        let mut region_of = HashMap::new();
        for r in rows(&read("region_members.csv")?, "region_members.csv", 2)? {
            let region = code(&r[0], "region_members.csv")?;
            let country = code(&r[1], "region_members.csv")?;
            if !countries.contains_key(&country) {
                return Err(table_err("region_members.csv", format!("unknown country {country}")));
            }
            let entry = regions.get_mut(&region).ok_or_else(|| {
                table_err("region_members.csv", format!("unknown region {region}"))
            })?;
            if region_of.insert(country, region).is_some() {
                return Err(table_err(
                    "region_members.csv",
                    format!("country {country} listed in more than one region"),
                ));
            }
            entry.members.push(country);
        }

        let mut domains = BTreeMap::new();
        let mut subtype_parent = BTreeMap::new();
        for domain in Domain::ALL {
            let file = domain.file_name();
            let width = if domain == Domain::WeaponSubtype { 3 } else { 2 };
            let mut map = BTreeMap::new();
            for r in rows(&read(file)?, file, width)? {
                let c = code(&r[0], file)?;
                if domain == Domain::WeaponSubtype {
                    subtype_parent.insert(c, code(&r[2], file)?);
                }
                map.insert(c, r[1].clone());
            }
            domains.insert(domain, map);
        }
        for (sub, parent) in &subtype_parent {
            if !domains[&Domain::WeaponType].contains_key(parent) {
                return Err(table_err(
                    "weapon_subtypes.csv",
                    format!("subtype {sub} has unknown parent {parent}"),
                ));
            }
        }

        let mut watersheds = Vec::new();
        for r in rows(&read("watersheds.csv")?, "watersheds.csv", 4)? {
            let country = code(&r[0], "watersheds.csv")?;
            let event = match r[1].as_str() {
                "independence" => WatershedEvent::Independence,
                "unification" => WatershedEvent::Unification,
                "termination" => WatershedEvent::Termination,
                "rename" => WatershedEvent::Rename,
                other => return Err(table_err("watersheds.csv", format!("unknown event {other}"))),
            };
            let date = NaiveDate::parse_from_str(&r[2], "%Y-%m-%d")
                .map_err(|e| table_err("watersheds.csv", format!("bad date {}: {e}", r[2])))?;
            let related = if r[3].is_empty() { None } else { Some(code(&r[3], "watersheds.csv")?) };
            for c in std::iter::once(country).chain(related) {
                if !countries.contains_key(&c) {
                    return Err(table_err("watersheds.csv", format!("unknown country {c}")));
                }
            }
            watersheds.push(Watershed { country, event, date, related });
        }

        Ok(Self {
            version,
            countries,
            country_by_name,
            regions,
            region_of,
            domains,
            subtype_parent,
            watersheds,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn country_name(&self, code: Code) -> Option<&str> {
        self.countries.get(&code).map(String::as_str)
    }

    pub fn country_by_name(&self, name: &str) -> Option<Code> {
        self.country_by_name.get(name).copied()
    }

    pub fn countries(&self) -> impl Iterator<Item = (Code, &str)> {
        self.countries.iter().map(|(c, n)| (*c, n.as_str()))
    }

    pub fn region_name(&self, code: Code) -> Option<&str> {
        self.regions.get(&code).map(|r| r.name.as_str())
    }

    pub fn regions(&self) -> impl Iterator<Item = (Code, &str)> {
        self.regions.iter().map(|(c, r)| (*c, r.name.as_str()))
    }

    pub fn region_members(&self, region: Code) -> Option<&[Code]> {
        self.regions.get(&region).map(|r| r.members.as_slice())
    }

    pub fn region_of_country(&self, country: Code) -> Result<Code, CodebookError> {
        if !self.countries.contains_key(&country) {
            return Err(CodebookError::UnknownCode { domain: "country", code: country.into() });
        }
        self.region_of.get(&country).copied().ok_or(CodebookError::NoRegion(country))
    }

    pub fn domain(&self, domain: Domain) -> &BTreeMap<Code, String> {
        &self.domains[&domain]
    }

    pub fn label(&self, domain: Domain, code: Code) -> Option<&str> {
        self.domains[&domain].get(&code).map(String::as_str)
    }

    pub fn contains(&self, domain: Domain, code: Code) -> bool {
        self.domains[&domain].contains_key(&code)
    }

    pub fn weapon_subtype_parent(&self, subtype: Code) -> Result<Code, CodebookError> {
        self.subtype_parent
            .get(&subtype)
            .copied()
            .ok_or(CodebookError::UnknownCode { domain: "weapon subtype", code: subtype.into() })
    }

    pub fn weapon_subtypes_of(&self, weapon_type: Code) -> Vec<Code> {
        self.subtype_parent.iter().filter(|(_, p)| **p == weapon_type).map(|(s, _)| *s).collect()
    }

    pub fn watersheds(&self) -> &[Watershed] {
        &self.watersheds
    }

    /// Whether `country` may be recorded for an incident on `date`. Watershed
    /// dates are inclusive: on the date itself the new state already applies.
    pub fn country_validity_at_date(
        &self,
        country: Code,
        date: NaiveDate,
    ) -> Result<CountryValidity, CodebookError> {
        if !self.countries.contains_key(&country) {
            return Err(CodebookError::UnknownCode { domain: "country", code: country.into() });
        }
        for w in &self.watersheds {
            let starts = |c: Code| c == country && date < w.date;
            let ends = |c: Code| c == country && date >= w.date;
            let verdict = match w.event {
                WatershedEvent::Independence | WatershedEvent::Unification if starts(w.country) => {
                    Some(w.related)
                }
                WatershedEvent::Termination if ends(w.country) => Some(w.related),
                WatershedEvent::Rename if ends(w.country) => Some(w.related),
                WatershedEvent::Rename if w.related.is_some_and(starts) => Some(Some(w.country)),
                _ => None,
            };
            if let Some(suggested) = verdict {
                return Ok(CountryValidity::Anachronism { suggested });
            }
        }
        Ok(CountryValidity::Valid)
    }
}

fn table_err(file: &str, message: impl Into<String>) -> CodebookError {
    CodebookError::Table { file: file.to_string(), message: message.into() }
}

fn code(text: &str, file: &str) -> Result<Code, CodebookError> {
    text.trim().parse().map_err(|_| table_err(file, format!("bad code {text:?}")))
}

fn rows(text: &str, file: &str, width: usize) -> Result<Vec<Vec<String>>, CodebookError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| table_err(file, e.to_string()))?;
        if record.len() != width {
            return Err(table_err(file, format!("expected {width} columns, got {}", record.len())));
        }
        let row: Vec<String> = record.iter().map(str::to_string).collect();
        // codes are unique except in the region membership list
        if file != "region_members.csv" && file != "watersheds.csv" && !seen.insert(row[0].clone()) {
            return Err(table_err(file, format!("duplicate code {}", row[0])));
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables() -> &'static CodebookTables {
        CodebookTables::bundled()
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn region_spot_checks() {
        assert_eq!(tables().region_of_country(92).unwrap(), 6);
        assert_eq!(tables().region_of_country(217).unwrap(), 1);
        assert!(matches!(
            tables().region_of_country(9999),
            Err(CodebookError::UnknownCode { .. })
        ));
    }

    #[test]
    fn nationality_only_codes_have_no_region() {
        for code in [296, 381, 422, 311] {
            assert!(matches!(tables().region_of_country(code), Err(CodebookError::NoRegion(_))));
        }
    }

    #[test]
    fn thirteen_regions_with_disjoint_members() {
        assert_eq!(tables().regions().count(), 13);
        let mut seen = BTreeSet::new();
        for (region, _) in tables().regions() {
            for c in tables().region_members(region).unwrap() {
                assert!(seen.insert(*c), "country {c} in two regions");
                assert!(tables().country_name(*c).is_some());
                assert_eq!(tables().region_of_country(*c).unwrap(), region);
            }
        }
    }

    #[test]
    fn subtype_parents() {
        assert_eq!(tables().weapon_subtype_parent(7).unwrap(), 6);
        assert_eq!(tables().weapon_subtype_parent(2).unwrap(), 5);
        assert_eq!(tables().weapon_subtype_parent(1).unwrap(), 2);
        assert_eq!(tables().weapon_subtype_parent(18).unwrap(), 8);
        assert_eq!(tables().weapon_subtype_parent(26).unwrap(), 9);
        assert!(tables().weapon_subtype_parent(27).is_err());
        let image: BTreeSet<Code> =
            (1..=26).map(|s| tables().weapon_subtype_parent(s).unwrap()).collect();
        assert!(image.is_subset(&[1, 2, 5, 6, 8, 9].into_iter().collect()));
    }

    #[test]
    fn watershed_examples() {
        let t = tables();
        assert_eq!(t.country_validity_at_date(362, date(1989, 5, 1)).unwrap(), CountryValidity::Valid);
        assert_eq!(
            t.country_validity_at_date(362, date(1991, 6, 1)).unwrap(),
            CountryValidity::Anachronism { suggested: Some(75) }
        );
        assert_eq!(
            t.country_validity_at_date(63, date(1990, 1, 1)).unwrap(),
            CountryValidity::Anachronism { suggested: None }
        );
        assert!(t.country_validity_at_date(9999, date(1990, 1, 1)).is_err());
    }

    #[test]
    fn watershed_date_is_inclusive() {
        let t = tables();
        assert_eq!(t.country_validity_at_date(75, date(1990, 10, 3)).unwrap(), CountryValidity::Valid);
        assert_eq!(
            t.country_validity_at_date(75, date(1990, 10, 2)).unwrap(),
            CountryValidity::Anachronism { suggested: Some(362) }
        );
        assert_eq!(
            t.country_validity_at_date(362, date(1990, 10, 3)).unwrap(),
            CountryValidity::Anachronism { suggested: Some(75) }
        );
    }

    #[test]
    fn rename_applies_both_ways() {
        let t = tables();
        assert_eq!(
            t.country_validity_at_date(235, date(2004, 1, 1)).unwrap(),
            CountryValidity::Anachronism { suggested: Some(175) }
        );
        assert_eq!(
            t.country_validity_at_date(175, date(2000, 1, 1)).unwrap(),
            CountryValidity::Anachronism { suggested: Some(235) }
        );
        assert_eq!(t.country_validity_at_date(175, date(2004, 1, 1)).unwrap(), CountryValidity::Valid);
        assert_eq!(
            t.country_validity_at_date(175, date(2007, 1, 1)).unwrap(),
            CountryValidity::Anachronism { suggested: None }
        );
    }

    #[test]
    fn countries_without_watersheds_always_valid() {
        assert_eq!(
            tables().country_validity_at_date(92, date(1970, 1, 1)).unwrap(),
            CountryValidity::Valid
        );
    }

    #[test]
    fn load_dir_matches_bundled() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/codebook");
        let loaded = CodebookTables::load_dir(dir).unwrap();
        assert_eq!(loaded.version(), tables().version());
        assert_eq!(loaded.countries().count(), tables().countries().count());
    }

    #[test]
    fn load_dir_rejects_overlapping_regions() {
        let tmp = tempfile::tempdir().unwrap();
        let src = concat!(env!("CARGO_MANIFEST_DIR"), "/data/codebook");
        for entry in fs::read_dir(src).unwrap() {
            let entry = entry.unwrap();
            fs::copy(entry.path(), tmp.path().join(entry.file_name())).unwrap();
        }
        let members = tmp.path().join("region_members.csv");
        let mut text = fs::read_to_string(&members).unwrap();
        text.push_str("1,92\n");
        fs::write(&members, text).unwrap();
        assert!(CodebookTables::load_dir(tmp.path()).is_err());
    }
}
