use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MiningError;
use crate::codebook::{Code, CodebookTables, Domain, TriState, UNKNOWN_COUNTRY};
use crate::ingest::Incident;

/// A field that can be turned into items. Multi-slot fields yield one item
/// per populated slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ItemDim {
    Attack,
    TargType,
    Weapon,
    WeapSubtype,
    Region,
    Country,
    Gname,
    Suicide,
    Success,
    Multiple,
    Extended,
    ClaimMode,
    PropExtent,
    HostKidOutcome,
}

impl ItemDim {
    pub const ALL: [ItemDim; 14] = [
        ItemDim::Attack,
        ItemDim::TargType,
        ItemDim::Weapon,
        ItemDim::WeapSubtype,
        ItemDim::Region,
        ItemDim::Country,
        ItemDim::Gname,
        ItemDim::Suicide,
        ItemDim::Success,
        ItemDim::Multiple,
        ItemDim::Extended,
        ItemDim::ClaimMode,
        ItemDim::PropExtent,
        ItemDim::HostKidOutcome,
    ];

    /// Perpetrator names are left out unless asked for.
    pub const DEFAULT: [ItemDim; 5] =
        [ItemDim::Attack, ItemDim::Weapon, ItemDim::TargType, ItemDim::Region, ItemDim::Suicide];

    pub fn name(self) -> &'static str {
        match self {
            ItemDim::Attack => "attack",
            ItemDim::TargType => "targtype",
            ItemDim::Weapon => "weapon",
            ItemDim::WeapSubtype => "weapsubtype",
            ItemDim::Region => "region",
            ItemDim::Country => "country",
            ItemDim::Gname => "gname",
            ItemDim::Suicide => "suicide",
            ItemDim::Success => "success",
            ItemDim::Multiple => "multiple",
            ItemDim::Extended => "extended",
            ItemDim::ClaimMode => "claimmode",
            ItemDim::PropExtent => "propextent",
            ItemDim::HostKidOutcome => "hostkidoutcome",
        }
    }

    /// Known labels of this field for `inc`, in slot order.
    pub fn labels(self, inc: &Incident, tables: &CodebookTables) -> Vec<String> {
        let coded = |domain: Domain, codes: &mut dyn Iterator<Item = Option<Code>>| -> Vec<String> {
            codes
                .flatten()
                .filter(|&c| domain.unknown_code() != Some(c))
                .filter_map(|c| tables.label(domain, c).map(str::to_string))
                .collect()
        };
        let tri = |t: TriState| match t {
            TriState::Unknown => Vec::new(),
            t => vec![t.label().to_string()],
        };
        let text = |s: &str| {
            let s = s.trim();
            (!s.is_empty() && !s.eq_ignore_ascii_case("unknown")).then(|| s.to_string())
        };
        match self {
            ItemDim::Attack => coded(Domain::AttackType, &mut inc.attack_types.iter().copied()),
            ItemDim::TargType => coded(Domain::TargetType, &mut inc.targets.iter().map(|t| t.targtype)),
            ItemDim::Weapon => coded(Domain::WeaponType, &mut inc.weapons.iter().map(|w| w.weaptype)),
            ItemDim::WeapSubtype => {
                coded(Domain::WeaponSubtype, &mut inc.weapons.iter().map(|w| w.subtype))
            }
            ItemDim::ClaimMode => coded(Domain::ClaimMode, &mut inc.claims.iter().map(|c| c.mode)),
            ItemDim::PropExtent => coded(Domain::PropertyExtent, &mut std::iter::once(inc.propextent)),
            ItemDim::HostKidOutcome => {
                coded(Domain::HostageOutcome, &mut std::iter::once(inc.hostkidoutcome))
            }
            ItemDim::Region => {
                if inc.country == UNKNOWN_COUNTRY {
                    return Vec::new();
                }
                tables
                    .region_of_country(inc.country)
                    .ok()
                    .and_then(|r| tables.region_name(r))
                    .map(str::to_string)
                    .into_iter()
                    .collect()
            }
            ItemDim::Country => {
                tables.country_name(inc.country).filter(|_| inc.country != UNKNOWN_COUNTRY)
                    .map(str::to_string)
                    .into_iter()
                    .collect()
            }
            ItemDim::Gname => inc.perpetrators.iter().filter_map(|p| text(&p.gname)).collect(),
            ItemDim::Suicide => tri(inc.suicide),
            ItemDim::Success => tri(inc.success),
            ItemDim::Multiple => tri(inc.multiple),
            ItemDim::Extended => tri(inc.extended),
        }
    }
}

impl fmt::Display for ItemDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ItemDim {
    type Err = MiningError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ItemDim::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .or(match s.to_ascii_lowercase().as_str() {
                "attacktype" => Some(ItemDim::Attack),
                "weaptype" => Some(ItemDim::Weapon),
                "target" => Some(ItemDim::TargType),
                "perpetrator" => Some(ItemDim::Gname),
                _ => None,
            })
            .ok_or_else(|| MiningError::UnknownDim(s.to_string()))
    }
}

impl From<ItemDim> for String {
    fn from(d: ItemDim) -> String {
        d.name().to_string()
    }
}

impl TryFrom<String> for ItemDim {
    type Error = MiningError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Parse a list of dimension names, dropping repeats.
pub fn parse_item_dims<S: AsRef<str>>(names: &[S]) -> Result<Vec<ItemDim>, MiningError> {
    let mut out = Vec::new();
    for name in names {
        let d: ItemDim = name.as_ref().parse()?;
        if !out.contains(&d) {
            out.push(d);
        }
    }
    Ok(out)
}

/// An incident as a set of `dim=label` items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: String,
    pub items: BTreeSet<String>,
}

impl Transaction {
    pub fn new(id: impl Into<String>, items: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { id: id.into(), items: items.into_iter().map(Into::into).collect() }
    }
}

/// Items of one incident over `dims`.
pub fn incident_items(inc: &Incident, dims: &[ItemDim], tables: &CodebookTables) -> BTreeSet<String> {
    dims.iter()
        .flat_map(|&d| d.labels(inc, tables).into_iter().map(move |l| format!("{d}={l}")))
        .collect()
}

/// One transaction per incident, in input order.
pub fn build_transactions(incidents: &[Incident], dims: &[ItemDim], tables: &CodebookTables) -> Vec<Transaction> {
    incidents
        .iter()
        .map(|inc| Transaction { id: inc.eventid_text(), items: incident_items(inc, dims, tables) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::CodedCell;
    use crate::ingest::{generate_synthetic, GeneratorProfile, PerpetratorSlot, WeaponSlot};

    fn tables() -> &'static CodebookTables {
        CodebookTables::bundled()
    }

    #[test]
    fn all_attack_slots_contribute() {
        let inc = Incident { attack_types: [Some(3), Some(2), None], ..Incident::default() };
        let t = build_transactions(&[inc], &[ItemDim::Attack], tables());
        let items: Vec<_> = t[0].items.iter().map(String::as_str).collect();
        assert_eq!(items, ["attack=Armed Assault", "attack=Bombing/Explosion"]);
    }

    #[test]
    fn unknowns_give_no_items() {
        let inc = Incident {
            attack_types: [Some(9), None, None],
            weapons: [WeaponSlot { weaptype: Some(13), subtype: None }, Default::default(), Default::default(), Default::default()],
            perpetrators: [PerpetratorSlot { gname: "Unknown".into(), gsubname: String::new() }, Default::default(), Default::default()],
            nkill: CodedCell::Unknown,
            ..Incident::default()
        };
        assert!(incident_items(&inc, &ItemDim::ALL, tables()).is_empty());
        assert!(incident_items(&Incident::default(), &ItemDim::ALL, tables()).is_empty());
    }

    #[test]
    fn repeated_slot_values_collapse() {
        let w = WeaponSlot { weaptype: Some(6), subtype: None };
        let inc = Incident { weapons: [w, w, Default::default(), Default::default()], ..Incident::default() };
        assert_eq!(incident_items(&inc, &[ItemDim::Weapon], tables()).len(), 1);
    }

    #[test]
    fn fixture_membership() {
        let corpus = generate_synthetic(7, 5, &GeneratorProfile::default(), tables()).unwrap();
        let dims = [ItemDim::Attack, ItemDim::Region];
        let txs = build_transactions(&corpus, &dims, tables());
        assert_eq!(txs.len(), 5);
        for (tx, inc) in txs.iter().zip(&corpus) {
            assert_eq!(tx.id, inc.eventid_text());
            for a in inc.attack_types.iter().flatten().filter(|&&a| a != 9) {
                let label = tables().label(Domain::AttackType, *a).unwrap();
                assert!(tx.items.contains(&format!("attack={label}")));
            }
            let region = tables().region_name(tables().region_of_country(inc.country).unwrap()).unwrap();
            assert!(tx.items.contains(&format!("region={region}")));
        }
    }

    #[test]
    fn dim_names() {
        assert_eq!(parse_item_dims(&["attack", "GNAME", "attack"]).unwrap(), [ItemDim::Attack, ItemDim::Gname]);
        assert!(parse_item_dims(&["colour"]).is_err());
    }
}
