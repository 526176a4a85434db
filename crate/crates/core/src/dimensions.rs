//! Cube dimensions and the mapping of incidents onto member paths.
//!
//! Time (year → month → day) and Space (region → country → provstate → city)
//! are multi-level hierarchies; every other dimension has a single level.
//! Multi-slot fields contribute slot 1 only, so each incident lands in exactly
//! one cell per dimension.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codebook::{
    Code, CodebookError, CodebookTables, CodedCell, Domain, TriState, UNKNOWN_COUNTRY,
};
use crate::ingest::Incident;

pub const UNKNOWN_LABEL: &str = "Unknown";

/// A value at one hierarchy level. `Unknown` sorts after every known member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Member {
    Code(i64),
    Text(String),
    Unknown,
}

impl Member {
    pub fn is_unknown(&self) -> bool {
        matches!(self, Member::Unknown)
    }

    fn from_code(code: Option<Code>, domain: Domain) -> Member {
        match code {
            Some(c) if domain.unknown_code() != Some(c) => Member::Code(c.into()),
            _ => Member::Unknown,
        }
    }

    fn from_text(text: &str) -> Member {
        let text = text.trim();
        if text.is_empty() || text.eq_ignore_ascii_case(UNKNOWN_LABEL) {
            Member::Unknown
        } else {
            Member::Text(text.to_string())
        }
    }

    fn from_tri(t: TriState) -> Member {
        match t {
            TriState::Unknown => Member::Unknown,
            t => Member::Code(t.code()),
        }
    }

    fn from_cell(cell: CodedCell) -> Member {
        cell.known().map_or(Member::Unknown, Member::Code)
    }
}

/// What the members of a level are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelDomain {
    Region,
    Country,
    Coded(Domain),
    TriState,
    Integer,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Level {
    pub name: String,
    pub domain: LevelDomain,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hierarchy {
    pub name: String,
    pub levels: Vec<Level>,
}

impl Hierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, name: &str) -> Option<usize> {
        self.levels.iter().position(|l| l.name.eq_ignore_ascii_case(name))
    }

    /// Display label of a member at `level`.
    pub fn label(&self, level: usize, member: &Member, tables: &CodebookTables) -> String {
        let domain = self.levels[level].domain;
        match member {
            Member::Unknown => UNKNOWN_LABEL.to_string(),
            Member::Text(t) => t.clone(),
            Member::Code(c) => {
                let code = Code::try_from(*c).ok();
                let name = match domain {
                    LevelDomain::Region => code.and_then(|c| tables.region_name(c)),
                    LevelDomain::Country => code.and_then(|c| tables.country_name(c)),
                    LevelDomain::Coded(d) => code.and_then(|c| tables.label(d, c)),
                    LevelDomain::TriState => match c {
                        1 => Some("Yes"),
                        0 => Some("No"),
                        _ => None,
                    },
                    LevelDomain::Integer | LevelDomain::Text => None,
                };
                name.map_or_else(|| c.to_string(), str::to_string)
            }
        }
    }
}

/// Members along one hierarchy, root first. Once a level is unknown every
/// deeper level is unknown too.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemberPath {
    pub hierarchy: Dimension,
    members: Vec<Member>,
}

impl MemberPath {
    pub fn new(hierarchy: Dimension, mut members: Vec<Member>) -> Self {
        if let Some(first_unknown) = members.iter().position(Member::is_unknown) {
            members[first_unknown..].fill(Member::Unknown);
        }
        Self { hierarchy, members }
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Member> {
        self.members
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DimensionError {
    #[error("unrecognized dimension {0:?}")]
    UnknownDimension(String),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
}

/// Every dimension the cube can group or filter by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Dimension {
    Time,
    Space,
    Attack,
    Target,
    Weapon,
    Perpetrator,
    Success,
    Suicide,
    ClaimMode,
    HostageOutcome,
    PropExtent,
    Crit1,
    Crit2,
    Crit3,
    DoubtTerr,
    /// Hostage-incident duration; filterable attributes, never summed.
    NHours,
    NDays,
}

impl Dimension {
    pub const ALL: [Dimension; 17] = [
        Dimension::Time,
        Dimension::Space,
        Dimension::Attack,
        Dimension::Target,
        Dimension::Weapon,
        Dimension::Perpetrator,
        Dimension::Success,
        Dimension::Suicide,
        Dimension::ClaimMode,
        Dimension::HostageOutcome,
        Dimension::PropExtent,
        Dimension::Crit1,
        Dimension::Crit2,
        Dimension::Crit3,
        Dimension::DoubtTerr,
        Dimension::NHours,
        Dimension::NDays,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Time => "time",
            Dimension::Space => "space",
            Dimension::Attack => "attack",
            Dimension::Target => "target",
            Dimension::Weapon => "weapon",
            Dimension::Perpetrator => "perpetrator",
            Dimension::Success => "success",
            Dimension::Suicide => "suicide",
            Dimension::ClaimMode => "claimmode",
            Dimension::HostageOutcome => "hostkidoutcome",
            Dimension::PropExtent => "propextent",
            Dimension::Crit1 => "crit1",
            Dimension::Crit2 => "crit2",
            Dimension::Crit3 => "crit3",
            Dimension::DoubtTerr => "doubtterr",
            Dimension::NHours => "nhours",
            Dimension::NDays => "ndays",
        }
    }

    pub fn is_tri_state(self) -> bool {
        matches!(
            self,
            Dimension::Success
                | Dimension::Suicide
                | Dimension::Crit1
                | Dimension::Crit2
                | Dimension::Crit3
                | Dimension::DoubtTerr
        )
    }

    pub fn hierarchy(self) -> Hierarchy {
        let level = |name: &str, domain| Level { name: name.to_string(), domain };
        let levels = match self {
            Dimension::Time => vec![
                level("year", LevelDomain::Integer),
                level("month", LevelDomain::Integer),
                level("day", LevelDomain::Integer),
            ],
            Dimension::Space => vec![
                level("region", LevelDomain::Region),
                level("country", LevelDomain::Country),
                level("provstate", LevelDomain::Text),
                level("city", LevelDomain::Text),
            ],
            Dimension::Attack => vec![level("attacktype", LevelDomain::Coded(Domain::AttackType))],
            Dimension::Target => vec![level("targtype", LevelDomain::Coded(Domain::TargetType))],
            Dimension::Weapon => vec![level("weaptype", LevelDomain::Coded(Domain::WeaponType))],
            Dimension::Perpetrator => vec![level("gname", LevelDomain::Text)],
            Dimension::ClaimMode => vec![level("claimmode", LevelDomain::Coded(Domain::ClaimMode))],
            Dimension::HostageOutcome => {
                vec![level("hostkidoutcome", LevelDomain::Coded(Domain::HostageOutcome))]
            }
            Dimension::PropExtent => {
                vec![level("propextent", LevelDomain::Coded(Domain::PropertyExtent))]
            }
            Dimension::NHours | Dimension::NDays => vec![level(self.name(), LevelDomain::Integer)],
            tri => vec![level(tri.name(), LevelDomain::TriState)],
        };
        Hierarchy { name: self.name().to_string(), levels }
    }

    /// Member path of `inc` along this dimension.
    pub fn path(self, inc: &Incident, tables: &CodebookTables) -> Result<MemberPath, DimensionError> {
        match self {
            Dimension::Time => Ok(time_path(inc)),
            Dimension::Space => space_path(inc, tables),
            flat => Ok(MemberPath::new(flat, vec![flat_member(inc, flat)])),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = DimensionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        Dimension::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(wanted))
            .or(match wanted.to_ascii_lowercase().as_str() {
                "targtype" => Some(Dimension::Target),
                "weaptype" => Some(Dimension::Weapon),
                "attacktype" => Some(Dimension::Attack),
                "gname" => Some(Dimension::Perpetrator),
                _ => None,
            })
            .ok_or_else(|| DimensionError::UnknownDimension(s.to_string()))
    }
}

impl From<Dimension> for String {
    fn from(d: Dimension) -> String {
        d.name().to_string()
    }
}

impl TryFrom<String> for Dimension {
    type Error = DimensionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

pub fn time_path(inc: &Incident) -> MemberPath {
    MemberPath::new(
        Dimension::Time,
        vec![Member::from_cell(inc.year), Member::from_cell(inc.month), Member::from_cell(inc.day)],
    )
}

/// Region comes from the codebook, never from the file's region cell.
pub fn space_path(inc: &Incident, tables: &CodebookTables) -> Result<MemberPath, DimensionError> {
    if inc.country == UNKNOWN_COUNTRY {
        return Ok(MemberPath::new(Dimension::Space, vec![Member::Unknown; 4]));
    }
    let region = tables.region_of_country(inc.country)?;
    Ok(MemberPath::new(
        Dimension::Space,
        vec![
            Member::Code(region.into()),
            Member::Code(inc.country.into()),
            Member::from_text(&inc.provstate),
            Member::from_text(&inc.city),
        ],
    ))
}

/// Slot-1 member of a single-level dimension. Codes that mean "cannot be
/// determined" map to [`Member::Unknown`].
pub fn flat_member(inc: &Incident, dim: Dimension) -> Member {
    match dim {
        Dimension::Attack => Member::from_code(inc.attack_types[0], Domain::AttackType),
        Dimension::Target => Member::from_code(inc.targets[0].targtype, Domain::TargetType),
        Dimension::Weapon => Member::from_code(inc.weapons[0].weaptype, Domain::WeaponType),
        Dimension::Perpetrator => Member::from_text(&inc.perpetrators[0].gname),
        Dimension::ClaimMode => Member::from_code(inc.claims[0].mode, Domain::ClaimMode),
        Dimension::HostageOutcome => Member::from_code(inc.hostkidoutcome, Domain::HostageOutcome),
        Dimension::PropExtent => Member::from_code(inc.propextent, Domain::PropertyExtent),
        Dimension::Success => Member::from_tri(inc.success),
        Dimension::Suicide => Member::from_tri(inc.suicide),
        Dimension::Crit1 => Member::from_tri(inc.crit1),
        Dimension::Crit2 => Member::from_tri(inc.crit2),
        Dimension::Crit3 => Member::from_tri(inc.crit3),
        Dimension::DoubtTerr => Member::from_tri(inc.doubtterr),
        Dimension::NHours => Member::from_cell(inc.nhours),
        Dimension::NDays => Member::from_cell(inc.ndays),
        Dimension::Time => time_path(inc).into_members().swap_remove(0),
        Dimension::Space => match inc.country {
            UNKNOWN_COUNTRY => Member::Unknown,
            c => Member::Code(c.into()),
        },
    }
}

/// Parse a member by name for a dimension given as text.
pub fn flat_member_by_name(inc: &Incident, dim: &str) -> Result<Member, DimensionError> {
    let dim: Dimension = dim.parse()?;
    Ok(flat_member(inc, dim))
}

/// Days from the incident start to its resolution, for extended incidents
/// with a fully known start date.
pub fn extended_duration_days(inc: &Incident) -> Option<i64> {
    if inc.extended != TriState::Yes {
        return None;
    }
    Some((inc.resolution? - inc.date()?).num_days())
}
