use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::QueryError;
use crate::codebook::CodedCell;
use crate::ingest::Incident;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Count,
    Sum,
}

/// Additive fact columns. Dollar amounts are whole US$.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Measure {
    IncidentCount,
    NKill,
    NWound,
    NKillUs,
    NKillTer,
    NWoundUs,
    NWoundTe,
    NPerps,
    NPerpCap,
    PropValue,
    RansomAmt,
    RansomPaid,
    NHostKid,
    NReleased,
}

impl Measure {
    pub const ALL: [Measure; 14] = [
        Measure::IncidentCount,
        Measure::NKill,
        Measure::NWound,
        Measure::NKillUs,
        Measure::NKillTer,
        Measure::NWoundUs,
        Measure::NWoundTe,
        Measure::NPerps,
        Measure::NPerpCap,
        Measure::PropValue,
        Measure::RansomAmt,
        Measure::RansomPaid,
        Measure::NHostKid,
        Measure::NReleased,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::IncidentCount => "incident_count",
            Measure::NKill => "nkill",
            Measure::NWound => "nwound",
            Measure::NKillUs => "nkillus",
            Measure::NKillTer => "nkillter",
            Measure::NWoundUs => "nwoundus",
            Measure::NWoundTe => "nwoundte",
            Measure::NPerps => "nperps",
            Measure::NPerpCap => "nperpcap",
            Measure::PropValue => "propvalue",
            Measure::RansomAmt => "ransomamt",
            Measure::RansomPaid => "ransompaid",
            Measure::NHostKid => "nhostkid",
            Measure::NReleased => "nreleased",
        }
    }

    pub fn aggregator(self) -> Aggregator {
        match self {
            Measure::IncidentCount => Aggregator::Count,
            _ => Aggregator::Sum,
        }
    }

    /// The incident's contribution; `incident_count` is always a known 1.
    pub fn cell(self, inc: &Incident) -> CodedCell {
        match self {
            Measure::IncidentCount => CodedCell::Known(1),
            Measure::NKill => inc.nkill,
            Measure::NWound => inc.nwound,
            Measure::NKillUs => inc.nkillus,
            Measure::NKillTer => inc.nkillter,
            Measure::NWoundUs => inc.nwoundus,
            Measure::NWoundTe => inc.nwoundte,
            Measure::NPerps => inc.nperps,
            Measure::NPerpCap => inc.nperpcap,
            Measure::PropValue => inc.propvalue,
            Measure::RansomAmt => inc.ransomamt,
            Measure::RansomPaid => inc.ransompaid,
            Measure::NHostKid => inc.nhostkid,
            Measure::NReleased => inc.nreleased,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| QueryError::UnknownMeasure(s.to_string()))
    }
}

impl From<Measure> for String {
    fn from(m: Measure) -> String {
        m.name().to_string()
    }
}

impl TryFrom<String> for Measure {
    type Error = QueryError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}
