use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::codebook::{encode_coded_numeric, Code, CodedCell, EventId, FieldKind, TriState};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSlot {
    pub targtype: Option<Code>,
    pub entity: Option<Code>,
    pub corp: String,
    pub target: String,
    pub natlty: Option<Code>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerpetratorSlot {
    pub gname: String,
    pub gsubname: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSlot {
    pub claimed: TriState,
    pub mode: Option<Code>,
    pub confirmed: TriState,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeaponSlot {
    pub weaptype: Option<Code>,
    pub subtype: Option<Code>,
}

/// One incident with every codebook variable decoded. Multi-slot groups
/// (attack types, targets, perpetrators, claims, weapons) are fixed arrays
/// indexed from slot 1 at position 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incident {
    pub eventid: Option<EventId>,
    pub year: CodedCell,
    pub month: CodedCell,
    pub day: CodedCell,
    pub approxdate: String,
    pub extended: TriState,
    pub resolution: Option<NaiveDate>,

    /// `0` when the location could not be identified.
    pub country: Code,
    pub region: Option<Code>,
    pub provstate: String,
    pub city: String,
    pub vicinity: TriState,
    pub location: String,
    pub summary: String,

    pub crit1: TriState,
    pub crit2: TriState,
    pub crit3: TriState,
    pub doubtterr: TriState,
    pub alternative: Option<Code>,
    pub multiple: TriState,
    pub conflict: TriState,
    pub success: TriState,
    pub suicide: TriState,
    pub attack_types: [Option<Code>; 3],

    pub targets: [TargetSlot; 3],

    pub perpetrators: [PerpetratorSlot; 3],
    pub motive: String,
    pub guncertain: TriState,
    pub nperps: CodedCell,
    pub nperpcap: CodedCell,
    pub claims: [ClaimSlot; 3],
    pub compclaim: TriState,

    pub weapons: [WeaponSlot; 4],
    pub weapdetail: String,

    pub nkill: CodedCell,
    pub nkillus: CodedCell,
    pub nkillter: CodedCell,
    pub nwound: CodedCell,
    pub nwoundus: CodedCell,
    pub nwoundte: CodedCell,

    pub property: TriState,
    pub propextent: Option<Code>,
    pub propvalue: CodedCell,
    pub propcomment: String,

    pub ishostkid: TriState,
    pub nhostkid: CodedCell,
    pub nhostkidus: CodedCell,
    pub nhours: CodedCell,
    pub ndays: CodedCell,
    pub divert: String,
    pub kidhijcountry: String,
    pub ransom: TriState,
    pub ransomamt: CodedCell,
    pub ransomamtus: CodedCell,
    pub ransompaid: CodedCell,
    pub ransompaidus: CodedCell,
    pub ransomnote: String,
    pub hostkidoutcome: Option<Code>,
    pub nreleased: CodedCell,

    pub addnotes: String,
    pub scite: [String; 3],

    /// Columns outside the codebook, kept verbatim.
    pub extras: BTreeMap<String, String>,
}

/// Canonical column order for written incident files.
pub const COLUMNS: &[&str] = &[
    "eventid", "year", "month", "day", "approxdate", "extended", "resolution",
    "country", "region", "provstate", "city", "vicinity", "location", "summary",
    "crit1", "crit2", "crit3", "doubtterr", "alternative", "multiple", "conflict",
    "success", "suicide", "attacktype1", "attacktype2", "attacktype3",
    "targtype1", "entity1", "corp1", "target1", "natlty1",
    "targtype2", "entity2", "corp2", "target2", "natlty2",
    "targtype3", "entity3", "corp3", "target3", "natlty3",
    "gname", "gsubname", "gname2", "gsubname2", "gname3", "gsubname3",
    "motive", "guncertain", "nperps", "nperpcap",
    "claimed", "claimmode", "claimconf", "claim2", "claimmode2", "claimconf2",
    "claim3", "claimmode3", "claimconf3", "compclaim",
    "weaptype1", "weapsubtype1", "weaptype2", "weapsubtype2",
    "weaptype3", "weapsubtype3", "weaptype4", "weapsubtype4", "weapdetail",
    "nkill", "nkillus", "nkillter", "nwound", "nwoundus", "nwoundte",
    "property", "propextent", "propvalue", "propcomment",
    "ishostkid", "nhostkid", "nhostkidus", "nhours", "ndays", "divert", "kidhijcountry",
    "ransom", "ransomamt", "ransomamtus", "ransompaid", "ransompaidus", "ransomnote",
    "hostkidoutcome", "nreleased", "addnotes", "scite1", "scite2", "scite3",
];

/// Columns a file must carry for records to decode meaningfully.
pub const REQUIRED_COLUMNS: &[&str] = &["eventid", "year", "month", "day", "country", "region"];

/// Column name for slot `slot` (0-based) of a numbered group whose first
/// slot is written without a suffix (`gname`, `gname2`, ...).
pub(crate) fn slot_column(base: &str, slot: usize) -> String {
    if slot == 0 {
        base.to_string()
    } else {
        format!("{base}{}", slot + 1)
    }
}

impl Incident {
    /// Row in [`COLUMNS`] order.
    pub fn to_row(&self) -> Vec<String> {
        let count = |c: CodedCell| encode_coded_numeric(FieldKind::Count, c);
        let date_part = |c: CodedCell| encode_coded_numeric(FieldKind::DatePart, c);
        let tri = |t: TriState| t.code().to_string();
        let code = |c: Option<Code>| c.map(|v| v.to_string()).unwrap_or_default();

        let mut row = Vec::with_capacity(COLUMNS.len());
        row.push(self.eventid.map(|id| id.to_string()).unwrap_or_default());
        row.push(date_part(self.year));
        row.push(date_part(self.month));
        row.push(date_part(self.day));
        row.push(self.approxdate.clone());
        row.push(tri(self.extended));
        row.push(self.resolution.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default());
        row.push(self.country.to_string());
        row.push(code(self.region));
        row.push(self.provstate.clone());
        row.push(self.city.clone());
        row.push(tri(self.vicinity));
        row.push(self.location.clone());
        row.push(self.summary.clone());
        for t in [self.crit1, self.crit2, self.crit3, self.doubtterr] {
            row.push(tri(t));
        }
        row.push(code(self.alternative));
        for t in [self.multiple, self.conflict, self.success, self.suicide] {
            row.push(tri(t));
        }
        row.extend(self.attack_types.iter().map(|c| code(*c)));
        for t in &self.targets {
            row.push(code(t.targtype));
            row.push(code(t.entity));
            row.push(t.corp.clone());
            row.push(t.target.clone());
            row.push(code(t.natlty));
        }
        for p in &self.perpetrators {
            row.push(p.gname.clone());
            row.push(p.gsubname.clone());
        }
        row.push(self.motive.clone());
        row.push(tri(self.guncertain));
        row.push(count(self.nperps));
        row.push(count(self.nperpcap));
        for c in &self.claims {
            row.push(tri(c.claimed));
            row.push(code(c.mode));
            row.push(tri(c.confirmed));
        }
        row.push(tri(self.compclaim));
        for w in &self.weapons {
            row.push(code(w.weaptype));
            row.push(code(w.subtype));
        }
        row.push(self.weapdetail.clone());
        for c in [self.nkill, self.nkillus, self.nkillter, self.nwound, self.nwoundus, self.nwoundte] {
            row.push(count(c));
        }
        row.push(tri(self.property));
        row.push(code(self.propextent));
        row.push(count(self.propvalue));
        row.push(self.propcomment.clone());
        row.push(tri(self.ishostkid));
        for c in [self.nhostkid, self.nhostkidus, self.nhours, self.ndays] {
            row.push(count(c));
        }
        row.push(self.divert.clone());
        row.push(self.kidhijcountry.clone());
        row.push(tri(self.ransom));
        for c in [self.ransomamt, self.ransomamtus, self.ransompaid, self.ransompaidus] {
            row.push(count(c));
        }
        row.push(self.ransomnote.clone());
        row.push(code(self.hostkidoutcome));
        row.push(count(self.nreleased));
        row.push(self.addnotes.clone());
        row.extend(self.scite.iter().cloned());
        debug_assert_eq!(row.len(), COLUMNS.len());
        row
    }

    /// Calendar date when year, month and day are all known and form one.
    pub fn date(&self) -> Option<NaiveDate> {
        let (y, m, d) = (self.year.known()?, self.month.known()?, self.day.known()?);
        NaiveDate::from_ymd_opt(i32::try_from(y).ok()?, u32::try_from(m).ok()?, u32::try_from(d).ok()?)
    }

    pub fn eventid_text(&self) -> String {
        self.eventid.map(|id| id.to_string()).unwrap_or_default()
    }
}

/// Write incidents as a delimited file with a header row in [`COLUMNS`] order.
pub fn write_incidents<W: std::io::Write>(
    out: W,
    incidents: &[Incident],
    delimiter: u8,
) -> std::io::Result<()> {
    let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    writer.write_record(COLUMNS)?;
    for inc in incidents {
        writer.write_record(inc.to_row())?;
    }
    writer.flush()
}
