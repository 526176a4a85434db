use chrono::{Datelike, NaiveDate};

use super::incident::Incident;
use super::violation::{Rule, Severity, Violation};
use crate::codebook::{CodebookTables, CodedCell, CountryValidity, TriState, UNKNOWN_COUNTRY};

const MILLION: i64 = 1_000_000;
const BILLION: i64 = 1_000_000_000;

/// Cross-field rules, evaluated in rule order and slot order so the output is
/// stable for a given incident.
pub fn validate_incident(inc: &Incident, tables: &CodebookTables) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |rule, severity, fields: &[&str], message: String| {
        out.push(Violation::new(rule, severity, fields, message));
    };

    if let Some(resolution) = inc.resolution {
        if inc.extended != TriState::Yes {
            push(
                Rule::R1,
                Severity::Error,
                &["resolution", "extended"],
                format!("resolution {resolution} recorded but extended is {}", inc.extended.label()),
            );
        }
    }

    for (i, w) in inc.weapons.iter().enumerate() {
        let Some(subtype) = w.subtype else { continue };
        let parent = tables.weapon_subtype_parent(subtype).ok();
        if parent.is_none() || parent != w.weaptype {
            let n = i + 1;
            push(
                Rule::R2,
                Severity::Error,
                &[&format!("weaptype{n}"), &format!("weapsubtype{n}")],
                format!(
                    "weapon subtype {subtype} belongs to type {}, slot has {}",
                    parent.map_or("none".to_string(), |p| p.to_string()),
                    w.weaptype.map_or("none".to_string(), |t| t.to_string())
                ),
            );
        }
    }

    if let CodedCell::Known(hours) = inc.nhours {
        if hours >= 24 {
            push(Rule::R3, Severity::Error, &["nhours"], format!("nhours {hours} is not under 24"));
        }
        if inc.ndays.is_known() {
            push(
                Rule::R3,
                Severity::Error,
                &["nhours", "ndays"],
                "both nhours and ndays recorded".to_string(),
            );
        }
    }

    if inc.country != UNKNOWN_COUNTRY {
        match tables.region_of_country(inc.country) {
            Ok(expected) if inc.region != Some(expected) => push(
                Rule::R4,
                Severity::Error,
                &["region", "country"],
                format!(
                    "country {} lies in region {expected}, record has {}",
                    inc.country,
                    inc.region.map_or("none".to_string(), |r| r.to_string())
                ),
            ),
            Ok(_) => {}
            Err(e) => push(Rule::R4, Severity::Error, &["region", "country"], e.to_string()),
        }

        if let Some(suggested) = anachronism(inc, tables) {
            let hint = suggested.map_or(String::new(), |c| format!("; expected {c}"));
            push(
                Rule::R5,
                Severity::Warning,
                &["country", "year", "month", "day"],
                format!("country {} not valid on the incident date{hint}", inc.country),
            );
        }
    }

    if let (CodedCell::Known(value), Some(extent)) = (inc.propvalue, inc.propextent) {
        let in_band = match extent {
            1 => value >= BILLION,
            2 => (MILLION..=BILLION).contains(&value),
            3 => value <= MILLION,
            _ => true,
        };
        if !in_band {
            push(
                Rule::R6,
                Severity::Warning,
                &["propvalue", "propextent"],
                format!("propvalue {value} outside the band of propextent {extent}"),
            );
        }
    }

    let mut gap = None;
    for (i, slot) in inc.attack_types.iter().enumerate() {
        match (slot, gap) {
            (None, None) => gap = Some(i),
            (Some(_), Some(empty)) => push(
                Rule::R7,
                Severity::Error,
                &[&format!("attacktype{}", i + 1), &format!("attacktype{}", empty + 1)],
                format!("attacktype{} set while attacktype{} is empty", i + 1, empty + 1),
            ),
            _ => {}
        }
    }

    if inc.ishostkid == TriState::No {
        let mut fields = Vec::new();
        if inc.hostkidoutcome.is_some() {
            fields.push("hostkidoutcome");
        }
        if inc.nreleased.is_known() {
            fields.push("nreleased");
        }
        if !fields.is_empty() {
            fields.push("ishostkid");
            push(
                Rule::R8,
                Severity::Warning,
                &fields,
                "hostage details recorded but ishostkid is No".to_string(),
            );
        }
    }

    if inc.day.is_known() && !inc.month.is_known() {
        push(Rule::R9, Severity::Error, &["day", "month"], "day known but month unknown".into());
    }
    if inc.month.is_known() && !inc.year.is_known() {
        push(Rule::R9, Severity::Error, &["month", "year"], "month known but year unknown".into());
    }

    if let (CodedCell::Known(y), CodedCell::Known(m), CodedCell::Known(d)) =
        (inc.year, inc.month, inc.day)
    {
        if inc.date().is_none() {
            push(
                Rule::R10,
                Severity::Error,
                &["year", "month", "day"],
                format!("{y:04}-{m:02}-{d:02} is not a calendar date"),
            );
        }
    }

    let eventid = inc.eventid_text();
    for v in &mut out {
        v.eventid = eventid.clone();
    }
    out
}

/// Returns `Some(suggestion)` when the country is invalid for every date
/// consistent with the known parts of the incident date.
fn anachronism(inc: &Incident, tables: &CodebookTables) -> Option<Option<u16>> {
    let (first, last) = date_bounds(inc)?;
    let mut suggestion = None;
    let mut day = first;
    while day <= last {
        match tables.country_validity_at_date(inc.country, day).ok()? {
            CountryValidity::Valid => return None,
            CountryValidity::Anachronism { suggested } => {
                suggestion.get_or_insert(suggested);
            }
        }
        day = day.succ_opt()?;
    }
    suggestion
}

fn date_bounds(inc: &Incident) -> Option<(NaiveDate, NaiveDate)> {
    let year = i32::try_from(inc.year.known()?).ok()?;
    if let Some(date) = inc.date() {
        return Some((date, date));
    }
    match inc.month.known() {
        Some(m) if !inc.day.is_known() => {
            let first = NaiveDate::from_ymd_opt(year, u32::try_from(m).ok()?, 1)?;
            let next = first.checked_add_months(chrono::Months::new(1))?;
            Some((first, next.pred_opt()?))
        }
        None => Some((
            NaiveDate::from_ymd_opt(year, 1, 1)?,
            NaiveDate::from_ymd_opt(year, 12, 31)?,
        )),
        Some(_) => None,
    }
    .filter(|(first, _)| first.year() == year)
}
