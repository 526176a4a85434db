use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CodebookError;

/// Twelve-digit incident identifier: `yyyymmdd` recording date, the literal
/// `00`, then a two-digit per-day case number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId {
    year: u16,
    month: u8,
    day: u8,
    sequence: u8,
}

impl EventId {
    pub const MIN_YEAR: u16 = 1970;
    pub const MAX_YEAR: u16 = 2100;

    pub fn new(year: u16, month: u8, day: u8, sequence: u8) -> Result<Self, CodebookError> {
        if !(Self::MIN_YEAR..=Self::MAX_YEAR).contains(&year) {
            return Err(CodebookError::EventId(format!("year {year} outside 1970-2100")));
        }
        if sequence > 99 {
            return Err(CodebookError::EventId(format!("sequence {sequence} exceeds 99")));
        }
        if NaiveDate::from_ymd_opt(year.into(), month.into(), day.into()).is_none() {
            return Err(CodebookError::EventId(format!(
                "{year:04}-{month:02}-{day:02} is not a calendar date"
            )));
        }
        Ok(Self { year, month, day, sequence })
    }

    pub fn year(&self) -> u16 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day(&self) -> u8 {
        self.day
    }

    pub fn sequence(&self) -> u8 {
        self.sequence
    }

    /// Recording date carried in the first eight digits.
    pub fn date(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year.into(), self.month.into(), self.day.into())
            .expect("EventId holds a valid date by construction")
    }
}

/// Decode the positional grammar. Unlike the year/month/day fields, a zero
/// month or day is rejected here.
pub fn parse_event_id(text: &str) -> Result<EventId, CodebookError> {
    let bytes = text.as_bytes();
    if bytes.len() != 12 {
        return Err(CodebookError::EventId(format!(
            "expected 12 digits, got {} characters",
            text.chars().count()
        )));
    }
    if let Some(pos) = bytes.iter().position(|b| !b.is_ascii_digit()) {
        return Err(CodebookError::EventId(format!("non-digit at position {}", pos + 1)));
    }
    if &bytes[8..10] != b"00" {
        return Err(CodebookError::EventId(format!(
            "digits 9-10 must be \"00\", got \"{}\"",
            &text[8..10]
        )));
    }
    let num = |range: std::ops::Range<usize>| -> u16 {
        bytes[range].iter().fold(0u16, |acc, b| acc * 10 + u16::from(b - b'0'))
    };
    EventId::new(num(0..4), num(4..6) as u8, num(6..8) as u8, num(10..12) as u8)
}

pub fn format_event_id(id: &EventId) -> String {
    format!("{:04}{:02}{:02}00{:02}", id.year, id.month, id.day, id.sequence)
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_event_id(self))
    }
}

impl FromStr for EventId {
    type Err = CodebookError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_event_id(s)
    }
}

impl Serialize for EventId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_event_id(&text).map_err(serde::de::Error::custom)
    }
}
