use std::collections::HashMap;

use serde::Serialize;

use super::measures::Measure;
use crate::codebook::{CodebookTables, CodedCell};
use crate::dimensions::{Dimension, DimensionError, Hierarchy, Member};
use crate::ingest::Incident;

/// Member dictionary for one level. Ids are assigned by first occurrence.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    members: Vec<Member>,
    labels: Vec<String>,
    index: HashMap<Member, u32>,
}

impl PartialEq for Dictionary {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members && self.labels == other.labels
    }
}

impl Eq for Dictionary {}

impl Dictionary {
    pub(crate) fn from_parts(members: Vec<Member>, labels: Vec<String>) -> Option<Self> {
        if members.len() != labels.len() || u32::try_from(members.len()).is_err() {
            return None;
        }
        let index: HashMap<Member, u32> =
            members.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
        (index.len() == members.len()).then_some(Self { members, labels, index })
    }

    fn intern(&mut self, member: Member, label: impl FnOnce(&Member) -> String) -> u32 {
        if let Some(&id) = self.index.get(&member) {
            return id;
        }
        let id = self.members.len() as u32;
        self.labels.push(label(&member));
        self.index.insert(member.clone(), id);
        self.members.push(member);
        id
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, id: u32) -> &Member {
        &self.members[id as usize]
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }

    pub fn id_of(&self, member: &Member) -> Option<u32> {
        self.index.get(member).copied()
    }

    /// Resolve user text: exact label first, then a case-insensitive label,
    /// then a numeric code.
    pub fn lookup(&self, text: &str) -> Option<u32> {
        let text = text.trim();
        let find = |pred: &dyn Fn(&str) -> bool| self.labels.iter().position(|l| pred(l));
        find(&|l| l == text)
            .or_else(|| find(&|l| l.eq_ignore_ascii_case(text)))
            .map(|i| i as u32)
            .or_else(|| text.parse::<i64>().ok().and_then(|c| self.id_of(&Member::Code(c))))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Member, &str)> {
        self.members
            .iter()
            .zip(&self.labels)
            .enumerate()
            .map(|(i, (m, l))| (i as u32, m, l.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LevelColumn {
    pub dictionary: Dictionary,
    pub keys: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimColumns {
    pub dimension: Dimension,
    pub hierarchy: Hierarchy,
    pub levels: Vec<LevelColumn>,
}

/// Bit set over rows; a set bit marks a measure cell with no number.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnknownMask {
    len: usize,
    words: Vec<u64>,
}

impl UnknownMask {
    pub(crate) fn from_words(len: usize, words: Vec<u64>) -> Option<Self> {
        (words.len() == len.div_ceil(64)).then_some(Self { len, words })
    }

    pub fn push(&mut self, unknown: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if unknown {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn get(&self, row: usize) -> bool {
        self.words[row / 64] & (1 << (row % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureColumn {
    pub measure: Measure,
    /// Zero where the mask bit is set.
    pub values: Vec<i64>,
    pub unknown: UnknownMask,
}

impl MeasureColumn {
    pub fn cell(&self, row: usize) -> CodedCell {
        if self.unknown.get(row) {
            CodedCell::Unknown
        } else {
            CodedCell::Known(self.values[row])
        }
    }
}

/// Columnar star-schema fact store: one row per incident.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactTable {
    pub(crate) rows: usize,
    pub(crate) codebook_version: String,
    pub(crate) dims: Vec<DimColumns>,
    pub(crate) measures: Vec<MeasureColumn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelSchema {
    pub name: String,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HierarchySchema {
    pub name: String,
    pub levels: Vec<LevelSchema>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeasureSchema {
    pub name: &'static str,
    pub aggregator: super::Aggregator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schema {
    pub codebook_version: String,
    pub rows: usize,
    pub hierarchies: Vec<HierarchySchema>,
    pub measures: Vec<MeasureSchema>,
}

impl FactTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn codebook_version(&self) -> &str {
        &self.codebook_version
    }

    pub fn dims(&self) -> &[DimColumns] {
        &self.dims
    }

    pub fn dim(&self, dimension: Dimension) -> Option<&DimColumns> {
        self.dims.iter().find(|d| d.dimension == dimension)
    }

    pub fn measures(&self) -> &[MeasureColumn] {
        &self.measures
    }

    pub fn measure(&self, measure: Measure) -> Option<&MeasureColumn> {
        self.measures.iter().find(|m| m.measure == measure)
    }

    pub fn hierarchies(&self) -> Vec<Hierarchy> {
        self.dims.iter().map(|d| d.hierarchy.clone()).collect()
    }

    pub fn schema(&self) -> Schema {
        Schema {
            codebook_version: self.codebook_version.clone(),
            rows: self.rows,
            hierarchies: self
                .dims
                .iter()
                .map(|d| HierarchySchema {
                    name: d.hierarchy.name.clone(),
                    levels: d
                        .hierarchy
                        .levels
                        .iter()
                        .zip(&d.levels)
                        .map(|(l, c)| LevelSchema { name: l.name.clone(), members: c.dictionary.len() })
                        .collect(),
                })
                .collect(),
            measures: self
                .measures
                .iter()
                .map(|m| MeasureSchema { name: m.measure.name(), aggregator: m.measure.aggregator() })
                .collect(),
        }
    }

    /// Check the structural invariants; used after loading a snapshot.
    pub(crate) fn check(&self) -> Result<(), String> {
        for d in &self.dims {
            if d.levels.len() != d.hierarchy.depth() {
                return Err(format!("{}: level count does not match hierarchy", d.dimension));
            }
            for (level, col) in d.hierarchy.levels.iter().zip(&d.levels) {
                if col.keys.len() != self.rows {
                    return Err(format!("{}.{}: column length mismatch", d.dimension, level.name));
                }
                if col.keys.iter().any(|&k| k as usize >= col.dictionary.len()) {
                    return Err(format!("{}.{}: key outside dictionary", d.dimension, level.name));
                }
            }
        }
        for m in &self.measures {
            if m.values.len() != self.rows || m.unknown.len() != self.rows {
                return Err(format!("{}: column length mismatch", m.measure));
            }
            if m.measure == Measure::IncidentCount && m.unknown.count_ones() != 0 {
                return Err("incident_count carries unknown cells".into());
            }
        }
        Ok(())
    }
}

/// One fact row per incident, keyed on every dimension, with every measure.
pub fn build_facts(incidents: &[Incident], tables: &CodebookTables) -> Result<FactTable, DimensionError> {
    let mut dims: Vec<DimColumns> = Dimension::ALL
        .into_iter()
        .map(|dimension| {
            let hierarchy = dimension.hierarchy();
            let levels = vec![LevelColumn::default(); hierarchy.depth()];
            DimColumns { dimension, hierarchy, levels }
        })
        .collect();
    let mut measures: Vec<MeasureColumn> = Measure::ALL
        .into_iter()
        .map(|measure| MeasureColumn {
            measure,
            values: Vec::with_capacity(incidents.len()),
            unknown: UnknownMask::default(),
        })
        .collect();

    for inc in incidents {
        for d in &mut dims {
            let path = d.dimension.path(inc, tables)?;
            for (i, member) in path.into_members().into_iter().enumerate() {
                let hierarchy = &d.hierarchy;
                let col = &mut d.levels[i];
                let id = col.dictionary.intern(member, |m| hierarchy.label(i, m, tables));
                col.keys.push(id);
            }
        }
        for m in &mut measures {
            let cell = m.measure.cell(inc);
            m.values.push(cell.known().unwrap_or(0));
            m.unknown.push(!cell.is_known());
        }
    }

    Ok(FactTable {
        rows: incidents.len(),
        codebook_version: tables.version().to_string(),
        dims,
        measures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_synthetic, GeneratorProfile};

    fn tables() -> &'static CodebookTables {
        CodebookTables::bundled()
    }

    #[test]
    fn empty_table() {
        let t = build_facts(&[], tables()).unwrap();
        assert_eq!(t.rows(), 0);
        assert!(t.dims().iter().all(|d| d.levels.iter().all(|l| l.dictionary.is_empty())));
        t.check().unwrap();
    }

    #[test]
    fn unknown_measure_sets_mask() {
        let inc = Incident { country: 217, nkill: CodedCell::Unknown, nwound: CodedCell::Known(4), ..Incident::default() };
        let t = build_facts(&[inc], tables()).unwrap();
        let nkill = t.measure(Measure::NKill).unwrap();
        assert!(nkill.unknown.get(0));
        assert_eq!(nkill.cell(0), CodedCell::Unknown);
        assert_eq!(t.measure(Measure::NWound).unwrap().cell(0), CodedCell::Known(4));
        assert_eq!(t.measure(Measure::IncidentCount).unwrap().unknown.count_ones(), 0);
    }

    #[test]
    fn keys_match_dimension_paths() {
        let corpus = generate_synthetic(7, 5, &GeneratorProfile::default(), tables()).unwrap();
        let t = build_facts(&corpus, tables()).unwrap();
        assert_eq!(t.rows(), 5);
        for (row, inc) in corpus.iter().enumerate() {
            for d in t.dims() {
                let path = d.dimension.path(inc, tables()).unwrap();
                for (level, member) in d.levels.iter().zip(path.members()) {
                    assert_eq!(level.dictionary.member(level.keys[row]), member);
                }
            }
        }
    }

    #[test]
    fn ids_follow_first_occurrence() {
        let mk = |country| Incident { country, ..Incident::default() };
        let t = build_facts(&[mk(92), mk(217), mk(92)], tables()).unwrap();
        let country = &t.dim(Dimension::Space).unwrap().levels[1];
        assert_eq!(country.keys, [0, 1, 0]);
        assert_eq!(country.dictionary.label(1), "United States");
        assert_eq!(country.dictionary.lookup("india"), Some(0));
        assert_eq!(country.dictionary.lookup("217"), Some(1));
        assert_eq!(country.dictionary.lookup("Narnia"), None);
    }

    #[test]
    fn mask_bits_cross_word_boundary() {
        let mut mask = UnknownMask::default();
        for i in 0..130 {
            mask.push(i % 3 == 0);
        }
        assert_eq!(mask.len(), 130);
        assert!((0..130).all(|i| mask.get(i) == (i % 3 == 0)));
        assert_eq!(mask.count_ones(), 44);
    }
}
