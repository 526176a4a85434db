use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::transactions::{incident_items, ItemDim};
use super::MiningError;
use crate::codebook::{CodebookTables, EventId};
use crate::ingest::Incident;

/// An ordered list of item sets.
pub type Sequence = Vec<BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequentialPattern {
    pub elements: Vec<Vec<String>>,
    /// Number of entities whose sequence contains the pattern.
    pub support: u64,
}

impl SequentialPattern {
    pub fn item_count(&self) -> usize {
        self.elements.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceMining {
    /// Dimensions whose labels identify an entity.
    pub key: Vec<ItemDim>,
    pub entities: usize,
    pub patterns: Vec<SequentialPattern>,
}

/// Whether `pattern` occurs in `sequence` with order kept and gaps allowed.
/// Greedy earliest matching is exact for this containment relation.
pub fn contains(sequence: &[BTreeSet<String>], pattern: &[BTreeSet<String>]) -> bool {
    let mut rest = sequence.iter();
    pattern.iter().all(|want| rest.by_ref().any(|have| want.is_subset(have)))
}

/// End index of the earliest match of `pattern` in `sequence`.
fn earliest_end(sequence: &[BTreeSet<String>], pattern: &[BTreeSet<String>]) -> Option<usize> {
    let mut end = None;
    let mut from = 0;
    for want in pattern {
        let k = (from..sequence.len()).find(|&k| want.is_subset(&sequence[k]))?;
        end = Some(k);
        from = k + 1;
    }
    end
}

/// Pattern growth over a sequence database: each frequent pattern is
/// extended by one item, either as a new element or inside its last element.
/// Every pattern keeps the entities supporting it and where its earliest
/// match ends there, so extensions only look at those entities.
///
/// `max_items` caps the total item count of a pattern. Long histories over a
/// small item alphabet make the unbounded output exponential in length.
pub fn mine_sequence_db(
    db: &[Sequence],
    min_support: u64,
    max_items: Option<usize>,
) -> Result<Vec<SequentialPattern>, MiningError> {
    if min_support < 1 {
        return Err(MiningError::Threshold("min_support must be at least 1".into()));
    }
    if max_items == Some(0) {
        return Err(MiningError::Threshold("max_items must be at least 1".into()));
    }
    let min = usize::try_from(min_support).unwrap_or(usize::MAX);

    // (pattern, [(entity, end of earliest match)])
    type Occurrences = Vec<(usize, usize)>;
    let mut starts: BTreeMap<&String, Occurrences> = BTreeMap::new();
    for (ent, s) in db.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for (k, element) in s.iter().enumerate() {
            for item in element {
                if seen.insert(item) {
                    starts.entry(item).or_default().push((ent, k));
                }
            }
        }
    }
    let items: Vec<&String> = starts.iter().filter(|(_, o)| o.len() >= min).map(|(i, _)| *i).collect();
    let mut level: Vec<(Sequence, Occurrences)> = starts
        .into_iter()
        .filter(|(_, o)| o.len() >= min)
        .map(|(i, o)| (vec![BTreeSet::from([i.clone()])], o))
        .collect();

    let mut found = Vec::new();
    let mut size = 1;
    while !level.is_empty() {
        let mut next = Vec::new();
        if max_items.is_some_and(|m| size >= m) {
            found.extend(level.into_iter().map(|(p, occ)| (p, occ.len() as u64)));
            break;
        }
        for (pattern, occurrences) in &level {
            let mut s_ext: BTreeMap<&String, Occurrences> = BTreeMap::new();
            for &(ent, end) in occurrences {
                let mut seen = BTreeSet::new();
                for (k, element) in db[ent].iter().enumerate().skip(end + 1) {
                    for item in element {
                        if seen.insert(item) {
                            s_ext.entry(item).or_default().push((ent, k));
                        }
                    }
                }
            }
            for (item, occ) in s_ext.into_iter().filter(|(_, o)| o.len() >= min) {
                let mut p = pattern.clone();
                p.push(BTreeSet::from([item.clone()]));
                next.push((p, occ));
            }

            let last_max = pattern.last().and_then(|e| e.iter().next_back()).expect("patterns are non-empty");
            for &item in items.iter().filter(|&&i| i > last_max) {
                let mut p = pattern.clone();
                p.last_mut().expect("non-empty").insert(item.clone());
                let occ: Occurrences = occurrences
                    .iter()
                    .filter_map(|&(ent, _)| earliest_end(&db[ent], &p).map(|k| (ent, k)))
                    .collect();
                if occ.len() >= min {
                    next.push((p, occ));
                }
            }
        }
        found.extend(level.into_iter().map(|(p, occ)| (p, occ.len() as u64)));
        level = next;
        size += 1;
    }

    let mut out: Vec<SequentialPattern> = found
        .into_iter()
        .map(|(p, support)| SequentialPattern {
            elements: p.into_iter().map(|e| e.into_iter().collect()).collect(),
            support,
        })
        .collect();
    out.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then_with(|| a.item_count().cmp(&b.item_count()))
            .then_with(|| a.elements.cmp(&b.elements))
    });
    Ok(out)
}

/// Group incidents by entity key, order each group by event id, and turn
/// every incident into one element of its entity's sequence. Incidents with
/// no event id, an unknown key part, or no items are left out.
pub fn build_sequences(
    incidents: &[Incident],
    key: &[ItemDim],
    items: &[ItemDim],
    tables: &CodebookTables,
) -> BTreeMap<Vec<String>, Sequence> {
    let mut grouped: BTreeMap<Vec<String>, Vec<(EventId, BTreeSet<String>)>> = BTreeMap::new();
    for inc in incidents {
        let Some(id) = inc.eventid else { continue };
        let mut entity = Vec::with_capacity(key.len());
        for d in key {
            match d.labels(inc, tables).into_iter().next() {
                Some(label) => entity.push(label),
                None => break,
            }
        }
        if entity.len() != key.len() {
            continue;
        }
        let element = incident_items(inc, items, tables);
        if !element.is_empty() {
            grouped.entry(entity).or_default().push((id, element));
        }
    }
    grouped
        .into_iter()
        .map(|(entity, mut events)| {
            events.sort_by_key(|(id, _)| *id);
            (entity, events.into_iter().map(|(_, e)| e).collect())
        })
        .collect()
}

/// Frequent incident sequences per entity (for example per perpetrator
/// group), each supported by at least `min_support` entities.
pub fn mine_sequences(
    incidents: &[Incident],
    key: &[ItemDim],
    items: &[ItemDim],
    min_support: u64,
    max_items: Option<usize>,
    tables: &CodebookTables,
) -> Result<SequenceMining, MiningError> {
    if key.is_empty() || items.is_empty() {
        return Err(MiningError::UnknownDim("sequence key and item dimensions must be non-empty".into()));
    }
    let db: Vec<Sequence> = build_sequences(incidents, key, items, tables).into_values().collect();
    Ok(SequenceMining { key: key.to_vec(), entities: db.len(), patterns: mine_sequence_db(&db, min_support, max_items)? })
}
