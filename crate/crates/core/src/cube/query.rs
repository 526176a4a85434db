use serde::{Deserialize, Serialize};

use super::facts::FactTable;
use super::measures::Measure;
use super::QueryError;
use crate::codebook::TriState;
use crate::dimensions::{Dimension, Member};

/// Group by the first `depth` levels of a hierarchy (depth 1 = top level).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupBy {
    pub hierarchy: String,
    #[serde(default = "one")]
    pub depth: usize,
}

fn one() -> usize {
    1
}

impl GroupBy {
    pub fn new(hierarchy: Dimension, depth: usize) -> Self {
        Self { hierarchy: hierarchy.name().to_string(), depth }
    }
}

/// Keep facts whose member at `dim` is one of `members`. `dim` names a
/// hierarchy (its top level), a `hierarchy.level` pair, or a bare level name.
/// `tristate` adds Yes/No/Unknown for criterion and other tri-state dims.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filter {
    pub dim: String,
    #[serde(default)]
    pub members: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tristate: Option<String>,
}

impl Filter {
    pub fn members(dim: impl Into<String>, members: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { dim: dim.into(), members: members.into_iter().map(Into::into).collect(), tristate: None }
    }

    pub fn tristate(dim: Dimension, value: TriState) -> Self {
        Self { dim: dim.name().to_string(), members: Vec::new(), tristate: Some(value.label().to_string()) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellQuery {
    #[serde(default)]
    pub group_by: Vec<GroupBy>,
    #[serde(default)]
    pub filters: Vec<Filter>,
    /// Empty means `incident_count` only.
    #[serde(default)]
    pub measures: Vec<String>,
}

/// A level inside a hierarchy, resolved from user text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRef {
    pub dimension: Dimension,
    pub level: usize,
}

impl LevelRef {
    pub fn parse(text: &str) -> Result<Self, QueryError> {
        let unknown = || QueryError::UnknownDimension(text.to_string());
        if let Some((dim, level)) = text.split_once('.') {
            let dimension: Dimension = dim.parse().map_err(|_| unknown())?;
            let level = dimension.hierarchy().level_index(level).ok_or_else(unknown)?;
            return Ok(Self { dimension, level });
        }
        if let Ok(dimension) = text.parse::<Dimension>() {
            return Ok(Self { dimension, level: 0 });
        }
        Dimension::ALL
            .into_iter()
            .find_map(|d| d.hierarchy().level_index(text).map(|level| Self { dimension: d, level }))
            .ok_or_else(unknown)
    }

    pub fn name(&self) -> String {
        format!("{}.{}", self.dimension, self.dimension.hierarchy().levels[self.level].name)
    }
}

fn parse_tristate(text: &str) -> Result<TriState, QueryError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "yes" | "1" | "true" => Ok(TriState::Yes),
        "no" | "0" | "false" => Ok(TriState::No),
        "unknown" | "-9" => Ok(TriState::Unknown),
        _ => Err(QueryError::BadTriState(text.to_string())),
    }
}

pub(crate) struct CompiledFilter {
    pub dim: usize,
    pub level: usize,
    pub allowed: Vec<bool>,
}

pub(crate) struct Plan {
    /// (dimension column index, depth)
    pub groups: Vec<(usize, usize)>,
    pub filters: Vec<CompiledFilter>,
    pub measures: Vec<Measure>,
}

impl CellQuery {
    pub fn group(mut self, hierarchy: Dimension, depth: usize) -> Self {
        self.group_by.push(GroupBy::new(hierarchy, depth));
        self
    }

    pub fn filter(mut self, filter: Filter) -> Self {
        self.filters.push(filter);
        self
    }

    pub fn measure(mut self, measure: Measure) -> Self {
        self.measures.push(measure.name().to_string());
        self
    }

    /// Parsed measure list, defaulting to `incident_count`.
    pub fn measure_list(&self) -> Result<Vec<Measure>, QueryError> {
        if self.measures.is_empty() {
            return Ok(vec![Measure::IncidentCount]);
        }
        let mut out = Vec::with_capacity(self.measures.len());
        for name in &self.measures {
            let m: Measure = name.parse()?;
            if out.contains(&m) {
                return Err(QueryError::Duplicate(m.name().to_string()));
            }
            out.push(m);
        }
        Ok(out)
    }

    /// The query as executed: canonical names and explicit measures.
    pub fn effective(&self) -> Result<CellQuery, QueryError> {
        let group_by = self
            .group_by
            .iter()
            .map(|g| Ok(GroupBy::new(g.hierarchy.parse()?, g.depth)))
            .collect::<Result<_, QueryError>>()?;
        let filters = self
            .filters
            .iter()
            .map(|f| Ok(Filter { dim: LevelRef::parse(&f.dim)?.name(), ..f.clone() }))
            .collect::<Result<_, QueryError>>()?;
        let measures = self.measure_list()?.into_iter().map(String::from).collect();
        Ok(CellQuery { group_by, filters, measures })
    }

    fn groups(&self) -> Result<Vec<(Dimension, usize)>, QueryError> {
        let mut out: Vec<(Dimension, usize)> = Vec::with_capacity(self.group_by.len());
        for g in &self.group_by {
            let dim: Dimension = g.hierarchy.parse()?;
            let max = dim.hierarchy().depth();
            if g.depth == 0 || g.depth > max {
                return Err(QueryError::DepthOutOfRange { hierarchy: dim.name().into(), depth: g.depth, max });
            }
            if out.iter().any(|(d, _)| *d == dim) {
                return Err(QueryError::Duplicate(dim.name().to_string()));
            }
            out.push((dim, g.depth));
        }
        Ok(out)
    }

    /// Column headers of the axis part of a result row.
    pub fn axis_names(&self) -> Result<Vec<String>, QueryError> {
        Ok(self
            .groups()?
            .into_iter()
            .flat_map(|(dim, depth)| {
                (0..depth).map(move |level| LevelRef { dimension: dim, level }.name())
            })
            .collect())
    }

    pub(crate) fn plan(&self, table: &FactTable) -> Result<Plan, QueryError> {
        let dim_index = |d: Dimension| {
            table
                .dims()
                .iter()
                .position(|c| c.dimension == d)
                .ok_or_else(|| QueryError::UnknownDimension(d.name().to_string()))
        };
        let groups = self
            .groups()?
            .into_iter()
            .map(|(d, depth)| Ok((dim_index(d)?, depth)))
            .collect::<Result<_, QueryError>>()?;

        let mut filters = Vec::with_capacity(self.filters.len());
        for f in &self.filters {
            let at = LevelRef::parse(&f.dim)?;
            let dim = dim_index(at.dimension)?;
            let dictionary = &table.dims()[dim].levels[at.level].dictionary;
            if f.members.is_empty() && f.tristate.is_none() {
                return Err(QueryError::EmptyMemberSet(f.dim.clone()));
            }
            let mut allowed = vec![false; dictionary.len()];
            for name in &f.members {
                let id = dictionary.lookup(name).ok_or_else(|| QueryError::UnknownMember {
                    dim: at.name(),
                    member: name.clone(),
                })?;
                allowed[id as usize] = true;
            }
            if let Some(t) = &f.tristate {
                if !at.dimension.is_tri_state() {
                    return Err(QueryError::NotTriState(at.name()));
                }
                let member = match parse_tristate(t)? {
                    TriState::Unknown => Member::Unknown,
                    known => Member::Code(known.code()),
                };
                // A valid value absent from the data simply matches nothing.
                if let Some(id) = dictionary.id_of(&member) {
                    allowed[id as usize] = true;
                }
            }
            filters.push(CompiledFilter { dim, level: at.level, allowed });
        }
        Ok(Plan { groups, filters, measures: self.measure_list()? })
    }

    fn position(&self, hierarchy: Dimension) -> Result<usize, QueryError> {
        self.group_by
            .iter()
            .position(|g| g.hierarchy.parse::<Dimension>().is_ok_and(|d| d == hierarchy))
            .ok_or_else(|| QueryError::NotGrouped(hierarchy.name().to_string()))
    }
}

/// One level coarser along `hierarchy`.
pub fn rollup(q: &CellQuery, hierarchy: Dimension) -> Result<CellQuery, QueryError> {
    let i = q.position(hierarchy)?;
    let mut out = q.clone();
    if out.group_by[i].depth <= 1 {
        return Err(QueryError::RollupPastRoot(hierarchy.name().to_string()));
    }
    out.group_by[i].depth -= 1;
    Ok(out)
}

/// One level finer along `hierarchy`.
pub fn drilldown(q: &CellQuery, hierarchy: Dimension) -> Result<CellQuery, QueryError> {
    let i = q.position(hierarchy)?;
    let mut out = q.clone();
    if out.group_by[i].depth >= hierarchy.hierarchy().depth() {
        return Err(QueryError::DrilldownPastLeaf(hierarchy.name().to_string()));
    }
    out.group_by[i].depth += 1;
    Ok(out)
}

fn check_members(table: &FactTable, at: LevelRef, members: &[String]) -> Result<(), QueryError> {
    let dictionary = &table
        .dim(at.dimension)
        .ok_or_else(|| QueryError::UnknownDimension(at.dimension.name().to_string()))?
        .levels[at.level]
        .dictionary;
    match members.iter().find(|m| dictionary.lookup(m).is_none()) {
        Some(missing) => Err(QueryError::UnknownMember { dim: at.name(), member: missing.clone() }),
        None => Ok(()),
    }
}

/// Fix one member. The hierarchy leaves the group-by when it was grouped no
/// deeper than the sliced level; a deeper grouping is kept.
pub fn slice(q: &CellQuery, table: &FactTable, dim: &str, member: &str) -> Result<CellQuery, QueryError> {
    let at = LevelRef::parse(dim)?;
    let members = vec![member.to_string()];
    check_members(table, at, &members)?;
    let mut out = q.clone();
    out.group_by.retain(|g| {
        g.hierarchy.parse::<Dimension>().map_or(true, |d| d != at.dimension || g.depth > at.level + 1)
    });
    out.filters.push(Filter { dim: at.name(), members, tristate: None });
    Ok(out)
}

/// Restrict to a member set; the group-by is untouched.
pub fn dice(q: &CellQuery, table: &FactTable, dim: &str, members: &[String]) -> Result<CellQuery, QueryError> {
    let at = LevelRef::parse(dim)?;
    if members.is_empty() {
        return Err(QueryError::EmptyMemberSet(dim.to_string()));
    }
    check_members(table, at, members)?;
    let mut out = q.clone();
    out.filters.push(Filter { dim: at.name(), members: members.to_vec(), tristate: None });
    Ok(out)
}

/// Swap the axis order of two grouped hierarchies.
pub fn pivot(q: &CellQuery, a: Dimension, b: Dimension) -> Result<CellQuery, QueryError> {
    let (i, j) = (q.position(a)?, q.position(b)?);
    let mut out = q.clone();
    out.group_by.swap(i, j);
    Ok(out)
}
