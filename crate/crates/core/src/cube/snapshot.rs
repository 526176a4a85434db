//! Binary snapshot container. The byte layout is described in
//! `docs/snapshot-format.md`; all integers are little-endian.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::facts::{build_facts, DimColumns, Dictionary, FactTable, LevelColumn, MeasureColumn, UnknownMask};
use super::measures::Measure;
use crate::codebook::CodebookTables;
use crate::dimensions::{Dimension, DimensionError, Hierarchy, Level, LevelDomain, Member};
use crate::ingest::Incident;

pub const MAGIC: &[u8; 8] = b"INCUBE\0\0";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file")]
    BadMagic,
    #[error("snapshot truncated")]
    Truncated,
    #[error("snapshot checksum mismatch")]
    Checksum,
    #[error("unsupported snapshot format version {0}")]
    UnsupportedFormat(u32),
    #[error("snapshot built with codebook {found:?}, expected {expected:?}")]
    CodebookMismatch { found: String, expected: String },
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
}

impl SnapshotError {
    /// True for errors that mean "wrong version" rather than "bad bytes".
    pub fn is_version_mismatch(&self) -> bool {
        matches!(self, SnapshotError::UnsupportedFormat(_) | SnapshotError::CodebookMismatch { .. })
    }
}

/// A built cube plus the incidents behind it, which the miners need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub table: FactTable,
    pub incidents: Vec<Incident>,
}

impl Snapshot {
    pub fn build(incidents: Vec<Incident>, tables: &CodebookTables) -> Result<Self, DimensionError> {
        Ok(Self { table: build_facts(&incidents, tables)?, incidents })
    }

    pub fn hierarchies(&self) -> Vec<Hierarchy> {
        self.table.hierarchies()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);
        w.str(&self.table.codebook_version);
        w.u64(self.table.rows as u64);

        w.u32(self.table.dims.len() as u32);
        for d in &self.table.dims {
            w.str(d.dimension.name());
            w.str(&d.hierarchy.name);
            w.u32(d.hierarchy.levels.len() as u32);
            for (level, col) in d.hierarchy.levels.iter().zip(&d.levels) {
                w.str(&level.name);
                w.str(&serde_json::to_string(&level.domain).expect("level domain serializes"));
                w.u32(col.dictionary.len() as u32);
                for (_, member, label) in col.dictionary.iter() {
                    match member {
                        Member::Code(c) => {
                            w.u8(0);
                            w.i64(*c);
                        }
                        Member::Text(t) => {
                            w.u8(1);
                            w.str(t);
                        }
                        Member::Unknown => w.u8(2),
                    }
                    w.str(label);
                }
                col.keys.iter().for_each(|&k| w.u32(k));
            }
        }

        w.u32(self.table.measures.len() as u32);
        for m in &self.table.measures {
            w.str(m.measure.name());
            m.values.iter().for_each(|&v| w.i64(v));
            m.unknown.words().iter().for_each(|&word| w.u64(word));
        }

        let incidents = serde_json::to_vec(&self.incidents).expect("incidents serialize");
        w.u64(incidents.len() as u64);
        w.buf.extend_from_slice(&incidents);

        let digest = Sha256::digest(&w.buf);
        w.buf.extend_from_slice(&digest);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8], tables: &CodebookTables) -> Result<Self, SnapshotError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(if MAGIC.starts_with(bytes) { SnapshotError::Truncated } else { SnapshotError::BadMagic });
        }
        if bytes.len() < MAGIC.len() + 4 + DIGEST_LEN {
            return Err(SnapshotError::Truncated);
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(SnapshotError::Checksum);
        }

        let mut r = Reader { buf: body, pos: MAGIC.len() };
        let format = r.u32()?;
        if format != FORMAT_VERSION {
            return Err(SnapshotError::UnsupportedFormat(format));
        }
        let codebook_version = r.str()?;
        if codebook_version != tables.version() {
            return Err(SnapshotError::CodebookMismatch {
                found: codebook_version,
                expected: tables.version().to_string(),
            });
        }
        let rows = usize::try_from(r.u64()?).map_err(|_| corrupt("row count"))?;

        let ndims = r.u32()?;
        let mut dims = Vec::new();
        for _ in 0..ndims {
            let dimension: Dimension = r.str()?.parse().map_err(|_| corrupt("dimension name"))?;
            let name = r.str()?;
            let nlevels = r.u32()?;
            let mut levels = Vec::new();
            let mut columns = Vec::new();
            for _ in 0..nlevels {
                let level_name = r.str()?;
                let domain: LevelDomain =
                    serde_json::from_str(&r.str()?).map_err(|_| corrupt("level domain"))?;
                let entries = r.u32()?;
                let mut members = Vec::new();
                let mut labels = Vec::new();
                for _ in 0..entries {
                    members.push(match r.u8()? {
                        0 => Member::Code(r.i64()?),
                        1 => Member::Text(r.str()?),
                        2 => Member::Unknown,
                        _ => return Err(corrupt("member tag")),
                    });
                    labels.push(r.str()?);
                }
                let dictionary =
                    Dictionary::from_parts(members, labels).ok_or_else(|| corrupt("dictionary"))?;
                let keys = (0..rows).map(|_| r.u32()).collect::<Result<_, _>>()?;
                levels.push(Level { name: level_name, domain });
                columns.push(LevelColumn { dictionary, keys });
            }
            dims.push(DimColumns { dimension, hierarchy: Hierarchy { name, levels }, levels: columns });
        }

        let nmeasures = r.u32()?;
        let mut measures = Vec::new();
        for _ in 0..nmeasures {
            let measure: Measure = r.str()?.parse().map_err(|_| corrupt("measure name"))?;
            let values = (0..rows).map(|_| r.i64()).collect::<Result<_, _>>()?;
            let words = (0..rows.div_ceil(64)).map(|_| r.u64()).collect::<Result<_, _>>()?;
            let unknown = UnknownMask::from_words(rows, words).ok_or_else(|| corrupt("unknown mask"))?;
            measures.push(MeasureColumn { measure, values, unknown });
        }

        let len = usize::try_from(r.u64()?).map_err(|_| corrupt("incident length"))?;
        let incidents: Vec<Incident> =
            serde_json::from_slice(r.take(len)?).map_err(|e| corrupt(&format!("incidents: {e}")))?;
        if r.pos != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        if incidents.len() != rows {
            return Err(corrupt("incident count differs from row count"));
        }

        let table = FactTable { rows, codebook_version, dims, measures };
        table.check().map_err(SnapshotError::Corrupt)?;
        Ok(Self { table, incidents })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, tables: &CodebookTables) -> Result<Self, SnapshotError> {
        Self::from_bytes(&fs::read(path)?, tables)
    }
}

fn corrupt(what: &str) -> SnapshotError {
    SnapshotError::Corrupt(what.to_string())
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(SnapshotError::Truncated)?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], SnapshotError> {
        Ok(self.take(N)?.try_into().expect("slice has length N"))
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        self.array().map(u64::from_le_bytes)
    }

    fn i64(&mut self) -> Result<i64, SnapshotError> {
        self.array().map(i64::from_le_bytes)
    }

    fn str(&mut self) -> Result<String, SnapshotError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| corrupt("string is not UTF-8"))
    }
}

/// Save a fact table and its incidents.
pub fn snapshot_save(snapshot: &Snapshot, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    snapshot.save(path)
}

/// Load and verify a snapshot against the codebook in use.
pub fn snapshot_load(path: impl AsRef<Path>, tables: &CodebookTables) -> Result<Snapshot, SnapshotError> {
    Snapshot::load(path, tables)
}
