//! Sort keys and directions shared by both execution paths.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::relation::{AttrType, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortKey {
    pub attribute: String,
    pub direction: Direction,
}

/// Ordered, non-empty list of distinct sort keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortSpec {
    keys: Vec<SortKey>,
}

impl SortSpec {
    pub fn new(keys: Vec<SortKey>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::InvalidSortSpec("no sort keys".into()));
        }
        let mut seen = HashSet::new();
        for k in &keys {
            if !seen.insert(k.attribute.as_str()) {
                return Err(Error::InvalidSortSpec(format!(
                    "duplicate sort key `{}`",
                    k.attribute
                )));
            }
        }
        Ok(Self { keys })
    }

    /// All keys ascending.
    pub fn ascending<S: AsRef<str>>(attrs: &[S]) -> Result<Self> {
        Self::new(
            attrs
                .iter()
                .map(|a| SortKey {
                    attribute: a.as_ref().to_string(),
                    direction: Direction::Asc,
                })
                .collect(),
        )
    }

    pub fn keys(&self) -> &[SortKey] {
        &self.keys
    }

    /// Resolves every key against `schema`.
    pub fn resolve(&self, schema: &Schema) -> Result<Vec<ResolvedKey>> {
        self.keys
            .iter()
            .map(|k| {
                let index = schema.require(&k.attribute)?;
                Ok(ResolvedKey {
                    index,
                    offset: schema.offset(index),
                    ty: schema.attribute(index).ty,
                    direction: k.direction,
                })
            })
            .collect()
    }
}

impl fmt::Display for SortSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.keys.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&k.attribute)?;
            if k.direction == Direction::Desc {
                f.write_str(":desc")?;
            }
        }
        Ok(())
    }
}

/// Parses `a,b:desc,c:asc`.
impl FromStr for SortSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let keys = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|part| {
                let (attr, dir) = match part.split_once(':') {
                    Some((a, d)) => (a.trim(), d.trim()),
                    None => (part, "asc"),
                };
                let direction = match dir.to_ascii_lowercase().as_str() {
                    "asc" => Direction::Asc,
                    "desc" => Direction::Desc,
                    other => {
                        return Err(Error::InvalidSortSpec(format!("unknown direction `{other}`")))
                    }
                };
                Ok(SortKey {
                    attribute: attr.to_string(),
                    direction,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SortSpec::new(keys)
    }
}

/// A sort key bound to a schema position.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedKey {
    pub index: usize,
    /// Byte offset inside a canonical row.
    pub offset: usize,
    pub ty: AttrType,
    pub direction: Direction,
}

/// Lexicographic comparison of two canonical rows on `keys`.
pub fn compare_rows(keys: &[ResolvedKey], a: &[u8], b: &[u8]) -> Ordering {
    for k in keys {
        let ord = match k.ty {
            AttrType::Int64 => {
                let x = i64::from_le_bytes(a[k.offset..k.offset + 8].try_into().unwrap());
                let y = i64::from_le_bytes(b[k.offset..k.offset + 8].try_into().unwrap());
                x.cmp(&y)
            }
            AttrType::Bytes(w) => a[k.offset..k.offset + w].cmp(&b[k.offset..k.offset + w]),
        };
        let ord = match k.direction {
            Direction::Asc => ord,
            Direction::Desc => ord.reverse(),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}
