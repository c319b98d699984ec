//! Binary relation files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes   "TLREL001"
//! attrs     u32
//! per attr  u16 name length, name (UTF-8), u8 type (0 Int64, 1 Bytes), u32 width
//! rows      u64
//! columns   each column's canonical values back to back, in schema order
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::relation::{AttrType, Attribute, Column, Relation, Schema};

pub const MAGIC: &[u8; 8] = b"TLREL001";

pub fn write_relation<W: Write>(mut w: W, rel: &Relation) -> Result<()> {
    w.write_all(MAGIC)?;
    let attrs = rel.schema().attributes();
    w.write_all(&(attrs.len() as u32).to_le_bytes())?;
    for a in attrs {
        let name = a.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| Error::Format(format!("attribute name `{}` too long", a.name)))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name)?;
        let (tag, width) = match a.ty {
            AttrType::Int64 => (0u8, 8u32),
            AttrType::Bytes(width) => (1u8, width as u32),
        };
        w.write_all(&[tag])?;
        w.write_all(&width.to_le_bytes())?;
    }
    w.write_all(&(rel.row_count() as u64).to_le_bytes())?;
    for c in rel.columns() {
        match c {
            Column::Int64(v) => {
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Column::Bytes { data, .. } => w.write_all(data)?,
        }
    }
    w.flush()?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(b)
}

fn truncated(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format("relation file is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_relation<R: Read>(mut r: R) -> Result<Relation> {
    if &take::<8>(&mut r)? != MAGIC {
        return Err(Error::Format("not a relation file (bad magic)".into()));
    }
    let count = u32::from_le_bytes(take(&mut r)?) as usize;
    let mut attrs = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = u16::from_le_bytes(take(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("attribute name is not UTF-8".into()))?;
        let [tag] = take::<1>(&mut r)?;
        let width = u32::from_le_bytes(take(&mut r)?) as usize;
        let ty = match (tag, width) {
            (0, 8) => AttrType::Int64,
            (1, w) => AttrType::Bytes(w),
            _ => return Err(Error::Format(format!("bad type tag {tag} / width {width}"))),
        };
        attrs.push(Attribute::new(name, ty));
    }
    let schema = Schema::new(attrs)?;
    let rows = u64::from_le_bytes(take(&mut r)?) as usize;
    let mut columns = Vec::with_capacity(schema.len());
    for a in schema.attributes() {
        let bytes = rows
            .checked_mul(a.ty.width())
            .ok_or_else(|| Error::Format("row count overflows".into()))?;
        let mut data = Vec::new();
        (&mut r).take(bytes as u64).read_to_end(&mut data)?;
        if data.len() != bytes {
            return Err(Error::Format("relation file is truncated".into()));
        }
        columns.push(match a.ty {
            AttrType::Int64 => Column::Int64(
                data.chunks_exact(8)
                    .map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            ),
            AttrType::Bytes(width) => Column::Bytes { width, data },
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after relation".into()));
    }
    Relation::new(schema, columns, rows)
}

pub fn save_relation(path: impl AsRef<Path>, rel: &Relation) -> Result<()> {
    write_relation(BufWriter::new(File::create(path)?), rel)
}

pub fn load_relation(path: impl AsRef<Path>) -> Result<Relation> {
    read_relation(BufReader::new(File::open(path)?))
}
