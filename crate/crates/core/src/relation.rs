//! Schemas, columnar relations and the canonical row encoding.
//!
//! A [`Relation`] stores one contiguous column per attribute. Both execution
//! paths consume and produce relations; the row path flattens them into
//! canonical rows (fields in schema order, `Int64` as 8 little-endian bytes,
//! `Bytes(w)` as the raw `w` bytes) while the tensor path works on the columns
//! directly.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::prefetch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttrType {
    Int64,
    /// Fixed-width opaque byte field.
    Bytes(usize),
}

impl AttrType {
    pub fn width(self) -> usize {
        match self {
            AttrType::Int64 => 8,
            AttrType::Bytes(w) => w,
        }
    }
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Int64 => f.write_str("Int64"),
            AttrType::Bytes(w) => write!(f, "Bytes({w})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Attribute {
    pub name: String,
    pub ty: AttrType,
}

impl Attribute {
    pub fn new(name: impl Into<String>, ty: AttrType) -> Self {
        Self {
            name: name.into(),
            ty,
        }
    }
}

/// Ordered, non-empty list of uniquely named attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    attributes: Vec<Attribute>,
    offsets: Vec<usize>,
    row_width: usize,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidSchema("at least one attribute required".into()));
        }
        let mut seen = HashSet::new();
        for a in &attributes {
            if a.name.is_empty() {
                return Err(Error::InvalidSchema("empty attribute name".into()));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute `{}`",
                    a.name
                )));
            }
        }
        let mut offsets = Vec::with_capacity(attributes.len());
        let mut row_width = 0;
        for a in &attributes {
            offsets.push(row_width);
            row_width += a.ty.width();
        }
        Ok(Self {
            attributes,
            offsets,
            row_width,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, idx: usize) -> &Attribute {
        &self.attributes[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Index of `name`, or `UnknownAttribute`.
    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Index of `name`, which must be an `Int64` attribute.
    pub fn require_int(&self, name: &str) -> Result<usize> {
        let idx = self.require(name)?;
        match self.attributes[idx].ty {
            AttrType::Int64 => Ok(idx),
            other => Err(Error::TypeMismatch {
                name: name.to_string(),
                expected: "Int64",
                found: other.to_string(),
            }),
        }
    }

    /// Byte offset of attribute `idx` inside a canonical row.
    pub fn offset(&self, idx: usize) -> usize {
        self.offsets[idx]
    }

    /// Width in bytes of one canonical row.
    pub fn row_width(&self) -> usize {
        self.row_width
    }
}

/// Output schema of an equi-join: every left attribute, then every right
/// attribute except the right join key. A right attribute whose name clashes
/// with an earlier one gets `_right` appended until unique.
pub fn join_output_schema(left: &Schema, right: &Schema, key: &str) -> Result<Schema> {
    left.require_int(key)?;
    let right_key = right.require_int(key)?;
    let mut attrs: Vec<Attribute> = left.attributes().to_vec();
    for (i, a) in right.attributes().iter().enumerate() {
        if i == right_key {
            continue;
        }
        let mut name = a.name.clone();
        while attrs.iter().any(|x| x.name == name) {
            name.push_str("_right");
        }
        attrs.push(Attribute::new(name, a.ty));
    }
    Schema::new(attrs)
}

#[derive(Debug, Clone, Copy)]
struct JoinField {
    from_left: bool,
    /// Attribute index in the source schema.
    column: usize,
    offset: usize,
    width: usize,
}

/// Where each output field of an equi-join comes from in the canonical
/// left and right input rows.
#[derive(Debug, Clone)]
pub struct JoinLayout {
    fields: Vec<JoinField>,
    left_key_offset: usize,
    right_key_offset: usize,
}

impl JoinLayout {
    pub fn new(left: &Schema, right: &Schema, key: &str) -> Result<(Schema, JoinLayout)> {
        let schema = join_output_schema(left, right, key)?;
        let left_key = left.require_int(key)?;
        let right_key = right.require_int(key)?;
        let mut fields = Vec::with_capacity(schema.len());
        for (i, a) in left.attributes().iter().enumerate() {
            fields.push(JoinField {
                from_left: true,
                column: i,
                offset: left.offset(i),
                width: a.ty.width(),
            });
        }
        for (i, a) in right.attributes().iter().enumerate() {
            if i != right_key {
                fields.push(JoinField {
                    from_left: false,
                    column: i,
                    offset: right.offset(i),
                    width: a.ty.width(),
                });
            }
        }
        let layout = JoinLayout {
            fields,
            left_key_offset: left.offset(left_key),
            right_key_offset: right.offset(right_key),
        };
        Ok((schema, layout))
    }

    pub fn left_key_offset(&self) -> usize {
        self.left_key_offset
    }

    pub fn right_key_offset(&self) -> usize {
        self.right_key_offset
    }
}

/// Reads the little-endian `Int64` at `offset` of a canonical row.
#[inline]
pub fn read_i64(row: &[u8], offset: usize) -> i64 {
    i64::from_le_bytes(row[offset..offset + 8].try_into().expect("8-byte field"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Int64(Vec<i64>),
    Bytes { width: usize, data: Vec<u8> },
}

impl Column {
    pub fn empty_for(ty: AttrType, capacity: usize) -> Self {
        match ty {
            AttrType::Int64 => Column::Int64(Vec::with_capacity(capacity)),
            AttrType::Bytes(width) => Column::Bytes {
                width,
                data: Vec::with_capacity(capacity * width),
            },
        }
    }

    pub fn attr_type(&self) -> AttrType {
        match self {
            Column::Int64(_) => AttrType::Int64,
            Column::Bytes { width, .. } => AttrType::Bytes(*width),
        }
    }

    /// Number of values, or `None` for a zero-width byte column (whose
    /// length is carried by the relation alone).
    fn len_hint(&self) -> Option<usize> {
        match self {
            Column::Int64(v) => Some(v.len()),
            Column::Bytes { width: 0, .. } => None,
            Column::Bytes { width, data } => Some(data.len() / width),
        }
    }

    pub fn as_int(&self) -> Option<&[i64]> {
        match self {
            Column::Int64(v) => Some(v),
            Column::Bytes { .. } => None,
        }
    }

    /// Value bytes of row `row` (canonical encoding for `Int64`).
    pub fn write_value(&self, row: usize, out: &mut Vec<u8>) {
        match self {
            Column::Int64(v) => out.extend_from_slice(&v[row].to_le_bytes()),
            Column::Bytes { width, data } => {
                out.extend_from_slice(&data[row * width..(row + 1) * width])
            }
        }
    }

    pub fn bytes_at(&self, row: usize) -> &[u8] {
        match self {
            Column::Int64(_) => panic!("bytes_at on an Int64 column"),
            Column::Bytes { width, data } => &data[row * width..(row + 1) * width],
        }
    }

    /// Column-at-a-time gather.
    pub fn gather(&self, indices: &[u32]) -> Column {
        let ahead = |k: usize| indices.get(k + prefetch::DISTANCE).map(|&i| i as usize);
        match self {
            Column::Int64(v) => {
                let mut out = Vec::with_capacity(indices.len());
                for (k, &i) in indices.iter().enumerate() {
                    if let Some(j) = ahead(k) {
                        prefetch::read(v.as_ptr().wrapping_add(j));
                    }
                    out.push(v[i as usize]);
                }
                Column::Int64(out)
            }
            Column::Bytes { width, data } => {
                let w = *width;
                let mut out = Vec::with_capacity(indices.len() * w);
                if w > 0 {
                    for (k, &i) in indices.iter().enumerate() {
                        if let Some(j) = ahead(k) {
                            prefetch::read_span(data.as_ptr().wrapping_add(j * w), w);
                        }
                        let s = i as usize * w;
                        out.extend_from_slice(&data[s..s + w]);
                    }
                }
                Column::Bytes {
                    width: w,
                    data: out,
                }
            }
        }
    }

    /// Heap bytes held by this column.
    pub fn allocated_bytes(&self) -> u64 {
        match self {
            Column::Int64(v) => (v.capacity() * 8) as u64,
            Column::Bytes { data, .. } => data.capacity() as u64,
        }
    }

    fn push_canonical(&mut self, bytes: &[u8]) {
        match self {
            Column::Int64(v) => v.push(i64::from_le_bytes(bytes.try_into().expect("8-byte field"))),
            Column::Bytes { data, .. } => data.extend_from_slice(bytes),
        }
    }
}

/// A relation: schema plus one value sequence per attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    schema: Schema,
    columns: Vec<Column>,
    row_count: usize,
}

impl Relation {
    pub fn new(schema: Schema, columns: Vec<Column>, row_count: usize) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} columns for {} attributes",
                columns.len(),
                schema.len()
            )));
        }
        for (a, c) in schema.attributes().iter().zip(&columns) {
            if c.attr_type() != a.ty {
                return Err(Error::TypeMismatch {
                    name: a.name.clone(),
                    expected: match a.ty {
                        AttrType::Int64 => "Int64",
                        AttrType::Bytes(_) => "Bytes",
                    },
                    found: c.attr_type().to_string(),
                });
            }
            if let Some(len) = c.len_hint() {
                if len != row_count {
                    return Err(Error::ShapeMismatch(format!(
                        "column `{}` has {} values, expected {}",
                        a.name, len, row_count
                    )));
                }
            }
            if let Column::Bytes { width, data } = c {
                if *width > 0 && data.len() % width != 0 {
                    return Err(Error::ShapeMismatch(format!(
                        "column `{}` is not a whole number of {}-byte values",
                        a.name, width
                    )));
                }
            }
        }
        Ok(Self {
            schema,
            columns,
            row_count,
        })
    }

    pub fn empty(schema: Schema) -> Self {
        let columns = schema
            .attributes()
            .iter()
            .map(|a| Column::empty_for(a.ty, 0))
            .collect();
        Self {
            schema,
            columns,
            row_count: 0,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn column_by_name(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.schema.require(name)?])
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn is_empty(&self) -> bool {
        self.row_count == 0
    }

    /// Total canonical serialized size.
    pub fn serialized_bytes(&self) -> u64 {
        self.row_count as u64 * self.schema.row_width() as u64
    }

    /// Appends the canonical encoding of `row` to `out`.
    pub fn write_row(&self, row: usize, out: &mut Vec<u8>) {
        for c in &self.columns {
            c.write_value(row, out);
        }
    }

    /// Writes the canonical encoding of `row` into `out`, which must be
    /// exactly one row wide.
    pub fn encode_row(&self, row: usize, out: &mut [u8]) {
        let mut at = 0;
        for c in &self.columns {
            match c {
                Column::Int64(v) => {
                    out[at..at + 8].copy_from_slice(&v[row].to_le_bytes());
                    at += 8;
                }
                Column::Bytes { width, data } => {
                    out[at..at + width].copy_from_slice(&data[row * width..(row + 1) * width]);
                    at += width;
                }
            }
        }
    }

    pub fn row_bytes(&self, row: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.schema.row_width());
        self.write_row(row, &mut out);
        out
    }

    /// Rows at `indices`, in that order.
    pub fn take(&self, indices: &[u32]) -> Relation {
        Relation {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.gather(indices)).collect(),
            row_count: indices.len(),
        }
    }

    pub fn allocated_bytes(&self) -> u64 {
        self.columns.iter().map(Column::allocated_bytes).sum()
    }

    /// Appends a column; used to widen generated relations with extra keys.
    pub fn with_column(self, attr: Attribute, column: Column) -> Result<Relation> {
        let mut attrs = self.schema.attributes().to_vec();
        attrs.push(attr);
        let schema = Schema::new(attrs)?;
        let mut columns = self.columns;
        columns.push(column);
        Relation::new(schema, columns, self.row_count)
    }
}

/// Accumulates canonical rows into a columnar relation.
#[derive(Debug)]
pub struct RelationBuilder {
    schema: Schema,
    columns: Vec<Column>,
    rows: usize,
}

impl RelationBuilder {
    pub fn new(schema: Schema) -> Self {
        Self::with_capacity(schema, 0)
    }

    pub fn with_capacity(schema: Schema, rows: usize) -> Self {
        let columns = schema
            .attributes()
            .iter()
            .map(|a| Column::empty_for(a.ty, rows))
            .collect();
        Self {
            schema,
            columns,
            rows: 0,
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Pushes one canonical row; `row.len()` must equal the schema row width.
    pub fn push_row(&mut self, row: &[u8]) {
        debug_assert_eq!(row.len(), self.schema.row_width());
        for (i, c) in self.columns.iter_mut().enumerate() {
            let off = self.schema.offsets[i];
            let w = self.schema.attributes[i].ty.width();
            c.push_canonical(&row[off..off + w]);
        }
        self.rows += 1;
    }

    /// Pushes a joined row assembled from canonical `left` and `right` rows.
    pub fn push_joined(&mut self, layout: &JoinLayout, left: &[u8], right: &[u8]) {
        for (c, f) in self.columns.iter_mut().zip(&layout.fields) {
            let src = if f.from_left { left } else { right };
            c.push_canonical(&src[f.offset..f.offset + f.width]);
        }
        self.rows += 1;
    }

    /// Like [`push_joined`](Self::push_joined), but the side that is not
    /// `build_is_left` is read straight from row `row` of relation `other`.
    pub fn push_joined_with(
        &mut self,
        layout: &JoinLayout,
        build: &[u8],
        build_is_left: bool,
        other: &Relation,
        row: usize,
    ) {
        for (c, f) in self.columns.iter_mut().zip(&layout.fields) {
            if f.from_left == build_is_left {
                c.push_canonical(&build[f.offset..f.offset + f.width]);
            } else {
                match (c, other.column(f.column)) {
                    (Column::Int64(dst), Column::Int64(src)) => dst.push(src[row]),
                    (Column::Bytes { data: dst, .. }, Column::Bytes { width, data: src }) => {
                        dst.extend_from_slice(&src[row * width..(row + 1) * width])
                    }
                    _ => unreachable!("layout and schema disagree"),
                }
            }
        }
        self.rows += 1;
    }

    /// Appends one joined row per `(row, slot)` pair, column by column: the
    /// build side comes from packed `width`-byte rows in `packed`, the other
    /// side from row `row` of `other`.
    pub fn extend_joined(
        &mut self,
        layout: &JoinLayout,
        packed: &[u8],
        width: usize,
        build_is_left: bool,
        other: &Relation,
        pairs: &[(u32, u32)],
    ) {
        let ahead = |k: usize| pairs.get(k + prefetch::DISTANCE).map(|p| p.1 as usize * width);
        for (c, f) in self.columns.iter_mut().zip(&layout.fields) {
            if f.from_left == build_is_left {
                let field = |slot: u32| {
                    let at = slot as usize * width + f.offset;
                    &packed[at..at + f.width]
                };
                for (k, &(_, slot)) in pairs.iter().enumerate() {
                    if let Some(at) = ahead(k) {
                        prefetch::read_span(packed.as_ptr().wrapping_add(at + f.offset), f.width);
                    }
                    c.push_canonical(field(slot));
                }
            } else {
                match (c, other.column(f.column)) {
                    (Column::Int64(dst), Column::Int64(src)) => dst.extend(pairs.iter().map(|p| src[p.0 as usize])),
                    (Column::Bytes { data: dst, .. }, Column::Bytes { width: w, data: src }) => {
                        dst.reserve(pairs.len() * *w);
                        for &(row, _) in pairs {
                            let at = row as usize * *w;
                            dst.extend_from_slice(&src[at..at + *w]);
                        }
                    }
                    _ => unreachable!("layout and schema disagree"),
                }
            }
        }
        self.rows += pairs.len();
    }

    pub fn finish(self) -> Relation {
        Relation {
            schema: self.schema,
            columns: self.columns,
            row_count: self.rows,
        }
    }
}
