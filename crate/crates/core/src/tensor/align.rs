//! Key-axis alignment.

use super::TensorRelation;

/// Keys present on both axes with the group index each occupies on either
/// side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AxisAlignment {
    pub matched_keys: Vec<i64>,
    pub left_groups: Vec<u32>,
    pub right_groups: Vec<u32>,
}

impl AxisAlignment {
    pub fn len(&self) -> usize {
        self.matched_keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matched_keys.is_empty()
    }

    pub fn allocated_bytes(&self) -> u64 {
        (self.matched_keys.capacity() * 8
            + self.left_groups.capacity() * 4
            + self.right_groups.capacity() * 4) as u64
    }
}

/// Linear merge of two strictly increasing key axes.
pub fn key_axis_align(left: &TensorRelation<'_>, right: &TensorRelation<'_>) -> AxisAlignment {
    let (a, b) = (left.distinct_keys(), right.distinct_keys());
    let mut out = AxisAlignment::default();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.matched_keys.push(a[i]);
                out.left_groups.push(i as u32);
                out.right_groups.push(j as u32);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{AttrType, Attribute, Column, Relation, Schema};
    use crate::tensor::to_tensor;
    use proptest::prelude::*;

    fn keys_only(keys: &[i64]) -> Relation {
        let schema = Schema::new(vec![Attribute::new("key", AttrType::Int64)]).unwrap();
        Relation::new(schema, vec![Column::Int64(keys.to_vec())], keys.len()).unwrap()
    }

    #[test]
    fn overlapping_ranges() {
        let (l, r) = (keys_only(&[1, 2, 3]), keys_only(&[2, 3, 4]));
        let a = key_axis_align(&to_tensor(&l, "key").unwrap(), &to_tensor(&r, "key").unwrap());
        assert_eq!(a.matched_keys, vec![2, 3]);
        assert_eq!(a.left_groups, vec![1, 2]);
        assert_eq!(a.right_groups, vec![0, 1]);
    }

    #[test]
    fn disjoint_and_empty() {
        let (l, r, e) = (keys_only(&[1, 3]), keys_only(&[2, 4]), keys_only(&[]));
        let (tl, tr, te) = (
            to_tensor(&l, "key").unwrap(),
            to_tensor(&r, "key").unwrap(),
            to_tensor(&e, "key").unwrap(),
        );
        assert!(key_axis_align(&tl, &tr).is_empty());
        assert!(key_axis_align(&tl, &te).is_empty());
    }

    proptest! {
        #[test]
        fn equals_set_intersection(a in proptest::collection::vec(-50i64..50, 0..80), b in proptest::collection::vec(-50i64..50, 0..80)) {
            let (l, r) = (keys_only(&a), keys_only(&b));
            let al = key_axis_align(&to_tensor(&l, "key").unwrap(), &to_tensor(&r, "key").unwrap());
            let sa: std::collections::BTreeSet<i64> = a.iter().copied().collect();
            let sb: std::collections::BTreeSet<i64> = b.iter().copied().collect();
            let expected: Vec<i64> = sa.intersection(&sb).copied().collect();
            prop_assert_eq!(&al.matched_keys, &expected);
        }
    }
}
