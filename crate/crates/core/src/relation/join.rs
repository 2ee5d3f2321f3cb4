//! Left-deep join execution.
//!
//! Row accesses are charged by the nested-loop model (every prefix combination scans the
//! next operand in full); tuples themselves are produced with hash lookups on equality
//! conjuncts so that large joins stay tractable. The two never disagree on the result.

use std::collections::HashMap;

use super::predicate::{BoundComparison, BoundPredicate, CmpOp};
use super::schema::{Attribute, Schema};
use super::value::{Tuple, Value};
use super::Relation;
use crate::error::{Error, Result};

/// Σ_{k=1..N} ∏_{j≤k} cards[j]: rows read by a left-deep nested-loop join.
pub fn nested_loop_accesses(cards: &[u64]) -> u64 {
    let mut total = 0u64;
    let mut prefix = 1u64;
    for &c in cards {
        prefix = prefix.saturating_mul(c);
        total = total.saturating_add(prefix);
    }
    total
}

/// ∏ cards[j]: the leading term of [`nested_loop_accesses`].
pub fn cross_product_size(cards: &[u64]) -> u64 {
    cards.iter().fold(1u64, |acc, &c| acc.saturating_mul(c))
}

/// Concatenate operand schemas, qualifying each attribute with its operand label.
pub(crate) fn concat_schema(labels: &[&str], schemas: &[&Schema]) -> Result<(Schema, Vec<usize>)> {
    let mut attrs = Vec::new();
    let mut offsets = Vec::with_capacity(schemas.len());
    let mut size = 0u32;
    for (label, schema) in labels.iter().zip(schemas) {
        if labels.iter().filter(|l| *l == label).count() > 1 {
            return Err(Error::Schema(format!("operand {label} appears twice in one join")));
        }
        offsets.push(attrs.len());
        size = size.saturating_add(schema.tuple_size());
        for a in schema.attributes() {
            attrs.push(Attribute::new(format!("{label}.{}", super::schema::unqualified(&a.name)), a.ty));
        }
    }
    Schema::new(labels.join("⋈"), attrs, size.max(1)).map(|s| (s, offsets))
}

struct Level {
    /// (column in the prefix, column within this operand)
    keys: Vec<(usize, usize)>,
    filters: Vec<BoundComparison>,
}

fn operand_of(col: usize, offsets: &[usize]) -> usize {
    offsets.iter().rposition(|&o| o <= col).unwrap_or(0)
}

fn plan(pred: &BoundPredicate, offsets: &[usize], n: usize) -> Vec<Level> {
    let mut levels: Vec<Level> = (0..n).map(|_| Level { keys: Vec::new(), filters: Vec::new() }).collect();
    if n == 0 {
        return levels;
    }
    for c in &pred.conjuncts {
        let level = c.max_column().map_or(0, |col| operand_of(col, offsets));
        if c.op == CmpOp::Eq {
            if let (Some(l), Some(r)) = (c.left.column(), c.right.column()) {
                let (here, earlier) = if operand_of(l, offsets) == level { (l, r) } else { (r, l) };
                if operand_of(earlier, offsets) < level {
                    levels[level].keys.push((earlier, here - offsets[level]));
                    continue;
                }
            }
        }
        levels[level].filters.push(c.clone());
    }
    levels
}

/// Join `inputs` left to right and hand every surviving concatenated row to `emit`
/// together with its multiplicity (the product of the input multiplicities).
pub(crate) fn execute(
    inputs: &[&Relation],
    offsets: &[usize],
    pred: &BoundPredicate,
    mut emit: impl FnMut(&[Value], u64),
) {
    let levels = plan(pred, offsets, inputs.len());
    let mut prefix: Vec<(Vec<Value>, u64)> = vec![(Vec::new(), 1)];
    for (input, level) in inputs.iter().zip(&levels) {
        let mut next = Vec::new();
        let push = |row: &[Value], m: u64, t: &Tuple, n: u64, next: &mut Vec<(Vec<Value>, u64)>| {
            let mut out = Vec::with_capacity(row.len() + t.arity());
            out.extend_from_slice(row);
            out.extend_from_slice(t.values());
            if level.filters.iter().all(|f| f.eval(&out)) {
                next.push((out, m * n));
            }
        };
        if level.keys.is_empty() {
            for (row, m) in &prefix {
                for (t, &n) in input.iter() {
                    push(row, *m, t, n, &mut next);
                }
            }
        } else {
            let mut index: HashMap<Vec<&Value>, Vec<(&Tuple, u64)>> = HashMap::new();
            for (t, &n) in input.iter() {
                let key = level.keys.iter().map(|&(_, c)| &t.values()[c]).collect();
                index.entry(key).or_default().push((t, n));
            }
            for (row, m) in &prefix {
                let key: Vec<&Value> = level.keys.iter().map(|&(p, _)| &row[p]).collect();
                if let Some(matches) = index.get(&key) {
                    for &(t, n) in matches {
                        push(row, *m, t, n, &mut next);
                    }
                }
            }
        }
        prefix = next;
        if prefix.is_empty() {
            return;
        }
    }
    if inputs.is_empty() {
        return;
    }
    for (row, m) in &prefix {
        emit(row, *m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn access_formula_matches_hand_counts() {
        assert_eq!(nested_loop_accesses(&[2, 3]), 8);
        assert_eq!(nested_loop_accesses(&[2, 0]), 2);
        assert_eq!(nested_loop_accesses(&[10, 10]), 110);
        assert_eq!(nested_loop_accesses(&[10, 10, 10]), 1110);
        assert_eq!(nested_loop_accesses(&[]), 0);
        assert_eq!(cross_product_size(&[10, 10, 10]), 1000);
    }
}
