use std::collections::btree_map::{self, BTreeMap};
use std::fmt;

use super::schema::Schema;
use super::value::Tuple;
use crate::error::{Error, Result};

/// A multiset of tuples. Multiplicities are always at least 1; absent tuples have count 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    schema: Schema,
    rows: BTreeMap<Tuple, u64>,
}

impl Relation {
    pub fn empty(schema: Schema) -> Self {
        Relation { schema, rows: BTreeMap::new() }
    }

    /// Build from a list of tuples; repeated tuples accumulate multiplicity.
    pub fn from_tuples<I, T>(schema: Schema, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<Tuple>,
    {
        let mut rel = Relation::empty(schema);
        for t in tuples {
            rel.insert(t.into(), 1)?;
        }
        Ok(rel)
    }

    pub fn insert(&mut self, t: Tuple, count: u64) -> Result<()> {
        self.schema.check_tuple(&t)?;
        if count > 0 {
            *self.rows.entry(t).or_insert(0) += count;
        }
        Ok(())
    }

    pub(crate) fn from_counts(schema: Schema, rows: BTreeMap<Tuple, u64>) -> Self {
        debug_assert!(rows.values().all(|&n| n > 0));
        Relation { schema, rows }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn with_schema(mut self, schema: Schema) -> Result<Self> {
        if !self.schema.compatible(&schema) {
            return Err(Error::Schema(format!("cannot relabel {} as {}", self.schema, schema)));
        }
        self.schema = schema;
        Ok(self)
    }

    /// Card(R): the number of rows counting multiplicity.
    pub fn card(&self) -> u64 {
        self.rows.values().sum()
    }

    pub fn distinct(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn multiplicity(&self, t: &Tuple) -> u64 {
        self.rows.get(t).copied().unwrap_or(0)
    }

    /// Distinct tuples with their multiplicity, in canonical order.
    pub fn iter(&self) -> btree_map::Iter<'_, Tuple, u64> {
        self.rows.iter()
    }

    /// Bytes this relation occupies under the declared tuple size.
    pub fn bytes(&self) -> u64 {
        self.card() * u64::from(self.schema.tuple_size())
    }

    /// Add a signed delta in place. Fails without modifying `self` if any multiplicity
    /// would drop below zero.
    pub(crate) fn merge_delta(&mut self, delta: &DeltaRelation) -> Result<()> {
        if !self.schema.compatible(delta.schema()) {
            return Err(Error::Schema(format!(
                "delta over {} does not fit {}",
                delta.schema(),
                self.schema
            )));
        }
        for (t, &d) in delta.iter() {
            let have = self.multiplicity(t) as i128;
            if have + i128::from(d) < 0 {
                return Err(Error::Integrity(format!(
                    "{}: multiplicity of {t} would become {}",
                    self.schema.name(),
                    have + i128::from(d)
                )));
            }
        }
        for (t, &d) in delta.iter() {
            let entry = self.rows.entry(t.clone()).or_insert(0);
            *entry = (*entry as i64 + d) as u64;
            if *entry == 0 {
                self.rows.remove(t);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{", self.schema)?;
        for (i, (t, n)) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}×{n}")?;
        }
        f.write_str("}")
    }
}

/// A signed multiset: positive counts are insertions, negative counts removals.
/// Zero-count entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaRelation {
    schema: Schema,
    rows: BTreeMap<Tuple, i64>,
}

impl DeltaRelation {
    pub fn empty(schema: Schema) -> Self {
        DeltaRelation { schema, rows: BTreeMap::new() }
    }

    /// A pure insertion of the given tuples.
    pub fn inserts<I, T>(schema: Schema, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<Tuple>,
    {
        let mut d = DeltaRelation::empty(schema);
        for t in tuples {
            d.add(t.into(), 1)?;
        }
        Ok(d)
    }

    pub(crate) fn from_signed(schema: Schema, mut rows: BTreeMap<Tuple, i64>) -> Self {
        rows.retain(|_, n| *n != 0);
        DeltaRelation { schema, rows }
    }

    pub fn from_relation(rel: &Relation) -> Self {
        DeltaRelation {
            schema: rel.schema().clone(),
            rows: rel.iter().map(|(t, &n)| (t.clone(), n as i64)).collect(),
        }
    }

    pub fn add(&mut self, t: Tuple, count: i64) -> Result<()> {
        self.schema.check_tuple(&t)?;
        self.add_unchecked(t, count);
        Ok(())
    }

    fn add_unchecked(&mut self, t: Tuple, count: i64) {
        if count == 0 {
            return;
        }
        match self.rows.entry(t) {
            btree_map::Entry::Vacant(e) => {
                e.insert(count);
            }
            btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += count;
                if *e.get() == 0 {
                    e.remove();
                }
            }
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Card(Δ): the sum of absolute multiplicities.
    pub fn card(&self) -> u64 {
        self.rows.values().map(|n| n.unsigned_abs()).sum()
    }

    /// Sum of signed multiplicities, i.e. the net change in cardinality.
    pub fn net(&self) -> i64 {
        self.rows.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_pure_insert(&self) -> bool {
        self.rows.values().all(|&n| n > 0)
    }

    pub fn multiplicity(&self, t: &Tuple) -> i64 {
        self.rows.get(t).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Tuple, i64> {
        self.rows.iter()
    }

    /// View a pure-insert delta as an ordinary relation.
    pub fn to_relation(&self) -> Result<Relation> {
        if !self.is_pure_insert() {
            return Err(Error::Integrity(format!(
                "delta over {} has removals and cannot be read as a relation",
                self.schema
            )));
        }
        Ok(Relation::from_counts(
            self.schema.clone(),
            self.rows.iter().map(|(t, &n)| (t.clone(), n as u64)).collect(),
        ))
    }

    pub fn with_schema(mut self, schema: Schema) -> Result<Self> {
        if !self.schema.compatible(&schema) {
            return Err(Error::Schema(format!("cannot relabel {} as {}", self.schema, schema)));
        }
        self.schema = schema;
        Ok(self)
    }

    /// Add `other` scaled by `factor` into `self`.
    pub(crate) fn accumulate(&mut self, other: &DeltaRelation, factor: i64) -> Result<()> {
        if !self.schema.compatible(&other.schema) {
            return Err(Error::Schema(format!(
                "cannot combine deltas over {} and {}",
                self.schema, other.schema
            )));
        }
        for (t, &n) in other.iter() {
            self.add_unchecked(t.clone(), n * factor);
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn accumulate_relation(&mut self, other: &Relation, factor: i64) -> Result<()> {
        if !self.schema.compatible(other.schema()) {
            return Err(Error::Schema(format!(
                "cannot combine delta over {} with {}",
                self.schema,
                other.schema()
            )));
        }
        for (t, &n) in other.iter() {
            self.add_unchecked(t.clone(), n as i64 * factor);
        }
        Ok(())
    }
}

impl fmt::Display for DeltaRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Δ{} {{", self.schema)?;
        for (i, (t, n)) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}×{n:+}")?;
        }
        f.write_str("}")
    }
}
