//! Instrumented relational operators. Every operator charges the rows it reads to one site.

use std::collections::BTreeMap;

use super::join::{concat_schema, execute, nested_loop_accesses};
use super::schema::{unqualified, Attribute, Schema};
use super::value::Tuple;
use super::{AccessCounter, DeltaRelation, Predicate, Relation, Site};
use crate::error::{Error, Result};

/// Iterates a relation row by row (each tuple repeated by its multiplicity), charging one
/// access per row as it is produced.
pub struct Scan<'a> {
    rows: std::collections::btree_map::Iter<'a, Tuple, u64>,
    current: Option<(&'a Tuple, u64)>,
    site: Site,
    counter: &'a mut AccessCounter,
}

impl<'a> Iterator for Scan<'a> {
    type Item = &'a Tuple;

    fn next(&mut self) -> Option<&'a Tuple> {
        loop {
            match &mut self.current {
                Some((t, left)) if *left > 0 => {
                    *left -= 1;
                    self.counter.add(self.site, 1);
                    return Some(t);
                }
                _ => {
                    let (t, &n) = self.rows.next()?;
                    self.current = Some((t, n));
                }
            }
        }
    }
}

pub fn scan<'a>(rel: &'a Relation, site: Site, counter: &'a mut AccessCounter) -> Scan<'a> {
    Scan { rows: rel.iter(), current: None, site, counter }
}

pub fn select(rel: &Relation, pred: &Predicate, site: Site, counter: &mut AccessCounter) -> Result<Relation> {
    let bound = pred.bind(rel.schema())?;
    counter.add(site, rel.card());
    let rows = rel
        .iter()
        .filter(|(t, _)| bound.eval(t.values()))
        .map(|(t, &n)| (t.clone(), n))
        .collect();
    Ok(Relation::from_counts(rel.schema().clone(), rows))
}

/// One projected column: a source attribute reference and the output name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProjItem {
    pub source: String,
    pub alias: Option<String>,
}

impl ProjItem {
    /// `attr` or `attr as name`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (source, alias) = match text.split_once(" as ") {
            Some((s, a)) => (s.trim(), Some(a.trim().to_owned())),
            None => (text, None),
        };
        if source.is_empty() || alias.as_deref() == Some("") {
            return Err(Error::Parse(format!("bad projection item {text:?}")));
        }
        Ok(ProjItem { source: source.to_owned(), alias })
    }

    pub fn output_name(&self) -> &str {
        self.alias.as_deref().unwrap_or_else(|| unqualified(&self.source))
    }
}

impl std::fmt::Display for ProjItem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.alias {
            Some(a) => write!(f, "{} as {a}", self.source),
            None => f.write_str(&self.source),
        }
    }
}

/// Resolve projection items against `input`, producing column indices and the output schema.
pub(crate) fn projection_layout(
    input: &Schema,
    items: &[ProjItem],
    name: &str,
    tuple_size: u32,
) -> Result<(Vec<usize>, Schema)> {
    let mut cols = Vec::with_capacity(items.len());
    let mut attrs = Vec::with_capacity(items.len());
    for item in items {
        let c = input.resolve(&item.source)?;
        cols.push(c);
        attrs.push(Attribute::new(item.output_name(), input.attributes()[c].ty));
    }
    Ok((cols, Schema::new(name, attrs, tuple_size)?))
}

pub fn project<S: AsRef<str>>(
    rel: &Relation,
    attrs: &[S],
    site: Site,
    counter: &mut AccessCounter,
) -> Result<Relation> {
    let items = attrs.iter().map(|a| ProjItem::parse(a.as_ref())).collect::<Result<Vec<_>>>()?;
    let (cols, schema) = projection_layout(
        rel.schema(),
        &items,
        rel.schema().name(),
        rel.schema().tuple_size(),
    )?;
    counter.add(site, rel.card());
    let mut rows: BTreeMap<Tuple, u64> = BTreeMap::new();
    for (t, &n) in rel.iter() {
        let key = Tuple(cols.iter().map(|&c| t.values()[c].clone()).collect());
        *rows.entry(key).or_insert(0) += n;
    }
    Ok(Relation::from_counts(schema, rows))
}

/// Left-deep nested-loop join in the given operand order. Output attributes are qualified
/// by the operand relation names. Charges Σ_k ∏_{j≤k} Card(op_j) regardless of how many
/// rows satisfy `join_conds`.
pub fn nested_loop_join(
    operands: &[&Relation],
    join_conds: &Predicate,
    site: Site,
    counter: &mut AccessCounter,
) -> Result<Relation> {
    if operands.is_empty() {
        return Err(Error::Schema("join needs at least one operand".into()));
    }
    let labels: Vec<&str> = operands.iter().map(|r| r.schema().name()).collect();
    let schemas: Vec<&Schema> = operands.iter().map(|r| r.schema()).collect();
    let (schema, offsets) = concat_schema(&labels, &schemas)?;
    let bound = join_conds.bind(&schema)?;
    let cards: Vec<u64> = operands.iter().map(|r| r.card()).collect();
    counter.add(site, nested_loop_accesses(&cards));
    let mut rows: BTreeMap<Tuple, u64> = BTreeMap::new();
    execute(operands, &offsets, &bound, |row, m| {
        *rows.entry(Tuple(row.to_vec())).or_insert(0) += m;
    });
    Ok(Relation::from_counts(schema, rows))
}

/// Apply a signed delta to a stored relation. The stored relation is scanned once and the
/// update rows are read: charges Card(rel) + Card(delta).
pub fn apply_delta(
    rel: &Relation,
    delta: &DeltaRelation,
    site: Site,
    counter: &mut AccessCounter,
) -> Result<Relation> {
    let mut out = rel.clone();
    apply_delta_in_place(&mut out, delta, site, counter)?;
    Ok(out)
}

/// In-place form of [`apply_delta`]; leaves `rel` untouched on error.
pub fn apply_delta_in_place(
    rel: &mut Relation,
    delta: &DeltaRelation,
    site: Site,
    counter: &mut AccessCounter,
) -> Result<()> {
    let charge = rel.card() + delta.card();
    rel.merge_delta(delta)?;
    counter.add(site, charge);
    Ok(())
}

pub fn delta_union(a: &DeltaRelation, b: &DeltaRelation) -> Result<DeltaRelation> {
    let mut out = a.clone();
    out.accumulate(b, 1)?;
    Ok(out)
}

pub fn delta_minus(a: &DeltaRelation, b: &DeltaRelation) -> Result<DeltaRelation> {
    let mut out = a.clone();
    out.accumulate(b, -1)?;
    Ok(out)
}
