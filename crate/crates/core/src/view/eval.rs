use std::collections::BTreeMap;

use super::{Catalog, ViewDef};
use crate::error::{Error, Result};
use crate::relation::join::{concat_schema, execute, nested_loop_accesses};
use crate::relation::{
    projection_layout, AccessCounter, Attribute, BoundPredicate, DeltaRelation, ProjItem, Relation, Schema, Site,
    Tuple,
};

/// One join input: a stored bag or a signed change set.
#[derive(Debug, Clone, Copy)]
pub enum JoinInput<'a> {
    Rel(&'a Relation),
    Delta(&'a DeltaRelation),
}

impl JoinInput<'_> {
    pub fn schema(&self) -> &Schema {
        match self {
            JoinInput::Rel(r) => r.schema(),
            JoinInput::Delta(d) => d.schema(),
        }
    }

    pub fn card(&self) -> u64 {
        match self {
            JoinInput::Rel(r) => r.card(),
            JoinInput::Delta(d) => d.card(),
        }
    }
}

/// A view definition bound to concrete operand schemas.
#[derive(Debug, Clone)]
pub(crate) struct CompiledView {
    operand_schemas: Vec<Schema>,
    offsets: Vec<usize>,
    pred: BoundPredicate,
    cols: Vec<usize>,
    output: Schema,
}

impl CompiledView {
    pub(crate) fn compile(def: &ViewDef, operands: &[&Schema]) -> Result<Self> {
        if def.operands.is_empty() {
            return Err(Error::Schema(format!("view {} has no operands", def.name)));
        }
        if operands.len() != def.operands.len() {
            return Err(Error::Schema(format!(
                "view {} has {} operands, got {} schemas",
                def.name,
                def.operands.len(),
                operands.len()
            )));
        }
        let labels: Vec<&str> = def.operands.iter().map(String::as_str).collect();
        let (joined, offsets) = concat_schema(&labels, operands)?;
        let pred = def.join_conds.and(&def.selection).bind(&joined)?;
        let items: Vec<ProjItem> = match &def.projection {
            Some(items) => items.clone(),
            None => joined
                .attributes()
                .iter()
                .map(|a: &Attribute| ProjItem { source: a.name.clone(), alias: None })
                .collect(),
        };
        let size = def.tuple_size.unwrap_or(8 * items.len().max(1) as u32);
        let (cols, output) = projection_layout(&joined, &items, &def.name, size)?;
        Ok(CompiledView {
            operand_schemas: operands.iter().map(|s| (*s).clone()).collect(),
            offsets,
            pred,
            cols,
            output,
        })
    }

    pub(crate) fn output_schema(&self) -> &Schema {
        &self.output
    }

    fn check_inputs(&self, inputs: &[JoinInput<'_>]) -> Result<()> {
        if inputs.len() != self.operand_schemas.len() {
            return Err(Error::Schema(format!(
                "view {} expects {} inputs, got {}",
                self.output.name(),
                self.operand_schemas.len(),
                inputs.len()
            )));
        }
        for (input, expected) in inputs.iter().zip(&self.operand_schemas) {
            if !input.schema().compatible(expected) {
                return Err(Error::Schema(format!(
                    "view {}: input {} does not match operand {}",
                    self.output.name(),
                    input.schema(),
                    expected
                )));
            }
        }
        Ok(())
    }

    /// Join, filter and project in one pipeline. The result is signed: each output
    /// multiplicity is the product of the input multiplicities.
    pub(crate) fn run(&self, inputs: &[JoinInput<'_>]) -> Result<BTreeMap<Tuple, i64>> {
        self.check_inputs(inputs)?;
        // Split signed inputs into their positive and negative parts and join every
        // combination; most inputs are plain relations, so this is usually a single pass.
        let parts: Vec<Vec<(Relation, i64)>> = inputs
            .iter()
            .map(|input| match input {
                JoinInput::Rel(r) => vec![((*r).clone(), 1)],
                JoinInput::Delta(d) => {
                    let mut pos = BTreeMap::new();
                    let mut neg = BTreeMap::new();
                    for (t, &n) in d.iter() {
                        if n > 0 {
                            pos.insert(t.clone(), n as u64);
                        } else {
                            neg.insert(t.clone(), n.unsigned_abs());
                        }
                    }
                    let mut out = Vec::new();
                    if !pos.is_empty() {
                        out.push((Relation::from_counts(d.schema().clone(), pos), 1));
                    }
                    if !neg.is_empty() {
                        out.push((Relation::from_counts(d.schema().clone(), neg), -1));
                    }
                    out
                }
            })
            .collect();
        let mut rows: BTreeMap<Tuple, i64> = BTreeMap::new();
        if parts.iter().any(Vec::is_empty) {
            return Ok(rows);
        }
        let mut choice = vec![0usize; parts.len()];
        loop {
            let rels: Vec<&Relation> = choice.iter().zip(&parts).map(|(&c, p)| &p[c].0).collect();
            let sign: i64 = choice.iter().zip(&parts).map(|(&c, p)| p[c].1).product();
            execute(&rels, &self.offsets, &self.pred, |row, m| {
                let key = Tuple(self.cols.iter().map(|&c| row[c].clone()).collect());
                *rows.entry(key).or_insert(0) += sign * m as i64;
            });
            let mut i = 0;
            loop {
                if i == parts.len() {
                    rows.retain(|_, n| *n != 0);
                    return Ok(rows);
                }
                choice[i] += 1;
                if choice[i] < parts[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }
}

fn compile_for(def: &ViewDef, inputs: &[JoinInput<'_>]) -> Result<CompiledView> {
    let schemas: Vec<&Schema> = inputs.iter().map(|i| i.schema()).collect();
    CompiledView::compile(def, &schemas)
}

/// Evaluate `def` over explicit inputs in operand order. Selection and projection are
/// applied while the join streams, so only the join's nested-loop accesses are charged.
pub fn evaluate_operands(
    def: &ViewDef,
    inputs: &[&Relation],
    site: Site,
    counter: &mut AccessCounter,
) -> Result<Relation> {
    let inputs: Vec<JoinInput<'_>> = inputs.iter().map(|r| JoinInput::Rel(r)).collect();
    let signed = evaluate_signed(def, &inputs, site, counter)?;
    signed.to_relation()
}

/// Evaluate `def` over inputs that may be signed change sets.
pub fn evaluate_signed(
    def: &ViewDef,
    inputs: &[JoinInput<'_>],
    site: Site,
    counter: &mut AccessCounter,
) -> Result<DeltaRelation> {
    let view = compile_for(def, inputs)?;
    let cards: Vec<u64> = inputs.iter().map(JoinInput::card).collect();
    let rows = view.run(inputs)?;
    counter.add(site, nested_loop_accesses(&cards));
    Ok(DeltaRelation::from_signed(view.output.clone(), rows))
}

fn lookup<'a>(catalog: &'a dyn Catalog, def: &ViewDef, name: &str) -> Result<&'a Relation> {
    catalog
        .relation(name)
        .ok_or_else(|| Error::Catalog(format!("operand {name} of view {} is not available", def.name)))
}

/// Evaluate `def` reading each operand from `catalog` by name.
pub fn evaluate(def: &ViewDef, catalog: &dyn Catalog, site: Site, counter: &mut AccessCounter) -> Result<Relation> {
    let inputs = def.operands.iter().map(|o| lookup(catalog, def, o)).collect::<Result<Vec<_>>>()?;
    evaluate_operands(def, &inputs, site, counter)
}

/// Change to `def` caused by `delta` on operand `changed`, the other operands read from
/// `catalog`. Charges the nested-loop accesses of the join with `delta` in place of
/// `changed`.
pub fn delta_insert(
    def: &ViewDef,
    changed: &str,
    delta: &DeltaRelation,
    catalog: &dyn Catalog,
    site: Site,
    counter: &mut AccessCounter,
) -> Result<DeltaRelation> {
    let pos = def
        .position(changed)
        .ok_or_else(|| Error::Catalog(format!("{changed} is not an operand of view {}", def.name)))?;
    let inputs = def
        .operands
        .iter()
        .enumerate()
        .map(|(i, o)| if i == pos { Ok(JoinInput::Delta(delta)) } else { lookup(catalog, def, o).map(JoinInput::Rel) })
        .collect::<Result<Vec<_>>>()?;
    evaluate_signed(def, &inputs, site, counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{apply_delta, nested_loop_join, project, select, Predicate};

    fn rel(name: &str, attrs: &[&str], rows: &[&[i64]]) -> Relation {
        let schema = Schema::ints(name, attrs, 8).unwrap();
        Relation::from_tuples(schema, rows.iter().map(|r| Tuple(r.iter().map(|&v| v.into()).collect()))).unwrap()
    }

    fn anomaly_view() -> ViewDef {
        ViewDef::new("V", &["r1", "r2"])
            .join_on(&["r1.B = r2.B"])
            .unwrap()
            .project(&["A", "C"])
            .unwrap()
    }

    #[test]
    fn evaluate_charges_only_the_join() {
        let r1 = rel("r1", &["A", "B"], &[&[1, 2], &[4, 2]]);
        let r2 = rel("r2", &["B", "C"], &[&[2, 3]]);
        let mut c = AccessCounter::new();
        let v = evaluate_operands(&anomaly_view(), &[&r1, &r2], Site::Warehouse, &mut c).unwrap();
        assert_eq!(v, rel("V", &["A", "C"], &[&[1, 3], &[4, 3]]).with_schema(v.schema().clone()).unwrap());
        assert_eq!(c.warehouse(), 2 + 2);
        assert_eq!(v.schema().name(), "V");
        assert_eq!(v.schema().tuple_size(), 16);
    }

    #[test]
    fn pipelined_matches_operator_composition() {
        let r1 = rel("r1", &["A", "B"], &[&[1, 2], &[4, 2], &[5, 7], &[5, 7]]);
        let r2 = rel("r2", &["B", "C"], &[&[2, 3], &[7, 0], &[7, 9]]);
        let def = ViewDef::new("V", &["r1", "r2"])
            .join_on(&["r1.B = r2.B"])
            .unwrap()
            .filter(&["C > 0"])
            .unwrap()
            .project(&["A", "r2.C as C"])
            .unwrap();
        let mut c = AccessCounter::new();
        let fused = evaluate_operands(&def, &[&r1, &r2], Site::Warehouse, &mut c).unwrap();
        let j = nested_loop_join(&[&r1, &r2], &def.join_conds, Site::Warehouse, &mut c).unwrap();
        let s = select(&j, &Predicate::parse(&["C > 0"]).unwrap(), Site::Warehouse, &mut c).unwrap();
        let p = project(&s, &["A", "r2.C as C"], Site::Warehouse, &mut c).unwrap();
        assert_eq!(fused.with_schema(p.schema().clone()).unwrap(), p);
    }

    #[test]
    fn delta_rule_equals_difference_of_evaluations() {
        let r1 = rel("r1", &["A", "B"], &[&[1, 2]]);
        let r2 = rel("r2", &["B", "C"], &[]);
        let d = DeltaRelation::inserts(r2.schema().clone(), [[2, 3]]).unwrap();
        let def = anomaly_view();
        let mut cat = BTreeMap::new();
        cat.insert("r1".to_string(), r1.clone());
        cat.insert("r2".to_string(), r2.clone());
        let mut c = AccessCounter::new();
        let dv = delta_insert(&def, "r2", &d, &cat, Site::Source, &mut c).unwrap();
        assert_eq!(c.source(), 1 + 1);
        let before = evaluate(&def, &cat, Site::Source, &mut c).unwrap();
        let r2_new = apply_delta(&r2, &d, Site::Source, &mut c).unwrap();
        cat.insert("r2".to_string(), r2_new);
        let after = evaluate(&def, &cat, Site::Source, &mut c).unwrap();
        let mut expect = DeltaRelation::from_relation(&after);
        expect.accumulate_relation(&before, -1).unwrap();
        assert_eq!(dv, expect);
        assert!(delta_insert(&def, "r9", &d, &cat, Site::Source, &mut c).is_err());
    }

    #[test]
    fn signed_inputs_multiply_signs() {
        let r1 = rel("r1", &["A", "B"], &[&[1, 2]]);
        let mut d = DeltaRelation::empty(Schema::ints("r2", &["B", "C"], 8).unwrap());
        d.add(Tuple::from([2, 3]), -2).unwrap();
        d.add(Tuple::from([2, 5]), 1).unwrap();
        let mut c = AccessCounter::new();
        let out = evaluate_signed(&anomaly_view(), &[JoinInput::Rel(&r1), JoinInput::Delta(&d)], Site::Source, &mut c)
            .unwrap();
        assert_eq!(out.multiplicity(&Tuple::from([1, 3])), -2);
        assert_eq!(out.multiplicity(&Tuple::from([1, 5])), 1);
        assert_eq!(c.source(), 1 + 3);
    }

    #[test]
    fn default_projection_keeps_unqualified_names() {
        let a = rel("a", &["x"], &[&[1]]);
        let b = rel("b", &["y"], &[&[2]]);
        let mut c = AccessCounter::new();
        let out = evaluate_operands(&ViewDef::new("w", &["a", "b"]), &[&a, &b], Site::Warehouse, &mut c).unwrap();
        let names: Vec<&str> = out.schema().attributes().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["x", "y"]);
        let clash = evaluate_operands(&ViewDef::new("w", &["a", "c"]), &[&a, &a.clone()], Site::Warehouse, &mut c);
        assert!(clash.is_err());
    }
}
