//! Incremental propagation over relations held at the warehouse.

use std::collections::{BTreeMap, BTreeSet};

use super::{Ctx, Note};
use crate::error::{Error, Result};
use crate::relation::{apply_delta_in_place, AccessCounter, DeltaRelation, Relation, Site};
use crate::view::{affected_order, evaluate_signed, JoinInput, ViewHierarchy};

/// Replicas, auxiliary views and the primary view, maintained bottom-up.
#[derive(Debug, Clone)]
pub(crate) struct LocalStore {
    pub(crate) h: ViewHierarchy,
    pub(crate) store: BTreeMap<String, Relation>,
    replicas: BTreeSet<String>,
}

impl LocalStore {
    pub(crate) fn new(
        h: &ViewHierarchy,
        initial: &dyn crate::view::Catalog,
        replicas: &BTreeSet<String>,
    ) -> Result<Self> {
        let mut store = BTreeMap::new();
        for r in replicas {
            let rel = initial.relation(r).ok_or_else(|| Error::Catalog(format!("no initial contents for {r}")))?;
            store.insert(r.clone(), rel.clone());
        }
        let views = h.evaluate_all(initial, Site::Warehouse, &mut AccessCounter::new())?;
        store.extend(views);
        Ok(LocalStore { h: h.clone(), store, replicas: replicas.clone() })
    }

    pub(crate) fn view(&self) -> &Relation {
        &self.store[self.h.primary()]
    }

    /// Everything except the primary view.
    pub(crate) fn auxiliary(&self) -> BTreeMap<String, Relation> {
        self.store.iter().filter(|(k, _)| *k != self.h.primary()).map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    /// Relations the delta joins for an update on `base` will read, other than the
    /// change sets themselves.
    pub(crate) fn needed(&self, base: &str) -> Result<BTreeSet<String>> {
        let plan = affected_order(&self.h, base)?;
        let mut changed: BTreeSet<&str> = BTreeSet::from([base]);
        let mut out = BTreeSet::new();
        for v in plan.iter() {
            let def = self.h.view(v).expect("planned view exists");
            for (p, op) in def.operands.iter().enumerate() {
                if !changed.contains(op.as_str()) {
                    continue;
                }
                for (j, other) in def.operands.iter().enumerate() {
                    if j != p {
                        out.insert(other.clone());
                    }
                }
            }
            changed.insert(v);
        }
        Ok(out)
    }

    /// Base relations `needed` that are not held locally.
    pub(crate) fn missing(&self, base: &str) -> Result<BTreeSet<String>> {
        Ok(self.needed(base)?.into_iter().filter(|n| self.h.is_base(n) && !self.store.contains_key(n)).collect())
    }

    /// Apply `delta` on `base` to its replica (if any) and to every affected view.
    /// `fetched` supplies the post-update state of base relations that are not held
    /// locally. Returns the number of distinct base replicas read.
    pub(crate) fn propagate(
        &mut self,
        ctx: &mut Ctx<'_>,
        base: &str,
        delta: &DeltaRelation,
        fetched: &BTreeMap<String, Relation>,
    ) -> Result<usize> {
        let mut replicas_read: BTreeSet<String> = BTreeSet::new();
        if let Some(replica) = self.store.get_mut(base) {
            apply_delta_in_place(replica, delta, Site::Warehouse, ctx.counter())?;
            replicas_read.insert(base.to_owned());
        }
        if delta.is_empty() {
            return Ok(replicas_read.len());
        }
        let plan = affected_order(&self.h, base)?;
        let mut deltas: BTreeMap<String, DeltaRelation> = BTreeMap::from([(base.to_owned(), delta.clone())]);
        for v in plan.iter() {
            let def = self.h.view(v).expect("planned view exists").clone();
            let changed: Vec<usize> =
                (0..def.arity()).filter(|&i| deltas.contains_key(&def.operands[i])).collect();
            let mut total = DeltaRelation::empty(self.store[v].schema().clone());
            for &p in &changed {
                let dc = &deltas[&def.operands[p]];
                if dc.is_empty() {
                    continue;
                }
                // Changed operands before p are read in their new state, those after p in
                // their old state, so that each combination of changes is counted once.
                let mut olds: BTreeMap<usize, Relation> = BTreeMap::new();
                for &j in changed.iter().filter(|&&j| j > p) {
                    let name = &def.operands[j];
                    let mut old = self.current(name, fetched)?.clone();
                    let mut undo = DeltaRelation::empty(deltas[name].schema().clone());
                    undo.accumulate(&deltas[name], -1)?;
                    old.merge_delta(&undo)?;
                    olds.insert(j, old);
                }
                let mut inputs = Vec::with_capacity(def.arity());
                for (j, name) in def.operands.iter().enumerate() {
                    if j == p {
                        inputs.push(JoinInput::Delta(dc));
                    } else if let Some(old) = olds.get(&j) {
                        inputs.push(JoinInput::Rel(old));
                    } else {
                        if self.replicas.contains(name) {
                            replicas_read.insert(name.clone());
                        }
                        inputs.push(JoinInput::Rel(self.current(name, fetched)?));
                    }
                }
                let part = evaluate_signed(&def, &inputs, Site::Warehouse, ctx.counter())?;
                drop(inputs);
                let target = self.store.get_mut(v).expect("every view is stored");
                apply_delta_in_place(target, &part, Site::Warehouse, ctx.counter())?;
                ctx.note(Note::Maintained { view: v.to_owned(), delta_card: part.card() });
                total.accumulate(&part, 1)?;
            }
            deltas.insert(v.to_owned(), total);
        }
        Ok(replicas_read.len())
    }

    fn current<'a>(&'a self, name: &str, fetched: &'a BTreeMap<String, Relation>) -> Result<&'a Relation> {
        self.store
            .get(name)
            .or_else(|| fetched.get(name))
            .ok_or_else(|| Error::Config(format!("{name} is needed for maintenance but is not available locally")))
    }
}
