use std::collections::{BTreeMap, BTreeSet};

use super::{answer_mismatch, initial_view, Ctx, Maintainer, MaintainerKind, Note};
use crate::error::{Error, Result};
use crate::protocol::{Answer, QueryId, UpdateId};
use crate::relation::{apply_delta_in_place, DeltaRelation, Relation, Site};
use crate::view::{Catalog, ViewHierarchy};

/// Keeps replicas of every base relation and recomputes the view from them locally.
#[derive(Debug, Clone)]
pub struct SmrMaintainer {
    h: ViewHierarchy,
    replicas: BTreeMap<String, Relation>,
    view: Relation,
}

impl SmrMaintainer {
    pub fn new(h: &ViewHierarchy, initial: &dyn Catalog, replicas: &BTreeSet<String>) -> Result<Self> {
        let replicas = replicas
            .iter()
            .map(|r| {
                initial
                    .relation(r)
                    .map(|rel| (r.clone(), rel.clone()))
                    .ok_or_else(|| Error::Catalog(format!("no initial contents for {r}")))
            })
            .collect::<Result<_>>()?;
        Ok(SmrMaintainer { h: h.clone(), replicas, view: initial_view(h, initial)? })
    }
}

impl Maintainer for SmrMaintainer {
    fn kind(&self) -> MaintainerKind {
        MaintainerKind::Smr
    }

    fn on_update(&mut self, ctx: &mut Ctx<'_>, _update: UpdateId, base: &str, delta: &DeltaRelation) -> Result<()> {
        if !self.h.primary_bases().contains(base) {
            ctx.note(Note::Unaffected { base: base.to_owned() });
            return Ok(());
        }
        let replica = self
            .replicas
            .get_mut(base)
            .ok_or_else(|| Error::Config(format!("SMR has no replica of {base}")))?;
        apply_delta_in_place(replica, delta, Site::Warehouse, ctx.counter())?;
        if delta.is_empty() {
            return Ok(());
        }
        self.view = self.h.evaluate_primary(&self.replicas, Site::Warehouse, ctx.counter())?;
        ctx.note(Note::Materialized { card: self.view.card() });
        Ok(())
    }

    fn on_answer(&mut self, _ctx: &mut Ctx<'_>, id: QueryId, _answer: Answer) -> Result<()> {
        Err(answer_mismatch(self.kind(), id))
    }

    fn current_view(&self) -> &Relation {
        &self.view
    }

    fn local_store(&self) -> BTreeMap<String, Relation> {
        self.replicas.clone()
    }

    fn pending_queries(&self) -> usize {
        0
    }
}
