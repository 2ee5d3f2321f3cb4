use std::collections::{BTreeMap, BTreeSet};

use super::local::LocalStore;
use super::{answer_mismatch, Ctx, Maintainer, MaintainerKind, Note};
use crate::error::Result;
use crate::protocol::{Answer, QueryId, UpdateId};
use crate::relation::{DeltaRelation, Relation};
use crate::view::{Catalog, ViewHierarchy};

/// Maintains every view incrementally from replicas and auxiliary views held locally.
#[derive(Debug, Clone)]
pub struct SmiMaintainer {
    local: LocalStore,
}

impl SmiMaintainer {
    pub fn new(h: &ViewHierarchy, initial: &dyn Catalog, replicas: &BTreeSet<String>) -> Result<Self> {
        Ok(SmiMaintainer { local: LocalStore::new(h, initial, replicas)? })
    }
}

impl Maintainer for SmiMaintainer {
    fn kind(&self) -> MaintainerKind {
        MaintainerKind::Smi
    }

    fn on_update(&mut self, ctx: &mut Ctx<'_>, _update: UpdateId, base: &str, delta: &DeltaRelation) -> Result<()> {
        if !self.local.h.primary_bases().contains(base) {
            ctx.note(Note::Unaffected { base: base.to_owned() });
            return Ok(());
        }
        let nav = self.local.propagate(ctx, base, delta, &BTreeMap::new())?;
        ctx.note(Note::Nav { count: nav });
        Ok(())
    }

    fn on_answer(&mut self, _ctx: &mut Ctx<'_>, id: QueryId, _answer: Answer) -> Result<()> {
        Err(answer_mismatch(self.kind(), id))
    }

    fn current_view(&self) -> &Relation {
        self.local.view()
    }

    fn local_store(&self) -> BTreeMap<String, Relation> {
        self.local.auxiliary()
    }

    fn pending_queries(&self) -> usize {
        0
    }
}
