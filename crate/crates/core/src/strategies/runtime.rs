use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::local::LocalStore;
use super::{answer_mismatch, Ctx, Maintainer, MaintainerKind, Note};
use crate::error::{Error, Result};
use crate::protocol::{Answer, Query, QueryId, UpdateId};
use crate::relation::{DeltaRelation, Relation, Site};
use crate::view::{Catalog, ViewHierarchy};

#[derive(Debug, Clone)]
struct Waiting {
    base: String,
    delta: DeltaRelation,
    outstanding: BTreeMap<QueryId, String>,
    fetched: BTreeMap<String, Relation>,
}

/// Incremental maintenance that checks, per update, whether every relation the delta
/// joins need is held locally, and fetches the missing base relations otherwise.
/// Updates are handled one at a time; notifications arriving during a fetch wait.
#[derive(Debug, Clone)]
pub struct RuntimeSmMaintainer {
    local: LocalStore,
    queue: VecDeque<(UpdateId, String, DeltaRelation)>,
    waiting: Option<Waiting>,
}

impl RuntimeSmMaintainer {
    pub fn new(h: &ViewHierarchy, initial: &dyn Catalog, replicas: &BTreeSet<String>) -> Result<Self> {
        Ok(RuntimeSmMaintainer { local: LocalStore::new(h, initial, replicas)?, queue: VecDeque::new(), waiting: None })
    }

    /// Whether `base` could be maintained right now without querying the source.
    pub fn self_maintainable(&self, base: &str) -> Result<bool> {
        Ok(self.local.missing(base)?.is_empty())
    }

    fn start(&mut self, ctx: &mut Ctx<'_>, base: String, delta: DeltaRelation) -> Result<()> {
        let missing = if delta.is_empty() { BTreeSet::new() } else { self.local.missing(&base)? };
        if missing.is_empty() {
            let nav = self.local.propagate(ctx, &base, &delta, &BTreeMap::new())?;
            ctx.note(Note::Nav { count: nav });
            return Ok(());
        }
        let outstanding = missing.into_iter().map(|m| (ctx.send(Query::Fetch { base: m.clone() }), m)).collect();
        self.waiting = Some(Waiting { base, delta, outstanding, fetched: BTreeMap::new() });
        Ok(())
    }

    fn drain(&mut self, ctx: &mut Ctx<'_>) -> Result<()> {
        while self.waiting.is_none() {
            let Some((_, base, delta)) = self.queue.pop_front() else { break };
            self.start(ctx, base, delta)?;
        }
        Ok(())
    }
}

impl Maintainer for RuntimeSmMaintainer {
    fn kind(&self) -> MaintainerKind {
        MaintainerKind::RuntimeSm
    }

    fn on_update(&mut self, ctx: &mut Ctx<'_>, update: UpdateId, base: &str, delta: &DeltaRelation) -> Result<()> {
        if !self.local.h.primary_bases().contains(base) {
            ctx.note(Note::Unaffected { base: base.to_owned() });
            return Ok(());
        }
        if self.waiting.is_some() {
            self.queue.push_back((update, base.to_owned(), delta.clone()));
            ctx.note(Note::Queued { update });
            return Ok(());
        }
        self.start(ctx, base.to_owned(), delta.clone())
    }

    fn on_answer(&mut self, ctx: &mut Ctx<'_>, id: QueryId, answer: Answer) -> Result<()> {
        let kind = self.kind();
        let waiting = self.waiting.as_mut().ok_or_else(|| answer_mismatch(kind, id))?;
        let name = waiting.outstanding.remove(&id).ok_or_else(|| answer_mismatch(kind, id))?;
        let Answer::Snapshot(mut snapshot) = answer else {
            return Err(Error::Protocol(format!("expected a snapshot of {name} for q{id}")));
        };
        ctx.counter().add(Site::Source, snapshot.card());
        // The source answered against its live state, which already includes updates
        // still waiting in the queue; take them back out.
        for (_, base, delta) in &self.queue {
            if *base == name {
                let mut undo = DeltaRelation::empty(delta.schema().clone());
                undo.accumulate(delta, -1)?;
                snapshot.merge_delta(&undo)?;
            }
        }
        waiting.fetched.insert(name, snapshot);
        if waiting.outstanding.is_empty() {
            let done = self.waiting.take().expect("checked above");
            let nav = self.local.propagate(ctx, &done.base, &done.delta, &done.fetched)?;
            ctx.note(Note::Nav { count: nav });
            self.drain(ctx)?;
        }
        Ok(())
    }

    fn current_view(&self) -> &Relation {
        self.local.view()
    }

    fn local_store(&self) -> BTreeMap<String, Relation> {
        self.local.auxiliary()
    }

    fn pending_queries(&self) -> usize {
        self.waiting.as_ref().map_or(0, |w| w.outstanding.len().max(1)) + self.queue.len()
    }
}
