use std::collections::BTreeMap;

use super::{answer_mismatch, initial_view, Ctx, Maintainer, MaintainerKind, Note};
use crate::error::{Error, Result};
use crate::protocol::{Answer, Query, QueryId, UpdateId};
use crate::relation::{DeltaRelation, Relation, Site};
use crate::view::{Catalog, ViewHierarchy};

#[derive(Debug, Clone)]
struct Round {
    id: u64,
    outstanding: BTreeMap<QueryId, String>,
    snapshot: BTreeMap<String, Relation>,
}

/// Stores only the view. Every notification triggers a fetch of each base relation and a
/// full recompute once all of them have arrived.
#[derive(Debug, Clone)]
pub struct NsmrMaintainer {
    h: ViewHierarchy,
    view: Relation,
    rounds: Vec<Round>,
    next_round: u64,
    materialized_round: Option<u64>,
}

impl NsmrMaintainer {
    pub fn new(h: &ViewHierarchy, initial: &dyn Catalog) -> Result<Self> {
        Ok(NsmrMaintainer {
            h: h.clone(),
            view: initial_view(h, initial)?,
            rounds: Vec::new(),
            next_round: 1,
            materialized_round: None,
        })
    }
}

impl Maintainer for NsmrMaintainer {
    fn kind(&self) -> MaintainerKind {
        MaintainerKind::Nsmr
    }

    fn on_update(&mut self, ctx: &mut Ctx<'_>, _update: UpdateId, base: &str, _delta: &DeltaRelation) -> Result<()> {
        let bases = self.h.primary_bases();
        if !bases.contains(base) {
            ctx.note(Note::Unaffected { base: base.to_owned() });
            return Ok(());
        }
        let outstanding = bases.into_iter().map(|b| (ctx.send(Query::Fetch { base: b.clone() }), b)).collect();
        self.rounds.push(Round { id: self.next_round, outstanding, snapshot: BTreeMap::new() });
        self.next_round += 1;
        Ok(())
    }

    fn on_answer(&mut self, ctx: &mut Ctx<'_>, id: QueryId, answer: Answer) -> Result<()> {
        let idx = self
            .rounds
            .iter()
            .position(|r| r.outstanding.contains_key(&id))
            .ok_or_else(|| answer_mismatch(self.kind(), id))?;
        let round = &mut self.rounds[idx];
        let name = round.outstanding.remove(&id).expect("found above");
        let Answer::Snapshot(rel) = answer else {
            return Err(Error::Protocol(format!("expected a snapshot of {name} for q{id}")));
        };
        round.snapshot.insert(name, rel);
        if !round.outstanding.is_empty() {
            return Ok(());
        }
        let round = self.rounds.remove(idx);
        let view = self.h.evaluate_primary(&round.snapshot, Site::Source, ctx.counter())?;
        ctx.note(Note::Recomputed { round: round.id, card: view.card() });
        if self.materialized_round.is_some_and(|m| m > round.id) {
            ctx.note(Note::Discarded { round: round.id });
            return Ok(());
        }
        ctx.counter().add(Site::Warehouse, view.card());
        ctx.note(Note::Materialized { card: view.card() });
        self.view = view;
        self.materialized_round = Some(round.id);
        Ok(())
    }

    fn current_view(&self) -> &Relation {
        &self.view
    }

    fn pending_queries(&self) -> usize {
        self.rounds.iter().map(|r| r.outstanding.len()).sum()
    }
}
