use std::collections::BTreeSet;

use super::{answer_mismatch, initial_view, Ctx, Maintainer, MaintainerKind, Note, ProtocolStatus};
use crate::eca::{AnswerOutcome, EcaState};
use crate::error::{Error, Result};
use crate::protocol::{Answer, Query, QueryExpr, QueryId, UpdateId};
use crate::relation::{apply_delta_in_place, DeltaRelation, Relation, Site};
use crate::view::{Catalog, ViewHierarchy};

/// Delta queries substitute a change set for the single occurrence of a base relation.
fn check_single_occurrence(h: &ViewHierarchy, kind: MaintainerKind) -> Result<()> {
    for b in h.primary_bases() {
        let n = h.occurrences(h.primary(), &b);
        if n > 1 {
            return Err(Error::Config(format!("{kind} needs every base relation to occur once, {b} occurs {n} times")));
        }
    }
    Ok(())
}

fn delta_answer(answer: Answer, id: QueryId) -> Result<DeltaRelation> {
    match answer {
        Answer::Delta(d) => Ok(d),
        Answer::Snapshot(_) => Err(Error::Protocol(format!("expected a delta answer for q{id}"))),
    }
}

/// Stores only the view, asks the source for V⟨Δ⟩ per update and applies each answer as
/// it arrives.
#[derive(Debug, Clone)]
pub struct NaiveMaintainer {
    h: ViewHierarchy,
    view: Relation,
    pending: BTreeSet<QueryId>,
}

impl NaiveMaintainer {
    pub fn new(h: &ViewHierarchy, initial: &dyn Catalog) -> Result<Self> {
        check_single_occurrence(h, MaintainerKind::NsmiNaive)?;
        Ok(NaiveMaintainer { h: h.clone(), view: initial_view(h, initial)?, pending: BTreeSet::new() })
    }
}

impl Maintainer for NaiveMaintainer {
    fn kind(&self) -> MaintainerKind {
        MaintainerKind::NsmiNaive
    }

    fn on_update(&mut self, ctx: &mut Ctx<'_>, update: UpdateId, base: &str, delta: &DeltaRelation) -> Result<()> {
        if !self.h.primary_bases().contains(base) {
            ctx.note(Note::Unaffected { base: base.to_owned() });
            return Ok(());
        }
        if delta.is_empty() {
            return Ok(());
        }
        let id = ctx.send(Query::Delta(QueryExpr::substituted(self.h.primary(), update, base, delta)));
        self.pending.insert(id);
        Ok(())
    }

    fn on_answer(&mut self, ctx: &mut Ctx<'_>, id: QueryId, answer: Answer) -> Result<()> {
        if !self.pending.remove(&id) {
            return Err(answer_mismatch(self.kind(), id));
        }
        let rows = delta_answer(answer, id)?;
        apply_delta_in_place(&mut self.view, &rows, Site::Warehouse, ctx.counter())?;
        ctx.note(Note::Maintained { view: self.h.primary().to_owned(), delta_card: rows.card() });
        Ok(())
    }

    fn current_view(&self) -> &Relation {
        &self.view
    }

    fn pending_queries(&self) -> usize {
        self.pending.len()
    }
}

/// Stores only the view; compensates each delta query for the queries still in flight
/// and applies answers in one batch once none are outstanding.
#[derive(Debug, Clone)]
pub struct EcaMaintainer {
    h: ViewHierarchy,
    view: Relation,
    eca: EcaState,
    compensations: u64,
}

impl EcaMaintainer {
    pub fn new(h: &ViewHierarchy, initial: &dyn Catalog) -> Result<Self> {
        check_single_occurrence(h, MaintainerKind::NsmiEca)?;
        let view = initial_view(h, initial)?;
        let eca = EcaState::new(h.primary(), view.schema().clone());
        Ok(EcaMaintainer { h: h.clone(), view, eca, compensations: 0 })
    }

    pub fn eca(&self) -> &EcaState {
        &self.eca
    }
}

impl Maintainer for EcaMaintainer {
    fn kind(&self) -> MaintainerKind {
        MaintainerKind::NsmiEca
    }

    fn on_update(&mut self, ctx: &mut Ctx<'_>, update: UpdateId, base: &str, delta: &DeltaRelation) -> Result<()> {
        if !self.h.primary_bases().contains(base) {
            ctx.note(Note::Unaffected { base: base.to_owned() });
            return Ok(());
        }
        if delta.is_empty() {
            return Ok(());
        }
        let id = ctx.reserve_id();
        let (expr, count) = self.eca.on_update(id, update, base, delta, ctx.now());
        self.compensations += count as u64;
        ctx.send_as(id, Query::Delta(expr));
        if count > 0 {
            ctx.note(Note::Compensations { query: id, count });
        }
        Ok(())
    }

    fn on_answer(&mut self, ctx: &mut Ctx<'_>, id: QueryId, answer: Answer) -> Result<()> {
        let rows = delta_answer(answer, id)?;
        if let AnswerOutcome::Flush(collect) = self.eca.on_answer(id, &rows)? {
            let view_card = self.view.card();
            apply_delta_in_place(&mut self.view, &collect, Site::Warehouse, ctx.counter())?;
            ctx.note(Note::Flush { view_card, collect_card: collect.card() });
        }
        Ok(())
    }

    fn current_view(&self) -> &Relation {
        &self.view
    }

    fn pending_queries(&self) -> usize {
        self.eca.uqs().len()
    }

    fn protocol(&self) -> Option<ProtocolStatus> {
        Some(ProtocolStatus { uqs_len: self.eca.uqs().len(), collect_card: self.eca.collect().card() })
    }

    fn transient_bytes(&self) -> u64 {
        self.eca.collect().card() * u64::from(self.view.schema().tuple_size())
    }

    fn compensations(&self) -> u64 {
        self.compensations
    }
}
