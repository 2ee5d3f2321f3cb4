//! Eager compensation: the unanswered query set, the COLLECT accumulator and the
//! construction of compensated queries.

use crate::error::{Error, Result};
use crate::protocol::{QueryExpr, QueryId, UpdateId};
use crate::relation::{DeltaRelation, Schema};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingQuery {
    pub id: QueryId,
    pub expr: QueryExpr,
    pub issued_at: u64,
}

/// Unanswered queries in issue order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Uqs {
    pending: Vec<PendingQuery>,
}

impl Uqs {
    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PendingQuery> {
        self.pending.iter()
    }

    fn push(&mut self, q: PendingQuery) {
        debug_assert!(self.pending.last().is_none_or(|p| p.id < q.id));
        self.pending.push(q);
    }

    fn remove(&mut self, id: QueryId) -> Option<PendingQuery> {
        let pos = self.pending.iter().position(|p| p.id == id)?;
        Some(self.pending.remove(pos))
    }
}

/// Signed accumulator of answers received while other queries are outstanding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collect {
    rows: DeltaRelation,
}

impl Collect {
    pub fn new(view_schema: Schema) -> Self {
        Collect { rows: DeltaRelation::empty(view_schema) }
    }

    pub fn card(&self) -> u64 {
        self.rows.card()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &DeltaRelation {
        &self.rows
    }
}

/// What happened when an answer arrived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerOutcome {
    /// Other queries are still outstanding; the answer was folded into COLLECT.
    Collected,
    /// The last outstanding answer arrived; apply this change set to the view.
    Flush(DeltaRelation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcaState {
    view: String,
    uqs: Uqs,
    collect: Collect,
    peak_collect: u64,
}

impl EcaState {
    pub fn new(view: impl Into<String>, view_schema: Schema) -> Self {
        EcaState { view: view.into(), uqs: Uqs::default(), collect: Collect::new(view_schema), peak_collect: 0 }
    }

    pub fn uqs(&self) -> &Uqs {
        &self.uqs
    }

    pub fn collect(&self) -> &Collect {
        &self.collect
    }

    /// Largest COLLECT cardinality seen so far.
    pub fn peak_collect(&self) -> u64 {
        self.peak_collect
    }

    /// Build Q = V⟨Δ⟩ − Σ_{Q_j ∈ UQS} Q_j⟨Δ⟩, record it as pending under `id`, and return
    /// it together with the number of pending queries that contributed a non-empty
    /// compensation.
    pub fn on_update(
        &mut self,
        id: QueryId,
        update: UpdateId,
        base: &str,
        delta: &DeltaRelation,
        now: u64,
    ) -> (QueryExpr, usize) {
        let mut expr = QueryExpr::substituted(&self.view, update, base, delta);
        let mut compensations = 0;
        for pending in self.uqs.iter() {
            let comp = pending.expr.substitute(update, base, delta);
            if !comp.is_empty() {
                compensations += 1;
                expr.add_scaled(&comp, -1);
            }
        }
        self.uqs.push(PendingQuery { id, expr: expr.clone(), issued_at: now });
        (expr, compensations)
    }

    pub fn on_answer(&mut self, id: QueryId, answer: &DeltaRelation) -> Result<AnswerOutcome> {
        if self.uqs.remove(id).is_none() {
            return Err(Error::Protocol(format!("answer for q{id} which is not pending")));
        }
        self.collect.rows.accumulate(answer, 1)?;
        self.peak_collect = self.peak_collect.max(self.collect.card());
        if self.uqs.is_empty() {
            let schema = self.collect.rows.schema().clone();
            let flushed = std::mem::replace(&mut self.collect.rows, DeltaRelation::empty(schema));
            Ok(AnswerOutcome::Flush(flushed))
        } else {
            Ok(AnswerOutcome::Collected)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::Tuple;

    fn schemas() -> (Schema, Schema, Schema) {
        (
            Schema::ints("r1", &["A", "B"], 8).unwrap(),
            Schema::ints("r2", &["B", "C"], 8).unwrap(),
            Schema::ints("V", &["A", "C"], 16).unwrap(),
        )
    }

    #[test]
    fn empty_uqs_means_no_compensation() {
        let (_, r2, v) = schemas();
        let mut eca = EcaState::new("V", v);
        let d = DeltaRelation::inserts(r2, [[2, 3]]).unwrap();
        let (q, n) = eca.on_update(1, 1, "r2", &d, 0);
        assert_eq!(n, 0);
        assert_eq!(q.terms.len(), 1);
        assert_eq!(eca.uqs().len(), 1);
    }

    #[test]
    fn each_pending_query_adds_one_compensation() {
        let (r1, r2, v) = schemas();
        let mut eca = EcaState::new("V", v);
        eca.on_update(1, 1, "r2", &DeltaRelation::inserts(r2.clone(), [[2, 3]]).unwrap(), 0);
        eca.on_update(2, 2, "r2", &DeltaRelation::inserts(r2, [[2, 4]]).unwrap(), 1);
        let (q, n) = eca.on_update(3, 3, "r1", &DeltaRelation::inserts(r1, [[4, 2]]).unwrap(), 2);
        assert_eq!(n, 2);
        assert_eq!(q.terms.len(), 3);
        assert_eq!(q.terms.iter().filter(|t| t.coeff == -1).count(), 2);
    }

    #[test]
    fn collect_flushes_only_when_uqs_drains() {
        let (_, r2, v) = schemas();
        let mut eca = EcaState::new("V", v.clone());
        let d = DeltaRelation::inserts(r2, [[2, 3]]).unwrap();
        eca.on_update(1, 1, "r2", &d, 0);
        eca.on_update(2, 2, "r2", &d, 0);
        let a = DeltaRelation::inserts(v.clone(), [[1, 3]]).unwrap();
        assert_eq!(eca.on_answer(1, &a).unwrap(), AnswerOutcome::Collected);
        assert_eq!(eca.collect().card(), 1);
        match eca.on_answer(2, &a).unwrap() {
            AnswerOutcome::Flush(rows) => assert_eq!(rows.multiplicity(&Tuple::from([1, 3])), 2),
            other => panic!("expected a flush, got {other:?}"),
        }
        assert!(eca.collect().is_empty());
        assert_eq!(eca.peak_collect(), 2);
        assert!(matches!(eca.on_answer(2, &a), Err(Error::Protocol(_))));
    }
}
