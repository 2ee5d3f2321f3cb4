//! Messages exchanged between the source and the warehouse, and the delta-substituted
//! view expressions the warehouse sends as queries.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::relation::{AccessCounter, DeltaRelation, Relation, Site};
use crate::view::{evaluate_signed, Catalog, JoinInput, ViewHierarchy};

pub type UpdateId = u64;
pub type QueryId = u64;

/// One signed summand of a [`QueryExpr`]: the primary view with some base relations
/// replaced by the change sets of specific updates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: i64,
    pub bindings: BTreeMap<String, UpdateId>,
}

/// Σ coeff · V⟨bindings⟩, with the referenced change sets shipped inline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryExpr {
    pub view: String,
    pub terms: Vec<Term>,
    pub deltas: BTreeMap<UpdateId, DeltaRelation>,
}

impl QueryExpr {
    /// V⟨Δ⟩ for one update on `base`.
    pub fn substituted(view: &str, update: UpdateId, base: &str, delta: &DeltaRelation) -> Self {
        QueryExpr {
            view: view.to_owned(),
            terms: vec![Term { coeff: 1, bindings: BTreeMap::from([(base.to_owned(), update)]) }],
            deltas: BTreeMap::from([(update, delta.clone())]),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Replace `base` by the change set of `update` in every term that still reads the
    /// live relation. Terms that already read a change set for `base` have no occurrence
    /// left to substitute and drop out.
    pub fn substitute(&self, update: UpdateId, base: &str, delta: &DeltaRelation) -> QueryExpr {
        let terms: Vec<Term> = self
            .terms
            .iter()
            .filter(|t| !t.bindings.contains_key(base))
            .map(|t| {
                let mut bindings = t.bindings.clone();
                bindings.insert(base.to_owned(), update);
                Term { coeff: t.coeff, bindings }
            })
            .collect();
        let mut out = QueryExpr { view: self.view.clone(), terms, deltas: BTreeMap::new() };
        if !out.terms.is_empty() {
            out.deltas = self.deltas.clone();
            out.deltas.insert(update, delta.clone());
        }
        out.prune_deltas();
        out
    }

    /// self += factor · other, merging terms with identical bindings.
    pub fn add_scaled(&mut self, other: &QueryExpr, factor: i64) {
        for t in &other.terms {
            match self.terms.iter_mut().find(|s| s.bindings == t.bindings) {
                Some(s) => s.coeff += factor * t.coeff,
                None => self.terms.push(Term { coeff: factor * t.coeff, bindings: t.bindings.clone() }),
            }
        }
        self.terms.retain(|t| t.coeff != 0);
        for (id, d) in &other.deltas {
            self.deltas.entry(*id).or_insert_with(|| d.clone());
        }
        self.prune_deltas();
    }

    fn prune_deltas(&mut self) {
        let used: std::collections::BTreeSet<UpdateId> =
            self.terms.iter().flat_map(|t| t.bindings.values().copied()).collect();
        self.deltas.retain(|id, _| used.contains(id));
    }

    /// Evaluate against `live` relations for every unbound base.
    pub fn evaluate(
        &self,
        h: &ViewHierarchy,
        live: &dyn Catalog,
        site: Site,
        counter: &mut AccessCounter,
    ) -> Result<DeltaRelation> {
        let schema = h.schema_of(&self.view)?;
        let mut out = DeltaRelation::empty(schema);
        for term in &self.terms {
            let value = eval_node(h, &self.view, term, &self.deltas, live, site, counter)?;
            let value = match value {
                Node::Live(r) => DeltaRelation::from_relation(r),
                Node::Bound(d) => d.clone(),
                Node::Computed(d) => d,
            };
            out.accumulate(&value, term.coeff)?;
        }
        Ok(out)
    }
}

enum Node<'a> {
    Live(&'a Relation),
    Bound(&'a DeltaRelation),
    Computed(DeltaRelation),
}

fn eval_node<'a>(
    h: &ViewHierarchy,
    name: &str,
    term: &Term,
    deltas: &'a BTreeMap<UpdateId, DeltaRelation>,
    live: &'a dyn Catalog,
    site: Site,
    counter: &mut AccessCounter,
) -> Result<Node<'a>> {
    if h.is_base(name) {
        return match term.bindings.get(name) {
            Some(id) => deltas
                .get(id)
                .map(Node::Bound)
                .ok_or_else(|| Error::Protocol(format!("query references unknown update {id}"))),
            None => live
                .relation(name)
                .map(Node::Live)
                .ok_or_else(|| Error::Catalog(format!("source has no relation {name}"))),
        };
    }
    let def = h.view(name).ok_or_else(|| Error::Catalog(format!("unknown view {name}")))?;
    let children = def
        .operands
        .iter()
        .map(|o| eval_node(h, o, term, deltas, live, site, counter))
        .collect::<Result<Vec<_>>>()?;
    let inputs: Vec<JoinInput<'_>> = children
        .iter()
        .map(|c| match c {
            Node::Live(r) => JoinInput::Rel(r),
            Node::Bound(d) => JoinInput::Delta(d),
            Node::Computed(d) => JoinInput::Delta(d),
        })
        .collect();
    Ok(Node::Computed(evaluate_signed(def, &inputs, site, counter)?))
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("∅");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let sign = if t.coeff < 0 { "-" } else if i > 0 { "+" } else { "" };
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(sign)?;
            if t.coeff.abs() != 1 {
                write!(f, "{}·", t.coeff.abs())?;
            }
            write!(f, "{}⟨", self.view)?;
            for (j, (base, id)) in t.bindings.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{base}:=Δ#{id}")?;
            }
            f.write_str("⟩")?;
        }
        for (id, d) in &self.deltas {
            write!(f, " where Δ#{id} = {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// Ship the current contents of a base relation.
    Fetch { base: String },
    /// Evaluate a delta-substituted view expression.
    Delta(QueryExpr),
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Fetch { base } => write!(f, "fetch {base}"),
            Query::Delta(e) => write!(f, "delta {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    Snapshot(Relation),
    Delta(DeltaRelation),
}

impl Answer {
    pub fn card(&self) -> u64 {
        match self {
            Answer::Snapshot(r) => r.card(),
            Answer::Delta(d) => d.card(),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Snapshot(r) => write!(f, "{r}"),
            Answer::Delta(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Notify { update: UpdateId, base: String, delta: DeltaRelation },
    Query { id: QueryId, query: Query },
    Answer { id: QueryId, answer: Answer },
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Notify { update, base, delta } => write!(f, "notify #{update} {base} {delta}"),
            Message::Query { id, query } => write!(f, "query q{id} {query}"),
            Message::Answer { id, answer } => write!(f, "answer q{id} {answer}"),
        }
    }
}

/// Answer `query` against the source's current relations.
pub fn answer_query(
    h: &ViewHierarchy,
    query: &Query,
    live: &dyn Catalog,
    counter: &mut AccessCounter,
) -> Result<Answer> {
    match query {
        Query::Fetch { base } => live
            .relation(base)
            .cloned()
            .map(Answer::Snapshot)
            .ok_or_else(|| Error::Catalog(format!("source has no relation {base}"))),
        Query::Delta(expr) => expr.evaluate(h, live, Site::Source, counter).map(Answer::Delta),
    }
}
