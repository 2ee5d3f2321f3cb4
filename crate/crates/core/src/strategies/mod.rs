//! Warehouse-side maintainers. Each is a state machine driven by the simulator: it
//! reacts to update notifications and query answers, charges the rows it reads, and
//! queues queries for the source through a [`Ctx`].

mod local;
mod nsmi;
mod nsmr;
mod runtime;
mod smi;
mod smr;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use nsmi::{EcaMaintainer, NaiveMaintainer};
pub use nsmr::NsmrMaintainer;
pub use runtime::RuntimeSmMaintainer;
pub use smi::SmiMaintainer;
pub use smr::SmrMaintainer;

use crate::error::{Error, Result};
use crate::protocol::{Answer, Query, QueryId, UpdateId};
use crate::relation::{AccessCounter, DeltaRelation, Relation};
use crate::view::{Catalog, ViewHierarchy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MaintainerKind {
    #[serde(rename = "SMR")]
    Smr,
    #[serde(rename = "NSMR")]
    Nsmr,
    #[serde(rename = "SMI")]
    Smi,
    #[serde(rename = "NSMI_ECA")]
    NsmiEca,
    #[serde(rename = "NSMI_NAIVE")]
    NsmiNaive,
    #[serde(rename = "RUNTIME_SM")]
    RuntimeSm,
}

impl MaintainerKind {
    pub const ALL: [MaintainerKind; 6] = [
        MaintainerKind::Smr,
        MaintainerKind::Nsmr,
        MaintainerKind::Smi,
        MaintainerKind::NsmiEca,
        MaintainerKind::NsmiNaive,
        MaintainerKind::RuntimeSm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MaintainerKind::Smr => "SMR",
            MaintainerKind::Nsmr => "NSMR",
            MaintainerKind::Smi => "SMI",
            MaintainerKind::NsmiEca => "NSMI_ECA",
            MaintainerKind::NsmiNaive => "NSMI_NAIVE",
            MaintainerKind::RuntimeSm => "RUNTIME_SM",
        }
    }

    /// Whether the warehouse keeps copies of base relations.
    pub fn replicates(self) -> bool {
        matches!(self, MaintainerKind::Smr | MaintainerKind::Smi | MaintainerKind::RuntimeSm)
    }

    /// Build a maintainer whose view reflects the `initial` base relations. The initial
    /// materialization is not charged.
    pub fn build(
        self,
        h: &ViewHierarchy,
        initial: &dyn Catalog,
        replication: Option<&BTreeSet<String>>,
    ) -> Result<Box<dyn Maintainer>> {
        h.validate()?;
        let bases = h.primary_bases();
        if let Some(declared) = replication {
            if let Some(extra) = declared.iter().find(|r| !bases.contains(*r)) {
                return Err(Error::Config(format!("replicated relation {extra} is not read by {}", h.primary())));
            }
        }
        let full_replicas = |kind: MaintainerKind| -> Result<BTreeSet<String>> {
            let replicas = replication.cloned().unwrap_or_else(|| bases.clone());
            match bases.iter().find(|b| !replicas.contains(*b)) {
                Some(missing) => Err(Error::Config(format!("{kind} needs a replica of {missing}"))),
                None => Ok(replicas),
            }
        };
        Ok(match self {
            MaintainerKind::Smr => Box::new(SmrMaintainer::new(h, initial, &full_replicas(self)?)?),
            MaintainerKind::Smi => Box::new(SmiMaintainer::new(h, initial, &full_replicas(self)?)?),
            MaintainerKind::RuntimeSm => {
                let replicas = replication.cloned().unwrap_or_else(|| bases.clone());
                Box::new(RuntimeSmMaintainer::new(h, initial, &replicas)?)
            }
            MaintainerKind::Nsmr => Box::new(NsmrMaintainer::new(h, initial)?),
            MaintainerKind::NsmiEca => Box::new(EcaMaintainer::new(h, initial)?),
            MaintainerKind::NsmiNaive => Box::new(NaiveMaintainer::new(h, initial)?),
        })
    }
}

impl fmt::Display for MaintainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaintainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MaintainerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown maintainer kind {s:?} (expected one of SMR, NSMR, SMI, NSMI_ECA, NSMI_NAIVE, RUNTIME_SM)"
                ))
            })
    }
}

/// Something a maintainer did that is worth recording in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Note {
    /// The update touches no relation the primary view reads.
    Unaffected { base: String },
    Maintained { view: String, delta_card: u64 },
    Recomputed { round: u64, card: u64 },
    Materialized { card: u64 },
    /// A recompute round finished after a newer one had already been materialized.
    Discarded { round: u64 },
    Compensations { query: QueryId, count: usize },
    Flush { view_card: u64, collect_card: u64 },
    Queued { update: UpdateId },
    Nav { count: usize },
}

impl fmt::Display for Note {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Note::Unaffected { base } => write!(f, "unaffected {base}"),
            Note::Maintained { view, delta_card } => write!(f, "maintained {view} delta_card={delta_card}"),
            Note::Recomputed { round, card } => write!(f, "recomputed round={round} card={card}"),
            Note::Materialized { card } => write!(f, "materialized card={card}"),
            Note::Discarded { round } => write!(f, "discarded round={round}"),
            Note::Compensations { query, count } => write!(f, "compensations q{query} count={count}"),
            Note::Flush { view_card, collect_card } => {
                write!(f, "flush view_card={view_card} collect_card={collect_card}")
            }
            Note::Queued { update } => write!(f, "queued #{update}"),
            Note::Nav { count } => write!(f, "nav {count}"),
        }
    }
}

/// Handler context: the row counter, an outbox for queries and a list of notes.
pub struct Ctx<'a> {
    counter: &'a mut AccessCounter,
    next_query: &'a mut QueryId,
    now: u64,
    outbox: Vec<(QueryId, Query)>,
    notes: Vec<Note>,
}

impl<'a> Ctx<'a> {
    pub fn new(counter: &'a mut AccessCounter, next_query: &'a mut QueryId, now: u64) -> Self {
        Ctx { counter, next_query, now, outbox: Vec::new(), notes: Vec::new() }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn counter(&mut self) -> &mut AccessCounter {
        self.counter
    }

    pub fn reserve_id(&mut self) -> QueryId {
        let id = *self.next_query;
        *self.next_query += 1;
        id
    }

    pub fn send_as(&mut self, id: QueryId, query: Query) {
        self.outbox.push((id, query));
    }

    pub fn send(&mut self, query: Query) -> QueryId {
        let id = self.reserve_id();
        self.send_as(id, query);
        id
    }

    pub fn note(&mut self, note: Note) {
        self.notes.push(note);
    }

    pub fn finish(self) -> (Vec<(QueryId, Query)>, Vec<Note>) {
        (self.outbox, self.notes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProtocolStatus {
    pub uqs_len: usize,
    pub collect_card: u64,
}

/// A snapshot of what the warehouse holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarehouseState {
    pub view: Relation,
    /// Replicas and auxiliary views.
    pub local_store: BTreeMap<String, Relation>,
    pub protocol: Option<ProtocolStatus>,
}

pub trait Maintainer: Send {
    fn kind(&self) -> MaintainerKind;

    fn on_update(&mut self, ctx: &mut Ctx<'_>, update: UpdateId, base: &str, delta: &DeltaRelation) -> Result<()>;

    fn on_answer(&mut self, ctx: &mut Ctx<'_>, id: QueryId, answer: Answer) -> Result<()>;

    fn current_view(&self) -> &Relation;

    /// Stored relations other than the primary view.
    fn local_store(&self) -> BTreeMap<String, Relation> {
        BTreeMap::new()
    }

    /// Queries sent and not yet answered, plus queued work.
    fn pending_queries(&self) -> usize;

    fn is_idle(&self) -> bool {
        self.pending_queries() == 0
    }

    fn protocol(&self) -> Option<ProtocolStatus> {
        None
    }

    /// Bytes held in temporary protocol tables right now.
    fn transient_bytes(&self) -> u64 {
        0
    }

    fn compensations(&self) -> u64 {
        0
    }

    /// Bytes held by the primary view and the local store.
    fn space_usage(&self) -> u64 {
        self.current_view().bytes() + self.local_store().values().map(Relation::bytes).sum::<u64>()
    }

    fn state(&self) -> WarehouseState {
        WarehouseState { view: self.current_view().clone(), local_store: self.local_store(), protocol: self.protocol() }
    }
}

fn initial_view(h: &ViewHierarchy, initial: &dyn Catalog) -> Result<Relation> {
    h.evaluate_primary(initial, crate::relation::Site::Warehouse, &mut AccessCounter::new())
}

fn answer_mismatch(kind: MaintainerKind, id: QueryId) -> Error {
    Error::Protocol(format!("{kind} received an answer for q{id} it did not ask for"))
}

#[cfg(test)]
mod tests;
