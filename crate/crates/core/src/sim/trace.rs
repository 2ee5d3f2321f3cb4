use std::fmt;

use super::Channel;
use crate::relation::{Relation, Site};
use crate::strategies::{MaintainerKind, Note};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceRecord {
    Header { label: String, kind: MaintainerKind, seed: u64 },
    Init { view: Relation },
    SourceUpdate { time: u64, update: u64, base: String, delta: String },
    Send { time: u64, channel: Channel, deliver_at: u64, message: String },
    Receive { time: u64, site: Site, message: String },
    Note { time: u64, note: Note },
    Counters { time: u64, warehouse: u64, source: u64, queries: u64, uqs: usize, collect: u64 },
    Quiescent { time: u64, view: Relation },
    Final { time: u64, warehouse: u64, source: u64, queries: u64, compensations: u64, view: Relation },
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRecord::Header { label, kind, seed } => write!(f, "# scenario={label} kind={kind} seed={seed}"),
            TraceRecord::Init { view } => write!(f, "t=0 init {view}"),
            TraceRecord::SourceUpdate { time, update, base, delta } => {
                write!(f, "t={time} source update #{update} {base} {delta}")
            }
            TraceRecord::Send { time, channel, deliver_at, message } => {
                write!(f, "t={time} send {channel} deliver_at={deliver_at} {message}")
            }
            TraceRecord::Receive { time, site, message } => write!(f, "t={time} recv {site} {message}"),
            TraceRecord::Note { time, note } => write!(f, "t={time} note {note}"),
            TraceRecord::Counters { time, warehouse, source, queries, uqs, collect } => write!(
                f,
                "t={time} counters warehouse={warehouse} source={source} queries={queries} uqs={uqs} collect={collect}"
            ),
            TraceRecord::Quiescent { time, view } => write!(f, "t={time} quiescent {view}"),
            TraceRecord::Final { time, warehouse, source, queries, compensations, view } => write!(
                f,
                "t={time} final warehouse={warehouse} source={source} queries={queries} compensations={compensations} {view}"
            ),
        }
    }
}

/// The ordered log of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Notes in order, with their times.
    pub fn notes(&self) -> impl Iterator<Item = (u64, &Note)> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Note { time, note } => Some((*time, note)),
            _ => None,
        })
    }

    /// Views dumped at each quiescent point.
    pub fn quiescent_views(&self) -> impl Iterator<Item = (u64, &Relation)> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Quiescent { time, view } => Some((*time, view)),
            _ => None,
        })
    }

    /// The update records only; these do not depend on the maintainer.
    pub fn source_updates(&self) -> Vec<&TraceRecord> {
        self.records.iter().filter(|r| matches!(r, TraceRecord::SourceUpdate { .. })).collect()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
