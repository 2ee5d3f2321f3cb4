//! Deterministic discrete-event simulation of one source and one warehouse connected by
//! two FIFO message channels with configurable latencies.

mod engine;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use engine::{oracle_view, oracle_views, run, Aborted, RunOutcome, Simulation};
pub use trace::{Trace, TraceRecord};

use crate::error::{Error, Result};
use crate::relation::{apply_delta_in_place, AccessCounter, DeltaRelation, Relation, Site};
use crate::strategies::MaintainerKind;
use crate::view::ViewHierarchy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    ToWarehouse,
    ToSource,
}

impl Channel {
    fn index(self) -> usize {
        match self {
            Channel::ToWarehouse => 0,
            Channel::ToSource => 1,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::ToWarehouse => "to_warehouse",
            Channel::ToSource => "to_source",
        })
    }
}

/// Per-message delay in ticks: a constant, or drawn uniformly from `min..=max` using the
/// scenario seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delay {
    Fixed(u64),
    Uniform { min: u64, max: u64 },
}

impl Default for Delay {
    fn default() -> Self {
        Delay::Fixed(1)
    }
}

/// Forces the delay of the `index`-th message (counting from 0) sent on `channel`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayOverride {
    pub channel: Channel,
    pub index: u64,
    pub delay: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LatencyModel {
    pub to_warehouse: Delay,
    pub to_source: Delay,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<DelayOverride>,
}

impl LatencyModel {
    pub fn fixed(to_warehouse: u64, to_source: u64) -> Self {
        LatencyModel { to_warehouse: Delay::Fixed(to_warehouse), to_source: Delay::Fixed(to_source), overrides: Vec::new() }
    }

    pub fn uniform(min: u64, max: u64) -> Self {
        let d = Delay::Uniform { min, max };
        LatencyModel { to_warehouse: d, to_source: d, overrides: Vec::new() }
    }

    pub fn with_override(mut self, channel: Channel, index: u64, delay: u64) -> Self {
        self.overrides.push(DelayOverride { channel, index, delay });
        self
    }

    fn delay(&self, channel: Channel) -> Delay {
        match channel {
            Channel::ToWarehouse => self.to_warehouse,
            Channel::ToSource => self.to_source,
        }
    }

    fn validate(&self) -> Result<()> {
        for d in [self.to_warehouse, self.to_source] {
            if let Delay::Uniform { min, max } = d {
                if min > max {
                    return Err(Error::Config(format!("latency range {min}..={max} is empty")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledUpdate {
    pub time: u64,
    pub base: String,
    pub delta: DeltaRelation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub label: String,
    pub hierarchy: ViewHierarchy,
    pub initial: BTreeMap<String, Relation>,
    pub updates: Vec<ScheduledUpdate>,
    pub kind: MaintainerKind,
    /// Base relations copied to the warehouse; `None` lets each kind pick its default.
    pub replication: Option<BTreeSet<String>>,
    pub latency: LatencyModel,
    pub seed: u64,
}

impl Scenario {
    /// A scenario with no updates, fixed unit latencies and seed 0.
    pub fn new(
        label: impl Into<String>,
        hierarchy: ViewHierarchy,
        initial: BTreeMap<String, Relation>,
        kind: MaintainerKind,
    ) -> Self {
        Scenario {
            label: label.into(),
            hierarchy,
            initial,
            updates: Vec::new(),
            kind,
            replication: None,
            latency: LatencyModel::fixed(1, 1),
            seed: 0,
        }
    }

    pub fn with_kind(&self, kind: MaintainerKind) -> Scenario {
        Scenario { kind, ..self.clone() }
    }

    /// Append an insertion of `tuples` into `base` at `time`.
    pub fn insert_at<I, T>(&mut self, time: u64, base: &str, tuples: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: Into<crate::relation::Tuple>,
    {
        let schema = self
            .hierarchy
            .base(base)
            .ok_or_else(|| Error::Catalog(format!("unknown base relation {base}")))?
            .clone();
        let delta = DeltaRelation::inserts(schema, tuples)?;
        self.updates.push(ScheduledUpdate { time, base: base.to_owned(), delta });
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.hierarchy.validate()?;
        for schema in self.hierarchy.bases() {
            let rel = self
                .initial
                .get(schema.name())
                .ok_or_else(|| Error::Config(format!("no initial contents for base relation {}", schema.name())))?;
            if !rel.schema().compatible(schema) {
                return Err(Error::Schema(format!("initial contents {} do not match {}", rel.schema(), schema)));
            }
        }
        if let Some(extra) = self.initial.keys().find(|k| !self.hierarchy.is_base(k)) {
            return Err(Error::Config(format!("initial contents given for unknown relation {extra}")));
        }
        for u in &self.updates {
            let schema = self
                .hierarchy
                .base(&u.base)
                .ok_or_else(|| Error::Config(format!("update targets unknown base relation {}", u.base)))?;
            if !u.delta.schema().compatible(schema) {
                return Err(Error::Schema(format!("update on {} has schema {}", u.base, u.delta.schema())));
            }
            if !u.delta.is_pure_insert() {
                return Err(Error::Config(format!("update on {} at t={} is not a pure insertion", u.base, u.time)));
            }
        }
        self.latency.validate()
    }

    /// Updates in the order the source applies them, numbered from 1.
    pub(crate) fn ordered_updates(&self) -> Vec<(u64, &ScheduledUpdate)> {
        let mut order: Vec<&ScheduledUpdate> = self.updates.iter().collect();
        order.sort_by_key(|u| u.time);
        order.into_iter().enumerate().map(|(i, u)| (i as u64 + 1, u)).collect()
    }

    /// Base relations after every scheduled update.
    pub fn final_source(&self) -> Result<BTreeMap<String, Relation>> {
        let mut state = self.initial.clone();
        let mut scratch = AccessCounter::new();
        for (_, u) in self.ordered_updates() {
            let rel = state.get_mut(&u.base).ok_or_else(|| Error::Catalog(format!("unknown base {}", u.base)))?;
            apply_delta_in_place(rel, &u.delta, Site::Source, &mut scratch)?;
        }
        Ok(state)
    }
}
