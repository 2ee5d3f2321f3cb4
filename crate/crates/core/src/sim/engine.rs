use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Channel, Delay, Scenario, Trace, TraceRecord};
use crate::error::{Error, Result};
use crate::protocol::{answer_query, Answer, Message, QueryId};
use crate::relation::{apply_delta_in_place, AccessCounter, Relation, Site};
use crate::strategies::{Ctx, Maintainer, MaintainerKind, Note, WarehouseState};

#[derive(Debug, Clone)]
enum Event {
    SourceUpdate(usize),
    Deliver(Channel, Message),
}

/// Everything a completed run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    pub kind: MaintainerKind,
    pub final_view: Relation,
    pub oracle: Relation,
    pub warehouse: WarehouseState,
    pub source: BTreeMap<String, Relation>,
    pub counter: AccessCounter,
    pub queries_sent: u64,
    pub messages: u64,
    pub compensations: u64,
    /// Bytes stored at the end of the run plus the largest transient protocol table.
    pub space_bytes: u64,
    pub peak_transient_bytes: u64,
    /// Largest number of distinct replicas read in one maintenance round.
    pub max_nav: usize,
    pub quiescent: bool,
    /// The view after every change, with the time of the change.
    pub view_history: Vec<(u64, Relation)>,
    pub trace: Trace,
}

impl RunOutcome {
    pub fn matches_oracle(&self) -> bool {
        self.final_view == self.oracle
    }
}

/// A run that stopped on an error, with the trace up to that point.
#[derive(Debug, Clone)]
pub struct Aborted {
    pub error: Error,
    pub trace: Trace,
}

impl fmt::Display for Aborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run aborted after {} trace records: {}", self.trace.len(), self.error)
    }
}

impl std::error::Error for Aborted {}

/// A simulation that can be advanced one event at a time.
pub struct Simulation {
    scenario: Scenario,
    updates: Vec<(u64, u64, String, crate::relation::DeltaRelation)>,
    source: BTreeMap<String, Relation>,
    maintainer: Box<dyn Maintainer>,
    counter: AccessCounter,
    next_query: QueryId,
    events: BTreeMap<(u64, u64), Event>,
    next_seq: u64,
    rng: ChaCha8Rng,
    sent: [u64; 2],
    last_delivery: [u64; 2],
    in_flight: usize,
    now: u64,
    queries_sent: u64,
    messages: u64,
    peak_transient: u64,
    max_nav: usize,
    view_history: Vec<(u64, Relation)>,
    trace: Trace,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let maintainer = scenario.kind.build(&scenario.hierarchy, &scenario.initial, scenario.replication.as_ref())?;
        let updates: Vec<_> = scenario
            .ordered_updates()
            .into_iter()
            .map(|(id, u)| (u.time, id, u.base.clone(), u.delta.clone()))
            .collect();
        let mut sim = Simulation {
            scenario: scenario.clone(),
            source: scenario.initial.clone(),
            maintainer,
            counter: AccessCounter::new(),
            next_query: 1,
            events: BTreeMap::new(),
            next_seq: 0,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            sent: [0; 2],
            last_delivery: [0; 2],
            in_flight: 0,
            now: 0,
            queries_sent: 0,
            messages: 0,
            peak_transient: 0,
            max_nav: 0,
            view_history: Vec::new(),
            trace: Trace::default(),
            updates,
        };
        for i in 0..sim.updates.len() {
            let time = sim.updates[i].0;
            sim.schedule(time, Event::SourceUpdate(i));
        }
        sim.trace.push(TraceRecord::Header {
            label: scenario.label.clone(),
            kind: scenario.kind,
            seed: scenario.seed,
        });
        sim.trace.push(TraceRecord::Init { view: sim.maintainer.current_view().clone() });
        Ok(sim)
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn maintainer(&self) -> &dyn Maintainer {
        self.maintainer.as_ref()
    }

    pub fn source(&self) -> &BTreeMap<String, Relation> {
        &self.source
    }

    pub fn counter(&self) -> AccessCounter {
        self.counter
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// No message in flight and nothing outstanding at the warehouse. Updates scheduled
    /// for later do not count.
    pub fn is_quiescent(&self) -> bool {
        self.in_flight == 0 && self.maintainer.is_idle()
    }

    pub fn has_events(&self) -> bool {
        !self.events.is_empty()
    }

    fn schedule(&mut self, time: u64, event: Event) {
        self.events.insert((time, self.next_seq), event);
        self.next_seq += 1;
    }

    fn send(&mut self, channel: Channel, message: Message) {
        let c = channel.index();
        let index = self.sent[c];
        self.sent[c] += 1;
        let forced = self.scenario.latency.overrides.iter().find(|o| o.channel == channel && o.index == index);
        let delay = match (forced, self.scenario.latency.delay(channel)) {
            (Some(o), _) => o.delay,
            (None, Delay::Fixed(d)) => d,
            (None, Delay::Uniform { min, max }) => self.rng.random_range(min..=max),
        };
        let deliver_at = (self.now + delay).max(self.last_delivery[c]);
        self.last_delivery[c] = deliver_at;
        if matches!(message, Message::Query { .. }) {
            self.queries_sent += 1;
        }
        self.messages += 1;
        self.in_flight += 1;
        self.trace.push(TraceRecord::Send { time: self.now, channel, deliver_at, message: summary(&message) });
        self.schedule(deliver_at, Event::Deliver(channel, message));
    }

    /// Process the next event. Returns `false` when none are left.
    pub fn step(&mut self) -> Result<bool> {
        let Some(((time, _), event)) = self.events.pop_first() else {
            return Ok(false);
        };
        self.now = time;
        let before = self.maintainer.current_view().clone();
        match event {
            Event::SourceUpdate(i) => {
                let (_, id, base, delta) = self.updates[i].clone();
                let rel = self
                    .source
                    .get_mut(&base)
                    .ok_or_else(|| Error::Catalog(format!("source has no relation {base}")))?;
                apply_delta_in_place(rel, &delta, Site::Source, &mut AccessCounter::new())?;
                self.trace.push(TraceRecord::SourceUpdate {
                    time,
                    update: id,
                    base: base.clone(),
                    delta: delta.to_string(),
                });
                self.send(Channel::ToWarehouse, Message::Notify { update: id, base, delta });
            }
            Event::Deliver(Channel::ToSource, message) => {
                self.in_flight -= 1;
                self.trace.push(TraceRecord::Receive { time, site: Site::Source, message: summary(&message) });
                let Message::Query { id, query } = message else {
                    return Err(Error::Protocol(format!("source cannot handle {message}")));
                };
                let answer = answer_query(&self.scenario.hierarchy, &query, &self.source, &mut self.counter)?;
                self.send(Channel::ToWarehouse, Message::Answer { id, answer });
            }
            Event::Deliver(Channel::ToWarehouse, message) => {
                self.in_flight -= 1;
                self.trace.push(TraceRecord::Receive { time, site: Site::Warehouse, message: summary(&message) });
                let mut ctx = Ctx::new(&mut self.counter, &mut self.next_query, time);
                match message {
                    Message::Notify { update, base, delta } => {
                        self.maintainer.on_update(&mut ctx, update, &base, &delta)?
                    }
                    Message::Answer { id, answer } => self.maintainer.on_answer(&mut ctx, id, answer)?,
                    Message::Query { .. } => {
                        return Err(Error::Protocol(format!("warehouse cannot handle {message}")));
                    }
                }
                let (outbox, notes) = ctx.finish();
                for note in notes {
                    if let Note::Nav { count } = note {
                        self.max_nav = self.max_nav.max(count);
                    }
                    self.trace.push(TraceRecord::Note { time, note });
                }
                for (id, query) in outbox {
                    self.send(Channel::ToSource, Message::Query { id, query });
                }
            }
        }
        self.peak_transient = self.peak_transient.max(self.maintainer.transient_bytes());
        let status = self.maintainer.protocol().unwrap_or_default();
        self.trace.push(TraceRecord::Counters {
            time,
            warehouse: self.counter.warehouse(),
            source: self.counter.source(),
            queries: self.queries_sent,
            uqs: status.uqs_len,
            collect: status.collect_card,
        });
        if *self.maintainer.current_view() != before {
            self.view_history.push((time, self.maintainer.current_view().clone()));
        }
        if self.is_quiescent() {
            self.trace.push(TraceRecord::Quiescent { time, view: self.maintainer.current_view().clone() });
        }
        Ok(true)
    }

    /// Run to completion and compare against the oracle.
    pub fn finish(mut self) -> std::result::Result<RunOutcome, Aborted> {
        loop {
            match self.step() {
                Ok(true) => {}
                Ok(false) => break,
                Err(error) => return Err(Aborted { error, trace: self.trace }),
            }
        }
        let oracle = match oracle_view(&self.scenario) {
            Ok(v) => v,
            Err(error) => return Err(Aborted { error, trace: self.trace }),
        };
        let final_view = self.maintainer.current_view().clone();
        let compensations = self.maintainer.compensations();
        self.trace.push(TraceRecord::Final {
            time: self.now,
            warehouse: self.counter.warehouse(),
            source: self.counter.source(),
            queries: self.queries_sent,
            compensations,
            view: final_view.clone(),
        });
        Ok(RunOutcome {
            label: self.scenario.label.clone(),
            kind: self.scenario.kind,
            oracle,
            warehouse: self.maintainer.state(),
            source: self.source,
            counter: self.counter,
            queries_sent: self.queries_sent,
            messages: self.messages,
            compensations,
            space_bytes: self.maintainer.space_usage() + self.peak_transient,
            peak_transient_bytes: self.peak_transient,
            max_nav: self.max_nav,
            quiescent: self.in_flight == 0 && self.maintainer.is_idle(),
            view_history: self.view_history,
            trace: self.trace,
            final_view,
        })
    }
}

fn summary(message: &Message) -> String {
    match message {
        Message::Answer { id, answer: Answer::Snapshot(r) } => {
            format!("answer q{id} snapshot {} card={}", r.schema().name(), r.card())
        }
        other => other.to_string(),
    }
}

/// Simulate `scenario` until no events remain.
pub fn run(scenario: &Scenario) -> std::result::Result<RunOutcome, Aborted> {
    let mut trace = Trace::default();
    trace.push(TraceRecord::Header { label: scenario.label.clone(), kind: scenario.kind, seed: scenario.seed });
    match Simulation::new(scenario) {
        Ok(sim) => sim.finish(),
        Err(error) => Err(Aborted { error, trace }),
    }
}

/// The primary view evaluated from scratch over the final source state.
pub fn oracle_view(scenario: &Scenario) -> Result<Relation> {
    let mut views = oracle_views(scenario)?;
    views
        .remove(scenario.hierarchy.primary())
        .ok_or_else(|| Error::Catalog(format!("primary view {} missing", scenario.hierarchy.primary())))
}

/// Every view evaluated from scratch over the final source state.
pub fn oracle_views(scenario: &Scenario) -> Result<BTreeMap<String, Relation>> {
    scenario.validate()?;
    let state = scenario.final_source()?;
    scenario.hierarchy.evaluate_all(&state, Site::Source, &mut AccessCounter::new())
}
