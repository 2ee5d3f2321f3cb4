//! Measured costs of simulated runs and closed-form predictions for single updates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::relation::{cross_product_size, nested_loop_accesses, AccessCounter, DeltaRelation, Site};
use crate::sim::{run, Aborted, RunOutcome, Scenario};
use crate::strategies::MaintainerKind;

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub label: String,
    pub kind: MaintainerKind,
    pub space_bytes: u64,
    pub rows_warehouse: u64,
    pub rows_source: u64,
    pub queries_sent: u64,
    pub messages: u64,
    pub compensations: u64,
    pub nav_max: usize,
    pub oracle_match: bool,
}

impl CostReport {
    pub fn rows_total(&self) -> u64 {
        self.rows_warehouse.saturating_add(self.rows_source)
    }
}

pub fn measure(outcome: &RunOutcome) -> CostReport {
    CostReport {
        label: outcome.label.clone(),
        kind: outcome.kind,
        space_bytes: outcome.space_bytes,
        rows_warehouse: outcome.counter.warehouse(),
        rows_source: outcome.counter.source(),
        queries_sent: outcome.queries_sent,
        messages: outcome.messages,
        compensations: outcome.compensations,
        nav_max: outcome.max_nav,
        oracle_match: outcome.matches_oracle(),
    }
}

/// Run `scenario` once per kind (in parallel) and report in the order given.
pub fn compare(scenario: &Scenario, kinds: &[MaintainerKind]) -> std::result::Result<Vec<CostReport>, Aborted> {
    kinds.par_iter().map(|&k| run(&scenario.with_kind(k)).map(|o| measure(&o))).collect()
}

/// Cardinalities around a single update to one operand of a view over base relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateProfile {
    /// Card of each operand before the update, in join order.
    pub operand_cards: Vec<u64>,
    pub updated_operand: usize,
    /// Card of each update in the schedule; the model covers exactly one.
    pub update_cards: Vec<u64>,
    pub view_card_before: u64,
    pub view_delta_card: u64,
}

impl UpdateProfile {
    pub fn single(operand_cards: &[u64], updated_operand: usize, update_card: u64) -> Self {
        UpdateProfile {
            operand_cards: operand_cards.to_vec(),
            updated_operand,
            update_cards: vec![update_card],
            view_card_before: 0,
            view_delta_card: 0,
        }
    }

    pub fn with_view(mut self, before: u64, delta: u64) -> Self {
        self.view_card_before = before;
        self.view_delta_card = delta;
        self
    }

    /// Profile of a scenario whose primary view joins base relations directly and whose
    /// schedule holds a single update.
    pub fn for_scenario(s: &Scenario) -> Result<Self> {
        s.validate()?;
        let h = &s.hierarchy;
        let def = h.primary_def();
        if let Some(v) = def.operands.iter().find(|o| !h.is_base(o)) {
            return Err(Error::Analytic(format!("operand {v} is a view; only single-level views are modelled")));
        }
        let [update] = s.updates.as_slice() else {
            return Err(Error::Analytic(format!("{} updates scheduled; the model covers one", s.updates.len())));
        };
        let updated_operand = def
            .position(&update.base)
            .ok_or_else(|| Error::Analytic(format!("{} is not an operand of {}", update.base, def.name)))?;
        let operand_cards = def.operands.iter().map(|o| s.initial[o].card()).collect();
        let mut scratch = AccessCounter::new();
        let before = h.evaluate_primary(&s.initial, Site::Source, &mut scratch)?;
        let after = h.evaluate_primary(&s.final_source()?, Site::Source, &mut scratch)?;
        let mut delta = DeltaRelation::from_relation(&after);
        delta.accumulate(&DeltaRelation::from_relation(&before), -1)?;
        Ok(UpdateProfile {
            operand_cards,
            updated_operand,
            update_cards: vec![update.delta.card()],
            view_card_before: before.card(),
            view_delta_card: delta.card(),
        })
    }

    fn check(&self) -> Result<u64> {
        if self.updated_operand >= self.operand_cards.len() {
            return Err(Error::Analytic(format!(
                "updated operand {} out of range for {} operands",
                self.updated_operand,
                self.operand_cards.len()
            )));
        }
        match self.update_cards.as_slice() {
            [u] => Ok(*u),
            other => Err(Error::Analytic(format!("{} updates given; the model covers one", other.len()))),
        }
    }
}

/// Predicted row accesses per site, with the leading product term of the join count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnalyticRows {
    pub warehouse: u64,
    pub source: u64,
    pub leading_term: u64,
}

impl AnalyticRows {
    pub fn total(&self) -> u64 {
        self.warehouse + self.source
    }
}

pub fn analytic_rows(kind: MaintainerKind, p: &UpdateProfile) -> Result<AnalyticRows> {
    let u = p.check()?;
    let updated = p.operand_cards[p.updated_operand];
    let mut after = p.operand_cards.clone();
    after[p.updated_operand] += u;
    let mut delta_join = p.operand_cards.clone();
    delta_join[p.updated_operand] = u;
    let view_after = p.view_card_before + p.view_delta_card;
    let propagation = updated + u;
    Ok(match kind {
        MaintainerKind::Smr if u == 0 => AnalyticRows { warehouse: updated, source: 0, leading_term: 0 },
        MaintainerKind::Smr => AnalyticRows {
            warehouse: propagation + nested_loop_accesses(&after),
            source: 0,
            leading_term: cross_product_size(&after),
        },
        MaintainerKind::Nsmr => AnalyticRows {
            warehouse: view_after,
            source: nested_loop_accesses(&after),
            leading_term: cross_product_size(&after),
        },
        MaintainerKind::Smi | MaintainerKind::RuntimeSm if u == 0 => {
            AnalyticRows { warehouse: updated, source: 0, leading_term: 0 }
        }
        MaintainerKind::Smi | MaintainerKind::RuntimeSm => AnalyticRows {
            warehouse: propagation + nested_loop_accesses(&delta_join) + p.view_card_before + p.view_delta_card,
            source: 0,
            leading_term: cross_product_size(&delta_join),
        },
        MaintainerKind::NsmiEca | MaintainerKind::NsmiNaive if u == 0 => {
            AnalyticRows { warehouse: 0, source: 0, leading_term: 0 }
        }
        MaintainerKind::NsmiEca | MaintainerKind::NsmiNaive => AnalyticRows {
            warehouse: p.view_card_before + p.view_delta_card,
            source: nested_loop_accesses(&delta_join),
            leading_term: cross_product_size(&delta_join),
        },
    })
}

/// Stored cardinalities and tuple sizes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpaceProfile {
    pub view_card: u64,
    pub view_tuple_size: u64,
    /// (Card, ts) of each replicated base relation.
    pub replicas: Vec<(u64, u64)>,
    /// (Card, ts) of each auxiliary view.
    pub auxiliary: Vec<(u64, u64)>,
    pub peak_collect: u64,
}

pub fn analytic_space(kind: MaintainerKind, p: &SpaceProfile) -> u64 {
    let view = p.view_card * p.view_tuple_size;
    let stored = |rels: &[(u64, u64)]| rels.iter().map(|(c, ts)| c * ts).sum::<u64>();
    match kind {
        MaintainerKind::Nsmr | MaintainerKind::NsmiNaive => view,
        MaintainerKind::NsmiEca => view + p.peak_collect * p.view_tuple_size,
        MaintainerKind::Smr | MaintainerKind::Smi | MaintainerKind::RuntimeSm => {
            stored(&p.replicas) + stored(&p.auxiliary) + view
        }
    }
}
