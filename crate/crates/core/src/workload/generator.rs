//! A miniature order-processing schema (customer, orders, lineitem) with referential
//! containment, an append stream, and the benchmark scenario built on it.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{DeltaRelation, Relation, Schema, Tuple};
use crate::sim::{LatencyModel, Scenario, ScheduledUpdate};
use crate::strategies::MaintainerKind;
use crate::view::{ViewDef, ViewHierarchy};

pub const CUSTOMER: &str = "customer";
pub const ORDERS: &str = "orders";
pub const LINEITEM: &str = "lineitem";
pub const NATIONS: i64 = 25;
pub const MAX_QTY: i64 = 50;

pub const BENCHMARK_SCALE: u64 = 1000;
pub const BENCHMARK_APPENDS: u64 = 100;
pub const BENCHMARK_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Rows in each relation.
    pub scale: u64,
    /// Single-row appends in the update stream, one per tick starting at t=1.
    #[serde(default)]
    pub appends: u64,
    /// Relative weight of each relation as an append target.
    #[serde(default = "default_mix")]
    pub mix: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_mix() -> BTreeMap<String, f64> {
    BTreeMap::from([(CUSTOMER.to_owned(), 0.1), (ORDERS.to_owned(), 0.3), (LINEITEM.to_owned(), 0.6)])
}

impl GeneratorSpec {
    pub fn new(scale: u64, appends: u64, seed: u64) -> Self {
        GeneratorSpec { scale, appends, mix: default_mix(), seed }
    }

    pub fn with_mix(mut self, mix: &[(&str, f64)]) -> Self {
        self.mix = mix.iter().map(|(r, w)| (r.to_string(), *w)).collect();
        self
    }
}

/// Schemas, initial data and updates produced by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub schemas: Vec<Schema>,
    pub data: BTreeMap<String, Relation>,
    pub updates: Vec<ScheduledUpdate>,
}

pub fn schemas() -> Vec<Schema> {
    [(CUSTOMER, ["custkey", "nation"]), (ORDERS, ["orderkey", "custkey"]), (LINEITEM, ["orderkey", "qty"])]
        .into_iter()
        .map(|(name, attrs)| Schema::ints(name, &attrs, 16).expect("valid schema"))
        .collect()
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    if spec.scale == 0 {
        return Err(Error::Config("generator scale must be at least 1".into()));
    }
    let schemas = schemas();
    let targets: Vec<(usize, f64)> = spec
        .mix
        .iter()
        .map(|(name, &w)| {
            let i = schemas
                .iter()
                .position(|s| s.name() == name)
                .ok_or_else(|| Error::Config(format!("mix names unknown relation {name}")))?;
            Ok((i, w))
        })
        .collect::<Result<_>>()?;
    let pick = if spec.appends == 0 {
        None
    } else {
        Some(
            WeightedIndex::new(targets.iter().map(|(_, w)| *w))
                .map_err(|e| Error::Config(format!("bad append mix: {e}")))?,
        )
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = spec.scale as i64;
    let mut customers = scale;
    let mut orders = scale;
    let mut rows: [Vec<Tuple>; 3] = Default::default();
    for k in 0..scale {
        rows[0].push(Tuple::new(vec![k.into(), rng.random_range(0..NATIONS).into()]));
    }
    for k in 0..scale {
        rows[1].push(Tuple::new(vec![k.into(), rng.random_range(0..customers).into()]));
    }
    for _ in 0..scale {
        rows[2].push(Tuple::new(vec![rng.random_range(0..orders).into(), rng.random_range(0..=MAX_QTY).into()]));
    }

    let mut updates = Vec::with_capacity(spec.appends as usize);
    for i in 0..spec.appends {
        let target = targets[pick.as_ref().expect("set when appends > 0").sample(&mut rng)].0;
        let row = match target {
            0 => {
                customers += 1;
                Tuple::new(vec![(customers - 1).into(), rng.random_range(0..NATIONS).into()])
            }
            1 => {
                orders += 1;
                Tuple::new(vec![(orders - 1).into(), rng.random_range(0..customers).into()])
            }
            _ => Tuple::new(vec![rng.random_range(0..orders).into(), rng.random_range(0..=MAX_QTY).into()]),
        };
        let schema = schemas[target].clone();
        updates.push(ScheduledUpdate {
            time: i + 1,
            base: schema.name().to_owned(),
            delta: DeltaRelation::inserts(schema, [row])?,
        });
    }

    let data = schemas
        .iter()
        .zip(rows)
        .map(|(s, r)| Ok((s.name().to_owned(), Relation::from_tuples(s.clone(), r)?)))
        .collect::<Result<_>>()?;
    Ok(Generated { schemas, data, updates })
}

/// V = Π nation, qty (σ qty > 0 (customer ⋈ orders ⋈ lineitem)).
pub fn benchmark_view() -> ViewDef {
    ViewDef::new("V", &[CUSTOMER, ORDERS, LINEITEM])
        .join_on(&["customer.custkey = orders.custkey", "orders.orderkey = lineitem.orderkey"])
        .and_then(|v| v.filter(&["lineitem.qty > 0"]))
        .and_then(|v| v.project(&["nation", "qty"]))
        .expect("valid view")
}

pub fn benchmark_hierarchy() -> ViewHierarchy {
    ViewHierarchy::build(schemas(), vec![benchmark_view()], "V").expect("valid hierarchy")
}

/// Queries take longer to reach the source than the gap between updates, so a delta query
/// usually meets later updates there. Answers return in one tick.
pub fn benchmark_latency() -> LatencyModel {
    LatencyModel::fixed(1, 3)
}

fn scenario_from(label: &str, g: Generated, kind: MaintainerKind) -> Scenario {
    let h = ViewHierarchy::build(g.schemas, vec![benchmark_view()], "V").expect("valid hierarchy");
    let mut s = Scenario::new(label, h, g.data, kind);
    s.updates = g.updates;
    s
}

/// Scale 1000, 100 appends, seed 42.
pub fn benchmark(kind: MaintainerKind) -> Scenario {
    let spec = GeneratorSpec::new(BENCHMARK_SCALE, BENCHMARK_APPENDS, BENCHMARK_SEED);
    let mut s = scenario_from("benchmark", generate(&spec).expect("valid generator spec"), kind);
    s.latency = benchmark_latency();
    s.seed = BENCHMARK_SEED;
    s
}

/// The benchmark with every query held back until the last update has reached the
/// source, so each pending query overlaps every later update.
pub fn benchmark_worst_case(kind: MaintainerKind) -> Scenario {
    let mut s = benchmark(kind);
    s.label = "benchmark-worst-case".into();
    let last = s.updates.iter().map(|u| u.time).max().unwrap_or(0);
    s.latency = LatencyModel::fixed(1, last + 2);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn keys(rel: &Relation, col: usize) -> BTreeSet<i64> {
        rel.iter()
            .map(|(t, _)| match &t.values()[col] {
                crate::relation::Value::Int(v) => *v,
                other => panic!("unexpected {other:?}"),
            })
            .collect()
    }

    #[test]
    fn scale_one_has_one_row_per_relation() {
        let g = generate(&GeneratorSpec::new(1, 0, 3)).unwrap();
        assert!(g.data.values().all(|r| r.card() == 1));
        assert!(g.updates.is_empty());
    }

    #[test]
    fn generated_keys_are_contained() {
        let g = generate(&GeneratorSpec::new(200, 50, 9)).unwrap();
        let customers = keys(&g.data[CUSTOMER], 0);
        let orders = keys(&g.data[ORDERS], 0);
        assert!(keys(&g.data[ORDERS], 1).is_subset(&customers));
        assert!(keys(&g.data[LINEITEM], 0).is_subset(&orders));
        assert!(g.data.values().all(|r| r.card() == 200));
        assert_eq!(g.updates.len(), 50);
        let times: Vec<u64> = g.updates.iter().map(|u| u.time).collect();
        assert_eq!(times, (1..=50).collect::<Vec<_>>());
    }

    #[test]
    fn appended_rows_reference_existing_keys() {
        let g = generate(&GeneratorSpec::new(20, 300, 1)).unwrap();
        let mut customers = keys(&g.data[CUSTOMER], 0);
        let mut orders = keys(&g.data[ORDERS], 0);
        for u in &g.updates {
            let rel = u.delta.to_relation().unwrap();
            match u.base.as_str() {
                CUSTOMER => customers.extend(keys(&rel, 0)),
                ORDERS => {
                    assert!(keys(&rel, 1).is_subset(&customers));
                    orders.extend(keys(&rel, 0));
                }
                _ => assert!(keys(&rel, 0).is_subset(&orders)),
            }
        }
    }

    #[test]
    fn degenerate_mix_targets_one_relation() {
        let g = generate(&GeneratorSpec::new(10, 100, 5).with_mix(&[(LINEITEM, 1.0)])).unwrap();
        assert!(g.updates.iter().all(|u| u.base == LINEITEM));
    }

    #[test]
    fn same_seed_same_data() {
        let spec = GeneratorSpec::new(1000, 100, 42);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GeneratorSpec { seed: 43, ..spec };
        assert_ne!(generate(&other).unwrap().data, generate(&GeneratorSpec::new(1000, 100, 42)).unwrap().data);
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(generate(&GeneratorSpec::new(0, 0, 0)).is_err());
        assert!(generate(&GeneratorSpec::new(5, 1, 0).with_mix(&[("nation", 1.0)])).is_err());
        assert!(generate(&GeneratorSpec::new(5, 1, 0).with_mix(&[(ORDERS, 0.0)])).is_err());
    }
}
