//! Seeded random scenarios over small join views.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::relation::{Relation, Schema, Tuple};
use crate::sim::{Delay, LatencyModel, Scenario};
use crate::strategies::MaintainerKind;
use crate::view::{ViewDef, ViewHierarchy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub max_bases: usize,
    pub max_rows: u64,
    pub max_updates: usize,
    /// Join keys are drawn from `0..key_domain`.
    pub key_domain: i64,
    pub max_delay: u64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { max_bases: 4, max_rows: 1000, max_updates: 50, key_domain: 1000, max_delay: 8 }
    }
}

fn delay(rng: &mut ChaCha8Rng, max: u64) -> Delay {
    let min = rng.random_range(1..=max);
    if rng.random_bool(0.25) {
        Delay::Fixed(min)
    } else {
        Delay::Uniform { min, max: rng.random_range(min..=max) }
    }
}

/// Bases r1..rN with attributes (k, a). V joins them on k, sometimes through an
/// intermediate view over r1 and r2, with an optional filter on r1.a.
pub fn random_scenario(seed: u64, spec: &RandomSpec) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=spec.max_bases.max(1));
    let names: Vec<String> = (1..=n).map(|i| format!("r{i}")).collect();
    let schemas: Vec<Schema> =
        names.iter().map(|b| Schema::ints(b, &["k", "a"], 16).expect("valid schema")).collect();

    let row = |rng: &mut ChaCha8Rng| Tuple::new(vec![rng.random_range(0..spec.key_domain).into(), rng.random_range(0..10).into()]);
    let initial: BTreeMap<String, Relation> = schemas
        .iter()
        .map(|s| {
            let rows = rng.random_range(0..=spec.max_rows);
            let tuples: Vec<Tuple> = (0..rows).map(|_| row(&mut rng)).collect();
            (s.name().to_owned(), Relation::from_tuples(s.clone(), tuples).expect("valid rows"))
        })
        .collect();

    let filter = rng.random_bool(0.5).then(|| format!("r1.a > {}", rng.random_range(0..9)));
    let nested = n >= 3 && rng.random_bool(0.5);
    let mut views = Vec::new();
    let operands: Vec<String> = if nested {
        let w = ViewDef::new("w12", &["r1", "r2"])
            .join_on(&["r1.k = r2.k"])
            .and_then(|v| v.project(&["r1.k as k", "r1.a as a", "r2.a as b"]))
            .expect("valid view");
        views.push(w);
        ["w12".to_owned()].into_iter().chain(names[2..].iter().cloned()).collect()
    } else {
        names.clone()
    };
    let ops: Vec<&str> = operands.iter().map(String::as_str).collect();
    let conds: Vec<String> = ops[1..].iter().map(|o| format!("{}.k = {o}.k", ops[0])).collect();
    let conds: Vec<&str> = conds.iter().map(String::as_str).collect();
    let mut v = ViewDef::new("V", &ops).join_on(&conds).expect("valid join");
    if let Some(f) = &filter {
        let f = if nested { f.replace("r1.a", "w12.a") } else { f.clone() };
        v = v.filter(&[&f]).expect("valid filter");
    }
    let last = ops[ops.len() - 1];
    v = v.project(&[&format!("{}.k as k", ops[0]), &format!("{last}.a as a")]).expect("valid projection");
    views.insert(0, v);
    let h = ViewHierarchy::build(schemas, views, "V").expect("valid hierarchy");

    let mut s = Scenario::new(format!("random-{seed}"), h, initial, MaintainerKind::Smi);
    let updates = rng.random_range(0..=spec.max_updates);
    let horizon = (updates as u64 * 2).max(1);
    for _ in 0..updates {
        let base = names.choose(&mut rng).expect("at least one base").clone();
        let time = rng.random_range(0..=horizon);
        let t = row(&mut rng);
        s.insert_at(time, &base, [t]).expect("valid update");
    }
    s.latency = LatencyModel {
        to_warehouse: delay(&mut rng, spec.max_delay),
        to_source: delay(&mut rng, spec.max_delay),
        overrides: Vec::new(),
    };
    s.seed = seed;
    s
}

/// A random non-empty proper subset of the bases `s` reads, or all of them for a single base.
pub fn partial_replication(s: &Scenario, seed: u64) -> BTreeSet<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let bases: Vec<String> = s.hierarchy.primary_bases().into_iter().collect();
    if bases.len() == 1 {
        return bases.into_iter().collect();
    }
    let keep = rng.random_range(1..bases.len());
    bases.choose_multiple(&mut rng, keep).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_respect_the_bounds() {
        let spec = RandomSpec::default();
        for seed in 0..50 {
            let s = random_scenario(seed, &spec);
            s.validate().unwrap();
            assert!(s.hierarchy.bases().len() <= 4);
            assert!(s.initial.values().all(|r| r.card() <= 1000));
            assert!(s.updates.len() <= 50);
            assert!(s.updates.iter().all(|u| u.delta.card() == 1));
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let spec = RandomSpec::default();
        assert_eq!(random_scenario(11, &spec), random_scenario(11, &spec));
        assert_ne!(random_scenario(11, &spec), random_scenario(12, &spec));
    }

    #[test]
    fn partial_replication_is_proper() {
        let spec = RandomSpec::default();
        for seed in 0..30 {
            let s = random_scenario(seed, &spec);
            let r = partial_replication(&s, seed);
            let all = s.hierarchy.primary_bases();
            assert!(!r.is_empty() && r.is_subset(&all));
            assert!(all.len() == 1 || r.len() < all.len());
        }
    }
}
