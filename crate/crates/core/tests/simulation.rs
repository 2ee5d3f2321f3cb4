use vmsim_core::relation::Tuple;
use vmsim_core::sim::{run, LatencyModel, Simulation, TraceRecord};
use vmsim_core::strategies::Note;
use vmsim_core::workload::fixtures::{anomaly, mixed_snapshot, star_join};
use vmsim_core::{MaintainerKind, Relation, Scenario, Value};

fn rows(r: &Relation) -> Vec<(Vec<i64>, u64)> {
    r.iter()
        .map(|(t, &n)| {
            let ints = t.values().iter().map(|v| match v {
                Value::Int(i) => *i,
                other => panic!("unexpected {other:?}"),
            });
            (ints.collect(), n)
        })
        .collect()
}

#[test]
fn eca_compensates_the_anomalous_interleaving() {
    let out = run(&anomaly(MaintainerKind::NsmiEca)).unwrap();
    assert_eq!(rows(&out.final_view), vec![(vec![1, 3], 1), (vec![4, 3], 1)]);
    assert!(out.matches_oracle());
    assert_eq!(out.compensations, 1);
    assert!(out.quiescent);
}

#[test]
fn naive_delta_queries_double_count_under_the_same_interleaving() {
    let out = run(&anomaly(MaintainerKind::NsmiNaive)).unwrap();
    assert_eq!(rows(&out.final_view), vec![(vec![1, 3], 1), (vec![4, 3], 2)]);
    assert!(!out.matches_oracle());
    assert_eq!(out.compensations, 0);
}

#[test]
fn every_other_kind_converges_on_the_anomaly_schedule() {
    for kind in [MaintainerKind::Smr, MaintainerKind::Smi, MaintainerKind::Nsmr, MaintainerKind::RuntimeSm] {
        let out = run(&anomaly(kind)).unwrap();
        assert!(out.matches_oracle(), "{kind}");
    }
}

#[test]
fn nsmr_materializes_a_state_the_source_never_had() {
    let out = run(&mixed_snapshot(MaintainerKind::Nsmr)).unwrap();
    assert!(out.matches_oracle());
    let seen: Vec<_> = out.view_history.iter().map(|(_, v)| rows(v)).collect();
    let mixed = vec![(vec![1, 3], 1), (vec![1, 6], 1)];
    assert!(seen.contains(&mixed), "history {seen:?}");

    // No source state between updates yields that view.
    let s = mixed_snapshot(MaintainerKind::Nsmr);
    for prefix in 0..=s.updates.len() {
        let mut partial = s.clone();
        partial.updates.truncate(prefix);
        let oracle = vmsim_core::sim::oracle_view(&partial).unwrap();
        assert_ne!(rows(&oracle), mixed, "prefix {prefix}");
    }
    assert!(out.trace.notes().any(|(_, n)| matches!(n, Note::Materialized { .. })));
}

#[test]
fn quiescent_records_match_the_oracle_at_that_point() {
    for kind in MaintainerKind::ALL {
        let out = run(&anomaly(kind)).unwrap();
        let last = out.trace.quiescent_views().last().expect("ends quiescent");
        assert_eq!(*last.1, out.final_view, "{kind}");
    }
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let (h, initial) = star_join(&[20, 20, 20]);
    let mut s = Scenario::new("det", h, initial, MaintainerKind::NsmiEca);
    for i in 0..10u64 {
        let base = format!("r{}", i % 3 + 1);
        s.insert_at(i, &base, [[20 + i as i64]]).unwrap();
    }
    s.latency = LatencyModel::uniform(1, 5);
    s.seed = 7;
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(a.trace.to_string(), b.trace.to_string());
    assert_eq!(a.counter, b.counter);
    assert!(a.matches_oracle());
}

#[test]
fn empty_schedule_costs_nothing() {
    let (h, initial) = star_join(&[5, 5]);
    for kind in MaintainerKind::ALL {
        let out = run(&Scenario::new("empty", h.clone(), initial.clone(), kind)).unwrap();
        assert_eq!(out.counter.total(), 0, "{kind}");
        assert_eq!(out.queries_sent, 0);
        assert_eq!(out.messages, 0);
        assert!(out.matches_oracle());
    }
}

#[test]
fn stepping_exposes_intermediate_state() {
    let mut sim = Simulation::new(&anomaly(MaintainerKind::NsmiEca)).unwrap();
    assert!(sim.is_quiescent());
    assert!(sim.step().unwrap());
    assert_eq!(sim.now(), 0);
    assert!(!sim.is_quiescent());
    while sim.step().unwrap() {}
    assert!(sim.is_quiescent());
    let source_updates = sim.trace().iter().filter(|r| matches!(r, TraceRecord::SourceUpdate { .. })).count();
    assert_eq!(source_updates, 2);
    let v = sim.maintainer().current_view();
    assert!(v.multiplicity(&Tuple(vec![4.into(), 3.into()])) == 1);
}
