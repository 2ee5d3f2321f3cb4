use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::protocol::{answer_query, Query};
use crate::relation::{DeltaRelation, Relation, Site};
use crate::workload::fixtures::{nested_hierarchy, nested_initial, star_join, two_way_join};

struct Outcome {
    counter: AccessCounter,
    sent: Vec<(QueryId, Query)>,
    notes: Vec<Note>,
}

fn update(m: &mut dyn Maintainer, next: &mut QueryId, base: &str, delta: &DeltaRelation) -> Outcome {
    let mut counter = AccessCounter::new();
    let mut ctx = Ctx::new(&mut counter, next, 0);
    m.on_update(&mut ctx, 1, base, delta).unwrap();
    let (sent, notes) = ctx.finish();
    Outcome { counter, sent, notes }
}

fn inserts(h: &ViewHierarchy, base: &str, keys: std::ops::Range<i64>) -> DeltaRelation {
    DeltaRelation::inserts(h.base(base).unwrap().clone(), keys.map(|k| [k])).unwrap()
}

#[test]
fn smr_charges_propagation_plus_recompute_and_never_queries() {
    let (h, initial) = star_join(&[100, 100]);
    let mut m = MaintainerKind::Smr.build(&h, &initial, None).unwrap();
    let mut next = 1;
    let out = update(m.as_mut(), &mut next, "r1", &inserts(&h, "r1", 100..105));
    assert_eq!(out.counter.warehouse(), 105 + (105 + 105 * 100));
    assert_eq!(out.counter.source(), 0);
    assert!(out.sent.is_empty());
    assert_eq!(m.current_view().card(), 100);
}

#[test]
fn smr_empty_delta_only_scans_the_replica() {
    let (h, initial) = star_join(&[100, 100]);
    let mut m = MaintainerKind::Smr.build(&h, &initial, None).unwrap();
    let before = m.current_view().clone();
    let out = update(m.as_mut(), &mut 1, "r1", &inserts(&h, "r1", 0..0));
    assert_eq!(out.counter.warehouse(), 100);
    assert_eq!(*m.current_view(), before);
}

#[test]
fn nsmr_sends_one_fetch_per_base_and_stores_nothing_else() {
    let (h, initial) = star_join(&[10, 10, 10]);
    let mut m = MaintainerKind::Nsmr.build(&h, &initial, None).unwrap();
    let out = update(m.as_mut(), &mut 1, "r2", &inserts(&h, "r2", 10..11));
    assert_eq!(out.sent.len(), 3);
    assert!(out.sent.iter().all(|(_, q)| matches!(q, Query::Fetch { .. })));
    assert!(m.local_store().is_empty());
    assert_eq!(m.pending_queries(), 3);

    let mut live = initial.clone();
    live.insert("r2".into(), Relation::from_tuples(h.base("r2").unwrap().clone(), (0..11).map(|k| [k])).unwrap());
    let mut counter = AccessCounter::new();
    let mut next = 10;
    for (id, q) in out.sent {
        let a = answer_query(&h, &q, &live, &mut AccessCounter::new()).unwrap();
        let mut ctx = Ctx::new(&mut counter, &mut next, 1);
        m.on_answer(&mut ctx, id, a).unwrap();
    }
    assert_eq!(counter.source(), 10 + 10 * 11 + 10 * 11 * 10);
    assert_eq!(counter.warehouse(), 10);
    assert!(m.is_idle());
    assert_eq!(m.space_usage(), 10 * 8);
}

#[test]
fn smi_replica_level_is_update_plus_replica() {
    let (h, initial) = star_join(&[200, 50]);
    let mut m = MaintainerKind::Smi.build(&h, &initial, None).unwrap();
    let out = update(m.as_mut(), &mut 1, "r1", &inserts(&h, "r1", 200..205));
    // replica 200 + 5, delta join 5 + 5·50, view 50 + 0
    assert_eq!(out.counter.warehouse(), 205 + (5 + 5 * 50) + 50);
    assert_eq!(out.counter.source(), 0);
    assert!(out.sent.is_empty());
    assert!(out.notes.contains(&Note::Nav { count: 2 }));
}

#[test]
fn smi_ignores_relations_the_view_does_not_read() {
    let h = nested_hierarchy();
    let mut initial = nested_initial(3);
    let extra = crate::relation::Schema::ints("x", &["k"], 8).unwrap();
    let bases: Vec<_> = h.bases().iter().cloned().chain([extra.clone()]).collect();
    let h = ViewHierarchy::build(bases, h.views().to_vec(), "V").unwrap();
    initial.insert("x".into(), Relation::empty(extra.clone()));
    let mut m = MaintainerKind::Smi.build(&h, &initial, None).unwrap();
    let d = DeltaRelation::inserts(extra, [[1]]).unwrap();
    let out = update(m.as_mut(), &mut 1, "x", &d);
    assert_eq!(out.counter.total(), 0);
    assert_eq!(out.notes, vec![Note::Unaffected { base: "x".into() }]);
}

#[test]
fn smi_walks_the_hierarchy_leaves_first() {
    let h = nested_hierarchy();
    let mut m = MaintainerKind::Smi.build(&h, &nested_initial(3), None).unwrap();
    let out = update(m.as_mut(), &mut 1, "r33", &inserts(&h, "r33", 1..2));
    let maintained: Vec<&str> = out
        .notes
        .iter()
        .filter_map(|n| match n {
            Note::Maintained { view, .. } => Some(view.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(maintained, ["v24", "v12", "v1", "V"]);
    assert_eq!(out.counter.source(), 0);
}

#[test]
fn replication_must_cover_self_maintaining_kinds() {
    let (h, initial) = star_join(&[3, 3]);
    let partial = BTreeSet::from(["r1".to_owned()]);
    for kind in [MaintainerKind::Smr, MaintainerKind::Smi] {
        assert!(matches!(kind.build(&h, &initial, Some(&partial)), Err(Error::Config(_))));
    }
    assert!(MaintainerKind::RuntimeSm.build(&h, &initial, Some(&partial)).is_ok());
    let bogus = BTreeSet::from(["zz".to_owned()]);
    assert!(matches!(MaintainerKind::Smi.build(&h, &initial, Some(&bogus)), Err(Error::Config(_))));
}

#[test]
fn delta_query_kinds_reject_repeated_base_occurrences() {
    let h = nested_hierarchy();
    for kind in [MaintainerKind::NsmiEca, MaintainerKind::NsmiNaive] {
        assert!(matches!(kind.build(&h, &nested_initial(1), None), Err(Error::Config(_))));
    }
}

#[test]
fn naive_sends_nothing_for_an_empty_delta() {
    let h = two_way_join();
    let initial: BTreeMap<String, Relation> =
        h.bases().iter().map(|s| (s.name().to_owned(), Relation::empty(s.clone()))).collect();
    let mut m = MaintainerKind::NsmiNaive.build(&h, &initial, None).unwrap();
    let d = DeltaRelation::empty(h.base("r1").unwrap().clone());
    assert!(update(m.as_mut(), &mut 1, "r1", &d).sent.is_empty());
    let d = DeltaRelation::inserts(h.base("r1").unwrap().clone(), [[1, 2]]).unwrap();
    let out = update(m.as_mut(), &mut 1, "r1", &d);
    assert!(matches!(out.sent.as_slice(), [(1, Query::Delta(_))]));
}

#[test]
fn runtime_sm_fetches_exactly_the_missing_sibling() {
    let (h, initial) = star_join(&[4, 4]);
    let replicas = BTreeSet::from(["r1".to_owned()]);
    let mut m = MaintainerKind::RuntimeSm.build(&h, &initial, Some(&replicas)).unwrap();
    let out = update(m.as_mut(), &mut 1, "r1", &inserts(&h, "r1", 2..3));
    assert_eq!(out.sent, vec![(1, Query::Fetch { base: "r2".into() })]);
    assert!(!m.is_idle());

    let a = answer_query(&h, &out.sent[0].1, &initial, &mut AccessCounter::new()).unwrap();
    let mut counter = AccessCounter::new();
    let mut next = 2;
    let mut ctx = Ctx::new(&mut counter, &mut next, 1);
    m.on_answer(&mut ctx, 1, a).unwrap();
    assert_eq!(counter.source(), 4);
    assert!(m.is_idle());
    assert_eq!(m.current_view().card(), 5);

    // r2 is not replicated but its sibling r1 is, so this update needs no fetch.
    let out = update(m.as_mut(), &mut next, "r2", &inserts(&h, "r2", 3..4));
    assert!(out.sent.is_empty());
    assert_eq!(m.current_view().card(), 6);
}

#[test]
fn runtime_sm_with_everything_replicated_matches_smi() {
    let (h, initial) = star_join(&[6, 5, 4]);
    let mut smi = MaintainerKind::Smi.build(&h, &initial, None).unwrap();
    let mut rt = MaintainerKind::RuntimeSm.build(&h, &initial, None).unwrap();
    for (base, keys) in [("r1", 6..8), ("r3", 0..2), ("r2", 5..6)] {
        let d = inserts(&h, base, keys);
        let a = update(smi.as_mut(), &mut 1, base, &d);
        let b = update(rt.as_mut(), &mut 1, base, &d);
        assert_eq!(a.counter, b.counter);
        assert_eq!(a.notes, b.notes);
        assert!(b.sent.is_empty());
    }
    assert_eq!(smi.current_view(), rt.current_view());
}

#[test]
fn unexpected_answers_are_protocol_errors() {
    let (h, initial) = star_join(&[1, 1]);
    let answer = Answer::Snapshot(initial["r1"].clone());
    for kind in MaintainerKind::ALL {
        let mut m = kind.build(&h, &initial, None).unwrap();
        let mut counter = AccessCounter::new();
        let mut next = 1;
        let mut ctx = Ctx::new(&mut counter, &mut next, 0);
        assert!(matches!(m.on_answer(&mut ctx, 99, answer.clone()), Err(Error::Protocol(_))), "{kind}");
    }
}

#[test]
fn kind_names_round_trip() {
    for kind in MaintainerKind::ALL {
        assert_eq!(kind.as_str().parse::<MaintainerKind>().unwrap(), kind);
        let json = serde_json::to_string(&kind).unwrap();
        assert_eq!(json, format!("\"{kind}\""));
    }
    assert!("IVM".parse::<MaintainerKind>().is_err());
}

#[test]
fn fresh_maintainers_hold_the_initial_view() {
    let (h, initial) = star_join(&[3, 2]);
    let expected = h.evaluate_primary(&initial, Site::Warehouse, &mut AccessCounter::new()).unwrap();
    for kind in MaintainerKind::ALL {
        let m = kind.build(&h, &initial, None).unwrap();
        assert_eq!(*m.current_view(), expected, "{kind}");
        assert!(m.is_idle());
    }
}
