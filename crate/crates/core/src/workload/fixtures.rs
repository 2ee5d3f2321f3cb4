//! Hand-built scenarios with known outcomes.

use std::collections::BTreeMap;

use crate::relation::{Relation, Schema, Tuple};
use crate::sim::{Channel, LatencyModel, Scenario};
use crate::strategies::MaintainerKind;
use crate::view::{ViewDef, ViewHierarchy};

fn int_rel(schema: &Schema, rows: &[&[i64]]) -> Relation {
    Relation::from_tuples(schema.clone(), rows.iter().map(|r| Tuple(r.iter().map(|&v| v.into()).collect())))
        .expect("fixture rows match their schema")
}

/// r1(A,B), r2(B,C) and V = Π_{A,C}(r1 ⋈_{r1.B = r2.B} r2).
pub fn two_way_join() -> ViewHierarchy {
    let r1 = Schema::ints("r1", &["A", "B"], 8).expect("valid schema");
    let r2 = Schema::ints("r2", &["B", "C"], 8).expect("valid schema");
    let v = ViewDef::new("V", &["r1", "r2"])
        .join_on(&["r1.B = r2.B"])
        .and_then(|v| v.project(&["A", "C"]))
        .expect("valid view");
    ViewHierarchy::build(vec![r1, r2], vec![v], "V").expect("valid hierarchy")
}

fn two_way_initial(h: &ViewHierarchy) -> BTreeMap<String, Relation> {
    BTreeMap::from([
        ("r1".to_owned(), int_rel(h.base("r1").unwrap(), &[&[1, 2]])),
        ("r2".to_owned(), int_rel(h.base("r2").unwrap(), &[])),
    ])
}

/// The interleaving that breaks uncompensated delta queries: the source inserts (2,3)
/// into r2 at t=0 and (4,2) into r1 at t=3, while the query for the first update only
/// reaches the source at t=4.
pub fn anomaly(kind: MaintainerKind) -> Scenario {
    let h = two_way_join();
    let initial = two_way_initial(&h);
    let mut s = Scenario::new("S-ANOM", h, initial, kind);
    s.insert_at(0, "r2", [[2, 3]]).expect("valid update");
    s.insert_at(3, "r1", [[4, 2]]).expect("valid update");
    s.latency = LatencyModel::fixed(1, 3);
    s
}

/// Three updates with the fetch of r2 for the first recompute delayed until after the
/// third update, so that the first recompute sees r1 before and r2 after the later
/// updates.
pub fn mixed_snapshot(kind: MaintainerKind) -> Scenario {
    let h = two_way_join();
    let initial = two_way_initial(&h);
    let mut s = Scenario::new("S-NSMR-MIX", h, initial, kind);
    s.insert_at(0, "r2", [[2, 3]]).expect("valid update");
    s.insert_at(3, "r1", [[4, 2]]).expect("valid update");
    s.insert_at(4, "r2", [[2, 6]]).expect("valid update");
    s.latency = LatencyModel::fixed(1, 1).with_override(Channel::ToSource, 1, 4);
    s
}

/// Base relations of [`nested_hierarchy`], each with one integer attribute `k`.
pub const NESTED_BASES: [&str; 10] = ["r11", "r12", "r13", "r14", "r21", "r22", "r31", "r32", "r33", "r34"];

/// A three-level hierarchy: V over v1, v2, v3; v1 over v11, v12, v13, v14; v12 over v23
/// and v24; v2 over v23. The leaves v3, v11, v13, v14, v23 and v24 read base relations,
/// and r33 feeds v24 only.
pub fn nested_hierarchy() -> ViewHierarchy {
    let bases: Vec<Schema> =
        NESTED_BASES.iter().map(|b| Schema::ints(b, &["k"], 8).expect("valid schema")).collect();
    let view = |name: &str, ops: &[&str]| -> ViewDef {
        let conds: Vec<String> = ops[1..].iter().map(|o| format!("{}.k = {o}.k", ops[0])).collect();
        let conds: Vec<&str> = conds.iter().map(String::as_str).collect();
        ViewDef::new(name, ops)
            .join_on(&conds)
            .and_then(|v| v.project(&[&format!("{}.k as k", ops[0])]))
            .expect("valid view")
    };
    let views = vec![
        view("V", &["v1", "v2", "v3"]),
        view("v1", &["v11", "v12", "v13", "v14"]),
        view("v2", &["v23"]),
        view("v3", &["r31", "r32"]),
        view("v11", &["r11", "r12"]),
        view("v12", &["v23", "v24"]),
        view("v13", &["r13"]),
        view("v14", &["r14"]),
        view("v23", &["r21", "r22"]),
        view("v24", &["r33", "r34"]),
    ];
    ViewHierarchy::build(bases, views, "V").expect("valid hierarchy")
}

/// Every base of [`nested_hierarchy`] holding `k = 0..rows`.
pub fn nested_initial(rows: i64) -> BTreeMap<String, Relation> {
    NESTED_BASES
        .iter()
        .map(|b| {
            let schema = Schema::ints(b, &["k"], 8).expect("valid schema");
            let rel = Relation::from_tuples(schema, (0..rows).map(|k| [k])).expect("valid rows");
            (b.to_string(), rel)
        })
        .collect()
}

/// N base relations r1..rN with attribute k, V = Π_{r1.k}(r1 ⋈ … ⋈ rN) on equal k, and
/// `cards[i]` rows in r(i+1) holding k = 0..cards[i].
pub fn star_join(cards: &[u64]) -> (ViewHierarchy, BTreeMap<String, Relation>) {
    let names: Vec<String> = (1..=cards.len()).map(|i| format!("r{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let bases: Vec<Schema> = refs.iter().map(|n| Schema::ints(n, &["k"], 8).expect("valid schema")).collect();
    let conds: Vec<String> = refs[1..].iter().map(|o| format!("r1.k = {o}.k")).collect();
    let conds: Vec<&str> = conds.iter().map(String::as_str).collect();
    let v = ViewDef::new("V", &refs)
        .join_on(&conds)
        .and_then(|v| v.project(&["r1.k as k"]))
        .expect("valid view")
        .with_tuple_size(8);
    let h = ViewHierarchy::build(bases.clone(), vec![v], "V").expect("valid hierarchy");
    let initial = bases
        .into_iter()
        .zip(cards)
        .map(|(s, &c)| {
            let name = s.name().to_owned();
            (name, Relation::from_tuples(s, (0..c as i64).map(|k| [k])).expect("valid rows"))
        })
        .collect();
    (h, initial)
}
