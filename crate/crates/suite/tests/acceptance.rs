//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use vmsim_core::cost::{analytic_rows, compare, measure, CostReport, UpdateProfile};
use vmsim_core::relation::{cross_product_size, nested_loop_accesses, Tuple};
use vmsim_core::sim::{run, LatencyModel, RunOutcome, TraceRecord};
use vmsim_core::strategies::Note;
use vmsim_core::workload::fixtures::{anomaly, mixed_snapshot, star_join};
use vmsim_core::workload::generator::{benchmark, benchmark_worst_case};
use vmsim_core::workload::random::{partial_replication, random_scenario, RandomSpec};
use vmsim_core::{MaintainerKind as K, Scenario};

const AC1_SCENARIOS: u64 = 100;
const AC1_BUDGET: Duration = Duration::from_secs(60);
const AC4_BUDGET: Duration = Duration::from_secs(30);
/// Counter comparisons against closed-form predictions are exact.
const ROW_TOLERANCE: u64 = 0;
const AC1_KINDS: [K; 5] = [K::Smr, K::Nsmr, K::Smi, K::NsmiEca, K::RuntimeSm];
const CATEGORIES: [K; 4] = [K::Smr, K::Nsmr, K::Smi, K::NsmiEca];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn ac1_scenario(seed: u64, kind: K) -> Scenario {
    let s = random_scenario(seed, &RandomSpec::default()).with_kind(kind);
    if kind == K::RuntimeSm {
        let mut s = s;
        s.replication = Some(partial_replication(&s, seed));
        return s;
    }
    s
}

fn ac1(eca_runs: &mut Vec<RunOutcome>) -> Verdict {
    let start = Instant::now();
    let jobs: Vec<(u64, K)> = (0..AC1_SCENARIOS).flat_map(|s| AC1_KINDS.map(|k| (s, k))).collect();
    let outcomes: Vec<_> = jobs.par_iter().map(|&(seed, kind)| (seed, kind, run(&ac1_scenario(seed, kind)))).collect();
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    for (seed, kind, o) in outcomes {
        match o {
            Ok(o) if o.quiescent && o.matches_oracle() => {
                if kind == K::NsmiEca {
                    eca_runs.push(o);
                }
            }
            Ok(_) => failures.push(format!("{kind}@{seed} diverged")),
            Err(e) => failures.push(format!("{kind}@{seed} aborted: {}", e.error)),
        }
    }
    let matched = jobs.len() - failures.len();
    Verdict::new(
        failures.is_empty() && elapsed < AC1_BUDGET,
        format!(
            "{matched}/{} runs quiescent and equal to the oracle in {:.1}s (budget {}s){}",
            jobs.len(),
            elapsed.as_secs_f64(),
            AC1_BUDGET.as_secs(),
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    )
}

fn ac2() -> Verdict {
    let naive = run(&anomaly(K::NsmiNaive)).expect("anomaly run");
    let eca = run(&anomaly(K::NsmiEca)).expect("anomaly run");
    let t = Tuple::new(vec![4.into(), 3.into()]);
    let (n, o, e) = (naive.final_view.multiplicity(&t), naive.oracle.multiplicity(&t), eca.final_view.multiplicity(&t));
    let code = vmsim_cli::dispatch(["vmsim", "anomaly-demo"]);
    Verdict::new(
        n == 2 && o == 1 && eca.matches_oracle() && code == 0,
        format!(
            "naive (4,3)x{n}, oracle (4,3)x{o}, ECA (4,3)x{e} equals oracle: {}; anomaly-demo exit {code}",
            eca.matches_oracle()
        ),
    )
}

fn single_update(cards: &[u64], base: usize, rows: std::ops::Range<i64>, kind: K) -> (Scenario, RunOutcome) {
    let (h, initial) = star_join(cards);
    let mut s = Scenario::new("single-update", h, initial, kind);
    s.insert_at(0, &format!("r{}", base + 1), rows.map(|k| [k])).expect("valid update");
    let o = run(&s).expect("single-update run");
    (s, o)
}

#[allow(clippy::absurd_extreme_comparisons)]
fn within(measured: u64, predicted: u64) -> bool {
    measured.abs_diff(predicted) <= ROW_TOLERANCE
}

fn ac3() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |label: &str, ok: bool, text: String| {
        pass &= ok;
        notes.push(format!("{label} {text}{}", if ok { "" } else { " MISMATCH" }));
    };

    let (s, o) = single_update(&[100, 100], 0, 100..105, K::Smr);
    let p = analytic_rows(K::Smr, &UpdateProfile::for_scenario(&s).unwrap()).unwrap();
    let propagation = o.counter.warehouse() - nested_loop_accesses(&[105, 100]);
    check(
        "SMR",
        within(o.counter.warehouse(), p.warehouse) && propagation == 105,
        format!("wh {}={} propagation {propagation}", o.counter.warehouse(), p.warehouse),
    );

    let (s, o) = single_update(&[200, 50], 0, 200..205, K::Smi);
    let profile = UpdateProfile::for_scenario(&s).unwrap();
    let p = analytic_rows(K::Smi, &profile).unwrap();
    let level = o.counter.warehouse()
        - nested_loop_accesses(&[5, 50])
        - (profile.view_card_before + profile.view_delta_card);
    check(
        "SMI",
        within(o.counter.warehouse(), p.warehouse) && level == 205 && o.counter.source() == 0,
        format!("wh {}={} level {level} src {}", o.counter.warehouse(), p.warehouse, o.counter.source()),
    );

    let (s, o) = single_update(&[10, 10, 9], 2, 9..10, K::Nsmr);
    let p = analytic_rows(K::Nsmr, &UpdateProfile::for_scenario(&s).unwrap()).unwrap();
    check(
        "NSMR",
        within(o.counter.source(), p.source)
            && o.counter.source() == 1110
            && p.leading_term == 1000
            && cross_product_size(&[10, 10, 10]) == 1000
            && within(o.counter.warehouse(), p.warehouse),
        format!("src {}={} leading {}", o.counter.source(), p.source, p.leading_term),
    );

    let (s, o) = single_update(&[10, 10, 10], 1, 3..5, K::NsmiEca);
    let p = analytic_rows(K::NsmiEca, &UpdateProfile::for_scenario(&s).unwrap()).unwrap();
    check(
        "NSMI_ECA",
        within(o.counter.source(), p.source) && within(o.counter.warehouse(), p.warehouse),
        format!("src {}={} wh {}={}", o.counter.source(), p.source, o.counter.warehouse(), p.warehouse),
    );
    Verdict::new(pass, notes.join("; "))
}

fn by_kind(rows: &[CostReport], kind: K) -> &CostReport {
    rows.iter().find(|r| r.kind == kind).expect("kind was compared")
}

fn ac4() -> Verdict {
    let start = Instant::now();
    let bench = benchmark(K::Smi);
    let rows = compare(&bench, &CATEGORIES).expect("benchmark runs");
    let smi = by_kind(&rows, K::Smi).rows_total();
    let smi_lowest = rows.iter().filter(|r| r.kind != K::Smi).all(|r| smi < r.rows_total());

    let worst = compare(&benchmark_worst_case(K::Smi), &CATEGORIES).expect("worst-case runs");
    let nsmi = by_kind(&worst, K::NsmiEca).rows_total();
    let nsmi_highest = worst.iter().chain(&rows).filter(|r| r.kind != K::NsmiEca).all(|r| nsmi > r.rows_total());

    let nsmr = run(&bench.with_kind(K::Nsmr)).expect("nsmr run");
    let ts = u64::from(bench.hierarchy.schema_of("V").expect("primary schema").tuple_size());
    let expected_space = nsmr.final_view.card() * ts;
    let space_exact = nsmr.space_bytes == expected_space;
    let space_min = rows.iter().all(|r| nsmr.space_bytes <= r.space_bytes);
    let elapsed = start.elapsed();

    let totals = |rs: &[CostReport]| rs.iter().map(|r| format!("{}={}", r.kind, r.rows_total())).collect::<Vec<_>>().join(" ");
    Verdict::new(
        smi_lowest && nsmi_highest && space_exact && space_min && elapsed < AC4_BUDGET,
        format!(
            "SMI lowest: {smi_lowest} [{}]; NSMI worst case highest: {nsmi_highest} [{}]; \
             NSMR space {}={expected_space} exact: {space_exact} minimal: {space_min}; {:.1}s",
            totals(&rows),
            totals(&worst),
            nsmr.space_bytes,
            elapsed.as_secs_f64()
        ),
    )
}

/// Warehouse accesses charged in each event holding a flush, against the flush's own
/// Card(V) + Card(COLLECT).
fn flush_mismatches(o: &RunOutcome) -> (usize, usize) {
    let (mut flushes, mut bad) = (0, 0);
    let mut last_wh = 0;
    let mut expected: Option<u64> = None;
    for r in o.trace.iter() {
        match r {
            TraceRecord::Note { note: Note::Flush { view_card, collect_card }, .. } => {
                flushes += 1;
                *expected.get_or_insert(0) += view_card + collect_card;
            }
            TraceRecord::Counters { warehouse, .. } => {
                if let Some(e) = expected.take() {
                    if warehouse - last_wh != e {
                        bad += 1;
                    }
                }
                last_wh = *warehouse;
            }
            _ => {}
        }
    }
    (flushes, bad)
}

fn ac5(eca_runs: &[RunOutcome]) -> Verdict {
    let mut events = 0;
    let mut uqs_violations = 0;
    let (mut flushes, mut flush_bad) = (0, 0);
    for o in eca_runs {
        for r in o.trace.iter() {
            if let TraceRecord::Counters { uqs, collect, .. } = r {
                events += 1;
                if *uqs == 0 && *collect != 0 {
                    uqs_violations += 1;
                }
            }
        }
        let (f, b) = flush_mismatches(o);
        flushes += f;
        flush_bad += b;
    }

    // The same scenarios with every update given time to finish before the next one.
    let quiet: Vec<_> = (0..AC1_SCENARIOS)
        .into_par_iter()
        .map(|seed| {
            let mut s = ac1_scenario(seed, K::NsmiEca);
            s.latency = LatencyModel::fixed(1, 1);
            let mut order: Vec<usize> = (0..s.updates.len()).collect();
            order.sort_by_key(|&i| s.updates[i].time);
            for (slot, i) in order.into_iter().enumerate() {
                s.updates[i].time = slot as u64 * 10;
            }
            run(&s).expect("quiet run")
        })
        .collect();
    let quiet_comp: u64 = quiet.iter().map(|o| o.compensations).sum();
    let quiet_ok = quiet.iter().all(RunOutcome::matches_oracle);

    Verdict::new(
        !eca_runs.is_empty() && uqs_violations == 0 && flush_bad == 0 && quiet_comp == 0 && quiet_ok,
        format!(
            "{} ECA runs, {events} events, UQS-empty with COLLECT non-empty: {uqs_violations}; \
             {flushes} flushes, cost mismatches: {flush_bad}; without interleavings: {quiet_comp} compensating terms, \
             all converge: {quiet_ok}",
            eca_runs.len()
        ),
    )
}

fn fingerprint(s: &Scenario) -> (String, String) {
    let o = run(s).expect("determinism run");
    (o.trace.to_string(), serde_json::to_string(&measure(&o)).expect("report serializes"))
}

fn ac6() -> Verdict {
    let mut scenarios = vec![
        anomaly(K::NsmiEca),
        anomaly(K::NsmiNaive),
        mixed_snapshot(K::Nsmr),
        benchmark(K::NsmiEca),
        benchmark_worst_case(K::NsmiEca),
    ];
    scenarios.extend((0..10).flat_map(|seed| AC1_KINDS.map(|k| ac1_scenario(seed, k))));
    let differing: Vec<String> = scenarios
        .par_iter()
        .filter(|s| fingerprint(s) != fingerprint(s))
        .map(|s| format!("{}/{}", s.label, s.kind))
        .collect();
    Verdict::new(
        differing.is_empty(),
        format!("{} scenarios rerun, {} differing traces or reports {differing:?}", scenarios.len(), differing.len()),
    )
}

fn main() -> ExitCode {
    let mut eca_runs = Vec::new();
    let results = [
        ("AC-1", "oracle convergence", ac1(&mut eca_runs)),
        ("AC-2", "anomaly witness", ac2()),
        ("AC-3", "formula exactness", ac3()),
        ("AC-4", "comparative ordering", ac4()),
        ("AC-5", "ECA structural invariants", ac5(&eca_runs)),
        ("AC-6", "determinism", ac6()),
    ];
    let mut failed = 0;
    for (id, name, v) in &results {
        println!("{id} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
