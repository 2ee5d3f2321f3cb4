//! Scenarios shared by the criterion benches.

use vmsim_core::workload::generator::{benchmark_latency, benchmark_view, generate, GeneratorSpec};
use vmsim_core::{MaintainerKind, Scenario, ViewHierarchy};

/// The order-processing workload at `scale` rows per relation with `appends` updates.
pub fn order_workload(scale: u64, appends: u64, kind: MaintainerKind) -> Scenario {
    let g = generate(&GeneratorSpec::new(scale, appends, 42)).expect("valid generator spec");
    let h = ViewHierarchy::build(g.schemas, vec![benchmark_view()], "V").expect("valid hierarchy");
    let mut s = Scenario::new(format!("orders-{scale}x{appends}"), h, g.data, kind);
    s.updates = g.updates;
    s.latency = benchmark_latency();
    s
}
