//! Simulation of materialized view maintenance strategies for a data warehouse fed by a
//! remote source: multiset relational algebra with row-access accounting, SPJ view
//! hierarchies, six maintainers, a discrete-event simulator and cost models.

pub mod cost;
pub mod eca;
pub mod error;
pub mod protocol;
pub mod relation;
pub mod sim;
pub mod strategies;
pub mod view;
pub mod workload;

pub use error::{Error, Result};
pub use relation::{AccessCounter, DeltaRelation, Predicate, Relation, Schema, Site, Tuple, Value};
pub use view::{affected_order, Catalog, MaintenancePlan, ViewDef, ViewHierarchy};
pub use strategies::{Maintainer, MaintainerKind, WarehouseState};
pub use sim::{run, LatencyModel, RunOutcome, Scenario};
pub use cost::{compare, measure, CostReport};
