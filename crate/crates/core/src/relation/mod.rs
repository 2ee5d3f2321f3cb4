//! In-memory multiset relational algebra with row-access accounting.

mod bag;
mod counter;
pub(crate) mod join;
mod ops;
mod predicate;
mod schema;
mod value;

pub use bag::{DeltaRelation, Relation};
pub use counter::{AccessCounter, Site};
pub use join::{cross_product_size, nested_loop_accesses};
pub use ops::{
    apply_delta, apply_delta_in_place, delta_minus, delta_union, nested_loop_join, project, scan, select,
    ProjItem, Scan,
};
pub(crate) use ops::projection_layout;
pub use predicate::{BoundPredicate, CmpOp, Comparison, Operand, Predicate};
pub use schema::{Attribute, Schema};
pub use value::{AttrType, Tuple, Value};
