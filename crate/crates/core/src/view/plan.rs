use std::collections::{BTreeMap, BTreeSet};

use super::ViewHierarchy;
use crate::error::{Error, Result};

/// Views to maintain after a change to one base relation, in dependency order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaintenancePlan {
    pub base: String,
    pub views: Vec<String>,
}

impl MaintenancePlan {
    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.views.iter().map(String::as_str)
    }
}

/// Kahn's algorithm over the views in `subset`, leaves first, ties broken by name.
/// Edges from views outside `subset` are ignored. Views on a cycle are left out.
pub(crate) fn kahn(h: &ViewHierarchy, subset: &BTreeSet<&str>) -> Vec<String> {
    let mut indegree: BTreeMap<&str, usize> = subset.iter().map(|&v| (v, 0)).collect();
    for &v in subset {
        if let Some(def) = h.view(v) {
            let unique: BTreeSet<&str> = def.operands.iter().map(String::as_str).collect();
            let deps = unique.iter().filter(|o| subset.contains(*o)).count();
            indegree.insert(v, deps);
        }
    }
    let mut ready: BTreeSet<&str> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    let mut out = Vec::with_capacity(subset.len());
    while let Some(v) = ready.pop_first() {
        out.push(v.to_owned());
        for dep in h.dependents(v) {
            if let Some(d) = indegree.get_mut(dep) {
                *d -= 1;
                if *d == 0 {
                    ready.insert(dep);
                }
            }
        }
    }
    out
}

/// Every view that transitively reads `base`, children before parents.
pub fn affected_order(h: &ViewHierarchy, base: &str) -> Result<MaintenancePlan> {
    if !h.is_base(base) {
        return Err(Error::Catalog(format!("{base} is not a base relation")));
    }
    let affected: BTreeSet<&str> = h
        .views()
        .iter()
        .filter(|v| h.base_closure(&v.name).contains(base))
        .map(|v| v.name.as_str())
        .collect();
    Ok(MaintenancePlan { base: base.to_owned(), views: kahn(h, &affected) })
}
