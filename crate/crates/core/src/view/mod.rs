//! SPJ view definitions and view hierarchies.
//!
//! A view is `Π_proj σ_sel (o₁ ⋈ … ⋈ o_N)` over base relations or other views. The views
//! of a warehouse form a DAG rooted at one primary view; leaves are defined over base
//! relations only and are maintained first.

mod eval;
mod plan;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use eval::{delta_insert, evaluate, evaluate_operands, evaluate_signed, JoinInput};
pub(crate) use eval::CompiledView;
pub use plan::{affected_order, MaintenancePlan};
pub use validate::{Diagnostic, DiagnosticKind};

use crate::error::{Error, Result};
use crate::relation::{AccessCounter, Predicate, ProjItem, Relation, Schema, Site};

/// Named relations a view can be evaluated against.
pub trait Catalog {
    fn relation(&self, name: &str) -> Option<&Relation>;
}

impl Catalog for BTreeMap<String, Relation> {
    fn relation(&self, name: &str) -> Option<&Relation> {
        self.get(name)
    }
}

impl Catalog for std::collections::HashMap<String, Relation> {
    fn relation(&self, name: &str) -> Option<&Relation> {
        self.get(name)
    }
}

/// A catalog that shadows some names of an underlying catalog.
pub struct Overlay<'a> {
    top: BTreeMap<&'a str, &'a Relation>,
    base: &'a dyn Catalog,
}

impl<'a> Overlay<'a> {
    pub fn new(base: &'a dyn Catalog) -> Self {
        Overlay { top: BTreeMap::new(), base }
    }

    pub fn with(mut self, name: &'a str, rel: &'a Relation) -> Self {
        self.top.insert(name, rel);
        self
    }
}

impl Catalog for Overlay<'_> {
    fn relation(&self, name: &str) -> Option<&Relation> {
        self.top.get(name).copied().or_else(|| self.base.relation(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewDef {
    pub name: String,
    /// Relation or view names in join order.
    pub operands: Vec<String>,
    pub join_conds: Predicate,
    pub selection: Predicate,
    /// `None` keeps every attribute of the join, named by its unqualified name.
    pub projection: Option<Vec<ProjItem>>,
    /// Declared bytes per output tuple; `None` means 8 bytes per output attribute.
    pub tuple_size: Option<u32>,
}

impl ViewDef {
    pub fn new(name: impl Into<String>, operands: &[&str]) -> Self {
        ViewDef {
            name: name.into(),
            operands: operands.iter().map(|s| s.to_string()).collect(),
            join_conds: Predicate::always(),
            selection: Predicate::always(),
            projection: None,
            tuple_size: None,
        }
    }

    pub fn join_on(mut self, conds: &[&str]) -> Result<Self> {
        self.join_conds = Predicate::parse(conds)?;
        Ok(self)
    }

    pub fn filter(mut self, conds: &[&str]) -> Result<Self> {
        self.selection = Predicate::parse(conds)?;
        Ok(self)
    }

    pub fn project(mut self, items: &[&str]) -> Result<Self> {
        self.projection = Some(items.iter().map(|i| ProjItem::parse(i)).collect::<Result<_>>()?);
        Ok(self)
    }

    pub fn with_tuple_size(mut self, bytes: u32) -> Self {
        self.tuple_size = Some(bytes);
        self
    }

    pub fn arity(&self) -> usize {
        self.operands.len()
    }

    pub fn position(&self, operand: &str) -> Option<usize> {
        self.operands.iter().position(|o| o == operand)
    }
}

impl fmt::Display for ViewDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = ", self.name)?;
        if let Some(items) = &self.projection {
            f.write_str("Π[")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{item}")?;
            }
            f.write_str("] ")?;
        }
        if !self.selection.is_trivial() {
            write!(f, "σ[{}] ", self.selection)?;
        }
        write!(f, "({})", self.operands.join(" ⋈ "))?;
        if !self.join_conds.is_trivial() {
            write!(f, " on [{}]", self.join_conds)?;
        }
        Ok(())
    }
}

/// Base relations, the views over them, and the primary view at the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewHierarchy {
    bases: Vec<Schema>,
    views: Vec<ViewDef>,
    primary: String,
}

impl ViewHierarchy {
    /// Assemble a hierarchy without checking it; see [`ViewHierarchy::validate`].
    pub fn new(bases: Vec<Schema>, views: Vec<ViewDef>, primary: impl Into<String>) -> Self {
        ViewHierarchy { bases, views, primary: primary.into() }
    }

    /// Assemble and validate.
    pub fn build(bases: Vec<Schema>, views: Vec<ViewDef>, primary: impl Into<String>) -> Result<Self> {
        let h = Self::new(bases, views, primary);
        h.validate()?;
        Ok(h)
    }

    pub fn bases(&self) -> &[Schema] {
        &self.bases
    }

    pub fn views(&self) -> &[ViewDef] {
        &self.views
    }

    pub fn primary(&self) -> &str {
        &self.primary
    }

    pub fn primary_def(&self) -> &ViewDef {
        self.view(&self.primary).expect("validated hierarchy has its primary view")
    }

    pub fn base(&self, name: &str) -> Option<&Schema> {
        self.bases.iter().find(|s| s.name() == name)
    }

    pub fn view(&self, name: &str) -> Option<&ViewDef> {
        self.views.iter().find(|v| v.name == name)
    }

    pub fn is_base(&self, name: &str) -> bool {
        self.base(name).is_some()
    }

    /// Views that list `name` as an operand, by name.
    pub fn dependents(&self, name: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .views
            .iter()
            .filter(|v| v.operands.iter().any(|o| o == name))
            .map(|v| v.name.as_str())
            .collect();
        out.sort_unstable();
        out
    }

    /// Base relations `name` transitively reads (a base relation reads itself).
    pub fn base_closure(&self, name: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![name.to_owned()];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            if self.is_base(&n) {
                out.insert(n);
            } else if let Some(v) = self.view(&n) {
                stack.extend(v.operands.iter().cloned());
            }
        }
        out
    }

    /// Base relations the primary view depends on, in name order.
    pub fn primary_bases(&self) -> BTreeSet<String> {
        self.base_closure(&self.primary)
    }

    /// How many times `base` occurs in the fully expanded expression of `name`.
    pub fn occurrences(&self, name: &str, base: &str) -> u64 {
        if name == base {
            return 1;
        }
        match self.view(name) {
            Some(v) => v.operands.iter().map(|o| self.occurrences(o, base)).sum(),
            None => 0,
        }
    }

    /// All views, leaves first, ties broken by name.
    pub fn topological_order(&self) -> Vec<String> {
        let names: BTreeSet<&str> = self.views.iter().map(|v| v.name.as_str()).collect();
        plan::kahn(self, &names)
    }

    /// Output schema of a base relation or view.
    pub fn schema_of(&self, name: &str) -> Result<Schema> {
        if let Some(s) = self.base(name) {
            return Ok(s.clone());
        }
        let def = self.view(name).ok_or_else(|| Error::Catalog(format!("unknown relation or view {name}")))?;
        let operands = def.operands.iter().map(|o| self.schema_of(o)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Schema> = operands.iter().collect();
        Ok(CompiledView::compile(def, &refs)?.output_schema().clone())
    }

    /// Output schemas of every base relation and view.
    pub fn schemas(&self) -> Result<BTreeMap<String, Schema>> {
        let mut out: BTreeMap<String, Schema> =
            self.bases.iter().map(|s| (s.name().to_owned(), s.clone())).collect();
        for name in self.topological_order() {
            let def = self.view(&name).expect("listed view exists");
            let refs = def
                .operands
                .iter()
                .map(|o| out.get(o).ok_or_else(|| Error::Catalog(format!("unresolved operand {o}"))))
                .collect::<Result<Vec<_>>>()?;
            let schema = CompiledView::compile(def, &refs)?.output_schema().clone();
            out.insert(name, schema);
        }
        Ok(out)
    }

    /// Evaluate every view bottom-up from the base relations in `bases`.
    pub fn evaluate_all(
        &self,
        bases: &dyn Catalog,
        site: Site,
        counter: &mut AccessCounter,
    ) -> Result<BTreeMap<String, Relation>> {
        let mut views: BTreeMap<String, Relation> = BTreeMap::new();
        for name in self.topological_order() {
            let def = self.view(&name).expect("listed view exists");
            let inputs = def
                .operands
                .iter()
                .map(|o| {
                    views
                        .get(o)
                        .or_else(|| bases.relation(o))
                        .ok_or_else(|| Error::Catalog(format!("operand {o} of {name} is not available")))
                })
                .collect::<Result<Vec<_>>>()?;
            let rel = evaluate_operands(def, &inputs, site, counter)?;
            views.insert(name, rel);
        }
        Ok(views)
    }

    /// Evaluate only the views the primary view needs and return the primary view.
    pub fn evaluate_primary(&self, bases: &dyn Catalog, site: Site, counter: &mut AccessCounter) -> Result<Relation> {
        let mut all = self.evaluate_all(bases, site, counter)?;
        all.remove(&self.primary)
            .ok_or_else(|| Error::Catalog(format!("primary view {} missing", self.primary)))
    }
}
