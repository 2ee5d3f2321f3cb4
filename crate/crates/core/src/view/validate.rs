use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{CompiledView, ViewHierarchy};
use crate::error::Result;
use crate::relation::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    DuplicateName,
    MissingPrimary,
    EmptyOperands,
    DuplicateOperand,
    UnresolvedOperand,
    Cycle,
    Schema,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::DuplicateName => "duplicate name",
            DiagnosticKind::MissingPrimary => "missing primary view",
            DiagnosticKind::EmptyOperands => "empty operand list",
            DiagnosticKind::DuplicateOperand => "duplicate operand",
            DiagnosticKind::UnresolvedOperand => "unresolved operand",
            DiagnosticKind::Cycle => "cycle",
            DiagnosticKind::Schema => "schema mismatch",
        })
    }
}

/// The first problem found in a view hierarchy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub view: Option<String>,
    pub message: String,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, view: Option<&str>, message: impl Into<String>) -> Self {
        Diagnostic { kind, view: view.map(str::to_owned), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.view {
            Some(v) => write!(f, "{} in view {v}: {}", self.kind, self.message),
            None => write!(f, "{}: {}", self.kind, self.message),
        }
    }
}

impl std::error::Error for Diagnostic {}

impl ViewHierarchy {
    /// Check names, operand resolution, acyclicity and every view's schema.
    pub fn validate(&self) -> Result<()> {
        self.diagnose().map_err(Into::into)
    }

    fn diagnose(&self) -> std::result::Result<(), Diagnostic> {
        use DiagnosticKind as K;

        let mut names = BTreeSet::new();
        for name in self.bases().iter().map(Schema::name).chain(self.views().iter().map(|v| v.name.as_str())) {
            if !names.insert(name) {
                return Err(Diagnostic::new(K::DuplicateName, None, format!("{name} is defined more than once")));
            }
        }
        if self.view(self.primary()).is_none() {
            return Err(Diagnostic::new(
                K::MissingPrimary,
                None,
                format!("primary view {} is not defined", self.primary()),
            ));
        }
        for v in self.views() {
            if v.operands.is_empty() {
                return Err(Diagnostic::new(K::EmptyOperands, Some(&v.name), "a view needs at least one operand"));
            }
            let mut seen = BTreeSet::new();
            for o in &v.operands {
                if !seen.insert(o.as_str()) {
                    return Err(Diagnostic::new(K::DuplicateOperand, Some(&v.name), format!("{o} is listed twice")));
                }
                if !names.contains(o.as_str()) {
                    return Err(Diagnostic::new(
                        K::UnresolvedOperand,
                        Some(&v.name),
                        format!("{o} is neither a base relation nor a view"),
                    ));
                }
            }
        }
        let order = self.topological_order();
        if order.len() != self.views().len() {
            let placed: BTreeSet<&str> = order.iter().map(String::as_str).collect();
            let stuck = self
                .views()
                .iter()
                .map(|v| v.name.as_str())
                .filter(|n| !placed.contains(n))
                .min()
                .unwrap_or_default();
            return Err(Diagnostic::new(K::Cycle, Some(stuck), "the view depends on itself"));
        }
        let mut schemas: BTreeMap<&str, Schema> = self.bases().iter().map(|s| (s.name(), s.clone())).collect();
        for name in &order {
            let def = self.view(name).expect("ordered view exists");
            let refs: Vec<&Schema> = def.operands.iter().map(|o| &schemas[o.as_str()]).collect();
            match CompiledView::compile(def, &refs) {
                Ok(view) => {
                    schemas.insert(def.name.as_str(), view.output_schema().clone());
                }
                Err(e) => return Err(Diagnostic::new(K::Schema, Some(name), e.to_string())),
            }
        }
        Ok(())
    }
}
