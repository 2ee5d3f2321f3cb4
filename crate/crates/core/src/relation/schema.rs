use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::value::{AttrType, Tuple};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: AttrType,
}

impl Attribute {
    pub fn new(name: impl Into<String>, ty: AttrType) -> Self {
        Attribute { name: name.into(), ty }
    }
}

/// Relation schema. `tuple_size` is the declared bytes per tuple used by the space model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    name: String,
    attributes: Vec<Attribute>,
    tuple_size: u32,
}

impl Schema {
    pub fn new(name: impl Into<String>, attributes: Vec<Attribute>, tuple_size: u32) -> Result<Self> {
        let name = name.into();
        if tuple_size == 0 {
            return Err(Error::Schema(format!("{name}: tuple size must be at least 1 byte")));
        }
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("{name}: duplicate attribute {}", a.name)));
            }
        }
        Ok(Schema { name, attributes, tuple_size })
    }

    /// Shorthand for integer-only schemas, mostly used by tests and fixtures.
    pub fn ints(name: &str, attrs: &[&str], tuple_size: u32) -> Result<Self> {
        Schema::new(
            name,
            attrs.iter().map(|a| Attribute::new(*a, AttrType::Int)).collect(),
            tuple_size,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn tuple_size(&self) -> u32 {
        self.tuple_size
    }

    pub fn renamed(&self, name: impl Into<String>) -> Schema {
        Schema { name: name.into(), ..self.clone() }
    }

    /// Resolve an attribute reference. An exact name match wins; otherwise the reference
    /// must match the unqualified suffix (after the last `.`) of exactly one attribute, or
    /// a qualified reference `q.a` must match an attribute named `a` when the schema itself
    /// is named `q`.
    pub fn resolve(&self, reference: &str) -> Result<usize> {
        if let Some(i) = self.attributes.iter().position(|a| a.name == reference) {
            return Ok(i);
        }
        if let Some((qual, attr)) = reference.rsplit_once('.') {
            if qual == self.name {
                if let Some(i) = self.attributes.iter().position(|a| a.name == attr) {
                    return Ok(i);
                }
            }
        }
        let mut hits = self
            .attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| unqualified(&a.name) == reference);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Ok(i),
            (Some(_), Some(_)) => Err(Error::Schema(format!(
                "ambiguous attribute {reference} in {}",
                self.name
            ))),
            (None, _) => Err(Error::Schema(format!(
                "unknown attribute {reference} in {}",
                self.name
            ))),
        }
    }

    /// Same arity and attribute types, names aside.
    pub fn compatible(&self, other: &Schema) -> bool {
        self.arity() == other.arity()
            && self.attributes.iter().zip(&other.attributes).all(|(a, b)| a.ty == b.ty)
    }

    pub fn check_tuple(&self, t: &Tuple) -> Result<()> {
        if t.arity() != self.arity() {
            return Err(Error::Schema(format!(
                "{}: tuple {t} has arity {}, expected {}",
                self.name,
                t.arity(),
                self.arity()
            )));
        }
        for (v, a) in t.values().iter().zip(&self.attributes) {
            if v.ty() != a.ty {
                return Err(Error::Schema(format!(
                    "{}: value {v} does not match {} attribute {}",
                    self.name, a.ty, a.name
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn unqualified(name: &str) -> &str {
    name.rsplit_once('.').map_or(name, |(_, a)| a)
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.attributes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&a.name)?;
        }
        f.write_str(")")
    }
}
