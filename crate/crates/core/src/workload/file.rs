//! JSON scenario files.
//!
//! ```json
//! {
//!   "label": "two-way",
//!   "schemas": [{"name": "r1", "attributes": [{"name": "A", "type": "int"}], "tuple_size": 8}],
//!   "data": {"r1": [[1]]},
//!   "views": [{"name": "V", "operands": ["r1"], "project": ["A"]}],
//!   "primary": "V",
//!   "maintainer": "NSMI_ECA",
//!   "updates": [{"time": 0, "base": "r1", "insert": [[2]]}],
//!   "latency": {"to_warehouse": 1, "to_source": {"min": 1, "max": 3}},
//!   "seed": 7
//! }
//! ```
//!
//! `data` may instead be `{"generator": {"scale": 100, "appends": 10, "seed": 1}}`, which
//! supplies the order-processing schemas, their rows and an append stream; explicit
//! `schemas` are then optional and explicit `updates` follow the generated ones.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generator::{generate, GeneratorSpec};
use crate::error::{Error, Result};
use crate::relation::{Attribute, DeltaRelation, Relation, Schema, Tuple};
use crate::sim::{LatencyModel, Scenario, ScheduledUpdate};
use crate::strategies::MaintainerKind;
use crate::view::{ViewDef, ViewHierarchy};

/// Environment variable that replaces the seed given in a scenario file.
pub const SEED_ENV: &str = "VMSIM_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schemas: Vec<SchemaSpec>,
    pub data: DataSpec,
    pub views: Vec<ViewSpec>,
    pub primary: String,
    pub maintainer: MaintainerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replication: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub updates: Vec<UpdateSpec>,
    #[serde(default = "default_latency")]
    pub latency: LatencyModel,
    #[serde(default)]
    pub seed: u64,
}

fn default_latency() -> LatencyModel {
    LatencyModel::fixed(1, 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSpec {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub tuple_size: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSpec {
    Generator { generator: GeneratorSpec },
    /// Rows per relation; a repeated row adds to its multiplicity.
    Inline(BTreeMap<String, Vec<Tuple>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub name: String,
    pub operands: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub join: Vec<String>,
    #[serde(default, rename = "where", skip_serializing_if = "Vec::is_empty")]
    pub filter: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple_size: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateSpec {
    pub time: u64,
    pub base: String,
    pub insert: Vec<Tuple>,
}

fn at(field: String) -> impl FnOnce(Error) -> Error {
    move |e| Error::Parse(format!("{field}: {e}"))
}

fn rows_of(rel: &Relation) -> Vec<Tuple> {
    rel.iter().flat_map(|(t, &n)| std::iter::repeat_n(t.clone(), n as usize)).collect()
}

impl ViewSpec {
    fn to_def(&self) -> Result<ViewDef> {
        let ops: Vec<&str> = self.operands.iter().map(String::as_str).collect();
        let mut def = ViewDef::new(&self.name, &ops).join_on(&strs(&self.join))?.filter(&strs(&self.filter))?;
        if let Some(items) = &self.project {
            def = def.project(&strs(items))?;
        }
        def.tuple_size = self.tuple_size;
        Ok(def)
    }

    fn from_def(def: &ViewDef) -> Self {
        let text = |p: &crate::relation::Predicate| p.conjuncts.iter().map(ToString::to_string).collect();
        ViewSpec {
            name: def.name.clone(),
            operands: def.operands.clone(),
            join: text(&def.join_conds),
            filter: text(&def.selection),
            project: def.projection.as_ref().map(|items| items.iter().map(ToString::to_string).collect()),
            tuple_size: def.tuple_size,
        }
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// Build the scenario. `seed` replaces the file's seed when given.
    pub fn to_scenario(&self, seed: Option<u64>) -> Result<Scenario> {
        let (generated, mut initial) = match &self.data {
            DataSpec::Generator { generator } => {
                let g = generate(generator).map_err(at("data.generator".into()))?;
                (Some((g.schemas, g.updates)), g.data)
            }
            DataSpec::Inline(_) => (None, BTreeMap::new()),
        };
        let mut schemas: Vec<Schema> = Vec::new();
        for (i, s) in self.schemas.iter().enumerate() {
            schemas.push(
                Schema::new(&s.name, s.attributes.clone(), s.tuple_size).map_err(at(format!("schemas[{i}]")))?,
            );
        }
        let mut updates = Vec::new();
        if let Some((gen_schemas, gen_updates)) = generated {
            for s in gen_schemas {
                if !schemas.iter().any(|x| x.name() == s.name()) {
                    schemas.push(s);
                }
            }
            updates = gen_updates;
        }
        if let DataSpec::Inline(data) = &self.data {
            for (name, rows) in data {
                let schema = schemas
                    .iter()
                    .find(|s| s.name() == name)
                    .ok_or_else(|| Error::Parse(format!("data.{name}: no schema named {name}")))?;
                let rel = Relation::from_tuples(schema.clone(), rows.iter().cloned()).map_err(at(format!("data.{name}")))?;
                initial.insert(name.clone(), rel);
            }
        }
        for s in &schemas {
            initial.entry(s.name().to_owned()).or_insert_with(|| Relation::empty(s.clone()));
        }

        let mut views = Vec::new();
        for (i, v) in self.views.iter().enumerate() {
            views.push(v.to_def().map_err(at(format!("views[{i}] ({})", v.name)))?);
        }
        let hierarchy = ViewHierarchy::build(schemas, views, &self.primary).map_err(at("views".into()))?;

        for (i, u) in self.updates.iter().enumerate() {
            let schema = hierarchy
                .base(&u.base)
                .ok_or_else(|| Error::Parse(format!("updates[{i}]: unknown base relation {}", u.base)))?;
            let delta =
                DeltaRelation::inserts(schema.clone(), u.insert.iter().cloned()).map_err(at(format!("updates[{i}]")))?;
            updates.push(ScheduledUpdate { time: u.time, base: u.base.clone(), delta });
        }

        let scenario = Scenario {
            label: self.label.clone(),
            hierarchy,
            initial,
            updates,
            kind: self.maintainer,
            replication: self.replication.as_ref().map(|r| r.iter().cloned().collect::<BTreeSet<_>>()),
            latency: self.latency.clone(),
            seed: seed.unwrap_or(self.seed),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// A self-contained file with inline data that parses back to `s`.
    pub fn from_scenario(s: &Scenario) -> Self {
        let h = &s.hierarchy;
        ScenarioFile {
            label: s.label.clone(),
            schemas: h
                .bases()
                .iter()
                .map(|b| SchemaSpec {
                    name: b.name().to_owned(),
                    attributes: b.attributes().to_vec(),
                    tuple_size: b.tuple_size(),
                })
                .collect(),
            data: DataSpec::Inline(s.initial.iter().map(|(k, r)| (k.clone(), rows_of(r))).collect()),
            views: h.views().iter().map(ViewSpec::from_def).collect(),
            primary: h.primary().to_owned(),
            maintainer: s.kind,
            replication: s.replication.as_ref().map(|r| r.iter().cloned().collect()),
            updates: s
                .updates
                .iter()
                .map(|u| UpdateSpec {
                    time: u.time,
                    base: u.base.clone(),
                    insert: rows_of(&u.delta.to_relation().expect("updates are insertions")),
                })
                .collect(),
            latency: s.latency.clone(),
            seed: s.seed,
        }
    }
}

/// The seed from [`SEED_ENV`], if set. A value that is not an unsigned integer is an error.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Error::Parse(format!("{SEED_ENV}={v:?} is not a seed"))),
        Err(_) => Ok(None),
    }
}

/// Parse `path` and apply the environment seed override.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    ScenarioFile::load(path)?.to_scenario(seed_from_env()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::fixtures::{anomaly, mixed_snapshot, nested_hierarchy, nested_initial};
    use crate::workload::generator::{benchmark, GeneratorSpec};

    const TWO_WAY: &str = r#"{
        "label": "two-way",
        "schemas": [
            {"name": "r1", "attributes": [{"name": "A", "type": "int"}, {"name": "B", "type": "int"}], "tuple_size": 16},
            {"name": "r2", "attributes": [{"name": "B", "type": "int"}, {"name": "C", "type": "string"}], "tuple_size": 16}
        ],
        "data": {"r1": [[1, 2], [1, 2]], "r2": []},
        "views": [{"name": "V", "operands": ["r1", "r2"], "join": ["r1.B = r2.B"], "where": ["C != 'x'"], "project": ["A", "C"]}],
        "primary": "V",
        "maintainer": "NSMI_ECA",
        "updates": [{"time": 0, "base": "r2", "insert": [[2, "y"]]}],
        "latency": {"to_warehouse": 1, "to_source": {"min": 1, "max": 3}, "overrides": [{"channel": "to_source", "index": 0, "delay": 9}]},
        "seed": 7
    }"#;

    #[test]
    fn parses_every_section() {
        let s = ScenarioFile::parse(TWO_WAY).unwrap().to_scenario(None).unwrap();
        assert_eq!(s.label, "two-way");
        assert_eq!(s.initial["r1"].card(), 2);
        assert_eq!(s.updates.len(), 1);
        assert_eq!(s.kind, MaintainerKind::NsmiEca);
        assert_eq!(s.seed, 7);
        assert_eq!(s.latency.overrides.len(), 1);
        assert_eq!(ScenarioFile::parse(TWO_WAY).unwrap().to_scenario(Some(3)).unwrap().seed, 3);
    }

    #[test]
    fn scenarios_round_trip_through_json() {
        let mut nested = crate::sim::Scenario::new("nested", nested_hierarchy(), nested_initial(4), MaintainerKind::Smi);
        nested.insert_at(2, "r33", [[9]]).unwrap();
        nested.replication = Some(crate::workload::fixtures::NESTED_BASES.iter().map(|b| b.to_string()).collect());
        let from_text = ScenarioFile::parse(TWO_WAY).unwrap().to_scenario(None).unwrap();
        for s in [anomaly(MaintainerKind::NsmiNaive), mixed_snapshot(MaintainerKind::Nsmr), nested, from_text] {
            let text = ScenarioFile::from_scenario(&s).to_json();
            let back = ScenarioFile::parse(&text).unwrap().to_scenario(None).unwrap();
            assert_eq!(back, s, "{}", s.label);
        }
    }

    #[test]
    fn generator_directive_expands_to_the_generated_scenario() {
        let spec = GeneratorSpec::new(1000, 100, 42);
        let file = ScenarioFile {
            label: "benchmark".into(),
            schemas: Vec::new(),
            data: DataSpec::Generator { generator: spec },
            views: vec![ViewSpec::from_def(&crate::workload::generator::benchmark_view())],
            primary: "V".into(),
            maintainer: MaintainerKind::Smi,
            replication: None,
            updates: Vec::new(),
            latency: crate::workload::generator::benchmark_latency(),
            seed: 42,
        };
        let text = file.to_json();
        assert!(text.contains("\"generator\""));
        let s = ScenarioFile::parse(&text).unwrap().to_scenario(None).unwrap();
        assert_eq!(s, benchmark(MaintainerKind::Smi));
    }

    #[test]
    fn errors_name_the_offending_field() {
        let bad_view = TWO_WAY.replace("r1.B = r2.B", "r1.Z = r2.B");
        let e = ScenarioFile::parse(&bad_view).unwrap().to_scenario(None).unwrap_err();
        assert!(e.to_string().contains("views"), "{e}");

        let bad_update = TWO_WAY.replace(r#"[[2, "y"]]"#, "[[2]]");
        let e = ScenarioFile::parse(&bad_update).unwrap().to_scenario(None).unwrap_err();
        assert!(e.to_string().contains("updates[0]"), "{e}");

        let e = ScenarioFile::parse(&TWO_WAY.replace("\"primary\"", "\"primry\"")).unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");

        let cyclic = TWO_WAY.replace(r#""operands": ["r1", "r2"]"#, r#""operands": ["V", "r2"]"#);
        let e = ScenarioFile::parse(&cyclic).unwrap().to_scenario(None).unwrap_err();
        assert!(e.to_string().to_lowercase().contains("cycle"), "{e}");
    }
}
