use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use super::AdapterError;
use crate::model::MetatypeRegistry;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    #[serde(default)]
    hierarchy: BTreeMap<String, BTreeSet<String>>,
}

/// Parses `{"aliases": {...}, "hierarchy": {"Type": ["Implied", ...]}}`.
pub fn load_registry(bytes: &[u8]) -> Result<MetatypeRegistry, AdapterError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let file: RegistryFile = serde_path_to_error::deserialize(de).map_err(AdapterError::json)?;
    Ok(MetatypeRegistry::from_parts(file.aliases, file.hierarchy)?)
}

const STRATEGY: &[(&str, &str)] = &[
    ("Resource", "Passive"),
    ("Capability", "Behavior"),
    ("ValueStream", "Behavior"),
    ("CourseOfAction", "Behavior"),
];

const BUSINESS: &[(&str, &str)] = &[
    ("BusinessActor", "Active"),
    ("BusinessRole", "Active"),
    ("BusinessCollaboration", "Active"),
    ("BusinessInterface", "Active"),
    ("BusinessProcess", "Behavior"),
    ("BusinessFunction", "Behavior"),
    ("BusinessInteraction", "Behavior"),
    ("BusinessEvent", "Behavior"),
    ("BusinessService", "Behavior"),
    ("BusinessObject", "Passive"),
    ("Contract", "Passive"),
    ("Representation", "Passive"),
    ("Product", "Passive"),
];

const APPLICATION: &[(&str, &str)] = &[
    ("ApplicationComponent", "Active"),
    ("ApplicationCollaboration", "Active"),
    ("ApplicationInterface", "Active"),
    ("ApplicationFunction", "Behavior"),
    ("ApplicationInteraction", "Behavior"),
    ("ApplicationProcess", "Behavior"),
    ("ApplicationEvent", "Behavior"),
    ("ApplicationService", "Behavior"),
    ("DataObject", "Passive"),
];

const TECHNOLOGY: &[(&str, &str)] = &[
    ("Node", "Active"),
    ("Device", "Active"),
    ("SystemSoftware", "Active"),
    ("TechnologyCollaboration", "Active"),
    ("TechnologyInterface", "Active"),
    ("Path", "Active"),
    ("CommunicationNetwork", "Active"),
    ("TechnologyFunction", "Behavior"),
    ("TechnologyProcess", "Behavior"),
    ("TechnologyInteraction", "Behavior"),
    ("TechnologyEvent", "Behavior"),
    ("TechnologyService", "Behavior"),
    ("Artifact", "Passive"),
];

const PHYSICAL: &[(&str, &str)] = &[
    ("Equipment", "Active"),
    ("Facility", "Active"),
    ("DistributionNetwork", "Active"),
    ("Material", "Passive"),
];

const IMPLEMENTATION: &[(&str, &str)] = &[
    ("WorkPackage", "Behavior"),
    ("ImplementationEvent", "Behavior"),
    ("Deliverable", "Passive"),
    ("Plateau", ""),
    ("Gap", ""),
];

const MOTIVATION: &[&str] = &[
    "Stakeholder",
    "Driver",
    "Assessment",
    "Goal",
    "Outcome",
    "Principle",
    "Requirement",
    "Constraint",
    "Meaning",
    "Value",
];

const COMPOSITE: &[&str] = &["Grouping", "Location"];

const RELATIONSHIPS: &[&str] = &[
    "Composition",
    "Aggregation",
    "Assignment",
    "Realization",
    "Serving",
    "Access",
    "Influence",
    "Triggering",
    "Flow",
    "Specialization",
    "Association",
];

/// `BusinessActor` -> `Business Actor`.
fn spaced(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    for (i, c) in name.chars().enumerate() {
        if i > 0 && c.is_ascii_uppercase() {
            out.push(' ');
        }
        out.push(c);
    }
    out
}

/// Layer and aspect expansion for the ArchiMate 3 catalog.
///
/// Every element gains its layer (`Business`, `Application`, ...) and, where
/// it has one, its aspect (`Active`, `Behavior`, `Passive`). Relationships
/// are canonicalized to their `...Relationship` form and gain `Relation`.
/// `archimate:`-prefixed and space-separated spellings are aliases.
pub fn default_archimate_registry() -> MetatypeRegistry {
    let mut reg = MetatypeRegistry::new();
    let element = |reg: &mut MetatypeRegistry, name: &str, implied: &[&str]| {
        for i in implied.iter().filter(|i| !i.is_empty()) {
            reg.add_implied(name, *i);
        }
        reg.add_alias(format!("archimate:{name}"), name).expect("catalog aliases are acyclic");
        let s = spaced(name);
        if s != name {
            reg.add_alias(s, name).expect("catalog aliases are acyclic");
        }
    };
    let layers: [(&str, &[(&str, &str)]); 5] = [
        ("Strategy", STRATEGY),
        ("Business", BUSINESS),
        ("Application", APPLICATION),
        ("Technology", TECHNOLOGY),
        ("Physical", PHYSICAL),
    ];
    for (layer, members) in layers {
        for (name, aspect) in members {
            element(&mut reg, name, &[layer, aspect]);
        }
    }
    for (name, aspect) in IMPLEMENTATION {
        element(&mut reg, name, &["Implementation", aspect]);
    }
    for name in MOTIVATION {
        element(&mut reg, name, &["Motivation"]);
    }
    for name in COMPOSITE {
        element(&mut reg, name, &["Composite"]);
    }
    element(&mut reg, "AndJunction", &["Junction"]);
    element(&mut reg, "OrJunction", &["Junction"]);
    for short in RELATIONSHIPS {
        let full = format!("{short}Relationship");
        element(&mut reg, &full, &["Relation"]);
        reg.add_alias(*short, full.as_str()).expect("catalog aliases are acyclic");
        reg.add_alias(format!("archimate:{short}"), full.as_str()).expect("catalog aliases are acyclic");
    }
    reg
}
