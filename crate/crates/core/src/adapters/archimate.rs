use std::collections::BTreeMap;

use super::xml::{self, XmlNode};
use super::{AdapterError, ContentInterpreter, Format, Loaded};
use crate::model::{resolve_metatypes, Entity, MetatypeRegistry, ModelDocument, Relation};

fn name_of(node: &XmlNode) -> String {
    node.child("name").map(|n| n.text.clone()).unwrap_or_default()
}

fn properties(node: &XmlNode, defs: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for props in node.children_named("properties") {
        for p in props.children_named("property") {
            let Some(def) = p.attr("propertyDefinitionRef") else {
                continue;
            };
            let key = defs.get(def).cloned().unwrap_or_else(|| def.to_owned());
            let value = p.child("value").map(|v| v.text.clone()).unwrap_or_default();
            out.insert(key, value);
        }
    }
    out
}

fn is_known(declared: &str, registry: &MetatypeRegistry) -> bool {
    registry.hierarchy().contains_key(registry.canonical(declared))
}

/// Reads the elements and relationships of an ArchiMate Model Exchange
/// Format file. Views, organizations and documentation are ignored.
///
/// Declared types are expanded through `registry`; a type the registry does
/// not know is kept verbatim and reported. Relationships between
/// relationships cannot be represented and are skipped with a warning.
pub fn load_archimate(bytes: &[u8], registry: &MetatypeRegistry) -> Result<Loaded, AdapterError> {
    let root = xml::parse(bytes)?;
    if root.name != "model" {
        return Err(AdapterError::Structure(format!("expected a <model> root, found <{}>", root.name)));
    }
    let mut defs = BTreeMap::new();
    for group in root.children_named("propertyDefinitions") {
        for d in group.children_named("propertyDefinition") {
            if let Some(id) = d.attr("identifier") {
                defs.insert(id.to_owned(), name_of(d));
            }
        }
    }

    let mut loaded = Loaded::default();
    let doc = &mut loaded.model;
    doc.metadata.insert("format".into(), "archimate".into());
    let model_name = name_of(&root);
    if !model_name.is_empty() {
        doc.metadata.insert("name".into(), model_name);
    }

    let typed = |node: &XmlNode, what: &str| -> Result<(String, String), AdapterError> {
        let id = node
            .attr("identifier")
            .ok_or_else(|| AdapterError::Structure(format!("{what} without identifier")))?;
        let ty = node
            .attr("type")
            .ok_or_else(|| AdapterError::Structure(format!("{what} `{id}` has no xsi:type")))?;
        Ok((id.to_owned(), ty.to_owned()))
    };

    for group in root.children_named("elements") {
        for node in group.children_named("element") {
            let (id, ty) = typed(node, "element")?;
            if !is_known(&ty, registry) {
                loaded.warnings.push(format!("element `{id}`: unknown type `{ty}` kept verbatim"));
            }
            let mut e = Entity::new(id, name_of(node), resolve_metatypes([&ty], registry));
            e.attributes = properties(node, &defs);
            doc.add_entity(e)?;
        }
    }
    for group in root.children_named("relationships") {
        for node in group.children_named("relationship") {
            let (id, ty) = typed(node, "relationship")?;
            let (Some(source), Some(target)) = (node.attr("source"), node.attr("target")) else {
                return Err(AdapterError::Structure(format!("relationship `{id}` needs source and target")));
            };
            let on_relation =
                |end: &str| group.children_named("relationship").any(|r| r.attr("identifier") == Some(end));
            if on_relation(source) || on_relation(target) {
                loaded.warnings.push(format!("relationship `{id}` connects a relationship; skipped"));
                continue;
            }
            if !is_known(&ty, registry) {
                loaded.warnings.push(format!("relationship `{id}`: unknown type `{ty}` kept verbatim"));
            }
            let mut r = Relation::new(id, name_of(node), resolve_metatypes([&ty], registry), source, target);
            r.base.attributes = properties(node, &defs);
            doc.add_relation(r)?;
        }
    }
    Ok(loaded)
}

pub struct ArchimateInterpreter;

impl ContentInterpreter for ArchimateInterpreter {
    fn format(&self) -> Format {
        Format::Archimate
    }

    fn can_write(&self) -> bool {
        false
    }

    fn read(&self, bytes: &[u8], registry: &MetatypeRegistry) -> Result<Loaded, AdapterError> {
        load_archimate(bytes, registry)
    }

    fn write(&self, _: &ModelDocument) -> Result<Vec<u8>, AdapterError> {
        Err(AdapterError::Capability { format: Format::Archimate, operation: "write" })
    }
}
