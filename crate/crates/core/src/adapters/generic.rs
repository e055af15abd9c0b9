use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{expand_types, AdapterError, ContentInterpreter, Format, Loaded};
use crate::model::{Entity, MetatypeRegistry, ModelDocument, ObjectId, Relation};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentDto {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
    entities: Vec<ObjectDto>,
    relations: Vec<ObjectDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDto {
    id: ObjectId,
    #[serde(default)]
    name: String,
    types: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    namespace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<ObjectId>,
}

impl ObjectDto {
    fn from_entity(e: &Entity) -> Self {
        Self {
            id: e.id.clone(),
            name: e.name.clone(),
            types: e.metatypes.clone(),
            attributes: e.attributes.clone(),
            tags: e.tags.clone(),
            namespace: e.namespace.clone(),
            source: None,
            target: None,
        }
    }

    fn into_entity(self) -> Entity {
        Entity {
            id: self.id,
            name: self.name,
            metatypes: self.types,
            attributes: self.attributes,
            tags: self.tags,
            namespace: self.namespace,
        }
    }
}

/// Parses the native JSON interchange format.
pub fn load_generic(bytes: &[u8]) -> Result<ModelDocument, AdapterError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let dto: DocumentDto = serde_path_to_error::deserialize(de).map_err(AdapterError::json)?;
    let mut doc = ModelDocument::new();
    doc.metadata = dto.metadata;
    for (i, e) in dto.entities.into_iter().enumerate() {
        if e.source.is_some() || e.target.is_some() {
            return Err(AdapterError::Structure(format!(
                "entities[{i}] (`{}`) has endpoints; relations belong in `relations`",
                e.id
            )));
        }
        doc.add_entity(e.into_entity())?;
    }
    for (i, mut r) in dto.relations.into_iter().enumerate() {
        let (Some(source), Some(target)) = (r.source.take(), r.target.take()) else {
            return Err(AdapterError::Structure(format!(
                "relations[{i}] (`{}`) needs both `source` and `target`",
                r.id
            )));
        };
        doc.add_relation(Relation { base: r.into_entity(), source, target })?;
    }
    Ok(doc)
}

/// Pretty-printed JSON, objects ascending by id, trailing newline.
pub fn save_generic(doc: &ModelDocument) -> Vec<u8> {
    let dto = DocumentDto {
        metadata: doc.metadata.clone(),
        entities: doc.entities().map(ObjectDto::from_entity).collect(),
        relations: doc
            .relations()
            .map(|r| ObjectDto {
                source: Some(r.source.clone()),
                target: Some(r.target.clone()),
                ..ObjectDto::from_entity(&r.base)
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&dto).expect("model serializes");
    out.push(b'\n');
    out
}

pub struct GenericInterpreter;

impl ContentInterpreter for GenericInterpreter {
    fn format(&self) -> Format {
        Format::Generic
    }

    fn read(&self, bytes: &[u8], registry: &MetatypeRegistry) -> Result<Loaded, AdapterError> {
        Ok(Loaded { model: expand_types(load_generic(bytes)?, registry)?, warnings: Vec::new() })
    }

    fn write(&self, model: &ModelDocument) -> Result<Vec<u8>, AdapterError> {
        Ok(save_generic(model))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
  "entities": [
    {
      "id": "a1",
      "name": "Customer",
      "types": [
        "Active",
        "Business",
        "BusinessActor"
      ],
      "attributes": {
        "owner": "EA"
      },
      "tags": [
        "core"
      ],
      "namespace": "sales"
    },
    {
      "id": "a2",
      "name": "Clerk",
      "types": [
        "BusinessRole"
      ]
    }
  ],
  "relations": [
    {
      "id": "r1",
      "name": "",
      "types": [
        "AssignmentRelationship"
      ],
      "source": "a1",
      "target": "a2"
    }
  ]
}
"#;

    #[test]
    fn normalized_input_round_trips_bytewise() {
        let doc = load_generic(SAMPLE.as_bytes()).unwrap();
        assert_eq!(doc.entity_count(), 2);
        assert_eq!(doc.relation_count(), 1);
        assert_eq!(String::from_utf8(save_generic(&doc)).unwrap(), SAMPLE);
    }

    #[test]
    fn empty_arrays() {
        let doc = load_generic(br#"{"entities": [], "relations": []}"#).unwrap();
        assert!(doc.is_empty());
    }

    #[test]
    fn schema_errors_carry_path() {
        let err = load_generic(br#"{"entities": [{"id": "a", "types": "X"}], "relations": []}"#).unwrap_err();
        assert!(err.to_string().contains("entities[0].types"), "{err}");
        let err =
            load_generic(br#"{"entities": [], "relations": [{"id": "r", "types": ["T"], "source": "x"}]}"#)
                .unwrap_err();
        assert!(err.to_string().contains("relations[0]"), "{err}");
        let err = load_generic(br#"{"entities": [{"id": "a", "types": []}], "relations": []}"#).unwrap_err();
        assert!(matches!(err, AdapterError::Model(_)));
    }

    #[test]
    fn dangling_relation_rejected() {
        let err = load_generic(
            br#"{"entities": [], "relations": [{"id": "r", "types": ["T"], "source": "x", "target": "y"}]}"#,
        );
        assert!(matches!(err, Err(AdapterError::Model(_))));
    }
}
