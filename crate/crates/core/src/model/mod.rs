//! Serialization-neutral model representation.
//!
//! A [`ModelDocument`] holds entities and relations keyed by [`ObjectId`].
//! Every object carries a non-empty set of metatypes; queries match on set
//! membership, so one object can answer to its direct type as well as to any
//! layer, aspect or synonym type assigned through a [`MetatypeRegistry`].
//!
//! Collections are `BTreeMap`/`BTreeSet` throughout so that iteration order is
//! ascending by id and every derived output is reproducible.

mod metatype;
mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metatype::{resolve_metatypes, MetatypeRegistry};
pub(crate) use value::quote;
pub use value::{
    get_value, set_value, Accessor, AssignAccessor, ContentRef, ValueContext, ValueError, ValueExpression,
    ValueSegment,
};

/// Globally unique object identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ObjectId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl AsRef<str> for ObjectId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A content object: identity, name, metatypes, attributes and tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: ObjectId,
    pub name: String,
    pub metatypes: BTreeSet<String>,
    pub attributes: BTreeMap<String, String>,
    pub tags: BTreeSet<String>,
    pub namespace: Option<String>,
}

impl Entity {
    pub fn new<I, S>(id: impl Into<ObjectId>, name: impl Into<String>, metatypes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            id: id.into(),
            name: name.into(),
            metatypes: metatypes.into_iter().map(Into::into).collect(),
            attributes: BTreeMap::new(),
            tags: BTreeSet::new(),
            namespace: None,
        }
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.insert(tag.into());
        self
    }

    pub fn with_namespace(mut self, ns: impl Into<String>) -> Self {
        self.namespace = Some(ns.into());
        self
    }

    pub fn has_type(&self, metatype: &str) -> bool {
        self.metatypes.contains(metatype)
    }
}

/// An entity-like object that also references a source and a target entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub base: Entity,
    pub source: ObjectId,
    pub target: ObjectId,
}

impl Relation {
    pub fn new<I, S>(
        id: impl Into<ObjectId>,
        name: impl Into<String>,
        metatypes: I,
        source: impl Into<ObjectId>,
        target: impl Into<ObjectId>,
    ) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { base: Entity::new(id, name, metatypes), source: source.into(), target: target.into() }
    }

    pub fn id(&self) -> &ObjectId {
        &self.base.id
    }

    pub fn has_type(&self, metatype: &str) -> bool {
        self.base.has_type(metatype)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate object id `{0}`")]
    DuplicateId(ObjectId),
    #[error("object `{0}` has no metatype")]
    EmptyMetatypes(ObjectId),
    #[error("relation `{relation}` references missing {end} entity `{missing}`")]
    DanglingEndpoint { relation: ObjectId, end: &'static str, missing: ObjectId },
    #[error("alias cycle in metatype registry: {}", .0.join(" -> "))]
    AliasCycle(Vec<String>),
}

/// Container for one model: entities, relations and free-form metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelDocument {
    entities: BTreeMap<ObjectId, Entity>,
    relations: BTreeMap<ObjectId, Relation>,
    pub metadata: BTreeMap<String, String>,
}

impl ModelDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entities.len() + self.relations.len()
    }

    pub fn add_entity(&mut self, entity: Entity) -> Result<(), ModelError> {
        if entity.metatypes.is_empty() {
            return Err(ModelError::EmptyMetatypes(entity.id));
        }
        if self.contains(&entity.id) {
            return Err(ModelError::DuplicateId(entity.id));
        }
        self.entities.insert(entity.id.clone(), entity);
        Ok(())
    }

    /// Adds a relation; both endpoints must already be entities of this document.
    pub fn add_relation(&mut self, relation: Relation) -> Result<(), ModelError> {
        if relation.base.metatypes.is_empty() {
            return Err(ModelError::EmptyMetatypes(relation.base.id));
        }
        if self.contains(relation.id()) {
            return Err(ModelError::DuplicateId(relation.base.id));
        }
        for (end, id) in [("source", &relation.source), ("target", &relation.target)] {
            if !self.entities.contains_key(id) {
                return Err(ModelError::DanglingEndpoint {
                    relation: relation.base.id.clone(),
                    end,
                    missing: id.clone(),
                });
            }
        }
        self.relations.insert(relation.base.id.clone(), relation);
        Ok(())
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.entities.contains_key(id) || self.relations.contains_key(id)
    }

    pub fn entity(&self, id: &ObjectId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn relation(&self, id: &ObjectId) -> Option<&Relation> {
        self.relations.get(id)
    }

    pub fn object(&self, id: &ObjectId) -> Option<ContentRef<'_>> {
        self.entities
            .get(id)
            .map(ContentRef::Entity)
            .or_else(|| self.relations.get(id).map(ContentRef::Relation))
    }

    pub(crate) fn object_mut(&mut self, id: &ObjectId) -> Option<&mut Entity> {
        match self.entities.get_mut(id) {
            Some(e) => Some(e),
            None => self.relations.get_mut(id).map(|r| &mut r.base),
        }
    }

    /// Entities in ascending id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    /// Relations in ascending id order.
    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Removes the given objects and every relation left dangling on a removed
    /// entity. Returns the ids actually removed, ascending.
    pub fn remove_objects(&mut self, ids: &BTreeSet<ObjectId>) -> BTreeSet<ObjectId> {
        let mut removed = BTreeSet::new();
        for id in ids {
            if self.entities.remove(id).is_some() || self.relations.remove(id).is_some() {
                removed.insert(id.clone());
            }
        }
        let dangling: Vec<ObjectId> = self
            .relations
            .values()
            .filter(|r| !self.entities.contains_key(&r.source) || !self.entities.contains_key(&r.target))
            .map(|r| r.base.id.clone())
            .collect();
        for id in dangling {
            self.relations.remove(&id);
            removed.insert(id);
        }
        removed
    }

    /// Checks the document invariants; documents built through `add_*` always pass.
    pub fn validate(&self) -> Result<(), ModelError> {
        for e in self.entities.values() {
            if e.metatypes.is_empty() {
                return Err(ModelError::EmptyMetatypes(e.id.clone()));
            }
        }
        for r in self.relations.values() {
            if self.entities.contains_key(r.id()) {
                return Err(ModelError::DuplicateId(r.id().clone()));
            }
            for (end, id) in [("source", &r.source), ("target", &r.target)] {
                if !self.entities.contains_key(id) {
                    return Err(ModelError::DanglingEndpoint {
                        relation: r.id().clone(),
                        end,
                        missing: id.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Type filter used by queries: a concrete metatype or the `*` wildcard.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeFilter {
    Any,
    Named(String),
}

impl TypeFilter {
    pub fn named(name: impl Into<String>) -> Self {
        TypeFilter::Named(name.into())
    }

    pub fn accepts(&self, metatypes: &BTreeSet<String>, registry: &MetatypeRegistry) -> bool {
        match self {
            TypeFilter::Any => true,
            TypeFilter::Named(t) => metatypes.contains(registry.canonical(t)),
        }
    }
}

impl fmt::Display for TypeFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeFilter::Any => f.write_str("*"),
            TypeFilter::Named(t) => f.write_str(t),
        }
    }
}

/// All entities whose metatype set contains the canonicalized type, ascending by id.
pub fn entities_of_type<'m>(
    model: &'m ModelDocument,
    filter: &TypeFilter,
    registry: &MetatypeRegistry,
) -> Vec<&'m Entity> {
    model.entities().filter(|e| filter.accepts(&e.metatypes, registry)).collect()
}

/// Relation counterpart of [`entities_of_type`].
pub fn relations_of_type<'m>(
    model: &'m ModelDocument,
    filter: &TypeFilter,
    registry: &MetatypeRegistry,
) -> Vec<&'m Relation> {
    model.relations().filter(|r| filter.accepts(&r.base.metatypes, registry)).collect()
}
