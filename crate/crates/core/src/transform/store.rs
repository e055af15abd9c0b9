use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use super::ledger::RecordRef;
use crate::model::{
    set_value, AssignAccessor, Entity, ModelDocument, ModelError, ObjectId, Relation, ValueError,
};

/// Deterministic id for an object minted by `rule` for the binding `key`,
/// target parameter `param`, and expansion `discriminator`.
pub fn mint_id(rule: &str, key: &str, param: &str, discriminator: &str) -> ObjectId {
    let mut h = Sha256::new();
    for part in [rule, key, param, discriminator] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    let digest = hex::encode(h.finalize());
    ObjectId::new(format!("emt-{}", &digest[..16]))
}

/// A conflicting write, with the execution that wrote the existing value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct WriteConflict {
    pub error: Box<ValueError>,
    pub first: RecordRef,
}

/// Output model under construction.
#[derive(Debug, Clone, Default)]
pub struct TargetStore {
    model: ModelDocument,
    intermediate: BTreeSet<ObjectId>,
    writes: BTreeMap<(ObjectId, AssignAccessor), RecordRef>,
}

impl TargetStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn model(&self) -> &ModelDocument {
        &self.model
    }

    pub fn intermediates(&self) -> &BTreeSet<ObjectId> {
        &self.intermediate
    }

    pub fn is_intermediate(&self, id: &ObjectId) -> bool {
        self.intermediate.contains(id)
    }

    pub(crate) fn add_entity(&mut self, entity: Entity, intermediate: bool) -> Result<(), ModelError> {
        let id = entity.id.clone();
        self.model.add_entity(entity)?;
        if intermediate {
            self.intermediate.insert(id);
        }
        Ok(())
    }

    pub(crate) fn add_relation(&mut self, relation: Relation, intermediate: bool) -> Result<(), ModelError> {
        let id = relation.id().clone();
        self.model.add_relation(relation)?;
        if intermediate {
            self.intermediate.insert(id);
        }
        Ok(())
    }

    /// `SetValue` on a stored object, remembering who wrote each accessor.
    pub(crate) fn assign(
        &mut self,
        id: &ObjectId,
        accessor: &AssignAccessor,
        value: &str,
        by: &RecordRef,
    ) -> Result<bool, WriteConflict> {
        let object = self.model.object_mut(id).expect("assignment targets a stored object");
        match set_value(object, accessor, value) {
            Ok(changed) => {
                if changed && *accessor != AssignAccessor::Tag {
                    self.writes.insert((id.clone(), accessor.clone()), by.clone());
                }
                Ok(changed)
            }
            Err(error) => {
                let first =
                    self.writes.get(&(id.clone(), accessor.clone())).cloned().unwrap_or_else(|| by.clone());
                Err(WriteConflict { error: Box::new(error), first })
            }
        }
    }

    /// Drops every intermediate object and relations left dangling.
    pub(crate) fn remove_intermediates(&mut self) -> BTreeSet<ObjectId> {
        let ids = std::mem::take(&mut self.intermediate);
        self.model.remove_objects(&ids)
    }

    pub fn into_model(self) -> ModelDocument {
        self.model
    }
}
