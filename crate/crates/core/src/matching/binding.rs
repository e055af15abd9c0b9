use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::ObjectId;

/// Value bound to a parameter: one object, or an ascending collection of
/// objects aggregated by loop constraints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slot {
    Single(ObjectId),
    Aggregated(Vec<ObjectId>),
}

impl Slot {
    pub fn aggregated<I: IntoIterator<Item = ObjectId>>(ids: I) -> Self {
        let set: BTreeSet<ObjectId> = ids.into_iter().collect();
        Slot::Aggregated(set.into_iter().collect())
    }

    pub fn ids(&self) -> &[ObjectId] {
        match self {
            Slot::Single(id) => std::slice::from_ref(id),
            Slot::Aggregated(ids) => ids,
        }
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.ids().contains(id)
    }

    pub fn is_aggregated(&self) -> bool {
        matches!(self, Slot::Aggregated(_))
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Single(id) => write!(f, "{id}"),
            Slot::Aggregated(ids) => {
                f.write_str("[")?;
                for (i, id) in ids.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{id}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Assignment of parameter names to slots.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Binding(BTreeMap<String, Slot>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, param: impl Into<String>, slot: Slot) -> Self {
        self.0.insert(param.into(), slot);
        self
    }

    pub fn single(param: impl Into<String>, id: impl Into<ObjectId>) -> Self {
        Self::new().with(param, Slot::Single(id.into()))
    }

    pub fn insert(&mut self, param: impl Into<String>, slot: Slot) {
        self.0.insert(param.into(), slot);
    }

    pub fn get(&self, param: &str) -> Option<&Slot> {
        self.0.get(param)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Slot)> {
        self.0.iter()
    }

    pub fn params(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every object id referenced, ascending and deduplicated.
    pub fn object_ids(&self) -> BTreeSet<ObjectId> {
        self.0.values().flat_map(|s| s.ids().iter().cloned()).collect()
    }

    /// Stable textual key, e.g. `R=[g1,g2];S=p1;T=[p2,p3]`.
    pub fn canonical_key(&self) -> String {
        self.to_string()
    }

    /// Natural-join merge: `None` if a shared parameter disagrees.
    pub fn join(&self, other: &Binding) -> Option<Binding> {
        let mut merged = self.0.clone();
        for (k, v) in &other.0 {
            match merged.get(k) {
                Some(existing) if existing != v => return None,
                Some(_) => {}
                None => {
                    merged.insert(k.clone(), v.clone());
                }
            }
        }
        Some(Binding(merged))
    }

    /// Restriction to `params`; missing parameters stay absent.
    pub fn project(&self, params: &BTreeSet<String>) -> Binding {
        Binding(
            self.0.iter().filter(|(k, _)| params.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        )
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromIterator<(String, Slot)> for Binding {
    fn from_iter<T: IntoIterator<Item = (String, Slot)>>(iter: T) -> Self {
        Binding(iter.into_iter().collect())
    }
}

/// Result of evaluating a source term: a set of bindings plus the parameter
/// names the term can bind (known even when the set is empty).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BindingSet {
    bindings: BTreeSet<Binding>,
    params: BTreeSet<String>,
}

impl BindingSet {
    pub fn new<I, S>(params: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { bindings: BTreeSet::new(), params: params.into_iter().map(Into::into).collect() }
    }

    pub fn from_bindings<I: IntoIterator<Item = Binding>>(params: BTreeSet<String>, bindings: I) -> Self {
        Self { bindings: bindings.into_iter().collect(), params }
    }

    pub fn insert(&mut self, binding: Binding) -> bool {
        self.bindings.insert(binding)
    }

    pub fn params(&self) -> &BTreeSet<String> {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Bindings in their canonical (sorted) order.
    pub fn iter(&self) -> impl Iterator<Item = &Binding> {
        self.bindings.iter()
    }

    pub fn contains(&self, binding: &Binding) -> bool {
        self.bindings.contains(binding)
    }
}

impl<'a> IntoIterator for &'a BindingSet {
    type Item = &'a Binding;
    type IntoIter = std::collections::btree_set::Iter<'a, Binding>;

    fn into_iter(self) -> Self::IntoIter {
        self.bindings.iter()
    }
}
