use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::ModelError;

/// Synonyms and implied higher-level types.
///
/// `aliases` map a spelling onto its canonical type name (chains allowed,
/// cycles rejected). `hierarchy` lists, per canonical type, additional types an
/// object of that type also carries, e.g. `BusinessActor -> {Business, Active}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetatypeRegistry {
    aliases: BTreeMap<String, String>,
    hierarchy: BTreeMap<String, BTreeSet<String>>,
}

impl MetatypeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(
        aliases: BTreeMap<String, String>,
        hierarchy: BTreeMap<String, BTreeSet<String>>,
    ) -> Result<Self, ModelError> {
        let mut reg = Self::default();
        for (from, to) in aliases {
            reg.add_alias(from, to)?;
        }
        for (ty, implied) in hierarchy {
            for i in implied {
                reg.add_implied(ty.clone(), i);
            }
        }
        Ok(reg)
    }

    /// Registers `from` as a synonym of `to`. Fails if this closes an alias cycle.
    pub fn add_alias(&mut self, from: impl Into<String>, to: impl Into<String>) -> Result<(), ModelError> {
        let (from, to) = (from.into(), to.into());
        if from == to {
            return Ok(());
        }
        let mut chain = vec![from.clone(), to.clone()];
        let mut cursor = to.as_str();
        while let Some(next) = self.aliases.get(cursor) {
            chain.push(next.clone());
            if *next == from {
                return Err(ModelError::AliasCycle(chain));
            }
            cursor = next;
        }
        self.aliases.insert(from, to);
        Ok(())
    }

    pub fn add_implied(&mut self, metatype: impl Into<String>, implied: impl Into<String>) {
        self.hierarchy.entry(metatype.into()).or_default().insert(implied.into());
    }

    /// Merges `other` on top of `self`; aliases in `other` win on conflict.
    pub fn merge(&mut self, other: &MetatypeRegistry) -> Result<(), ModelError> {
        for (from, to) in &other.aliases {
            self.aliases.remove(from);
            self.add_alias(from.clone(), to.clone())?;
        }
        for (ty, implied) in &other.hierarchy {
            self.hierarchy.entry(ty.clone()).or_default().extend(implied.iter().cloned());
        }
        Ok(())
    }

    pub fn canonical<'a>(&'a self, name: &'a str) -> &'a str {
        let mut cursor = name;
        while let Some(next) = self.aliases.get(cursor) {
            cursor = next;
        }
        cursor
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    pub fn hierarchy(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.hierarchy
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty() && self.hierarchy.is_empty()
    }
}

/// Canonicalizes `declared` and closes it under the implied-type hierarchy.
pub fn resolve_metatypes<I, S>(declared: I, registry: &MetatypeRegistry) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = BTreeSet::new();
    let mut queue: VecDeque<String> =
        declared.into_iter().map(|t| registry.canonical(t.as_ref()).to_owned()).collect();
    while let Some(ty) = queue.pop_front() {
        if !out.insert(ty.clone()) {
            continue;
        }
        if let Some(implied) = registry.hierarchy.get(&ty) {
            for i in implied {
                let c = registry.canonical(i);
                if !out.contains(c) {
                    queue.push_back(c.to_owned());
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn archimate_fragment() -> MetatypeRegistry {
        let mut reg = MetatypeRegistry::new();
        reg.add_implied("BusinessActor", "Business");
        reg.add_implied("BusinessActor", "Active");
        reg.add_alias("archimate:BusinessActor", "BusinessActor").unwrap();
        reg
    }

    #[test]
    fn expands_layer_and_aspect() {
        let got = resolve_metatypes(["BusinessActor"], &archimate_fragment());
        assert_eq!(got, set(&["BusinessActor", "Business", "Active"]));
    }

    #[test]
    fn identity_on_empty_registry() {
        assert_eq!(resolve_metatypes(["X"], &MetatypeRegistry::new()), set(&["X"]));
    }

    #[test]
    fn prefixed_synonym_resolves() {
        let got = resolve_metatypes(["archimate:BusinessActor"], &archimate_fragment());
        assert_eq!(got, set(&["BusinessActor", "Business", "Active"]));
    }

    #[test]
    fn alias_cycle_is_named() {
        let mut reg = MetatypeRegistry::new();
        reg.add_alias("A", "B").unwrap();
        reg.add_alias("B", "C").unwrap();
        let err = reg.add_alias("C", "A").unwrap_err();
        assert_eq!(err, ModelError::AliasCycle(vec!["C".into(), "A".into(), "B".into(), "C".into()]));
    }

    #[test]
    fn alias_chain_is_followed() {
        let mut reg = MetatypeRegistry::new();
        reg.add_alias("Business Actor", "archimate:BusinessActor").unwrap();
        reg.add_alias("archimate:BusinessActor", "BusinessActor").unwrap();
        assert_eq!(reg.canonical("Business Actor"), "BusinessActor");
    }

    #[test]
    fn hierarchy_is_transitive() {
        let mut reg = MetatypeRegistry::new();
        reg.add_implied("A", "B");
        reg.add_implied("B", "C");
        reg.add_implied("C", "A");
        assert_eq!(resolve_metatypes(["A"], &reg), set(&["A", "B", "C"]));
    }

    fn arb_registry() -> impl Strategy<Value = Vec<(u8, u8)>> {
        prop::collection::vec((0u8..8, 0u8..8), 0..12)
    }

    proptest! {
        #[test]
        fn monotone_in_hierarchy(edges in arb_registry(), extra in (0u8..8, 0u8..8), declared in prop::collection::btree_set(0u8..8, 1..4)) {
            let mut reg = MetatypeRegistry::new();
            for (a, b) in &edges {
                reg.add_implied(format!("T{a}"), format!("T{b}"));
            }
            let names: Vec<String> = declared.iter().map(|d| format!("T{d}")).collect();
            let before = resolve_metatypes(&names, &reg);
            reg.add_implied(format!("T{}", extra.0), format!("T{}", extra.1));
            let after = resolve_metatypes(&names, &reg);
            prop_assert!(before.is_subset(&after));
            let declared_set: BTreeSet<String> = names.into_iter().collect();
            prop_assert!(declared_set.is_subset(&before));
        }

        #[test]
        fn resolution_is_idempotent(edges in arb_registry(), declared in prop::collection::btree_set(0u8..8, 1..4)) {
            let mut reg = MetatypeRegistry::new();
            for (a, b) in &edges {
                reg.add_implied(format!("T{a}"), format!("T{b}"));
            }
            let once = resolve_metatypes(declared.iter().map(|d| format!("T{d}")), &reg);
            let twice = resolve_metatypes(&once, &reg);
            prop_assert_eq!(once, twice);
        }
    }
}
