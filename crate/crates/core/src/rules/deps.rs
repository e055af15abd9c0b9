use std::collections::BTreeSet;
use std::fmt::Write;

use super::ast::*;

/// Rule dependency graph: one node per rule (file order), one edge per
/// caller→callee transformation reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: Vec<String>,
    /// `(caller, callee)` node indices, sorted and deduplicated.
    pub edges: Vec<(usize, usize)>,
}

pub fn dependency_graph(rs: &RuleSet) -> DependencyGraph {
    let nodes: Vec<String> = rs.rules.iter().map(|r| r.name.clone()).collect();
    let mut edges = BTreeSet::new();
    for (caller, rule) in rs.rules.iter().enumerate() {
        for r in rule.target.references() {
            if let Some(callee) = rs.index_of(&r.rule) {
                edges.insert((caller, callee));
            }
        }
    }
    DependencyGraph { nodes, edges: edges.into_iter().collect() }
}

impl DependencyGraph {
    pub fn edge_names(&self) -> Vec<(&str, &str)> {
        self.edges.iter().map(|&(a, b)| (self.nodes[a].as_str(), self.nodes[b].as_str())).collect()
    }

    pub fn successors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |(a, _)| *a == node).map(|&(_, b)| b)
    }

    /// Every elementary cycle, each rooted at its lowest-index rule and listed
    /// in traversal order. Cycles are reported in order of their root.
    pub fn cycles(&self) -> Vec<Vec<String>> {
        let mut found = Vec::new();
        for root in 0..self.nodes.len() {
            let mut path = vec![root];
            self.circuits_from(root, root, &mut path, &mut found);
        }
        found
            .into_iter()
            .map(|c: Vec<usize>| c.into_iter().map(|i| self.nodes[i].clone()).collect())
            .collect()
    }

    fn circuits_from(&self, root: usize, node: usize, path: &mut Vec<usize>, found: &mut Vec<Vec<usize>>) {
        for next in self.successors(node) {
            if next == root {
                found.push(path.clone());
            } else if next > root && !path.contains(&next) {
                path.push(next);
                self.circuits_from(root, next, path, found);
                path.pop();
            }
        }
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph rules {\n");
        for n in &self.nodes {
            let _ = writeln!(out, "    \"{}\";", n.replace('"', "\\\""));
        }
        for (a, b) in self.edge_names() {
            let _ = writeln!(out, "    \"{}\" -> \"{}\";", a.replace('"', "\\\""), b.replace('"', "\\\""));
        }
        out.push_str("}\n");
        out
    }
}

/// Source term with parameters renamed by order of first appearance, printed.
/// Two rules with equal signatures consume exactly the same content.
pub fn source_signature(term: &SourceTerm) -> String {
    let names: Vec<String> = term.parameters().into_iter().map(|(n, _)| n).collect();
    let rename = |p: &str| -> String {
        let i = names.iter().position(|n| n == p).unwrap_or(usize::MAX);
        format!("p{i}")
    };
    fn element(e: &SourceElement, rename: &dyn Fn(&str) -> String) -> SourceElement {
        SourceElement { param: rename(&e.param), ..e.clone() }
    }
    fn walk(t: &SourceTerm, rename: &dyn Fn(&str) -> String) -> SourceTerm {
        match t {
            SourceTerm::Element(e) => SourceTerm::Element(element(e, rename)),
            SourceTerm::Relationship(r) => SourceTerm::Relationship(SourceRelationship {
                param: rename(&r.param),
                source: element(&r.source, rename),
                target: element(&r.target, rename),
                ..r.clone()
            }),
            SourceTerm::Group(g) => SourceTerm::Group(SourceGroup {
                op: g.op,
                children: g.children.iter().map(|c| walk(c, rename)).collect(),
            }),
        }
    }
    walk(term, &rename).to_string()
}

/// Pairs of rules (file order) whose source terms consume identical content.
pub fn redundant_rules(rs: &RuleSet) -> Vec<(String, String)> {
    let sigs: Vec<String> = rs.rules.iter().map(|r| source_signature(&r.source)).collect();
    let mut out = Vec::new();
    for i in 0..sigs.len() {
        for j in i + 1..sigs.len() {
            if sigs[i] == sigs[j] {
                out.push((rs.rules[i].name.clone(), rs.rules[j].name.clone()));
            }
        }
    }
    out
}
