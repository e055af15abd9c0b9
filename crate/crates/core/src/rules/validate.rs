use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::ast::*;
use super::deps::dependency_graph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    UnresolvedReference { callee: String },
    UnknownOutput { callee: String, output: String },
    UnknownArgument { callee: String, param: String },
    ArityMismatch { callee: String, expected: usize, found: usize },
    ReferenceCycle { rules: Vec<String> },
    IllegalPattern { source: bool, relation: bool, target: bool },
    UnsatisfiableConstraints { param: String },
    UnboundParameter { param: String },
    DuplicateParameter { param: String },
    MixedAggregation { param: String },
    PlaceholderIntermediate { param: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule: String,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: {}", self.rule, self.message)
    }
}

struct Checker<'a> {
    rs: &'a RuleSet,
    rule: &'a TransformationRule,
    out: &'a mut Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, kind: DiagnosticKind, message: String) {
        self.out.push(Diagnostic { rule: self.rule.name.clone(), kind, message });
    }

    fn source(&mut self, term: &SourceTerm) {
        match term {
            SourceTerm::Element(e) => self.constraints(&e.param, &e.constraints),
            SourceTerm::Relationship(r) => {
                let (s, rel, t) = r.flags();
                if r.pattern().is_none() {
                    self.report(
                        DiagnosticKind::IllegalPattern {
                            source: s,
                            relation: rel,
                            target: t,
                        },
                        format!(
                            "relationship `{}` has loop constraints on S/R/T = {}/{}/{}, which is not a defined query pattern",
                            r.param, s as u8, rel as u8, t as u8
                        ),
                    );
                }
                let names = [&r.param, &r.source.param, &r.target.param];
                for (i, n) in names.iter().enumerate() {
                    if names[..i].contains(n) {
                        self.report(
                            DiagnosticKind::DuplicateParameter { param: (*n).clone() },
                            format!("parameter `{n}` used twice within one relationship term"),
                        );
                    }
                }
                self.constraints(&r.param, &r.constraints);
                self.constraints(&r.source.param, &r.source.constraints);
                self.constraints(&r.target.param, &r.target.constraints);
            }
            SourceTerm::Group(g) => {
                for c in &g.children {
                    self.source(c);
                }
            }
        }
    }

    fn constraints(&mut self, param: &str, constraints: &[LoopConstraint]) {
        if constraints.is_empty() {
            return;
        }
        // Every constraint is a threshold, so the accepted counts form an
        // interval; probing up to one past the largest bound decides emptiness.
        let max = constraints.iter().map(|c| c.count).max().unwrap_or(0);
        if !(0..=max.saturating_add(1)).any(|n| constraints.iter().all(|c| c.accepts(n))) {
            let text: Vec<String> = constraints.iter().map(|c| c.to_string()).collect();
            self.report(
                DiagnosticKind::UnsatisfiableConstraints { param: param.to_owned() },
                format!("loop constraints on `{param}` admit no count: {}", text.join(" ")),
            );
        }
    }

    fn aggregation(&mut self, term: &SourceTerm) {
        let mut seen: BTreeMap<String, BTreeSet<bool>> = BTreeMap::new();
        fn walk(t: &SourceTerm, seen: &mut BTreeMap<String, BTreeSet<bool>>) {
            let mut note = |p: &str, agg: bool| {
                seen.entry(p.to_owned()).or_default().insert(agg);
            };
            match t {
                SourceTerm::Element(e) => note(&e.param, !e.constraints.is_empty()),
                SourceTerm::Relationship(r) => {
                    note(&r.param, !r.constraints.is_empty());
                    note(&r.source.param, !r.source.constraints.is_empty());
                    note(&r.target.param, !r.target.constraints.is_empty());
                }
                SourceTerm::Group(g) => g.children.iter().for_each(|c| walk(c, seen)),
            }
        }
        walk(term, &mut seen);
        for (param, modes) in seen {
            if modes.len() > 1 {
                self.report(
                    DiagnosticKind::MixedAggregation { param: param.clone() },
                    format!("parameter `{param}` is aggregated in one term and single-valued in another"),
                );
            }
        }
    }

    fn target(&mut self, term: &TargetTerm, source: &BTreeSet<String>, scope: &mut BTreeSet<String>) {
        match term {
            TargetTerm::Element(e) => {
                if let TargetKind::Placeholder(refs) = &e.kind {
                    for r in refs {
                        self.reference(r, source);
                    }
                    if e.intermediate {
                        self.report(
                            DiagnosticKind::PlaceholderIntermediate { param: e.param.clone() },
                            format!(
                                "placeholder `{}` denotes existing objects and cannot be intermediate",
                                e.param
                            ),
                        );
                    }
                }
                self.assignments(&e.assignments, scope);
                self.define(&e.param, source, scope);
            }
            TargetTerm::Relation(r) => {
                for end in [&r.source, &r.target] {
                    match end {
                        EndRef::Param(p) => self.bound(p, scope),
                        EndRef::Refs(refs) => {
                            for rf in refs {
                                self.reference(rf, source);
                            }
                        }
                    }
                }
                self.assignments(&r.assignments, scope);
                self.define(&r.param, source, scope);
            }
            TargetTerm::Group(children) => {
                for c in children {
                    self.target(c, source, scope);
                }
            }
            TargetTerm::Enrich(e) => {
                for r in &e.refs {
                    self.reference(r, source);
                }
                self.assignments(&e.assignments, scope);
            }
        }
    }

    fn define(&mut self, param: &str, source: &BTreeSet<String>, scope: &mut BTreeSet<String>) {
        if source.contains(param) || !scope.insert(param.to_owned()) {
            self.report(
                DiagnosticKind::DuplicateParameter { param: param.to_owned() },
                format!("target parameter `{param}` is already bound"),
            );
        }
    }

    fn bound(&mut self, param: &str, scope: &BTreeSet<String>) {
        if !scope.contains(param) {
            self.report(
                DiagnosticKind::UnboundParameter { param: param.to_owned() },
                format!("parameter `{param}` is never bound before use"),
            );
        }
    }

    fn assignments(&mut self, assigns: &[Assignment], scope: &BTreeSet<String>) {
        for a in assigns {
            for p in a.value.parameters() {
                self.bound(p, scope);
            }
        }
    }

    fn reference(&mut self, r: &TransformationReference, source: &BTreeSet<String>) {
        for arg in &r.args {
            let p = arg.caller_param();
            if !source.contains(p) {
                self.report(
                    DiagnosticKind::UnboundParameter { param: p.to_owned() },
                    format!("reference argument `{p}` is not a source parameter of this rule"),
                );
            }
        }
        let Some(callee) = self.rs.rule(&r.rule) else {
            self.report(
                DiagnosticKind::UnresolvedReference { callee: r.rule.clone() },
                format!("reference to unknown rule `{}`", r.rule),
            );
            return;
        };
        match &r.output {
            Some(out) => {
                if !callee.target.defined_parameters().contains(&out.as_str()) {
                    self.report(
                        DiagnosticKind::UnknownOutput { callee: r.rule.clone(), output: out.clone() },
                        format!("rule `{}` has no target parameter `{out}`", r.rule),
                    );
                }
            }
            None => {
                if callee.target.created_parameters().is_empty() {
                    self.report(
                        DiagnosticKind::UnknownOutput { callee: r.rule.clone(), output: String::new() },
                        format!("rule `{}` creates nothing that a reference could return", r.rule),
                    );
                }
            }
        }
        let inputs = callee.source.input_parameters();
        let callee_params: Vec<String> = callee.source.parameters().into_iter().map(|(n, _)| n).collect();
        let positional = r.args.iter().filter(|a| matches!(a, RefArg::Positional(_))).count();
        let named = r.args.len() - positional;
        if (named == 0 && positional != inputs.len()) || positional > inputs.len() {
            self.report(
                DiagnosticKind::ArityMismatch {
                    callee: r.rule.clone(),
                    expected: inputs.len(),
                    found: positional,
                },
                format!(
                    "`{}` expects {} positional argument(s) ({}), found {positional}",
                    r.rule,
                    inputs.len(),
                    inputs.join(", ")
                ),
            );
        }
        for arg in &r.args {
            if let RefArg::Named { callee: p, .. } = arg {
                if !callee_params.contains(p) {
                    self.report(
                        DiagnosticKind::UnknownArgument { callee: r.rule.clone(), param: p.clone() },
                        format!("rule `{}` has no source parameter `{p}`", r.rule),
                    );
                }
            }
        }
    }
}

/// Static checks. An empty result means the rule set is executable.
pub fn validate_rule_set(rs: &RuleSet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for rule in &rs.rules {
        let mut checker = Checker { rs, rule, out: &mut out };
        checker.source(&rule.source);
        checker.aggregation(&rule.source);
        let source: BTreeSet<String> = rule.source.parameters().into_iter().map(|(n, _)| n).collect();
        let mut scope = source.clone();
        checker.target(&rule.target, &source, &mut scope);
    }
    for cycle in dependency_graph(rs).cycles() {
        let mut path = cycle.clone();
        path.push(cycle[0].clone());
        out.push(Diagnostic {
            rule: cycle[0].clone(),
            message: format!("reference cycle: {}", path.join(" -> ")),
            kind: DiagnosticKind::ReferenceCycle { rules: cycle },
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_rule_set;
    use super::*;

    fn diags(text: &str) -> Vec<DiagnosticKind> {
        validate_rule_set(&parse_rule_set(text).unwrap()).into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn cycle_names_both_rules() {
        let d = diags(
            "rule(R_a: element(X: T) -> group(element(Y: U), enrich(ref(R_b, X)) {}))
             rule(R_b: element(X: T) -> group(element(Y: U), enrich(ref(R_a, X)) {}))",
        );
        assert_eq!(d, vec![DiagnosticKind::ReferenceCycle { rules: vec!["R_a".into(), "R_b".into()] }]);
    }

    #[test]
    fn source_only_constraint_is_illegal() {
        let d =
            diags("rule(R: relation(G: Rel, element(S: T) {count >= 1} -> element(T: T)) -> element(B: U))");
        assert_eq!(d, vec![DiagnosticKind::IllegalPattern { source: true, relation: false, target: false }]);
    }

    #[test]
    fn all_eight_flag_combinations() {
        let mut legal = 0;
        for bits in 0..8u8 {
            let (s, r, t) = (bits & 4 != 0, bits & 2 != 0, bits & 1 != 0);
            let c = |on: bool| if on { " {count >= 1}" } else { "" };
            let text = format!(
                "rule(R: relation(G: Rel, element(S: A){} -> element(T: B){}){} -> element(X: U))",
                c(s),
                c(t),
                c(r)
            );
            if diags(&text).is_empty() {
                legal += 1;
                assert!(RelationPattern::from_flags(s, r, t).is_some());
            }
        }
        assert_eq!(legal, 5);
    }

    #[test]
    fn empty_range_rejected() {
        let d = diags("rule(R: element(A: T) {count > 5} {count < 3} -> element(B: U))");
        assert_eq!(d, vec![DiagnosticKind::UnsatisfiableConstraints { param: "A".into() }]);
        assert!(diags("rule(R: element(A: T) {count > 2} {count <= 5} -> element(B: U))").is_empty());
        assert!(
            !diags("rule(R: element(A: T) {count > 2} {count < 4} {count = 2} -> element(B: U))").is_empty()
        );
    }

    #[test]
    fn unbound_target_parameter() {
        let d = diags("rule(R: element(A: T) -> element(B: U) { name = C.name })");
        assert_eq!(d, vec![DiagnosticKind::UnboundParameter { param: "C".into() }]);
        let d = diags("rule(R: element(A: T) -> relation(B: U, A -> Q))");
        assert_eq!(d, vec![DiagnosticKind::UnboundParameter { param: "Q".into() }]);
    }

    #[test]
    fn target_param_defined_later_is_unbound() {
        let d = diags("rule(R: element(A: T) -> group(relation(L: U, A -> B), element(B: V)))");
        assert_eq!(d, vec![DiagnosticKind::UnboundParameter { param: "B".into() }]);
    }

    #[test]
    fn unresolved_reference_and_arity() {
        let d = diags("rule(R: element(A: T) -> enrich(ref(Nope, A)) {})");
        assert_eq!(d, vec![DiagnosticKind::UnresolvedReference { callee: "Nope".into() }]);
        let d = diags(
            "rule(P: relation(G: Rel, element(S: A) -> element(T: B)) -> element(X: U))
             rule(Q: element(A: T) -> enrich(ref(P, A)) {})",
        );
        assert_eq!(d, vec![DiagnosticKind::ArityMismatch { callee: "P".into(), expected: 3, found: 1 }]);
    }

    #[test]
    fn named_arguments_checked_against_callee() {
        let base = "rule(P: relation(G: Rel, element(S: A) -> element(T: B) {count >= 1}) {count >= 1} -> element(X: U))\n";
        assert!(diags(&format!("{base}rule(Q: element(A: T) -> enrich(ref(P, T = A)) {{}})")).is_empty());
        let d = diags(&format!("{base}rule(Q: element(A: T) -> enrich(ref(P, Z = A)) {{}})"));
        assert_eq!(d, vec![DiagnosticKind::UnknownArgument { callee: "P".into(), param: "Z".into() }]);
        let d = diags(&format!("{base}rule(Q: element(A: T) -> enrich(ref(P.Y, A)) {{}})"));
        assert_eq!(d, vec![DiagnosticKind::UnknownOutput { callee: "P".into(), output: "Y".into() }]);
    }

    #[test]
    fn mixed_aggregation_flagged() {
        let d = diags("rule(R: group(AND: element(A: T) {count >= 1}, element(A: U)) -> element(B: V))");
        assert_eq!(d, vec![DiagnosticKind::MixedAggregation { param: "A".into() }]);
    }

    #[test]
    fn duplicate_target_parameter() {
        let d = diags("rule(R: element(A: T) -> group(element(B: U), element(B: V)))");
        assert_eq!(d, vec![DiagnosticKind::DuplicateParameter { param: "B".into() }]);
        let d = diags("rule(R: element(A: T) -> element(A: U))");
        assert_eq!(d, vec![DiagnosticKind::DuplicateParameter { param: "A".into() }]);
    }
}
