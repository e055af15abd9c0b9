use std::fmt;

use crate::model::{AssignAccessor, TypeFilter, ValueExpression};

/// Position of a construct in the rule file (1-based).
///
/// Locations never take part in AST equality, so a re-parsed pretty-print
/// compares equal to the original.
#[derive(Debug, Clone, Copy, Default)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Location {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Location {}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub name: String,
    pub rules: Vec<TransformationRule>,
}

impl RuleSet {
    pub fn rule(&self, name: &str) -> Option<&TransformationRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationRule {
    pub name: String,
    pub source: SourceTerm,
    pub target: TargetTerm,
    pub location: Location,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicOp {
    And,
    Or,
    Xor,
}

impl fmt::Display for LogicOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogicOp::And => "AND",
            LogicOp::Or => "OR",
            LogicOp::Xor => "XOR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceTerm {
    Element(SourceElement),
    Relationship(SourceRelationship),
    Group(SourceGroup),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceElement {
    pub param: String,
    pub type_filter: TypeFilter,
    pub conditions: Vec<SearchCondition>,
    pub constraints: Vec<LoopConstraint>,
}

impl SourceElement {
    pub fn new(param: impl Into<String>, type_filter: TypeFilter) -> Self {
        Self { param: param.into(), type_filter, conditions: Vec::new(), constraints: Vec::new() }
    }

    pub fn with_constraint(mut self, op: CountOp, count: u64) -> Self {
        self.constraints.push(LoopConstraint { op, count });
        self
    }

    pub fn with_condition(mut self, condition: SearchCondition) -> Self {
        self.conditions.push(condition);
        self
    }
}

/// `relation(R: Type, element(S: ..) -> element(T: ..))` with optional
/// constraints on the relation and on each end. The constrained positions
/// select one of the grouping patterns in [`RelationPattern`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRelationship {
    pub param: String,
    pub type_filter: TypeFilter,
    pub source: SourceElement,
    pub target: SourceElement,
    pub conditions: Vec<SearchCondition>,
    pub constraints: Vec<LoopConstraint>,
}

impl SourceRelationship {
    pub fn flags(&self) -> (bool, bool, bool) {
        (
            !self.source.constraints.is_empty(),
            !self.constraints.is_empty(),
            !self.target.constraints.is_empty(),
        )
    }

    pub fn pattern(&self) -> Option<RelationPattern> {
        let (s, r, t) = self.flags();
        RelationPattern::from_flags(s, r, t)
    }
}

/// The five legal source/relation/target constraint combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationPattern {
    /// 0/0/0: one execution per relationship.
    PerRelation,
    /// 0/1/1: per distinct source, relations and targets aggregated.
    PerSource,
    /// 1/1/0: per distinct target, relations and sources aggregated.
    PerTarget,
    /// 0/1/0: per source/target pair, relations aggregated.
    PerPair,
    /// 1/1/1: everything aggregated into one statement.
    Whole,
}

impl RelationPattern {
    pub fn from_flags(source: bool, relation: bool, target: bool) -> Option<Self> {
        match (source, relation, target) {
            (false, false, false) => Some(Self::PerRelation),
            (false, true, true) => Some(Self::PerSource),
            (true, true, false) => Some(Self::PerTarget),
            (false, true, false) => Some(Self::PerPair),
            (true, true, true) => Some(Self::Whole),
            _ => None,
        }
    }

    pub fn flags(self) -> (bool, bool, bool) {
        match self {
            Self::PerRelation => (false, false, false),
            Self::PerSource => (false, true, true),
            Self::PerTarget => (true, true, false),
            Self::PerPair => (false, true, false),
            Self::Whole => (true, true, true),
        }
    }

    pub const ALL: [RelationPattern; 5] =
        [Self::PerRelation, Self::PerSource, Self::PerTarget, Self::PerPair, Self::Whole];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceGroup {
    pub op: LogicOp,
    pub children: Vec<SourceTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountOp {
    AtLeast,
    MoreThan,
    Exactly,
    LessThan,
    AtMost,
}

impl CountOp {
    pub const ALL: [CountOp; 5] =
        [CountOp::AtLeast, CountOp::MoreThan, CountOp::Exactly, CountOp::LessThan, CountOp::AtMost];

    pub fn symbol(self) -> &'static str {
        match self {
            CountOp::AtLeast => ">=",
            CountOp::MoreThan => ">",
            CountOp::Exactly => "=",
            CountOp::LessThan => "<",
            CountOp::AtMost => "<=",
        }
    }
}

/// `{count >= 1}`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoopConstraint {
    pub op: CountOp,
    pub count: u64,
}

impl LoopConstraint {
    pub fn new(op: CountOp, count: u64) -> Self {
        Self { op, count }
    }

    pub fn accepts(&self, n: u64) -> bool {
        match self.op {
            CountOp::AtLeast => n >= self.count,
            CountOp::MoreThan => n > self.count,
            CountOp::Exactly => n == self.count,
            CountOp::LessThan => n < self.count,
            CountOp::AtMost => n <= self.count,
        }
    }
}

impl fmt::Display for LoopConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{count {} {}}}", self.op.symbol(), self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConditionAccessor {
    Name,
    Namespace,
    Attribute(String),
    Tag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Contains,
    /// Glob match with `*` and `?`.
    Matches,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Contains => "contains",
            CompareOp::Matches => "matches",
        }
    }
}

/// `[accessor op "literal"]`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchCondition {
    pub accessor: ConditionAccessor,
    pub op: CompareOp,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetTerm {
    Element(TargetElement),
    Relation(TargetRelation),
    /// Always an AND of all children.
    Group(Vec<TargetTerm>),
    Enrich(Enrichment),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetKind {
    /// Mint a new object of this type.
    Create(String),
    /// `*` placeholder: the parameter denotes the objects returned by these references.
    Placeholder(Vec<TransformationReference>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetElement {
    pub param: String,
    pub kind: TargetKind,
    pub assignments: Vec<Assignment>,
    pub intermediate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetRelation {
    pub param: String,
    pub type_name: String,
    pub source: EndRef,
    pub target: EndRef,
    pub assignments: Vec<Assignment>,
    pub intermediate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EndRef {
    /// A target parameter of this rule, or a source parameter passed through.
    Param(String),
    /// Union of the results of one or more references.
    Refs(Vec<TransformationReference>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enrichment {
    pub refs: Vec<TransformationReference>,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub accessor: AssignAccessor,
    pub value: ValueExpression,
}

/// `ref(Rule[.Output], arg, ...)`: outputs of another rule for matching inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationReference {
    pub rule: String,
    pub output: Option<String>,
    pub args: Vec<RefArg>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefArg {
    /// Bound to the callee's input parameters in order.
    Positional(String),
    /// `callee_param = caller_param`
    Named { callee: String, caller: String },
}

impl RefArg {
    pub fn caller_param(&self) -> &str {
        match self {
            RefArg::Positional(p) => p,
            RefArg::Named { caller, .. } => caller,
        }
    }
}

impl SourceTerm {
    /// Pre-order traversal; index 0 is the term itself. Relationship end
    /// terms are visited after the relationship.
    pub fn subterms(&self) -> Vec<SubTerm<'_>> {
        let mut out = Vec::new();
        self.collect_subterms(&mut out);
        out
    }

    fn collect_subterms<'a>(&'a self, out: &mut Vec<SubTerm<'a>>) {
        out.push(SubTerm::Term(self));
        match self {
            SourceTerm::Element(_) => {}
            SourceTerm::Relationship(rel) => {
                out.push(SubTerm::End(&rel.source));
                out.push(SubTerm::End(&rel.target));
            }
            SourceTerm::Group(g) => {
                for c in &g.children {
                    c.collect_subterms(out);
                }
            }
        }
    }

    /// Parameters in order of first appearance, with whether each is aggregated.
    pub fn parameters(&self) -> Vec<(String, bool)> {
        let mut out: Vec<(String, bool)> = Vec::new();
        let mut push = |name: &str, aggregated: bool| {
            if !out.iter().any(|(n, _)| n == name) {
                out.push((name.to_owned(), aggregated));
            }
        };
        fn walk(term: &SourceTerm, push: &mut dyn FnMut(&str, bool)) {
            match term {
                SourceTerm::Element(e) => push(&e.param, !e.constraints.is_empty()),
                SourceTerm::Relationship(r) => {
                    push(&r.param, !r.constraints.is_empty());
                    push(&r.source.param, !r.source.constraints.is_empty());
                    push(&r.target.param, !r.target.constraints.is_empty());
                }
                SourceTerm::Group(g) => g.children.iter().for_each(|c| walk(c, push)),
            }
        }
        walk(self, &mut push);
        out
    }

    /// Single-valued parameters, in order: the positional inputs of the rule.
    pub fn input_parameters(&self) -> Vec<String> {
        self.parameters().into_iter().filter(|(_, agg)| !agg).map(|(n, _)| n).collect()
    }
}

/// Addressable piece of a source term, used for partial queries.
#[derive(Debug, Clone, Copy)]
pub enum SubTerm<'a> {
    Term(&'a SourceTerm),
    End(&'a SourceElement),
}

impl TargetTerm {
    /// Parameters introduced by this target term, in statement order.
    pub fn defined_parameters(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |t| match t {
            TargetTerm::Element(e) => out.push(e.param.as_str()),
            TargetTerm::Relation(r) => out.push(r.param.as_str()),
            _ => {}
        });
        out
    }

    /// Parameters whose statement mints objects, in order. The first one is the
    /// default output selected by references without an explicit output.
    pub fn created_parameters(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |t| match t {
            TargetTerm::Element(TargetElement { param, kind: TargetKind::Create(_), .. }) => {
                out.push(param.as_str())
            }
            TargetTerm::Relation(r) => out.push(r.param.as_str()),
            _ => {}
        });
        out
    }

    pub fn references(&self) -> Vec<&TransformationReference> {
        let mut out = Vec::new();
        self.walk(&mut |t| match t {
            TargetTerm::Element(TargetElement { kind: TargetKind::Placeholder(refs), .. }) => {
                out.extend(refs.iter())
            }
            TargetTerm::Relation(r) => {
                for end in [&r.source, &r.target] {
                    if let EndRef::Refs(refs) = end {
                        out.extend(refs.iter());
                    }
                }
            }
            TargetTerm::Enrich(e) => out.extend(e.refs.iter()),
            _ => {}
        });
        out
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a TargetTerm)) {
        f(self);
        if let TargetTerm::Group(children) = self {
            for c in children {
                c.walk(f);
            }
        }
    }
}
