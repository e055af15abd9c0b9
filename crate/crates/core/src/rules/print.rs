//! Canonical textual form of rule ASTs. `parse(print(ast)) == ast`.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;
use crate::model::{quote, TypeFilter};

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn type_name(s: &str) -> String {
    if is_ident(s) {
        s.to_owned()
    } else {
        quote(s)
    }
}

fn write_list<T: Display>(f: &mut Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl Display for RuleSet {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

impl Display for TransformationRule {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "rule({}: {} -> {})", self.name, self.source, self.target)
    }
}

fn filter_text(t: &TypeFilter) -> String {
    match t {
        TypeFilter::Any => "*".into(),
        TypeFilter::Named(n) => type_name(n),
    }
}

impl Display for SourceTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Element(e) => write!(f, "{e}"),
            SourceTerm::Relationship(r) => {
                write!(
                    f,
                    "relation({}: {}, {} -> {})",
                    r.param,
                    filter_text(&r.type_filter),
                    r.source,
                    r.target
                )?;
                write_conditions(f, &r.conditions, &r.constraints)
            }
            SourceTerm::Group(g) => {
                write!(f, "group({}: ", g.op)?;
                write_list(f, &g.children, ", ")?;
                f.write_str(")")
            }
        }
    }
}

impl Display for SourceElement {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "element({}: {})", self.param, filter_text(&self.type_filter))?;
        write_conditions(f, &self.conditions, &self.constraints)
    }
}

fn write_conditions(
    f: &mut Formatter<'_>,
    conditions: &[SearchCondition],
    constraints: &[LoopConstraint],
) -> fmt::Result {
    for c in conditions {
        write!(f, " {c}")?;
    }
    for c in constraints {
        write!(f, " {c}")?;
    }
    Ok(())
}

impl Display for SearchCondition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let accessor = match &self.accessor {
            ConditionAccessor::Name => "name".to_owned(),
            ConditionAccessor::Namespace => "namespace".to_owned(),
            ConditionAccessor::Tag => "tag".to_owned(),
            ConditionAccessor::Attribute(k) => format!("attribute({})", quote(k)),
        };
        write!(f, "[{accessor} {} {}]", self.op.symbol(), quote(&self.value))
    }
}

impl Display for TargetTerm {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            TargetTerm::Element(e) => {
                write!(f, "element({}: ", e.param)?;
                match &e.kind {
                    TargetKind::Create(t) => f.write_str(&type_name(t))?,
                    TargetKind::Placeholder(refs) => {
                        f.write_str("* <- ")?;
                        write_list(f, refs, " | ")?;
                    }
                }
                f.write_str(")")?;
                write_assignments(f, &e.assignments, false)?;
                if e.intermediate {
                    f.write_str(" intermediate")?;
                }
                Ok(())
            }
            TargetTerm::Relation(r) => {
                write!(
                    f,
                    "relation({}: {}, {} -> {})",
                    r.param,
                    type_name(&r.type_name),
                    r.source,
                    r.target
                )?;
                write_assignments(f, &r.assignments, false)?;
                if r.intermediate {
                    f.write_str(" intermediate")?;
                }
                Ok(())
            }
            TargetTerm::Group(children) => {
                f.write_str("group(")?;
                write_list(f, children, ", ")?;
                f.write_str(")")
            }
            TargetTerm::Enrich(e) => {
                f.write_str("enrich(")?;
                write_list(f, &e.refs, " | ")?;
                f.write_str(")")?;
                write_assignments(f, &e.assignments, true)
            }
        }
    }
}

fn write_assignments(f: &mut Formatter<'_>, assigns: &[Assignment], always: bool) -> fmt::Result {
    if assigns.is_empty() && !always {
        return Ok(());
    }
    f.write_str(" {")?;
    for (i, a) in assigns.iter().enumerate() {
        f.write_str(if i == 0 { " " } else { ", " })?;
        write!(f, "{} = {}", a.accessor, a.value)?;
    }
    f.write_str(if assigns.is_empty() { "}" } else { " }" })
}

impl Display for EndRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            EndRef::Param(p) => f.write_str(p),
            EndRef::Refs(refs) => write_list(f, refs, " | "),
        }
    }
}

impl Display for TransformationReference {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = format!("ref({}", self.rule);
        if let Some(out) = &self.output {
            write!(s, ".{out}")?;
        }
        for arg in &self.args {
            match arg {
                RefArg::Positional(p) => write!(s, ", {p}")?,
                RefArg::Named { callee, caller } => write!(s, ", {callee} = {caller}")?,
            }
        }
        s.push(')');
        f.write_str(&s)
    }
}
