//! Value references: reading (`GetValue`) and writing (`SetValue`) object content.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::{Entity, ObjectId, Relation};

/// Borrowed view of either kind of content object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentRef<'a> {
    Entity(&'a Entity),
    Relation(&'a Relation),
}

impl<'a> ContentRef<'a> {
    pub fn base(&self) -> &'a Entity {
        match self {
            ContentRef::Entity(e) => e,
            ContentRef::Relation(r) => &r.base,
        }
    }

    pub fn id(&self) -> &'a ObjectId {
        &self.base().id
    }

    pub fn is_relation(&self) -> bool {
        matches!(self, ContentRef::Relation(_))
    }
}

/// Read accessor applied to a bound parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Accessor {
    Name,
    Id,
    Namespace,
    Attribute(String),
    /// Tag test; yields `"true"` or `"false"`.
    Tag(String),
}

impl Accessor {
    pub fn read(&self, object: ContentRef<'_>) -> Option<String> {
        let base = object.base();
        match self {
            Accessor::Name => Some(base.name.clone()),
            Accessor::Id => Some(base.id.to_string()),
            Accessor::Namespace => base.namespace.clone(),
            Accessor::Attribute(key) => base.attributes.get(key).cloned(),
            Accessor::Tag(label) => Some(base.tags.contains(label).to_string()),
        }
    }
}

impl fmt::Display for Accessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Accessor::Name => f.write_str("name"),
            Accessor::Id => f.write_str("id"),
            Accessor::Namespace => f.write_str("namespace"),
            Accessor::Attribute(k) => write!(f, "attribute({})", quote(k)),
            Accessor::Tag(t) => write!(f, "tag({})", quote(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueSegment {
    Literal(String),
    Path { param: String, accessor: Accessor },
}

/// Concatenation of literals and parameter accessors, e.g. `"Pool: " + A.name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueExpression {
    pub segments: Vec<ValueSegment>,
}

impl ValueExpression {
    pub fn literal(text: impl Into<String>) -> Self {
        Self { segments: vec![ValueSegment::Literal(text.into())] }
    }

    pub fn path(param: impl Into<String>, accessor: Accessor) -> Self {
        Self { segments: vec![ValueSegment::Path { param: param.into(), accessor }] }
    }

    pub fn concat(mut self, other: ValueExpression) -> Self {
        self.segments.extend(other.segments);
        self
    }

    pub fn parameters(&self) -> BTreeSet<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                ValueSegment::Path { param, .. } => Some(param.as_str()),
                ValueSegment::Literal(_) => None,
            })
            .collect()
    }

    /// Evaluates against bound objects. Absent if any accessor yields nothing.
    pub fn evaluate(&self, ctx: &dyn ValueContext) -> Result<Option<String>, ValueError> {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                ValueSegment::Literal(text) => out.push_str(text),
                ValueSegment::Path { param, accessor } => {
                    let object = ctx.lookup(param).ok_or_else(|| ValueError::Unbound(param.clone()))?;
                    match accessor.read(object) {
                        Some(v) => out.push_str(&v),
                        None => return Ok(None),
                    }
                }
            }
        }
        Ok(Some(out))
    }
}

impl fmt::Display for ValueExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match seg {
                ValueSegment::Literal(text) => f.write_str(&quote(text))?,
                ValueSegment::Path { param, accessor } => write!(f, "{param}.{accessor}")?,
            }
        }
        Ok(())
    }
}

/// Resolves parameter names to objects during evaluation.
pub trait ValueContext {
    fn lookup(&self, param: &str) -> Option<ContentRef<'_>>;
}

impl<'a> ValueContext for std::collections::BTreeMap<String, ContentRef<'a>> {
    fn lookup(&self, param: &str) -> Option<ContentRef<'_>> {
        self.get(param).copied()
    }
}

/// `GetValue`: evaluates `expr` in `ctx`.
pub fn get_value(expr: &ValueExpression, ctx: &dyn ValueContext) -> Result<Option<String>, ValueError> {
    expr.evaluate(ctx)
}

/// Write accessor of an assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssignAccessor {
    Name,
    Namespace,
    Attribute(String),
    /// Adds the assigned value as a tag label.
    Tag,
}

impl fmt::Display for AssignAccessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignAccessor::Name => f.write_str("name"),
            AssignAccessor::Namespace => f.write_str("namespace"),
            AssignAccessor::Attribute(k) => write!(f, "attribute({})", quote(k)),
            AssignAccessor::Tag => f.write_str("tag"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValueError {
    #[error("parameter `{0}` is not bound")]
    Unbound(String),
    #[error("conflicting write to {accessor} of `{object}`: `{existing}` vs `{attempted}`")]
    Conflict { object: ObjectId, accessor: AssignAccessor, existing: String, attempted: String },
}

/// `SetValue`: writes one accessor. Returns whether the object changed.
///
/// Rewriting an accessor with the value it already holds is a no-op; a
/// different value is a conflict. An empty name counts as unset.
pub fn set_value(object: &mut Entity, accessor: &AssignAccessor, value: &str) -> Result<bool, ValueError> {
    let conflict = |existing: &str| ValueError::Conflict {
        object: object.id.clone(),
        accessor: accessor.clone(),
        existing: existing.to_owned(),
        attempted: value.to_owned(),
    };
    match accessor {
        AssignAccessor::Name => {
            if object.name == value {
                return Ok(false);
            }
            if !object.name.is_empty() {
                return Err(conflict(&object.name));
            }
            object.name = value.to_owned();
        }
        AssignAccessor::Namespace => match &object.namespace {
            Some(ns) if ns == value => return Ok(false),
            Some(ns) => return Err(conflict(ns)),
            None => object.namespace = Some(value.to_owned()),
        },
        AssignAccessor::Attribute(key) => match object.attributes.get(key) {
            Some(v) if v == value => return Ok(false),
            Some(v) => return Err(conflict(v)),
            None => {
                object.attributes.insert(key.clone(), value.to_owned());
            }
        },
        AssignAccessor::Tag => return Ok(object.tags.insert(value.to_owned())),
    }
    Ok(true)
}

pub(crate) fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
