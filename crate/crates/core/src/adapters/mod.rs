//! Content interpreters: conversion between external formats and
//! [`ModelDocument`].
//!
//! | format      | read | write |
//! |-------------|------|-------|
//! | `generic`   | yes  | yes   |
//! | `archimate` | yes  | no    |
//! | `bpmn`      | yes  | yes   |
//!
//! Further interpreters (an ontology store, a UML profile) only need to
//! implement [`ContentInterpreter`].

mod archimate;
mod bpmn;
mod generic;
mod registry;
mod xml;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use archimate::{load_archimate, ArchimateInterpreter};
pub use bpmn::{load_bpmn, save_bpmn, BpmnInterpreter, BPMN_ELEMENT_TYPES, BPMN_RELATION_TYPES};
pub use generic::{load_generic, save_generic, GenericInterpreter};
pub use registry::{default_archimate_registry, load_registry};

use crate::model::{MetatypeRegistry, ModelDocument, ModelError};

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("at `{path}`: {message}")]
    Json { path: String, message: String },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unsupported type(s) for {format}: {}", .types.join(", "))]
    Unsupported { format: Format, types: Vec<String> },
    #[error("{format} cannot {operation}")]
    Capability { format: Format, operation: &'static str },
    #[error("{0}")]
    Structure(String),
}

impl AdapterError {
    pub(crate) fn json(err: serde_path_to_error::Error<serde_json::Error>) -> Self {
        AdapterError::Json { path: err.path().to_string(), message: err.into_inner().to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Format {
    Generic,
    Archimate,
    Bpmn,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Generic, Format::Archimate, Format::Bpmn];

    pub fn name(self) -> &'static str {
        match self {
            Format::Generic => "generic",
            Format::Archimate => "archimate",
            Format::Bpmn => "bpmn",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Format::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown format `{s}` (expected generic, archimate or bpmn)"))
    }
}

/// A model read from an external format, plus non-fatal remarks.
#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub model: ModelDocument,
    pub warnings: Vec<String>,
}

/// Reader/writer for one external format.
pub trait ContentInterpreter {
    fn format(&self) -> Format;

    fn can_read(&self) -> bool {
        true
    }

    fn can_write(&self) -> bool {
        true
    }

    /// Parses `bytes`; declared types are expanded through `registry`.
    fn read(&self, bytes: &[u8], registry: &MetatypeRegistry) -> Result<Loaded, AdapterError>;

    fn write(&self, model: &ModelDocument) -> Result<Vec<u8>, AdapterError>;
}

pub fn interpreter(format: Format) -> Box<dyn ContentInterpreter> {
    match format {
        Format::Generic => Box::new(GenericInterpreter),
        Format::Archimate => Box::new(ArchimateInterpreter),
        Format::Bpmn => Box::new(BpmnInterpreter),
    }
}

/// Registry used to read a source of `format` and to match rules against
/// it: the built-in ArchiMate catalog for ArchiMate sources, with `user`
/// merged on top.
pub fn effective_registry(
    format: Format,
    user: Option<&MetatypeRegistry>,
) -> Result<MetatypeRegistry, ModelError> {
    let mut reg = match format {
        Format::Archimate => default_archimate_registry(),
        Format::Generic | Format::Bpmn => MetatypeRegistry::new(),
    };
    if let Some(user) = user {
        reg.merge(user)?;
    }
    Ok(reg)
}

/// Re-types every object of `model` through `registry`.
pub(crate) fn expand_types(
    model: ModelDocument,
    registry: &MetatypeRegistry,
) -> Result<ModelDocument, ModelError> {
    if registry.is_empty() {
        return Ok(model);
    }
    let mut out = ModelDocument::new();
    out.metadata = model.metadata.clone();
    for e in model.entities() {
        let mut e = e.clone();
        e.metatypes = crate::model::resolve_metatypes(&e.metatypes, registry);
        out.add_entity(e)?;
    }
    for r in model.relations() {
        let mut r = r.clone();
        r.base.metatypes = crate::model::resolve_metatypes(&r.base.metatypes, registry);
        out.add_relation(r)?;
    }
    Ok(out)
}
