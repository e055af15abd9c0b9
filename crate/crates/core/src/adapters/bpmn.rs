use std::collections::{BTreeMap, BTreeSet};

use super::xml::{self, XmlNode, XmlOut};
use super::{expand_types, AdapterError, ContentInterpreter, Format, Loaded};
use crate::model::{Entity, MetatypeRegistry, ModelDocument, ObjectId, Relation};

pub const POOL: &str = "Participant/Pool";
pub const LANE: &str = "Lane";
pub const PROCESS: &str = "Process";
pub const SUB_PROCESS: &str = "SubProcess";
pub const TASK: &str = "Task";
pub const DATA_OBJECT: &str = "Data Object";
pub const SEQUENCE_FLOW: &str = "Sequence Flow";
pub const DATA_ASSOCIATION: &str = "Data Association";
pub const NESTED_ELEMENT: &str = "Nested Element";

/// Entity types the BPMN interpreter understands.
pub const BPMN_ELEMENT_TYPES: [&str; 6] = [POOL, LANE, PROCESS, SUB_PROCESS, TASK, DATA_OBJECT];
/// Relation types the BPMN interpreter understands.
pub const BPMN_RELATION_TYPES: [&str; 3] = [SEQUENCE_FLOW, DATA_ASSOCIATION, NESTED_ELEMENT];

const MAIN_PROCESS: &str = "emt_main_process";
const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Pool,
    Lane,
    Process,
    SubProcess,
    Task,
    DataObject,
}

impl Kind {
    fn of(e: &Entity) -> Option<Kind> {
        const ORDER: [(&str, Kind); 6] = [
            (POOL, Kind::Pool),
            (LANE, Kind::Lane),
            (PROCESS, Kind::Process),
            (SUB_PROCESS, Kind::SubProcess),
            (TASK, Kind::Task),
            (DATA_OBJECT, Kind::DataObject),
        ];
        ORDER.iter().find(|(t, _)| e.has_type(t)).map(|(_, k)| *k)
    }

    fn is_flow_node(self) -> bool {
        matches!(self, Kind::SubProcess | Kind::Task | Kind::DataObject)
    }

    fn is_activity(self) -> bool {
        matches!(self, Kind::SubProcess | Kind::Task)
    }
}

fn structure(msg: String) -> AdapterError {
    AdapterError::Structure(msg)
}

/// Where flow elements are written: a `<process>` or a `<subProcess>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Host {
    Process(String),
    SubProcess(ObjectId),
}

#[derive(Default)]
struct HostContent {
    lanes: Vec<ObjectId>,
    nodes: Vec<ObjectId>,
    flows: Vec<ObjectId>,
}

struct Layout<'m> {
    doc: &'m ModelDocument,
    kinds: BTreeMap<ObjectId, Kind>,
    parent: BTreeMap<ObjectId, ObjectId>,
    pool_process: BTreeMap<ObjectId, String>,
    hosts: BTreeMap<Host, HostContent>,
    lane_members: BTreeMap<ObjectId, Vec<ObjectId>>,
    inputs: BTreeMap<ObjectId, Vec<(ObjectId, ObjectId)>>,
    outputs: BTreeMap<ObjectId, Vec<(ObjectId, ObjectId)>>,
}

impl<'m> Layout<'m> {
    fn new(doc: &'m ModelDocument) -> Result<Self, AdapterError> {
        let mut unsupported = BTreeSet::new();
        let mut kinds = BTreeMap::new();
        for e in doc.entities() {
            match Kind::of(e) {
                Some(k) => {
                    kinds.insert(e.id.clone(), k);
                }
                None => unsupported.extend(e.metatypes.iter().cloned()),
            }
        }
        for r in doc.relations() {
            if !BPMN_RELATION_TYPES.iter().any(|t| r.has_type(t)) {
                unsupported.extend(r.base.metatypes.iter().cloned());
            }
        }
        if !unsupported.is_empty() {
            return Err(AdapterError::Unsupported {
                format: Format::Bpmn,
                types: unsupported.into_iter().collect(),
            });
        }
        let mut layout = Layout {
            doc,
            kinds,
            parent: BTreeMap::new(),
            pool_process: BTreeMap::new(),
            hosts: BTreeMap::new(),
            lane_members: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        };
        layout.nesting()?;
        layout.place()?;
        Ok(layout)
    }

    fn kind(&self, id: &ObjectId) -> Kind {
        self.kinds[id]
    }

    fn nesting(&mut self) -> Result<(), AdapterError> {
        for r in self.doc.relations().filter(|r| r.has_type(NESTED_ELEMENT)) {
            let (child, container) = (self.kind(&r.source), self.kind(&r.target));
            let ok = match child {
                Kind::Pool => false,
                Kind::Process => container == Kind::Pool,
                Kind::Lane => matches!(container, Kind::Pool | Kind::Process),
                Kind::SubProcess | Kind::Task | Kind::DataObject => {
                    matches!(container, Kind::SubProcess | Kind::Lane | Kind::Pool | Kind::Process)
                }
            };
            if !ok || r.source == r.target {
                return Err(structure(format!(
                    "nested element `{}`: {:?} `{}` cannot be placed in {:?} `{}`",
                    r.id(),
                    child,
                    r.source,
                    container,
                    r.target
                )));
            }
            if let Some(prev) = self.parent.insert(r.source.clone(), r.target.clone()) {
                if prev != r.target {
                    return Err(structure(format!(
                        "`{}` is nested in both `{prev}` and `{}`",
                        r.source, r.target
                    )));
                }
            }
        }
        // SubProcess nesting must be a forest.
        for id in self.parent.keys() {
            let mut seen = BTreeSet::new();
            let mut cursor = id;
            while let Some(p) = self.parent.get(cursor) {
                if !seen.insert(p.clone()) {
                    return Err(structure(format!("containment cycle through `{id}`")));
                }
                cursor = p;
            }
        }
        for (id, kind) in &self.kinds {
            if *kind == Kind::Pool {
                self.pool_process.insert(id.clone(), format!("{id}_process"));
            }
        }
        for (child, container) in &self.parent {
            if self.kinds[child] == Kind::Process {
                let slot = self.pool_process.get_mut(container).expect("pool");
                if *slot != format!("{container}_process") {
                    return Err(structure(format!("pool `{container}` holds more than one process")));
                }
                *slot = child.to_string();
            }
        }
        Ok(())
    }

    /// The element a lane or flow node is written into.
    fn host(&self, id: &ObjectId) -> Host {
        match self.parent.get(id) {
            None => Host::Process(MAIN_PROCESS.to_owned()),
            Some(p) => match self.kind(p) {
                Kind::SubProcess => Host::SubProcess(p.clone()),
                Kind::Pool => Host::Process(self.pool_process[p].clone()),
                Kind::Process => Host::Process(p.to_string()),
                Kind::Lane => self.host(p),
                Kind::Task | Kind::DataObject => unreachable!("rejected during nesting"),
            },
        }
    }

    fn place(&mut self) -> Result<(), AdapterError> {
        let ids: Vec<(ObjectId, Kind)> = self.kinds.iter().map(|(i, k)| (i.clone(), *k)).collect();
        for (id, kind) in ids {
            match kind {
                Kind::Lane => {
                    let h = self.host(&id);
                    self.hosts.entry(h).or_default().lanes.push(id);
                }
                k if k.is_flow_node() => {
                    if let Some(p) = self.parent.get(&id) {
                        if self.kind(p) == Kind::Lane {
                            self.lane_members.entry(p.clone()).or_default().push(id.clone());
                        }
                    }
                    let h = self.host(&id);
                    self.hosts.entry(h).or_default().nodes.push(id);
                }
                _ => {}
            }
        }
        for r in self.doc.relations() {
            let (s, t) = (self.kind(&r.source), self.kind(&r.target));
            if r.has_type(SEQUENCE_FLOW) {
                if !(s.is_flow_node() && t.is_flow_node()) {
                    return Err(structure(format!("sequence flow `{}` must connect flow nodes", r.id())));
                }
                let h = self.host(&r.source);
                self.hosts.entry(h).or_default().flows.push(r.id().clone());
            } else if r.has_type(DATA_ASSOCIATION) {
                let entry = (r.id().clone(), r.source.clone());
                if s == Kind::DataObject && t.is_activity() {
                    self.inputs.entry(r.target.clone()).or_default().push(entry);
                } else if s.is_activity() && t == Kind::DataObject {
                    let entry = (r.id().clone(), r.target.clone());
                    self.outputs.entry(r.source.clone()).or_default().push(entry);
                } else {
                    return Err(structure(format!(
                        "data association `{}` must link a data object and an activity",
                        r.id()
                    )));
                }
            }
        }
        Ok(())
    }

    fn write(&self) -> Vec<u8> {
        let mut out = XmlOut::new();
        out.open(
            "definitions",
            &[("xmlns", BPMN_NS), ("id", "emt_definitions"), ("targetNamespace", "urn:emt:bpmn")],
        );
        let pools: Vec<&Entity> = self.doc.entities().filter(|e| self.kinds[&e.id] == Kind::Pool).collect();
        if !pools.is_empty() {
            out.open("collaboration", &[("id", "emt_collaboration")]);
            for p in &pools {
                let process = &self.pool_process[&p.id];
                let mut attrs = vec![("id", p.id.as_str())];
                if !p.name.is_empty() {
                    attrs.push(("name", p.name.as_str()));
                }
                attrs.push(("processRef", process.as_str()));
                out.empty("participant", &attrs);
            }
            out.close("collaboration");
        }
        let mut processes: Vec<(String, &str)> = Vec::new();
        for p in &pools {
            let pid = &self.pool_process[&p.id];
            let name = self.doc.entity(&ObjectId::from(pid.as_str())).map_or("", |e| e.name.as_str());
            processes.push((pid.clone(), name));
        }
        for e in self.doc.entities() {
            if self.kinds[&e.id] == Kind::Process && !self.parent.contains_key(&e.id) {
                processes.push((e.id.to_string(), e.name.as_str()));
            }
        }
        if self.hosts.contains_key(&Host::Process(MAIN_PROCESS.to_owned())) {
            processes.push((MAIN_PROCESS.to_owned(), ""));
        }
        for (pid, name) in processes {
            let mut attrs = vec![("id", pid.as_str())];
            if !name.is_empty() {
                attrs.push(("name", name));
            }
            attrs.push(("isExecutable", "false"));
            out.open("process", &attrs);
            self.write_content(&mut out, &Host::Process(pid.clone()));
            out.close("process");
        }
        out.close("definitions");
        out.finish()
    }

    fn named<'a>(&self, id: &'a ObjectId, name: &'a str) -> Vec<(&'static str, &'a str)> {
        let mut attrs = vec![("id", id.as_str())];
        if !name.is_empty() {
            attrs.push(("name", name));
        }
        attrs
    }

    fn write_content(&self, out: &mut XmlOut, host: &Host) {
        let Some(content) = self.hosts.get(host) else {
            return;
        };
        if !content.lanes.is_empty() {
            let set_id = match host {
                Host::Process(p) => format!("{p}_lanes"),
                Host::SubProcess(s) => format!("{s}_lanes"),
            };
            out.open("laneSet", &[("id", set_id.as_str())]);
            for lane in &content.lanes {
                let e = self.doc.entity(lane).expect("lane entity");
                let members = self.lane_members.get(lane).map(Vec::as_slice).unwrap_or_default();
                if members.is_empty() {
                    out.empty("lane", &self.named(&e.id, &e.name));
                } else {
                    out.open("lane", &self.named(&e.id, &e.name));
                    for m in members {
                        out.text_element("flowNodeRef", m.as_str());
                    }
                    out.close("lane");
                }
            }
            out.close("laneSet");
        }
        for id in &content.nodes {
            let e = self.doc.entity(id).expect("node entity");
            let attrs = self.named(&e.id, &e.name);
            let ins = self.inputs.get(id).map(Vec::as_slice).unwrap_or_default();
            let outs = self.outputs.get(id).map(Vec::as_slice).unwrap_or_default();
            let tag = match self.kind(id) {
                Kind::SubProcess => "subProcess",
                Kind::Task => "task",
                _ => "dataObject",
            };
            let nested = self.hosts.contains_key(&Host::SubProcess(id.clone()));
            if ins.is_empty() && outs.is_empty() && !nested {
                out.empty(tag, &attrs);
                continue;
            }
            out.open(tag, &attrs);
            for (aid, object) in ins {
                out.open("dataInputAssociation", &[("id", aid.as_str())]);
                out.text_element("sourceRef", object.as_str());
                out.close("dataInputAssociation");
            }
            for (aid, object) in outs {
                out.open("dataOutputAssociation", &[("id", aid.as_str())]);
                out.text_element("targetRef", object.as_str());
                out.close("dataOutputAssociation");
            }
            if nested {
                self.write_content(out, &Host::SubProcess(id.clone()));
            }
            out.close(tag);
        }
        for id in &content.flows {
            let r = self.doc.relation(id).expect("flow relation");
            let mut attrs = self.named(r.id(), &r.base.name);
            attrs.push(("sourceRef", r.source.as_str()));
            attrs.push(("targetRef", r.target.as_str()));
            out.empty("sequenceFlow", &attrs);
        }
    }
}

/// Writes the BPMN subset. Nested Element relations become containment,
/// pools become participant/process pairs, and nodes outside any pool go
/// into one shared process. Attributes, tags, namespaces and the names of
/// Nested Element and Data Association relations are not represented.
pub fn save_bpmn(doc: &ModelDocument) -> Result<Vec<u8>, AdapterError> {
    Ok(Layout::new(doc)?.write())
}

struct Reader {
    entities: Vec<Entity>,
    relations: Vec<Relation>,
}

impl Reader {
    fn entity(&mut self, node: &XmlNode, ty: &str) -> Result<ObjectId, AdapterError> {
        let id = node.attr("id").ok_or_else(|| structure(format!("<{}> without id", node.name)))?;
        let name = node.attr("name").unwrap_or_default();
        self.entities.push(Entity::new(id, name, [ty]));
        Ok(ObjectId::from(id))
    }

    fn nest(&mut self, child: &ObjectId, container: Option<&ObjectId>) {
        if let Some(c) = container {
            self.relations.push(Relation::new(
                format!("nested_{child}"),
                "",
                [NESTED_ELEMENT],
                child.clone(),
                c.clone(),
            ));
        }
    }

    fn associations(&mut self, node: &XmlNode, activity: &ObjectId) {
        let mut n = 0;
        let mut fresh = |node: &XmlNode| {
            n += 1;
            node.attr("id").map(str::to_owned).unwrap_or_else(|| format!("{activity}_association_{n}"))
        };
        for a in node.children_named("dataInputAssociation") {
            let id = fresh(a);
            if let Some(src) = a.child("sourceRef") {
                self.relations.push(Relation::new(
                    id,
                    "",
                    [DATA_ASSOCIATION],
                    src.text.as_str(),
                    activity.clone(),
                ));
            }
        }
        for a in node.children_named("dataOutputAssociation") {
            let id = fresh(a);
            if let Some(tgt) = a.child("targetRef") {
                self.relations.push(Relation::new(
                    id,
                    "",
                    [DATA_ASSOCIATION],
                    activity.clone(),
                    tgt.text.as_str(),
                ));
            }
        }
    }

    fn content(&mut self, node: &XmlNode, container: Option<&ObjectId>) -> Result<(), AdapterError> {
        let mut lane_of: BTreeMap<String, ObjectId> = BTreeMap::new();
        for set in node.children_named("laneSet") {
            for lane in set.children_named("lane") {
                let id = self.entity(lane, LANE)?;
                self.nest(&id, container);
                for m in lane.children_named("flowNodeRef") {
                    lane_of.insert(m.text.clone(), id.clone());
                }
            }
        }
        for child in &node.children {
            let kind = match child.name.as_str() {
                "subProcess" => SUB_PROCESS,
                "dataObject" => DATA_OBJECT,
                n if n == "task" || n.ends_with("Task") => TASK,
                "sequenceFlow" => {
                    let id = child.attr("id").ok_or_else(|| structure("<sequenceFlow> without id".into()))?;
                    let (Some(s), Some(t)) = (child.attr("sourceRef"), child.attr("targetRef")) else {
                        return Err(structure(format!("sequence flow `{id}` needs sourceRef and targetRef")));
                    };
                    let name = child.attr("name").unwrap_or_default();
                    self.relations.push(Relation::new(id, name, [SEQUENCE_FLOW], s, t));
                    continue;
                }
                _ => continue,
            };
            let id = self.entity(child, kind)?;
            let parent = lane_of.get(id.as_str()).or(container).cloned();
            self.nest(&id, parent.as_ref());
            self.associations(child, &id);
            if kind == SUB_PROCESS {
                self.content(child, Some(&id))?;
            }
        }
        Ok(())
    }
}

/// Reads the BPMN subset written by [`save_bpmn`], synthesizing a Nested
/// Element relation `nested_<child>` for every containment.
pub fn load_bpmn(bytes: &[u8]) -> Result<ModelDocument, AdapterError> {
    let root = xml::parse(bytes)?;
    if root.name != "definitions" {
        return Err(structure(format!("expected <definitions>, found <{}>", root.name)));
    }
    let mut reader = Reader { entities: Vec::new(), relations: Vec::new() };
    let mut owner: BTreeMap<String, ObjectId> = BTreeMap::new();
    for collab in root.children_named("collaboration") {
        for p in collab.children_named("participant") {
            let id = reader.entity(p, POOL)?;
            if let Some(process) = p.attr("processRef") {
                owner.insert(process.to_owned(), id);
            }
        }
    }
    for process in root.children_named("process") {
        let id = process.attr("id").unwrap_or(MAIN_PROCESS);
        let container = if id == MAIN_PROCESS {
            None
        } else {
            match owner.get(id) {
                Some(pool) if id == format!("{pool}_process") => Some(pool.clone()),
                pool => {
                    let pool = pool.cloned();
                    let pid = reader.entity(process, PROCESS)?;
                    reader.nest(&pid, pool.as_ref());
                    Some(pid)
                }
            }
        };
        reader.content(process, container.as_ref())?;
    }
    let mut doc = ModelDocument::new();
    for e in reader.entities {
        doc.add_entity(e)?;
    }
    for r in reader.relations {
        doc.add_relation(r)?;
    }
    Ok(doc)
}

pub struct BpmnInterpreter;

impl ContentInterpreter for BpmnInterpreter {
    fn format(&self) -> Format {
        Format::Bpmn
    }

    fn read(&self, bytes: &[u8], registry: &MetatypeRegistry) -> Result<Loaded, AdapterError> {
        Ok(Loaded { model: expand_types(load_bpmn(bytes)?, registry)?, warnings: Vec::new() })
    }

    fn write(&self, model: &ModelDocument) -> Result<Vec<u8>, AdapterError> {
        save_bpmn(model)
    }
}
