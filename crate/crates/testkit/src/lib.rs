//! Random instance generators and deliberately naive reference
//! implementations used to cross-check the engine.
//!
//! The oracles avoid the engine's own helpers (type filters, grouping maps,
//! `Binding::join`) and recompute everything from scratch with linear scans.

use std::collections::{BTreeMap, BTreeSet};

use emt_core::matching::{Binding, BindingSet, Slot};
use emt_core::model::{Entity, ModelDocument, ObjectId, Relation, TypeFilter};
use emt_core::rules::{CountOp, LogicOp, LoopConstraint, SourceElement, SourceRelationship};
use rand::seq::SliceRandom;
use rand::Rng;

pub const ENTITY_TYPES: [&str; 3] = ["A", "B", "C"];
pub const RELATION_TYPES: [&str; 2] = ["R", "S"];
pub const NAMES: [&str; 4] = ["alpha", "beta", "gamma", "delta"];

/// At most `max_entities` entities `e0..` with one to three of
/// [`ENTITY_TYPES`], and at most `max_relations` relations `r0..` typed from
/// [`RELATION_TYPES`] between random entities (self-loops and parallel
/// relations included).
pub fn random_model<R: Rng>(rng: &mut R, max_entities: usize, max_relations: usize) -> ModelDocument {
    let mut doc = ModelDocument::new();
    let n = rng.gen_range(0..=max_entities);
    for i in 0..n {
        let k = rng.gen_range(1..=ENTITY_TYPES.len());
        let types: Vec<&str> = ENTITY_TYPES.choose_multiple(rng, k).copied().collect();
        let mut e = Entity::new(format!("e{i}"), *NAMES.choose(rng).unwrap(), types);
        if rng.gen_bool(0.3) {
            e = e.with_tag("t");
        }
        if rng.gen_bool(0.3) {
            e = e.with_attribute("owner", *NAMES.choose(rng).unwrap());
        }
        doc.add_entity(e).unwrap();
    }
    if n > 0 {
        let m = rng.gen_range(0..=max_relations);
        for j in 0..m {
            let s = rng.gen_range(0..n);
            let t = rng.gen_range(0..n);
            let ty = *RELATION_TYPES.choose(rng).unwrap();
            doc.add_relation(Relation::new(format!("r{j}"), "", [ty], format!("e{s}"), format!("e{t}")))
                .unwrap();
        }
    }
    doc
}

/// One random loop constraint with a count in `0..=4`, occasionally two.
pub fn random_constraints<R: Rng>(rng: &mut R) -> Vec<LoopConstraint> {
    let n = if rng.gen_bool(0.25) { 2 } else { 1 };
    (0..n).map(|_| LoopConstraint::new(*CountOp::ALL.choose(rng).unwrap(), rng.gen_range(0..=4))).collect()
}

pub fn random_type_filter<R: Rng>(rng: &mut R, names: &[&str]) -> TypeFilter {
    if rng.gen_bool(0.15) {
        TypeFilter::Any
    } else {
        TypeFilter::named(*names.choose(rng).unwrap())
    }
}

/// Direct arithmetic for one operator.
pub fn compare(op: CountOp, n: u64, bound: u64) -> bool {
    match op {
        CountOp::AtLeast => n >= bound,
        CountOp::MoreThan => n > bound,
        CountOp::Exactly => n == bound,
        CountOp::LessThan => n < bound,
        CountOp::AtMost => n <= bound,
    }
}

fn all_accept(constraints: &[LoopConstraint], n: usize) -> bool {
    constraints.iter().all(|c| compare(c.op, n as u64, c.count))
}

fn type_ok(filter: &TypeFilter, types: &BTreeSet<String>) -> bool {
    match filter {
        TypeFilter::Any => true,
        TypeFilter::Named(t) => types.iter().any(|x| x == t),
    }
}

fn element_ok(model: &ModelDocument, term: &SourceElement, id: &ObjectId) -> bool {
    assert!(term.conditions.is_empty(), "oracle handles type filters only");
    model.entities().find(|e| &e.id == id).is_some_and(|e| type_ok(&term.type_filter, &e.metatypes))
}

/// Element evaluation by a linear scan and a direct count.
pub fn brute_force_element(model: &ModelDocument, term: &SourceElement) -> BindingSet {
    let ids: Vec<ObjectId> =
        model.entities().filter(|e| element_ok(model, term, &e.id)).map(|e| e.id.clone()).collect();
    let mut out = BindingSet::new([term.param.clone()]);
    if term.constraints.is_empty() {
        for id in ids {
            out.insert(Binding::single(&term.param, id));
        }
    } else if all_accept(&term.constraints, ids.len()) {
        out.insert(Binding::new().with(&term.param, Slot::Aggregated(sorted(ids))));
    }
    out
}

fn sorted(mut ids: Vec<ObjectId>) -> Vec<ObjectId> {
    ids.sort();
    ids.dedup();
    ids
}

/// Relationship evaluation read literally off the five table rows:
/// enumerate every (source, relation, target) triple, pick the distinct
/// group keys of the row, collect each group by filtering the triples, and
/// keep the groups whose counts satisfy the constrained positions.
pub fn brute_force_relationship(model: &ModelDocument, term: &SourceRelationship) -> BindingSet {
    assert!(term.conditions.is_empty(), "oracle handles type filters only");
    let triples: Vec<(ObjectId, ObjectId, ObjectId)> = model
        .relations()
        .filter(|r| type_ok(&term.type_filter, &r.base.metatypes))
        .filter(|r| element_ok(model, &term.source, &r.source) && element_ok(model, &term.target, &r.target))
        .map(|r| (r.source.clone(), r.id().clone(), r.target.clone()))
        .collect();
    let (sp, rp, tp) = (&term.source.param, &term.param, &term.target.param);
    let mut out = BindingSet::new([sp.clone(), rp.clone(), tp.clone()]);
    let (s_on, r_on, t_on) = (
        !term.source.constraints.is_empty(),
        !term.constraints.is_empty(),
        !term.target.constraints.is_empty(),
    );
    let group_ok = |g: &[&(ObjectId, ObjectId, ObjectId)]| {
        let s = sorted(g.iter().map(|x| x.0.clone()).collect());
        let r = sorted(g.iter().map(|x| x.1.clone()).collect());
        let t = sorted(g.iter().map(|x| x.2.clone()).collect());
        let ok = (!r_on || all_accept(&term.constraints, r.len()))
            && (!s_on || all_accept(&term.source.constraints, s.len()))
            && (!t_on || all_accept(&term.target.constraints, t.len()));
        ok.then_some((s, r, t))
    };
    match (s_on, r_on, t_on) {
        // Iteration over all relationships of the type.
        (false, false, false) => {
            for (s, r, t) in &triples {
                out.insert(
                    Binding::new()
                        .with(sp, Slot::Single(s.clone()))
                        .with(rp, Slot::Single(r.clone()))
                        .with(tp, Slot::Single(t.clone())),
                );
            }
        }
        // Iteration over distinct sources; relations and targets aggregated.
        (false, true, true) => {
            let keys = sorted(triples.iter().map(|x| x.0.clone()).collect());
            for k in keys {
                let g: Vec<_> = triples.iter().filter(|x| x.0 == k).collect();
                if let Some((_, r, t)) = group_ok(&g) {
                    out.insert(
                        Binding::new()
                            .with(sp, Slot::Single(k))
                            .with(rp, Slot::Aggregated(r))
                            .with(tp, Slot::Aggregated(t)),
                    );
                }
            }
        }
        // Iteration over distinct targets; relations and sources aggregated.
        (true, true, false) => {
            let keys = sorted(triples.iter().map(|x| x.2.clone()).collect());
            for k in keys {
                let g: Vec<_> = triples.iter().filter(|x| x.2 == k).collect();
                if let Some((s, r, _)) = group_ok(&g) {
                    out.insert(
                        Binding::new()
                            .with(sp, Slot::Aggregated(s))
                            .with(rp, Slot::Aggregated(r))
                            .with(tp, Slot::Single(k)),
                    );
                }
            }
        }
        // Iteration over source-target combinations; relations aggregated.
        (false, true, false) => {
            let mut keys: Vec<(ObjectId, ObjectId)> =
                triples.iter().map(|x| (x.0.clone(), x.2.clone())).collect();
            keys.sort();
            keys.dedup();
            for (ks, kt) in keys {
                let g: Vec<_> = triples.iter().filter(|x| x.0 == ks && x.2 == kt).collect();
                if let Some((_, r, _)) = group_ok(&g) {
                    out.insert(
                        Binding::new()
                            .with(sp, Slot::Single(ks))
                            .with(rp, Slot::Aggregated(r))
                            .with(tp, Slot::Single(kt)),
                    );
                }
            }
        }
        // Everything in one statement, even when nothing matched.
        (true, true, true) => {
            let g: Vec<_> = triples.iter().collect();
            if let Some((s, r, t)) = group_ok(&g) {
                out.insert(
                    Binding::new()
                        .with(sp, Slot::Aggregated(s))
                        .with(rp, Slot::Aggregated(r))
                        .with(tp, Slot::Aggregated(t)),
                );
            }
        }
        other => panic!("pattern {other:?} is not a table row"),
    }
    out
}

/// Random binding set over `params`, each binding drawn from `universe`.
/// With `partial`, some bindings leave parameters unbound.
pub fn random_binding_set<R: Rng>(
    rng: &mut R,
    params: &[&str],
    universe: &[&str],
    max_len: usize,
    partial: bool,
) -> BindingSet {
    let mut bindings = Vec::new();
    for _ in 0..rng.gen_range(0..=max_len) {
        let mut b = Binding::new();
        for p in params {
            if partial && rng.gen_bool(0.2) {
                continue;
            }
            let slot = if rng.gen_bool(0.2) {
                let k = rng.gen_range(0..=2);
                Slot::aggregated(universe.choose_multiple(rng, k).map(|s| ObjectId::from(*s)))
            } else {
                Slot::Single(ObjectId::from(*universe.choose(rng).unwrap()))
            };
            b.insert(*p, slot);
        }
        bindings.push(b);
    }
    BindingSet::from_bindings(params.iter().map(|s| s.to_string()).collect(), bindings)
}

type Row = Vec<(String, Slot)>;

fn row(b: &Binding) -> Row {
    b.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn value<'a>(r: &'a Row, p: &str) -> Option<&'a Slot> {
    r.iter().find(|(k, _)| k == p).map(|(_, v)| v)
}

fn restrict(r: &Row, shared: &[String]) -> Row {
    r.iter().filter(|(k, _)| shared.contains(k)).cloned().collect()
}

/// Set-theoretic reference for pairwise combination.
///
/// AND: every pair whose common parameters carry equal slots, merged.
/// OR: the union. XOR: the symmetric difference taken over the restriction
/// to the shared parameters (or, with none shared, the one non-empty side).
pub fn oracle_combine(op: LogicOp, left: &BindingSet, right: &BindingSet) -> BindingSet {
    let params: BTreeSet<String> = left.params().iter().chain(right.params()).cloned().collect();
    let shared: Vec<String> = left.params().iter().filter(|p| right.params().contains(*p)).cloned().collect();
    let ls: Vec<Row> = left.iter().map(row).collect();
    let rs: Vec<Row> = right.iter().map(row).collect();
    let mut out: Vec<Row> = Vec::new();
    match op {
        LogicOp::And => {
            for l in &ls {
                for r in &rs {
                    let common: Vec<&String> =
                        l.iter().map(|(k, _)| k).filter(|k| value(r, k).is_some()).collect();
                    if common.iter().all(|k| value(l, k) == value(r, k)) {
                        let mut merged = l.clone();
                        for (k, v) in r {
                            if value(l, k).is_none() {
                                merged.push((k.clone(), v.clone()));
                            }
                        }
                        out.push(merged);
                    }
                }
            }
        }
        LogicOp::Or => {
            out.extend(ls.iter().cloned());
            out.extend(rs.iter().cloned());
        }
        LogicOp::Xor => {
            if shared.is_empty() {
                if ls.is_empty() != rs.is_empty() {
                    out.extend(ls.iter().cloned());
                    out.extend(rs.iter().cloned());
                }
            } else {
                let lk: Vec<Row> = ls.iter().map(|r| restrict(r, &shared)).collect();
                let rk: Vec<Row> = rs.iter().map(|r| restrict(r, &shared)).collect();
                for r in &ls {
                    if !rk.contains(&restrict(r, &shared)) {
                        out.push(r.clone());
                    }
                }
                for r in &rs {
                    if !lk.contains(&restrict(r, &shared)) {
                        out.push(r.clone());
                    }
                }
            }
        }
    }
    BindingSet::from_bindings(params, out.into_iter().map(|r| r.into_iter().collect::<Binding>()))
}

/// Flat n-ary natural join: every choice of one binding per operand whose
/// slots agree on common parameters.
pub fn flat_join(operands: &[BindingSet]) -> BindingSet {
    let params: BTreeSet<String> = operands.iter().flat_map(|s| s.params().iter().cloned()).collect();
    let mut acc: Vec<Row> = vec![Vec::new()];
    for set in operands {
        let mut next = Vec::new();
        for partial in &acc {
            for b in set.iter() {
                let r = row(b);
                if r.iter().all(|(k, v)| value(partial, k).is_none_or(|x| x == v)) {
                    let mut merged = partial.clone();
                    merged.extend(r.into_iter().filter(|(k, _)| value(partial, k).is_none()));
                    next.push(merged);
                }
            }
        }
        acc = next;
    }
    BindingSet::from_bindings(params, acc.into_iter().map(|r| r.into_iter().collect::<Binding>()))
}

/// Flat n-ary union.
pub fn flat_union(operands: &[BindingSet]) -> BindingSet {
    let params: BTreeSet<String> = operands.iter().flat_map(|s| s.params().iter().cloned()).collect();
    BindingSet::from_bindings(params, operands.iter().flat_map(|s| s.iter().cloned()))
}

/// Every elementary cycle of the directed graph on `0..n`, found by trying
/// every ordered selection of distinct nodes; each cycle is rotated to start
/// at its smallest node.
pub fn brute_force_cycles(n: usize, edges: &[(usize, usize)]) -> BTreeSet<Vec<usize>> {
    let has = |a: usize, b: usize| edges.contains(&(a, b));
    let mut out = BTreeSet::new();
    let mut seq = Vec::new();
    fn extend(
        n: usize,
        seq: &mut Vec<usize>,
        has: &dyn Fn(usize, usize) -> bool,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        if !seq.is_empty() {
            let closed = seq.windows(2).all(|w| has(w[0], w[1])) && has(*seq.last().unwrap(), seq[0]);
            if closed {
                let min = seq.iter().enumerate().min_by_key(|(_, v)| **v).unwrap().0;
                let mut rotated = seq[min..].to_vec();
                rotated.extend_from_slice(&seq[..min]);
                out.insert(rotated);
            }
        }
        for v in 0..n {
            if !seq.contains(&v) {
                seq.push(v);
                extend(n, seq, has, out);
                seq.pop();
            }
        }
    }
    extend(n, &mut seq, &has, &mut out);
    out
}

/// Random reference structure as rule text: rule `Q{i}` references each
/// `Q{j}` in `edges[i]`. Every rule matches `element(A: T)` and creates one
/// element, so the text is valid apart from any cycles.
pub fn rule_text_for_graph(n: usize, edges: &[(usize, usize)]) -> String {
    let mut by_caller: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in edges {
        by_caller.entry(a).or_default().push(b);
    }
    let mut text = String::new();
    for i in 0..n {
        let callees = by_caller.get(&i).cloned().unwrap_or_default();
        let mut target = vec!["element(B: U)".to_owned()];
        for (k, c) in callees.iter().enumerate() {
            target.push(format!("element(X{k}: * <- ref(Q{c}, A))"));
        }
        let target =
            if target.len() == 1 { target.remove(0) } else { format!("group({})", target.join(", ")) };
        text.push_str(&format!("rule(Q{i}: element(A: T) -> {target})\n"));
    }
    text
}

pub fn random_edges<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    edges
}

const TEXTS: [&str; 7] = ["", "Order", "a & b", "<tag>", "quote \"q\"", "Ünïcode ✓", "line\nbreak"];
const DOC_TYPES: [&str; 5] = ["BusinessActor", "Business", "Active", "Participant/Pool", "x:y"];

fn text<R: Rng>(rng: &mut R) -> String {
    TEXTS.choose(rng).unwrap().to_string()
}

/// Random document exercising every field the generic format stores.
pub fn random_generic<R: Rng>(rng: &mut R) -> ModelDocument {
    let mut doc = ModelDocument::new();
    if rng.gen_bool(0.5) {
        doc.metadata.insert("name".into(), text(rng));
    }
    let n = rng.gen_range(0..8);
    for i in 0..n {
        let k = rng.gen_range(1..=3);
        let types: Vec<&str> = DOC_TYPES.choose_multiple(rng, k).copied().collect();
        let mut e = Entity::new(format!("id-{i}"), text(rng), types);
        for _ in 0..rng.gen_range(0..3) {
            e = e.with_attribute(format!("k{}", rng.gen_range(0..4)), text(rng));
        }
        for _ in 0..rng.gen_range(0..3) {
            e = e.with_tag(text(rng));
        }
        if rng.gen_bool(0.3) {
            e = e.with_namespace(text(rng));
        }
        doc.add_entity(e).unwrap();
    }
    if n > 0 {
        for j in 0..rng.gen_range(0..8) {
            let mut r = Relation::new(
                format!("rel-{j}"),
                text(rng),
                [*DOC_TYPES.choose(rng).unwrap()],
                format!("id-{}", rng.gen_range(0..n)),
                format!("id-{}", rng.gen_range(0..n)),
            );
            if rng.gen_bool(0.3) {
                r.base.attributes.insert("w".into(), text(rng));
            }
            doc.add_relation(r).unwrap();
        }
    }
    doc
}

/// A random document inside the BPMN vocabulary whose nesting the writer
/// accepts.
pub fn random_bpmn<R: Rng>(rng: &mut R) -> ModelDocument {
    let mut doc = ModelDocument::new();
    let mut nest = Vec::new();
    let add = |doc: &mut ModelDocument, id: String, name: String, ty: &str| {
        doc.add_entity(Entity::new(id.as_str(), name, [ty])).unwrap();
        ObjectId::from(id)
    };
    let mut pools = Vec::new();
    let mut processes = Vec::new();
    for i in 0..rng.gen_range(0..=2) {
        let p = add(&mut doc, format!("pool{i}"), text(rng), "Participant/Pool");
        if rng.gen_bool(0.5) {
            let pr = add(&mut doc, format!("proc{i}"), text(rng), "Process");
            nest.push((pr.clone(), p.clone()));
            processes.push(pr);
        }
        pools.push(p);
    }
    let mut lanes = Vec::new();
    if !pools.is_empty() {
        for i in 0..rng.gen_range(0..=2) {
            let l = add(&mut doc, format!("lane{i}"), text(rng), "Lane");
            let holders: Vec<&ObjectId> = pools.iter().chain(&processes).collect();
            nest.push((l.clone(), (*holders.choose(rng).unwrap()).clone()));
            lanes.push(l);
        }
    }
    let mut subs: Vec<ObjectId> = Vec::new();
    let mut activities = Vec::new();
    let mut data = Vec::new();
    for i in 0..rng.gen_range(0..8) {
        let (ty, prefix) =
            *[("SubProcess", "sub"), ("Task", "task"), ("Task", "task"), ("Data Object", "data")]
                .choose(rng)
                .unwrap();
        let id = add(&mut doc, format!("{prefix}{i}"), text(rng), ty);
        let containers: Vec<&ObjectId> = pools.iter().chain(&processes).chain(&lanes).chain(&subs).collect();
        if !containers.is_empty() && rng.gen_bool(0.7) {
            nest.push((id.clone(), (*containers.choose(rng).unwrap()).clone()));
        }
        match ty {
            "SubProcess" => {
                subs.push(id.clone());
                activities.push(id);
            }
            "Task" => activities.push(id),
            _ => data.push(id),
        }
    }
    for (k, (child, container)) in nest.into_iter().enumerate() {
        doc.add_relation(Relation::new(format!("n{k}"), "", ["Nested Element"], child, container)).unwrap();
    }
    let nodes: Vec<&ObjectId> = activities.iter().chain(&data).collect();
    if !nodes.is_empty() {
        for k in 0..rng.gen_range(0..5) {
            let s = (*nodes.choose(rng).unwrap()).clone();
            let t = (*nodes.choose(rng).unwrap()).clone();
            doc.add_relation(Relation::new(format!("flow{k}"), text(rng), ["Sequence Flow"], s, t)).unwrap();
        }
    }
    if !activities.is_empty() && !data.is_empty() {
        for k in 0..rng.gen_range(0..3) {
            let a = activities.choose(rng).unwrap().clone();
            let d = data.choose(rng).unwrap().clone();
            let (s, t) = if rng.gen_bool(0.5) { (d, a) } else { (a, d) };
            doc.add_relation(Relation::new(format!("assoc{k}"), "", ["Data Association"], s, t)).unwrap();
        }
    }
    doc
}
