use std::collections::BTreeSet;

use super::{Binding, BindingSet};
use crate::rules::LogicOp;

/// Pairwise combination of two sibling results.
///
/// * `AND` joins on identically named parameters and appends the rest
///   (cross product when nothing is shared).
/// * `OR` keeps every binding of either side; parameters only one side binds
///   stay unbound in the other side's bindings.
/// * `XOR` keeps the bindings whose values on the shared parameters occur in
///   exactly one operand. Without shared parameters, the result is whichever
///   operand is non-empty when exactly one is, and empty otherwise.
pub fn combine(op: LogicOp, left: &BindingSet, right: &BindingSet) -> BindingSet {
    let params: BTreeSet<String> = left.params().union(right.params()).cloned().collect();
    let mut out = BindingSet::from_bindings(params, []);
    match op {
        LogicOp::And => {
            for l in left {
                for r in right {
                    if let Some(j) = l.join(r) {
                        out.insert(j);
                    }
                }
            }
        }
        LogicOp::Or => {
            for b in left.iter().chain(right.iter()) {
                out.insert(b.clone());
            }
        }
        LogicOp::Xor => {
            let shared: BTreeSet<String> = left.params().intersection(right.params()).cloned().collect();
            if shared.is_empty() {
                let only = match (left.is_empty(), right.is_empty()) {
                    (false, true) => Some(left),
                    (true, false) => Some(right),
                    _ => None,
                };
                for b in only.into_iter().flatten() {
                    out.insert(b.clone());
                }
            } else {
                let keys = |set: &BindingSet| -> BTreeSet<Binding> {
                    set.iter().map(|b| b.project(&shared)).collect()
                };
                let (lk, rk) = (keys(left), keys(right));
                for b in left {
                    if !rk.contains(&b.project(&shared)) {
                        out.insert(b.clone());
                    }
                }
                for b in right {
                    if !lk.contains(&b.project(&shared)) {
                        out.insert(b.clone());
                    }
                }
            }
        }
    }
    out
}

/// Left-to-right fold of `combine` over a group's children.
pub fn combine_all<I>(op: LogicOp, mut operands: I) -> Option<BindingSet>
where
    I: Iterator<Item = BindingSet>,
{
    let first = operands.next()?;
    Some(operands.fold(first, |acc, next| combine(op, &acc, &next)))
}
