//! Brute-force minimal-cost search over every syntactically valid action.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::reference;
use crate::dsl::{Constraint, Literal};
use crate::model::{
    apply_action, AttrType, Binding, CanonicalKey, ChangeAction, CostConfig, Metamodel, Model,
    Value,
};
use crate::scalar::Scalar;
use crate::search::{is_reverting, ProtectedSlots};

/// Candidate attribute values per type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueUniverse {
    pub strings: BTreeSet<String>,
    pub ints: BTreeSet<i64>,
}

impl ValueUniverse {
    /// Strings: those in the model, those in the constraints, and `""`.
    /// Integers: those in the model and constraints and the counts
    /// `0..=entities+links+depth`, each widened by `±depth`.
    pub fn for_instance(model: &Model, cs: &[Constraint], depth: usize) -> Self {
        let mut strings = BTreeSet::from([String::new()]);
        let mut base = BTreeSet::new();
        let mut links = 0usize;
        for e in model.entities() {
            for v in e.attrs.values() {
                match v {
                    Value::Str(s) => {
                        strings.insert(s.clone());
                    }
                    Value::Int(i) => {
                        base.insert(*i);
                    }
                    Value::Bool(_) => {}
                }
            }
            links += e.links.values().map(Vec::len).sum::<usize>();
        }
        for c in cs {
            for l in c.literals() {
                match l {
                    Literal::Str(s) => {
                        strings.insert(s.clone());
                    }
                    Literal::Int(i) => {
                        base.insert(*i);
                    }
                    Literal::Bool(_) => {}
                }
            }
        }
        base.extend(0..=(model.len() + links + depth) as i64);
        let d = depth as i64;
        let ints = base
            .iter()
            .flat_map(|v| (-d..=d).filter_map(move |k| v.checked_add(k)))
            .collect();
        ValueUniverse { strings, ints }
    }

    fn values(&self, ty: AttrType) -> Vec<Value> {
        match ty {
            AttrType::String => self.strings.iter().cloned().map(Value::Str).collect(),
            AttrType::Int => self.ints.iter().copied().map(Value::Int).collect(),
            AttrType::Bool => vec![Value::Bool(false), Value::Bool(true)],
        }
    }
}

/// Every action that applies to `model`, is not reverting, and changes it.
pub fn all_actions(
    model: &Model,
    mm: &Metamodel,
    universe: &ValueUniverse,
    protected: &ProtectedSlots,
) -> Vec<ChangeAction> {
    let mut out = Vec::new();
    for class in &mm.classes {
        out.push(ChangeAction::create(class.name.clone(), "$o"));
    }
    for e in model.entities() {
        out.push(ChangeAction::Delete {
            entity: e.id.clone(),
        });
        let Some(class) = mm.class(&e.class) else {
            continue;
        };
        for (attr, ty) in &class.attributes {
            for v in universe.values(*ty) {
                if e.attrs.get(attr) != Some(&v) {
                    out.push(ChangeAction::SetAttr {
                        entity: e.id.clone(),
                        attribute: attr.clone(),
                        value: v,
                    });
                }
            }
        }
        for (r, def) in &class.references {
            let linked = e.links.get(r).cloned().unwrap_or_default();
            for t in &linked {
                out.push(ChangeAction::remove_link(
                    e.id.0.clone(),
                    r.clone(),
                    t.0.clone(),
                ));
            }
            for t in model.entities().filter(|t| t.class == def.target) {
                if !linked.contains(&t.id) {
                    out.push(ChangeAction::add_link(
                        e.id.0.clone(),
                        r.clone(),
                        t.id.0.clone(),
                    ));
                }
            }
        }
    }
    out.retain(|a| !is_reverting(a, protected));
    out
}

/// Limits and result of one oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome<S> {
    /// Cheapest goal cost within the bound, if any goal was reached.
    pub min_cost: Option<S>,
    /// An action sequence attaining `min_cost`.
    pub witness: Vec<ChangeAction>,
    /// False when the successor budget ran out before the answer was
    /// certain. `min_cost` is then only an upper bound, if present.
    pub complete: bool,
    /// Expanded states.
    pub states: usize,
    /// Generated successor states.
    pub generated: usize,
}

struct Node<S> {
    g: S,
    seq: u64,
    depth: usize,
    model: Model,
    path: Vec<ChangeAction>,
}

impl<S: Scalar> PartialEq for Node<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Node<S> {}
impl<S: Scalar> PartialOrd for Node<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Node<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .g
            .total_cmp(&self.g)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Dijkstra over all non-reverting action sequences of length at most
/// `depth_bound`. Goals are recognised when generated; the search stops once
/// no open state can lead to a cheaper one. `max_successors` caps the number
/// of successor states generated.
pub fn exhaustive_oracle_bounded<S: Scalar>(
    initial: &Model,
    protected: &ProtectedSlots,
    cs: &[Constraint],
    mm: &Metamodel,
    costs: &CostConfig<S>,
    depth_bound: usize,
    max_successors: usize,
) -> OracleOutcome<S> {
    if reference::consistent(initial, cs, mm) {
        return OracleOutcome {
            min_cost: Some(S::zero()),
            witness: Vec::new(),
            complete: true,
            states: 0,
            generated: 0,
        };
    }
    let Some(c_min) = costs.min_cost() else {
        return OracleOutcome {
            min_cost: None,
            witness: Vec::new(),
            complete: true,
            states: 0,
            generated: 0,
        };
    };
    let universe = ValueUniverse::for_instance(initial, cs, depth_bound);
    let mut best: Option<(S, Vec<ChangeAction>)> = None;
    let mut labels: BTreeMap<CanonicalKey, Vec<(S, usize)>> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut states = 0usize;
    let mut generated = 0usize;
    heap.push(Node {
        g: S::zero(),
        seq,
        depth: 0,
        model: initial.clone(),
        path: Vec::new(),
    });
    while let Some(node) = heap.pop() {
        // Every open state is inconsistent, so any goal below it costs at
        // least one more action.
        if let Some((b, _)) = &best {
            if (node.g.clone() + c_min.clone()).total_cmp(b).is_ge() {
                break;
            }
        }
        if node.depth >= depth_bound {
            continue;
        }
        states += 1;
        if generated > max_successors {
            let (min_cost, witness) = best.map_or((None, Vec::new()), |(g, p)| (Some(g), p));
            return OracleOutcome {
                min_cost,
                witness,
                complete: false,
                states,
                generated,
            };
        }
        for a in all_actions(&node.model, mm, &universe, protected) {
            let Some(c) = costs.cost(&a) else {
                continue;
            };
            let g = node.g.clone() + c;
            if best.as_ref().is_some_and(|(b, _)| g.total_cmp(b).is_ge()) {
                continue;
            }
            let mut binding = Binding::new();
            let Ok(next) = apply_action(&node.model, &a, &mut binding, mm) else {
                continue;
            };
            generated += 1;
            let depth = node.depth + 1;
            let entry = labels.entry(next.canonical_key()).or_default();
            if entry
                .iter()
                .any(|(g0, d0)| g0.total_cmp(&g).is_le() && *d0 <= depth)
            {
                continue;
            }
            entry.retain(|(g0, d0)| !(g.total_cmp(g0).is_le() && depth <= *d0));
            entry.push((g.clone(), depth));
            let concrete = a.map_ids(|id| binding.get(id).cloned().unwrap_or_else(|| id.clone()));
            let mut path = node.path.clone();
            path.push(concrete);
            if reference::consistent(&next, cs, mm) {
                best = Some((g, path));
                continue;
            }
            seq += 1;
            heap.push(Node {
                g,
                seq,
                depth,
                model: next,
                path,
            });
        }
    }
    let (min_cost, witness) = match best {
        Some((g, path)) => (Some(g), path),
        None => (None, Vec::new()),
    };
    OracleOutcome {
        min_cost,
        witness,
        complete: true,
        states,
        generated,
    }
}

/// Minimal cost of any non-reverting action sequence of length at most
/// `depth_bound` that reaches a consistent, well-formed state.
pub fn exhaustive_oracle<S: Scalar>(
    initial: &Model,
    protected: &ProtectedSlots,
    cs: &[Constraint],
    mm: &Metamodel,
    costs: &CostConfig<S>,
    depth_bound: usize,
) -> Option<S> {
    exhaustive_oracle_bounded(initial, protected, cs, mm, costs, depth_bound, usize::MAX).min_cost
}
