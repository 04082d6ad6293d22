//! Candidate repair actions derived from a failing constraint and the metamodel.
//!
//! The constraint AST is walked with the truth value each subexpression
//! should move towards. Attribute comparisons yield `SetAttr` candidates whose
//! values are read off the other side of the comparison; reference
//! navigations yield `AddLink`/`RemoveLink`/`Create` candidates in the
//! direction (grow or shrink) that can flip the enclosing collection
//! operation. Each candidate is a single primitive: multi-step fixes arise
//! from search depth.

use std::collections::{BTreeMap, BTreeSet};

use crate::dsl::{
    compare, BoolOp, CmpOp, CollOp, Constraint, Env, Evaluator, Expr, Feature, Literal, Val,
    Violation,
};
use crate::model::{
    apply_action, Binding, ChangeAction, EntityId, Metamodel, Model, MultiplicityViolation, Value,
};
use crate::search::{is_reverting, ProtectedSlots};

/// A proposed action and the AST node or rule it targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairCandidate {
    pub action: ChangeAction,
    pub rationale: String,
}

/// Placeholder used by `Create` candidates.
pub const CREATE_PLACEHOLDER: &str = "$n1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Want {
    True,
    False,
    Either,
}

impl Want {
    fn flip(self) -> Want {
        match self {
            Want::True => Want::False,
            Want::False => Want::True,
            Want::Either => Want::Either,
        }
    }

    fn satisfied_by(self, truth: bool) -> bool {
        match self {
            Want::True => truth,
            Want::False => !truth,
            Want::Either => false,
        }
    }
}

/// Which way a navigated collection should change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Growth {
    Grow,
    Shrink,
    Both,
}

impl Growth {
    fn grows(self) -> bool {
        matches!(self, Growth::Grow | Growth::Both)
    }

    fn shrinks(self) -> bool {
        matches!(self, Growth::Shrink | Growth::Both)
    }
}

struct Generator<'a> {
    model: &'a Model,
    strings: BTreeSet<String>,
    out: BTreeMap<ChangeAction, String>,
}

fn objects(v: &Val) -> Vec<EntityId> {
    match v {
        Val::Obj(id) => vec![id.clone()],
        Val::Coll(items) => items
            .iter()
            .filter_map(|i| match i {
                Val::Obj(id) => Some(id.clone()),
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn flip_cmp(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        CmpOp::Gt => CmpOp::Lt,
        CmpOp::Ge => CmpOp::Le,
        other => other,
    }
}

impl Generator<'_> {
    fn eval(&self, e: &Expr, env: &mut Env) -> Val {
        Evaluator::new(self.model).eval(e, env)
    }

    fn emit(&mut self, action: ChangeAction, why: impl FnOnce() -> String) {
        self.out.entry(action).or_insert_with(why);
    }

    /// Values for an attribute on the left of `op` against `other` that give
    /// the wanted comparison outcome.
    fn values_for(&self, current: &Value, op: CmpOp, other: &Val, want: Want) -> Vec<Value> {
        let pool: Vec<Value> = match other {
            Val::Int(k) => [k.checked_sub(1), Some(*k), k.checked_add(1)]
                .into_iter()
                .flatten()
                .map(Value::Int)
                .collect(),
            Val::Str(s) => {
                let mut p: BTreeSet<String> = self.strings.clone();
                p.insert(s.clone());
                p.into_iter().map(Value::Str).collect()
            }
            Val::Bool(_) => vec![Value::Bool(false), Value::Bool(true)],
            _ => Vec::new(),
        };
        pool.into_iter()
            .filter(|v| v != current && v.attr_type() == current.attr_type())
            .filter(|v| {
                let outcome = compare(op, &Val::from_value(v), other);
                match want {
                    Want::True => outcome,
                    Want::False => !outcome,
                    Want::Either => true,
                }
            })
            .collect()
    }

    /// `SetAttr` candidates for `side` (an attribute navigation) compared by
    /// `op` against `other`.
    fn attr_side(&mut self, side: &Expr, op: CmpOp, other: &Val, want: Want, env: &mut Env) {
        let Expr::Nav {
            src,
            name,
            feature: Feature::Attribute(_),
            ..
        } = side
        else {
            return;
        };
        let base = self.eval(src, env);
        for id in objects(&base) {
            let Some(current) = self.model.entity(&id).and_then(|e| e.attr(name)).cloned() else {
                continue;
            };
            for v in self.values_for(&current, op, other, want) {
                let action = ChangeAction::SetAttr {
                    entity: id.clone(),
                    attribute: name.clone(),
                    value: v,
                };
                self.emit(action, || format!("comparison on `.{name}`"));
            }
        }
    }

    fn visit_bool(&mut self, e: &Expr, env: &mut Env, want: Want) {
        if want != Want::Either {
            let truth = Evaluator::new(self.model).truth(e, env);
            if want.satisfied_by(truth) {
                return;
            }
        }
        match e {
            Expr::Lit(_) | Expr::Var { .. } => {}
            Expr::Not(inner) => self.visit_bool(inner, env, want.flip()),
            Expr::Bool { op, lhs, rhs } => {
                let (lw, rw) = match (op, want) {
                    (_, Want::Either) => (Want::Either, Want::Either),
                    (BoolOp::And | BoolOp::Or, w) => (w, w),
                    (BoolOp::Implies, w) => (w.flip(), w),
                };
                self.visit_bool(lhs, env, lw);
                self.visit_bool(rhs, env, rw);
            }
            Expr::Cmp { op, lhs, rhs, .. } => {
                let lv = self.eval(lhs, env);
                let rv = self.eval(rhs, env);
                self.attr_side(lhs, *op, &rv, want, env);
                self.attr_side(rhs, flip_cmp(*op), &lv, want, env);
                self.visit_val(lhs, env, Growth::Both);
                self.visit_val(rhs, env, Growth::Both);
            }
            Expr::Nav {
                src,
                name,
                feature: Feature::Attribute(_),
                ..
            } => {
                // Boolean attribute used directly as a condition.
                let base = self.eval(src, env);
                let target = match want {
                    Want::True => vec![true],
                    Want::False => vec![false],
                    Want::Either => vec![true, false],
                };
                for id in objects(&base) {
                    for b in &target {
                        let action = ChangeAction::SetAttr {
                            entity: id.clone(),
                            attribute: name.clone(),
                            value: Value::Bool(*b),
                        };
                        self.emit(action, || format!("boolean attribute `.{name}`"));
                    }
                }
                self.visit_val(src, env, Growth::Both);
            }
            Expr::Nav { .. } => {}
            Expr::Coll { src, op, .. } => self.visit_coll(e, src, op, env, want),
        }
    }

    fn visit_coll(&mut self, whole: &Expr, src: &Expr, op: &CollOp, env: &mut Env, want: Want) {
        let growth = match (op, want) {
            (_, Want::Either) | (CollOp::Size, _) => Growth::Both,
            (CollOp::NotEmpty | CollOp::Includes(_) | CollOp::Exists { .. }, Want::True) => {
                Growth::Grow
            }
            (CollOp::NotEmpty | CollOp::Includes(_) | CollOp::Exists { .. }, Want::False) => {
                Growth::Shrink
            }
            (CollOp::IsEmpty | CollOp::ForAll { .. }, Want::True) => Growth::Shrink,
            (CollOp::IsEmpty | CollOp::ForAll { .. }, Want::False) => Growth::Grow,
        };
        self.visit_val(src, env, growth);
        match op {
            CollOp::Size | CollOp::IsEmpty | CollOp::NotEmpty => {}
            CollOp::Includes(arg) => {
                self.visit_val(arg, env, Growth::Both);
                // `x.attr->includes(v)`: give a member the wanted value.
                if want != Want::False {
                    if let Expr::Nav {
                        src: owner,
                        name,
                        feature: Feature::Attribute(_),
                        ..
                    } = src
                    {
                        let argv = self.eval(arg, env);
                        if let Some(value) = argv.to_value() {
                            let base = self.eval(owner, env);
                            for id in objects(&base) {
                                let action = ChangeAction::SetAttr {
                                    entity: id,
                                    attribute: name.clone(),
                                    value: value.clone(),
                                };
                                self.emit(action, || format!("`->includes` over `.{name}`"));
                            }
                        }
                    }
                }
            }
            CollOp::Exists { var, body } | CollOp::ForAll { var, body } => {
                let is_exists = matches!(op, CollOp::Exists { .. });
                let base = self.eval(src, env);
                let members = base.elements().unwrap_or_default();
                let body_want = want;
                // Bindings whose body must change: for exists→true and
                // forAll→false every member; otherwise members currently on
                // the wrong side.
                let all_members = matches!(
                    (is_exists, want),
                    (true, Want::True) | (false, Want::False) | (_, Want::Either)
                );
                for m in &members {
                    env.push((var.clone(), m.clone()));
                    if all_members
                        || !body_want.satisfied_by(Evaluator::new(self.model).truth(body, env))
                    {
                        self.visit_bool(body, env, body_want);
                    }
                    env.pop();
                }
                // Entities that could join the collection.
                if growth.grows() {
                    if let Expr::Nav {
                        feature: Feature::Reference { target, .. },
                        ..
                    } = src
                    {
                        let present: BTreeSet<EntityId> =
                            objects(&Val::Coll(members)).into_iter().collect();
                        let outsiders: Vec<EntityId> = self
                            .model
                            .instances_of(target)
                            .map(|e| e.id.clone())
                            .filter(|id| !present.contains(id))
                            .collect();
                        for id in outsiders {
                            env.push((var.clone(), Val::Obj(id)));
                            self.visit_bool(body, env, body_want);
                            env.pop();
                        }
                    }
                }
                let _ = whole;
            }
        }
    }

    fn visit_val(&mut self, e: &Expr, env: &mut Env, growth: Growth) {
        match e {
            Expr::Lit(_) | Expr::Var { .. } => {}
            Expr::Nav {
                src,
                name,
                feature: Feature::Reference { target, single },
                ..
            } => {
                let base = self.eval(src, env);
                for s in objects(&base) {
                    let Some(entity) = self.model.entity(&s) else {
                        continue;
                    };
                    let linked = entity.links(name).to_vec();
                    let (grow, shrink) = if *single {
                        // A set single-valued reference can only be retargeted
                        // by removing the current link first.
                        (linked.is_empty() && growth.grows(), !linked.is_empty())
                    } else {
                        (growth.grows(), growth.shrinks())
                    };
                    if grow {
                        let targets: Vec<EntityId> = self
                            .model
                            .instances_of(target)
                            .map(|t| t.id.clone())
                            .filter(|t| !linked.contains(t))
                            .collect();
                        for t in targets {
                            let action = ChangeAction::AddLink {
                                source: s.clone(),
                                reference: name.clone(),
                                target: t,
                                position: None,
                            };
                            self.emit(action, || format!("grow `.{name}`"));
                        }
                        let action = ChangeAction::create(target.clone(), CREATE_PLACEHOLDER);
                        self.emit(action, || format!("new `{target}` for `.{name}`"));
                    }
                    if shrink {
                        for t in &linked {
                            let action = ChangeAction::RemoveLink {
                                source: s.clone(),
                                reference: name.clone(),
                                target: t.clone(),
                            };
                            self.emit(action, || format!("shrink `.{name}`"));
                        }
                    }
                }
                self.visit_val(src, env, growth);
            }
            Expr::Nav { src, .. } => self.visit_val(src, env, Growth::Both),
            Expr::Coll {
                src,
                op: CollOp::Size,
                ..
            } => self.visit_val(src, env, Growth::Both),
            Expr::Coll { .. } | Expr::Not(_) | Expr::Bool { .. } | Expr::Cmp { .. } => {
                self.visit_bool(e, env, Want::Either)
            }
        }
    }
}

fn string_domain(model: &Model, literals: &[&Literal]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.insert(String::new());
    for e in model.entities() {
        for v in e.attrs.values() {
            if let Value::Str(s) = v {
                out.insert(s.clone());
            }
        }
    }
    for l in literals {
        if let Literal::Str(s) = l {
            out.insert(s.clone());
        }
    }
    out
}

/// Candidate order: kind rank, then target ids.
pub(crate) fn sort_key(a: &ChangeAction) -> (u8, Vec<String>, ChangeAction) {
    (
        a.kind().candidate_rank(),
        a.ids().into_iter().map(|id| id.0.clone()).collect(),
        a.clone(),
    )
}

/// Drops candidates that fail to apply, change nothing, or revert the
/// primary change; orders the rest by kind then target ids.
fn finish(
    raw: BTreeMap<ChangeAction, String>,
    model: &Model,
    mm: &Metamodel,
    protected: &ProtectedSlots,
) -> Vec<RepairCandidate> {
    let mut out: Vec<RepairCandidate> = raw
        .into_iter()
        .filter(|(a, _)| !is_reverting(a, protected))
        .filter(|(a, _)| {
            if let ChangeAction::SetAttr {
                entity,
                attribute,
                value,
            } = a
            {
                if model.entity(entity).and_then(|e| e.attr(attribute)) == Some(value) {
                    return false;
                }
            }
            apply_action(model, a, &mut Binding::new(), mm).is_ok()
        })
        .map(|(action, rationale)| RepairCandidate { action, rationale })
        .collect();
    out.sort_by_cached_key(|c| sort_key(&c.action));
    out
}

/// Candidate single-action repairs for one failing (constraint, entity) pair.
pub fn generate_repairs(
    violation: &Violation,
    constraint: &Constraint,
    model: &Model,
    mm: &Metamodel,
    protected: &ProtectedSlots,
) -> Vec<RepairCandidate> {
    generate_repairs_with(violation, constraint, model, mm, protected, &[])
}

/// As [`generate_repairs`], with string literals from other constraints
/// added to the candidate values.
pub fn generate_repairs_with(
    violation: &Violation,
    constraint: &Constraint,
    model: &Model,
    mm: &Metamodel,
    protected: &ProtectedSlots,
    extra: &[&Literal],
) -> Vec<RepairCandidate> {
    debug_assert_eq!(violation.constraint, constraint.name);
    let mut literals = constraint.literals();
    literals.extend_from_slice(extra);
    let mut gen = Generator {
        model,
        strings: string_domain(model, &literals),
        out: BTreeMap::new(),
    };
    let mut env: Env = vec![("self".to_owned(), Val::Obj(violation.entity.clone()))];
    gen.visit_bool(&constraint.expr, &mut env, Want::True);
    if model.contains(&violation.entity) && !model.has_incident_links(&violation.entity) {
        gen.emit(
            ChangeAction::Delete {
                entity: violation.entity.clone(),
            },
            || "remove the violating context entity".into(),
        );
    }
    finish(gen.out, model, mm, protected)
}

/// Candidate repairs for a link count outside its multiplicity bounds.
pub fn multiplicity_repairs(
    violation: &MultiplicityViolation,
    model: &Model,
    mm: &Metamodel,
    protected: &ProtectedSlots,
) -> Vec<RepairCandidate> {
    let mut raw = BTreeMap::new();
    let Some(entity) = model.entity(&violation.entity) else {
        return Vec::new();
    };
    let linked = entity.links(&violation.reference);
    if violation.below_lower() {
        if let Some(rdef) = mm.reference(&entity.class, &violation.reference) {
            for t in model.instances_of(&rdef.target) {
                if !linked.contains(&t.id) {
                    raw.insert(
                        ChangeAction::AddLink {
                            source: entity.id.clone(),
                            reference: violation.reference.clone(),
                            target: t.id.clone(),
                            position: None,
                        },
                        "raise link count".to_owned(),
                    );
                }
            }
            raw.insert(
                ChangeAction::create(rdef.target.clone(), CREATE_PLACEHOLDER),
                "new link target".to_owned(),
            );
        }
        if !model.has_incident_links(&entity.id) {
            raw.insert(
                ChangeAction::Delete {
                    entity: entity.id.clone(),
                },
                "remove the under-linked entity".to_owned(),
            );
        }
    } else {
        for t in linked {
            raw.insert(
                ChangeAction::RemoveLink {
                    source: entity.id.clone(),
                    reference: violation.reference.clone(),
                    target: t.clone(),
                },
                "lower link count".to_owned(),
            );
        }
    }
    finish(raw, model, mm, protected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{evaluate_constraint, parse_constraint_file};
    use crate::fixtures;
    use crate::model::apply_script;

    fn f1_after_rename() -> (fixtures::Fixture, Model, ProtectedSlots) {
        let f = fixtures::F1.load();
        let (p, m) = ProtectedSlots::from_primary(&f.model, &f.changes, &f.metamodel).unwrap();
        (f, m, p)
    }

    fn actions(cands: &[RepairCandidate]) -> Vec<String> {
        cands.iter().map(|c| c.action.to_string()).collect()
    }

    #[test]
    fn f1_candidates_with_primary_protected() {
        let (f, m, p) = f1_after_rename();
        let v = Violation {
            constraint: "nameMatch".into(),
            entity: "m1".into(),
        };
        let got = actions(&generate_repairs(
            &v,
            &f.constraints[0],
            &m,
            &f.metamodel,
            &p,
        ));
        assert_eq!(
            got,
            vec![
                r#"SetAttr(op1,name,"debit")"#,
                "RemoveLink(m1,receiver,a1)",
                "Create(Operation,$n1)",
            ]
        );
    }

    #[test]
    fn f1_candidates_without_protection_include_revert() {
        let (f, m, _) = f1_after_rename();
        let v = Violation {
            constraint: "nameMatch".into(),
            entity: "m1".into(),
        };
        let got = actions(&generate_repairs(
            &v,
            &f.constraints[0],
            &m,
            &f.metamodel,
            &ProtectedSlots::default(),
        ));
        assert!(got.contains(&r#"SetAttr(m1,name,"withdraw")"#.to_string()));
        assert!(got.contains(&r#"SetAttr(op1,name,"debit")"#.to_string()));
    }

    #[test]
    fn f1_after_create_offers_link_and_name_for_new_operation() {
        let (f, m, p) = f1_after_rename();
        let (m2, _) = apply_script(
            &m,
            &[ChangeAction::create("Operation", "$n1")],
            &f.metamodel,
        )
        .unwrap();
        let v = Violation {
            constraint: "nameMatch".into(),
            entity: "m1".into(),
        };
        let got = actions(&generate_repairs(
            &v,
            &f.constraints[0],
            &m2,
            &f.metamodel,
            &p,
        ));
        assert!(
            got.contains(&r#"SetAttr(_c0,name,"debit")"#.to_string()),
            "{got:?}"
        );
        assert!(got.contains(&"AddLink(a1,ops,_c0)".to_string()), "{got:?}");
    }

    #[test]
    fn size_constraint_only_grows() {
        let f = fixtures::F1.load();
        let cs = parse_constraint_file(
            "context Class inv hasOps: self.ops->size() >= 1",
            &f.metamodel,
        )
        .unwrap();
        let (m, _) = apply_script(
            &f.model,
            &[ChangeAction::remove_link("a1", "ops", "op1")],
            &f.metamodel,
        )
        .unwrap();
        assert!(!evaluate_constraint(&cs[0], &"a1".into(), &m).holds);
        let v = Violation {
            constraint: "hasOps".into(),
            entity: "a1".into(),
        };
        let got = generate_repairs(&v, &cs[0], &m, &f.metamodel, &ProtectedSlots::default());
        assert!(got
            .iter()
            .all(|c| !matches!(c.action, ChangeAction::SetAttr { .. })));
        let kinds: Vec<String> = actions(&got);
        assert!(kinds.contains(&"AddLink(a1,ops,op1)".to_string()));
        assert!(kinds.contains(&"Create(Operation,$n1)".to_string()));
    }

    #[test]
    fn candidates_are_deterministic_and_unique() {
        let (f, m, p) = f1_after_rename();
        let v = Violation {
            constraint: "nameMatch".into(),
            entity: "m1".into(),
        };
        let a = generate_repairs(&v, &f.constraints[0], &m, &f.metamodel, &p);
        let b = generate_repairs(&v, &f.constraints[0], &m, &f.metamodel, &p);
        assert_eq!(a, b);
        let set: BTreeSet<_> = a.iter().map(|c| c.action.clone()).collect();
        assert_eq!(set.len(), a.len());
    }

    #[test]
    fn multiplicity_repairs_cover_both_directions() {
        let f = fixtures::F1.load();
        let (m, _) = apply_script(
            &f.model,
            &[ChangeAction::remove_link("m1", "receiver", "a1")],
            &f.metamodel,
        )
        .unwrap();
        let wf = crate::model::check_wellformed(&m, &f.metamodel);
        assert_eq!(wf.len(), 1);
        let got = actions(&multiplicity_repairs(
            &wf[0],
            &m,
            &f.metamodel,
            &ProtectedSlots::default(),
        ));
        assert_eq!(
            got,
            vec!["AddLink(m1,receiver,a1)", "Create(Class,$n1)", "Delete(m1)"]
        );
    }
}
