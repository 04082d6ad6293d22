//! Two-valued evaluation with an `undefined` bottom, recording read scopes.
//!
//! Navigation through a missing link yields `Undef`. Comparisons and
//! collection operations on `Undef` are false (`->size()` stays `Undef`),
//! and `Undef` in a boolean position collapses to false.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::{BoolOp, CmpOp, CollOp, Constraint, Expr, Feature, Literal};
use crate::model::{EntityId, Model, Value};

/// Entities whose attributes or links were read during one evaluation.
pub type ScopeSet = BTreeSet<EntityId>;

/// Runtime value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Undef,
    Bool(bool),
    Int(i64),
    Str(String),
    Obj(EntityId),
    Coll(Vec<Val>),
}

impl Val {
    pub fn from_value(v: &Value) -> Val {
        match v {
            Value::Bool(b) => Val::Bool(*b),
            Value::Int(i) => Val::Int(*i),
            Value::Str(s) => Val::Str(s.clone()),
        }
    }

    pub fn from_literal(l: &Literal) -> Val {
        match l {
            Literal::Int(i) => Val::Int(*i),
            Literal::Str(s) => Val::Str(s.clone()),
            Literal::Bool(b) => Val::Bool(*b),
        }
    }

    /// The attribute value this denotes, if primitive.
    pub fn to_value(&self) -> Option<Value> {
        match self {
            Val::Bool(b) => Some(Value::Bool(*b)),
            Val::Int(i) => Some(Value::Int(*i)),
            Val::Str(s) => Some(Value::Str(s.clone())),
            _ => None,
        }
    }

    /// Elements when used as the source of a collection operation.
    pub fn elements(&self) -> Option<Vec<Val>> {
        match self {
            Val::Undef => None,
            Val::Coll(items) => Some(items.clone()),
            other => Some(vec![other.clone()]),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Val::Bool(true))
    }
}

/// Compares two runtime values; any `Undef` operand makes the result false.
pub fn compare(op: CmpOp, a: &Val, b: &Val) -> bool {
    use std::cmp::Ordering;
    let ord = match (a, b) {
        (Val::Undef, _) | (_, Val::Undef) => return false,
        (Val::Int(x), Val::Int(y)) => Some(x.cmp(y)),
        (Val::Str(x), Val::Str(y)) => Some(x.cmp(y)),
        (Val::Bool(x), Val::Bool(y)) => Some(x.cmp(y)),
        (Val::Obj(x), Val::Obj(y)) => {
            if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                Some(x.cmp(y))
            } else {
                None
            }
        }
        _ => None,
    };
    let Some(ord) = ord else {
        return false;
    };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    }
}

/// Variable bindings, innermost last.
pub type Env = Vec<(String, Val)>;

/// Expression evaluator over one model snapshot.
pub struct Evaluator<'m> {
    model: &'m Model,
    scope: ScopeSet,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m Model) -> Self {
        Evaluator {
            model,
            scope: ScopeSet::new(),
        }
    }

    pub fn into_scope(self) -> ScopeSet {
        self.scope
    }

    fn read(&mut self, id: &EntityId) {
        if !self.scope.contains(id) {
            self.scope.insert(id.clone());
        }
    }

    /// Evaluates in a boolean position.
    pub fn truth(&mut self, e: &Expr, env: &mut Env) -> bool {
        self.eval(e, env).is_true()
    }

    pub fn eval(&mut self, e: &Expr, env: &mut Env) -> Val {
        match e {
            Expr::Lit(l) => Val::from_literal(l),
            Expr::Var { name, .. } => env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .unwrap_or(Val::Undef),
            Expr::Nav {
                src, name, feature, ..
            } => {
                let base = self.eval(src, env);
                self.navigate(&base, name, feature)
            }
            Expr::Not(inner) => Val::Bool(!self.truth(inner, env)),
            Expr::Bool { op, lhs, rhs } => {
                let l = self.truth(lhs, env);
                let v = match op {
                    BoolOp::And => l && self.truth(rhs, env),
                    BoolOp::Or => l || self.truth(rhs, env),
                    BoolOp::Implies => !l || self.truth(rhs, env),
                };
                Val::Bool(v)
            }
            Expr::Cmp { op, lhs, rhs, .. } => {
                let l = self.eval(lhs, env);
                let r = self.eval(rhs, env);
                Val::Bool(compare(*op, &l, &r))
            }
            Expr::Coll { src, op, .. } => {
                let base = self.eval(src, env);
                let Some(items) = base.elements() else {
                    return match op {
                        CollOp::Size => Val::Undef,
                        _ => Val::Bool(false),
                    };
                };
                match op {
                    CollOp::Size => Val::Int(items.len() as i64),
                    CollOp::IsEmpty => Val::Bool(items.is_empty()),
                    CollOp::NotEmpty => Val::Bool(!items.is_empty()),
                    CollOp::Includes(arg) => {
                        let x = self.eval(arg, env);
                        Val::Bool(items.iter().any(|i| compare(CmpOp::Eq, i, &x)))
                    }
                    CollOp::Exists { var, body } => {
                        let mut found = false;
                        for item in items {
                            env.push((var.clone(), item));
                            let t = self.truth(body, env);
                            env.pop();
                            if t {
                                found = true;
                                break;
                            }
                        }
                        Val::Bool(found)
                    }
                    CollOp::ForAll { var, body } => {
                        let mut all = true;
                        for item in items {
                            env.push((var.clone(), item));
                            let t = self.truth(body, env);
                            env.pop();
                            if !t {
                                all = false;
                                break;
                            }
                        }
                        Val::Bool(all)
                    }
                }
            }
        }
    }

    /// One navigation step from `base`.
    pub fn navigate(&mut self, base: &Val, name: &str, feature: &Feature) -> Val {
        match base {
            Val::Obj(id) => self.step(id, name, feature),
            Val::Coll(items) => {
                let mut out = Vec::new();
                for item in items {
                    match self.navigate(item, name, feature) {
                        Val::Undef => {}
                        Val::Coll(inner) => out.extend(inner),
                        v => out.push(v),
                    }
                }
                Val::Coll(out)
            }
            _ => Val::Undef,
        }
    }

    fn step(&mut self, id: &EntityId, name: &str, feature: &Feature) -> Val {
        let Some(entity) = self.model.entity(id) else {
            return Val::Undef;
        };
        self.read(id);
        match feature {
            Feature::Attribute(_) => entity.attr(name).map(Val::from_value).unwrap_or(Val::Undef),
            Feature::Reference { single: true, .. } => entity
                .links(name)
                .first()
                .map(|t| Val::Obj(t.clone()))
                .unwrap_or(Val::Undef),
            Feature::Reference { single: false, .. } => Val::Coll(
                entity
                    .links(name)
                    .iter()
                    .map(|t| Val::Obj(t.clone()))
                    .collect(),
            ),
            Feature::Unresolved => Val::Undef,
        }
    }
}

/// Outcome of evaluating one constraint on one context entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub holds: bool,
    pub scope: ScopeSet,
}

pub fn evaluate_constraint(c: &Constraint, entity: &EntityId, model: &Model) -> Evaluation {
    let mut ev = Evaluator::new(model);
    ev.read(entity);
    let mut env: Env = vec![("self".to_owned(), Val::Obj(entity.clone()))];
    let holds = ev.truth(&c.expr, &mut env);
    Evaluation {
        holds,
        scope: ev.into_scope(),
    }
}

/// A (constraint, context entity) pair that fails.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub entity: EntityId,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.constraint, self.entity)
    }
}

/// Full evaluation of every constraint on every context instance, in
/// constraint order then entity id order.
pub fn violations_of(model: &Model, cs: &[Constraint]) -> Vec<Violation> {
    let mut out = Vec::new();
    for c in cs {
        for e in model.instances_of(&c.context) {
            if !evaluate_constraint(c, &e.id, model).holds {
                out.push(Violation {
                    constraint: c.name.clone(),
                    entity: e.id.clone(),
                });
            }
        }
    }
    out
}
