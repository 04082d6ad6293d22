//! Plain re-evaluation of constraints and multiplicities, written apart from
//! the engine's evaluator so that checks do not share its code path.

use crate::dsl::{BoolOp, CmpOp, CollOp, Constraint, Expr, Feature, Literal};
use crate::model::{EntityId, Metamodel, Model, Upper, Value};

#[derive(Debug, Clone, PartialEq)]
enum V<'a> {
    Undef,
    B(bool),
    I(i64),
    S(&'a str),
    O(&'a EntityId),
    C(Vec<V<'a>>),
}

fn lit(l: &Literal) -> V<'_> {
    match l {
        Literal::Int(i) => V::I(*i),
        Literal::Str(s) => V::S(s),
        Literal::Bool(b) => V::B(*b),
    }
}

fn of_value(v: &Value) -> V<'_> {
    match v {
        Value::Bool(b) => V::B(*b),
        Value::Int(i) => V::I(*i),
        Value::Str(s) => V::S(s),
    }
}

fn cmp(op: CmpOp, a: &V<'_>, b: &V<'_>) -> bool {
    let ord = match (a, b) {
        (V::I(x), V::I(y)) => x.cmp(y),
        (V::S(x), V::S(y)) => x.cmp(y),
        (V::B(x), V::B(y)) => x.cmp(y),
        (V::O(x), V::O(y)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => x.cmp(y),
        _ => return false,
    };
    match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Ne => ord.is_ne(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
    }
}

struct Ctx<'a> {
    model: &'a Model,
    vars: Vec<(&'a str, V<'a>)>,
}

impl<'a> Ctx<'a> {
    fn holds(&mut self, e: &'a Expr) -> bool {
        self.value(e) == V::B(true)
    }

    fn nav1(&self, id: &EntityId, name: &str, feature: &Feature) -> V<'a> {
        let model: &'a Model = self.model;
        let Some(ent) = model.entity(id) else {
            return V::Undef;
        };
        match feature {
            Feature::Attribute(_) => ent.attrs.get(name).map_or(V::Undef, of_value),
            Feature::Reference { single: true, .. } => match ent.links.get(name) {
                Some(ts) if !ts.is_empty() => V::O(&ts[0]),
                _ => V::Undef,
            },
            Feature::Reference { single: false, .. } => V::C(
                ent.links
                    .get(name)
                    .map(|ts| ts.iter().map(V::O).collect())
                    .unwrap_or_default(),
            ),
            Feature::Unresolved => V::Undef,
        }
    }

    fn nav(&self, base: V<'a>, name: &str, feature: &Feature) -> V<'a> {
        match base {
            V::O(id) => self.nav1(id, name, feature),
            V::C(items) => {
                let mut flat = Vec::new();
                for it in items {
                    match self.nav(it, name, feature) {
                        V::C(more) => flat.extend(more),
                        V::Undef => {}
                        other => flat.push(other),
                    }
                }
                V::C(flat)
            }
            _ => V::Undef,
        }
    }

    fn value(&mut self, e: &'a Expr) -> V<'a> {
        match e {
            Expr::Lit(l) => lit(l),
            Expr::Var { name, .. } => self
                .vars
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map_or(V::Undef, |(_, v)| v.clone()),
            Expr::Nav {
                src, name, feature, ..
            } => {
                let base = self.value(src);
                self.nav(base, name, feature)
            }
            Expr::Not(x) => V::B(!self.holds(x)),
            Expr::Bool { op, lhs, rhs } => {
                let l = self.holds(lhs);
                V::B(match op {
                    BoolOp::And => l && self.holds(rhs),
                    BoolOp::Or => l || self.holds(rhs),
                    BoolOp::Implies => !l || self.holds(rhs),
                })
            }
            Expr::Cmp { op, lhs, rhs, .. } => {
                let l = self.value(lhs);
                let r = self.value(rhs);
                if l == V::Undef || r == V::Undef {
                    return V::B(false);
                }
                V::B(cmp(*op, &l, &r))
            }
            Expr::Coll { src, op, .. } => {
                let items = match self.value(src) {
                    V::Undef => {
                        return if matches!(op, CollOp::Size) {
                            V::Undef
                        } else {
                            V::B(false)
                        }
                    }
                    V::C(items) => items,
                    single => vec![single],
                };
                match op {
                    CollOp::Size => V::I(items.len() as i64),
                    CollOp::IsEmpty => V::B(items.is_empty()),
                    CollOp::NotEmpty => V::B(!items.is_empty()),
                    CollOp::Includes(arg) => {
                        let x = self.value(arg);
                        V::B(x != V::Undef && items.iter().any(|i| cmp(CmpOp::Eq, i, &x)))
                    }
                    CollOp::Exists { var, body } | CollOp::ForAll { var, body } => {
                        let want_any = matches!(op, CollOp::Exists { .. });
                        let mut hits = 0;
                        for it in &items {
                            self.vars.push((var, it.clone()));
                            if self.holds(body) {
                                hits += 1;
                            }
                            self.vars.pop();
                        }
                        V::B(if want_any {
                            hits > 0
                        } else {
                            hits == items.len()
                        })
                    }
                }
            }
        }
    }
}

/// Whether `c` holds on `entity`.
pub fn holds(c: &Constraint, entity: &EntityId, model: &Model) -> bool {
    let mut ctx = Ctx {
        model,
        vars: vec![("self", V::O(entity))],
    };
    ctx.holds(&c.expr)
}

/// Failing `(constraint, entity)` pairs.
pub fn failing(model: &Model, cs: &[Constraint]) -> Vec<(String, EntityId)> {
    let mut out = Vec::new();
    for c in cs {
        for e in model.entities().filter(|e| e.class == c.context) {
            if !holds(c, &e.id, model) {
                out.push((c.name.clone(), e.id.clone()));
            }
        }
    }
    out
}

/// `(entity, reference, count)` triples outside the declared bounds.
pub fn bad_counts(model: &Model, mm: &Metamodel) -> Vec<(EntityId, String, usize)> {
    let mut out = Vec::new();
    for e in model.entities() {
        let Some(class) = mm.classes.iter().find(|c| c.name == e.class) else {
            continue;
        };
        for (r, def) in &class.references {
            let n = e.links.get(r).map_or(0, Vec::len);
            let above = match def.upper {
                Upper::Bounded(u) => n > u as usize,
                Upper::Unbounded => false,
            };
            if n < def.lower as usize || above {
                out.push((e.id.clone(), r.clone(), n));
            }
        }
    }
    out
}

/// No failing constraint and no bad link count.
pub fn consistent(model: &Model, cs: &[Constraint], mm: &Metamodel) -> bool {
    bad_counts(model, mm).is_empty()
        && cs.iter().all(|c| {
            model
                .entities()
                .filter(|e| e.class == c.context)
                .all(|e| holds(c, &e.id, model))
        })
}
