//! Name resolution and typing of parsed constraints against a metamodel.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::{CmpOp, CollOp, Constraint, Expr, Feature, Literal, Span};
use super::DslError;
use crate::model::{AttrType, Metamodel};

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Int,
    Str,
    Obj(String),
    Coll(Box<Ty>),
}

impl Ty {
    fn of_attr(t: AttrType) -> Ty {
        match t {
            AttrType::String => Ty::Str,
            AttrType::Int => Ty::Int,
            AttrType::Bool => Ty::Bool,
        }
    }

    /// Element type when used as the source of `->op`.
    fn element(&self) -> Option<Ty> {
        match self {
            Ty::Coll(inner) => Some((**inner).clone()),
            Ty::Obj(_) => Some(self.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => f.write_str("bool"),
            Ty::Int => f.write_str("int"),
            Ty::Str => f.write_str("string"),
            Ty::Obj(c) => f.write_str(c),
            Ty::Coll(t) => write!(f, "collection of {t}"),
        }
    }
}

fn type_error<T>(span: Span, message: String) -> Result<T, DslError> {
    Err(DslError::Type {
        line: span.line,
        column: span.column,
        message,
    })
}

struct Checker<'a> {
    mm: &'a Metamodel,
    env: Vec<(String, Ty)>,
}

impl Checker<'_> {
    fn check(&mut self, e: &mut Expr, at: Span) -> Result<Ty, DslError> {
        match e {
            Expr::Lit(Literal::Int(_)) => Ok(Ty::Int),
            Expr::Lit(Literal::Str(_)) => Ok(Ty::Str),
            Expr::Lit(Literal::Bool(_)) => Ok(Ty::Bool),
            Expr::Var { name, span } => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| DslError::UnknownVariable {
                    name: name.clone(),
                    line: span.line,
                    column: span.column,
                }),
            Expr::Nav {
                src,
                name,
                span,
                feature,
            } => {
                let src_ty = self.check(src, *span)?;
                let (class, many) = match &src_ty {
                    Ty::Obj(c) => (c.clone(), false),
                    Ty::Coll(inner) => match &**inner {
                        Ty::Obj(c) => (c.clone(), true),
                        other => {
                            return type_error(
                                *span,
                                format!("cannot navigate `.{name}` on a collection of {other}"),
                            )
                        }
                    },
                    other => {
                        return type_error(*span, format!("cannot navigate `.{name}` on {other}"))
                    }
                };
                let cdef = self.mm.class(&class).expect("typed classes exist");
                if let Some(t) = cdef.attributes.get(name.as_str()) {
                    *feature = Feature::Attribute(*t);
                    let ty = Ty::of_attr(*t);
                    Ok(if many { Ty::Coll(Box::new(ty)) } else { ty })
                } else if let Some(r) = cdef.references.get(name.as_str()) {
                    *feature = Feature::Reference {
                        target: r.target.clone(),
                        single: r.is_single(),
                    };
                    let obj = Ty::Obj(r.target.clone());
                    Ok(if many || !r.is_single() {
                        Ty::Coll(Box::new(obj))
                    } else {
                        obj
                    })
                } else {
                    Err(DslError::UnknownFeature {
                        class,
                        name: name.clone(),
                        line: span.line,
                        column: span.column,
                    })
                }
            }
            Expr::Not(inner) => {
                let t = self.check(inner, at)?;
                if t != Ty::Bool {
                    return type_error(at, format!("`not` expects bool, got {t}"));
                }
                Ok(Ty::Bool)
            }
            Expr::Bool { op, lhs, rhs } => {
                for side in [lhs, rhs] {
                    let t = self.check(side, at)?;
                    if t != Ty::Bool {
                        return type_error(at, format!("`{op:?}` expects bool operands, got {t}"));
                    }
                }
                Ok(Ty::Bool)
            }
            Expr::Cmp { op, lhs, rhs, span } => {
                let lt = self.check(lhs, *span)?;
                let rt = self.check(rhs, *span)?;
                if lt != rt {
                    return type_error(
                        *span,
                        format!("cannot compare {lt} with {rt} using `{}`", op.symbol()),
                    );
                }
                let ok = match op {
                    CmpOp::Eq | CmpOp::Ne => !matches!(lt, Ty::Coll(_)),
                    _ => matches!(lt, Ty::Int | Ty::Str),
                };
                if !ok {
                    return type_error(*span, format!("`{}` is not defined on {lt}", op.symbol()));
                }
                Ok(Ty::Bool)
            }
            Expr::Coll { src, op, span } => {
                let src_ty = self.check(src, *span)?;
                let elem = src_ty.element().ok_or_else(|| DslError::Type {
                    line: span.line,
                    column: span.column,
                    message: format!("`->{}` needs a collection, got {src_ty}", op.name()),
                })?;
                match op {
                    CollOp::Size => Ok(Ty::Int),
                    CollOp::IsEmpty | CollOp::NotEmpty => Ok(Ty::Bool),
                    CollOp::Includes(arg) => {
                        let at = self.check(arg, *span)?;
                        if at != elem {
                            return type_error(
                                *span,
                                format!("`->includes` over {elem} given {at}"),
                            );
                        }
                        Ok(Ty::Bool)
                    }
                    CollOp::Exists { var, body } | CollOp::ForAll { var, body } => {
                        self.env.push((var.clone(), elem));
                        let t = self.check(body, *span);
                        self.env.pop();
                        let t = t?;
                        if t != Ty::Bool {
                            return type_error(
                                *span,
                                format!("`->{}` body must be bool, got {t}", op.name()),
                            );
                        }
                        Ok(Ty::Bool)
                    }
                }
            }
        }
    }
}

/// Resolves features and type-checks every constraint in place.
pub fn check_constraints(cs: &mut [Constraint], mm: &Metamodel) -> Result<(), DslError> {
    let mut names = BTreeSet::new();
    for c in cs.iter_mut() {
        if mm.class(&c.context).is_none() {
            return Err(DslError::UnknownClass {
                name: c.context.clone(),
                line: c.span.line,
                column: c.span.column,
            });
        }
        if !names.insert(c.name.clone()) {
            return Err(DslError::DuplicateName {
                name: c.name.clone(),
                line: c.span.line,
                column: c.span.column,
            });
        }
        let mut checker = Checker {
            mm,
            env: vec![("self".to_owned(), Ty::Obj(c.context.clone()))],
        };
        let t = checker.check(&mut c.expr, c.span)?;
        if t != Ty::Bool {
            return type_error(
                c.span,
                format!("invariant `{}` must be boolean, got {t}", c.name),
            );
        }
    }
    Ok(())
}
