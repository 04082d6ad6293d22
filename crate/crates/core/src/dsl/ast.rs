use std::fmt;

use crate::model::AttrType;

/// Source position (1-based). Positions never take part in AST equality.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(i64),
    Str(String),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    Implies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// What a navigation step resolves to, filled in by the checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feature {
    Unresolved,
    Attribute(AttrType),
    Reference { target: String, single: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CollOp {
    Size,
    IsEmpty,
    NotEmpty,
    Includes(Box<Expr>),
    Exists { var: String, body: Box<Expr> },
    ForAll { var: String, body: Box<Expr> },
}

impl CollOp {
    pub fn name(&self) -> &'static str {
        match self {
            CollOp::Size => "size",
            CollOp::IsEmpty => "isEmpty",
            CollOp::NotEmpty => "notEmpty",
            CollOp::Includes(_) => "includes",
            CollOp::Exists { .. } => "exists",
            CollOp::ForAll { .. } => "forAll",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Literal),
    Var {
        name: String,
        span: Span,
    },
    Nav {
        src: Box<Expr>,
        name: String,
        span: Span,
        feature: Feature,
    },
    Not(Box<Expr>),
    Bool {
        op: BoolOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Cmp {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        span: Span,
    },
    Coll {
        src: Box<Expr>,
        op: CollOp,
        span: Span,
    },
}

/// `context <class> inv <name>: <expr>`
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub context: String,
    pub expr: Expr,
    pub span: Span,
}

impl Constraint {
    /// String and integer literals occurring in the expression.
    pub fn literals(&self) -> Vec<&Literal> {
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Literal>) {
            match e {
                Expr::Lit(l) => out.push(l),
                Expr::Var { .. } => {}
                Expr::Nav { src, .. } => walk(src, out),
                Expr::Not(inner) => walk(inner, out),
                Expr::Bool { lhs, rhs, .. } | Expr::Cmp { lhs, rhs, .. } => {
                    walk(lhs, out);
                    walk(rhs, out);
                }
                Expr::Coll { src, op, .. } => {
                    walk(src, out);
                    match op {
                        CollOp::Includes(arg) => walk(arg, out),
                        CollOp::Exists { body, .. } | CollOp::ForAll { body, .. } => {
                            walk(body, out)
                        }
                        _ => {}
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.expr, &mut out);
        out
    }
}
