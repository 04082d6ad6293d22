//! Recursive-descent parser for constraint files.
//!
//! ```text
//! file       := constraint*
//! constraint := "context" ID "inv" ID ":" expr
//! expr       := or ("implies" or)*
//! or         := and ("or" and)*
//! and        := unary ("and" unary)*
//! unary      := "not" unary | cmp
//! cmp        := postfix (("=" | "<>" | "<" | "<=" | ">" | ">=") postfix)?
//! postfix    := atom ("." ID | "->" collop)*
//! collop     := ("size" | "isEmpty" | "notEmpty") "(" ")"
//!             | "includes" "(" expr ")"
//!             | ("exists" | "forAll") "(" ID "|" expr ")"
//! atom       := INT | "-" INT | STRING | "true" | "false" | ID | "(" expr ")"
//! ```

use super::ast::{BoolOp, CmpOp, CollOp, Constraint, Expr, Feature, Literal, Span};
use super::lexer::{tokenize, Tok};
use super::DslError;

const KEYWORDS: &[&str] = &[
    "context", "inv", "and", "or", "not", "implies", "true", "false",
];

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        let span = self.span();
        Err(DslError::Syntax {
            line: span.line,
            column: span.column,
            message: message.into(),
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Span, DslError> {
        if self.at_keyword(kw) {
            Ok(self.advance().1)
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek().describe()))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, DslError> {
        if *self.peek() == tok {
            Ok(self.advance().1)
        } else {
            self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            ))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), DslError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let span = self.advance().1;
                Ok((s, span))
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn constraint(&mut self) -> Result<Constraint, DslError> {
        self.expect_keyword("context")?;
        let (context, span) = self.ident()?;
        self.expect_keyword("inv")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::Colon)?;
        let expr = self.expr()?;
        Ok(Constraint {
            name,
            context,
            expr,
            span,
        })
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.or()?;
        while self.at_keyword("implies") {
            self.advance();
            let rhs = self.or()?;
            lhs = Expr::Bool {
                op: BoolOp::Implies,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.and()?;
        while self.at_keyword("or") {
            self.advance();
            let rhs = self.and()?;
            lhs = Expr::Bool {
                op: BoolOp::Or,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        while self.at_keyword("and") {
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Bool {
                op: BoolOp::And,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.at_keyword("not") {
            self.advance();
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, DslError> {
        let lhs = self.postfix()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        let span = self.advance().1;
        let rhs = self.postfix()?;
        Ok(Expr::Cmp {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            span,
        })
    }

    fn postfix(&mut self) -> Result<Expr, DslError> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Tok::Dot => {
                    self.advance();
                    let (name, span) = self.ident()?;
                    e = Expr::Nav {
                        src: Box::new(e),
                        name,
                        span,
                        feature: Feature::Unresolved,
                    };
                }
                Tok::Arrow => {
                    self.advance();
                    let (opname, span) = self.ident()?;
                    self.expect(Tok::LParen)?;
                    let op = match opname.as_str() {
                        "size" => CollOp::Size,
                        "isEmpty" => CollOp::IsEmpty,
                        "notEmpty" => CollOp::NotEmpty,
                        "includes" => CollOp::Includes(Box::new(self.expr()?)),
                        "exists" | "forAll" => {
                            let (var, _) = self.ident()?;
                            self.expect(Tok::Bar)?;
                            let body = Box::new(self.expr()?);
                            if opname == "exists" {
                                CollOp::Exists { var, body }
                            } else {
                                CollOp::ForAll { var, body }
                            }
                        }
                        other => {
                            return Err(DslError::Syntax {
                                line: span.line,
                                column: span.column,
                                message: format!("unknown collection operation `{other}`"),
                            })
                        }
                    };
                    self.expect(Tok::RParen)?;
                    e = Expr::Coll {
                        src: Box::new(e),
                        op,
                        span,
                    };
                }
                _ => return Ok(e),
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::Lit(Literal::Int(n)))
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.advance();
                        Ok(Expr::Lit(Literal::Int(-n)))
                    }
                    other => self.error(format!(
                        "expected integer after `-`, found {}",
                        other.describe()
                    )),
                }
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Expr::Lit(Literal::Bool(s == "true")))
            }
            Tok::Ident(_) => {
                let (name, span) = self.ident()?;
                Ok(Expr::Var { name, span })
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.error(format!("expected expression, found {}", other.describe())),
        }
    }
}

/// Parses constraint blocks without resolving names against a metamodel.
pub fn parse_unchecked(text: &str) -> Result<Vec<Constraint>, DslError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.constraint()?);
    }
    Ok(out)
}
