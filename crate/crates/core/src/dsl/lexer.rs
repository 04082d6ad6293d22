use super::ast::Span;
use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Dot,
    Arrow,
    LParen,
    RParen,
    Bar,
    Colon,
    Minus,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`<>`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, Span)>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        let next = chars.get(i + 1).copied();
        match c {
            c if c.is_whitespace() => bump!(),
            '-' if next == Some('-') => {
                while i < chars.len() && chars[i] != '\n' {
                    bump!();
                }
            }
            '-' if next == Some('>') => {
                bump!();
                bump!();
                out.push((Tok::Arrow, span));
            }
            '-' => {
                bump!();
                out.push((Tok::Minus, span));
            }
            '.' => {
                bump!();
                out.push((Tok::Dot, span));
            }
            '(' => {
                bump!();
                out.push((Tok::LParen, span));
            }
            ')' => {
                bump!();
                out.push((Tok::RParen, span));
            }
            '|' => {
                bump!();
                out.push((Tok::Bar, span));
            }
            ':' => {
                bump!();
                out.push((Tok::Colon, span));
            }
            '=' => {
                bump!();
                out.push((Tok::Eq, span));
            }
            '<' => {
                bump!();
                match chars.get(i) {
                    Some('>') => {
                        bump!();
                        out.push((Tok::Ne, span));
                    }
                    Some('=') => {
                        bump!();
                        out.push((Tok::Le, span));
                    }
                    _ => out.push((Tok::Lt, span)),
                }
            }
            '>' => {
                bump!();
                if chars.get(i) == Some(&'=') {
                    bump!();
                    out.push((Tok::Ge, span));
                } else {
                    out.push((Tok::Gt, span));
                }
            }
            '\'' | '"' => {
                let quote = c;
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i).copied() {
                        None | Some('\n') => {
                            return Err(DslError::Syntax {
                                line: span.line,
                                column: span.column,
                                message: "unterminated string literal".into(),
                            })
                        }
                        Some(ch) if ch == quote => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            let esc = chars.get(i).copied().ok_or(DslError::Syntax {
                                line,
                                column: col,
                                message: "unterminated escape".into(),
                            })?;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                            bump!();
                        }
                        Some(ch) => {
                            s.push(ch);
                            bump!();
                        }
                    }
                }
                out.push((Tok::Str(s), span));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    bump!();
                }
                let n = s.parse().map_err(|_| DslError::Syntax {
                    line: span.line,
                    column: span.column,
                    message: format!("integer literal {s} out of range"),
                })?;
                out.push((Tok::Int(n), span));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    bump!();
                }
                out.push((Tok::Ident(s), span));
            }
            other => {
                return Err(DslError::Syntax {
                    line: span.line,
                    column: span.column,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    out.push((Tok::Eof, Span { line, column: col }));
    Ok(out)
}
