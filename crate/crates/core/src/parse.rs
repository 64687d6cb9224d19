//! Lexer and recursive-descent parser for processes, types and workspaces.

use thiserror::Error;

use crate::ast::{Chan, Expr, Process, Role, Subject};
use crate::types::{BinaryType, Exchange, GlobalType, LocalType, Sort};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u32),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: [&str; 22] = [
    "(+)", "->", "==", "~", "[", "]", "(", ")", "{", "}", "<", ">", "!", "?", ".", ",", ":", ";",
    "|", "&", "=", "*",
];

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '#' || c == '%'
}

fn ident_cont(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '#' || c == '%'
}

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let n = text.parse::<u32>().map_err(|_| ParseError {
                line,
                col,
                message: format!("integer {text} out of range"),
            })?;
            out.push(Token {
                tok: Tok::Int(n),
                line,
                col: start_col,
            });
            col += j - i;
            i = j;
            continue;
        }
        if ident_start(c) {
            let mut j = i;
            while j < chars.len() && ident_cont(chars[j]) {
                j += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[i..j].iter().collect()),
                line,
                col: start_col,
            });
            col += j - i;
            i = j;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(*s)) {
            Some(s) => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    line,
                    col: start_col,
                });
                i += s.len();
                col += s.len();
            }
            None => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unexpected character {c:?}"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Variables bound by enclosing request/accept/receive prefixes.
    bound: Vec<String>,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            bound: Vec::new(),
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub(crate) fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", describe(self.peek())))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.error(format!("expected identifier, found {}", describe(&t))),
        }
    }

    pub(crate) fn int(&mut self) -> Result<u32, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            t => self.error(format!("expected integer, found {}", describe(&t))),
        }
    }

    fn role(&mut self) -> Result<Role, ParseError> {
        let n = self.int()?;
        if n == 0 {
            return self.error("participant numbers start at 1");
        }
        Ok(n)
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            self.error(format!("unexpected {}", describe(self.peek())))
        }
    }

    fn is_bound(&self, x: &str) -> bool {
        self.bound.iter().any(|b| b == x)
    }

    fn with_bound<T>(
        &mut self,
        x: &str,
        f: impl FnOnce(&mut Parser) -> Result<T, ParseError>,
    ) -> Result<T, ParseError> {
        self.bound.push(x.to_string());
        let r = f(self);
        self.bound.pop();
        r
    }

    // ---- processes -------------------------------------------------------

    pub(crate) fn process(&mut self) -> Result<Process, ParseError> {
        let mut p = self.prefix()?;
        while self.eat_sym("|") {
            let q = self.prefix()?;
            p = Process::par(p, q);
        }
        Ok(p)
    }

    fn prefix(&mut self) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::Int(0) => {
                self.bump();
                Ok(Process::Inact)
            }
            Tok::Sym("(") => {
                if matches!(self.peek_at(1), Tok::Ident(k) if k == "new") {
                    self.bump();
                    self.bump();
                    let name = self.ident()?;
                    let sort = if self.eat_sym(":") {
                        Some(self.sort()?)
                    } else {
                        None
                    };
                    self.expect_sym(")")?;
                    let body = self.prefix()?;
                    Ok(Process::Hide {
                        name,
                        sort,
                        body: Box::new(body),
                    })
                } else {
                    self.bump();
                    let p = self.process()?;
                    self.expect_sym(")")?;
                    Ok(p)
                }
            }
            Tok::Ident(k) if k == "rec" => {
                self.bump();
                let var = self.ident()?;
                self.expect_sym(".")?;
                let body = self.prefix()?;
                Ok(Process::Rec {
                    var,
                    body: Box::new(body),
                })
            }
            Tok::Ident(k) if k == "if" => {
                self.bump();
                let cond = self.expr()?;
                self.expect_kw("then")?;
                let then = self.prefix()?;
                self.expect_kw("else")?;
                let other = self.prefix()?;
                Ok(Process::If {
                    cond,
                    then: Box::new(then),
                    other: Box::new(other),
                })
            }
            Tok::Ident(id) => {
                self.bump();
                if self.eat_sym("~") {
                    self.expect_sym("[")?;
                    let role = self.role()?;
                    self.expect_sym("]")?;
                    let subject = self.subject(&id);
                    let (var, body) = self.binder_body()?;
                    return Ok(Process::Request {
                        subject,
                        role,
                        var,
                        body: Box::new(body),
                    });
                }
                if !self.is_sym("[") {
                    return Ok(Process::Var(id));
                }
                self.bump();
                let n = self.role()?;
                self.expect_sym("]")?;
                if self.is_sym("(") {
                    let subject = self.subject(&id);
                    let (var, body) = self.binder_body()?;
                    return Ok(Process::Accept {
                        subject,
                        role: n,
                        var,
                        body: Box::new(body),
                    });
                }
                let (chan, peer) = if self.eat_sym("[") {
                    let q = self.role()?;
                    self.expect_sym("]")?;
                    (Chan::Endpoint(id, n), q)
                } else {
                    (Chan::Var(id), n)
                };
                self.action(chan, peer)
            }
            t => self.error(format!("expected a process, found {}", describe(&t))),
        }
    }

    fn subject(&self, id: &str) -> Subject {
        if self.is_bound(id) {
            Subject::Var(id.to_string())
        } else {
            Subject::Name(id.to_string())
        }
    }

    fn binder_body(&mut self) -> Result<(String, Process), ParseError> {
        self.expect_sym("(")?;
        let var = self.ident()?;
        self.expect_sym(")")?;
        self.expect_sym(".")?;
        let body = self.with_bound(&var, |p| p.prefix())?;
        Ok((var, body))
    }

    fn action(&mut self, chan: Chan, peer: Role) -> Result<Process, ParseError> {
        if self.eat_sym("!") {
            self.expect_sym("<")?;
            let expr = self.expr()?;
            self.expect_sym(">")?;
            self.expect_sym(".")?;
            let body = self.prefix()?;
            Ok(Process::Send {
                chan,
                to: peer,
                expr,
                body: Box::new(body),
            })
        } else if self.eat_sym("?") {
            let (var, body) = self.binder_body()?;
            Ok(Process::Recv {
                chan,
                from: peer,
                var,
                body: Box::new(body),
            })
        } else if self.eat_sym("(+)") {
            let label = self.ident()?;
            self.expect_sym(".")?;
            let body = self.prefix()?;
            Ok(Process::Select {
                chan,
                to: peer,
                label,
                body: Box::new(body),
            })
        } else if self.eat_sym("&") {
            let branches = self.branches(|p| p.process())?;
            Ok(Process::Branch {
                chan,
                from: peer,
                branches,
            })
        } else {
            self.error(format!(
                "expected `!`, `?`, `(+)` or `&`, found {}",
                describe(self.peek())
            ))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.expr_atom()?;
        while self.is_kw("and") {
            self.bump();
            let r = self.expr_atom()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn expr_atom(&mut self) -> Result<Expr, ParseError> {
        let lhs = match self.peek().clone() {
            Tok::Ident(k) if k == "true" => {
                self.bump();
                return Ok(Expr::True);
            }
            Tok::Ident(k) if k == "false" => {
                self.bump();
                return Ok(Expr::False);
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            Tok::Ident(_) => self.name_expr()?,
            t => return self.error(format!("expected an expression, found {}", describe(&t))),
        };
        if self.eat_sym("==") {
            let rhs = self.name_expr()?;
            return Ok(Expr::Eq(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn name_expr(&mut self) -> Result<Expr, ParseError> {
        let id = self.ident()?;
        if self.eat_sym("[") {
            let p = self.role()?;
            self.expect_sym("]")?;
            return Ok(Expr::Endpoint(id, p));
        }
        Ok(if self.is_bound(&id) {
            Expr::Var(id)
        } else {
            Expr::Name(id)
        })
    }

    // ---- types -----------------------------------------------------------

    pub(crate) fn sort(&mut self) -> Result<Sort, ParseError> {
        if self.is_kw("bool") {
            self.bump();
            return Ok(Sort::Bool);
        }
        if self.eat_sym("<") {
            let g = self.global()?;
            self.expect_sym(">")?;
            return Ok(Sort::Shared(Box::new(g)));
        }
        Ok(Sort::Atom(self.ident()?))
    }

    fn exchange(&mut self) -> Result<Exchange, ParseError> {
        match self.peek() {
            Tok::Int(_) => Ok(Exchange::Session(Box::new(self.local()?))),
            Tok::Ident(k) if k == "rec" || k == "end" => Ok(Exchange::Session(Box::new(self.local()?))),
            Tok::Sym("(") => Ok(Exchange::Session(Box::new(self.local()?))),
            _ => Ok(Exchange::Sort(self.sort()?)),
        }
    }

    pub(crate) fn global(&mut self) -> Result<GlobalType, ParseError> {
        match self.peek().clone() {
            Tok::Int(_) => {
                let from = self.role()?;
                self.expect_sym("->")?;
                let to = self.role()?;
                self.expect_sym(":")?;
                if self.eat_sym("<") {
                    let payload = self.exchange()?;
                    self.expect_sym(">")?;
                    self.expect_sym(".")?;
                    let cont = self.global()?;
                    Ok(GlobalType::Msg {
                        from,
                        to,
                        payload,
                        cont: Box::new(cont),
                    })
                } else {
                    let branches = self.branches(|p| p.global())?;
                    Ok(GlobalType::Choice { from, to, branches })
                }
            }
            Tok::Ident(k) if k == "rec" => {
                self.bump();
                let t = self.ident()?;
                self.expect_sym(".")?;
                Ok(GlobalType::Rec(t, Box::new(self.global()?)))
            }
            Tok::Ident(k) if k == "end" => {
                self.bump();
                Ok(GlobalType::End)
            }
            Tok::Ident(t) => {
                self.bump();
                Ok(GlobalType::Var(t))
            }
            Tok::Sym("(") => {
                self.bump();
                let g = self.global()?;
                self.expect_sym(")")?;
                Ok(g)
            }
            t => self.error(format!("expected a global type, found {}", describe(&t))),
        }
    }

    fn branches<T>(
        &mut self,
        mut item: impl FnMut(&mut Parser) -> Result<T, ParseError>,
    ) -> Result<Vec<(String, T)>, ParseError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        loop {
            let l = self.ident()?;
            if out.iter().any(|(m, _)| *m == l) {
                return self.error(format!("duplicate label {l}"));
            }
            self.expect_sym(":")?;
            out.push((l, item(self)?));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    pub(crate) fn local(&mut self) -> Result<LocalType, ParseError> {
        match self.peek().clone() {
            Tok::Int(_) => {
                let r = self.role()?;
                if self.eat_sym("!") {
                    self.expect_sym("<")?;
                    let payload = self.exchange()?;
                    self.expect_sym(">")?;
                    self.expect_sym(".")?;
                    let cont = self.local()?;
                    Ok(LocalType::Send {
                        to: r,
                        payload,
                        cont: Box::new(cont),
                    })
                } else if self.eat_sym("?") {
                    self.expect_sym("(")?;
                    let payload = self.exchange()?;
                    self.expect_sym(")")?;
                    self.expect_sym(".")?;
                    let cont = self.local()?;
                    Ok(LocalType::Recv {
                        from: r,
                        payload,
                        cont: Box::new(cont),
                    })
                } else if self.eat_sym("(+)") {
                    let branches = self.branches(|p| p.local())?;
                    Ok(LocalType::Select { to: r, branches })
                } else if self.eat_sym("&") {
                    let branches = self.branches(|p| p.local())?;
                    Ok(LocalType::Branch { from: r, branches })
                } else {
                    self.error(format!(
                        "expected `!`, `?`, `(+)` or `&`, found {}",
                        describe(self.peek())
                    ))
                }
            }
            Tok::Ident(k) if k == "rec" => {
                self.bump();
                let t = self.ident()?;
                self.expect_sym(".")?;
                Ok(LocalType::Rec(t, Box::new(self.local()?)))
            }
            Tok::Ident(k) if k == "end" => {
                self.bump();
                Ok(LocalType::End)
            }
            Tok::Ident(t) => {
                self.bump();
                Ok(LocalType::Var(t))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.local()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            t => self.error(format!("expected a local type, found {}", describe(&t))),
        }
    }

    pub(crate) fn binary(&mut self) -> Result<BinaryType, ParseError> {
        match self.peek().clone() {
            Tok::Sym("!") => {
                self.bump();
                self.expect_sym("<")?;
                let payload = self.exchange()?;
                self.expect_sym(">")?;
                self.expect_sym(".")?;
                Ok(BinaryType::Send {
                    payload,
                    cont: Box::new(self.binary()?),
                })
            }
            Tok::Sym("?") => {
                self.bump();
                self.expect_sym("(")?;
                let payload = self.exchange()?;
                self.expect_sym(")")?;
                self.expect_sym(".")?;
                Ok(BinaryType::Recv {
                    payload,
                    cont: Box::new(self.binary()?),
                })
            }
            Tok::Sym("(+)") => {
                self.bump();
                Ok(BinaryType::Select(self.branches(|p| p.binary())?))
            }
            Tok::Sym("&") => {
                self.bump();
                Ok(BinaryType::Branch(self.branches(|p| p.binary())?))
            }
            Tok::Ident(k) if k == "rec" => {
                self.bump();
                let t = self.ident()?;
                self.expect_sym(".")?;
                Ok(BinaryType::Rec(t, Box::new(self.binary()?)))
            }
            Tok::Ident(k) if k == "end" => {
                self.bump();
                Ok(BinaryType::End)
            }
            Tok::Ident(t) => {
                self.bump();
                Ok(BinaryType::Var(t))
            }
            t => self.error(format!("expected a binary type, found {}", describe(&t))),
        }
    }

    /// Endpoint `s[p]`.
    pub(crate) fn endpoint(&mut self) -> Result<(String, Role), ParseError> {
        let s = self.ident()?;
        self.expect_sym("[")?;
        let p = self.role()?;
        self.expect_sym("]")?;
        Ok((s, p))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

fn parse_all<T>(
    src: &str,
    f: impl FnOnce(&mut Parser) -> Result<T, ParseError>,
) -> Result<T, ParseError> {
    let mut p = Parser::new(src)?;
    let v = f(&mut p)?;
    p.expect_eof()?;
    Ok(v)
}

pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    parse_all(src, |p| p.process())
}

pub fn parse_global(src: &str) -> Result<GlobalType, ParseError> {
    parse_all(src, |p| p.global())
}

pub fn parse_local(src: &str) -> Result<LocalType, ParseError> {
    parse_all(src, |p| p.local())
}

pub fn parse_binary(src: &str) -> Result<BinaryType, ParseError> {
    parse_all(src, |p| p.binary())
}

pub fn parse_sort(src: &str) -> Result<Sort, ParseError> {
    parse_all(src, |p| p.sort())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Value;

    #[test]
    fn request_binds_its_variable() {
        let p = parse_process("a~[3](x). x[1]?(z). x[2]?(y). 0").unwrap();
        match &p {
            Process::Request {
                subject: Subject::Name(a),
                role: 3,
                var,
                body,
            } => {
                assert_eq!(a, "a");
                assert_eq!(var, "x");
                assert!(matches!(
                    body.as_ref(),
                    Process::Recv { chan: Chan::Var(c), from: 1, .. } if c == "x"
                ));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(p.is_closed());
    }

    #[test]
    fn endpoints_and_payloads() {
        let p = parse_process("s[1][2]!<v>.0 | s[2][1]?(x).s[2][3]!<x>.0").unwrap();
        let Process::Par(a, b) = p else { panic!() };
        assert!(matches!(
            *a,
            Process::Send { chan: Chan::Endpoint(ref s, 1), to: 2, expr: Expr::Name(ref v), .. }
                if s == "s" && v == "v"
        ));
        let Process::Recv { body, .. } = *b else { panic!() };
        assert!(matches!(*body, Process::Send { expr: Expr::Var(ref x), .. } if x == "x"));
    }

    #[test]
    fn restriction_choice_and_recursion() {
        let p = parse_process(
            "(new s : <1->2:<bool>.end>) rec X. s[1][2](+)ok. s[1][2]&{a: X, b: 0}",
        )
        .unwrap();
        let Process::Hide { sort: Some(Sort::Shared(_)), body, .. } = p else { panic!() };
        assert!(matches!(*body, Process::Rec { .. }));
    }

    #[test]
    fn conditionals_evaluate() {
        let p = parse_process("if a == a and true then 0 else 0").unwrap();
        let Process::If { cond, .. } = p else { panic!() };
        assert_eq!(cond.eval(), Some(Value::Bool(true)));
    }

    #[test]
    fn types_parse() {
        let g = parse_global("1->3:<U>.2->3:<U>.end").unwrap();
        assert_eq!(g.roles().len(), 3);
        let g = parse_global("rec t. 1->2:{ok: 2->1:<bool>.t, stop: end}").unwrap();
        assert!(g.validate().is_ok());
        let t = parse_local("3!<<1->2:<bool>.end>>.1?(2!<bool>.end).end").unwrap();
        assert!(matches!(t, LocalType::Send { .. }));
        let b = parse_binary("!<bool>.&{l: end, r: ?(S).end}").unwrap();
        assert!(matches!(b, BinaryType::Send { .. }));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_process("a[1](x).\n  x[2]!<v>").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_process("s[0][1]!<v>.0").is_err());
    }
}
