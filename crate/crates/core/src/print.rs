//! Concrete syntax printers. The output parses back to the same tree.

use std::fmt::{self, Display, Formatter};

use crate::ast::{Chan, Expr, Process, Subject, Value};
use crate::types::{BinaryType, Exchange, GlobalType, LocalType, Sort};

impl Display for Chan {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Chan::Var(x) => write!(f, "{x}"),
            Chan::Endpoint(s, p) => write!(f, "{s}[{p}]"),
        }
    }
}

impl Display for Subject {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Var(x) | Subject::Name(x) => write!(f, "{x}"),
        }
    }
}

impl Display for Value {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Name(n) => write!(f, "{n}"),
            Value::Endpoint(s, p) => write!(f, "{s}[{p}]"),
        }
    }
}

fn expr_atom(e: &Expr, f: &mut Formatter<'_>) -> fmt::Result {
    match e {
        Expr::And(..) | Expr::Eq(..) => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::True => write!(f, "true"),
            Expr::False => write!(f, "false"),
            Expr::And(a, b) => {
                match a.as_ref() {
                    Expr::And(..) => write!(f, "{a}")?,
                    _ => expr_atom(a, f)?,
                }
                write!(f, " and ")?;
                expr_atom(b, f)
            }
            Expr::Eq(a, b) => write!(f, "{a} == {b}"),
            Expr::Var(x) | Expr::Name(x) => write!(f, "{x}"),
            Expr::Endpoint(s, p) => write!(f, "{s}[{p}]"),
        }
    }
}

struct Prefixed<'a>(&'a Process);

impl Display for Prefixed<'_> {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self.0 {
            Process::Par(..) => write!(f, "({})", self.0),
            p => write!(f, "{p}"),
        }
    }
}

impl Display for Process {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Process::Request {
                subject,
                role,
                var,
                body,
            } => write!(f, "{subject}~[{role}]({var}).{}", Prefixed(body)),
            Process::Accept {
                subject,
                role,
                var,
                body,
            } => write!(f, "{subject}[{role}]({var}).{}", Prefixed(body)),
            Process::Send {
                chan,
                to,
                expr,
                body,
            } => write!(f, "{chan}[{to}]!<{expr}>.{}", Prefixed(body)),
            Process::Recv {
                chan,
                from,
                var,
                body,
            } => write!(f, "{chan}[{from}]?({var}).{}", Prefixed(body)),
            Process::Select {
                chan,
                to,
                label,
                body,
            } => write!(f, "{chan}[{to}](+){label}.{}", Prefixed(body)),
            Process::Branch {
                chan,
                from,
                branches,
            } => {
                write!(f, "{chan}[{from}]&{{")?;
                for (i, (l, p)) in branches.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{l}: {p}")?;
                }
                write!(f, "}}")
            }
            Process::If { cond, then, other } => write!(
                f,
                "if {cond} then {} else {}",
                Prefixed(then),
                Prefixed(other)
            ),
            Process::Par(a, b) => write!(f, "{a} | {}", Prefixed(b)),
            Process::Inact => write!(f, "0"),
            Process::Hide { name, sort, body } => match sort {
                Some(s) => write!(f, "(new {name} : {s}) {}", Prefixed(body)),
                None => write!(f, "(new {name}) {}", Prefixed(body)),
            },
            Process::Rec { var, body } => write!(f, "rec {var}. {}", Prefixed(body)),
            Process::Var(x) => write!(f, "{x}"),
        }
    }
}

impl Display for Sort {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "bool"),
            Sort::Atom(a) => write!(f, "{a}"),
            Sort::Shared(g) => write!(f, "<{g}>"),
        }
    }
}

impl Display for Exchange {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Exchange::Sort(s) => write!(f, "{s}"),
            Exchange::Session(t) => write!(f, "{t}"),
            Exchange::Meta(m) => write!(f, "?{m}"),
        }
    }
}

fn branches<T: Display>(f: &mut Formatter<'_>, bs: &[(String, T)]) -> fmt::Result {
    write!(f, "{{")?;
    for (i, (l, t)) in bs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{l}: {t}")?;
    }
    write!(f, "}}")
}

impl Display for GlobalType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => write!(f, "{from}->{to}:<{payload}>.{cont}"),
            GlobalType::Choice {
                from,
                to,
                branches: bs,
            } => {
                write!(f, "{from}->{to}:")?;
                branches(f, bs)
            }
            GlobalType::Rec(t, b) => write!(f, "rec {t}. {b}"),
            GlobalType::Var(t) => write!(f, "{t}"),
            GlobalType::End => write!(f, "end"),
        }
    }
}

impl Display for LocalType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            LocalType::Send { to, payload, cont } => write!(f, "{to}!<{payload}>.{cont}"),
            LocalType::Recv {
                from,
                payload,
                cont,
            } => write!(f, "{from}?({payload}).{cont}"),
            LocalType::Select { to, branches: bs } => {
                write!(f, "{to}(+)")?;
                branches(f, bs)
            }
            LocalType::Branch { from, branches: bs } => {
                write!(f, "{from}&")?;
                branches(f, bs)
            }
            LocalType::Rec(t, b) => write!(f, "rec {t}. {b}"),
            LocalType::Var(t) => write!(f, "{t}"),
            LocalType::End => write!(f, "end"),
        }
    }
}

impl Display for BinaryType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            BinaryType::Send { payload, cont } => write!(f, "!<{payload}>.{cont}"),
            BinaryType::Recv { payload, cont } => write!(f, "?({payload}).{cont}"),
            BinaryType::Select(bs) => {
                write!(f, "(+)")?;
                branches(f, bs)
            }
            BinaryType::Branch(bs) => {
                write!(f, "&")?;
                branches(f, bs)
            }
            BinaryType::Rec(t, b) => write!(f, "rec {t}. {b}"),
            BinaryType::Var(t) => write!(f, "{t}"),
            BinaryType::End => write!(f, "end"),
        }
    }
}
