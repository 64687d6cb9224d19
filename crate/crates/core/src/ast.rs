//! Process syntax and the basic syntactic operations on it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::types::Sort;

/// Participant numbers are small positive integers.
pub type Role = u32;

/// Channel `c`: a variable or a session endpoint `s[p]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chan {
    Var(String),
    Endpoint(String, Role),
}

/// Subject of a session request/accept, `u ::= x | a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    Var(String),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expr {
    True,
    False,
    And(Box<Expr>, Box<Expr>),
    /// Name matching `n == n`.
    Eq(Box<Expr>, Box<Expr>),
    Var(String),
    Name(String),
    Endpoint(String, Role),
}

/// Runtime values carried by labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Bool(bool),
    Name(String),
    Endpoint(String, Role),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Process {
    /// `u~[p](x).P`
    Request {
        subject: Subject,
        role: Role,
        var: String,
        body: Box<Process>,
    },
    /// `u[p](x).P`
    Accept {
        subject: Subject,
        role: Role,
        var: String,
        body: Box<Process>,
    },
    /// `c[q]!<e>.P`
    Send {
        chan: Chan,
        to: Role,
        expr: Expr,
        body: Box<Process>,
    },
    /// `c[q]?(x).P`
    Recv {
        chan: Chan,
        from: Role,
        var: String,
        body: Box<Process>,
    },
    /// `c[q](+)l.P`
    Select {
        chan: Chan,
        to: Role,
        label: String,
        body: Box<Process>,
    },
    /// `c[q]&{l: P, ...}`
    Branch {
        chan: Chan,
        from: Role,
        branches: Vec<(String, Process)>,
    },
    If {
        cond: Expr,
        then: Box<Process>,
        other: Box<Process>,
    },
    Par(Box<Process>, Box<Process>),
    Inact,
    /// `(new n) P`, optionally annotated with the sort of a shared name.
    Hide {
        name: String,
        sort: Option<Sort>,
        body: Box<Process>,
    },
    Rec {
        var: String,
        body: Box<Process>,
    },
    Var(String),
}

impl Value {
    pub fn names(&self) -> Vec<&str> {
        match self {
            Value::Bool(_) => vec![],
            Value::Name(n) | Value::Endpoint(n, _) => vec![n.as_str()],
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Bool(true) => Expr::True,
            Value::Bool(false) => Expr::False,
            Value::Name(n) => Expr::Name(n.clone()),
            Value::Endpoint(s, p) => Expr::Endpoint(s.clone(), *p),
        }
    }
}

impl Expr {
    /// Evaluation `e ↓ v`; `None` when the expression mentions a variable or
    /// is ill-sorted.
    pub fn eval(&self) -> Option<Value> {
        match self {
            Expr::True => Some(Value::Bool(true)),
            Expr::False => Some(Value::Bool(false)),
            Expr::And(a, b) => match (a.eval()?, b.eval()?) {
                (Value::Bool(x), Value::Bool(y)) => Some(Value::Bool(x && y)),
                _ => None,
            },
            Expr::Eq(a, b) => {
                let (x, y) = (a.eval()?, b.eval()?);
                if matches!(x, Value::Bool(_)) || matches!(y, Value::Bool(_)) {
                    return None;
                }
                Some(Value::Bool(x == y))
            }
            Expr::Var(_) => None,
            Expr::Name(n) => Some(Value::Name(n.clone())),
            Expr::Endpoint(s, p) => Some(Value::Endpoint(s.clone(), *p)),
        }
    }

    fn collect(&self, names: &mut BTreeSet<String>, vars: &mut BTreeSet<String>) {
        match self {
            Expr::True | Expr::False => {}
            Expr::And(a, b) | Expr::Eq(a, b) => {
                a.collect(names, vars);
                b.collect(names, vars);
            }
            Expr::Var(x) => {
                vars.insert(x.clone());
            }
            Expr::Name(n) | Expr::Endpoint(n, _) => {
                names.insert(n.clone());
            }
        }
    }

    fn subst(&self, x: &str, v: &Value) -> Expr {
        match self {
            Expr::And(a, b) => Expr::And(Box::new(a.subst(x, v)), Box::new(b.subst(x, v))),
            Expr::Eq(a, b) => Expr::Eq(Box::new(a.subst(x, v)), Box::new(b.subst(x, v))),
            Expr::Var(y) if y == x => v.to_expr(),
            e => e.clone(),
        }
    }

    fn rename_name(&self, from: &str, to: &str) -> Expr {
        match self {
            Expr::And(a, b) => Expr::And(
                Box::new(a.rename_name(from, to)),
                Box::new(b.rename_name(from, to)),
            ),
            Expr::Eq(a, b) => Expr::Eq(
                Box::new(a.rename_name(from, to)),
                Box::new(b.rename_name(from, to)),
            ),
            Expr::Name(n) if n == from => Expr::Name(to.to_string()),
            Expr::Endpoint(n, p) if n == from => Expr::Endpoint(to.to_string(), *p),
            e => e.clone(),
        }
    }

    fn rename_var(&self, from: &str, to: &str) -> Expr {
        match self {
            Expr::And(a, b) => Expr::And(
                Box::new(a.rename_var(from, to)),
                Box::new(b.rename_var(from, to)),
            ),
            Expr::Eq(a, b) => Expr::Eq(
                Box::new(a.rename_var(from, to)),
                Box::new(b.rename_var(from, to)),
            ),
            Expr::Var(y) if y == from => Expr::Var(to.to_string()),
            e => e.clone(),
        }
    }
}

impl Chan {
    fn subst(&self, x: &str, v: &Value) -> Chan {
        match (self, v) {
            (Chan::Var(y), Value::Endpoint(s, p)) if y == x => Chan::Endpoint(s.clone(), *p),
            _ => self.clone(),
        }
    }

    fn rename_name(&self, from: &str, to: &str) -> Chan {
        match self {
            Chan::Endpoint(s, p) if s == from => Chan::Endpoint(to.to_string(), *p),
            c => c.clone(),
        }
    }

    fn rename_var(&self, from: &str, to: &str) -> Chan {
        match self {
            Chan::Var(y) if y == from => Chan::Var(to.to_string()),
            c => c.clone(),
        }
    }
}

impl Subject {
    fn subst(&self, x: &str, v: &Value) -> Subject {
        match (self, v) {
            (Subject::Var(y), Value::Name(n)) if y == x => Subject::Name(n.clone()),
            _ => self.clone(),
        }
    }
}

/// Picks `base'k` for the smallest `k` not in `avoid`.
pub fn fresh_ident(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.split('\'').next().unwrap_or(base);
    (1..)
        .map(|k| format!("{stem}'{k}"))
        .find(|c| !avoid.contains(c))
        .expect("unbounded supply")
}

#[derive(Default)]
struct Occurrences {
    /// Names in channel positions (subjects, endpoint sessions).
    chan_names: BTreeSet<String>,
    /// Every free name, payloads included.
    names: BTreeSet<String>,
    vars: BTreeSet<String>,
    proc_vars: BTreeSet<String>,
}

fn occurrences(p: &Process) -> Occurrences {
    let mut occ = Occurrences::default();
    collect(p, &mut occ);
    occ
}

fn chan_occ(c: &Chan, occ: &mut Occurrences) {
    match c {
        Chan::Var(x) => {
            occ.vars.insert(x.clone());
        }
        Chan::Endpoint(s, _) => {
            occ.chan_names.insert(s.clone());
            occ.names.insert(s.clone());
        }
    }
}

fn collect(p: &Process, occ: &mut Occurrences) {
    let under_var = |body: &Process, x: &str, occ: &mut Occurrences| {
        let mut inner = occurrences(body);
        inner.vars.remove(x);
        merge(occ, inner);
    };
    match p {
        Process::Request {
            subject, var, body, ..
        }
        | Process::Accept {
            subject, var, body, ..
        } => {
            match subject {
                Subject::Var(x) => {
                    occ.vars.insert(x.clone());
                }
                Subject::Name(a) => {
                    occ.chan_names.insert(a.clone());
                    occ.names.insert(a.clone());
                }
            }
            under_var(body, var, occ);
        }
        Process::Send {
            chan, expr, body, ..
        } => {
            chan_occ(chan, occ);
            expr.collect(&mut occ.names, &mut occ.vars);
            if let Expr::Endpoint(s, _) = expr {
                occ.chan_names.insert(s.clone());
            }
            collect(body, occ);
        }
        Process::Recv {
            chan, var, body, ..
        } => {
            chan_occ(chan, occ);
            under_var(body, var, occ);
        }
        Process::Select { chan, body, .. } => {
            chan_occ(chan, occ);
            collect(body, occ);
        }
        Process::Branch { chan, branches, .. } => {
            chan_occ(chan, occ);
            for (_, b) in branches {
                collect(b, occ);
            }
        }
        Process::If { cond, then, other } => {
            cond.collect(&mut occ.names, &mut occ.vars);
            collect(then, occ);
            collect(other, occ);
        }
        Process::Par(a, b) => {
            collect(a, occ);
            collect(b, occ);
        }
        Process::Inact => {}
        Process::Hide { name, body, .. } => {
            let mut inner = occurrences(body);
            inner.names.remove(name);
            inner.chan_names.remove(name);
            merge(occ, inner);
        }
        Process::Rec { var, body } => {
            let mut inner = occurrences(body);
            inner.proc_vars.remove(var);
            merge(occ, inner);
        }
        Process::Var(x) => {
            occ.proc_vars.insert(x.clone());
        }
    }
}

fn merge(into: &mut Occurrences, from: Occurrences) {
    into.chan_names.extend(from.chan_names);
    into.names.extend(from.names);
    into.vars.extend(from.vars);
    into.proc_vars.extend(from.proc_vars);
}

impl Process {
    pub fn par(a: Process, b: Process) -> Process {
        Process::Par(Box::new(a), Box::new(b))
    }

    pub fn hide(name: impl Into<String>, body: Process) -> Process {
        Process::Hide {
            name: name.into(),
            sort: None,
            body: Box::new(body),
        }
    }

    /// Left-nested parallel composition of `items`; `0` when empty.
    pub fn par_all(items: impl IntoIterator<Item = Process>) -> Process {
        items
            .into_iter()
            .reduce(Process::par)
            .unwrap_or(Process::Inact)
    }

    /// Free shared and session names in channel positions. Identifiers that
    /// occur only as payloads are atoms and are not reported.
    pub fn free_names(&self) -> BTreeSet<String> {
        occurrences(self).chan_names
    }

    /// Every free name, payload atoms included.
    pub fn free_idents(&self) -> BTreeSet<String> {
        occurrences(self).names
    }

    /// Payload identifiers that never occur in a channel position.
    pub fn free_atoms(&self) -> BTreeSet<String> {
        let occ = occurrences(self);
        occ.names.difference(&occ.chan_names).cloned().collect()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        occurrences(self).vars
    }

    pub fn free_proc_vars(&self) -> BTreeSet<String> {
        occurrences(self).proc_vars
    }

    pub fn is_closed(&self) -> bool {
        let occ = occurrences(self);
        occ.vars.is_empty() && occ.proc_vars.is_empty()
    }

    /// Number of constructors, used to bound generated terms.
    pub fn size(&self) -> usize {
        1 + match self {
            Process::Request { body, .. }
            | Process::Accept { body, .. }
            | Process::Send { body, .. }
            | Process::Recv { body, .. }
            | Process::Select { body, .. }
            | Process::Hide { body, .. }
            | Process::Rec { body, .. } => body.size(),
            Process::Branch { branches, .. } => branches.iter().map(|(_, b)| b.size()).sum(),
            Process::If { then, other, .. } => then.size() + other.size(),
            Process::Par(a, b) => a.size() + b.size(),
            Process::Inact | Process::Var(_) => 0,
        }
    }

    fn all_idents(&self) -> BTreeSet<String> {
        let occ = occurrences(self);
        let mut all = occ.names;
        all.extend(occ.vars);
        all
    }

    /// Capture-avoiding substitution `P{v/x}` of a value for a variable.
    pub fn subst_var(&self, x: &str, v: &Value) -> Process {
        let vnames: BTreeSet<String> = v.names().into_iter().map(str::to_string).collect();
        self.subst_var_in(x, v, &vnames)
    }

    fn subst_var_in(&self, x: &str, v: &Value, vnames: &BTreeSet<String>) -> Process {
        let go = |b: &Process| Box::new(b.subst_var_in(x, v, vnames));
        // Re-binds a variable binder, renaming it when it would capture.
        let bind = |var: &str, body: &Process| -> (String, Box<Process>) {
            if var == x {
                return (var.to_string(), Box::new(body.clone()));
            }
            (var.to_string(), Box::new(body.subst_var_in(x, v, vnames)))
        };
        match self {
            Process::Request {
                subject,
                role,
                var,
                body,
            } => {
                let (var, body) = bind(var, body);
                Process::Request {
                    subject: subject.subst(x, v),
                    role: *role,
                    var,
                    body,
                }
            }
            Process::Accept {
                subject,
                role,
                var,
                body,
            } => {
                let (var, body) = bind(var, body);
                Process::Accept {
                    subject: subject.subst(x, v),
                    role: *role,
                    var,
                    body,
                }
            }
            Process::Send {
                chan,
                to,
                expr,
                body,
            } => Process::Send {
                chan: chan.subst(x, v),
                to: *to,
                expr: expr.subst(x, v),
                body: go(body),
            },
            Process::Recv {
                chan,
                from,
                var,
                body,
            } => {
                let (var, body) = bind(var, body);
                Process::Recv {
                    chan: chan.subst(x, v),
                    from: *from,
                    var,
                    body,
                }
            }
            Process::Select {
                chan,
                to,
                label,
                body,
            } => Process::Select {
                chan: chan.subst(x, v),
                to: *to,
                label: label.clone(),
                body: go(body),
            },
            Process::Branch {
                chan,
                from,
                branches,
            } => Process::Branch {
                chan: chan.subst(x, v),
                from: *from,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), b.subst_var_in(x, v, vnames)))
                    .collect(),
            },
            Process::If { cond, then, other } => Process::If {
                cond: cond.subst(x, v),
                then: go(then),
                other: go(other),
            },
            Process::Par(a, b) => Process::Par(go(a), go(b)),
            Process::Inact => Process::Inact,
            Process::Hide { name, sort, body } => {
                if vnames.contains(name) && body.free_vars().contains(x) {
                    let mut avoid = body.all_idents();
                    avoid.extend(vnames.iter().cloned());
                    let fresh = fresh_ident(name, &avoid);
                    let renamed = body.rename_name(name, &fresh);
                    Process::Hide {
                        name: fresh,
                        sort: sort.clone(),
                        body: Box::new(renamed.subst_var_in(x, v, vnames)),
                    }
                } else {
                    Process::Hide {
                        name: name.clone(),
                        sort: sort.clone(),
                        body: go(body),
                    }
                }
            }
            Process::Rec { var, body } => Process::Rec {
                var: var.clone(),
                body: go(body),
            },
            Process::Var(y) => Process::Var(y.clone()),
        }
    }

    /// Renames free occurrences of name `from` to `to`, avoiding capture.
    pub fn rename_name(&self, from: &str, to: &str) -> Process {
        if from == to {
            return self.clone();
        }
        let go = |b: &Process| Box::new(b.rename_name(from, to));
        match self {
            Process::Request {
                subject,
                role,
                var,
                body,
            } => Process::Request {
                subject: match subject {
                    Subject::Name(a) if a == from => Subject::Name(to.to_string()),
                    s => s.clone(),
                },
                role: *role,
                var: var.clone(),
                body: go(body),
            },
            Process::Accept {
                subject,
                role,
                var,
                body,
            } => Process::Accept {
                subject: match subject {
                    Subject::Name(a) if a == from => Subject::Name(to.to_string()),
                    s => s.clone(),
                },
                role: *role,
                var: var.clone(),
                body: go(body),
            },
            Process::Send {
                chan,
                to: q,
                expr,
                body,
            } => Process::Send {
                chan: chan.rename_name(from, to),
                to: *q,
                expr: expr.rename_name(from, to),
                body: go(body),
            },
            Process::Recv {
                chan,
                from: q,
                var,
                body,
            } => Process::Recv {
                chan: chan.rename_name(from, to),
                from: *q,
                var: var.clone(),
                body: go(body),
            },
            Process::Select {
                chan,
                to: q,
                label,
                body,
            } => Process::Select {
                chan: chan.rename_name(from, to),
                to: *q,
                label: label.clone(),
                body: go(body),
            },
            Process::Branch {
                chan,
                from: q,
                branches,
            } => Process::Branch {
                chan: chan.rename_name(from, to),
                from: *q,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), b.rename_name(from, to)))
                    .collect(),
            },
            Process::If { cond, then, other } => Process::If {
                cond: cond.rename_name(from, to),
                then: go(then),
                other: go(other),
            },
            Process::Par(a, b) => Process::Par(go(a), go(b)),
            Process::Inact => Process::Inact,
            Process::Hide { name, sort, body } => {
                if name == from {
                    self.clone()
                } else if name == to && body.free_idents().contains(from) {
                    let mut avoid = body.all_idents();
                    avoid.insert(to.to_string());
                    let fresh = fresh_ident(name, &avoid);
                    Process::Hide {
                        name: fresh.clone(),
                        sort: sort.clone(),
                        body: Box::new(body.rename_name(name, &fresh).rename_name(from, to)),
                    }
                } else {
                    Process::Hide {
                        name: name.clone(),
                        sort: sort.clone(),
                        body: go(body),
                    }
                }
            }
            Process::Rec { var, body } => Process::Rec {
                var: var.clone(),
                body: go(body),
            },
            Process::Var(y) => Process::Var(y.clone()),
        }
    }

    /// Renames free occurrences of variable `from` to the (fresh) `to`.
    pub fn rename_var(&self, from: &str, to: &str) -> Process {
        let go = |b: &Process| Box::new(b.rename_var(from, to));
        let subj = |s: &Subject| match s {
            Subject::Var(y) if y == from => Subject::Var(to.to_string()),
            s => s.clone(),
        };
        match self {
            Process::Request {
                subject,
                role,
                var,
                body,
            } => Process::Request {
                subject: subj(subject),
                role: *role,
                var: var.clone(),
                body: if var == from { body.clone() } else { go(body) },
            },
            Process::Accept {
                subject,
                role,
                var,
                body,
            } => Process::Accept {
                subject: subj(subject),
                role: *role,
                var: var.clone(),
                body: if var == from { body.clone() } else { go(body) },
            },
            Process::Send {
                chan,
                to: q,
                expr,
                body,
            } => Process::Send {
                chan: chan.rename_var(from, to),
                to: *q,
                expr: expr.rename_var(from, to),
                body: go(body),
            },
            Process::Recv {
                chan,
                from: q,
                var,
                body,
            } => Process::Recv {
                chan: chan.rename_var(from, to),
                from: *q,
                var: var.clone(),
                body: if var == from { body.clone() } else { go(body) },
            },
            Process::Select {
                chan,
                to: q,
                label,
                body,
            } => Process::Select {
                chan: chan.rename_var(from, to),
                to: *q,
                label: label.clone(),
                body: go(body),
            },
            Process::Branch {
                chan,
                from: q,
                branches,
            } => Process::Branch {
                chan: chan.rename_var(from, to),
                from: *q,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), b.rename_var(from, to)))
                    .collect(),
            },
            Process::If { cond, then, other } => Process::If {
                cond: cond.rename_var(from, to),
                then: go(then),
                other: go(other),
            },
            Process::Par(a, b) => Process::Par(go(a), go(b)),
            Process::Inact => Process::Inact,
            Process::Hide { name, sort, body } => Process::Hide {
                name: name.clone(),
                sort: sort.clone(),
                body: go(body),
            },
            Process::Rec { var, body } => Process::Rec {
                var: var.clone(),
                body: go(body),
            },
            Process::Var(y) => Process::Var(y.clone()),
        }
    }

    /// Capture-avoiding substitution of a process for a process variable.
    pub fn subst_proc_var(&self, x: &str, q: &Process) -> Process {
        let occ = occurrences(q);
        self.subst_pv(x, q, &occ.names, &occ.vars)
    }

    fn subst_pv(
        &self,
        x: &str,
        q: &Process,
        qnames: &BTreeSet<String>,
        qvars: &BTreeSet<String>,
    ) -> Process {
        let go = |b: &Process| Box::new(b.subst_pv(x, q, qnames, qvars));
        // Renames a variable binder that would capture a free variable of q.
        let bind = |var: &str, body: &Process| -> (String, Box<Process>) {
            if qvars.contains(var) && body.free_proc_vars().contains(x) {
                let mut avoid = body.all_idents();
                avoid.extend(qvars.iter().cloned());
                let fresh = fresh_ident(var, &avoid);
                let renamed = body.rename_var(var, &fresh);
                (fresh, Box::new(renamed.subst_pv(x, q, qnames, qvars)))
            } else {
                (var.to_string(), go(body))
            }
        };
        match self {
            Process::Request {
                subject,
                role,
                var,
                body,
            } => {
                let (var, body) = bind(var, body);
                Process::Request {
                    subject: subject.clone(),
                    role: *role,
                    var,
                    body,
                }
            }
            Process::Accept {
                subject,
                role,
                var,
                body,
            } => {
                let (var, body) = bind(var, body);
                Process::Accept {
                    subject: subject.clone(),
                    role: *role,
                    var,
                    body,
                }
            }
            Process::Send {
                chan,
                to,
                expr,
                body,
            } => Process::Send {
                chan: chan.clone(),
                to: *to,
                expr: expr.clone(),
                body: go(body),
            },
            Process::Recv {
                chan,
                from,
                var,
                body,
            } => {
                let (var, body) = bind(var, body);
                Process::Recv {
                    chan: chan.clone(),
                    from: *from,
                    var,
                    body,
                }
            }
            Process::Select {
                chan,
                to,
                label,
                body,
            } => Process::Select {
                chan: chan.clone(),
                to: *to,
                label: label.clone(),
                body: go(body),
            },
            Process::Branch {
                chan,
                from,
                branches,
            } => Process::Branch {
                chan: chan.clone(),
                from: *from,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), b.subst_pv(x, q, qnames, qvars)))
                    .collect(),
            },
            Process::If { cond, then, other } => Process::If {
                cond: cond.clone(),
                then: go(then),
                other: go(other),
            },
            Process::Par(a, b) => Process::Par(go(a), go(b)),
            Process::Inact => Process::Inact,
            Process::Hide { name, sort, body } => {
                if qnames.contains(name) && body.free_proc_vars().contains(x) {
                    let mut avoid = body.all_idents();
                    avoid.extend(qnames.iter().cloned());
                    let fresh = fresh_ident(name, &avoid);
                    Process::Hide {
                        name: fresh.clone(),
                        sort: sort.clone(),
                        body: Box::new(body.rename_name(name, &fresh).subst_pv(x, q, qnames, qvars)),
                    }
                } else {
                    Process::Hide {
                        name: name.clone(),
                        sort: sort.clone(),
                        body: go(body),
                    }
                }
            }
            Process::Rec { var, body } => {
                if var == x {
                    self.clone()
                } else {
                    Process::Rec {
                        var: var.clone(),
                        body: go(body),
                    }
                }
            }
            Process::Var(y) if y == x => q.clone(),
            Process::Var(y) => Process::Var(y.clone()),
        }
    }

    /// One unfolding `rec X.P → P{rec X.P/X}`; other terms are returned as is.
    pub fn unfold(&self) -> Process {
        match self {
            Process::Rec { var, body } => body.subst_proc_var(var, self),
            p => p.clone(),
        }
    }

    /// Session names used as endpoints `s[p]` in channel position.
    pub fn endpoint_sessions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        endpoint_sessions(self, &mut out);
        out
    }
}

fn endpoint_sessions(p: &Process, out: &mut BTreeSet<String>) {
    let chan = |c: &Chan, out: &mut BTreeSet<String>| {
        if let Chan::Endpoint(s, _) = c {
            out.insert(s.clone());
        }
    };
    match p {
        Process::Request { body, .. } | Process::Accept { body, .. } => endpoint_sessions(body, out),
        Process::Send {
            chan: c,
            expr,
            body,
            ..
        } => {
            chan(c, out);
            if let Expr::Endpoint(s, _) = expr {
                out.insert(s.clone());
            }
            endpoint_sessions(body, out);
        }
        Process::Recv { chan: c, body, .. } | Process::Select { chan: c, body, .. } => {
            chan(c, out);
            endpoint_sessions(body, out);
        }
        Process::Branch {
            chan: c, branches, ..
        } => {
            chan(c, out);
            for (_, b) in branches {
                endpoint_sessions(b, out);
            }
        }
        Process::If { then, other, .. } => {
            endpoint_sessions(then, out);
            endpoint_sessions(other, out);
        }
        Process::Par(a, b) => {
            endpoint_sessions(a, out);
            endpoint_sessions(b, out);
        }
        Process::Hide { name, body, .. } => {
            let mut inner = BTreeSet::new();
            endpoint_sessions(body, &mut inner);
            inner.remove(name);
            out.extend(inner);
        }
        Process::Rec { body, .. } => endpoint_sessions(body, out),
        Process::Inact | Process::Var(_) => {}
    }
}
