//! Typing judgements `Γ ⊢ P ▷ Δ`, coherence and reduction of session
//! environments.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::{self, Display, Formatter};

use thiserror::Error;

use crate::ast::{Chan, Expr, Process, Role, Subject};
use crate::genv::{GlobalLabel, Interaction};
use crate::parse::{ParseError, Parser};
use crate::types::{
    conform, unify, unify_exchange, equi_eq, Width, BinaryType, Exchange, LocalType, MetaSubst, Sort,
};

pub type Endpoint = (String, Role);

/// Shared environment Γ: sorts of shared names and atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SharedEnv {
    pub names: BTreeMap<String, Sort>,
}

/// Session environment Δ: local types of session endpoints.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionEnv {
    pub entries: BTreeMap<Endpoint, LocalType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("[{rule}] {detail}")]
    Rule { rule: &'static str, detail: String },
}

fn rule<T>(rule: &'static str, detail: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError::Rule {
        rule,
        detail: detail.into(),
    })
}

impl SharedEnv {
    pub fn new() -> SharedEnv {
        SharedEnv::default()
    }

    pub fn with(mut self, name: &str, sort: Sort) -> SharedEnv {
        self.names.insert(name.to_string(), sort);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Sort> {
        self.names.get(name)
    }

    /// Shared names, i.e. entries whose sort carries a global type.
    pub fn shared_names(&self) -> impl Iterator<Item = &String> {
        self.names
            .iter()
            .filter(|(_, s)| matches!(s, Sort::Shared(_)))
            .map(|(n, _)| n)
    }
}

impl Display for SharedEnv {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (n, s)) in self.names.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{n}: {s}")?;
        }
        write!(f, "}}")
    }
}

impl SessionEnv {
    pub fn new() -> SessionEnv {
        SessionEnv::default()
    }

    pub fn with(mut self, s: &str, p: Role, t: LocalType) -> SessionEnv {
        self.entries.insert((s.to_string(), p), t);
        self
    }

    pub fn get(&self, s: &str, p: Role) -> Option<&LocalType> {
        self.entries.get(&(s.to_string(), p))
    }

    pub fn contains(&self, s: &str, p: Role) -> bool {
        self.entries.contains_key(&(s.to_string(), p))
    }

    pub fn insert(&mut self, s: &str, p: Role, t: LocalType) {
        self.entries.insert((s.to_string(), p), t);
    }

    pub fn remove(&mut self, s: &str, p: Role) -> Option<LocalType> {
        self.entries.remove(&(s.to_string(), p))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sessions(&self) -> BTreeSet<String> {
        self.entries.keys().map(|(s, _)| s.clone()).collect()
    }

    pub fn uses_session(&self, s: &str) -> bool {
        self.entries.keys().any(|(x, _)| x == s)
    }

    /// Entries of one session.
    pub fn session(&self, s: &str) -> BTreeMap<Role, LocalType> {
        self.entries
            .iter()
            .filter(|((x, _), _)| x == s)
            .map(|((_, p), t)| (*p, t.clone()))
            .collect()
    }

    /// Canonical representative: bound type variables renamed.
    pub fn canonical(&self) -> SessionEnv {
        SessionEnv {
            entries: self
                .entries
                .iter()
                .map(|(k, t)| (k.clone(), t.canonical()))
                .collect(),
        }
    }

    /// Drops `end`-typed entries (⟨Complete⟩ weakening).
    pub fn without_end(&self) -> SessionEnv {
        SessionEnv {
            entries: self
                .entries
                .iter()
                .filter(|(_, t)| !t.is_end())
                .map(|(k, t)| (k.clone(), t.clone()))
                .collect(),
        }
    }

    pub fn all_end(&self) -> bool {
        self.entries.values().all(LocalType::is_end)
    }

    /// `Δ1 ⊆ Δ2` up to equi-recursive type equality; `end` entries of self
    /// need not be present in `other`.
    pub fn included_in(&self, other: &SessionEnv) -> bool {
        self.entries.iter().all(|(k, t)| match other.entries.get(k) {
            Some(u) => equi_eq(t, u),
            None => t.is_end(),
        })
    }

    /// Pairwise coherence of session `s`.
    pub fn coherent_at(&self, s: &str) -> bool {
        let part = self.session(s);
        pairwise_coherent(&part, &mut MetaSubst::default())
    }

    /// Every session of Δ is pairwise coherent.
    pub fn coherent(&self) -> bool {
        self.sessions().iter().all(|s| self.coherent_at(s))
    }

    /// Coherent and every role mentioned by a member is present.
    pub fn fully_coherent_at(&self, s: &str) -> bool {
        let part = self.session(s);
        complete_roles(&part) && pairwise_coherent(&part, &mut MetaSubst::default())
    }
}

fn complete_roles(part: &BTreeMap<Role, LocalType>) -> bool {
    part.values()
        .all(|t| t.roles().iter().all(|q| part.contains_key(q)))
}

fn pairwise_coherent(part: &BTreeMap<Role, LocalType>, subst: &mut MetaSubst) -> bool {
    for (p, tp) in part {
        for (q, tq) in part {
            if p >= q {
                continue;
            }
            let (tp, tq) = (tp.apply(subst), tq.apply(subst));
            let (Ok(bp), Ok(bq)) = (tp.project(*q), tq.project(*p)) else {
                return false;
            };
            if !conform(&bp, &bq.dual(), subst, Width::Both) {
                return false;
            }
        }
    }
    true
}

impl Display for SessionEnv {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, ((s, p), t)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{s}[{p}]: {t}")?;
        }
        write!(f, "}}")
    }
}

/// Parses `{s[1]: T; s[2]: T}` (braces optional, `;` or `,` separated).
pub fn parse_session_env(src: &str) -> Result<SessionEnv, ParseError> {
    let mut p = Parser::new(src)?;
    let braced = p.eat_sym("{");
    let mut env = SessionEnv::new();
    while !(p.at_eof() || braced && p.is_sym("}")) {
        let (s, r) = p.endpoint()?;
        p.expect_sym(":")?;
        let t = p.local()?;
        env.insert(&s, r, t);
        if !(p.eat_sym(";") || p.eat_sym(",")) {
            break;
        }
    }
    if braced {
        p.expect_sym("}")?;
    }
    p.expect_eof()?;
    Ok(env)
}

/// Parses `{a: <G>; v: U}`.
pub fn parse_shared_env(src: &str) -> Result<SharedEnv, ParseError> {
    let mut p = Parser::new(src)?;
    let braced = p.eat_sym("{");
    let mut env = SharedEnv::new();
    while !(p.at_eof() || braced && p.is_sym("}")) {
        let n = p.ident()?;
        p.expect_sym(":")?;
        let s = p.sort()?;
        env.names.insert(n, s);
        if !(p.eat_sym(";") || p.eat_sym(",")) {
            break;
        }
    }
    if braced {
        p.expect_sym("}")?;
    }
    p.expect_eof()?;
    Ok(env)
}

type IEnv = BTreeMap<Chan, LocalType>;

#[derive(Clone)]
enum Scoped {
    Value(Exchange),
    Channel,
}

struct Infer<'a> {
    gamma: &'a SharedEnv,
    names: Vec<(String, Option<Sort>)>,
    vars: Vec<(String, Scoped)>,
    hints: BTreeMap<Chan, LocalType>,
    proc_vars: Vec<(String, IEnv)>,
    subst: MetaSubst,
    next_meta: u32,
    next_tvar: u32,
}

fn occurs_as_channel(p: &Process, x: &str) -> bool {
    p.free_vars().contains(x) && channel_occurrence(p, x)
}

fn channel_occurrence(p: &Process, x: &str) -> bool {
    let is = |c: &Chan| matches!(c, Chan::Var(y) if y == x);
    match p {
        Process::Request { var, body, .. } | Process::Accept { var, body, .. } => {
            var != x && channel_occurrence(body, x)
        }
        Process::Send { chan, body, .. } | Process::Select { chan, body, .. } => {
            is(chan) || channel_occurrence(body, x)
        }
        Process::Recv {
            chan, var, body, ..
        } => is(chan) || (var != x && channel_occurrence(body, x)),
        Process::Branch { chan, branches, .. } => {
            is(chan) || branches.iter().any(|(_, b)| channel_occurrence(b, x))
        }
        Process::If { then, other, .. } => channel_occurrence(then, x) || channel_occurrence(other, x),
        Process::Par(a, b) => channel_occurrence(a, x) || channel_occurrence(b, x),
        Process::Hide { body, .. } | Process::Rec { body, .. } => channel_occurrence(body, x),
        Process::Inact | Process::Var(_) => false,
    }
}

/// Free channels: endpoints and free channel variables.
fn free_chans(p: &Process, bound_vars: &mut Vec<String>, hidden: &mut Vec<String>, out: &mut BTreeSet<Chan>) {
    let chan = |c: &Chan, bound_vars: &Vec<String>, hidden: &Vec<String>, out: &mut BTreeSet<Chan>| match c {
        Chan::Var(x) if !bound_vars.contains(x) => {
            out.insert(c.clone());
        }
        Chan::Endpoint(s, _) if !hidden.contains(s) => {
            out.insert(c.clone());
        }
        _ => {}
    };
    match p {
        Process::Request { var, body, .. } | Process::Accept { var, body, .. } => {
            bound_vars.push(var.clone());
            free_chans(body, bound_vars, hidden, out);
            bound_vars.pop();
        }
        Process::Send {
            chan: c,
            expr,
            body,
            ..
        } => {
            chan(c, bound_vars, hidden, out);
            if let Expr::Endpoint(s, r) = expr {
                chan(&Chan::Endpoint(s.clone(), *r), bound_vars, hidden, out);
            }
            free_chans(body, bound_vars, hidden, out);
        }
        Process::Recv {
            chan: c, var, body, ..
        } => {
            chan(c, bound_vars, hidden, out);
            bound_vars.push(var.clone());
            free_chans(body, bound_vars, hidden, out);
            bound_vars.pop();
        }
        Process::Select { chan: c, body, .. } => {
            chan(c, bound_vars, hidden, out);
            free_chans(body, bound_vars, hidden, out);
        }
        Process::Branch {
            chan: c, branches, ..
        } => {
            chan(c, bound_vars, hidden, out);
            for (_, b) in branches {
                free_chans(b, bound_vars, hidden, out);
            }
        }
        Process::If { then, other, .. } => {
            free_chans(then, bound_vars, hidden, out);
            free_chans(other, bound_vars, hidden, out);
        }
        Process::Par(a, b) => {
            free_chans(a, bound_vars, hidden, out);
            free_chans(b, bound_vars, hidden, out);
        }
        Process::Hide { name, body, .. } => {
            hidden.push(name.clone());
            free_chans(body, bound_vars, hidden, out);
            hidden.pop();
        }
        Process::Rec { body, .. } => free_chans(body, bound_vars, hidden, out),
        Process::Inact | Process::Var(_) => {}
    }
}

impl<'a> Infer<'a> {
    fn new(gamma: &'a SharedEnv) -> Infer<'a> {
        Infer {
            gamma,
            names: Vec::new(),
            vars: Vec::new(),
            hints: BTreeMap::new(),
            proc_vars: Vec::new(),
            subst: MetaSubst::default(),
            next_meta: 0,
            next_tvar: 0,
        }
    }

    fn meta(&mut self) -> Exchange {
        self.next_meta += 1;
        Exchange::Meta(self.next_meta)
    }

    fn name_sort(&self, n: &str) -> Result<Sort, TypeError> {
        if let Some((_, s)) = self.names.iter().rev().find(|(m, _)| m == n) {
            return s.clone().ok_or_else(|| TypeError::Rule {
                rule: "NRes",
                detail: format!("restricted name `{n}` has no declared sort"),
            });
        }
        self.gamma
            .get(n)
            .cloned()
            .ok_or_else(|| TypeError::Unbound(n.to_string()))
    }

    fn var_kind(&self, x: &str) -> Option<Scoped> {
        self.vars
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, k)| k.clone())
    }

    fn unify_local(&mut self, a: &LocalType, b: &LocalType) -> bool {
        let (a, b) = (a.apply(&self.subst), b.apply(&self.subst));
        unify(&a, &b, &mut self.subst, &mut HashSet::new())
    }

    fn conform_local(&mut self, used: &LocalType, expected: &LocalType) -> bool {
        let (a, b) = (used.apply(&self.subst), expected.apply(&self.subst));
        crate::types::conform(&a, &b, &mut self.subst, Width::Select)
    }

    fn unify_exch(&mut self, a: &Exchange, b: &Exchange) -> bool {
        unify_exchange(a, b, &mut self.subst)
    }

    fn expr_sort(&mut self, e: &Expr) -> Result<Exchange, TypeError> {
        match e {
            Expr::True | Expr::False => Ok(Exchange::bool()),
            Expr::And(a, b) => {
                for x in [a, b] {
                    let s = self.expr_sort(x)?;
                    if !self.unify_exch(&s, &Exchange::bool()) {
                        return rule("Send", format!("`{x}` is not boolean"));
                    }
                }
                Ok(Exchange::bool())
            }
            Expr::Eq(a, b) => {
                let (sa, sb) = (self.expr_sort(a)?, self.expr_sort(b)?);
                if !self.unify_exch(&sa, &sb) {
                    return rule("Send", format!("`{a}` and `{b}` have different sorts"));
                }
                Ok(Exchange::bool())
            }
            Expr::Var(x) => match self.var_kind(x) {
                Some(Scoped::Value(u)) => Ok(u),
                Some(Scoped::Channel) => rule("Send", format!("channel `{x}` used as a value")),
                None => Err(TypeError::Unbound(x.clone())),
            },
            Expr::Name(n) => Ok(Exchange::Sort(self.name_sort(n)?)),
            Expr::Endpoint(s, p) => rule("Send", format!("endpoint {s}[{p}] used as a value")),
        }
    }

    fn shared_type(&mut self, subject: &Subject, r: &'static str) -> Result<crate::types::GlobalType, TypeError> {
        let sort = match subject {
            Subject::Name(a) => Exchange::Sort(self.name_sort(a)?),
            Subject::Var(x) => match self.var_kind(x) {
                Some(Scoped::Value(u)) => self.subst.resolve(&u).apply(&self.subst),
                Some(Scoped::Channel) => return rule(r, format!("`{x}` is a session channel")),
                None => return Err(TypeError::Unbound(x.clone())),
            },
        };
        match sort {
            Exchange::Sort(Sort::Shared(g)) => Ok(*g),
            other => rule(r, format!("`{subject}` has sort {other}, not a shared name")),
        }
    }

    fn take(env: &mut IEnv, c: &Chan) -> LocalType {
        env.remove(c).unwrap_or(LocalType::End)
    }

    fn infer(&mut self, p: &Process) -> Result<IEnv, TypeError> {
        match p {
            Process::Inact => Ok(IEnv::new()),
            Process::Request {
                subject,
                role,
                var,
                body,
            }
            | Process::Accept {
                subject,
                role,
                var,
                body,
            } => {
                let is_req = matches!(p, Process::Request { .. });
                let r = if is_req { "MReq" } else { "MAcc" };
                let g = self.shared_type(subject, r)?;
                let max = g.max_role();
                if is_req && *role != max {
                    return rule(r, format!("request role {role} is not the highest role {max}"));
                }
                if !is_req && !(1 <= *role && *role < max) {
                    return rule(r, format!("accept role {role} is not below the highest role {max}"));
                }
                let t = g.project(*role).map_err(|e| TypeError::Rule {
                    rule: r,
                    detail: e.to_string(),
                })?;
                let x = Chan::Var(var.clone());
                let saved = self.hints.insert(x.clone(), t.clone());
                self.vars.push((var.clone(), Scoped::Channel));
                let res = self.infer(body);
                self.vars.pop();
                match saved {
                    Some(h) => self.hints.insert(x.clone(), h),
                    None => self.hints.remove(&x),
                };
                let mut env = res?;
                let used = Self::take(&mut env, &x);
                if !self.conform_local(&used, &t) {
                    return rule(
                        r,
                        format!("`{var}` is used at {} but the protocol gives {t}", used.apply(&self.subst)),
                    );
                }
                Ok(env)
            }
            Process::Send {
                chan,
                to,
                expr,
                body,
            } => {
                let delegated = match expr {
                    Expr::Endpoint(s, q) => Some(Chan::Endpoint(s.clone(), *q)),
                    Expr::Var(y) if matches!(self.var_kind(y), Some(Scoped::Channel)) => {
                        Some(Chan::Var(y.clone()))
                    }
                    _ => None,
                };
                match delegated {
                    Some(d) => {
                        if &d == chan {
                            return rule("Deleg", format!("{chan} delegates itself"));
                        }
                        let mut env = self.infer(body)?;
                        if env.contains_key(&d) {
                            return rule("Deleg", format!("delegated {d} is used by the continuation"));
                        }
                        let Some(td) = self.hints.get(&d).cloned() else {
                            return rule("Deleg", format!("cannot determine the type of delegated {d}"));
                        };
                        let t = Self::take(&mut env, chan);
                        env.insert(
                            chan.clone(),
                            LocalType::Send {
                                to: *to,
                                payload: Exchange::Session(Box::new(td.clone())),
                                cont: Box::new(t),
                            },
                        );
                        env.insert(d, td);
                        Ok(env)
                    }
                    None => {
                        let s = self.expr_sort(expr)?;
                        let mut env = self.infer(body)?;
                        let t = Self::take(&mut env, chan);
                        env.insert(
                            chan.clone(),
                            LocalType::Send {
                                to: *to,
                                payload: s,
                                cont: Box::new(t),
                            },
                        );
                        Ok(env)
                    }
                }
            }
            Process::Recv {
                chan,
                from,
                var,
                body,
            } => {
                if occurs_as_channel(body, var) {
                    self.vars.push((var.clone(), Scoped::Channel));
                    let res = self.infer(body);
                    self.vars.pop();
                    let mut env = res?;
                    let td = Self::take(&mut env, &Chan::Var(var.clone()));
                    let t = Self::take(&mut env, chan);
                    env.insert(
                        chan.clone(),
                        LocalType::Recv {
                            from: *from,
                            payload: Exchange::Session(Box::new(td)),
                            cont: Box::new(t),
                        },
                    );
                    Ok(env)
                } else {
                    let m = self.meta();
                    self.vars.push((var.clone(), Scoped::Value(m.clone())));
                    let res = self.infer(body);
                    self.vars.pop();
                    let mut env = res?;
                    let t = Self::take(&mut env, chan);
                    env.insert(
                        chan.clone(),
                        LocalType::Recv {
                            from: *from,
                            payload: m,
                            cont: Box::new(t),
                        },
                    );
                    Ok(env)
                }
            }
            Process::Select {
                chan,
                to,
                label,
                body,
            } => {
                let mut env = self.infer(body)?;
                let t = Self::take(&mut env, chan);
                env.insert(
                    chan.clone(),
                    LocalType::Select {
                        to: *to,
                        branches: vec![(label.clone(), t)],
                    },
                );
                Ok(env)
            }
            Process::Branch {
                chan,
                from,
                branches,
            } => {
                let mut rest: Option<IEnv> = None;
                let mut typed = Vec::new();
                let mut seen = BTreeSet::new();
                for (l, b) in branches {
                    if !seen.insert(l.clone()) {
                        return rule("Bra", format!("duplicate label {l}"));
                    }
                    let mut env = self.infer(b)?;
                    typed.push((l.clone(), Self::take(&mut env, chan)));
                    match &rest {
                        None => rest = Some(env),
                        Some(r) => {
                            let r = r.clone();
                            if !self.same_env(&r, &env) {
                                return rule("Bra", format!("branch {l} uses the other channels differently"));
                            }
                        }
                    }
                }
                let mut env = rest.unwrap_or_default();
                env.insert(
                    chan.clone(),
                    LocalType::Branch {
                        from: *from,
                        branches: typed,
                    },
                );
                Ok(env)
            }
            Process::If { cond, then, other } => {
                let s = self.expr_sort(cond)?;
                if !self.unify_exch(&s, &Exchange::bool()) {
                    return rule("If", format!("condition `{cond}` is not boolean"));
                }
                let a = self.infer(then)?;
                let b = self.infer(other)?;
                if !self.same_env(&a, &b) {
                    return rule("If", "branches have different session environments");
                }
                Ok(a)
            }
            Process::Par(a, b) => {
                let mut ea = self.infer(a)?;
                let eb = self.infer(b)?;
                for (c, t) in eb {
                    if ea.contains_key(&c) {
                        return rule("Conc", format!("{c} is used by both sides of a parallel"));
                    }
                    ea.insert(c, t);
                }
                Ok(ea)
            }
            Process::Hide { name, sort, body } => {
                if body.endpoint_sessions().contains(name) {
                    let mut env = self.infer(body)?;
                    let mut part = BTreeMap::new();
                    env.retain(|c, t| match c {
                        Chan::Endpoint(s, p) if s == name => {
                            part.insert(*p, t.clone());
                            false
                        }
                        _ => true,
                    });
                    let part: BTreeMap<Role, LocalType> = part
                        .into_iter()
                        .map(|(p, t)| (p, t.apply(&self.subst)))
                        .collect();
                    if !complete_roles(&part) || !pairwise_coherent(&part, &mut self.subst) {
                        let shown: Vec<String> =
                            part.iter().map(|(p, t)| format!("{name}[{p}]: {}", t.apply(&self.subst))).collect();
                        return rule("SRes", format!("session {name} is not fully coherent: {}", shown.join("; ")));
                    }
                    Ok(env)
                } else {
                    self.names.push((name.clone(), sort.clone()));
                    let res = self.infer(body);
                    self.names.pop();
                    res
                }
            }
            Process::Rec { var, body } => {
                let mut chans = BTreeSet::new();
                free_chans(body, &mut Vec::new(), &mut Vec::new(), &mut chans);
                let mut xenv = IEnv::new();
                let mut tvars = BTreeMap::new();
                for c in chans {
                    self.next_tvar += 1;
                    let t = format!("r{}", self.next_tvar);
                    xenv.insert(c.clone(), LocalType::Var(t.clone()));
                    tvars.insert(c, t);
                }
                self.proc_vars.push((var.clone(), xenv));
                let res = self.infer(body);
                self.proc_vars.pop();
                let mut env = res?;
                for (c, t) in tvars {
                    let body_t = Self::take(&mut env, &c);
                    let closed = if body_t == LocalType::Var(t.clone()) {
                        LocalType::End
                    } else if mentions_tvar(&body_t, &t) {
                        LocalType::Rec(t, Box::new(body_t))
                    } else {
                        body_t
                    };
                    env.insert(c, closed);
                }
                Ok(env)
            }
            Process::Var(x) => self
                .proc_vars
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, e)| e.clone())
                .ok_or_else(|| TypeError::Rule {
                    rule: "Var",
                    detail: format!("process variable {x} is unbound"),
                }),
        }
    }

    /// Equality of two environments after dropping `end` entries.
    fn same_env(&mut self, a: &IEnv, b: &IEnv) -> bool {
        let strip = |e: &IEnv, s: &MetaSubst| -> IEnv {
            e.iter()
                .map(|(c, t)| (c.clone(), t.apply(s)))
                .filter(|(_, t)| !t.is_end())
                .collect()
        };
        let (a, b) = (strip(a, &self.subst), strip(b, &self.subst));
        if a.keys().ne(b.keys()) {
            return false;
        }
        a.iter()
            .zip(b.iter())
            .all(|((_, x), (_, y))| self.unify_local(x, y))
    }
}

fn mentions_tvar(t: &LocalType, v: &str) -> bool {
    match t {
        LocalType::Send { cont, .. } | LocalType::Recv { cont, .. } => mentions_tvar(cont, v),
        LocalType::Select { branches, .. } | LocalType::Branch { branches, .. } => {
            branches.iter().any(|(_, x)| mentions_tvar(x, v))
        }
        LocalType::Rec(u, b) => u != v && mentions_tvar(b, v),
        LocalType::Var(u) => u == v,
        LocalType::End => false,
    }
}

fn to_session_env(env: IEnv, subst: &MetaSubst) -> Result<SessionEnv, TypeError> {
    let mut out = SessionEnv::new();
    for (c, t) in env {
        match c {
            Chan::Endpoint(s, p) => {
                let t = t.apply(subst);
                if !t.is_end() {
                    out.insert(&s, p, t);
                }
            }
            Chan::Var(x) => return Err(TypeError::Unbound(x)),
        }
    }
    Ok(out)
}

/// `Γ ⊢ e : S` for a closed expression.
pub fn typecheck_expr(gamma: &SharedEnv, e: &Expr) -> Result<Sort, TypeError> {
    let mut inf = Infer::new(gamma);
    match inf.expr_sort(e)?.apply(&inf.subst) {
        Exchange::Sort(s) => Ok(s),
        other => rule("Send", format!("`{e}` has no sort ({other})")),
    }
}

/// Least Δ with `Γ ⊢ P ▷ Δ`; `end` entries are never emitted.
pub fn infer(gamma: &SharedEnv, p: &Process) -> Result<SessionEnv, TypeError> {
    let mut inf = Infer::new(gamma);
    let env = inf.infer(p)?;
    let out = to_session_env(env, &inf.subst)?;
    for ((s, q), t) in &out.entries {
        if t.has_meta() {
            return rule(
                "Recv",
                format!("cannot determine the sort received on {s}[{q}]: {t}"),
            );
        }
    }
    Ok(out.canonical())
}

/// Like [`infer`], with the types in `hints` used to resolve payloads on
/// the endpoints they mention.
pub fn infer_hinted(gamma: &SharedEnv, p: &Process, hints: &SessionEnv) -> Result<SessionEnv, TypeError> {
    let mut inf = Infer::new(gamma);
    for ((s, q), t) in &hints.entries {
        inf.hints.insert(Chan::Endpoint(s.clone(), *q), t.clone());
    }
    let env = inf.infer(p)?;
    let out = to_session_env(env, &inf.subst)?;
    Ok(out.canonical())
}

/// `Γ ⊢ P ▷ Δ`: inference against `Δ`, allowing extra `end` entries.
pub fn check(gamma: &SharedEnv, p: &Process, delta: &SessionEnv) -> Result<(), TypeError> {
    let mut inf = Infer::new(gamma);
    for ((s, q), t) in &delta.entries {
        inf.hints.insert(Chan::Endpoint(s.clone(), *q), t.clone());
    }
    let env = inf.infer(p)?;
    let mut seen = BTreeSet::new();
    for (c, t) in &env {
        let Chan::Endpoint(s, q) = c else {
            return Err(TypeError::Unbound(c.to_string()));
        };
        seen.insert((s.clone(), *q));
        match delta.get(s, *q) {
            Some(expected) => {
                if !inf.conform_local(t, expected) {
                    return rule(
                        "Check",
                        format!("{c} is used at {} but Δ gives {expected}", t.apply(&inf.subst)),
                    );
                }
            }
            None => {
                if !t.apply(&inf.subst).is_end() {
                    return rule("Check", format!("{c} is used but not in Δ"));
                }
            }
        }
    }
    for (k, t) in &delta.entries {
        if !seen.contains(k) && !t.is_end() {
            return rule(
                "Complete",
                format!("{}[{}]: {t} is unused but not end", k.0, k.1),
            );
        }
    }
    Ok(())
}

fn exposed(t: &LocalType) -> LocalType {
    t.head_form()
}

/// One-step labelled reduction `Δ →λ Δ'`.
pub fn delta_labeled_step(delta: &SessionEnv) -> Vec<(GlobalLabel, SessionEnv)> {
    let mut out = Vec::new();
    for ((s, p), tp) in &delta.entries {
        let tp = exposed(tp);
        match &tp {
            LocalType::Send { to: q, payload, cont } => {
                let Some(tq) = delta.get(s, *q).map(exposed) else { continue };
                if let LocalType::Recv {
                    from,
                    payload: u2,
                    cont: c2,
                } = &tq
                {
                    if from == p && payload.equi_eq(u2) {
                        let mut next = delta.clone();
                        next.insert(s, *p, (**cont).clone());
                        next.insert(s, *q, (**c2).clone());
                        out.push((
                            GlobalLabel {
                                session: s.clone(),
                                act: Interaction::Msg {
                                    from: *p,
                                    to: *q,
                                    payload: payload.canonical(),
                                },
                            },
                            next.canonical(),
                        ));
                    }
                }
            }
            LocalType::Select { to: q, branches } => {
                let Some(tq) = delta.get(s, *q).map(exposed) else { continue };
                if let LocalType::Branch { from, branches: offered } = &tq {
                    if from != p {
                        continue;
                    }
                    let included = branches
                        .iter()
                        .all(|(l, _)| offered.iter().any(|(m, _)| m == l));
                    if !included {
                        continue;
                    }
                    for (l, tk) in branches {
                        let (_, tk2) = offered.iter().find(|(m, _)| m == l).expect("included");
                        let mut next = delta.clone();
                        next.insert(s, *p, tk.clone());
                        next.insert(s, *q, tk2.clone());
                        out.push((
                            GlobalLabel {
                                session: s.clone(),
                                act: Interaction::Sel {
                                    from: *p,
                                    to: *q,
                                    label: l.clone(),
                                },
                            },
                            next.canonical(),
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    out
}

/// One-step unlabelled reduction `Δ → Δ'`.
pub fn delta_step(delta: &SessionEnv) -> Vec<SessionEnv> {
    let mut out: Vec<SessionEnv> = delta_labeled_step(delta)
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Reflexive-transitive closure of `delta_step`, modulo `end` entries.
pub fn delta_reachable(delta: &SessionEnv) -> BTreeSet<SessionEnv> {
    let start = delta.canonical();
    let mut seen = BTreeSet::new();
    seen.insert(start.without_end());
    let mut queue = VecDeque::from([start]);
    while let Some(d) = queue.pop_front() {
        for next in delta_step(&d) {
            if seen.insert(next.without_end()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// `Δ1 ⇌ Δ2`: the two environments reduce to a common one.
pub fn delta_converges(d1: &SessionEnv, d2: &SessionEnv) -> bool {
    let r1 = delta_reachable(d1);
    delta_reachable(d2).iter().any(|d| r1.contains(d))
}

/// Coherence of one session, as a free function.
pub fn coherent_at(delta: &SessionEnv, s: &str) -> bool {
    delta.coherent_at(s)
}

/// `T_p↾q` and `dual(T_q↾p)` for a pair of endpoints, when defined.
pub fn pair_projections(tp: &LocalType, p: Role, tq: &LocalType, q: Role) -> Option<(BinaryType, BinaryType)> {
    Some((tp.project(q).ok()?, tq.project(p).ok()?.dual()))
}
