//! Workspace files: named Γs, global types, processes, Δs, witnesses, the
//! session table and the value universe.
//!
//! ```text
//! global G_a = 1->3:<U>.2->3:<U>.end;
//! gamma G { a : <G_a>; v : U; }
//! proc P1 = a[1](x).x[3]!<v>.0;
//! proc Sys = P1 | P2;
//! delta D0 { s_a[1]: 3!<U>.end; }
//! witness E1 { s_a : G_a; }
//! sessions { t : 1->2:<U>.end; }
//! values { v, w }
//! ```
//!
//! A bare identifier naming an earlier `global` (as a type variable) or
//! `proc` (as a process variable) is replaced by its definition.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::Process;
use crate::bisim::Query;
use crate::genv::GlobalEnv;
use crate::parse::{ParseError, Parser};
use crate::types::{Exchange, GlobalType, LocalType, Sort};
use crate::typing::{parse_session_env, parse_shared_env, SessionEnv, SharedEnv};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkspaceError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{kind} `{name}` is declared twice")]
    Duplicate { kind: &'static str, name: String },
    #[error("no {kind} named `{name}`")]
    Unresolved { kind: &'static str, name: String },
}

#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub globals: BTreeMap<String, GlobalType>,
    pub gammas: BTreeMap<String, SharedEnv>,
    pub procs: BTreeMap<String, Process>,
    pub deltas: BTreeMap<String, SessionEnv>,
    pub witnesses: BTreeMap<String, GlobalEnv>,
    pub sessions: BTreeMap<String, GlobalType>,
    pub values: Vec<String>,
}

fn insert<T>(
    map: &mut BTreeMap<String, T>,
    kind: &'static str,
    name: String,
    v: T,
) -> Result<(), WorkspaceError> {
    if map.contains_key(&name) {
        return Err(WorkspaceError::Duplicate { kind, name });
    }
    map.insert(name, v);
    Ok(())
}

impl Workspace {
    pub fn parse(src: &str) -> Result<Workspace, WorkspaceError> {
        let mut ws = Workspace::default();
        let mut p = Parser::new(src)?;
        while !p.at_eof() {
            if p.is_kw("global") {
                p.expect_kw("global")?;
                let name = p.ident()?;
                p.expect_sym("=")?;
                let g = ws.expand_global(&p.global()?, &mut vec![]);
                p.expect_sym(";")?;
                insert(&mut ws.globals, "global", name, g)?;
            } else if p.is_kw("gamma") {
                p.expect_kw("gamma")?;
                let name = p.ident()?;
                p.expect_sym("{")?;
                let mut g = SharedEnv::new();
                while !p.is_sym("}") {
                    let n = p.ident()?;
                    p.expect_sym(":")?;
                    let s = ws.expand_sort(&p.sort()?);
                    if g.names.insert(n.clone(), s).is_some() {
                        return Err(WorkspaceError::Duplicate { kind: "gamma entry", name: n });
                    }
                    if !(p.eat_sym(";") || p.eat_sym(",")) {
                        break;
                    }
                }
                p.expect_sym("}")?;
                p.eat_sym(";");
                insert(&mut ws.gammas, "gamma", name, g)?;
            } else if p.is_kw("proc") {
                p.expect_kw("proc")?;
                let name = p.ident()?;
                p.expect_sym("=")?;
                let body = ws.expand_process(&p.process()?);
                p.expect_sym(";")?;
                insert(&mut ws.procs, "proc", name, body)?;
            } else if p.is_kw("delta") {
                p.expect_kw("delta")?;
                let name = p.ident()?;
                p.expect_sym("{")?;
                let mut d = SessionEnv::new();
                while !p.is_sym("}") {
                    let (s, r) = p.endpoint()?;
                    p.expect_sym(":")?;
                    let t = ws.expand_local(&p.local()?);
                    if d.contains(&s, r) {
                        return Err(WorkspaceError::Duplicate {
                            kind: "delta entry",
                            name: format!("{s}[{r}]"),
                        });
                    }
                    d.insert(&s, r, t);
                    if !(p.eat_sym(";") || p.eat_sym(",")) {
                        break;
                    }
                }
                p.expect_sym("}")?;
                p.eat_sym(";");
                insert(&mut ws.deltas, "delta", name, d)?;
            } else if p.is_kw("witness") || p.is_kw("sessions") {
                let witness = p.is_kw("witness");
                p.expect_kw(if witness { "witness" } else { "sessions" })?;
                let name = if witness { Some(p.ident()?) } else { None };
                p.expect_sym("{")?;
                let mut e = BTreeMap::new();
                while !p.is_sym("}") {
                    let s = p.ident()?;
                    p.expect_sym(":")?;
                    let g = ws.expand_global(&p.global()?, &mut vec![]);
                    if e.insert(s.clone(), g).is_some() {
                        return Err(WorkspaceError::Duplicate { kind: "session binding", name: s });
                    }
                    if !(p.eat_sym(";") || p.eat_sym(",")) {
                        break;
                    }
                }
                p.expect_sym("}")?;
                p.eat_sym(";");
                match name {
                    Some(n) => insert(&mut ws.witnesses, "witness", n, GlobalEnv { bindings: e })?,
                    None => {
                        for (s, g) in e {
                            insert(&mut ws.sessions, "session", s, g)?;
                        }
                    }
                }
            } else if p.is_kw("values") {
                p.expect_kw("values")?;
                p.expect_sym("{")?;
                while !p.is_sym("}") {
                    let v = p.ident()?;
                    if !ws.values.contains(&v) {
                        ws.values.push(v);
                    }
                    if !(p.eat_sym(",") || p.eat_sym(";")) {
                        break;
                    }
                }
                p.expect_sym("}")?;
                p.eat_sym(";");
            } else {
                return Ok(p.error("expected global, gamma, proc, delta, witness, sessions or values")?);
            }
        }
        Ok(ws)
    }

    fn expand_global(&self, g: &GlobalType, bound: &mut Vec<String>) -> GlobalType {
        match g {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => GlobalType::Msg {
                from: *from,
                to: *to,
                payload: self.expand_exchange(payload),
                cont: Box::new(self.expand_global(cont, bound)),
            },
            GlobalType::Choice { from, to, branches } => GlobalType::Choice {
                from: *from,
                to: *to,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), self.expand_global(b, bound)))
                    .collect(),
            },
            GlobalType::Rec(t, b) => {
                bound.push(t.clone());
                let b = self.expand_global(b, bound);
                bound.pop();
                GlobalType::Rec(t.clone(), Box::new(b))
            }
            GlobalType::Var(t) if !bound.contains(t) => match self.globals.get(t) {
                Some(def) => def.clone(),
                None => g.clone(),
            },
            GlobalType::Var(_) | GlobalType::End => g.clone(),
        }
    }

    fn expand_sort(&self, s: &Sort) -> Sort {
        match s {
            Sort::Shared(g) => Sort::Shared(Box::new(self.expand_global(g, &mut vec![]))),
            _ => s.clone(),
        }
    }

    fn expand_exchange(&self, u: &Exchange) -> Exchange {
        match u {
            Exchange::Sort(s) => Exchange::Sort(self.expand_sort(s)),
            Exchange::Session(t) => Exchange::Session(Box::new(self.expand_local(t))),
            Exchange::Meta(_) => u.clone(),
        }
    }

    fn expand_local(&self, t: &LocalType) -> LocalType {
        match t {
            LocalType::Send { to, payload, cont } => LocalType::Send {
                to: *to,
                payload: self.expand_exchange(payload),
                cont: Box::new(self.expand_local(cont)),
            },
            LocalType::Recv {
                from,
                payload,
                cont,
            } => LocalType::Recv {
                from: *from,
                payload: self.expand_exchange(payload),
                cont: Box::new(self.expand_local(cont)),
            },
            LocalType::Select { to, branches } => LocalType::Select {
                to: *to,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), self.expand_local(b)))
                    .collect(),
            },
            LocalType::Branch { from, branches } => LocalType::Branch {
                from: *from,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), self.expand_local(b)))
                    .collect(),
            },
            LocalType::Rec(v, b) => LocalType::Rec(v.clone(), Box::new(self.expand_local(b))),
            LocalType::Var(_) | LocalType::End => t.clone(),
        }
    }

    fn expand_process(&self, p: &Process) -> Process {
        // textual inclusion: restrictions around a reference do bind the
        // names inside the referenced body
        rebuild(
            p,
            &|name, sort, body| Process::Hide {
                name: name.to_string(),
                sort: sort.map(|s| self.expand_sort(s)),
                body: Box::new(body),
            },
            &|x| self.procs.get(x).cloned(),
            &mut vec![],
        )
    }

    pub fn proc(&self, name: &str) -> Result<&Process, WorkspaceError> {
        self.procs.get(name).ok_or_else(|| WorkspaceError::Unresolved {
            kind: "proc",
            name: name.to_string(),
        })
    }

    pub fn gamma(&self, name: &str) -> Result<&SharedEnv, WorkspaceError> {
        self.gammas.get(name).ok_or_else(|| WorkspaceError::Unresolved {
            kind: "gamma",
            name: name.to_string(),
        })
    }

    pub fn global(&self, name: &str) -> Result<&GlobalType, WorkspaceError> {
        self.globals.get(name).ok_or_else(|| WorkspaceError::Unresolved {
            kind: "global",
            name: name.to_string(),
        })
    }

    pub fn delta(&self, name: &str) -> Result<&SessionEnv, WorkspaceError> {
        self.deltas.get(name).ok_or_else(|| WorkspaceError::Unresolved {
            kind: "delta",
            name: name.to_string(),
        })
    }

    pub fn witness(&self, name: &str) -> Result<&GlobalEnv, WorkspaceError> {
        self.witnesses.get(name).ok_or_else(|| WorkspaceError::Unresolved {
            kind: "witness",
            name: name.to_string(),
        })
    }

    /// A declared process, or an inline process literal when `arg` is not a
    /// bare identifier.
    pub fn resolve_proc(&self, arg: &str) -> Result<Process, WorkspaceError> {
        if is_ident(arg) {
            return self.proc(arg).cloned();
        }
        let mut p = Parser::new(arg)?;
        let out = p.process()?;
        p.expect_eof()?;
        Ok(self.expand_process(&out))
    }

    pub fn resolve_gamma(&self, arg: &str) -> Result<SharedEnv, WorkspaceError> {
        if is_ident(arg) {
            return self.gamma(arg).cloned();
        }
        let g = parse_shared_env(arg)?;
        Ok(SharedEnv {
            names: g.names.iter().map(|(n, s)| (n.clone(), self.expand_sort(s))).collect(),
        })
    }

    pub fn resolve_delta(&self, arg: &str) -> Result<SessionEnv, WorkspaceError> {
        if is_ident(arg) {
            return self.delta(arg).cloned();
        }
        let d = parse_session_env(arg)?;
        Ok(SessionEnv {
            entries: d.entries.iter().map(|(k, t)| (k.clone(), self.expand_local(t))).collect(),
        })
    }

    pub fn resolve_global(&self, arg: &str) -> Result<GlobalType, WorkspaceError> {
        if is_ident(arg) {
            return self.global(arg).cloned();
        }
        let mut p = Parser::new(arg)?;
        let g = p.global()?;
        p.expect_eof()?;
        Ok(self.expand_global(&g, &mut vec![]))
    }

    /// Global types available for extruded sessions.
    pub fn session_types(&self) -> Vec<GlobalType> {
        self.sessions.values().cloned().collect()
    }

    /// A bisimulation query over declared (or inline) items. Absent Γ or Δ
    /// are empty; restrictions are annotated from Γ.
    pub fn query(
        &self,
        gamma: Option<&str>,
        left: (&str, Option<&str>),
        right: (&str, Option<&str>),
        witness: Option<&str>,
    ) -> Result<Query, WorkspaceError> {
        let g = match gamma {
            Some(g) => self.resolve_gamma(g)?,
            None => SharedEnv::new(),
        };
        let side = |(p, d): (&str, Option<&str>)| -> Result<(Process, SessionEnv), WorkspaceError> {
            let d = match d {
                Some(d) => self.resolve_delta(d)?,
                None => SessionEnv::new(),
            };
            Ok((annotate_from_gamma(&self.resolve_proc(p)?, &g), d))
        };
        let (p1, d1) = side(left)?;
        let (p2, d2) = side(right)?;
        let mut q = Query::new(g.clone(), p1, d1, p2, d2);
        q.sessions = self.session_types();
        if let Some(w) = witness {
            q = q.governed_by(self.witness(w)?.clone());
        }
        Ok(q)
    }
}

fn is_ident(s: &str) -> bool {
    let s = s.trim();
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

type HideFn<'a> = &'a dyn Fn(&str, Option<&Sort>, Process) -> Process;
type VarFn<'a> = &'a dyn Fn(&str) -> Option<Process>;

/// Rebuilds `p` bottom-up, passing every restriction through `f` and
/// replacing free process variables for which `var` has a body.
fn rebuild(p: &Process, f: HideFn, var: VarFn, recs: &mut Vec<String>) -> Process {
    let mut m = |q: &Process| Box::new(rebuild(q, f, var, recs));
    match p {
        Process::Request {
            subject,
            role,
            var,
            body,
        } => Process::Request {
            subject: subject.clone(),
            role: *role,
            var: var.clone(),
            body: m(body),
        },
        Process::Accept {
            subject,
            role,
            var,
            body,
        } => Process::Accept {
            subject: subject.clone(),
            role: *role,
            var: var.clone(),
            body: m(body),
        },
        Process::Send {
            chan,
            to,
            expr,
            body,
        } => Process::Send {
            chan: chan.clone(),
            to: *to,
            expr: expr.clone(),
            body: m(body),
        },
        Process::Recv {
            chan,
            from,
            var,
            body,
        } => Process::Recv {
            chan: chan.clone(),
            from: *from,
            var: var.clone(),
            body: m(body),
        },
        Process::Select {
            chan,
            to,
            label,
            body,
        } => Process::Select {
            chan: chan.clone(),
            to: *to,
            label: label.clone(),
            body: m(body),
        },
        Process::Branch {
            chan,
            from,
            branches,
        } => Process::Branch {
            chan: chan.clone(),
            from: *from,
            branches: branches.iter().map(|(l, b)| (l.clone(), rebuild(b, f, var, recs))).collect(),
        },
        Process::If { cond, then, other } => {
            let then = m(then);
            Process::If {
                cond: cond.clone(),
                then,
                other: m(other),
            }
        }
        Process::Par(a, b) => {
            let a = m(a);
            Process::Par(a, m(b))
        }
        Process::Hide { name, sort, body } => {
            let body = rebuild(body, f, var, recs);
            f(name, sort.as_ref(), body)
        }
        Process::Rec { var: x, body } => {
            recs.push(x.clone());
            let body = rebuild(body, f, var, recs);
            recs.pop();
            Process::Rec { var: x.clone(), body: Box::new(body) }
        }
        Process::Var(x) if !recs.contains(x) => var(x).unwrap_or_else(|| p.clone()),
        Process::Inact | Process::Var(_) => p.clone(),
    }
}

/// Gives unannotated restrictions of shared names the sort `Γ` declares for
/// that name.
pub fn annotate_from_gamma(p: &Process, gamma: &SharedEnv) -> Process {
    let hide = |name: &str, sort: Option<&Sort>, body: Process| {
        let sort = match sort {
            Some(s) => Some(s.clone()),
            None if !body.endpoint_sessions().contains(name) => gamma.get(name).cloned(),
            None => None,
        };
        Process::Hide {
            name: name.to_string(),
            sort,
            body: Box::new(body),
        }
    };
    rebuild(p, &hide, &|_| None, &mut vec![])
}
