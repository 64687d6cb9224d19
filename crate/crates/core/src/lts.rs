//! Labelled transition system for processes, the reduction semantics, and
//! bounded state-space exploration.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Display, Formatter};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ast::{Chan, Process, Role, Subject, Value};
use crate::normal::{components, normal_form};
use crate::parse::{parse_process, ParseError, Parser};
use crate::types::Sort;

pub const DEFAULT_MAX_STATES: usize = 10_000;
pub const DEFAULT_UNFOLD_BOUND: usize = 16;

/// Internal name for the bound object of a label before a fresh name is
/// picked.
const PENDING: &str = "#new";
const INPUT_HOLE: &str = "#x";

/// Transition labels `ℓ`. Variant order is the tie-break order used when
/// successors are listed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionLabel {
    /// `a<A>(s)`
    Acc {
        shared: String,
        roles: BTreeSet<Role>,
        session: String,
    },
    /// `a~<A>(s)`
    Req {
        shared: String,
        roles: BTreeSet<Role>,
        session: String,
    },
    /// `s!<p,q,v>`
    Out {
        session: String,
        from: Role,
        to: Role,
        value: Value,
    },
    /// `s!<p,q,(a)>`
    BOutName {
        session: String,
        from: Role,
        to: Role,
        name: String,
    },
    /// `s!<p,q,(s'[r])>`
    BOutSess {
        session: String,
        from: Role,
        to: Role,
        endpoint: (String, Role),
    },
    /// `s?<p,q,v>`: endpoint `s[p]` receives from `q`.
    In {
        session: String,
        at: Role,
        from: Role,
        value: Value,
    },
    /// `s(+)<p,q,l>`
    Sel {
        session: String,
        from: Role,
        to: Role,
        label: String,
    },
    /// `s&<p,q,l>`: endpoint `s[p]` is offered `l` by `q`.
    Bra {
        session: String,
        at: Role,
        from: Role,
        label: String,
    },
    Tau,
}

impl ActionLabel {
    pub fn is_tau(&self) -> bool {
        matches!(self, ActionLabel::Tau)
    }

    /// Session of a session action.
    pub fn session(&self) -> Option<&str> {
        match self {
            ActionLabel::Out { session, .. }
            | ActionLabel::BOutName { session, .. }
            | ActionLabel::BOutSess { session, .. }
            | ActionLabel::In { session, .. }
            | ActionLabel::Sel { session, .. }
            | ActionLabel::Bra { session, .. } => Some(session),
            _ => None,
        }
    }

    /// The endpoint `s[p]` performing the action.
    pub fn subject(&self) -> Option<(&str, Role)> {
        match self {
            ActionLabel::Out { session, from, .. }
            | ActionLabel::BOutName { session, from, .. }
            | ActionLabel::BOutSess { session, from, .. }
            | ActionLabel::Sel { session, from, .. } => Some((session, *from)),
            ActionLabel::In { session, at, .. } | ActionLabel::Bra { session, at, .. } => {
                Some((session, *at))
            }
            _ => None,
        }
    }

    /// The peer role `q` of a session action.
    pub fn peer(&self) -> Option<Role> {
        match self {
            ActionLabel::Out { to, .. }
            | ActionLabel::BOutName { to, .. }
            | ActionLabel::BOutSess { to, .. }
            | ActionLabel::Sel { to, .. } => Some(*to),
            ActionLabel::In { from, .. } | ActionLabel::Bra { from, .. } => Some(*from),
            _ => None,
        }
    }

    /// Name bound by the label (`bn(ℓ)`).
    pub fn bound_name(&self) -> Option<&str> {
        match self {
            ActionLabel::Acc { session, .. } | ActionLabel::Req { session, .. } => Some(session),
            ActionLabel::BOutName { name, .. } => Some(name),
            ActionLabel::BOutSess { endpoint, .. } => Some(&endpoint.0),
            _ => None,
        }
    }

    /// Every name occurring in the label.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match self {
            ActionLabel::Acc { shared, session, .. } | ActionLabel::Req { shared, session, .. } => {
                out.insert(shared.clone());
                out.insert(session.clone());
            }
            ActionLabel::Out { session, value, .. } | ActionLabel::In { session, value, .. } => {
                out.insert(session.clone());
                out.extend(value.names().into_iter().map(str::to_string));
            }
            ActionLabel::BOutName { session, name, .. } => {
                out.insert(session.clone());
                out.insert(name.clone());
            }
            ActionLabel::BOutSess {
                session, endpoint, ..
            } => {
                out.insert(session.clone());
                out.insert(endpoint.0.clone());
            }
            ActionLabel::Sel { session, .. } | ActionLabel::Bra { session, .. } => {
                out.insert(session.clone());
            }
            ActionLabel::Tau => {}
        }
        out
    }

    /// Renames a name everywhere in the label.
    pub fn rename(&self, from: &str, to: &str) -> ActionLabel {
        let r = |n: &String| if n == from { to.to_string() } else { n.clone() };
        let rv = |v: &Value| match v {
            Value::Name(n) => Value::Name(r(n)),
            Value::Endpoint(s, p) => Value::Endpoint(r(s), *p),
            b => b.clone(),
        };
        match self {
            ActionLabel::Acc {
                shared,
                roles,
                session,
            } => ActionLabel::Acc {
                shared: r(shared),
                roles: roles.clone(),
                session: r(session),
            },
            ActionLabel::Req {
                shared,
                roles,
                session,
            } => ActionLabel::Req {
                shared: r(shared),
                roles: roles.clone(),
                session: r(session),
            },
            ActionLabel::Out {
                session,
                from: p,
                to: q,
                value,
            } => ActionLabel::Out {
                session: r(session),
                from: *p,
                to: *q,
                value: rv(value),
            },
            ActionLabel::BOutName {
                session,
                from: p,
                to: q,
                name,
            } => ActionLabel::BOutName {
                session: r(session),
                from: *p,
                to: *q,
                name: r(name),
            },
            ActionLabel::BOutSess {
                session,
                from: p,
                to: q,
                endpoint,
            } => ActionLabel::BOutSess {
                session: r(session),
                from: *p,
                to: *q,
                endpoint: (r(&endpoint.0), endpoint.1),
            },
            ActionLabel::In {
                session,
                at,
                from: q,
                value,
            } => ActionLabel::In {
                session: r(session),
                at: *at,
                from: *q,
                value: rv(value),
            },
            ActionLabel::Sel {
                session,
                from: p,
                to: q,
                label,
            } => ActionLabel::Sel {
                session: r(session),
                from: *p,
                to: *q,
                label: label.clone(),
            },
            ActionLabel::Bra {
                session,
                at,
                from: q,
                label,
            } => ActionLabel::Bra {
                session: r(session),
                at: *at,
                from: *q,
                label: label.clone(),
            },
            ActionLabel::Tau => ActionLabel::Tau,
        }
    }
}

fn role_set(f: &mut Formatter<'_>, roles: &BTreeSet<Role>) -> fmt::Result {
    write!(f, "{{")?;
    for (i, r) in roles.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{r}")?;
    }
    write!(f, "}}")
}

impl Display for ActionLabel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ActionLabel::Acc {
                shared,
                roles,
                session,
            } => {
                write!(f, "{shared}<")?;
                role_set(f, roles)?;
                write!(f, ">({session})")
            }
            ActionLabel::Req {
                shared,
                roles,
                session,
            } => {
                write!(f, "{shared}~<")?;
                role_set(f, roles)?;
                write!(f, ">({session})")
            }
            ActionLabel::Out {
                session,
                from,
                to,
                value,
            } => write!(f, "{session}!<{from},{to},{value}>"),
            ActionLabel::BOutName {
                session,
                from,
                to,
                name,
            } => write!(f, "{session}!<{from},{to},({name})>"),
            ActionLabel::BOutSess {
                session,
                from,
                to,
                endpoint: (s, r),
            } => write!(f, "{session}!<{from},{to},({s}[{r}])>"),
            ActionLabel::In {
                session,
                at,
                from,
                value,
            } => write!(f, "{session}?<{at},{from},{value}>"),
            ActionLabel::Sel {
                session,
                from,
                to,
                label,
            } => write!(f, "{session}(+)<{from},{to},{label}>"),
            ActionLabel::Bra {
                session,
                at,
                from,
                label,
            } => write!(f, "{session}&<{at},{from},{label}>"),
            ActionLabel::Tau => write!(f, "tau"),
        }
    }
}

fn parse_value(p: &mut Parser) -> Result<Value, ParseError> {
    let n = p.ident()?;
    if p.eat_sym("[") {
        let r = p.int()?;
        p.expect_sym("]")?;
        return Ok(Value::Endpoint(n, r));
    }
    Ok(match n.as_str() {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::Name(n),
    })
}

fn parse_label(src: &str) -> Result<ActionLabel, ParseError> {
    let mut p = Parser::new(src)?;
    let head = p.ident()?;
    if head == "tau" && p.at_eof() {
        return Ok(ActionLabel::Tau);
    }
    let label = if p.is_sym("<") || p.is_sym("~") {
        let req = p.eat_sym("~");
        p.expect_sym("<")?;
        p.expect_sym("{")?;
        let mut roles = BTreeSet::new();
        loop {
            roles.insert(p.int()?);
            if !p.eat_sym(",") {
                break;
            }
        }
        p.expect_sym("}")?;
        p.expect_sym(">")?;
        p.expect_sym("(")?;
        let session = p.ident()?;
        p.expect_sym(")")?;
        if req {
            ActionLabel::Req {
                shared: head,
                roles,
                session,
            }
        } else {
            ActionLabel::Acc {
                shared: head,
                roles,
                session,
            }
        }
    } else {
        let kind = if p.eat_sym("!") {
            '!'
        } else if p.eat_sym("?") {
            '?'
        } else if p.eat_sym("(+)") {
            '+'
        } else if p.eat_sym("&") {
            '&'
        } else {
            return p.error("expected a label");
        };
        p.expect_sym("<")?;
        let a = p.int()?;
        p.expect_sym(",")?;
        let b = p.int()?;
        p.expect_sym(",")?;
        let session = head;
        let l = match kind {
            '!' if p.eat_sym("(") => {
                let n = p.ident()?;
                let l = if p.eat_sym("[") {
                    let r = p.int()?;
                    p.expect_sym("]")?;
                    ActionLabel::BOutSess {
                        session,
                        from: a,
                        to: b,
                        endpoint: (n, r),
                    }
                } else {
                    ActionLabel::BOutName {
                        session,
                        from: a,
                        to: b,
                        name: n,
                    }
                };
                p.expect_sym(")")?;
                l
            }
            '!' => ActionLabel::Out {
                session,
                from: a,
                to: b,
                value: parse_value(&mut p)?,
            },
            '?' => ActionLabel::In {
                session,
                at: a,
                from: b,
                value: parse_value(&mut p)?,
            },
            '+' => ActionLabel::Sel {
                session,
                from: a,
                to: b,
                label: p.ident()?,
            },
            _ => ActionLabel::Bra {
                session,
                at: a,
                from: b,
                label: p.ident()?,
            },
        };
        p.expect_sym(">")?;
        l
    };
    p.expect_eof()?;
    Ok(label)
}

impl FromStr for ActionLabel {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_label(s)
    }
}

impl Serialize for ActionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ActionLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `ℓ1 ≍ ℓ2`.
pub fn dual_labels(l1: &ActionLabel, l2: &ActionLabel) -> bool {
    let one = |a: &ActionLabel, b: &ActionLabel| match (a, b) {
        (
            ActionLabel::Out {
                session,
                from,
                to,
                value,
            },
            ActionLabel::In {
                session: s2,
                at,
                from: f2,
                value: v2,
            },
        ) => session == s2 && to == at && from == f2 && value == v2,
        (
            ActionLabel::BOutName {
                session,
                from,
                to,
                name,
            },
            ActionLabel::In {
                session: s2,
                at,
                from: f2,
                value: Value::Name(n2),
            },
        ) => session == s2 && to == at && from == f2 && name == n2,
        (
            ActionLabel::BOutSess {
                session,
                from,
                to,
                endpoint,
            },
            ActionLabel::In {
                session: s2,
                at,
                from: f2,
                value: Value::Endpoint(e, r),
            },
        ) => session == s2 && to == at && from == f2 && endpoint.0 == *e && endpoint.1 == *r,
        (
            ActionLabel::Sel {
                session,
                from,
                to,
                label,
            },
            ActionLabel::Bra {
                session: s2,
                at,
                from: f2,
                label: l2,
            },
        ) => session == s2 && to == at && from == f2 && label == l2,
        _ => false,
    };
    one(l1, l2) || one(l2, l1)
}

/// `A` is complete w.r.t. `n`: `n = max(A)` and `A = {1..n}`.
pub fn complete_role_set(roles: &BTreeSet<Role>, n: Role) -> bool {
    roles.iter().next_back() == Some(&n) && roles.len() == n as usize && roles.iter().next() == Some(&1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepConfig {
    pub unfold_bound: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            unfold_bound: DEFAULT_UNFOLD_BOUND,
        }
    }
}

/// A labelled move of a subterm; `opened` carries the restriction annotation
/// of a name extruded by the label.
#[derive(Debug, Clone)]
struct Move {
    label: ActionLabel,
    proc: Process,
    opened: Option<Sort>,
}

/// A pending input: `template{v/#x}` is the residual after receiving `v`.
#[derive(Debug, Clone)]
pub struct InputOffer {
    pub session: String,
    pub at: Role,
    pub from: Role,
    template: Process,
}

impl InputOffer {
    pub fn receive(&self, v: &Value) -> Process {
        self.template.subst_var(INPUT_HOLE, v)
    }
}

#[derive(Default)]
struct Moves {
    moves: Vec<Move>,
    offers: Vec<InputOffer>,
}

struct Stepper {
    cfg: StepConfig,
    truncated: bool,
}

fn wrap(p: Process, bound: Option<(&str, Option<Sort>)>) -> Process {
    match bound {
        Some((n, sort)) => Process::Hide {
            name: n.to_string(),
            sort,
            body: Box::new(p),
        },
        None => p,
    }
}

impl Stepper {
    fn moves(&mut self, p: &Process, depth: usize) -> Moves {
        let mut out = Moves::default();
        match p {
            Process::Request {
                subject: Subject::Name(a),
                role,
                var,
                body,
            } => out.moves.push(Move {
                label: ActionLabel::Req {
                    shared: a.clone(),
                    roles: BTreeSet::from([*role]),
                    session: PENDING.into(),
                },
                proc: body.subst_var(var, &Value::Endpoint(PENDING.into(), *role)),
                opened: None,
            }),
            Process::Accept {
                subject: Subject::Name(a),
                role,
                var,
                body,
            } => out.moves.push(Move {
                label: ActionLabel::Acc {
                    shared: a.clone(),
                    roles: BTreeSet::from([*role]),
                    session: PENDING.into(),
                },
                proc: body.subst_var(var, &Value::Endpoint(PENDING.into(), *role)),
                opened: None,
            }),
            Process::Send {
                chan: Chan::Endpoint(s, from),
                to,
                expr,
                body,
            } => {
                if let Some(value) = expr.eval() {
                    out.moves.push(Move {
                        label: ActionLabel::Out {
                            session: s.clone(),
                            from: *from,
                            to: *to,
                            value,
                        },
                        proc: (**body).clone(),
                        opened: None,
                    });
                }
            }
            Process::Recv {
                chan: Chan::Endpoint(s, at),
                from,
                var,
                body,
            } => out.offers.push(InputOffer {
                session: s.clone(),
                at: *at,
                from: *from,
                template: body.rename_var(var, INPUT_HOLE),
            }),
            Process::Select {
                chan: Chan::Endpoint(s, from),
                to,
                label,
                body,
            } => out.moves.push(Move {
                label: ActionLabel::Sel {
                    session: s.clone(),
                    from: *from,
                    to: *to,
                    label: label.clone(),
                },
                proc: (**body).clone(),
                opened: None,
            }),
            Process::Branch {
                chan: Chan::Endpoint(s, at),
                from,
                branches,
            } => {
                for (l, b) in branches {
                    out.moves.push(Move {
                        label: ActionLabel::Bra {
                            session: s.clone(),
                            at: *at,
                            from: *from,
                            label: l.clone(),
                        },
                        proc: b.clone(),
                        opened: None,
                    });
                }
            }
            Process::If { cond, then, other } => match cond.eval() {
                Some(Value::Bool(true)) => out.moves.push(Move {
                    label: ActionLabel::Tau,
                    proc: (**then).clone(),
                    opened: None,
                }),
                Some(Value::Bool(false)) => out.moves.push(Move {
                    label: ActionLabel::Tau,
                    proc: (**other).clone(),
                    opened: None,
                }),
                _ => {}
            },
            Process::Par(a, b) => {
                let ma = self.moves(a, depth);
                let mb = self.moves(b, depth);
                self.sync(&ma, &mb, false, &mut out);
                self.sync(&mb, &ma, true, &mut out);
                for m in &ma.moves {
                    out.moves.push(Move {
                        label: m.label.clone(),
                        proc: Process::par(m.proc.clone(), (**b).clone()),
                        opened: m.opened.clone(),
                    });
                }
                for m in &mb.moves {
                    out.moves.push(Move {
                        label: m.label.clone(),
                        proc: Process::par((**a).clone(), m.proc.clone()),
                        opened: m.opened.clone(),
                    });
                }
                for o in ma.offers {
                    out.offers.push(InputOffer {
                        template: Process::par(o.template, (**b).clone()),
                        ..o
                    });
                }
                for o in mb.offers {
                    out.offers.push(InputOffer {
                        template: Process::par((**a).clone(), o.template),
                        ..o
                    });
                }
            }
            Process::Hide { name, sort, body } => {
                let inner = self.moves(body, depth);
                for m in inner.moves {
                    if let Some(m) = restrict(name, sort, m) {
                        out.moves.push(m);
                    }
                }
                for o in inner.offers {
                    if o.session != *name {
                        out.offers.push(InputOffer {
                            template: Process::Hide {
                                name: name.clone(),
                                sort: sort.clone(),
                                body: Box::new(o.template),
                            },
                            ..o
                        });
                    }
                }
            }
            Process::Rec { .. } => {
                if depth >= self.cfg.unfold_bound {
                    self.truncated = true;
                } else {
                    return self.moves(&p.unfold(), depth + 1);
                }
            }
            _ => {}
        }
        out
    }

    /// Synchronisations between a move of one side and a move or offer of
    /// the other. `swapped` keeps the parallel order of the residual.
    fn sync(&self, left: &Moves, right: &Moves, swapped: bool, out: &mut Moves) {
        let par = |l: Process, r: Process| {
            if swapped {
                Process::par(r, l)
            } else {
                Process::par(l, r)
            }
        };
        for m in &left.moves {
            match &m.label {
                ActionLabel::Out {
                    session, from, to, ..
                }
                | ActionLabel::BOutName {
                    session, from, to, ..
                }
                | ActionLabel::BOutSess {
                    session, from, to, ..
                } => {
                    let (value, bound) = match &m.label {
                        ActionLabel::Out { value, .. } => (value.clone(), None),
                        ActionLabel::BOutName { name, .. } => {
                            (Value::Name(name.clone()), Some((name.as_str(), m.opened.clone())))
                        }
                        ActionLabel::BOutSess { endpoint, .. } => (
                            Value::Endpoint(endpoint.0.clone(), endpoint.1),
                            Some((endpoint.0.as_str(), None)),
                        ),
                        _ => unreachable!(),
                    };
                    for o in &right.offers {
                        if o.session == *session && o.at == *to && o.from == *from {
                            out.moves.push(Move {
                                label: ActionLabel::Tau,
                                proc: wrap(par(m.proc.clone(), o.receive(&value)), bound.clone()),
                                opened: None,
                            });
                        }
                    }
                }
                ActionLabel::Sel {
                    session,
                    from,
                    to,
                    label,
                } => {
                    for n in &right.moves {
                        if let ActionLabel::Bra {
                            session: s2,
                            at,
                            from: f2,
                            label: l2,
                        } = &n.label
                        {
                            if s2 == session && at == to && f2 == from && l2 == label {
                                out.moves.push(Move {
                                    label: ActionLabel::Tau,
                                    proc: par(m.proc.clone(), n.proc.clone()),
                                    opened: None,
                                });
                            }
                        }
                    }
                }
                ActionLabel::Acc { shared, roles, .. } => {
                    for n in &right.moves {
                        match &n.label {
                            // AccPar: only once per unordered pair.
                            ActionLabel::Acc {
                                shared: a2,
                                roles: r2,
                                ..
                            } if !swapped && a2 == shared && roles.is_disjoint(r2) => {
                                out.moves.push(Move {
                                    label: ActionLabel::Acc {
                                        shared: shared.clone(),
                                        roles: roles.union(r2).copied().collect(),
                                        session: PENDING.into(),
                                    },
                                    proc: par(m.proc.clone(), n.proc.clone()),
                                    opened: None,
                                });
                            }
                            ActionLabel::Req {
                                shared: a2,
                                roles: r2,
                                ..
                            } if a2 == shared && roles.is_disjoint(r2) => {
                                let all: BTreeSet<Role> = roles.union(r2).copied().collect();
                                let max = *r2.iter().next_back().expect("non-empty");
                                let residual = par(m.proc.clone(), n.proc.clone());
                                if complete_role_set(&all, max) {
                                    out.moves.push(Move {
                                        label: ActionLabel::Tau,
                                        proc: wrap(residual, Some((PENDING, None))),
                                        opened: None,
                                    });
                                } else {
                                    out.moves.push(Move {
                                        label: ActionLabel::Req {
                                            shared: shared.clone(),
                                            roles: all,
                                            session: PENDING.into(),
                                        },
                                        proc: residual,
                                        opened: None,
                                    });
                                }
                            }
                            _ => {}
                        }
                    }
                }
                _ => {}
            }
        }
    }
}

/// ⟨Res⟩, ⟨OpenN⟩ and ⟨OpenS⟩ for a move under `(new n)`.
fn restrict(n: &str, sort: &Option<Sort>, m: Move) -> Option<Move> {
    let hide = |p: Process| Process::Hide {
        name: n.to_string(),
        sort: sort.clone(),
        body: Box::new(p),
    };
    match &m.label {
        ActionLabel::Tau => Some(Move {
            proc: hide(m.proc),
            ..m
        }),
        ActionLabel::Out {
            session,
            from,
            to,
            value,
        } if session != n => match value {
            Value::Name(x) if x == n => Some(Move {
                label: ActionLabel::BOutName {
                    session: session.clone(),
                    from: *from,
                    to: *to,
                    name: PENDING.into(),
                },
                proc: m.proc.rename_name(n, PENDING),
                opened: sort.clone(),
            }),
            Value::Endpoint(x, r) if x == n => Some(Move {
                label: ActionLabel::BOutSess {
                    session: session.clone(),
                    from: *from,
                    to: *to,
                    endpoint: (PENDING.into(), *r),
                },
                proc: m.proc.rename_name(n, PENDING),
                opened: None,
            }),
            _ => Some(Move {
                proc: hide(m.proc),
                ..m
            }),
        },
        l if l.names().contains(n) => None,
        _ => Some(Move {
            proc: hide(m.proc),
            ..m
        }),
    }
}

/// Successors of a process together with the pending inputs.
#[derive(Debug, Clone, Default)]
pub struct StepResult {
    pub moves: Vec<(ActionLabel, Process)>,
    pub offers: Vec<InputOffer>,
    pub truncated: bool,
}

/// Smallest `{base}{k}` not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply")
}

/// Output moves and pending inputs of `p` (already normalised or not).
/// Bound objects of labels get the smallest fresh `#sK` / `#aK` outside
/// `avoid` and the free names of `p`. Residuals are in normal form.
pub fn step_symbolic(p: &Process, avoid: &BTreeSet<String>, cfg: StepConfig) -> StepResult {
    let mut st = Stepper {
        cfg,
        truncated: false,
    };
    let ms = st.moves(p, 0);
    let mut taken = p.free_idents();
    taken.extend(avoid.iter().cloned());
    let mut moves: Vec<(ActionLabel, Process)> = ms
        .moves
        .into_iter()
        .map(|m| match m.label.bound_name() {
            Some(b) if b == PENDING => {
                let base = if matches!(m.label, ActionLabel::BOutName { .. }) {
                    "#a"
                } else {
                    "#s"
                };
                let fresh = fresh_name(base, &taken);
                (m.label.rename(PENDING, &fresh), normal_form(&m.proc.rename_name(PENDING, &fresh)))
            }
            _ => (m.label, normal_form(&m.proc)),
        })
        .collect();
    moves.sort();
    moves.dedup();
    StepResult {
        moves,
        offers: ms.offers,
        truncated: st.truncated,
    }
}

/// `P →ℓ P'` with inputs instantiated by `inputs(session, at, from)`.
pub fn step_with(
    p: &Process,
    avoid: &BTreeSet<String>,
    cfg: StepConfig,
    inputs: &dyn Fn(&str, Role, Role) -> Vec<Value>,
) -> StepResult {
    let mut r = step_symbolic(p, avoid, cfg);
    for o in &r.offers {
        for v in inputs(&o.session, o.at, o.from) {
            r.moves.push((
                ActionLabel::In {
                    session: o.session.clone(),
                    at: o.at,
                    from: o.from,
                    value: v.clone(),
                },
                normal_form(&o.receive(&v)),
            ));
        }
    }
    r.moves.sort();
    r.moves.dedup();
    r
}

/// `P →ℓ P'` over a fixed input universe.
pub fn step(p: &Process, universe: &[Value], cfg: StepConfig) -> StepResult {
    step_with(p, &BTreeSet::new(), cfg, &|_, _, _| universe.to_vec())
}

/// Default input universe: both booleans, the free names of `p`, and `extra`.
pub fn default_universe(p: &Process, extra: &[String]) -> Vec<Value> {
    let mut names: BTreeSet<String> = p.free_idents();
    names.extend(extra.iter().cloned());
    let mut out = vec![Value::Bool(false), Value::Bool(true)];
    out.extend(names.into_iter().map(Value::Name));
    out
}

// ---- reduction semantics ---------------------------------------------------

/// A component and, for recursive ones, the components of one unfolding.
struct Node {
    proc: Process,
    names: Vec<(String, Option<Sort>)>,
    kids: Vec<Node>,
}

struct TreeBuilder {
    bound: usize,
    temp: usize,
}

impl TreeBuilder {
    fn node(&mut self, p: Process, depth: usize) -> Node {
        if !matches!(p, Process::Rec { .. }) || depth >= self.bound {
            return Node {
                proc: p,
                names: vec![],
                kids: vec![],
            };
        }
        let (names, comps) = components(&normal_form(&p.unfold()));
        let mut renamed_names = Vec::new();
        let mut comps = comps;
        for (n, s) in names {
            self.temp += 1;
            let t = format!("\u{3}{}", self.temp);
            comps = comps.iter().map(|c| c.rename_name(&n, &t)).collect();
            renamed_names.push((t, s));
        }
        let kids = comps.into_iter().map(|c| self.node(c, depth + 1)).collect();
        Node {
            proc: p,
            names: renamed_names,
            kids,
        }
    }
}

/// Leaves addressed by paths from the top-level component list.
fn leaves(nodes: &[Node], path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Process)>) {
    for (i, n) in nodes.iter().enumerate() {
        path.push(i);
        if n.kids.is_empty() && n.names.is_empty() && !matches!(n.proc, Process::Rec { .. }) {
            out.push((path.clone(), n.proc.clone()));
        } else {
            leaves(&n.kids, path, out);
        }
        path.pop();
    }
}

fn rebuild(nodes: &[Node], path: &mut Vec<usize>, repl: &BTreeMap<Vec<usize>, Process>) -> Vec<Process> {
    let mut out = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        path.push(i);
        if let Some(r) = repl.get(path) {
            out.push(r.clone());
        } else if repl.keys().any(|k| k.starts_with(path)) {
            let mut inner = Process::par_all(rebuild(&n.kids, path, repl));
            for (name, sort) in n.names.iter().rev() {
                inner = Process::Hide {
                    name: name.clone(),
                    sort: sort.clone(),
                    body: Box::new(inner),
                };
            }
            out.push(inner);
        } else {
            out.push(n.proc.clone());
        }
        path.pop();
    }
    out
}

/// One-step reducts `P → P'`, each in normal form.
pub fn reduce(p: &Process, cfg: StepConfig) -> Vec<Process> {
    let nf = normal_form(p);
    let (names, comps) = components(&nf);
    let mut tb = TreeBuilder {
        bound: cfg.unfold_bound,
        temp: 0,
    };
    let nodes: Vec<Node> = comps.into_iter().map(|c| tb.node(c, 0)).collect();
    let mut ls = Vec::new();
    leaves(&nodes, &mut Vec::new(), &mut ls);

    let mut results = Vec::new();
    let mut emit = |repl: BTreeMap<Vec<usize>, Process>, extra: Option<String>| {
        let mut body = Process::par_all(rebuild(&nodes, &mut Vec::new(), &repl));
        if let Some(s) = extra {
            body = Process::hide(s, body);
        }
        for (n, s) in names.iter().rev() {
            body = Process::Hide {
                name: n.clone(),
                sort: s.clone(),
                body: Box::new(body),
            };
        }
        results.push(normal_form(&body));
    };

    for (i, (pi, li)) in ls.iter().enumerate() {
        match li {
            Process::If { cond, then, other } => {
                let branch = match cond.eval() {
                    Some(Value::Bool(true)) => then,
                    Some(Value::Bool(false)) => other,
                    _ => continue,
                };
                emit(BTreeMap::from([(pi.clone(), (**branch).clone())]), None);
            }
            Process::Send {
                chan: Chan::Endpoint(s, p),
                to: q,
                expr,
                body,
            } => {
                let Some(v) = expr.eval() else { continue };
                for (j, (pj, lj)) in ls.iter().enumerate() {
                    if let Process::Recv {
                        chan: Chan::Endpoint(s2, q2),
                        from: p2,
                        var,
                        body: b2,
                    } = lj
                    {
                        if i != j && s2 == s && q2 == q && p2 == p {
                            emit(
                                BTreeMap::from([
                                    (pi.clone(), (**body).clone()),
                                    (pj.clone(), b2.subst_var(var, &v)),
                                ]),
                                None,
                            );
                        }
                    }
                }
            }
            Process::Select {
                chan: Chan::Endpoint(s, p),
                to: q,
                label,
                body,
            } => {
                for (j, (pj, lj)) in ls.iter().enumerate() {
                    if let Process::Branch {
                        chan: Chan::Endpoint(s2, q2),
                        from: p2,
                        branches,
                    } = lj
                    {
                        if i == j || s2 != s || q2 != q || p2 != p {
                            continue;
                        }
                        if let Some((_, b)) = branches.iter().find(|(l, _)| l == label) {
                            emit(
                                BTreeMap::from([(pi.clone(), (**body).clone()), (pj.clone(), b.clone())]),
                                None,
                            );
                        }
                    }
                }
            }
            Process::Request {
                subject: Subject::Name(a),
                role: n,
                var,
                body,
            } if *n > 1 => {
                // a lone request has no accept to sync with, same as the lts
                let fresh = format!("\u{4}{i}");
                let mut choices: Vec<Vec<(usize, Process)>> = Vec::new();
                for k in 1..*n {
                    let cands: Vec<(usize, Process)> = ls
                        .iter()
                        .enumerate()
                        .filter_map(|(j, (_, lj))| match lj {
                            Process::Accept {
                                subject: Subject::Name(a2),
                                role,
                                var: x,
                                body: b,
                            } if a2 == a && *role == k => {
                                Some((j, b.subst_var(x, &Value::Endpoint(fresh.clone(), k))))
                            }
                            _ => None,
                        })
                        .collect();
                    choices.push(cands);
                }
                let mut combos: Vec<Vec<(usize, Process)>> = vec![vec![]];
                for cands in &choices {
                    let mut next = Vec::new();
                    for c in &combos {
                        for cand in cands {
                            let mut c2 = c.clone();
                            c2.push(cand.clone());
                            next.push(c2);
                        }
                    }
                    combos = next;
                }
                for combo in combos {
                    let mut repl = BTreeMap::new();
                    repl.insert(pi.clone(), body.subst_var(var, &Value::Endpoint(fresh.clone(), *n)));
                    for (j, b) in combo {
                        repl.insert(ls[j].0.clone(), b);
                    }
                    emit(repl, Some(fresh.clone()));
                }
            }
            _ => {}
        }
    }
    results.sort();
    results.dedup();
    results
}

// ---- barbs -----------------------------------------------------------------

/// Observable offers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Barb {
    /// `s[p][q]`: output or selection by `s[p]` to `q`.
    Session { session: String, from: Role, to: Role },
    /// A request or (governed) shared-name availability on `a`.
    Shared(String),
}

impl Display for Barb {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Barb::Session { session, from, to } => write!(f, "{session}[{from}][{to}]"),
            Barb::Shared(a) => write!(f, "{a}"),
        }
    }
}

/// Heads of the top-level components, unfolding recursion up to `bound`.
fn heads(p: &Process, bound: usize) -> (BTreeSet<String>, Vec<Process>) {
    let nf = normal_form(p);
    let (names, comps) = components(&nf);
    let mut tb = TreeBuilder { bound, temp: 0 };
    let nodes: Vec<Node> = comps.into_iter().map(|c| tb.node(c, 0)).collect();
    let mut ls = Vec::new();
    leaves(&nodes, &mut Vec::new(), &mut ls);
    let mut hidden: BTreeSet<String> = names.into_iter().map(|(n, _)| n).collect();
    fn collect(ns: &[Node], hidden: &mut BTreeSet<String>) {
        for n in ns {
            hidden.extend(n.names.iter().map(|(x, _)| x.clone()));
            collect(&n.kids, hidden);
        }
    }
    collect(&nodes, &mut hidden);
    (hidden, ls.into_iter().map(|(_, p)| p).collect())
}

/// `Γ ⊢ P ▷ Δ ↓ s[p][q]` and `↓ a`.
pub fn barbs(p: &Process, delta: &crate::typing::SessionEnv) -> BTreeSet<Barb> {
    let (hidden, hs) = heads(p, DEFAULT_UNFOLD_BOUND);
    let mut out = BTreeSet::new();
    for h in hs {
        match &h {
            Process::Send {
                chan: Chan::Endpoint(s, from),
                to,
                ..
            }
            | Process::Select {
                chan: Chan::Endpoint(s, from),
                to,
                ..
            } => {
                if !hidden.contains(s) && !delta.contains(s, *to) {
                    out.insert(Barb::Session {
                        session: s.clone(),
                        from: *from,
                        to: *to,
                    });
                }
            }
            Process::Request {
                subject: Subject::Name(a),
                ..
            } if !hidden.contains(a) => {
                out.insert(Barb::Shared(a.clone()));
            }
            _ => {}
        }
    }
    out
}

// ---- graphs ----------------------------------------------------------------

/// A finite fragment of the LTS. State 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtsGraph {
    pub states: Vec<Process>,
    pub transitions: Vec<(usize, ActionLabel, usize)>,
    pub truncated: bool,
}

#[derive(Serialize, Deserialize)]
struct StateDto {
    id: usize,
    term: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeDto {
    from: usize,
    label: ActionLabel,
    to: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphDto {
    states: Vec<StateDto>,
    transitions: Vec<EdgeDto>,
    truncated: bool,
}

impl Serialize for LtsGraph {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphDto {
            states: self
                .states
                .iter()
                .enumerate()
                .map(|(id, p)| StateDto {
                    id,
                    term: p.to_string(),
                })
                .collect(),
            transitions: self
                .transitions
                .iter()
                .map(|(from, label, to)| EdgeDto {
                    from: *from,
                    label: label.clone(),
                    to: *to,
                })
                .collect(),
            truncated: self.truncated,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LtsGraph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let dto = GraphDto::deserialize(d)?;
        let mut states = vec![Process::Inact; dto.states.len()];
        for st in dto.states {
            let p = parse_process(&st.term).map_err(serde::de::Error::custom)?;
            *states
                .get_mut(st.id)
                .ok_or_else(|| serde::de::Error::custom(format!("state id {} out of range", st.id)))? = p;
        }
        Ok(LtsGraph {
            states,
            transitions: dto
                .transitions
                .into_iter()
                .map(|e| (e.from, e.label, e.to))
                .collect(),
            truncated: dto.truncated,
        })
    }
}

impl LtsGraph {
    pub fn successors(&self, s: usize) -> impl Iterator<Item = &(usize, ActionLabel, usize)> {
        self.transitions.iter().filter(move |(f, _, _)| *f == s)
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, ActionLabel, usize)> {
        self.transitions.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExploreConfig {
    pub max_states: usize,
    pub step: StepConfig,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            max_states: DEFAULT_MAX_STATES,
            step: StepConfig::default(),
        }
    }
}

/// Breadth-first closure of `step` from `p`.
pub fn explore(p: &Process, universe: &[Value], cfg: ExploreConfig) -> LtsGraph {
    let start = normal_form(p);
    let mut index: HashMap<Process, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    index.insert(start, 0);
    let mut transitions = Vec::new();
    let mut truncated = false;
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let r = step(&states[id], universe, cfg.step);
        truncated |= r.truncated;
        for (label, next) in r.moves {
            let to = match index.get(&next) {
                Some(&t) => t,
                None => {
                    if states.len() >= cfg.max_states {
                        truncated = true;
                        continue;
                    }
                    let t = states.len();
                    states.push(next.clone());
                    index.insert(next, t);
                    queue.push_back(t);
                    t
                }
            };
            transitions.push((id, label, to));
        }
    }
    LtsGraph {
        states,
        transitions,
        truncated,
    }
}

/// Saturated graph: `ℓ`-edges are `⇒ℓ` and `τ`-edges are `⇒` (reflexive).
pub fn weak_closure(g: &LtsGraph) -> LtsGraph {
    let n = g.states.len();
    let mut tau: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut vis: Vec<Vec<(ActionLabel, usize)>> = vec![Vec::new(); n];
    for (f, l, t) in &g.transitions {
        if l.is_tau() {
            tau[*f].push(*t);
        } else {
            vis[*f].push((l.clone(), *t));
        }
    }
    let closure: Vec<BTreeSet<usize>> = (0..n)
        .map(|s| {
            let mut seen = BTreeSet::from([s]);
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in &tau[x] {
                    if seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
            seen
        })
        .collect();
    let mut edges = BTreeSet::new();
    for s in 0..n {
        for &m in &closure[s] {
            edges.insert((s, ActionLabel::Tau, m));
            for (l, t) in &vis[m] {
                for &e in &closure[*t] {
                    edges.insert((s, l.clone(), e));
                }
            }
        }
    }
    LtsGraph {
        states: g.states.clone(),
        transitions: edges.into_iter().collect(),
        truncated: g.truncated,
    }
}

/// The `τ`-moves of `step`, which coincide with `reduce` up to `≡`.
pub fn tau_successors(p: &Process, cfg: StepConfig) -> Vec<Process> {
    let mut out: Vec<Process> = step_symbolic(&normal_form(p), &BTreeSet::new(), cfg)
        .moves
        .into_iter()
        .filter(|(l, _)| l.is_tau())
        .map(|(_, q)| q)
        .collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_process;

    fn p(s: &str) -> Process {
        parse_process(s).unwrap()
    }

    fn labels(src: &str) -> Vec<String> {
        step(&p(src), &[Value::Name("v".into())], StepConfig::default())
            .moves
            .iter()
            .map(|(l, _)| l.to_string())
            .collect()
    }

    #[test]
    fn label_round_trip() {
        for s in [
            "a<{1,2}>(s)",
            "a~<{3}>(s)",
            "s!<1,3,v>",
            "s!<1,3,(a)>",
            "s!<1,3,(t[2])>",
            "s?<3,1,true>",
            "s?<3,1,t[1]>",
            "s(+)<1,2,l>",
            "s&<2,1,l>",
            "tau",
        ] {
            let l: ActionLabel = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
    }

    #[test]
    fn accept_opens_a_fresh_session() {
        let ls = labels("a[1](x).b[1](y).x[3]!<v>.y[2]!<w>.0");
        assert_eq!(ls, vec!["a<{1}>(#s1)"]);
    }

    #[test]
    fn complete_initiation_is_internal() {
        let r = step(
            &p("a[1](x).x[3]!<v>.0 | a[2](x).x[3]!<v>.0 | a~[3](x).x[1]?(y).x[2]?(z).0"),
            &[],
            StepConfig::default(),
        );
        let (taus, vis): (Vec<_>, Vec<_>) = r.moves.iter().partition(|(l, _)| l.is_tau());
        assert_eq!(taus.len(), 1);
        assert!(vis.iter().any(|(l, _)| l.to_string() == "a<{1,2}>(#s1)"));
        assert!(vis.iter().any(|(l, _)| l.to_string() == "a~<{1,3}>(#s1)"));
        let incomplete = labels("a[1](x).0 | a~[3](y).0");
        assert!(incomplete.contains(&"a~<{1,3}>(#s1)".to_string()));
        assert!(!incomplete.contains(&"tau".to_string()));
    }

    #[test]
    fn role_sets() {
        assert!(!complete_role_set(&BTreeSet::from([1, 3, 4]), 4));
        assert!(complete_role_set(&BTreeSet::from([1, 2, 3, 4]), 4));
        assert!(!complete_role_set(&BTreeSet::from([1, 2, 3, 4]), 5));
    }

    #[test]
    fn restriction_blocks_and_opens() {
        assert!(labels("(new s)(s[1][2]!<v>.0)").is_empty());
        assert_eq!(labels("(new n : U)(t[1][2]!<n>.n[1][2]!<v>.0)"), vec!["t!<1,2,(#a1)>"]);
        assert_eq!(labels("(new r)(t[1][2]!<r[1]>.r[2][1]!<v>.0)"), vec!["t!<1,2,(#s1[1])>"]);
        let r = step(
            &p("(new r)(t[1][2]!<r[1]>.0 | t[2][1]?(y).y[2]!<v>.0)"),
            &[],
            StepConfig::default(),
        );
        let tau: Vec<_> = r.moves.iter().filter(|(l, _)| l.is_tau()).collect();
        assert_eq!(tau.len(), 1);
        assert!(normal_form(&tau[0].1).to_string().starts_with("(new %0)"));
    }

    #[test]
    fn communication_and_conditionals() {
        let src = "s[1][2]!<v>.0 | s[2][1]?(x).t[1][2]!<x>.0";
        assert!(reduce(&p(src), StepConfig::default()).contains(&normal_form(&p("t[1][2]!<v>.0"))));
        assert_eq!(
            reduce(&p("if true then s[1][2]!<v>.0 else 0"), StepConfig::default()),
            vec![normal_form(&p("s[1][2]!<v>.0"))]
        );
        assert_eq!(tau_successors(&p(src), StepConfig::default()), reduce(&p(src), StepConfig::default()));
    }

    #[test]
    fn recursion_is_unfolded_lazily() {
        let src = "rec X. s[1][2]!<v>.X | rec Y. s[2][1]?(z).Y";
        let r = reduce(&p(src), StepConfig::default());
        assert_eq!(r, tau_successors(&p(src), StepConfig::default()));
        assert_eq!(r, vec![normal_form(&p(src))]);
        let inner = "rec X. (s[1][2]!<v>.0 | s[2][1]?(z).X)";
        assert_eq!(reduce(&p(inner), StepConfig::default()), tau_successors(&p(inner), StepConfig::default()));
        let r = step(&p("rec X. X"), &[], StepConfig::default());
        assert!(r.moves.is_empty() && r.truncated);
    }

    #[test]
    fn explore_and_closure() {
        let g = explore(&p("s[1][2]!<v>.s[1][2]!<v>.0"), &[], ExploreConfig::default());
        assert_eq!(g.states.len(), 3);
        let w = weak_closure(&g);
        assert!(w.transitions.contains(&(0, ActionLabel::Tau, 0)));
        let json = serde_json::to_string(&g).unwrap();
        let back: LtsGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(explore(&Process::Inact, &[], ExploreConfig::default()).states.len(), 1);
    }

    #[test]
    fn barbs_respect_delta() {
        use crate::typing::SessionEnv;
        let q = p("s[1][2]!<v>.0");
        assert_eq!(barbs(&q, &SessionEnv::new()).len(), 1);
        let d = SessionEnv::new().with("s", 2, crate::types::LocalType::End);
        assert!(barbs(&q, &d).is_empty());
        assert!(barbs(&Process::Inact, &d).is_empty());
    }
}
