//! Global environments `E`: session names mapped to global types, their
//! labelled reduction, the environment LTS over `(Γ, Δ)` and the
//! configuration LTS over `(E, Γ, Δ)`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Display, Formatter};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{Process, Role, Value};
use crate::lts::{ActionLabel, Barb, DEFAULT_MAX_STATES, DEFAULT_UNFOLD_BOUND};
use crate::typing::{check, delta_labeled_step, delta_step, SessionEnv, SharedEnv};
use crate::types::{Exchange, GlobalType, LocalType, ProjectionError, Sort};

/// Interaction `p -> q : U` or `p -> q : l` of a global type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interaction {
    Msg { from: Role, to: Role, payload: Exchange },
    Sel { from: Role, to: Role, label: String },
}

impl Interaction {
    pub fn from(&self) -> Role {
        match self {
            Interaction::Msg { from, .. } | Interaction::Sel { from, .. } => *from,
        }
    }

    pub fn to(&self) -> Role {
        match self {
            Interaction::Msg { to, .. } | Interaction::Sel { to, .. } => *to,
        }
    }

    fn involves(&self, r: Role) -> bool {
        self.from() == r || self.to() == r
    }

    /// Same interaction, payloads compared up to unfolding.
    pub fn matches(&self, other: &Interaction) -> bool {
        match (self, other) {
            (
                Interaction::Msg { from, to, payload },
                Interaction::Msg {
                    from: f2,
                    to: t2,
                    payload: p2,
                },
            ) => from == f2 && to == t2 && payload.equi_eq(p2),
            (a @ Interaction::Sel { .. }, b @ Interaction::Sel { .. }) => a == b,
            _ => false,
        }
    }
}

/// `s : p -> q : U` / `s : p -> q : l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GlobalLabel {
    pub session: String,
    pub act: Interaction,
}

impl GlobalLabel {
    pub fn matches(&self, other: &GlobalLabel) -> bool {
        self.session == other.session && self.act.matches(&other.act)
    }
}

impl Display for Interaction {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Interaction::Msg { from, to, payload } => write!(f, "{from}->{to}:<{payload}>"),
            Interaction::Sel { from, to, label } => write!(f, "{from}->{to}:{label}"),
        }
    }
}

impl Display for GlobalLabel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.session, self.act)
    }
}

/// `E ::= ∅ | E·s:G`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalEnv {
    pub bindings: BTreeMap<String, GlobalType>,
}

impl GlobalEnv {
    pub fn new() -> GlobalEnv {
        GlobalEnv::default()
    }

    pub fn with(mut self, s: &str, g: GlobalType) -> GlobalEnv {
        self.bindings.insert(s.to_string(), g);
        self
    }

    pub fn get(&self, s: &str) -> Option<&GlobalType> {
        self.bindings.get(s)
    }

    pub fn canonical(&self) -> GlobalEnv {
        GlobalEnv {
            bindings: self
                .bindings
                .iter()
                .map(|(s, g)| (s.clone(), g.canonical()))
                .collect(),
        }
    }

    pub fn sessions(&self) -> impl Iterator<Item = &String> {
        self.bindings.keys()
    }
}

impl Display for GlobalEnv {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (s, g)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{s}: {g}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenvError {
    #[error("recursive global type exceeds the unfold bound {0}")]
    UnfoldBoundExceeded(usize),
    #[error("more than {0} global environments are reachable")]
    TooManyEnvironments(usize),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenvConfig {
    pub unfold_bound: usize,
    pub max_envs: usize,
}

impl Default for GenvConfig {
    fn default() -> Self {
        GenvConfig {
            unfold_bound: DEFAULT_UNFOLD_BOUND,
            max_envs: DEFAULT_MAX_STATES,
        }
    }
}

/// `{E}`: the union of the projection sets of every binding.
pub fn projset(e: &GlobalEnv) -> Result<SessionEnv, ProjectionError> {
    let mut out = SessionEnv::new();
    for (s, g) in &e.bindings {
        for p in g.roles() {
            out.insert(s, p, g.project(p)?.canonical());
        }
    }
    Ok(out)
}

fn gstep(g: &GlobalType, depth: usize, bound: usize) -> Result<Vec<(Interaction, GlobalType)>, GenvError> {
    let mut out = Vec::new();
    match g {
        GlobalType::Msg {
            from,
            to,
            payload,
            cont,
        } => {
            out.push((
                Interaction::Msg {
                    from: *from,
                    to: *to,
                    payload: payload.canonical(),
                },
                (**cont).clone(),
            ));
            for (l, c) in gstep(cont, depth, bound)? {
                if !l.involves(*from) && !l.involves(*to) {
                    out.push((
                        l,
                        GlobalType::Msg {
                            from: *from,
                            to: *to,
                            payload: payload.clone(),
                            cont: Box::new(c),
                        },
                    ));
                }
            }
        }
        GlobalType::Choice { from, to, branches } => {
            for (l, b) in branches {
                out.push((
                    Interaction::Sel {
                        from: *from,
                        to: *to,
                        label: l.clone(),
                    },
                    b.clone(),
                ));
            }
            // ⟨SBPerm⟩: every branch performs the same λ.
            let mut per_branch: Vec<BTreeMap<Interaction, Vec<GlobalType>>> = Vec::new();
            for (_, b) in branches {
                let mut m: BTreeMap<Interaction, Vec<GlobalType>> = BTreeMap::new();
                for (l, c) in gstep(b, depth, bound)? {
                    if !l.involves(*from) && !l.involves(*to) {
                        m.entry(l).or_default().push(c);
                    }
                }
                per_branch.push(m);
            }
            if let Some(first) = per_branch.first() {
                for l in first.keys() {
                    if !per_branch.iter().all(|m| m.contains_key(l)) {
                        continue;
                    }
                    let mut combos: Vec<Vec<GlobalType>> = vec![vec![]];
                    for m in &per_branch {
                        let mut next = Vec::new();
                        for c in &combos {
                            for g2 in &m[l] {
                                let mut c2 = c.clone();
                                c2.push(g2.clone());
                                next.push(c2);
                            }
                        }
                        combos = next;
                    }
                    for combo in combos {
                        out.push((
                            l.clone(),
                            GlobalType::Choice {
                                from: *from,
                                to: *to,
                                branches: branches
                                    .iter()
                                    .map(|(lab, _)| lab.clone())
                                    .zip(combo)
                                    .collect(),
                            },
                        ));
                    }
                }
            }
        }
        GlobalType::Rec(..) => {
            if depth >= bound {
                return Err(GenvError::UnfoldBoundExceeded(bound));
            }
            return gstep(&g.unfold(), depth + 1, bound);
        }
        GlobalType::Var(_) | GlobalType::End => {}
    }
    Ok(out)
}

/// `E →λ E'`.
pub fn genv_step(e: &GlobalEnv, cfg: GenvConfig) -> Result<Vec<(GlobalLabel, GlobalEnv)>, GenvError> {
    let mut out = Vec::new();
    for (s, g) in &e.bindings {
        for (act, g2) in gstep(g, 0, cfg.unfold_bound)? {
            let mut next = e.clone();
            next.bindings.insert(s.clone(), g2.canonical());
            out.push((
                GlobalLabel {
                    session: s.clone(),
                    act,
                },
                next,
            ));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// `{E' | E →* E'}`.
pub fn genv_reachable(e: &GlobalEnv, cfg: GenvConfig) -> Result<BTreeSet<GlobalEnv>, GenvError> {
    let start = e.canonical();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        for (_, y) in genv_step(&x, cfg)? {
            if seen.insert(y.clone()) {
                if seen.len() > cfg.max_envs {
                    return Err(GenvError::TooManyEnvironments(cfg.max_envs));
                }
                queue.push_back(y);
            }
        }
    }
    Ok(seen)
}

fn value_sort(g: &SharedEnv, v: &Value) -> Option<Exchange> {
    match v {
        Value::Bool(_) => Some(Exchange::bool()),
        Value::Name(a) => g.get(a).cloned().map(Exchange::Sort),
        Value::Endpoint(..) => None,
    }
}

/// `(Γ, Δ) →ℓ (Γ', Δ')`. For a bound session output `revealed` holds the
/// types of the extruded session's remaining endpoints.
pub fn env_step(
    g: &SharedEnv,
    d: &SessionEnv,
    l: &ActionLabel,
    revealed: &SessionEnv,
) -> Vec<(SharedEnv, SessionEnv)> {
    let head = |s: &str, p: Role| d.get(s, p).map(LocalType::head_form);
    let done = |d2: SessionEnv| d2.canonical();
    match l {
        ActionLabel::Acc {
            shared,
            roles,
            session,
        }
        | ActionLabel::Req {
            shared,
            roles,
            session,
        } => {
            let Some(Sort::Shared(gt)) = g.get(shared) else {
                return vec![];
            };
            if d.uses_session(session) {
                return vec![];
            }
            let mut d2 = d.clone();
            for &i in roles {
                match gt.project(i) {
                    Ok(t) => d2.insert(session, i, t),
                    Err(_) => return vec![],
                }
            }
            vec![(g.clone(), done(d2))]
        }
        ActionLabel::Out {
            session: s,
            from: p,
            to: q,
            value,
        } => {
            if d.contains(s, *q) {
                return vec![];
            }
            let Some(LocalType::Send { to, payload, cont }) = head(s, *p) else {
                return vec![];
            };
            if to != *q {
                return vec![];
            }
            let mut d2 = d.clone();
            match value {
                Value::Endpoint(s2, p2) => {
                    let Exchange::Session(t2) = &payload else {
                        return vec![];
                    };
                    match d.get(s2, *p2) {
                        Some(held) if crate::types::equi_eq(held, t2.as_ref()) => {}
                        _ => return vec![],
                    }
                    d2.remove(s2, *p2);
                }
                v => match value_sort(g, v) {
                    Some(u) if u.equi_eq(&payload) => {}
                    _ => return vec![],
                },
            }
            d2.insert(s, *p, *cont);
            vec![(g.clone(), done(d2))]
        }
        ActionLabel::BOutName {
            session: s,
            from: p,
            to: q,
            name,
        } => {
            if d.contains(s, *q) || g.get(name).is_some() {
                return vec![];
            }
            let Some(LocalType::Send { to, payload, cont }) = head(s, *p) else {
                return vec![];
            };
            let Exchange::Sort(u) = payload else {
                return vec![];
            };
            if to != *q {
                return vec![];
            }
            let mut d2 = d.clone();
            d2.insert(s, *p, *cont);
            let mut g2 = g.clone();
            g2.names.insert(name.clone(), u);
            vec![(g2, done(d2))]
        }
        ActionLabel::BOutSess {
            session: s,
            from: p,
            to: q,
            endpoint: (s2, p2),
        } => {
            if d.contains(s, *q) || d.uses_session(s2) {
                return vec![];
            }
            let Some(LocalType::Send { to, payload, cont }) = head(s, *p) else {
                return vec![];
            };
            let Exchange::Session(t2) = payload else {
                return vec![];
            };
            if to != *q {
                return vec![];
            }
            let mut whole = revealed.clone();
            if whole.entries.keys().any(|(x, _)| x != s2) || whole.contains(s2, *p2) {
                return vec![];
            }
            whole.insert(s2, *p2, *t2);
            if !whole.fully_coherent_at(s2) {
                return vec![];
            }
            let mut d2 = d.clone();
            d2.insert(s, *p, *cont);
            for (k, t) in &revealed.entries {
                d2.entries.insert(k.clone(), t.clone());
            }
            vec![(g.clone(), done(d2))]
        }
        ActionLabel::In {
            session: s,
            at: p,
            from: q,
            value,
        } => {
            if d.contains(s, *q) {
                return vec![];
            }
            let Some(LocalType::Recv {
                from,
                payload,
                cont,
            }) = head(s, *p)
            else {
                return vec![];
            };
            if from != *q {
                return vec![];
            }
            let mut d2 = d.clone();
            let mut g2 = g.clone();
            match (value, &payload) {
                (Value::Endpoint(s2, p2), Exchange::Session(t2)) => {
                    if d.contains(s2, *p2) {
                        return vec![];
                    }
                    d2.insert(s2, *p2, (**t2).clone());
                }
                (Value::Endpoint(..), _) | (_, Exchange::Session(_)) | (_, Exchange::Meta(_)) => return vec![],
                (Value::Bool(_), u) => {
                    if !u.equi_eq(&Exchange::bool()) {
                        return vec![];
                    }
                }
                (Value::Name(a), Exchange::Sort(u)) => match g.get(a) {
                    Some(sa) => {
                        if !Exchange::Sort(sa.clone()).equi_eq(&Exchange::Sort(u.clone())) {
                            return vec![];
                        }
                    }
                    None => {
                        g2.names.insert(a.clone(), u.clone());
                    }
                },
            }
            d2.insert(s, *p, *cont);
            vec![(g2, done(d2))]
        }
        ActionLabel::Sel {
            session: s,
            from: p,
            to: q,
            label,
        } => {
            if d.contains(s, *q) {
                return vec![];
            }
            let Some(LocalType::Select { to, branches }) = head(s, *p) else {
                return vec![];
            };
            if to != *q {
                return vec![];
            }
            let Some((_, t)) = branches.into_iter().find(|(l, _)| l == label) else {
                return vec![];
            };
            let mut d2 = d.clone();
            d2.insert(s, *p, t);
            vec![(g.clone(), done(d2))]
        }
        ActionLabel::Bra {
            session: s,
            at: p,
            from: q,
            label,
        } => {
            if d.contains(s, *q) {
                return vec![];
            }
            let Some(LocalType::Branch { from, branches }) = head(s, *p) else {
                return vec![];
            };
            if from != *q {
                return vec![];
            }
            let Some((_, t)) = branches.into_iter().find(|(l, _)| l == label) else {
                return vec![];
            };
            let mut d2 = d.clone();
            d2.insert(s, *p, t);
            vec![(g.clone(), done(d2))]
        }
        ActionLabel::Tau => {
            let mut out = vec![(g.clone(), d.canonical())];
            for d2 in delta_step(d) {
                out.push((g.clone(), d2));
            }
            out.sort();
            out.dedup();
            out
        }
    }
}

/// The global label `λ` a session action must be matched with, reading the
/// payload sort from `Δ`.
pub fn label_lambda(l: &ActionLabel, d: &SessionEnv) -> Option<GlobalLabel> {
    let (s, p) = l.subject()?;
    let head = d.get(s, p)?.head_form();
    let act = match (l, head) {
        (
            ActionLabel::Out { to, .. } | ActionLabel::BOutName { to, .. } | ActionLabel::BOutSess { to, .. },
            LocalType::Send { payload, .. },
        ) => Interaction::Msg {
            from: p,
            to: *to,
            payload: payload.canonical(),
        },
        (ActionLabel::In { from, .. }, LocalType::Recv { payload, .. }) => Interaction::Msg {
            from: *from,
            to: p,
            payload: payload.canonical(),
        },
        (ActionLabel::Sel { to, label, .. }, _) => Interaction::Sel {
            from: p,
            to: *to,
            label: label.clone(),
        },
        (ActionLabel::Bra { from, label, .. }, _) => Interaction::Sel {
            from: *from,
            to: p,
            label: label.clone(),
        },
        _ => return None,
    };
    Some(GlobalLabel {
        session: s.to_string(),
        act,
    })
}

/// `(E, Γ, Δ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnvConfig {
    pub e: GlobalEnv,
    pub g: SharedEnv,
    pub d: SessionEnv,
}

/// Memoising evaluator for the global-environment judgements. `sessions`
/// lists global types available for extruded sessions (⟨ResS⟩).
pub struct Governor {
    pub cfg: GenvConfig,
    pub sessions: Vec<GlobalType>,
    reach: RefCell<HashMap<GlobalEnv, Rc<Vec<GlobalEnv>>>>,
    proj: RefCell<HashMap<GlobalEnv, Option<SessionEnv>>>,
    steps: RefCell<HashMap<GlobalEnv, Rc<Vec<(GlobalLabel, GlobalEnv)>>>>,
    configs: RefCell<HashMap<(GlobalEnv, SessionEnv), bool>>,
}

impl Governor {
    pub fn new(cfg: GenvConfig, sessions: Vec<GlobalType>) -> Governor {
        Governor {
            cfg,
            sessions,
            reach: RefCell::new(HashMap::new()),
            proj: RefCell::new(HashMap::new()),
            steps: RefCell::new(HashMap::new()),
            configs: RefCell::new(HashMap::new()),
        }
    }

    pub fn reachable(&self, e: &GlobalEnv) -> Result<Rc<Vec<GlobalEnv>>, GenvError> {
        let key = e.canonical();
        if let Some(r) = self.reach.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r: Rc<Vec<GlobalEnv>> = Rc::new(genv_reachable(&key, self.cfg)?.into_iter().collect());
        self.reach.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn projset(&self, e: &GlobalEnv) -> Option<SessionEnv> {
        if let Some(p) = self.proj.borrow().get(e) {
            return p.clone();
        }
        let p = projset(e).ok();
        self.proj.borrow_mut().insert(e.clone(), p.clone());
        p
    }

    fn governs(&self, e: &GlobalEnv, d: &SessionEnv) -> bool {
        self.projset(e).is_some_and(|ps| d.included_in(&ps))
    }

    /// `∃E'. E →* E' ∧ Δ ⊆ {E'}`.
    pub fn is_env_config(&self, e: &GlobalEnv, d: &SessionEnv) -> Result<bool, GenvError> {
        let key = (e.clone(), d.clone());
        if let Some(&b) = self.configs.borrow().get(&key) {
            return Ok(b);
        }
        let b = self.reachable(e)?.iter().any(|e2| self.governs(e2, d));
        self.configs.borrow_mut().insert(key, b);
        Ok(b)
    }

    fn genv_step(&self, e: &GlobalEnv) -> Result<Rc<Vec<(GlobalLabel, GlobalEnv)>>, GenvError> {
        if let Some(r) = self.steps.borrow().get(e) {
            return Ok(r.clone());
        }
        let r = Rc::new(genv_step(e, self.cfg)?);
        self.steps.borrow_mut().insert(e.clone(), r.clone());
        Ok(r)
    }

    /// Environment configuration and `Γ ⊢ P ▷ Δ`.
    pub fn is_governance_judgement(&self, c: &EnvConfig, p: &Process) -> Result<bool, GenvError> {
        Ok(self.is_env_config(&c.e, &c.d)? && check(&c.g, p, &c.d).is_ok())
    }

    /// `(E, Γ, Δ) →ℓ (E', Γ', Δ')`, ⟨Inv⟩ included.
    pub fn config_step(
        &self,
        c: &EnvConfig,
        l: &ActionLabel,
        revealed: &SessionEnv,
    ) -> Result<Vec<EnvConfig>, GenvError> {
        let mut out = BTreeSet::new();
        let reach = self.reachable(&c.e)?;
        for (g2, d2) in env_step(&c.g, &c.d, l, revealed) {
            match l {
                ActionLabel::Acc { shared, session, .. } | ActionLabel::Req { shared, session, .. } => {
                    let Some(Sort::Shared(gt)) = c.g.get(shared) else { continue };
                    if c.e.get(session).is_some() {
                        continue;
                    }
                    for e1 in reach.iter() {
                        let e2 = e1.clone().with(session, gt.canonical());
                        if self.is_env_config(&e2, &d2)? {
                            out.insert(EnvConfig {
                                e: e2,
                                g: g2.clone(),
                                d: d2.clone(),
                            });
                        }
                    }
                }
                ActionLabel::Tau => {
                    if d2 == c.d.canonical() {
                        for e1 in reach.iter() {
                            if self.is_env_config(e1, &d2)? {
                                out.insert(EnvConfig {
                                    e: e1.clone(),
                                    g: g2.clone(),
                                    d: d2.clone(),
                                });
                            }
                        }
                    }
                    for (lam, d3) in delta_labeled_step(&c.d) {
                        if d3 != d2 {
                            continue;
                        }
                        for e1 in reach.iter() {
                            if !self.governs(e1, &c.d) {
                                continue;
                            }
                            for (lam2, e2) in self.genv_step(e1)?.iter() {
                                if lam.matches(lam2) && self.is_env_config(e2, &d2)? {
                                    out.insert(EnvConfig {
                                        e: e2.clone(),
                                        g: g2.clone(),
                                        d: d2.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
                _ => {
                    let Some(lam) = label_lambda(l, &c.d) else { continue };
                    for e1 in reach.iter() {
                        if !self.governs(e1, &c.d) {
                            continue;
                        }
                        for (lam2, e2) in self.genv_step(e1)?.iter() {
                            if !lam.matches(lam2) {
                                continue;
                            }
                            let extended: Vec<GlobalEnv> = match l {
                                ActionLabel::BOutSess { endpoint, .. } => self
                                    .extruded_candidates(&endpoint.0, &d2)
                                    .into_iter()
                                    .map(|g| e2.clone().with(&endpoint.0, g))
                                    .collect(),
                                _ => vec![e2.clone()],
                            };
                            for e3 in extended {
                                if self.is_env_config(&e3, &d2)? {
                                    out.insert(EnvConfig {
                                        e: e3,
                                        g: g2.clone(),
                                        d: d2.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Declared session types whose projections cover the revealed
    /// endpoints of `s` in `d`.
    fn extruded_candidates(&self, s: &str, d: &SessionEnv) -> Vec<GlobalType> {
        let part = SessionEnv {
            entries: d
                .entries
                .iter()
                .filter(|((x, _), _)| x == s)
                .map(|(k, t)| (k.clone(), t.clone()))
                .collect(),
        };
        self.sessions
            .iter()
            .filter(|g| {
                let e = GlobalEnv::new().with(s, (*g).clone());
                self.projset(&e).is_some_and(|ps| part.included_in(&ps))
            })
            .map(GlobalType::canonical)
            .collect()
    }

    /// Governed barbs `E, Γ ⊢ P ▷ Δ ↓ s[p][q]` offered by `Δ`, plus the
    /// shared names of `Γ`.
    pub fn governed_barbs(&self, c: &EnvConfig) -> Result<BTreeSet<Barb>, GenvError> {
        let mut out = BTreeSet::new();
        for ((s, p), t) in &c.d.entries {
            let (q, act): (Role, Vec<Interaction>) = match t.head_form() {
                LocalType::Send { to, payload, .. } => (
                    to,
                    vec![Interaction::Msg {
                        from: *p,
                        to,
                        payload: payload.canonical(),
                    }],
                ),
                LocalType::Select { to, branches } => (
                    to,
                    branches
                        .iter()
                        .map(|(l, _)| Interaction::Sel {
                            from: *p,
                            to,
                            label: l.clone(),
                        })
                        .collect(),
                ),
                _ => continue,
            };
            if c.d.contains(s, q) {
                continue;
            }
            let mut offered = false;
            for e1 in self.reachable(&c.e)?.iter() {
                if !self.governs(e1, &c.d) {
                    continue;
                }
                for (lam, _) in self.genv_step(e1)?.iter() {
                    if lam.session == *s && act.iter().any(|a| a.matches(&lam.act)) {
                        offered = true;
                    }
                }
            }
            if offered {
                out.insert(Barb::Session {
                    session: s.clone(),
                    from: *p,
                    to: q,
                });
            }
        }
        for a in c.g.shared_names() {
            out.insert(Barb::Shared(a.clone()));
        }
        Ok(out)
    }
}

/// `(E, Γ, Δ)` is an environment configuration.
pub fn is_env_config(c: &EnvConfig, cfg: GenvConfig) -> Result<bool, GenvError> {
    Governor::new(cfg, vec![]).is_env_config(&c.e, &c.d)
}

/// `E, Γ ⊢ P ▷ Δ`.
pub fn is_governance_judgement(c: &EnvConfig, p: &Process, cfg: GenvConfig) -> Result<bool, GenvError> {
    Governor::new(cfg, vec![]).is_governance_judgement(c, p)
}

/// Configuration successors under `ℓ` (no extruded sessions).
pub fn config_step(c: &EnvConfig, l: &ActionLabel, cfg: GenvConfig) -> Result<Vec<EnvConfig>, GenvError> {
    Governor::new(cfg, vec![]).config_step(c, l, &SessionEnv::new())
}

pub fn governed_barbs(c: &EnvConfig, cfg: GenvConfig) -> Result<BTreeSet<Barb>, GenvError> {
    Governor::new(cfg, vec![]).governed_barbs(c)
}

/// `T1 ⊑ T2`.
pub fn type_leq(t1: &LocalType, t2: &LocalType) -> bool {
    t1.is_suffix_of(t2)
}

/// `G1 ⊑ G2`: per-role inclusion of projections.
pub fn global_leq(g1: &GlobalType, g2: &GlobalType) -> bool {
    let roles: BTreeSet<Role> = g1.roles().union(&g2.roles()).copied().collect();
    roles.iter().all(|&p| match (g1.project(p), g2.project(p)) {
        (Ok(t1), Ok(t2)) => type_leq(&t1, &t2),
        _ => false,
    })
}

/// `E1 ⊔ E2`; `None` when a shared session has incomparable bindings.
pub fn genv_join(e1: &GlobalEnv, e2: &GlobalEnv) -> Option<GlobalEnv> {
    let mut out = e1.clone();
    for (s, g2) in &e2.bindings {
        match e1.bindings.get(s) {
            None => {
                out.bindings.insert(s.clone(), g2.clone());
            }
            Some(g1) => {
                if g1 == g2 || global_leq(g2, g1) {
                    continue;
                } else if global_leq(g1, g2) {
                    out.bindings.insert(s.clone(), g2.clone());
                } else {
                    return None;
                }
            }
        }
    }
    Some(out)
}
