//! Global, local and binary session types, projections and duality.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::Role;

/// Value sorts `S ::= bool | atom | ⟨G⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Bool,
    /// Opaque atom sort, compared by name.
    Atom(String),
    /// Shared name carrying sessions of type `G`.
    Shared(Box<GlobalType>),
}

/// Exchanged payload `U ::= S | T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Exchange {
    Sort(Sort),
    /// Delegated session endpoint of the given local type.
    Session(Box<LocalType>),
    /// Unresolved sort; appears only while inference runs.
    Meta(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GlobalType {
    /// `p->q:<U>.G`
    Msg {
        from: Role,
        to: Role,
        payload: Exchange,
        cont: Box<GlobalType>,
    },
    /// `p->q:{l: G, ...}`
    Choice {
        from: Role,
        to: Role,
        branches: Vec<(String, GlobalType)>,
    },
    Rec(String, Box<GlobalType>),
    Var(String),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocalType {
    /// `q!<U>.T`
    Send {
        to: Role,
        payload: Exchange,
        cont: Box<LocalType>,
    },
    /// `q?(U).T`
    Recv {
        from: Role,
        payload: Exchange,
        cont: Box<LocalType>,
    },
    /// `q(+){l: T, ...}`
    Select {
        to: Role,
        branches: Vec<(String, LocalType)>,
    },
    /// `q&{l: T, ...}`
    Branch {
        from: Role,
        branches: Vec<(String, LocalType)>,
    },
    Rec(String, Box<LocalType>),
    Var(String),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryType {
    Send {
        payload: Exchange,
        cont: Box<BinaryType>,
    },
    Recv {
        payload: Exchange,
        cont: Box<BinaryType>,
    },
    Select(Vec<(String, BinaryType)>),
    Branch(Vec<(String, BinaryType)>),
    Rec(String, Box<BinaryType>),
    Var(String),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("projection onto {role} undefined: {reason}")]
    Undefined { role: Role, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("interaction {0}->{0} has the same sender and receiver")]
    SelfInteraction(Role),
    #[error("role 0 is not a participant number")]
    ZeroRole,
    #[error("type variable {0} is unbound")]
    UnboundVar(String),
    #[error("recursion on {0} is unguarded")]
    Unguarded(String),
    #[error("duplicate branch label {0}")]
    DuplicateLabel(String),
    #[error("choice with no branches")]
    EmptyChoice,
}

/// How many times a `rec` head is unfolded before giving up as unguarded.
const HEAD_UNFOLD_LIMIT: usize = 64;

/// Head-shape view shared by the three kinds of type, so that equality and
/// unification are written once.
pub enum Head<'a, T> {
    Node {
        kind: u8,
        roles: (Role, Role),
        payload: Option<&'a Exchange>,
        kids: Vec<(&'a str, &'a T)>,
    },
    Var(&'a str),
    End,
}

pub trait RecursiveType: Clone + Eq + Hash + Sized {
    fn rec_parts(&self) -> Option<(&str, &Self)>;
    fn subst_var(&self, t: &str, r: &Self) -> Self;
    fn head(&self) -> Head<'_, Self>;
    /// Node kinds (selection, branching) that [`conform`] treats with width.
    fn width_kinds() -> Option<(u8, u8)> {
        None
    }

    fn unfold_once(&self) -> Self {
        match self.rec_parts() {
            Some((t, body)) => body.subst_var(t, self),
            None => self.clone(),
        }
    }

    /// Unfolds leading `rec`s; `None` when the recursion is unguarded.
    fn expose(&self) -> Option<Self> {
        let mut cur = self.clone();
        for _ in 0..HEAD_UNFOLD_LIMIT {
            if cur.rec_parts().is_none() {
                return Some(cur);
            }
            cur = cur.unfold_once();
        }
        None
    }
}

fn sorted_kids<'a, T>(kids: &[(&'a str, &'a T)]) -> Vec<(&'a str, &'a T)> {
    let mut v: Vec<_> = kids.to_vec();
    v.sort_by(|a, b| a.0.cmp(b.0));
    v
}

/// Substitution for inference metavariables.
#[derive(Debug, Clone, Default)]
pub struct MetaSubst {
    pub bindings: BTreeMap<u32, Exchange>,
}

impl MetaSubst {
    pub fn resolve(&self, u: &Exchange) -> Exchange {
        let mut cur = u.clone();
        let mut guard = 0;
        while let Exchange::Meta(m) = &cur {
            match self.bindings.get(m) {
                Some(next) if guard < 1000 => {
                    cur = next.clone();
                    guard += 1;
                }
                _ => break,
            }
        }
        cur
    }
}

/// Coinductive equi-recursive unification. Without metavariables this is
/// plain equality of the infinite unfoldings.
pub(crate) fn unify<T: RecursiveType>(
    a: &T,
    b: &T,
    subst: &mut MetaSubst,
    assumed: &mut HashSet<(T, T)>,
) -> bool {
    unify_w(a, b, subst, assumed, Width::Exact)
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum Width {
    Exact,
    /// left selections may use fewer labels
    Select,
    /// also right branchings may offer fewer labels
    Both,
}

/// Like [`unify`], with selection (and optionally branching) width.
pub(crate) fn conform<T: RecursiveType>(a: &T, b: &T, subst: &mut MetaSubst, w: Width) -> bool {
    unify_w(a, b, subst, &mut HashSet::new(), w)
}

fn subset_kids<T: RecursiveType>(
    small: &[(&str, &T)],
    big: &[(&str, &T)],
    flip: bool,
    subst: &mut MetaSubst,
    assumed: &mut HashSet<(T, T)>,
    w: Width,
) -> bool {
    small.iter().all(|(l, t1)| {
        big.iter().find(|(m, _)| m == l).is_some_and(|(_, t2)| {
            if flip {
                unify_w(*t2, *t1, subst, assumed, w)
            } else {
                unify_w(*t1, *t2, subst, assumed, w)
            }
        })
    })
}

fn unify_w<T: RecursiveType>(
    a: &T,
    b: &T,
    subst: &mut MetaSubst,
    assumed: &mut HashSet<(T, T)>,
    width: Width,
) -> bool {
    if a == b {
        return true;
    }
    let (a, b) = if a.rec_parts().is_some() || b.rec_parts().is_some() {
        if !assumed.insert((a.clone(), b.clone())) {
            return true;
        }
        match (a.expose(), b.expose()) {
            (Some(x), Some(y)) => (x, y),
            _ => return a == b,
        }
    } else {
        (a.clone(), b.clone())
    };
    match (a.head(), b.head()) {
        (Head::End, Head::End) => true,
        (Head::Var(x), Head::Var(y)) => x == y,
        (
            Head::Node {
                kind: k1,
                roles: r1,
                payload: p1,
                kids: c1,
            },
            Head::Node {
                kind: k2,
                roles: r2,
                payload: p2,
                kids: c2,
            },
        ) => {
            if k1 != k2 || r1 != r2 {
                return false;
            }
            if let Some((sel, bra)) = T::width_kinds() {
                if width != Width::Exact && k1 == sel {
                    return subset_kids(&c1, &c2, false, subst, assumed, width);
                }
                if width == Width::Both && k1 == bra {
                    return subset_kids(&c2, &c1, true, subst, assumed, width);
                }
            }
            if c1.len() != c2.len() {
                return false;
            }
            match (p1, p2) {
                (Some(u1), Some(u2)) => {
                    if !unify_exchange(u1, u2, subst) {
                        return false;
                    }
                }
                (None, None) => {}
                _ => return false,
            }
            let (s1, s2) = (sorted_kids(&c1), sorted_kids(&c2));
            s1.iter()
                .zip(s2.iter())
                .all(|((l1, t1), (l2, t2))| l1 == l2 && unify_w(*t1, *t2, subst, assumed, width))
        }
        _ => false,
    }
}

pub(crate) fn unify_exchange(a: &Exchange, b: &Exchange, subst: &mut MetaSubst) -> bool {
    let (a, b) = (subst.resolve(a), subst.resolve(b));
    match (&a, &b) {
        (Exchange::Meta(x), Exchange::Meta(y)) if x == y => true,
        (Exchange::Meta(m), other) | (other, Exchange::Meta(m)) => {
            subst.bindings.insert(*m, other.clone());
            true
        }
        (Exchange::Sort(s1), Exchange::Sort(s2)) => match (s1, s2) {
            (Sort::Bool, Sort::Bool) => true,
            (Sort::Atom(x), Sort::Atom(y)) => x == y,
            (Sort::Shared(g1), Sort::Shared(g2)) => {
                unify(g1.as_ref(), g2.as_ref(), subst, &mut HashSet::new())
            }
            _ => false,
        },
        (Exchange::Session(t1), Exchange::Session(t2)) => {
            unify(t1.as_ref(), t2.as_ref(), subst, &mut HashSet::new())
        }
        _ => false,
    }
}

/// Equality of infinite unfoldings.
pub fn equi_eq<T: RecursiveType>(a: &T, b: &T) -> bool {
    unify(a, b, &mut MetaSubst::default(), &mut HashSet::new())
}

impl Exchange {
    pub fn bool() -> Exchange {
        Exchange::Sort(Sort::Bool)
    }

    pub fn atom(name: &str) -> Exchange {
        Exchange::Sort(Sort::Atom(name.to_string()))
    }

    pub fn equi_eq(&self, other: &Exchange) -> bool {
        unify_exchange(self, other, &mut MetaSubst::default())
    }

    pub fn has_meta(&self) -> bool {
        match self {
            Exchange::Meta(_) => true,
            Exchange::Sort(Sort::Shared(g)) => g.has_meta(),
            Exchange::Sort(_) => false,
            Exchange::Session(t) => t.has_meta(),
        }
    }

    pub fn apply(&self, s: &MetaSubst) -> Exchange {
        match s.resolve(self) {
            Exchange::Sort(Sort::Shared(g)) => Exchange::Sort(Sort::Shared(Box::new(g.apply(s)))),
            Exchange::Session(t) => Exchange::Session(Box::new(t.apply(s))),
            other => other,
        }
    }

    pub fn canonical(&self) -> Exchange {
        match self {
            Exchange::Sort(Sort::Shared(g)) => Exchange::Sort(Sort::Shared(Box::new(g.canonical()))),
            Exchange::Session(t) => Exchange::Session(Box::new(t.canonical())),
            other => other.clone(),
        }
    }
}

fn canon_name(depth: usize) -> String {
    format!("t{depth}")
}

impl RecursiveType for GlobalType {
    fn rec_parts(&self) -> Option<(&str, &Self)> {
        match self {
            GlobalType::Rec(t, b) => Some((t, b)),
            _ => None,
        }
    }

    fn subst_var(&self, t: &str, r: &Self) -> Self {
        match self {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => GlobalType::Msg {
                from: *from,
                to: *to,
                payload: payload.clone(),
                cont: Box::new(cont.subst_var(t, r)),
            },
            GlobalType::Choice { from, to, branches } => GlobalType::Choice {
                from: *from,
                to: *to,
                branches: branches
                    .iter()
                    .map(|(l, g)| (l.clone(), g.subst_var(t, r)))
                    .collect(),
            },
            GlobalType::Rec(u, _) if u == t => self.clone(),
            GlobalType::Rec(u, b) => GlobalType::Rec(u.clone(), Box::new(b.subst_var(t, r))),
            GlobalType::Var(u) if u == t => r.clone(),
            other => other.clone(),
        }
    }

    fn head(&self) -> Head<'_, Self> {
        match self {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => Head::Node {
                kind: 0,
                roles: (*from, *to),
                payload: Some(payload),
                kids: vec![("", cont.as_ref())],
            },
            GlobalType::Choice { from, to, branches } => Head::Node {
                kind: 1,
                roles: (*from, *to),
                payload: None,
                kids: branches.iter().map(|(l, g)| (l.as_str(), g)).collect(),
            },
            GlobalType::Var(t) => Head::Var(t),
            GlobalType::End | GlobalType::Rec(..) => Head::End,
        }
    }
}

impl RecursiveType for LocalType {
    fn rec_parts(&self) -> Option<(&str, &Self)> {
        match self {
            LocalType::Rec(t, b) => Some((t, b)),
            _ => None,
        }
    }

    fn subst_var(&self, t: &str, r: &Self) -> Self {
        match self {
            LocalType::Send { to, payload, cont } => LocalType::Send {
                to: *to,
                payload: payload.clone(),
                cont: Box::new(cont.subst_var(t, r)),
            },
            LocalType::Recv {
                from,
                payload,
                cont,
            } => LocalType::Recv {
                from: *from,
                payload: payload.clone(),
                cont: Box::new(cont.subst_var(t, r)),
            },
            LocalType::Select { to, branches } => LocalType::Select {
                to: *to,
                branches: branches
                    .iter()
                    .map(|(l, x)| (l.clone(), x.subst_var(t, r)))
                    .collect(),
            },
            LocalType::Branch { from, branches } => LocalType::Branch {
                from: *from,
                branches: branches
                    .iter()
                    .map(|(l, x)| (l.clone(), x.subst_var(t, r)))
                    .collect(),
            },
            LocalType::Rec(u, _) if u == t => self.clone(),
            LocalType::Rec(u, b) => LocalType::Rec(u.clone(), Box::new(b.subst_var(t, r))),
            LocalType::Var(u) if u == t => r.clone(),
            other => other.clone(),
        }
    }

    fn head(&self) -> Head<'_, Self> {
        match self {
            LocalType::Send { to, payload, cont } => Head::Node {
                kind: 0,
                roles: (*to, 0),
                payload: Some(payload),
                kids: vec![("", cont.as_ref())],
            },
            LocalType::Recv {
                from,
                payload,
                cont,
            } => Head::Node {
                kind: 1,
                roles: (*from, 0),
                payload: Some(payload),
                kids: vec![("", cont.as_ref())],
            },
            LocalType::Select { to, branches } => Head::Node {
                kind: 2,
                roles: (*to, 0),
                payload: None,
                kids: branches.iter().map(|(l, x)| (l.as_str(), x)).collect(),
            },
            LocalType::Branch { from, branches } => Head::Node {
                kind: 3,
                roles: (*from, 0),
                payload: None,
                kids: branches.iter().map(|(l, x)| (l.as_str(), x)).collect(),
            },
            LocalType::Var(t) => Head::Var(t),
            LocalType::End | LocalType::Rec(..) => Head::End,
        }
    }

    fn width_kinds() -> Option<(u8, u8)> {
        Some((2, 3))
    }
}

impl RecursiveType for BinaryType {
    fn rec_parts(&self) -> Option<(&str, &Self)> {
        match self {
            BinaryType::Rec(t, b) => Some((t, b)),
            _ => None,
        }
    }

    fn subst_var(&self, t: &str, r: &Self) -> Self {
        match self {
            BinaryType::Send { payload, cont } => BinaryType::Send {
                payload: payload.clone(),
                cont: Box::new(cont.subst_var(t, r)),
            },
            BinaryType::Recv { payload, cont } => BinaryType::Recv {
                payload: payload.clone(),
                cont: Box::new(cont.subst_var(t, r)),
            },
            BinaryType::Select(bs) => BinaryType::Select(
                bs.iter()
                    .map(|(l, x)| (l.clone(), x.subst_var(t, r)))
                    .collect(),
            ),
            BinaryType::Branch(bs) => BinaryType::Branch(
                bs.iter()
                    .map(|(l, x)| (l.clone(), x.subst_var(t, r)))
                    .collect(),
            ),
            BinaryType::Rec(u, _) if u == t => self.clone(),
            BinaryType::Rec(u, b) => BinaryType::Rec(u.clone(), Box::new(b.subst_var(t, r))),
            BinaryType::Var(u) if u == t => r.clone(),
            other => other.clone(),
        }
    }

    fn width_kinds() -> Option<(u8, u8)> {
        Some((2, 3))
    }

    fn head(&self) -> Head<'_, Self> {
        match self {
            BinaryType::Send { payload, cont } => Head::Node {
                kind: 0,
                roles: (0, 0),
                payload: Some(payload),
                kids: vec![("", cont.as_ref())],
            },
            BinaryType::Recv { payload, cont } => Head::Node {
                kind: 1,
                roles: (0, 0),
                payload: Some(payload),
                kids: vec![("", cont.as_ref())],
            },
            BinaryType::Select(bs) => Head::Node {
                kind: 2,
                roles: (0, 0),
                payload: None,
                kids: bs.iter().map(|(l, x)| (l.as_str(), x)).collect(),
            },
            BinaryType::Branch(bs) => Head::Node {
                kind: 3,
                roles: (0, 0),
                payload: None,
                kids: bs.iter().map(|(l, x)| (l.as_str(), x)).collect(),
            },
            BinaryType::Var(t) => Head::Var(t),
            BinaryType::End | BinaryType::Rec(..) => Head::End,
        }
    }
}

fn check_labels<'a>(labels: impl Iterator<Item = &'a String>) -> Result<(), WellFormedError> {
    let mut seen = BTreeSet::new();
    let mut any = false;
    for l in labels {
        any = true;
        if !seen.insert(l) {
            return Err(WellFormedError::DuplicateLabel(l.clone()));
        }
    }
    if any {
        Ok(())
    } else {
        Err(WellFormedError::EmptyChoice)
    }
}

impl GlobalType {
    /// Participants `roles(G)`.
    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.collect_roles(&mut out);
        out
    }

    fn collect_roles(&self, out: &mut BTreeSet<Role>) {
        match self {
            GlobalType::Msg { from, to, cont, .. } => {
                out.insert(*from);
                out.insert(*to);
                cont.collect_roles(out);
            }
            GlobalType::Choice { from, to, branches } => {
                out.insert(*from);
                out.insert(*to);
                for (_, g) in branches {
                    g.collect_roles(out);
                }
            }
            GlobalType::Rec(_, b) => b.collect_roles(out),
            GlobalType::Var(_) | GlobalType::End => {}
        }
    }

    /// Highest participant number, 0 for `end`.
    pub fn max_role(&self) -> Role {
        self.roles().into_iter().max().unwrap_or(0)
    }

    /// Projection `G↾p`.
    pub fn project(&self, p: Role) -> Result<LocalType, ProjectionError> {
        match self {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => {
                let t = cont.project(p)?;
                Ok(if p == *from {
                    LocalType::Send {
                        to: *to,
                        payload: payload.clone(),
                        cont: Box::new(t),
                    }
                } else if p == *to {
                    LocalType::Recv {
                        from: *from,
                        payload: payload.clone(),
                        cont: Box::new(t),
                    }
                } else {
                    t
                })
            }
            GlobalType::Choice { from, to, branches } => {
                let projected = branches
                    .iter()
                    .map(|(l, g)| Ok((l.clone(), g.project(p)?)))
                    .collect::<Result<Vec<_>, ProjectionError>>()?;
                if p == *from {
                    Ok(LocalType::Select {
                        to: *to,
                        branches: projected,
                    })
                } else if p == *to {
                    Ok(LocalType::Branch {
                        from: *from,
                        branches: projected,
                    })
                } else {
                    merge_equal(p, projected)
                }
            }
            GlobalType::Rec(t, body) => {
                let b = body.project(p)?;
                Ok(if b == LocalType::Var(t.clone()) {
                    LocalType::End
                } else {
                    LocalType::Rec(t.clone(), Box::new(b))
                })
            }
            GlobalType::Var(t) => Ok(LocalType::Var(t.clone())),
            GlobalType::End => Ok(LocalType::End),
        }
    }

    pub fn validate(&self) -> Result<(), WellFormedError> {
        self.validate_in(&mut Vec::new(), &mut BTreeSet::new())
    }

    // `bound` lists binders in scope, `unguarded` those not yet under a prefix.
    fn validate_in(
        &self,
        bound: &mut Vec<String>,
        unguarded: &mut BTreeSet<String>,
    ) -> Result<(), WellFormedError> {
        match self {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => {
                check_pair(*from, *to)?;
                validate_exchange(payload)?;
                cont.validate_in(bound, &mut BTreeSet::new())
            }
            GlobalType::Choice { from, to, branches } => {
                check_pair(*from, *to)?;
                check_labels(branches.iter().map(|(l, _)| l))?;
                for (_, g) in branches {
                    g.validate_in(bound, &mut BTreeSet::new())?;
                }
                Ok(())
            }
            GlobalType::Rec(t, b) => {
                bound.push(t.clone());
                unguarded.insert(t.clone());
                let r = b.validate_in(bound, unguarded);
                bound.pop();
                r
            }
            GlobalType::Var(t) => {
                if !bound.contains(t) {
                    Err(WellFormedError::UnboundVar(t.clone()))
                } else if unguarded.contains(t) {
                    Err(WellFormedError::Unguarded(t.clone()))
                } else {
                    Ok(())
                }
            }
            GlobalType::End => Ok(()),
        }
    }

    pub fn unfold(&self) -> GlobalType {
        self.unfold_once()
    }

    pub fn canonical(&self) -> GlobalType {
        self.canon(&mut Vec::new())
    }

    fn canon(&self, env: &mut Vec<(String, String)>) -> GlobalType {
        match self {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => GlobalType::Msg {
                from: *from,
                to: *to,
                payload: payload.canonical(),
                cont: Box::new(cont.canon(env)),
            },
            GlobalType::Choice { from, to, branches } => {
                let mut bs: Vec<_> = branches
                    .iter()
                    .map(|(l, g)| (l.clone(), g.canon(env)))
                    .collect();
                bs.sort_by(|a, b| a.0.cmp(&b.0));
                GlobalType::Choice {
                    from: *from,
                    to: *to,
                    branches: bs,
                }
            }
            GlobalType::Rec(t, b) => {
                let n = canon_name(env.len());
                env.push((t.clone(), n.clone()));
                let body = b.canon(env);
                env.pop();
                GlobalType::Rec(n, Box::new(body))
            }
            GlobalType::Var(t) => GlobalType::Var(lookup_canon(env, t)),
            GlobalType::End => GlobalType::End,
        }
    }

    pub fn has_meta(&self) -> bool {
        match self {
            GlobalType::Msg { payload, cont, .. } => payload.has_meta() || cont.has_meta(),
            GlobalType::Choice { branches, .. } => branches.iter().any(|(_, g)| g.has_meta()),
            GlobalType::Rec(_, b) => b.has_meta(),
            _ => false,
        }
    }

    pub fn apply(&self, s: &MetaSubst) -> GlobalType {
        match self {
            GlobalType::Msg {
                from,
                to,
                payload,
                cont,
            } => GlobalType::Msg {
                from: *from,
                to: *to,
                payload: payload.apply(s),
                cont: Box::new(cont.apply(s)),
            },
            GlobalType::Choice { from, to, branches } => GlobalType::Choice {
                from: *from,
                to: *to,
                branches: branches.iter().map(|(l, g)| (l.clone(), g.apply(s))).collect(),
            },
            GlobalType::Rec(t, b) => GlobalType::Rec(t.clone(), Box::new(b.apply(s))),
            other => other.clone(),
        }
    }

    /// Structural size, used by generators.
    pub fn size(&self) -> usize {
        match self {
            GlobalType::Msg { cont, .. } => 1 + cont.size(),
            GlobalType::Choice { branches, .. } => {
                1 + branches.iter().map(|(_, g)| g.size()).sum::<usize>()
            }
            GlobalType::Rec(_, b) => 1 + b.size(),
            _ => 1,
        }
    }
}

fn lookup_canon(env: &[(String, String)], t: &str) -> String {
    env.iter()
        .rev()
        .find(|(orig, _)| orig == t)
        .map(|(_, c)| c.clone())
        .unwrap_or_else(|| t.to_string())
}

fn check_pair(from: Role, to: Role) -> Result<(), WellFormedError> {
    if from == 0 || to == 0 {
        Err(WellFormedError::ZeroRole)
    } else if from == to {
        Err(WellFormedError::SelfInteraction(from))
    } else {
        Ok(())
    }
}

fn validate_exchange(u: &Exchange) -> Result<(), WellFormedError> {
    match u {
        Exchange::Sort(Sort::Shared(g)) => g.validate(),
        Exchange::Session(t) => t.validate(),
        _ => Ok(()),
    }
}

fn merge_equal(p: Role, projected: Vec<(String, LocalType)>) -> Result<LocalType, ProjectionError> {
    let mut it = projected.into_iter();
    let (_, first) = it.next().ok_or(ProjectionError::Undefined {
        role: p,
        reason: "choice without branches".into(),
    })?;
    for (l, t) in it {
        if !equi_eq(&first, &t) {
            return Err(ProjectionError::Undefined {
                role: p,
                reason: format!("branch {l} projects differently"),
            });
        }
    }
    Ok(first)
}

fn merge_equal_binary(
    q: Role,
    projected: Vec<(String, BinaryType)>,
) -> Result<BinaryType, ProjectionError> {
    let mut it = projected.into_iter();
    let (_, first) = it.next().ok_or(ProjectionError::Undefined {
        role: q,
        reason: "choice without branches".into(),
    })?;
    for (l, t) in it {
        if !equi_eq(&first, &t) {
            return Err(ProjectionError::Undefined {
                role: q,
                reason: format!("branch {l} projects differently"),
            });
        }
    }
    Ok(first)
}

impl LocalType {
    /// Roles mentioned by the type.
    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.collect_roles(&mut out);
        out
    }

    fn collect_roles(&self, out: &mut BTreeSet<Role>) {
        match self {
            LocalType::Send { to: r, cont, .. } | LocalType::Recv { from: r, cont, .. } => {
                out.insert(*r);
                cont.collect_roles(out);
            }
            LocalType::Select { to: r, branches } | LocalType::Branch { from: r, branches } => {
                out.insert(*r);
                for (_, t) in branches {
                    t.collect_roles(out);
                }
            }
            LocalType::Rec(_, b) => b.collect_roles(out),
            LocalType::Var(_) | LocalType::End => {}
        }
    }

    /// Projection of a local type onto the binary conversation with `q`.
    pub fn project(&self, q: Role) -> Result<BinaryType, ProjectionError> {
        match self {
            LocalType::Send { to, payload, cont } => {
                let b = cont.project(q)?;
                Ok(if *to == q {
                    BinaryType::Send {
                        payload: payload.clone(),
                        cont: Box::new(b),
                    }
                } else {
                    b
                })
            }
            LocalType::Recv {
                from,
                payload,
                cont,
            } => {
                let b = cont.project(q)?;
                Ok(if *from == q {
                    BinaryType::Recv {
                        payload: payload.clone(),
                        cont: Box::new(b),
                    }
                } else {
                    b
                })
            }
            LocalType::Select { to: r, branches } | LocalType::Branch { from: r, branches } => {
                let projected = branches
                    .iter()
                    .map(|(l, t)| Ok((l.clone(), t.project(q)?)))
                    .collect::<Result<Vec<_>, ProjectionError>>()?;
                if *r == q {
                    Ok(if matches!(self, LocalType::Select { .. }) {
                        BinaryType::Select(projected)
                    } else {
                        BinaryType::Branch(projected)
                    })
                } else {
                    merge_equal_binary(q, projected)
                }
            }
            LocalType::Rec(t, body) => {
                let b = body.project(q)?;
                Ok(if b == BinaryType::Var(t.clone()) {
                    BinaryType::End
                } else {
                    BinaryType::Rec(t.clone(), Box::new(b))
                })
            }
            LocalType::Var(t) => Ok(BinaryType::Var(t.clone())),
            LocalType::End => Ok(BinaryType::End),
        }
    }

    pub fn validate(&self) -> Result<(), WellFormedError> {
        self.validate_in(&mut Vec::new(), &mut BTreeSet::new())
    }

    fn validate_in(
        &self,
        bound: &mut Vec<String>,
        unguarded: &mut BTreeSet<String>,
    ) -> Result<(), WellFormedError> {
        match self {
            LocalType::Send { to: r, payload, cont } | LocalType::Recv { from: r, payload, cont } => {
                if *r == 0 {
                    return Err(WellFormedError::ZeroRole);
                }
                validate_exchange(payload)?;
                cont.validate_in(bound, &mut BTreeSet::new())
            }
            LocalType::Select { to: r, branches } | LocalType::Branch { from: r, branches } => {
                if *r == 0 {
                    return Err(WellFormedError::ZeroRole);
                }
                check_labels(branches.iter().map(|(l, _)| l))?;
                for (_, t) in branches {
                    t.validate_in(bound, &mut BTreeSet::new())?;
                }
                Ok(())
            }
            LocalType::Rec(t, b) => {
                bound.push(t.clone());
                unguarded.insert(t.clone());
                let r = b.validate_in(bound, unguarded);
                bound.pop();
                r
            }
            LocalType::Var(t) => {
                if !bound.contains(t) {
                    Err(WellFormedError::UnboundVar(t.clone()))
                } else if unguarded.contains(t) {
                    Err(WellFormedError::Unguarded(t.clone()))
                } else {
                    Ok(())
                }
            }
            LocalType::End => Ok(()),
        }
    }

    pub fn unfold(&self) -> LocalType {
        self.unfold_once()
    }

    /// Leading `rec`s unfolded; unguarded types are returned unchanged.
    pub fn head_form(&self) -> LocalType {
        self.expose().unwrap_or_else(|| self.clone())
    }

    pub fn is_end(&self) -> bool {
        matches!(self.head_form(), LocalType::End)
    }

    pub fn canonical(&self) -> LocalType {
        self.canon(&mut Vec::new())
    }

    fn canon(&self, env: &mut Vec<(String, String)>) -> LocalType {
        let sort_bs = |bs: &[(String, LocalType)], env: &mut Vec<(String, String)>| {
            let mut v: Vec<_> = bs.iter().map(|(l, t)| (l.clone(), t.canon(env))).collect();
            v.sort_by(|a, b| a.0.cmp(&b.0));
            v
        };
        match self {
            LocalType::Send { to, payload, cont } => LocalType::Send {
                to: *to,
                payload: payload.canonical(),
                cont: Box::new(cont.canon(env)),
            },
            LocalType::Recv {
                from,
                payload,
                cont,
            } => LocalType::Recv {
                from: *from,
                payload: payload.canonical(),
                cont: Box::new(cont.canon(env)),
            },
            LocalType::Select { to, branches } => LocalType::Select {
                to: *to,
                branches: sort_bs(branches, env),
            },
            LocalType::Branch { from, branches } => LocalType::Branch {
                from: *from,
                branches: sort_bs(branches, env),
            },
            LocalType::Rec(t, b) => {
                let n = canon_name(env.len());
                env.push((t.clone(), n.clone()));
                let body = b.canon(env);
                env.pop();
                LocalType::Rec(n, Box::new(body))
            }
            LocalType::Var(t) => LocalType::Var(lookup_canon(env, t)),
            LocalType::End => LocalType::End,
        }
    }

    pub fn has_meta(&self) -> bool {
        match self {
            LocalType::Send { payload, cont, .. } | LocalType::Recv { payload, cont, .. } => {
                payload.has_meta() || cont.has_meta()
            }
            LocalType::Select { branches, .. } | LocalType::Branch { branches, .. } => {
                branches.iter().any(|(_, t)| t.has_meta())
            }
            LocalType::Rec(_, b) => b.has_meta(),
            _ => false,
        }
    }

    pub fn apply(&self, s: &MetaSubst) -> LocalType {
        match self {
            LocalType::Send { to, payload, cont } => LocalType::Send {
                to: *to,
                payload: payload.apply(s),
                cont: Box::new(cont.apply(s)),
            },
            LocalType::Recv {
                from,
                payload,
                cont,
            } => LocalType::Recv {
                from: *from,
                payload: payload.apply(s),
                cont: Box::new(cont.apply(s)),
            },
            LocalType::Select { to, branches } => LocalType::Select {
                to: *to,
                branches: branches.iter().map(|(l, t)| (l.clone(), t.apply(s))).collect(),
            },
            LocalType::Branch { from, branches } => LocalType::Branch {
                from: *from,
                branches: branches.iter().map(|(l, t)| (l.clone(), t.apply(s))).collect(),
            },
            LocalType::Rec(t, b) => LocalType::Rec(t.clone(), Box::new(b.apply(s))),
            other => other.clone(),
        }
    }

    /// Syntactic `T1 ⊑ T2`: `self` is a subtree of `other` reached through
    /// continuations and branches (reflexive).
    pub fn is_suffix_of(&self, other: &LocalType) -> bool {
        let mine = self.canonical();
        let mut stack = vec![other.clone()];
        while let Some(t) = stack.pop() {
            if t.canonical() == mine {
                return true;
            }
            match t {
                LocalType::Send { cont, .. } | LocalType::Recv { cont, .. } => stack.push(*cont),
                LocalType::Select { branches, .. } | LocalType::Branch { branches, .. } => {
                    stack.extend(branches.into_iter().map(|(_, x)| x))
                }
                LocalType::Rec(_, b) => stack.push(*b),
                LocalType::Var(_) | LocalType::End => {}
            }
        }
        false
    }
}

impl BinaryType {
    /// Duality: swaps sends with receives and selections with branchings.
    pub fn dual(&self) -> BinaryType {
        match self {
            BinaryType::Send { payload, cont } => BinaryType::Recv {
                payload: payload.clone(),
                cont: Box::new(cont.dual()),
            },
            BinaryType::Recv { payload, cont } => BinaryType::Send {
                payload: payload.clone(),
                cont: Box::new(cont.dual()),
            },
            BinaryType::Select(bs) => {
                BinaryType::Branch(bs.iter().map(|(l, b)| (l.clone(), b.dual())).collect())
            }
            BinaryType::Branch(bs) => {
                BinaryType::Select(bs.iter().map(|(l, b)| (l.clone(), b.dual())).collect())
            }
            BinaryType::Rec(t, b) => BinaryType::Rec(t.clone(), Box::new(b.dual())),
            BinaryType::Var(t) => BinaryType::Var(t.clone()),
            BinaryType::End => BinaryType::End,
        }
    }

    pub fn unfold(&self) -> BinaryType {
        self.unfold_once()
    }

    pub fn apply(&self, s: &MetaSubst) -> BinaryType {
        match self {
            BinaryType::Send { payload, cont } => BinaryType::Send {
                payload: payload.apply(s),
                cont: Box::new(cont.apply(s)),
            },
            BinaryType::Recv { payload, cont } => BinaryType::Recv {
                payload: payload.apply(s),
                cont: Box::new(cont.apply(s)),
            },
            BinaryType::Select(bs) => {
                BinaryType::Select(bs.iter().map(|(l, b)| (l.clone(), b.apply(s))).collect())
            }
            BinaryType::Branch(bs) => {
                BinaryType::Branch(bs.iter().map(|(l, b)| (l.clone(), b.apply(s))).collect())
            }
            BinaryType::Rec(t, b) => BinaryType::Rec(t.clone(), Box::new(b.apply(s))),
            other => other.clone(),
        }
    }
}
