//! Typed and governed transitions, and the two weak bisimulations decided by
//! a greatest-fixpoint refinement over a bounded exploration of state pairs.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::{self, Display, Formatter};
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Process, Role, Value};
use crate::genv::{genv_join, EnvConfig, GenvConfig, GenvError, GlobalEnv, Governor};
use crate::lts::{fresh_name, step_with, ActionLabel, ExploreConfig, LtsGraph, StepConfig, DEFAULT_MAX_STATES};
use crate::normal::normal_form;
use crate::typing::{check, delta_converges, infer_hinted, SessionEnv, SharedEnv, TypeError};
use crate::types::{Exchange, GlobalType, LocalType, Sort};

/// `Γ ⊢ P ▷ Δ` with `P` in normal form and `Δ` canonical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedState {
    pub g: SharedEnv,
    pub p: Process,
    pub d: SessionEnv,
}

impl TypedState {
    pub fn new(g: SharedEnv, p: &Process, d: &SessionEnv) -> TypedState {
        TypedState {
            g,
            p: normal_form(p),
            d: d.canonical(),
        }
    }

    pub fn names(&self) -> BTreeSet<String> {
        let mut out = self.p.free_idents();
        out.extend(self.g.names.keys().cloned());
        out.extend(self.d.sessions());
        out
    }
}

impl Display for TypedState {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} ▷ {}", self.p, self.d)
    }
}

/// `E, Γ ⊢ P ▷ Δ`; `e` is absent for plain typed states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GovState {
    pub e: Option<GlobalEnv>,
    pub s: TypedState,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("side {side} does not type-check: {err}")]
    Type { side: u8, err: TypeError },
    #[error("side {side} is not a governance judgement under the witness")]
    NotGoverned { side: u8 },
    #[error("governed bisimulation needs a witness environment")]
    MissingWitness,
    #[error(transparent)]
    Genv(#[from] GenvError),
}

#[derive(Debug, Clone, Copy)]
pub struct BisimConfig {
    pub max_states: usize,
    pub step: StepConfig,
    pub genv: GenvConfig,
}

impl Default for BisimConfig {
    fn default() -> Self {
        BisimConfig {
            max_states: DEFAULT_MAX_STATES,
            step: StepConfig::default(),
            genv: GenvConfig::default(),
        }
    }
}

impl BisimConfig {
    pub fn with_bounds(max_states: usize, unfold_bound: usize) -> BisimConfig {
        BisimConfig {
            max_states,
            step: StepConfig { unfold_bound },
            genv: GenvConfig {
                unfold_bound,
                max_envs: max_states,
            },
        }
    }
}

/// Values a typed input may receive on `s[at]` from `from`; fresh names are
/// drawn outside `avoid`.
pub fn typed_inputs(
    g: &SharedEnv,
    d: &SessionEnv,
    s: &str,
    at: Role,
    from: Role,
    avoid: &BTreeSet<String>,
) -> Vec<Value> {
    let Some(LocalType::Recv {
        from: f, payload, ..
    }) = d.get(s, at).map(LocalType::head_form)
    else {
        return vec![];
    };
    if f != from {
        return vec![];
    }
    let of_sort = |u: &Sort| -> Vec<String> {
        g.names
            .iter()
            .filter(|(_, s2)| Exchange::Sort((*s2).clone()).equi_eq(&Exchange::Sort(u.clone())))
            .map(|(n, _)| n.clone())
            .collect()
    };
    match payload {
        Exchange::Sort(Sort::Bool) => vec![Value::Bool(false), Value::Bool(true)],
        Exchange::Sort(u @ Sort::Atom(_)) => match of_sort(&u).into_iter().next() {
            Some(n) => vec![Value::Name(n)],
            None => vec![Value::Name(fresh_name("#a", avoid))],
        },
        Exchange::Sort(u @ Sort::Shared(_)) => {
            let mut out: Vec<Value> = of_sort(&u).into_iter().map(Value::Name).collect();
            out.push(Value::Name(fresh_name("#a", avoid)));
            out
        }
        Exchange::Session(t) => {
            let roles = t.roles();
            let r = (1..).find(|r| !roles.contains(r)).expect("finite roles");
            vec![Value::Endpoint(fresh_name("#s", avoid), r)]
        }
        Exchange::Meta(_) => vec![],
    }
}

struct TypedMove {
    label: ActionLabel,
    next: TypedState,
    revealed: SessionEnv,
}

/// `Γ ⊢ P ▷ Δ →ℓ Γ' ⊢ P' ▷ Δ'`; the flag reports step truncation.
fn typed_moves(st: &TypedState, avoid: &BTreeSet<String>, cfg: StepConfig) -> (Vec<TypedMove>, bool) {
    let mut all = avoid.clone();
    all.extend(st.names());
    let inputs = |s: &str, at: Role, from: Role| typed_inputs(&st.g, &st.d, s, at, from, &all);
    let r = step_with(&st.p, &all, cfg, &inputs);
    let mut out = Vec::new();
    for (label, p2) in r.moves {
        let revealed = match &label {
            ActionLabel::BOutSess { endpoint, .. } => {
                match infer_hinted(&st.g, &p2, &st.d) {
                    Ok(d) => SessionEnv {
                        entries: d
                            .entries
                            .into_iter()
                            .filter(|((x, _), _)| *x == endpoint.0)
                            .collect(),
                    },
                    Err(_) => continue,
                }
            }
            _ => SessionEnv::new(),
        };
        for (g2, d2) in crate::genv::env_step(&st.g, &st.d, &label, &revealed) {
            if check(&g2, &p2, &d2).is_ok() {
                out.push(TypedMove {
                    label: label.clone(),
                    next: TypedState {
                        g: g2,
                        p: p2.clone(),
                        d: d2,
                    },
                    revealed: revealed.clone(),
                });
            }
        }
    }
    (out, r.truncated)
}

/// Typed transitions of a state, with fresh names chosen outside its own
/// names.
pub fn typed_step(st: &TypedState, cfg: StepConfig) -> Vec<(ActionLabel, TypedState)> {
    let mut v: Vec<_> = typed_moves(st, &BTreeSet::new(), cfg)
        .0
        .into_iter()
        .map(|m| (m.label, m.next))
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Governed transitions `(E, Γ ⊢ P ▷ Δ) →ℓ (E', Γ' ⊢ P' ▷ Δ')`.
pub fn gov_step(
    e: &GlobalEnv,
    st: &TypedState,
    sessions: &[GlobalType],
    cfg: BisimConfig,
) -> Result<Vec<(ActionLabel, GlobalEnv, TypedState)>, GenvError> {
    let gov = Governor::new(cfg.genv, sessions.to_vec());
    let mut out = BTreeSet::new();
    for m in typed_moves(st, &BTreeSet::new(), cfg.step).0 {
        for (e2, s2) in governed_successors(&gov, e, st, &m)? {
            out.insert((m.label.clone(), e2, s2));
        }
    }
    Ok(out.into_iter().collect())
}

fn governed_successors(
    gov: &Governor,
    e: &GlobalEnv,
    st: &TypedState,
    m: &TypedMove,
) -> Result<Vec<(GlobalEnv, TypedState)>, GenvError> {
    let c = EnvConfig {
        e: e.clone(),
        g: st.g.clone(),
        d: st.d.clone(),
    };
    Ok(gov
        .config_step(&c, &m.label, &m.revealed)?
        .into_iter()
        .filter(|c2| c2.g == m.next.g && c2.d == m.next.d)
        .map(|c2| (c2.e.canonical(), m.next.clone()))
        .collect())
}

/// Breadth-first closure of [`typed_step`]; graph states are the process
/// parts, `states[i]` of the second component the full typed states.
pub fn explore_typed(start: &TypedState, cfg: ExploreConfig) -> (LtsGraph, Vec<TypedState>) {
    let mut index: HashMap<TypedState, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    index.insert(start.clone(), 0);
    let mut transitions = Vec::new();
    let mut truncated = false;
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let (moves, trunc) = typed_moves(&states[id], &BTreeSet::new(), cfg.step);
        truncated |= trunc;
        let mut seen = BTreeSet::new();
        for m in moves {
            if !seen.insert((m.label.clone(), m.next.clone())) {
                continue;
            }
            let to = match index.get(&m.next) {
                Some(&t) => t,
                None => {
                    if states.len() >= cfg.max_states {
                        truncated = true;
                        continue;
                    }
                    let t = states.len();
                    states.push(m.next.clone());
                    index.insert(m.next, t);
                    queue.push_back(t);
                    t
                }
            };
            transitions.push((id, m.label, to));
        }
    }
    let graph = LtsGraph {
        states: states.iter().map(|s| s.p.clone()).collect(),
        transitions,
        truncated,
    };
    (graph, states)
}

// ---- game -----------------------------------------------------------------

/// A node of the bisimulation game: the shared witness (governed) and the
/// two sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub e: Option<GlobalEnv>,
    pub left: TypedState,
    pub right: TypedState,
}

impl Node {
    fn names(&self) -> BTreeSet<String> {
        let mut n = self.left.names();
        n.extend(self.right.names());
        if let Some(e) = &self.e {
            n.extend(e.sessions().cloned());
        }
        n
    }

    fn side(&self, which: u8) -> GovState {
        GovState {
            e: self.e.clone(),
            s: if which == 1 {
                self.left.clone()
            } else {
                self.right.clone()
            },
        }
    }
}

struct Challenge {
    side: u8,
    label: ActionLabel,
    candidates: Vec<Node>,
}

type MoveList = Rc<Vec<(ActionLabel, GovState)>>;

struct Engine {
    cfg: BisimConfig,
    governor: Option<Governor>,
    strong: RefCell<HashMap<(GovState, BTreeSet<String>), MoveList>>,
    closure: RefCell<HashMap<GovState, Rc<Vec<GovState>>>>,
    weak: RefCell<HashMap<(GovState, BTreeSet<String>), MoveList>>,
    joins: RefCell<HashMap<(GlobalEnv, GlobalEnv), Option<GlobalEnv>>>,
    seen_states: RefCell<HashSet<GovState>>,
    truncated: Cell<bool>,
}

impl Engine {
    fn new(cfg: BisimConfig, governor: Option<Governor>) -> Engine {
        Engine {
            cfg,
            governor,
            strong: RefCell::new(HashMap::new()),
            closure: RefCell::new(HashMap::new()),
            weak: RefCell::new(HashMap::new()),
            joins: RefCell::new(HashMap::new()),
            seen_states: RefCell::new(HashSet::new()),
            truncated: Cell::new(false),
        }
    }

    fn note_state(&self, s: &GovState) {
        let mut seen = self.seen_states.borrow_mut();
        if seen.insert(s.clone()) && seen.len() > self.cfg.max_states {
            self.truncated.set(true);
        }
    }

    fn strong(&self, s: &GovState, avoid: &BTreeSet<String>) -> Result<MoveList, BisimError> {
        let key = (s.clone(), avoid.clone());
        if let Some(m) = self.strong.borrow().get(&key) {
            return Ok(m.clone());
        }
        self.note_state(s);
        let (moves, trunc) = typed_moves(&s.s, avoid, self.cfg.step);
        if trunc {
            self.truncated.set(true);
        }
        let mut out = BTreeSet::new();
        for m in moves {
            match (&self.governor, &s.e) {
                (Some(gov), Some(e)) => {
                    for (e2, s2) in governed_successors(gov, e, &s.s, &m)? {
                        out.insert((m.label.clone(), GovState { e: Some(e2), s: s2 }));
                    }
                }
                _ => {
                    out.insert((m.label.clone(), GovState { e: None, s: m.next }));
                }
            }
        }
        let out: MoveList = Rc::new(out.into_iter().collect());
        self.strong.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// States reachable by `τ*` (reflexive).
    fn tau_closure(&self, s: &GovState) -> Result<Rc<Vec<GovState>>, BisimError> {
        if let Some(c) = self.closure.borrow().get(s) {
            return Ok(c.clone());
        }
        let empty = BTreeSet::new();
        let mut seen = BTreeSet::from([s.clone()]);
        let mut queue = VecDeque::from([s.clone()]);
        while let Some(x) = queue.pop_front() {
            if self.truncated.get() {
                break;
            }
            for (l, y) in self.strong(&x, &empty)?.iter() {
                if l.is_tau() && seen.insert(y.clone()) {
                    queue.push_back(y.clone());
                }
            }
        }
        let out = Rc::new(seen.into_iter().collect::<Vec<_>>());
        self.closure.borrow_mut().insert(s.clone(), out.clone());
        Ok(out)
    }

    /// `⇒ℓ̂` moves.
    fn weak(&self, s: &GovState, avoid: &BTreeSet<String>) -> Result<MoveList, BisimError> {
        let key = (s.clone(), avoid.clone());
        if let Some(m) = self.weak.borrow().get(&key) {
            return Ok(m.clone());
        }
        let mut out = BTreeSet::new();
        for x in self.tau_closure(s)?.iter() {
            out.insert((ActionLabel::Tau, x.clone()));
            for (l, y) in self.strong(x, avoid)?.iter() {
                if l.is_tau() {
                    continue;
                }
                for z in self.tau_closure(y)?.iter() {
                    out.insert((l.clone(), z.clone()));
                }
            }
        }
        let out: MoveList = Rc::new(out.into_iter().collect());
        self.weak.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    fn join(&self, e1: &Option<GlobalEnv>, e2: &Option<GlobalEnv>) -> Option<Option<GlobalEnv>> {
        match (e1, e2) {
            (Some(a), Some(b)) if a == b => Some(Some(a.clone())),
            (Some(a), Some(b)) => {
                let key = (a.clone(), b.clone());
                if let Some(j) = self.joins.borrow().get(&key) {
                    return j.clone().map(Some);
                }
                let j = genv_join(a, b).map(|j| j.canonical());
                self.joins.borrow_mut().insert(key, j.clone());
                j.map(Some)
            }
            (None, None) => Some(None),
            _ => None,
        }
    }

    fn challenges(&self, n: &Node) -> Result<Vec<Challenge>, BisimError> {
        let avoid = n.names();
        let mut out = Vec::new();
        for side in [1u8, 2u8] {
            let me = n.side(side);
            let other = n.side(3 - side);
            let responses = self.weak(&other, &avoid)?;
            for (label, mine) in self.strong(&me, &avoid)?.iter() {
                let mut cands = BTreeSet::new();
                for (l2, theirs) in responses.iter() {
                    if l2 != label || theirs.s.g != mine.s.g {
                        continue;
                    }
                    let (l_side, r_side) = if side == 1 { (mine, theirs) } else { (theirs, mine) };
                    if let Some(e) = self.join(&l_side.e, &r_side.e) {
                        cands.insert(Node {
                            e,
                            left: l_side.s.clone(),
                            right: r_side.s.clone(),
                        });
                    }
                }
                out.push(Challenge {
                    side,
                    label: label.clone(),
                    candidates: cands.into_iter().collect(),
                });
            }
        }
        Ok(out)
    }
}

/// Explored game graph.
struct Game {
    nodes: Vec<Node>,
    challenges: Vec<Vec<(u8, ActionLabel, Vec<usize>)>>,
}

fn explore_game(engine: &Engine, start: Node) -> Result<Game, BisimError> {
    let node_cap = engine.cfg.max_states.saturating_mul(100);
    let mut index: HashMap<Node, usize> = HashMap::new();
    let mut nodes = vec![start.clone()];
    index.insert(start, 0);
    let mut challenges: Vec<Vec<(u8, ActionLabel, Vec<usize>)>> = Vec::new();
    let mut i = 0;
    while i < nodes.len() {
        if engine.truncated.get() {
            break;
        }
        let cs = engine.challenges(&nodes[i].clone())?;
        let mut row = Vec::new();
        for c in cs {
            let mut ids = Vec::new();
            for cand in c.candidates {
                let id = match index.get(&cand) {
                    Some(&id) => id,
                    None => {
                        if nodes.len() >= node_cap {
                            engine.truncated.set(true);
                            continue;
                        }
                        let id = nodes.len();
                        nodes.push(cand.clone());
                        index.insert(cand, id);
                        id
                    }
                };
                ids.push(id);
            }
            row.push((c.side, c.label, ids));
        }
        challenges.push(row);
        i += 1;
    }
    Ok(Game { nodes, challenges })
}

/// Round in which each node was removed (`None`: survives).
fn refine(game: &Game) -> Vec<Option<usize>> {
    let n = game.nodes.len();
    let mut removed: Vec<Option<usize>> = vec![None; n];
    let mut round = 0;
    loop {
        round += 1;
        let doomed: Vec<usize> = (0..n)
            .filter(|&i| removed[i].is_none())
            .filter(|&i| {
                game.challenges[i]
                    .iter()
                    .any(|(_, _, cands)| cands.iter().all(|&c| removed[c].is_some()))
            })
            .collect();
        if doomed.is_empty() {
            return removed;
        }
        for i in doomed {
            removed[i] = Some(round);
        }
    }
}

fn distinguishing(game: &Game, removed: &[Option<usize>]) -> Distinguishing {
    let mut trace = Vec::new();
    let mut cur = 0usize;
    let mut failing_side = 2;
    let mut guard = 0;
    while let Some(r) = removed[cur] {
        guard += 1;
        // A challenge all of whose answers were removed before round r.
        let Some((side, label, cands)) = game.challenges[cur].iter().find(|(_, _, cands)| {
            cands
                .iter()
                .all(|&c| matches!(removed[c], Some(rc) if rc < r))
        }) else {
            break;
        };
        trace.push(label.clone());
        failing_side = 3 - side;
        if cands.is_empty() || guard > game.nodes.len() {
            break;
        }
        // the defender's longest-lasting answer
        cur = *cands
            .iter()
            .max_by_key(|&&c| (removed[c].unwrap_or(0), std::cmp::Reverse(c)))
            .expect("non-empty");
    }
    Distinguishing {
        trace,
        failing_side,
    }
}

// ---- verdicts --------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Bisimilar,
    NotBisimilar,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Distinguishing {
    pub trace: Vec<ActionLabel>,
    #[serde(rename = "failingSide")]
    pub failing_side: u8,
}

/// One related pair, printed for the JSON certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelatedPair {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Surviving nodes when related.
    pub relation: Option<Vec<Node>>,
    pub distinguishing: Option<Distinguishing>,
    /// `Δ1 ⇌ Δ2` for the initial pair.
    pub delta_converges: bool,
    pub nodes_explored: usize,
}

#[derive(Serialize)]
struct VerdictJson<'a> {
    verdict: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    relation: Option<Vec<RelatedPair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distinguishing: Option<&'a Distinguishing>,
    #[serde(rename = "deltaConverges")]
    delta_converges: bool,
}

impl Verdict {
    pub fn related(&self) -> bool {
        self.kind == VerdictKind::Bisimilar
    }

    pub fn relation_pairs(&self) -> Option<Vec<RelatedPair>> {
        self.relation.as_ref().map(|r| {
            r.iter()
                .map(|n| RelatedPair {
                    witness: n.e.as_ref().map(|e| e.to_string()),
                    left: n.left.to_string(),
                    right: n.right.to_string(),
                })
                .collect()
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(VerdictJson {
            verdict: self.kind,
            relation: self.relation_pairs(),
            distinguishing: self.distinguishing.as_ref(),
            delta_converges: self.delta_converges,
        })
        .expect("serialisable")
    }
}

impl Display for VerdictKind {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Bisimilar => "bisimilar",
            VerdictKind::NotBisimilar => "not-bisimilar",
            VerdictKind::Inconclusive => "inconclusive",
        })
    }
}

/// Input of a bisimulation query.
#[derive(Debug, Clone)]
pub struct Query {
    pub gamma: SharedEnv,
    pub p1: Process,
    pub d1: SessionEnv,
    pub p2: Process,
    pub d2: SessionEnv,
    pub witness: Option<GlobalEnv>,
    /// Global types for sessions extruded by bound session output.
    pub sessions: Vec<GlobalType>,
}

impl Query {
    pub fn new(gamma: SharedEnv, p1: Process, d1: SessionEnv, p2: Process, d2: SessionEnv) -> Query {
        Query {
            gamma,
            p1,
            d1,
            p2,
            d2,
            witness: None,
            sessions: vec![],
        }
    }

    pub fn governed_by(mut self, e: GlobalEnv) -> Query {
        self.witness = Some(e);
        self
    }

    fn start(&self, governed: bool) -> Node {
        Node {
            e: if governed {
                self.witness.as_ref().map(GlobalEnv::canonical)
            } else {
                None
            },
            left: TypedState::new(self.gamma.clone(), &self.p1, &self.d1),
            right: TypedState::new(self.gamma.clone(), &self.p2, &self.d2),
        }
    }

    fn typecheck(&self) -> Result<(), BisimError> {
        check(&self.gamma, &self.p1, &self.d1).map_err(|err| BisimError::Type { side: 1, err })?;
        check(&self.gamma, &self.p2, &self.d2).map_err(|err| BisimError::Type { side: 2, err })?;
        Ok(())
    }
}

fn decide_with(q: &Query, cfg: &BisimConfig, governed: bool) -> Result<Verdict, BisimError> {
    q.typecheck()?;
    let governor = if governed {
        let e = q.witness.as_ref().ok_or(BisimError::MissingWitness)?;
        let gov = Governor::new(cfg.genv, q.sessions.clone());
        for (side, d) in [(1u8, &q.d1), (2u8, &q.d2)] {
            if !gov.is_env_config(e, d)? {
                return Err(BisimError::NotGoverned { side });
            }
        }
        Some(gov)
    } else {
        None
    };
    let engine = Engine::new(*cfg, governor);
    let game = explore_game(&engine, q.start(governed))?;
    let converges = delta_converges(&q.d1, &q.d2);
    if engine.truncated.get() {
        return Ok(Verdict {
            kind: VerdictKind::Inconclusive,
            relation: None,
            distinguishing: None,
            delta_converges: converges,
            nodes_explored: game.nodes.len(),
        });
    }
    let removed = refine(&game);
    if removed[0].is_none() {
        let relation = (0..game.nodes.len())
            .filter(|&i| removed[i].is_none())
            .map(|i| game.nodes[i].clone())
            .collect();
        Ok(Verdict {
            kind: VerdictKind::Bisimilar,
            relation: Some(relation),
            distinguishing: None,
            delta_converges: converges,
            nodes_explored: game.nodes.len(),
        })
    } else {
        Ok(Verdict {
            kind: VerdictKind::NotBisimilar,
            relation: None,
            distinguishing: Some(distinguishing(&game, &removed)),
            delta_converges: converges,
            nodes_explored: game.nodes.len(),
        })
    }
}

/// Transfer condition for a claimed relation: every challenge from a
/// related node has an answer inside the relation.
fn check_relation_with(q: &Query, claimed: &[Node], cfg: &BisimConfig, governed: bool) -> Result<bool, BisimError> {
    let governor = if governed {
        Some(Governor::new(cfg.genv, q.sessions.clone()))
    } else {
        None
    };
    let engine = Engine::new(*cfg, governor);
    let set: HashSet<&Node> = claimed.iter().collect();
    if !set.contains(&q.start(governed)) {
        return Ok(false);
    }
    for n in claimed {
        for c in engine.challenges(n)? {
            if !c.candidates.iter().any(|m| set.contains(m)) {
                return Ok(false);
            }
        }
    }
    Ok(!engine.truncated.get())
}

/// A behavioural equivalence decided over typed processes.
pub trait Equivalence {
    fn name(&self) -> &'static str;
    fn decide(&self, q: &Query, cfg: &BisimConfig) -> Result<Verdict, BisimError>;
    fn check_relation(&self, q: &Query, claimed: &[Node], cfg: &BisimConfig) -> Result<bool, BisimError>;
}

/// `≈s`.
pub struct Standard;

/// `≈gs` under the query's witness.
pub struct Governed;

impl Equivalence for Standard {
    fn name(&self) -> &'static str {
        "standard"
    }

    fn decide(&self, q: &Query, cfg: &BisimConfig) -> Result<Verdict, BisimError> {
        decide_with(q, cfg, false)
    }

    fn check_relation(&self, q: &Query, claimed: &[Node], cfg: &BisimConfig) -> Result<bool, BisimError> {
        check_relation_with(q, claimed, cfg, false)
    }
}

impl Equivalence for Governed {
    fn name(&self) -> &'static str {
        "governed"
    }

    fn decide(&self, q: &Query, cfg: &BisimConfig) -> Result<Verdict, BisimError> {
        decide_with(q, cfg, true)
    }

    fn check_relation(&self, q: &Query, claimed: &[Node], cfg: &BisimConfig) -> Result<bool, BisimError> {
        check_relation_with(q, claimed, cfg, true)
    }
}

/// Equivalences by name.
pub struct EquivalenceRegistry {
    entries: BTreeMap<&'static str, Box<dyn Equivalence>>,
}

impl EquivalenceRegistry {
    pub fn empty() -> EquivalenceRegistry {
        EquivalenceRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_defaults() -> EquivalenceRegistry {
        let mut r = EquivalenceRegistry::empty();
        r.register(Box::new(Standard));
        r.register(Box::new(Governed));
        r
    }

    pub fn register(&mut self, e: Box<dyn Equivalence>) {
        self.entries.insert(e.name(), e);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Equivalence> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

pub fn bisim_standard(q: &Query, cfg: &BisimConfig) -> Result<Verdict, BisimError> {
    Standard.decide(q, cfg)
}

pub fn bisim_governed(q: &Query, cfg: &BisimConfig) -> Result<Verdict, BisimError> {
    Governed.decide(q, cfg)
}
