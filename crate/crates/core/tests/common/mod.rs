//! Seeded generators and oracles shared by the integration tests and the
//! acceptance harness. `MPST_SEED` overrides the default seed.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpst_core::ast::{Chan, Expr, Process, Role, Subject};
use mpst_core::lts::{ActionLabel, LtsGraph};
use mpst_core::typing::{SessionEnv, SharedEnv};
use mpst_core::{Exchange, GlobalType, LocalType, Sort};

pub const DEFAULT_SEED: u64 = 0x5eed_2013;

pub fn seed() -> u64 {
    std::env::var("MPST_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

pub struct Gen {
    pub rng: ChaCha8Rng,
    fresh: usize,
}

fn msg(from: Role, to: Role, payload: Exchange, cont: GlobalType) -> GlobalType {
    GlobalType::Msg {
        from,
        to,
        payload,
        cont: Box::new(cont),
    }
}

fn send(chan: &Chan, to: Role, expr: Expr, body: Process) -> Process {
    Process::Send {
        chan: chan.clone(),
        to,
        expr,
        body: Box::new(body),
    }
}

fn ep(s: &str, p: Role) -> Chan {
    Chan::Endpoint(s.to_string(), p)
}

/// `Γ` used by the typed generators.
pub fn gen_gamma() -> SharedEnv {
    SharedEnv::new()
        .with("v", Sort::Atom("U".into()))
        .with("w", Sort::Atom("U".into()))
}

/// One generated typed process.
#[derive(Debug, Clone)]
pub struct TypedSample {
    pub gamma: SharedEnv,
    pub p: Process,
    pub delta: SessionEnv,
    pub global: GlobalType,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fresh: 0,
        }
    }

    fn pair(&mut self, roles: Role) -> (Role, Role) {
        let p = self.rng.gen_range(1..=roles);
        let mut q = self.rng.gen_range(1..=roles - 1);
        if q >= p {
            q += 1;
        }
        (p, q)
    }

    fn payload(&mut self) -> Exchange {
        if self.rng.gen_bool(0.3) {
            Exchange::bool()
        } else {
            Exchange::atom("U")
        }
    }

    fn global_body(&mut self, roles: Role, depth: usize, rec: Option<&str>) -> GlobalType {
        let leaf = |g: &mut Gen| match rec {
            Some(t) if g.rng.gen_bool(0.6) => GlobalType::Var(t.to_string()),
            _ => GlobalType::End,
        };
        if depth == 0 || self.rng.gen_bool(0.12) {
            return leaf(self);
        }
        let (p, q) = self.pair(roles);
        if self.rng.gen_bool(0.25) {
            let n = self.rng.gen_range(2..=3);
            let labels = ["l", "r", "m"];
            GlobalType::Choice {
                from: p,
                to: q,
                branches: (0..n)
                    .map(|i| (labels[i].to_string(), self.global_body(roles, depth - 1, rec)))
                    .collect(),
            }
        } else {
            let u = self.payload();
            msg(p, q, u, self.global_body(roles, depth - 1, rec))
        }
    }

    /// Random well-formed global type over roles `1..=roles`.
    pub fn global(&mut self, roles: Role, depth: usize) -> GlobalType {
        loop {
            let g = if self.rng.gen_bool(0.15) {
                let (p, q) = self.pair(roles);
                let u = self.payload();
                let body = self.global_body(roles, depth.saturating_sub(1), Some("t"));
                GlobalType::Rec("t".into(), Box::new(msg(p, q, u, body)))
            } else {
                self.global_body(roles, depth, None)
            };
            if g.validate().is_ok() {
                return g;
            }
        }
    }

    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("x{}", self.fresh)
    }

    fn value_for(&mut self, u: &Exchange) -> Expr {
        match u {
            Exchange::Sort(Sort::Bool) => {
                if self.rng.gen_bool(0.5) {
                    Expr::True
                } else {
                    Expr::False
                }
            }
            _ => Expr::Name(if self.rng.gen_bool(0.5) { "v" } else { "w" }.into()),
        }
    }

    /// A process implementing `t` on channel `c`.
    pub fn realise(&mut self, t: &LocalType, c: &Chan) -> Process {
        match t {
            LocalType::Send { to, payload, cont } => {
                let e = self.value_for(payload);
                send(c, *to, e, self.realise(cont, c))
            }
            LocalType::Recv { from, cont, .. } => Process::Recv {
                chan: c.clone(),
                from: *from,
                var: self.var(),
                body: Box::new(self.realise(cont, c)),
            },
            LocalType::Select { to, branches } => {
                let (l, b) = branches.choose(&mut self.rng).expect("non-empty").clone();
                Process::Select {
                    chan: c.clone(),
                    to: *to,
                    label: l,
                    body: Box::new(self.realise(&b, c)),
                }
            }
            LocalType::Branch { from, branches } => Process::Branch {
                chan: c.clone(),
                from: *from,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), self.realise(b, c)))
                    .collect(),
            },
            LocalType::Rec(v, b) => Process::Rec {
                var: format!("X{v}"),
                body: Box::new(self.realise(b, c)),
            },
            LocalType::Var(v) => Process::Var(format!("X{v}")),
            LocalType::End => Process::Inact,
        }
    }

    /// A typed process built from the projections of a random global type:
    /// endpoints used directly (sometimes restricted), or sessions opened
    /// through a shared name.
    pub fn typed(&mut self, max_size: usize) -> TypedSample {
        loop {
            let roles = self.rng.gen_range(2..=3);
            let g = self.global(roles, 3);
            let rs = g.roles();
            if rs.is_empty() || rs.iter().any(|r| g.project(*r).is_err()) {
                continue;
            }
            let complete = rs.iter().copied().eq(1..=g.max_role());
            let mode = self.rng.gen_range(0..10);
            let mut gamma = gen_gamma();
            let mut delta = SessionEnv::new();
            let mut parts = Vec::new();
            if complete && mode < 3 {
                gamma = gamma.with("a", Sort::Shared(Box::new(g.clone())));
                let n = g.max_role();
                for r in rs.iter().copied() {
                    let x = self.var();
                    let body = self.realise(&g.project(r).unwrap(), &Chan::Var(x.clone()));
                    let body = Box::new(body);
                    parts.push(if r == n {
                        Process::Request {
                            subject: Subject::Name("a".into()),
                            role: r,
                            var: x,
                            body,
                        }
                    } else {
                        Process::Accept {
                            subject: Subject::Name("a".into()),
                            role: r,
                            var: x,
                            body,
                        }
                    });
                }
            } else {
                for r in rs.iter().copied() {
                    let t = g.project(r).unwrap();
                    if mode == 9 && self.rng.gen_bool(0.3) {
                        continue;
                    }
                    let mut q = self.realise(&t, &ep("s", r));
                    if self.rng.gen_bool(0.1) {
                        q = Process::If {
                            cond: Expr::Eq(Box::new(Expr::Name("v".into())), Box::new(Expr::Name("w".into()))),
                            then: Box::new(q.clone()),
                            other: Box::new(q),
                        };
                    }
                    parts.push(q);
                    delta.insert("s", r, t);
                }
            }
            parts.shuffle(&mut self.rng);
            let mut p = Process::par_all(parts);
            if (3..6).contains(&mode) && delta.entries.len() == rs.len() {
                p = Process::hide("s", p);
                delta = SessionEnv::new();
            }
            if p.size() <= max_size {
                return TypedSample {
                    gamma,
                    p,
                    delta,
                    global: g,
                };
            }
        }
    }

    /// A closed, not necessarily typable process of bounded size.
    pub fn untyped(&mut self, max_size: usize) -> Process {
        loop {
            let p = self.untyped_term(4, &mut vec![], &mut vec![]);
            if p.size() <= max_size && p.free_vars().is_empty() && p.free_proc_vars().is_empty() {
                return p;
            }
        }
    }

    fn chan(&mut self, vars: &[String]) -> Chan {
        if !vars.is_empty() && self.rng.gen_bool(0.3) {
            return Chan::Var(vars.choose(&mut self.rng).unwrap().clone());
        }
        let s = ["s", "t"].choose(&mut self.rng).unwrap();
        ep(s, self.rng.gen_range(1..=3))
    }

    fn untyped_term(&mut self, depth: usize, vars: &mut Vec<String>, recs: &mut Vec<String>) -> Process {
        if depth == 0 {
            return match self.rng.gen_range(0..3) {
                0 if !recs.is_empty() => Process::Var(recs.last().unwrap().clone()),
                _ => Process::Inact,
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..12) {
            0 | 1 => {
                let c = self.chan(vars);
                let e = match self.rng.gen_range(0..4) {
                    0 => Expr::True,
                    1 => Expr::Name("v".into()),
                    2 if !vars.is_empty() => Expr::Var(vars.choose(&mut self.rng).unwrap().clone()),
                    _ => Expr::Endpoint("s".into(), self.rng.gen_range(1..=3)),
                };
                let to = self.rng.gen_range(1..=3);
                send(&c, to, e, self.untyped_term(d, vars, recs))
            }
            2 | 3 => {
                let c = self.chan(vars);
                let x = self.var();
                vars.push(x.clone());
                let body = self.untyped_term(d, vars, recs);
                vars.pop();
                Process::Recv {
                    chan: c,
                    from: self.rng.gen_range(1..=3),
                    var: x,
                    body: Box::new(body),
                }
            }
            4 => {
                let c = self.chan(vars);
                Process::Select {
                    chan: c,
                    to: self.rng.gen_range(1..=3),
                    label: ["l", "r"].choose(&mut self.rng).unwrap().to_string(),
                    body: Box::new(self.untyped_term(d, vars, recs)),
                }
            }
            5 => {
                let c = self.chan(vars);
                Process::Branch {
                    chan: c,
                    from: self.rng.gen_range(1..=3),
                    branches: vec![
                        ("l".into(), self.untyped_term(d, vars, recs)),
                        ("r".into(), self.untyped_term(d, vars, recs)),
                    ],
                }
            }
            6 | 7 => Process::par(self.untyped_term(d, vars, recs), self.untyped_term(d, vars, recs)),
            8 => {
                let n = ["s", "t", "a"].choose(&mut self.rng).unwrap().to_string();
                Process::hide(n, self.untyped_term(d, vars, recs))
            }
            9 => {
                let x = self.var();
                let role = self.rng.gen_range(1..=3);
                vars.push(x.clone());
                let body = Box::new(self.untyped_term(d, vars, recs));
                vars.pop();
                if self.rng.gen_bool(0.5) {
                    Process::Request {
                        subject: Subject::Name("a".into()),
                        role,
                        var: x,
                        body,
                    }
                } else {
                    Process::Accept {
                        subject: Subject::Name("a".into()),
                        role,
                        var: x,
                        body,
                    }
                }
            }
            10 => {
                let cond = if self.rng.gen_bool(0.5) {
                    Expr::Eq(Box::new(Expr::Name("v".into())), Box::new(Expr::Name("v".into())))
                } else {
                    Expr::Eq(Box::new(Expr::Name("v".into())), Box::new(Expr::Name("w".into())))
                };
                Process::If {
                    cond,
                    then: Box::new(self.untyped_term(d, vars, recs)),
                    other: Box::new(self.untyped_term(d, vars, recs)),
                }
            }
            _ => {
                let x = format!("R{}", recs.len());
                recs.push(x.clone());
                let c = self.chan(vars);
                let body = send(&c, self.rng.gen_range(1..=3), Expr::True, self.untyped_term(d, vars, recs));
                recs.pop();
                Process::Rec {
                    var: x,
                    body: Box::new(body),
                }
            }
        }
    }

    /// A session environment: projections of a random global type, partly
    /// advanced, with some entries dropped or replaced.
    pub fn delta(&mut self) -> SessionEnv {
        let mut d = SessionEnv::new();
        for s in ["s", "t"] {
            if s == "t" && self.rng.gen_bool(0.5) {
                continue;
            }
            let roles = self.rng.gen_range(2..=4);
            let g = self.global(roles, 4);
            for r in g.roles() {
                let Ok(t) = g.project(r) else { continue };
                if self.rng.gen_bool(0.1) {
                    continue;
                }
                let t = if self.rng.gen_bool(0.1) { self.local(roles, 2) } else { t };
                d.insert(s, r, t);
            }
        }
        for _ in 0..self.rng.gen_range(0..3) {
            let next = mpst_core::typing::delta_step(&d);
            match next.choose(&mut self.rng) {
                Some(n) => d = n.clone(),
                None => break,
            }
        }
        d
    }

    pub fn local(&mut self, roles: Role, depth: usize) -> LocalType {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return LocalType::End;
        }
        let r = self.rng.gen_range(1..=roles);
        let u = self.payload();
        let cont = Box::new(self.local(roles, depth - 1));
        if self.rng.gen_bool(0.5) {
            LocalType::Send { to: r, payload: u, cont }
        } else {
            LocalType::Recv { from: r, payload: u, cont }
        }
    }

    /// A random graph with up to `max` states over a few labels.
    pub fn graph(&mut self, max: usize) -> LtsGraph {
        let n = self.rng.gen_range(1..=max);
        let labels = [
            ActionLabel::Tau,
            "s!<1,2,v>".parse().unwrap(),
            "s?<2,1,v>".parse().unwrap(),
            "s(+)<1,2,l>".parse().unwrap(),
        ];
        let density = self.rng.gen_range(0.5..2.5);
        let edges = ((n as f64) * density) as usize;
        let mut transitions = BTreeSet::new();
        for _ in 0..edges {
            let f = self.rng.gen_range(0..n);
            let t = self.rng.gen_range(0..n);
            let l = if self.rng.gen_bool(0.5) {
                ActionLabel::Tau
            } else {
                labels.choose(&mut self.rng).unwrap().clone()
            };
            transitions.insert((f, l, t));
        }
        LtsGraph {
            states: (0..n).map(|i| Process::Var(format!("S{i}"))).collect(),
            transitions: transitions.into_iter().collect(),
            truncated: false,
        }
    }
}

/// `⇒ℓ̂` by enumerating paths: a depth-first walk over (state, visible
/// label already taken) pairs.
pub fn weak_edges_by_paths(g: &LtsGraph) -> BTreeSet<(usize, ActionLabel, usize)> {
    let mut out = BTreeSet::new();
    let mut succ: BTreeMap<usize, Vec<(ActionLabel, usize)>> = BTreeMap::new();
    for (f, l, t) in &g.transitions {
        succ.entry(*f).or_default().push((l.clone(), *t));
    }
    for start in 0..g.states.len() {
        // (state, Some(label) once the visible step happened)
        let mut seen: BTreeSet<(usize, Option<ActionLabel>)> = BTreeSet::new();
        let mut stack = vec![(start, None::<ActionLabel>)];
        while let Some((x, taken)) = stack.pop() {
            if !seen.insert((x, taken.clone())) {
                continue;
            }
            match &taken {
                None => {
                    out.insert((start, ActionLabel::Tau, x));
                }
                Some(l) => {
                    out.insert((start, l.clone(), x));
                }
            }
            for (l, y) in succ.get(&x).map(|v| v.as_slice()).unwrap_or(&[]) {
                if l.is_tau() {
                    stack.push((*y, taken.clone()));
                } else if taken.is_none() {
                    stack.push((*y, Some(l.clone())));
                }
            }
        }
    }
    out
}

/// One-step structural congruence rewrites at every position: commutativity,
/// associativity, `P | 0 = P`, restriction swap, garbage restriction and
/// scope extrusion, plus alpha-renaming of restricted names.
pub fn congruence_rewrites(p: &Process) -> Vec<Process> {
    let mut out = Vec::new();
    match p {
        Process::Par(a, b) => {
            out.push(Process::Par(b.clone(), a.clone()));
            if let Process::Par(x, y) = a.as_ref() {
                out.push(Process::Par(x.clone(), Box::new(Process::Par(y.clone(), b.clone()))));
            }
            if let Process::Par(x, y) = b.as_ref() {
                out.push(Process::Par(Box::new(Process::Par(a.clone(), x.clone())), y.clone()));
            }
            if **b == Process::Inact {
                out.push((**a).clone());
            }
            if let Process::Hide { name, sort, body } = a.as_ref() {
                if !b.free_idents().contains(name) {
                    out.push(Process::Hide {
                        name: name.clone(),
                        sort: sort.clone(),
                        body: Box::new(Process::Par(body.clone(), b.clone())),
                    });
                }
            }
            for a2 in congruence_rewrites(a) {
                out.push(Process::Par(Box::new(a2), b.clone()));
            }
            for b2 in congruence_rewrites(b) {
                out.push(Process::Par(a.clone(), Box::new(b2)));
            }
        }
        Process::Hide { name, sort, body } => {
            if !body.free_idents().contains(name) {
                out.push((**body).clone());
            }
            if let Process::Hide {
                name: n2,
                sort: s2,
                body: b2,
            } = body.as_ref()
            {
                out.push(Process::Hide {
                    name: n2.clone(),
                    sort: s2.clone(),
                    body: Box::new(Process::Hide {
                        name: name.clone(),
                        sort: sort.clone(),
                        body: b2.clone(),
                    }),
                });
            }
            if let Process::Par(x, y) = body.as_ref() {
                if !y.free_idents().contains(name) {
                    out.push(Process::Par(
                        Box::new(Process::Hide {
                            name: name.clone(),
                            sort: sort.clone(),
                            body: x.clone(),
                        }),
                        y.clone(),
                    ));
                }
                if !x.free_idents().contains(name) {
                    out.push(Process::Par(
                        x.clone(),
                        Box::new(Process::Hide {
                            name: name.clone(),
                            sort: sort.clone(),
                            body: y.clone(),
                        }),
                    ));
                }
            }
            let fresh = format!("{name}'");
            if !body.free_idents().contains(&fresh) {
                out.push(Process::Hide {
                    name: fresh.clone(),
                    sort: sort.clone(),
                    body: Box::new(body.rename_name(name, &fresh)),
                });
            }
            for b2 in congruence_rewrites(body) {
                out.push(Process::Hide {
                    name: name.clone(),
                    sort: sort.clone(),
                    body: Box::new(b2),
                });
            }
        }
        _ => {
            out.push(Process::Par(Box::new(p.clone()), Box::new(Process::Inact)));
        }
    }
    out
}

/// Terms reachable from `p` by at most `depth` congruence rewrites.
pub fn congruence_closure(p: &Process, depth: usize) -> BTreeSet<Process> {
    let mut seen = BTreeSet::from([p.clone()]);
    let mut frontier = VecDeque::from([(p.clone(), 0)]);
    while let Some((q, d)) = frontier.pop_front() {
        if d == depth {
            continue;
        }
        for r in congruence_rewrites(&q) {
            if seen.insert(r.clone()) {
                frontier.push_back((r, d + 1));
            }
        }
    }
    seen
}

// ---- property suites --------------------------------------------------------

use mpst_core::lts::{reduce, tau_successors, weak_closure, StepConfig};
use mpst_core::normal::normal_form;
use mpst_core::typing::{check, delta_labeled_step, delta_reachable, delta_step};

/// Outcome of a seeded property run.
#[derive(Debug, Default)]
pub struct Report {
    pub cases: usize,
    pub failures: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 10 {
            self.failures.push(msg);
        } else if self.failures.len() == 10 {
            self.failures.push("...".into());
        }
    }
}

/// Every one-step reduct of a typed process re-types under some `Δ'` with
/// `Δ →* Δ'`.
pub fn subject_reduction(seed: u64, cases: usize) -> Report {
    let mut g = Gen::new(seed);
    let mut rep = Report::default();
    let cfg = StepConfig::default();
    for _ in 0..cases {
        let t = g.typed(12);
        rep.cases += 1;
        if let Err(e) = check(&t.gamma, &t.p, &t.delta) {
            rep.fail(format!("generated {} ▷ {} does not type: {e}", t.p, t.delta));
            continue;
        }
        let reach = delta_reachable(&t.delta);
        for q in reduce(&t.p, cfg) {
            if !reach.iter().any(|d| check(&t.gamma, &q, d).is_ok()) {
                rep.fail(format!("{} ▷ {} → {} untypable", t.p, t.delta, q));
            }
        }
    }
    rep
}

/// `(G↾p)↾q = dual((G↾q)↾p)` wherever both sides are defined.
pub fn projection_duality(seed: u64, cases: usize) -> Report {
    let mut g = Gen::new(seed);
    let mut rep = Report::default();
    for _ in 0..cases {
        let roles = g.rng.gen_range(2..=4);
        let gt = g.global(roles, 5);
        rep.cases += 1;
        let rs: Vec<Role> = gt.roles().into_iter().collect();
        for &p in &rs {
            for &q in &rs {
                if p == q {
                    continue;
                }
                let (Ok(tp), Ok(tq)) = (gt.project(p), gt.project(q)) else { continue };
                let (Ok(bpq), Ok(bqp)) = (tp.project(q), tq.project(p)) else { continue };
                if !mpst_core::types::equi_eq(&bpq, &bqp.dual()) {
                    rep.fail(format!("{gt}: ({tp})↾{q} = {bpq} but dual(({tq})↾{p}) = {}", bqp.dual()));
                }
            }
        }
    }
    rep
}

/// The unlabelled reducts of `delta_labeled_step` are exactly `delta_step`.
pub fn delta_step_agreement(seed: u64, cases: usize) -> Report {
    let mut g = Gen::new(seed);
    let mut rep = Report::default();
    for _ in 0..cases {
        let d = g.delta();
        rep.cases += 1;
        let a: BTreeSet<SessionEnv> = delta_labeled_step(&d).into_iter().map(|(_, d2)| d2.canonical()).collect();
        let b: BTreeSet<SessionEnv> = delta_step(&d).into_iter().map(|d2| d2.canonical()).collect();
        if a != b {
            rep.fail(format!("{d}: labelled {} vs unlabelled {}", a.len(), b.len()));
        }
    }
    rep
}

/// `reduce` agrees with the τ-moves of `step` on closed processes.
pub fn reduce_matches_tau(seed: u64, cases: usize) -> Report {
    let mut g = Gen::new(seed);
    let mut rep = Report::default();
    let cfg = StepConfig::default();
    for i in 0..cases {
        // half typed, half arbitrary
        let p = if i % 2 == 0 { g.typed(12).p } else { g.untyped(12) };
        rep.cases += 1;
        let a: BTreeSet<Process> = reduce(&p, cfg).iter().map(normal_form).collect();
        let b: BTreeSet<Process> = tau_successors(&p, cfg).iter().map(normal_form).collect();
        if a != b {
            let only_r: Vec<String> = a.difference(&b).map(|q| q.to_string()).collect();
            let only_s: Vec<String> = b.difference(&a).map(|q| q.to_string()).collect();
            rep.fail(format!("{p}: only reduce {only_r:?}; only step {only_s:?}"));
        }
    }
    rep
}

/// `weak_closure` against path enumeration.
pub fn weak_closure_oracle(seed: u64, cases: usize) -> Report {
    let mut g = Gen::new(seed);
    let mut rep = Report::default();
    for _ in 0..cases {
        let graph = g.graph(50);
        rep.cases += 1;
        let closed = weak_closure(&graph).edge_set();
        let oracle = weak_edges_by_paths(&graph);
        if closed != oracle {
            rep.fail(format!(
                "{} states: {} closure edges vs {} path edges",
                graph.states.len(),
                closed.len(),
                oracle.len()
            ));
        }
    }
    rep
}

/// `normal_form` against bounded rewriting with the congruence axioms:
/// rewrite chains keep the normal form, and single mutations that keep the
/// normal form are congruent within the bound.
pub fn congruence_oracle(seed: u64, cases: usize) -> Report {
    let mut g = Gen::new(seed);
    let mut rep = Report::default();
    for _ in 0..cases {
        let p = g.untyped(12);
        rep.cases += 1;
        let nf = normal_form(&p);
        let mut q = p.clone();
        for _ in 0..4 {
            let rs = congruence_rewrites(&q);
            match rs.choose(&mut g.rng) {
                Some(r) => q = r.clone(),
                None => break,
            }
        }
        if normal_form(&q) != nf {
            rep.fail(format!("{p} ≡ {q} but normal forms differ"));
        }
        let m = g.untyped(12);
        if normal_form(&m) == nf && m != p {
            let reach_p: BTreeSet<Process> = congruence_closure(&p, 4).iter().map(rename_canonically).collect();
            let reach_m: BTreeSet<Process> = congruence_closure(&m, 4).iter().map(rename_canonically).collect();
            if reach_p.is_disjoint(&reach_m) {
                rep.fail(format!("{p} and {m} share a normal form but no rewrite path within 4"));
            }
        }
    }
    rep
}

/// Renames restricted names and bound variables by position, without
/// reordering anything, so alpha-equivalent terms coincide.
fn rename_canonically(p: &Process) -> Process {
    fn go(p: &Process, k: &mut usize) -> Process {
        let next = |k: &mut usize| {
            *k += 1;
            format!("@{k}")
        };
        match p {
            Process::Hide { name, sort, body } => {
                let n = next(k);
                Process::Hide {
                    name: n.clone(),
                    sort: sort.clone(),
                    body: Box::new(go(&body.rename_name(name, &n), k)),
                }
            }
            Process::Par(a, b) => {
                let a = go(a, k);
                Process::Par(Box::new(a), Box::new(go(b, k)))
            }
            other => normal_form(other),
        }
    }
    go(p, &mut 0)
}

// ---- example workspaces ---------------------------------------------------

pub fn workspace_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples/workspaces")
}

pub fn load(file: &str) -> mpst_core::Workspace {
    let path = workspace_dir().join(file);
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    mpst_core::Workspace::parse(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Shape of a step in a scripted walk.
#[derive(Debug, Clone, Copy)]
pub enum Step {
    /// accept by this many roles
    Acc(usize),
    Tau,
    Out(Role, Role),
}

impl Step {
    fn fits(self, l: &ActionLabel) -> bool {
        match (self, l) {
            (Step::Acc(n), ActionLabel::Acc { roles, .. }) => roles.len() == n,
            (Step::Tau, ActionLabel::Tau) => true,
            (Step::Out(p, q), ActionLabel::Out { from, to, .. }) => *from == p && *to == q,
            _ => false,
        }
    }
}

/// Follows `script` from `start`, taking the first matching typed transition
/// each time. Returns every visited state, the start included.
pub fn walk(start: &mpst_core::bisim::TypedState, script: &[Step]) -> Result<Vec<mpst_core::bisim::TypedState>, String> {
    let cfg = mpst_core::lts::StepConfig::default();
    let mut out = vec![start.clone()];
    for (i, s) in script.iter().enumerate() {
        let cur = out.last().unwrap();
        let next = mpst_core::bisim::typed_step(cur, cfg)
            .into_iter()
            .find(|(l, _)| s.fits(l))
            .ok_or_else(|| format!("step {i} ({s:?}) not enabled at {cur}"))?;
        out.push(next.1);
    }
    Ok(out)
}

/// The nine pairs of the scenario 1 / scenario 2 closure, built by walking
/// both systems along the narrated runs.
pub fn ooi_listed_pairs(q: &mpst_core::bisim::Query) -> Result<Vec<mpst_core::bisim::Node>, String> {
    use mpst_core::bisim::{Node, TypedState};
    use Step::*;
    let left = TypedState::new(q.gamma.clone(), &q.p1, &q.d1);
    let right = TypedState::new(q.gamma.clone(), &q.p2, &q.d2);
    let ps = walk(&left, &[Acc(2), Tau, Tau, Out(1, 3), Tau, Out(2, 3)])?;
    let qs = walk(&right, &[Acc(2), Tau, Tau, Out(1, 3), Tau, Tau, Out(2, 3), Tau])?;
    let idx = [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5), (5, 6), (6, 7), (6, 8)];
    Ok(idx
        .iter()
        .map(|&(i, j)| Node {
            e: None,
            left: ps[i].clone(),
            right: qs[j].clone(),
        })
        .collect())
}
