//! Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if
//! any fails.

mod common;

use std::cell::RefCell;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mpst_core::bisim::{BisimConfig, EquivalenceRegistry, Query, Verdict, VerdictKind};
use mpst_core::genv::{genv_reachable, GenvConfig};
use mpst_core::lts::ActionLabel;
use mpst_core::typing::infer;
use mpst_core::Workspace;

use common::*;

type Check = Result<String, String>;

struct Harness {
    cfg: BisimConfig,
    registry: EquivalenceRegistry,
    /// (query description, verdict) for every decided query of suites 1-4
    verdicts: RefCell<Vec<(String, Verdict)>>,
}

impl Harness {
    fn decide(&self, mode: &str, what: &str, q: &Query, budget: Duration) -> Result<Verdict, String> {
        let t = Instant::now();
        let v = self
            .registry
            .get(mode)
            .expect("registered")
            .decide(q, &self.cfg)
            .map_err(|e| format!("{what}: {e}"))?;
        let took = t.elapsed();
        if took > budget {
            return Err(format!("{what}: took {took:?}, budget {budget:?}"));
        }
        self.verdicts.borrow_mut().push((what.to_string(), v.clone()));
        Ok(v)
    }

    fn expect(&self, mode: &str, what: &str, q: &Query, want: VerdictKind, budget: Duration) -> Result<Verdict, String> {
        let v = self.decide(mode, what, q, budget)?;
        if v.kind != want {
            let trace = v
                .distinguishing
                .as_ref()
                .map(|d| format!(" trace {}", show_trace(&d.trace)))
                .unwrap_or_default();
            return Err(format!("{what}: {} (expected {want}){trace}", v.kind));
        }
        Ok(v)
    }
}

fn show_trace(t: &[ActionLabel]) -> String {
    let v: Vec<String> = t.iter().map(|l| l.to_string()).collect();
    format!("[{}]", v.join(", "))
}

fn query(ws: &Workspace, left: (&str, &str), right: (&str, &str), witness: Option<&str>) -> Result<Query, String> {
    let d = |s: &str| -> Option<String> { (!s.is_empty()).then(|| s.to_string()) };
    let (d1, d2) = (d(left.1), d(right.1));
    ws.query(Some("G"), (left.0, d1.as_deref()), (right.0, d2.as_deref()), witness)
        .map_err(|e| e.to_string())
}

const SECOND: Duration = Duration::from_secs(1);

fn intro(h: &Harness) -> Check {
    let ws = load("intro.mpst");
    let g = ws.gamma("G").map_err(|e| e.to_string())?;
    for name in ["P1", "P2", "P3", "R2"] {
        let p = ws.proc(name).map_err(|e| e.to_string())?;
        let d = infer(g, p).map_err(|e| format!("{name}: {e}"))?;
        if !d.is_empty() {
            return Err(format!("{name} infers {d}, expected ∅"));
        }
    }
    let q = query(&ws, ("Q1", "D0"), ("Q2", "D0"), None)?;
    let v = h.expect("standard", "Q1 vs Q2", &q, VerdictKind::NotBisimilar, SECOND)?;
    let trace = v.distinguishing.map(|d| d.trace).unwrap_or_default();
    if trace.last().map(|l| l.to_string()).as_deref() != Some("s_a!<2,3,v>") {
        return Err(format!("Q1 vs Q2 trace {}", show_trace(&trace)));
    }
    let q = query(&ws, ("Closed", "DClosed"), ("Nil", "DEnd"), None)?;
    h.expect("standard", "Q1|P3' vs 0", &q, VerdictKind::Bisimilar, SECOND)?;
    Ok(format!("P1,P2,P3,R2 ▷ ∅; Q1 vs Q2 distinguished by {}; Q1|P3' ≈s 0", show_trace(&trace)))
}

fn governed(h: &Harness) -> Check {
    let ws = load("intro.mpst");
    let budget = 2 * SECOND;
    let q = query(&ws, ("Q1", "D0"), ("Q2", "D0"), Some("E1"))?;
    h.expect("governed", "Q1 vs Q2 under E1", &q, VerdictKind::Bisimilar, budget)?;
    let q = query(&ws, ("Q1", "D0"), ("Q2", "D0"), Some("E2"))?;
    h.expect("governed", "Q1 vs Q2 under E2", &q, VerdictKind::NotBisimilar, budget)?;
    Ok("bisimilar under E1, not under E2".into())
}

fn theorems(h: &Harness) -> Check {
    let ws = load("theorems.mpst");
    let budget = 2 * SECOND;
    // run everything, report every mismatch
    let mut bad = Vec::new();
    let runs: [(&str, &str, (&str, &str), (&str, &str), Option<&str>); 5] = [
        ("standard", "T1 vs T2", ("T1", "DT"), ("T2", "DT"), None),
        ("governed", "T1 vs T2 under E1", ("T1", "DT"), ("T2", "DT"), Some("E1")),
        ("governed", "T1 vs T2 under E2", ("T1", "DT"), ("T2", "DT"), Some("E2")),
        ("standard", "C1 vs C2", ("C1", "DC1"), ("C2", "DC2"), None),
        ("governed", "C1 vs C2 under EC", ("C1", "DC1"), ("C2", "DC2"), Some("EC")),
    ];
    for (mode, what, l, r, w) in runs {
        let q = query(&ws, l, r, w)?;
        if let Err(e) = h.expect(mode, what, &q, VerdictKind::Bisimilar, budget) {
            bad.push(e);
        }
    }
    if bad.is_empty() {
        Ok("two-session pair ≈s and ≈gs under E1, E2; single-session pair ≈s and ≈gs".into())
    } else {
        Err(bad.join("; "))
    }
}

fn ooi(h: &Harness) -> Check {
    let ws = load("ooi.mpst");
    let start = Instant::now();
    let budget = 10 * SECOND;

    let q = query(&ws, ("S1", ""), ("S2", ""), None)?;
    let v = h.expect("standard", "scenario 1 vs 2", &q, VerdictKind::Bisimilar, budget)?;
    let rel = v.relation.clone().unwrap_or_default();
    let standard = h.registry.get("standard").expect("registered");
    if !standard.check_relation(&q, &rel, &h.cfg).map_err(|e| e.to_string())? {
        return Err("emitted relation fails check_relation".into());
    }
    let listed = ooi_listed_pairs(&q)?;
    let missing = listed.iter().filter(|n| !rel.contains(n)).count();
    if missing > 0 {
        return Err(format!("{missing} of the 9 listed pairs are not in the relation"));
    }

    let q = query(&ws, ("S2", ""), ("S3", ""), None)?;
    let v = h.expect("standard", "scenario 2 vs 3", &q, VerdictKind::NotBisimilar, budget)?;
    let trace = v.distinguishing.map(|d| d.trace).unwrap_or_default();
    let late_a2 = matches!(trace.last(), Some(ActionLabel::Out { from: 2, to: 3, .. }));
    let a1_before = trace.iter().any(|l| matches!(l, ActionLabel::Out { from: 1, to: 3, .. }));
    if !late_a2 || a1_before {
        return Err(format!("scenario 2 vs 3 trace {}", show_trace(&trace)));
    }

    let q = query(&ws, ("S2s", "D1"), ("S3s", "D1"), Some("E"))?;
    h.expect("governed", "scenario 2 vs 3 under E", &q, VerdictKind::Bisimilar, budget)?;

    let took = start.elapsed();
    if took > budget {
        return Err(format!("took {took:?}"));
    }
    Ok(format!(
        "relation of {} pairs validated, contains the 9 listed; 2 vs 3 trace {}; ≈gs under E",
        rel.len(),
        show_trace(&trace)
    ))
}

fn report(r: Report, what: &str) -> Check {
    if r.ok() {
        Ok(format!("{} {what}", r.cases))
    } else {
        Err(format!("{} of {} {what} failed: {}", r.failures.len(), r.cases, r.failures.join(" | ")))
    }
}

fn converging(h: &Harness) -> Check {
    let vs = h.verdicts.borrow();
    let related: Vec<&(String, Verdict)> = vs.iter().filter(|(_, v)| v.related()).collect();
    let bad: Vec<&str> = related
        .iter()
        .filter(|(_, v)| !v.delta_converges)
        .map(|(w, _)| w.as_str())
        .collect();
    if related.is_empty() {
        return Err("no bisimilar verdicts recorded".into());
    }
    if bad.is_empty() {
        Ok(format!("{} bisimilar verdicts, all Δ-convergent", related.len()))
    } else {
        Err(format!("not convergent: {}", bad.join(", ")))
    }
}

/// Reachable witnesses, and both fixpoints on every typable declared
/// process against itself, for every example workspace.
fn termination(h: &Harness) -> Check {
    let start = Instant::now();
    let genv_cfg = GenvConfig {
        max_envs: 10000,
        ..GenvConfig::default()
    };
    let mut files: Vec<_> = std::fs::read_dir(workspace_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mpst"))
        .collect();
    files.sort();
    let (mut envs, mut games) = (0, 0);
    for path in &files {
        let file = path.file_name().unwrap().to_string_lossy().to_string();
        let ws = load(&file);
        for (w, e) in &ws.witnesses {
            genv_reachable(e, genv_cfg).map_err(|err| format!("{file}: witness {w}: {err}"))?;
            envs += 1;
        }
        let Some(g) = ws.gammas.keys().next().cloned() else { continue };
        let gamma = ws.gamma(&g).map_err(|e| e.to_string())?;
        for name in ws.procs.keys() {
            let p = mpst_core::workspace::annotate_from_gamma(ws.proc(name).unwrap(), gamma);
            let Ok(d) = infer(gamma, &p) else { continue };
            let mut q = Query::new(gamma.clone(), p.clone(), d.clone(), p.clone(), d.clone());
            q.sessions = ws.session_types();
            let mut runs = vec![("standard", q.clone())];
            for e in ws.witnesses.values() {
                runs.push(("governed", q.clone().governed_by(e.clone())));
            }
            for (mode, q) in runs {
                match h.registry.get(mode).unwrap().decide(&q, &h.cfg) {
                    Ok(v) if v.kind == VerdictKind::Inconclusive => {
                        return Err(format!("{file}: {name} ({mode}) truncated"));
                    }
                    Ok(v) if v.kind == VerdictKind::NotBisimilar => {
                        return Err(format!("{file}: {name} ({mode}) not bisimilar to itself"));
                    }
                    Ok(_) => games += 1,
                    // witness does not govern this process
                    Err(mpst_core::bisim::BisimError::NotGoverned { .. }) => {}
                    Err(e) => return Err(format!("{file}: {name} ({mode}): {e}")),
                }
            }
        }
    }
    let took = start.elapsed();
    if took > Duration::from_secs(60) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{} files, {envs} witnesses, {games} games in {took:.2?}", files.len()))
}

fn oracles() -> Check {
    let s = seed();
    let a = report(weak_closure_oracle(s, 100), "graphs")?;
    let b = report(delta_step_agreement(s, 500), "environments")?;
    let c = report(reduce_matches_tau(s, 500), "processes")?;
    Ok(format!("{a}, {b}, {c}"))
}

fn main() -> ExitCode {
    let h = Harness {
        cfg: BisimConfig::with_bounds(10000, 16),
        registry: EquivalenceRegistry::with_defaults(),
        verdicts: RefCell::new(Vec::new()),
    };
    let s = seed();
    let criteria: Vec<(&str, Box<dyn Fn(&Harness) -> Check>)> = vec![
        ("introductory example", Box::new(intro)),
        ("governed example", Box::new(governed)),
        ("post-theorem examples", Box::new(theorems)),
        ("OOI use case", Box::new(ooi)),
        ("subject reduction", Box::new(move |_| report(subject_reduction(s, 500), "processes"))),
        ("projection duality", Box::new(move |_| report(projection_duality(s, 500), "global types"))),
        ("Δ-convergence of bisimilar verdicts", Box::new(converging)),
        ("termination on example workspaces", Box::new(termination)),
        ("oracle equivalence", Box::new(|_| oracles())),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run(&h);
        let took = t.elapsed();
        match out {
            Ok(msg) => println!("PASS {} {name} ({took:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name} ({took:.2?}): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed (seed {s:#x})", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
