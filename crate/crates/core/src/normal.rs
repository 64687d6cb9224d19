//! Canonical representatives of structural congruence classes.
//!
//! A normal form is `(new n1)...(new nk)(P1 | ... | Pm)` where every `Pi` is
//! a prefix, conditional, recursion or variable, unused restrictions are
//! dropped, components are sorted by their printed form and bound names are
//! renamed by binding depth (`%0`, `%1`, ...). Recursion is never unfolded.

use std::cell::Cell;

use crate::ast::Process;
use crate::types::Sort;

/// Spine restrictions above this count are ordered by first occurrence
/// instead of trying every permutation.
const EXACT_SPINE_LIMIT: usize = 6;

pub fn normal_form(p: &Process) -> Process {
    let n = Normalizer { temp: Cell::new(0) };
    n.group(p, 0)
}

/// `P ≡ Q`, decided by comparing normal forms.
pub fn congruent(p: &Process, q: &Process) -> bool {
    normal_form(p) == normal_form(q)
}

/// Splits a normal form into its restricted names and parallel components.
pub fn components(p: &Process) -> (Vec<(String, Option<Sort>)>, Vec<Process>) {
    let mut names = Vec::new();
    let mut cur = p;
    while let Process::Hide { name, sort, body } = cur {
        names.push((name.clone(), sort.clone()));
        cur = body;
    }
    let mut comps = Vec::new();
    flatten_par(cur, &mut comps);
    (names, comps)
}

fn flatten_par(p: &Process, out: &mut Vec<Process>) {
    match p {
        Process::Par(a, b) => {
            flatten_par(a, out);
            flatten_par(b, out);
        }
        Process::Inact => {}
        other => out.push(other.clone()),
    }
}

pub(crate) fn level_name(level: usize) -> String {
    format!("%{level}")
}

struct Normalizer {
    temp: Cell<usize>,
}

impl Normalizer {
    fn fresh_temp(&self) -> String {
        let k = self.temp.get();
        self.temp.set(k + 1);
        format!("\u{1}{k}")
    }

    fn flatten(&self, p: &Process, names: &mut Vec<(String, Option<Sort>)>, comps: &mut Vec<Process>) {
        match p {
            Process::Par(a, b) => {
                self.flatten(a, names, comps);
                self.flatten(b, names, comps);
            }
            Process::Inact => {}
            Process::Hide { name, sort, body } => {
                let t = self.fresh_temp();
                names.push((t.clone(), sort.clone()));
                self.flatten(&body.rename_name(name, &t), names, comps);
            }
            other => comps.push(other.clone()),
        }
    }

    /// Normal form of a parallel group whose binders start at `level`.
    fn group(&self, p: &Process, level: usize) -> Process {
        let mut names = Vec::new();
        let mut comps = Vec::new();
        self.flatten(p, &mut names, &mut comps);
        let used: Vec<(String, Option<Sort>)> = names
            .into_iter()
            .filter(|(n, _)| comps.iter().any(|c| c.free_idents().contains(n)))
            .collect();
        let k = used.len();
        let inner = level + k;

        let build = |order: &[usize]| -> (String, Vec<Process>) {
            // order[i] = which temp becomes %(level+i)
            let mut renamed = comps.clone();
            for (i, &t) in order.iter().enumerate() {
                let canon = level_name(level + i);
                renamed = renamed
                    .iter()
                    .map(|c| c.rename_name(&used[t].0, &canon))
                    .collect();
            }
            let mut normed: Vec<(String, Process)> = renamed
                .iter()
                .map(|c| {
                    let n = self.component(c, inner);
                    (n.to_string(), n)
                })
                .collect();
            normed.sort_by(|a, b| a.0.cmp(&b.0));
            let mut key = String::new();
            for (i, &t) in order.iter().enumerate() {
                if let Some(s) = &used[t].1 {
                    key.push_str(&format!("{i}:{s};"));
                }
            }
            key.push('|');
            for (s, _) in &normed {
                key.push_str(s);
                key.push('\u{2}');
            }
            (key, normed.into_iter().map(|(_, p)| p).collect())
        };

        let best_order: Vec<usize> = if k <= 1 {
            (0..k).collect()
        } else if k <= EXACT_SPINE_LIMIT {
            let mut best: Option<(String, Vec<usize>)> = None;
            for perm in permutations(k) {
                let (key, _) = build(&perm);
                if best.as_ref().is_none_or(|(b, _)| key < *b) {
                    best = Some((key, perm));
                }
            }
            best.map(|(_, o)| o).unwrap_or_default()
        } else {
            (0..k).collect()
        };
        let (_, sorted) = build(&best_order);
        let mut out = Process::par_all(sorted);
        for (i, &t) in best_order.iter().enumerate().rev() {
            out = Process::Hide {
                name: level_name(level + i),
                sort: used[t].1.clone(),
                body: Box::new(out),
            };
        }
        out
    }

    /// Normal form of a single non-parallel component at binder depth `level`.
    fn component(&self, p: &Process, level: usize) -> Process {
        let bound = level_name(level);
        match p {
            Process::Request {
                subject,
                role,
                var,
                body,
            } => Process::Request {
                subject: subject.clone(),
                role: *role,
                var: bound.clone(),
                body: Box::new(self.group(&body.rename_var(var, &bound), level + 1)),
            },
            Process::Accept {
                subject,
                role,
                var,
                body,
            } => Process::Accept {
                subject: subject.clone(),
                role: *role,
                var: bound.clone(),
                body: Box::new(self.group(&body.rename_var(var, &bound), level + 1)),
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
                body: Box::new(self.group(body, level)),
            },
            Process::Recv {
                chan,
                from,
                var,
                body,
            } => Process::Recv {
                chan: chan.clone(),
                from: *from,
                var: bound.clone(),
                body: Box::new(self.group(&body.rename_var(var, &bound), level + 1)),
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
                body: Box::new(self.group(body, level)),
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
                    .map(|(l, b)| (l.clone(), self.group(b, level)))
                    .collect(),
            },
            Process::If { cond, then, other } => Process::If {
                cond: cond.clone(),
                then: Box::new(self.group(then, level)),
                other: Box::new(self.group(other, level)),
            },
            Process::Rec { var, body } => Process::Rec {
                var: bound.clone(),
                body: Box::new(self.group(
                    &body.subst_proc_var(var, &Process::Var(bound.clone())),
                    level + 1,
                )),
            },
            Process::Var(x) => Process::Var(x.clone()),
            Process::Par(..) | Process::Hide { .. } | Process::Inact => self.group(p, level),
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut v = rest.clone();
            v.insert(pos, k - 1);
            out.push(v);
        }
    }
    out
}
