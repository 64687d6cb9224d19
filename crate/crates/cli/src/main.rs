use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mpst_core::bisim::{explore_typed, BisimConfig, BisimError, EquivalenceRegistry, TypedState, VerdictKind};
use mpst_core::lts::{default_universe, explore, reduce, ExploreConfig, StepConfig};
use mpst_core::typing::{check, infer, SessionEnv, SharedEnv, TypeError};
use mpst_core::workspace::{annotate_from_gamma, Workspace, WorkspaceError};
use mpst_core::{GlobalType, Process};

#[derive(Parser)]
#[command(name = "mpst", version, about = "Synchronous multiparty session pi-calculus workbench")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GlobalOpts {
    /// Workspace file with the named declarations.
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 10000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    #[arg(long, global = true, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    unfold_bound: u64,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Accepted for reproducibility; every command is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Infer Δ for a process, or check it against a given Δ.
    Check {
        proc: String,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        delta: Option<String>,
    },
    /// Project a global type onto one role, or onto all of them.
    Project { global: String, role: Option<u32> },
    /// Explore the (typed) transition system of a process.
    Lts {
        proc: String,
        #[arg(long)]
        typed: bool,
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        /// Write the graph as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-step reductions.
    Reduce { proc: String },
    /// Decide a weak bisimulation between two typed processes.
    Bisim {
        p1: String,
        p2: String,
        #[arg(long, value_enum, default_value_t = Mode::Standard)]
        mode: Mode,
        #[arg(long, conflicts_with_all = ["mode", "governed"])]
        standard: bool,
        #[arg(long, conflicts_with = "mode")]
        governed: bool,
        #[arg(long)]
        witness: Option<String>,
        #[arg(long)]
        gamma: Option<String>,
        /// Δ for both sides unless overridden.
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        d1: Option<String>,
        #[arg(long)]
        d2: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Standard,
    Governed,
}

const EXIT_OK: u8 = 0;
const EXIT_NOT_BISIMILAR: u8 = 1;
const EXIT_TYPE: u8 = 2;
const EXIT_UNRESOLVED: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl From<WorkspaceError> for Failure {
    fn from(e: WorkspaceError) -> Self {
        Failure {
            code: EXIT_UNRESOLVED,
            message: e.to_string(),
        }
    }
}

impl From<TypeError> for Failure {
    fn from(e: TypeError) -> Self {
        Failure {
            code: EXIT_TYPE,
            message: format!("type error: {e}"),
        }
    }
}

type CmdResult = Result<u8, Failure>;

struct Ctx {
    ws: Workspace,
    json: bool,
    max_states: usize,
    unfold_bound: usize,
}

impl Ctx {
    fn gamma(&self, arg: &Option<String>) -> Result<SharedEnv, Failure> {
        Ok(match arg {
            Some(g) => self.ws.resolve_gamma(g)?,
            None => SharedEnv::new(),
        })
    }

    fn delta(&self, arg: &Option<String>) -> Result<SessionEnv, Failure> {
        Ok(match arg {
            Some(d) => self.ws.resolve_delta(d)?,
            None => SessionEnv::new(),
        })
    }

    fn proc(&self, arg: &str, gamma: &SharedEnv) -> Result<Process, Failure> {
        Ok(annotate_from_gamma(&self.ws.resolve_proc(arg)?, gamma))
    }

    fn bisim_config(&self) -> BisimConfig {
        BisimConfig::with_bounds(self.max_states, self.unfold_bound)
    }

    fn step(&self) -> StepConfig {
        StepConfig {
            unfold_bound: self.unfold_bound,
        }
    }

    fn emit(&self, text: impl AsRef<str>, value: serde_json::Value) {
        let out = if self.json {
            serde_json::to_string_pretty(&value).expect("json")
        } else {
            text.as_ref().to_string()
        };
        // a closed pipe (`mpst lts ... | head`) is not an error
        let _ = writeln!(std::io::stdout().lock(), "{out}");
    }
}

fn show_delta(d: &SessionEnv) -> String {
    if d.is_empty() {
        "∅".to_string()
    } else {
        d.to_string()
    }
}

fn cmd_check(ctx: &Ctx, proc: &str, gamma: &Option<String>, delta: &Option<String>) -> CmdResult {
    let g = ctx.gamma(gamma)?;
    let p = ctx.proc(proc, &g)?;
    let d = match delta {
        Some(_) => {
            let d = ctx.delta(delta)?;
            check(&g, &p, &d)?;
            d
        }
        None => infer(&g, &p)?,
    };
    let shown = show_delta(&d.without_end());
    ctx.emit(&shown, json!({"ok": true, "delta": shown}));
    Ok(EXIT_OK)
}

fn cmd_project(ctx: &Ctx, global: &str, role: Option<u32>) -> CmdResult {
    let g: GlobalType = ctx.ws.resolve_global(global)?;
    let undefined = |e: mpst_core::ProjectionError| Failure {
        code: EXIT_TYPE,
        message: format!("projection undefined: {e}"),
    };
    match role {
        Some(r) => {
            let t = g.project(r).map_err(undefined)?;
            ctx.emit(t.to_string(), json!({"role": r, "type": t.to_string()}));
        }
        None => {
            let mut lines = Vec::new();
            let mut obj = serde_json::Map::new();
            for r in g.roles() {
                let t = g.project(r).map_err(undefined)?;
                lines.push(format!("{r}: {t}"));
                obj.insert(r.to_string(), json!(t.to_string()));
            }
            if lines.is_empty() {
                lines.push("end".into());
            }
            ctx.emit(lines.join("\n"), serde_json::Value::Object(obj));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_lts(
    ctx: &Ctx,
    proc: &str,
    typed: bool,
    gamma: &Option<String>,
    delta: &Option<String>,
    out: &Option<PathBuf>,
) -> CmdResult {
    let g = ctx.gamma(gamma)?;
    let p = ctx.proc(proc, &g)?;
    let cfg = ExploreConfig {
        max_states: ctx.max_states,
        step: ctx.step(),
    };
    let graph = if typed {
        let d = match delta {
            Some(_) => ctx.delta(delta)?,
            None => infer(&g, &p)?,
        };
        check(&g, &p, &d)?;
        explore_typed(&TypedState::new(g, &p, &d), cfg).0
    } else {
        let universe = default_universe(&p, &ctx.ws.values);
        explore(&p, &universe, cfg)
    };
    let doc = serde_json::to_value(&graph).expect("json");
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&doc).expect("json");
        fs::write(path, text).map_err(|e| Failure {
            code: EXIT_UNRESOLVED,
            message: format!("cannot write {}: {e}", path.display()),
        })?;
    }
    let summary = format!(
        "{} states, {} transitions{}",
        graph.states.len(),
        graph.transitions.len(),
        if graph.truncated { " (truncated)" } else { "" }
    );
    let mut text = summary.clone();
    if out.is_none() {
        for (f, l, t) in &graph.transitions {
            text.push_str(&format!("\n{f} --{l}--> {t}"));
        }
    }
    let value = if out.is_some() {
        json!({"states": graph.states.len(), "transitions": graph.transitions.len(), "truncated": graph.truncated})
    } else {
        doc
    };
    ctx.emit(text, value);
    Ok(EXIT_OK)
}

fn cmd_reduce(ctx: &Ctx, proc: &str) -> CmdResult {
    let p = ctx.proc(proc, &SharedEnv::new())?;
    let next: Vec<String> = reduce(&p, ctx.step()).iter().map(|q| q.to_string()).collect();
    let text = if next.is_empty() {
        "no reductions".to_string()
    } else {
        next.join("\n")
    };
    ctx.emit(text, json!({"successors": next}));
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bisim(
    ctx: &Ctx,
    p1: &str,
    p2: &str,
    mode: Mode,
    witness: &Option<String>,
    gamma: &Option<String>,
    delta: &Option<String>,
    d1: &Option<String>,
    d2: &Option<String>,
) -> CmdResult {
    let d1 = d1.as_deref().or(delta.as_deref());
    let d2 = d2.as_deref().or(delta.as_deref());
    let query = ctx
        .ws
        .query(gamma.as_deref(), (p1, d1), (p2, d2), witness.as_deref())?;
    let registry = EquivalenceRegistry::with_defaults();
    let name = match mode {
        Mode::Standard => "standard",
        Mode::Governed => "governed",
    };
    let eq = registry.get(name).expect("registered");
    let verdict = eq.decide(&query, &ctx.bisim_config()).map_err(|e| Failure {
        code: match e {
            BisimError::Genv(_) => EXIT_INCONCLUSIVE,
            _ => EXIT_TYPE,
        },
        message: e.to_string(),
    })?;
    let mut text = verdict.kind.to_string();
    if let Some(d) = &verdict.distinguishing {
        let trace: Vec<String> = d.trace.iter().map(|l| l.to_string()).collect();
        text.push_str(&format!("\ntrace: [{}]\nfailing side: {}", trace.join(", "), d.failing_side));
    }
    if let Some(r) = &verdict.relation {
        text.push_str(&format!("\nrelation: {} pairs", r.len()));
    }
    text.push_str(&format!("\nΔ-convergent: {}", verdict.delta_converges));
    ctx.emit(text, verdict.to_json());
    Ok(match verdict.kind {
        VerdictKind::Bisimilar => EXIT_OK,
        VerdictKind::NotBisimilar => EXIT_NOT_BISIMILAR,
        VerdictKind::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn run(cli: Cli) -> CmdResult {
    let ws = match &cli.global.workspace {
        Some(path) => {
            let src = fs::read_to_string(path).map_err(|e| Failure {
                code: EXIT_UNRESOLVED,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            Workspace::parse(&src)?
        }
        None => Workspace::default(),
    };
    let ctx = Ctx {
        ws,
        json: cli.global.json,
        max_states: cli.global.max_states as usize,
        unfold_bound: cli.global.unfold_bound as usize,
    };
    match &cli.cmd {
        Cmd::Check { proc, gamma, delta } => cmd_check(&ctx, proc, gamma, delta),
        Cmd::Project { global, role } => cmd_project(&ctx, global, *role),
        Cmd::Lts {
            proc,
            typed,
            gamma,
            delta,
            out,
        } => cmd_lts(&ctx, proc, *typed, gamma, delta, out),
        Cmd::Reduce { proc } => cmd_reduce(&ctx, proc),
        Cmd::Bisim {
            p1,
            p2,
            mode,
            standard,
            governed,
            witness,
            gamma,
            delta,
            d1,
            d2,
        } => {
            let mode = if *governed {
                Mode::Governed
            } else if *standard {
                Mode::Standard
            } else {
                *mode
            };
            if mode == Mode::Governed && witness.is_none() {
                return Err(Failure {
                    code: EXIT_TYPE,
                    message: "governed bisimulation needs --witness".into(),
                });
            }
            cmd_bisim(&ctx, p1, p2, mode, witness, gamma, delta, d1, d2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.global.json;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if json {
                println!("{}", json!({"error": f.message, "exit": f.code}));
            }
            eprintln!("mpst: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
