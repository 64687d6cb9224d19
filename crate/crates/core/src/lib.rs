//! Workbench for the synchronous multiparty session π-calculus: process and
//! type syntax, typing, labelled transition systems, global environments and
//! two typed bisimulations (standard and governed).

pub mod ast;
pub mod bisim;
pub mod genv;
pub mod lts;
pub mod normal;
pub mod parse;
pub mod print;
pub mod types;
pub mod typing;
pub mod workspace;

pub use ast::{Chan, Expr, Process, Role, Subject, Value};
pub use normal::{congruent, normal_form};
pub use parse::{parse_binary, parse_global, parse_local, parse_process, parse_sort, ParseError};
pub use types::{BinaryType, Exchange, GlobalType, LocalType, ProjectionError, Sort};
pub use bisim::{bisim_governed, bisim_standard, BisimConfig, Equivalence, EquivalenceRegistry, Query, Verdict, VerdictKind};
pub use genv::GlobalEnv;
pub use typing::{check, infer, typecheck_expr, SessionEnv, SharedEnv, TypeError};
pub use workspace::Workspace;
