//! Resource-leak detection and repair over a block-structured textual IR.
//!
//! The pipeline mirrors how a static analyzer's auto-fix would operate:
//! a mini-Java frontend lowers source to the IR ([`minijava`]), the leak
//! detector flags allocation sites that stay open, reachable through a
//! dead local, on some path to exit ([`analysis`]), the IR fixer inserts
//! close calls on both normal and exceptional paths ([`autofix`]), and the
//! repair pipeline recovers fixed source code by generating candidates,
//! filtering them through compile + re-analysis, and selecting the one
//! whose IR is closest to the fixed IR by normalized edit distance
//! ([`repair`]). A bounded-exhaustive interpreter over explicit exception
//! schedules serves as the dynamic oracle ([`interp`]).

pub mod analysis;
pub mod autofix;
pub mod corpus;
pub mod interp;
pub mod ir;
pub mod metrics;
pub mod minijava;
pub mod repair;

pub use analysis::{
    analyze_program, build_cfg, compute_liveness, detect_leaks, Cfg, LeakReport, Liveness,
    ResourceConfig,
};
pub use autofix::{fix_procedure, fix_program, FixError, FixPlan};
pub use corpus::{generate_corpus, CorpusEntry, CorpusParams, PatternKind};
pub use interp::{
    find_leak_witness, run_schedule, ExceptionSchedule, ExitKind, SiteKey, TraceEvent, TraceResult,
};
pub use ir::{
    levenshtein, normalized_edit_distance, parse_program, print_program, renumber_temps,
    tokenize_ir, Block, Instr, IrPoint, LoadSrc, Operand, ProcDef, Program, QualifiedName,
    TypeName,
};
pub use metrics::{evaluate_corpus, ir_exact_match, MetricsRecord};
pub use minijava::{compile_to_ir, parse_source, print_source, MethodDecl, SourceUnit, Stmt};
pub use repair::{
    filter_candidates, generate_candidates, repair, repair_with, select_fix, Candidate,
    CandidateGenerator, CandidateStatus, RepairOutcome, RepairResult, RuleBasedGenerator,
};
