//! Backward may-liveness over both normal and exceptional edges.
//!
//! A name is live at a point when some path from that point mentions it.
//! For locals, a load of `&v`, a store to `&v`, or `&v` in an argument
//! position all count as mentions; stores count as uses deliberately, so
//! live regions never shrink when mentions are added. Temps are tracked
//! alongside locals (use positions only) so callers can tell whether a
//! resource is still reachable through a pending temp.

use super::cfg::Cfg;
use crate::ir::{Instr, LoadSrc, Operand, ProcDef};
use std::collections::BTreeSet;

/// A trackable name: a local variable slot or a temp.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Name {
    Var(String),
    Temp(String),
}

/// Per-point live sets for one procedure.
///
/// Point `i` of a block is the program point before instruction `i`;
/// point `len(instrs)` sits before the terminator.
#[derive(Debug, Clone)]
pub struct Liveness {
    per_block: Vec<Vec<BTreeSet<Name>>>,
}

impl Liveness {
    /// Live set before instruction `index` of `block`.
    pub fn live_before(&self, block: usize, index: usize) -> &BTreeSet<Name> {
        &self.per_block[block][index]
    }

    /// Live set after instruction `index` of `block`.
    pub fn live_after(&self, block: usize, index: usize) -> &BTreeSet<Name> {
        &self.per_block[block][index + 1]
    }

    /// Live set at block entry.
    pub fn live_in(&self, block: usize) -> &BTreeSet<Name> {
        &self.per_block[block][0]
    }

    pub fn is_var_live_after(&self, block: usize, index: usize, var: &str) -> bool {
        self.live_after(block, index)
            .contains(&Name::Var(var.to_string()))
    }
}

/// Backward fixed point. At a call instruction the live-in of every
/// handler block joins in, since control may divert there mid-block.
pub fn compute_liveness(cfg: &Cfg, proc: &ProcDef) -> Liveness {
    let n = proc.blocks.len();
    let mut per_block: Vec<Vec<BTreeSet<Name>>> = proc
        .blocks
        .iter()
        .map(|b| vec![BTreeSet::new(); b.instrs.len() + 1])
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for bi in (0..n).rev() {
            let block = &proc.blocks[bi];
            let len = block.instrs.len();

            let mut term = BTreeSet::new();
            for &s in cfg.successors(bi) {
                term.extend(per_block[s][0].iter().cloned());
            }
            if per_block[bi][len] != term {
                per_block[bi][len] = term;
                changed = true;
            }

            for i in (0..len).rev() {
                let mut live = per_block[bi][i + 1].clone();
                let instr = &block.instrs[i];
                for name in mentions(instr) {
                    live.insert(name);
                }
                if instr.is_call() {
                    for &h in cfg.handlers(bi) {
                        let handler_in: Vec<Name> = per_block[h][0].iter().cloned().collect();
                        live.extend(handler_in);
                    }
                }
                if per_block[bi][i] != live {
                    per_block[bi][i] = live;
                    changed = true;
                }
            }
        }
    }

    Liveness { per_block }
}

/// Names an instruction mentions: every `&v` occurrence for locals
/// (including store targets), and every temp in a use position.
pub fn mentions(instr: &Instr) -> Vec<Name> {
    let mut out = Vec::new();
    let mut operand = |op: &Operand| match op {
        Operand::Temp(t) => out.push(Name::Temp(t.clone())),
        Operand::Var(v) => out.push(Name::Var(v.clone())),
        _ => {}
    };
    match instr {
        Instr::Alloc { .. } => {}
        Instr::StaticCall { args, .. } => args.iter().for_each(&mut operand),
        Instr::VirtualCall { recv, args, .. } => {
            out.push(Name::Temp(recv.clone()));
            args.iter().for_each(|a| match a {
                Operand::Temp(t) => out.push(Name::Temp(t.clone())),
                Operand::Var(v) => out.push(Name::Var(v.clone())),
                _ => {}
            });
        }
        Instr::Store { var, src, .. } => {
            out.push(Name::Var(var.clone()));
            match src {
                Operand::Temp(t) => out.push(Name::Temp(t.clone())),
                Operand::Var(v) => out.push(Name::Var(v.clone())),
                _ => {}
            }
        }
        Instr::Load { src, .. } => match src {
            LoadSrc::Var(v) => out.push(Name::Var(v.clone())),
            LoadSrc::Temp(t) => out.push(Name::Temp(t.clone())),
        },
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::build_cfg;
    use crate::ir::parse_program;

    #[test]
    fn never_mentioned_never_live() {
        let text = "define M.f() : void {\n#a:\nn0 = M.g()\njmp\n}\n";
        let p = parse_program(text).unwrap();
        let cfg = build_cfg(&p.procedures[0]);
        let live = compute_liveness(&cfg, &p.procedures[0]);
        assert!(!live.is_var_live_after(0, 0, "ghost"));
        assert!(live.live_in(0).is_empty());
    }

    #[test]
    fn store_counts_as_mention() {
        let text = "define M.f() : void {\n\
                    #a:\nn0 = M.g()\njmp b\n\n\
                    #b:\nstore &v <- n0:int\njmp\n}\n";
        let p = parse_program(text).unwrap();
        let cfg = build_cfg(&p.procedures[0]);
        let live = compute_liveness(&cfg, &p.procedures[0]);
        // v is live before the store, dead after it.
        assert!(live.live_before(1, 0).contains(&Name::Var("v".into())));
        assert!(!live.is_var_live_after(1, 0, "v"));
        // And live through block a, whose successor reaches the store.
        assert!(live.live_in(0).contains(&Name::Var("v".into())));
    }

    #[test]
    fn handler_path_keeps_name_live_at_calls_only() {
        // The handler mentions w; the call in `a` can divert there, so w is
        // live before the call but dead after it on the normal path... it
        // stays dead after the call because no normal path mentions it.
        let text = "define M.f() : void {\n\
                    #a:\n\
                    n0:int = load &w\n\
                    n1 = M.g()\n\
                    n2:int = load &v\n\
                    jmp e\n\
                    .handlers h\n\
                    \n\
                    #h:\n\
                    n3:int = load &w\n\
                    jmp e\n\
                    \n\
                    #e:\n\
                    jmp\n}\n";
        let p = parse_program(text).unwrap();
        let cfg = build_cfg(&p.procedures[0]);
        let live = compute_liveness(&cfg, &p.procedures[0]);
        let w = Name::Var("w".into());
        // Before the call, a throw can still reach the handler's load of w.
        assert!(live.live_before(0, 1).contains(&w));
        // After the call no remaining path mentions w.
        assert!(!live.live_after(0, 1).contains(&w));
        // The load at index 2 cannot throw, so it adds nothing for w.
        assert!(!live.live_after(0, 2).contains(&w));
    }
}
