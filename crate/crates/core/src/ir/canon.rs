//! Temp canonicalization: rename temps to `n0, n1, …` in first-definition
//! order per procedure, uniformly across definitions and uses. Enables
//! exact-text comparison of alpha-equivalent programs.

use super::{Instr, LoadSrc, Operand, ProcDef, Program};
use std::collections::{HashMap, HashSet};
use std::error::Error;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CanonError {
    /// A temp is used in a block where no definition is guaranteed to have
    /// executed on every path from entry.
    UndefinedTemp {
        proc: String,
        block: String,
        temp: String,
    },
}

impl fmt::Display for CanonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonError::UndefinedTemp { proc, block, temp } => write!(
                f,
                "{proc}: temp {temp} used in block {block} without a prior definition"
            ),
        }
    }
}

impl Error for CanonError {}

/// Rename temps to `n0, n1, …` in first-definition order per procedure.
/// Idempotent: canonical programs come back unchanged.
pub fn renumber_temps(program: &Program) -> Result<Program, CanonError> {
    let mut procedures = Vec::with_capacity(program.procedures.len());
    for proc in &program.procedures {
        procedures.push(renumber_proc(proc)?);
    }
    Ok(Program { procedures })
}

fn renumber_proc(proc: &ProcDef) -> Result<ProcDef, CanonError> {
    check_defined_before_use(proc)?;

    let mut mapping: HashMap<String, String> = HashMap::new();
    let mut next = 0usize;
    for block in &proc.blocks {
        for instr in &block.instrs {
            if let Some(dest) = instr.dest() {
                if !mapping.contains_key(dest) {
                    mapping.insert(dest.to_string(), format!("n{next}"));
                    next += 1;
                }
            }
        }
    }

    let rename = |t: &str| -> String {
        mapping.get(t).cloned().unwrap_or_else(|| t.to_string())
    };
    let rename_operand = |op: &Operand| -> Operand {
        match op {
            Operand::Temp(t) => Operand::Temp(rename(t)),
            other => other.clone(),
        }
    };

    let mut out = proc.clone();
    for block in &mut out.blocks {
        for instr in &mut block.instrs {
            *instr = match instr {
                Instr::Alloc { dest, class } => Instr::Alloc {
                    dest: rename(dest),
                    class: class.clone(),
                },
                Instr::StaticCall { dest, callee, args } => Instr::StaticCall {
                    dest: rename(dest),
                    callee: callee.clone(),
                    args: args.iter().map(rename_operand).collect(),
                },
                Instr::VirtualCall {
                    dest,
                    recv,
                    method,
                    args,
                } => Instr::VirtualCall {
                    dest: rename(dest),
                    recv: rename(recv),
                    method: method.clone(),
                    args: args.iter().map(rename_operand).collect(),
                },
                Instr::Store { var, src, ty } => Instr::Store {
                    var: var.clone(),
                    src: rename_operand(src),
                    ty: ty.clone(),
                },
                Instr::Load { dest, ty, src } => Instr::Load {
                    dest: rename(dest),
                    ty: ty.clone(),
                    src: match src {
                        LoadSrc::Temp(t) => LoadSrc::Temp(rename(t)),
                        v => v.clone(),
                    },
                },
            };
        }
    }
    Ok(out)
}

/// Must-defined dataflow over normal and exceptional edges. A handler edge
/// carries only the defs available at block entry, since a throw may occur
/// before any definition in the block has executed.
fn check_defined_before_use(proc: &ProcDef) -> Result<(), CanonError> {
    let n = proc.blocks.len();
    let index: HashMap<&str, usize> = proc
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.label.as_str(), i))
        .collect();

    // defined_in[b]: temps defined on every path reaching b's entry.
    // Start from the full universe and shrink via intersection.
    let universe: HashSet<String> = proc
        .blocks
        .iter()
        .flat_map(|b| b.instrs.iter().filter_map(|i| i.dest().map(String::from)))
        .collect();
    let mut defined_in: Vec<Option<HashSet<String>>> = vec![None; n];
    defined_in[0] = Some(HashSet::new());

    let mut changed = true;
    while changed {
        changed = false;
        for bi in 0..n {
            let Some(mut cur) = defined_in[bi].clone() else {
                continue;
            };
            let block = &proc.blocks[bi];
            let entry_defs = cur.clone();
            for instr in &block.instrs {
                if let Some(d) = instr.dest() {
                    cur.insert(d.to_string());
                }
            }
            for succ in &block.successors {
                let si = index[succ.as_str()];
                merge_into(&mut defined_in[si], &cur, &universe, &mut changed);
            }
            for h in &block.handlers {
                let hi = index[h.as_str()];
                merge_into(&mut defined_in[hi], &entry_defs, &universe, &mut changed);
            }
        }
    }

    for (bi, block) in proc.blocks.iter().enumerate() {
        let mut avail = defined_in[bi].clone().unwrap_or_default();
        for instr in &block.instrs {
            for used in instr_temp_uses(instr) {
                if !avail.contains(used) {
                    return Err(CanonError::UndefinedTemp {
                        proc: proc.name.to_string(),
                        block: block.label.clone(),
                        temp: used.to_string(),
                    });
                }
            }
            if let Some(d) = instr.dest() {
                avail.insert(d.to_string());
            }
        }
    }
    Ok(())
}

fn merge_into(
    slot: &mut Option<HashSet<String>>,
    incoming: &HashSet<String>,
    _universe: &HashSet<String>,
    changed: &mut bool,
) {
    match slot {
        None => {
            *slot = Some(incoming.clone());
            *changed = true;
        }
        Some(existing) => {
            let before = existing.len();
            existing.retain(|t| incoming.contains(t));
            if existing.len() != before {
                *changed = true;
            }
        }
    }
}

fn instr_temp_uses(instr: &Instr) -> Vec<&str> {
    let mut out = Vec::new();
    match instr {
        Instr::Alloc { .. } => {}
        Instr::StaticCall { args, .. } => {
            for a in args {
                if let Operand::Temp(t) = a {
                    out.push(t.as_str());
                }
            }
        }
        Instr::VirtualCall { recv, args, .. } => {
            out.push(recv.as_str());
            for a in args {
                if let Operand::Temp(t) = a {
                    out.push(t.as_str());
                }
            }
        }
        Instr::Store { src, .. } => {
            if let Operand::Temp(t) = src {
                out.push(t.as_str());
            }
        }
        Instr::Load { src, .. } => {
            if let LoadSrc::Temp(t) = src {
                out.push(t.as_str());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::ir::print_program;

    #[test]
    fn renumbers_in_definition_order() {
        let text = "define M.f() : void {\n\
                    #a:\n\
                    n7 = M.g()\n\
                    n3 = M.h(n7)\n\
                    jmp\n\
                    }\n";
        let p = parse_program(text).unwrap();
        let canon = renumber_temps(&p).unwrap();
        let printed = print_program(&canon);
        assert!(printed.contains("n0 = M.g()"));
        assert!(printed.contains("n1 = M.h(n0)"));
    }

    #[test]
    fn idempotent() {
        let text = "define M.f() : void {\n\
                    #a:\n\
                    t = M.g()\n\
                    u = M.h(t)\n\
                    jmp\n\
                    }\n";
        let p = parse_program(text).unwrap();
        let once = renumber_temps(&p).unwrap();
        let twice = renumber_temps(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn use_without_definition_errors() {
        let text = "define M.f() : void {\n\
                    #a:\n\
                    n0 = M.g(n9)\n\
                    jmp\n\
                    }\n";
        let p = parse_program(text).unwrap();
        let err = renumber_temps(&p).unwrap_err();
        assert!(matches!(err, CanonError::UndefinedTemp { ref temp, .. } if temp == "n9"));
    }

    #[test]
    fn handler_edge_only_carries_entry_defs() {
        // n0 is defined mid-block in `a`; the handler `h` must not rely on it.
        let text = "define M.f() : void {\n\
                    #a:\n\
                    n0 = M.g()\n\
                    jmp e\n\
                    .handlers h\n\
                    \n\
                    #h:\n\
                    n1 = M.k(n0)\n\
                    jmp e\n\
                    \n\
                    #e:\n\
                    jmp\n\
                    }\n";
        let p = parse_program(text).unwrap();
        assert!(renumber_temps(&p).is_err());
    }

    #[test]
    fn cross_block_use_on_all_paths_ok() {
        let text = "define M.f() : void {\n\
                    #a:\n\
                    n5 = M.g()\n\
                    jmp b\n\
                    \n\
                    #b:\n\
                    n6 = M.h(n5)\n\
                    jmp\n\
                    }\n";
        let p = parse_program(text).unwrap();
        let canon = renumber_temps(&p).unwrap();
        let printed = print_program(&canon);
        assert!(printed.contains("n1 = M.h(n0)"));
    }
}
