//! Canonical printer. One instruction per line, blocks separated by a
//! blank line, `.handlers` on its own line, one trailing newline.
//! Parsing the output yields the input program exactly.

use super::{Block, ProcDef, Program};
use std::fmt::Write;

/// Render a program in the canonical layout. The empty program prints as
/// empty text.
pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, proc) in program.procedures.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_proc(&mut out, proc);
    }
    out
}

fn print_proc(out: &mut String, proc: &ProcDef) {
    write!(out, "define {}(", proc.name).unwrap();
    for (i, (name, ty)) in proc.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{name}: {ty}").unwrap();
    }
    writeln!(out, ") : {} {{", proc.return_type).unwrap();
    for (i, block) in proc.blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_block(out, block);
    }
    out.push_str("}\n");
}

fn print_block(out: &mut String, block: &Block) {
    writeln!(out, "  #{}:", block.label).unwrap();
    for instr in &block.instrs {
        writeln!(out, "    {instr}").unwrap();
    }
    if block.successors.is_empty() {
        out.push_str("    jmp\n");
    } else {
        writeln!(out, "    jmp {}", block.successors.join(", ")).unwrap();
    }
    if !block.handlers.is_empty() {
        writeln!(out, "    .handlers {}", block.handlers.join(", ")).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Instr, Operand, QualifiedName, TypeName};

    #[test]
    fn empty_program_prints_empty() {
        assert_eq!(print_program(&Program::default()), "");
    }

    #[test]
    fn minimal_proc_layout() {
        let p = Program {
            procedures: vec![ProcDef {
                name: QualifiedName::new(vec!["M"], "f"),
                params: vec![],
                return_type: TypeName::void(),
                blocks: vec![Block {
                    label: "node_0".into(),
                    instrs: vec![],
                    successors: vec![],
                    handlers: vec![],
                }],
            }],
        };
        assert_eq!(
            print_program(&p),
            "define M.f() : void {\n  #node_0:\n    jmp\n}\n"
        );
    }

    #[test]
    fn block_with_instr_and_handlers() {
        let p = Program {
            procedures: vec![ProcDef {
                name: QualifiedName::new(vec!["M"], "f"),
                params: vec![("x".into(), TypeName::class(1, vec!["A"]))],
                return_type: TypeName::void(),
                blocks: vec![
                    Block {
                        label: "node_0".into(),
                        instrs: vec![Instr::StaticCall {
                            dest: "n0".into(),
                            callee: QualifiedName::new(vec!["A"], "go"),
                            args: vec![Operand::Int(4)],
                        }],
                        successors: vec!["node_1".into()],
                        handlers: vec!["node_1".into()],
                    },
                    Block {
                        label: "node_1".into(),
                        instrs: vec![],
                        successors: vec![],
                        handlers: vec![],
                    },
                ],
            }],
        };
        let text = print_program(&p);
        assert_eq!(
            text,
            "define M.f(x: *A) : void {\n  #node_0:\n    n0 = A.go(4)\n    jmp node_1\n    .handlers node_1\n\n  #node_1:\n    jmp\n}\n"
        );
    }
}
