//! Data model for the block-structured textual IR.
//!
//! A [`Program`] is a list of procedures. Each [`ProcDef`] is a list of
//! labeled [`Block`]s; the first block is the entry. A block carries its
//! instructions, the labels it jumps to on normal completion (an empty
//! list marks an exit block), and the handler labels control is rerouted
//! to when an instruction in the block throws.

mod canon;
mod dist;
mod parse;
mod print;

pub use canon::{renumber_temps, CanonError};
pub use dist::{levenshtein, normalized_edit_distance, tokenize_ir, DistanceError};
pub use parse::{parse_program, ParseError};
pub use print::print_program;

use std::fmt;

/// A `::`-qualified class path plus a trailing member name, e.g.
/// `java::io::File.<init>` or `Main.foo`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualifiedName {
    pub segments: Vec<String>,
    pub name: String,
}

impl QualifiedName {
    pub fn new<S: Into<String>>(segments: Vec<S>, name: impl Into<String>) -> Self {
        QualifiedName {
            segments: segments.into_iter().map(Into::into).collect(),
            name: name.into(),
        }
    }

    /// The class path joined with `::`, without the member name.
    pub fn class_path(&self) -> String {
        self.segments.join("::")
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.segments.join("::"), self.name)
    }
}

/// A type: zero or more pointer stars followed by a `::`-qualified name,
/// or `void` (which never carries stars).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeName {
    pub pointer_depth: usize,
    pub segments: Vec<String>,
}

impl TypeName {
    pub fn void() -> Self {
        TypeName {
            pointer_depth: 0,
            segments: vec!["void".to_string()],
        }
    }

    pub fn class<S: Into<String>>(pointer_depth: usize, segments: Vec<S>) -> Self {
        TypeName {
            pointer_depth,
            segments: segments.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_void(&self) -> bool {
        self.pointer_depth == 0 && self.segments.len() == 1 && self.segments[0] == "void"
    }

    /// The base name without pointer stars, joined with `::`.
    pub fn base(&self) -> String {
        self.segments.join("::")
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.pointer_depth {
            write!(f, "*")?;
        }
        write!(f, "{}", self.segments.join("::"))
    }
}

/// An argument position: a temp, a `&`-prefixed local reference, or a literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    Temp(String),
    Var(String),
    Int(i64),
    Str(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Temp(t) => write!(f, "{t}"),
            Operand::Var(v) => write!(f, "&{v}"),
            Operand::Int(i) => write!(f, "{i}"),
            Operand::Str(s) => write!(f, "\"{}\"", escape_str(s)),
        }
    }
}

/// Source of a `load`: either a local slot (`&v`) or another temp.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoadSrc {
    Var(String),
    Temp(String),
}

impl fmt::Display for LoadSrc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadSrc::Var(v) => write!(f, "&{v}"),
            LoadSrc::Temp(t) => write!(f, "{t}"),
        }
    }
}

/// One IR instruction. Temps are assigned at most once per block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Instr {
    /// `n0 = __sil_allocate(<java::io::File>)`
    Alloc { dest: String, class: TypeName },
    /// `n1 = java::io::File.<init>(n0, "/tmp/bar.txt")`
    StaticCall {
        dest: String,
        callee: QualifiedName,
        args: Vec<Operand>,
    },
    /// `n7 = n5.java::io::FileOutputStream.write(7)`
    VirtualCall {
        dest: String,
        recv: String,
        method: QualifiedName,
        args: Vec<Operand>,
    },
    /// `store &fos <- n2:*java::io::FileOutputStream`
    Store {
        var: String,
        src: Operand,
        ty: TypeName,
    },
    /// `n3:*java::io::File = load &$irvar0`
    Load {
        dest: String,
        ty: TypeName,
        src: LoadSrc,
    },
}

impl Instr {
    /// The temp this instruction defines, if any.
    pub fn dest(&self) -> Option<&str> {
        match self {
            Instr::Alloc { dest, .. }
            | Instr::StaticCall { dest, .. }
            | Instr::VirtualCall { dest, .. }
            | Instr::Load { dest, .. } => Some(dest),
            Instr::Store { .. } => None,
        }
    }

    pub fn is_call(&self) -> bool {
        matches!(self, Instr::StaticCall { .. } | Instr::VirtualCall { .. })
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Operand]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Alloc { dest, class } => write!(f, "{dest} = __sil_allocate(<{class}>)"),
            Instr::StaticCall { dest, callee, args } => {
                write!(f, "{dest} = {callee}(")?;
                write_args(f, args)?;
                write!(f, ")")
            }
            Instr::VirtualCall {
                dest,
                recv,
                method,
                args,
            } => {
                write!(f, "{dest} = {recv}.{method}(")?;
                write_args(f, args)?;
                write!(f, ")")
            }
            Instr::Store { var, src, ty } => write!(f, "store &{var} <- {src}:{ty}"),
            Instr::Load { dest, ty, src } => write!(f, "{dest}:{ty} = load {src}"),
        }
    }
}

/// A labeled block: instructions, then a jump to `successors` (empty =
/// exit), with optional exceptional `handlers`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    pub label: String,
    pub instrs: Vec<Instr>,
    pub successors: Vec<String>,
    pub handlers: Vec<String>,
}

impl Block {
    pub fn is_exit(&self) -> bool {
        self.successors.is_empty()
    }
}

/// A procedure definition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcDef {
    pub name: QualifiedName,
    pub params: Vec<(String, TypeName)>,
    pub return_type: TypeName,
    pub blocks: Vec<Block>,
}

impl ProcDef {
    /// Index of a block by label.
    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn block(&self, label: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.label == label)
    }

    /// The entry block (always first).
    pub fn entry(&self) -> &Block {
        &self.blocks[0]
    }
}

/// A whole IR compilation unit.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Program {
    pub procedures: Vec<ProcDef>,
}

impl Program {
    pub fn find_proc(&self, name: &str) -> Option<&ProcDef> {
        self.procedures.iter().find(|p| p.name.to_string() == name)
    }

    /// Structural well-formedness: unique names and labels, resolvable
    /// jump targets, no handlers on exit blocks, single assignment of
    /// temps within each block.
    pub fn validate(&self) -> Result<(), String> {
        let mut proc_names = std::collections::HashSet::new();
        for proc in &self.procedures {
            let disp = proc.name.to_string();
            if !proc_names.insert(disp.clone()) {
                return Err(format!("duplicate procedure name {disp}"));
            }
            if proc.blocks.is_empty() {
                return Err(format!("procedure {disp} has no blocks"));
            }
            if proc.return_type.is_void() && proc.return_type.pointer_depth != 0 {
                return Err(format!("procedure {disp}: void with pointer depth"));
            }
            let mut labels = std::collections::HashSet::new();
            for b in &proc.blocks {
                if !labels.insert(b.label.as_str()) {
                    return Err(format!("{disp}: duplicate label {}", b.label));
                }
            }
            for b in &proc.blocks {
                if b.is_exit() && !b.handlers.is_empty() {
                    return Err(format!("{disp}: exit block {} has handlers", b.label));
                }
                for l in b.successors.iter().chain(b.handlers.iter()) {
                    if !labels.contains(l.as_str()) {
                        return Err(format!("{disp}: unresolved label {l} in block {}", b.label));
                    }
                }
                let mut defined = std::collections::HashSet::new();
                for ins in &b.instrs {
                    if let Some(d) = ins.dest() {
                        if !defined.insert(d) {
                            return Err(format!(
                                "{disp}: temp {d} assigned twice in block {}",
                                b.label
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A (block label, instruction index) coordinate inside one procedure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IrPoint {
    pub block: String,
    pub index: usize,
}

impl IrPoint {
    pub fn new(block: impl Into<String>, index: usize) -> Self {
        IrPoint {
            block: block.into(),
            index,
        }
    }
}

impl fmt::Display for IrPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.block, self.index)
    }
}

pub(crate) fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            other => out.push(other),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qualified_name_display() {
        let q = QualifiedName::new(vec!["java", "io", "File"], "<init>");
        assert_eq!(q.to_string(), "java::io::File.<init>");
        assert_eq!(q.class_path(), "java::io::File");
    }

    #[test]
    fn type_display() {
        assert_eq!(TypeName::void().to_string(), "void");
        let t = TypeName::class(1, vec!["java", "io", "File"]);
        assert_eq!(t.to_string(), "*java::io::File");
    }

    #[test]
    fn instr_display_forms() {
        let alloc = Instr::Alloc {
            dest: "n0".into(),
            class: TypeName::class(0, vec!["java", "io", "File"]),
        };
        assert_eq!(alloc.to_string(), "n0 = __sil_allocate(<java::io::File>)");

        let call = Instr::StaticCall {
            dest: "n1".into(),
            callee: QualifiedName::new(vec!["java", "io", "File"], "<init>"),
            args: vec![Operand::Temp("n0".into()), Operand::Str("/tmp/bar.txt".into())],
        };
        assert_eq!(
            call.to_string(),
            "n1 = java::io::File.<init>(n0, \"/tmp/bar.txt\")"
        );

        let store = Instr::Store {
            var: "fos".into(),
            src: Operand::Temp("n2".into()),
            ty: TypeName::class(1, vec!["java", "io", "FileOutputStream"]),
        };
        assert_eq!(
            store.to_string(),
            "store &fos <- n2:*java::io::FileOutputStream"
        );
    }

    #[test]
    fn string_operand_escaping() {
        let op = Operand::Str("a\"b\\c".into());
        assert_eq!(op.to_string(), "\"a\\\"b\\\\c\"");
    }

    #[test]
    fn validate_rejects_handler_on_exit() {
        let p = Program {
            procedures: vec![ProcDef {
                name: QualifiedName::new(vec!["M"], "f"),
                params: vec![],
                return_type: TypeName::void(),
                blocks: vec![Block {
                    label: "node_0".into(),
                    instrs: vec![],
                    successors: vec![],
                    handlers: vec!["node_0".into()],
                }],
            }],
        };
        assert!(p.validate().is_err());
    }
}
