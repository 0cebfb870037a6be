//! Control-flow graph with separate normal and exceptional edge sets.

use crate::ir::ProcDef;
use std::collections::HashMap;

/// Per-procedure CFG. Blocks are indexed by their position in the
/// procedure's block list; every block is recorded even if unreachable.
#[derive(Debug, Clone)]
pub struct Cfg {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    entry: usize,
    succs: Vec<Vec<usize>>,
    handlers: Vec<Vec<usize>>,
    normal_preds: Vec<Vec<usize>>,
    exc_preds: Vec<Vec<usize>>,
    exits: Vec<usize>,
}

/// Build the CFG of a well-formed procedure. Normal edges come from
/// successor lists, exceptional edges from handler lists; predecessors are
/// the exact inverse of both.
pub fn build_cfg(proc: &ProcDef) -> Cfg {
    let n = proc.blocks.len();
    let labels: Vec<String> = proc.blocks.iter().map(|b| b.label.clone()).collect();
    let index: HashMap<String, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();

    let mut succs = vec![Vec::new(); n];
    let mut handlers = vec![Vec::new(); n];
    let mut normal_preds = vec![Vec::new(); n];
    let mut exc_preds = vec![Vec::new(); n];
    let mut exits = Vec::new();

    for (bi, block) in proc.blocks.iter().enumerate() {
        for s in &block.successors {
            let si = index[s];
            succs[bi].push(si);
            normal_preds[si].push(bi);
        }
        for h in &block.handlers {
            let hi = index[h];
            handlers[bi].push(hi);
            exc_preds[hi].push(bi);
        }
        if block.successors.is_empty() {
            exits.push(bi);
        }
    }

    Cfg {
        labels,
        index,
        entry: 0,
        succs,
        handlers,
        normal_preds,
        exc_preds,
        exits,
    }
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn entry(&self) -> usize {
        self.entry
    }

    pub fn label(&self, block: usize) -> &str {
        &self.labels[block]
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn successors(&self, block: usize) -> &[usize] {
        &self.succs[block]
    }

    pub fn handlers(&self, block: usize) -> &[usize] {
        &self.handlers[block]
    }

    pub fn normal_preds(&self, block: usize) -> &[usize] {
        &self.normal_preds[block]
    }

    pub fn exceptional_preds(&self, block: usize) -> &[usize] {
        &self.exc_preds[block]
    }

    /// Blocks with an empty successor list, in block order.
    pub fn exits(&self) -> &[usize] {
        &self.exits
    }

    /// Reachability from entry over both edge kinds.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![self.entry];
        seen[self.entry] = true;
        while let Some(b) = stack.pop() {
            for &next in self.succs[b].iter().chain(self.handlers[b].iter()) {
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen
    }

    pub fn unreachable_labels(&self) -> Vec<String> {
        self.reachable()
            .iter()
            .enumerate()
            .filter(|(_, r)| !**r)
            .map(|(i, _)| self.labels[i].clone())
            .collect()
    }

    /// Reverse postorder over both edge kinds, deterministic in list order.
    pub fn reverse_postorder(&self) -> Vec<usize> {
        let mut visited = vec![false; self.len()];
        let mut order = Vec::with_capacity(self.len());
        self.postorder_visit(self.entry, &mut visited, &mut order);
        order.reverse();
        order
    }

    fn postorder_visit(&self, block: usize, visited: &mut [bool], order: &mut Vec<usize>) {
        if visited[block] {
            return;
        }
        visited[block] = true;
        for &next in self.succs[block].iter().chain(self.handlers[block].iter()) {
            self.postorder_visit(next, visited, order);
        }
        order.push(block);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    #[test]
    fn single_exit_block() {
        let p = parse_program("define M.f() : void {\n#node_0:\njmp\n}\n").unwrap();
        let cfg = build_cfg(&p.procedures[0]);
        assert_eq!(cfg.entry(), 0);
        assert_eq!(cfg.exits(), &[0]);
        assert!(cfg.successors(0).is_empty());
        assert!(cfg.handlers(0).is_empty());
    }

    #[test]
    fn preds_invert_edges() {
        let text = "define M.f() : void {\n\
                    #a:\nn0 = M.g()\njmp b\n.handlers h\n\n\
                    #b:\njmp e\n\n\
                    #h:\njmp e\n\n\
                    #e:\njmp\n}\n";
        let p = parse_program(text).unwrap();
        let cfg = build_cfg(&p.procedures[0]);
        let a = cfg.block_index("a").unwrap();
        let b = cfg.block_index("b").unwrap();
        let h = cfg.block_index("h").unwrap();
        let e = cfg.block_index("e").unwrap();
        assert_eq!(cfg.successors(a), &[b]);
        assert_eq!(cfg.handlers(a), &[h]);
        assert_eq!(cfg.normal_preds(b), &[a]);
        assert_eq!(cfg.exceptional_preds(h), &[a]);
        assert_eq!(cfg.normal_preds(e), &[b, h]);
        assert_eq!(cfg.exits(), &[e]);
    }

    #[test]
    fn unreachable_blocks_recorded() {
        let text = "define M.f() : void {\n\
                    #a:\njmp e\n\n\
                    #dead:\njmp e\n\n\
                    #e:\njmp\n}\n";
        let p = parse_program(text).unwrap();
        let cfg = build_cfg(&p.procedures[0]);
        assert_eq!(cfg.len(), 3);
        assert_eq!(cfg.unreachable_labels(), vec!["dead".to_string()]);
    }
}
