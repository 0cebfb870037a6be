//! The leak detector.
//!
//! Forward collecting analysis over sets of abstract states. Each state
//! tracks, per allocation site, whether the resource is unopened, open,
//! or closed, which locals and temps currently reference it, and the
//! wrapper relation established when a resource temp is passed to another
//! resource's constructor. Calls fork the state onto the handler edge
//! with the pre-call state, so exceptional paths are tracked exactly:
//! a constructor that throws leaves its site unopened.
//!
//! Close calls and wrapper constructors never throw. Everything else
//! forks. This matches the dynamic oracle in [`crate::interp`].

use super::cfg::Cfg;
use super::liveness::{compute_liveness, Liveness, Name};
use super::{LeakReport, ResourceConfig};
use crate::ir::{Instr, IrPoint, LoadSrc, Operand, ProcDef};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

/// How a call participates in resource tracking and exceptional control
/// flow. Classification depends only on the callee, never on runtime
/// values, so the dynamic oracle consumes schedule bits identically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CallKind {
    /// `close()` by the configured name: closes, never throws.
    Close,
    /// Constructor of a wrapper resource: opens and adopts, never throws.
    WrapperInit,
    /// Constructor of a plain resource: opens on success, may throw.
    ResourceInit,
    /// Anything else: opaque, may throw.
    Plain,
}

pub(crate) fn classify_call(instr: &Instr, config: &ResourceConfig) -> Option<CallKind> {
    let method = match instr {
        Instr::StaticCall { callee, .. } => callee,
        Instr::VirtualCall { method, .. } => method,
        _ => return None,
    };
    if method.name == config.close_method() {
        return Some(CallKind::Close);
    }
    if method.name == "<init>" {
        let class = method.class_path();
        if config.is_wrapper(&class) {
            return Some(CallKind::WrapperInit);
        }
        if config.is_resource(&class) {
            return Some(CallKind::ResourceInit);
        }
    }
    Some(CallKind::Plain)
}

/// True when the call can throw and therefore consumes a schedule bit in
/// the dynamic oracle.
pub(crate) fn call_may_throw(kind: CallKind) -> bool {
    matches!(kind, CallKind::ResourceInit | CallKind::Plain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Status {
    Unopened,
    Open,
    Closed,
}

/// One abstract state: statuses and reference bindings for every site.
/// Bindings map names to site indices; unbound names are absent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct AbsState {
    status: Vec<Status>,
    adopted: Vec<bool>,
    wraps: Vec<Option<usize>>,
    vars: BTreeMap<String, usize>,
    temps: BTreeMap<String, usize>,
}

impl AbsState {
    fn initial(n_sites: usize) -> Self {
        AbsState {
            status: vec![Status::Unopened; n_sites],
            adopted: vec![false; n_sites],
            wraps: vec![None; n_sites],
            vars: BTreeMap::new(),
            temps: BTreeMap::new(),
        }
    }

    fn resolve(&self, op: &Operand) -> Option<usize> {
        match op {
            Operand::Temp(t) => self.temps.get(t).copied(),
            Operand::Var(v) => self.vars.get(v).copied(),
            _ => None,
        }
    }

    fn close_chain(&mut self, site: usize) {
        let mut cur = Some(site);
        let mut guard = 0;
        while let Some(s) = cur {
            self.status[s] = Status::Closed;
            cur = self.wraps[s];
            guard += 1;
            if guard > self.status.len() {
                break;
            }
        }
    }

    fn refs(&self, site: usize) -> BTreeSet<&str> {
        self.vars
            .iter()
            .filter(|(_, s)| **s == site)
            .map(|(v, _)| v.as_str())
            .collect()
    }
}

struct SiteInfo {
    block: usize,
    index: usize,
    class: String,
}

struct Ctx<'a> {
    proc: &'a ProcDef,
    config: &'a ResourceConfig,
    sites: Vec<SiteInfo>,
    site_at: HashMap<(usize, usize), usize>,
}

/// Detect leaks in one procedure. Reports come out in allocation-site
/// program order, one per site. Unreachable blocks are ignored.
pub fn detect_leaks(proc: &ProcDef, cfg: &Cfg, config: &ResourceConfig) -> Vec<LeakReport> {
    let mut sites = Vec::new();
    let mut site_at = HashMap::new();
    for (bi, block) in proc.blocks.iter().enumerate() {
        for (ii, instr) in block.instrs.iter().enumerate() {
            if let Instr::Alloc { class, .. } = instr {
                let base = class.base();
                if config.is_resource(&base) {
                    site_at.insert((bi, ii), sites.len());
                    sites.push(SiteInfo {
                        block: bi,
                        index: ii,
                        class: base,
                    });
                }
            }
        }
    }
    if sites.is_empty() {
        return Vec::new();
    }
    let ctx = Ctx {
        proc,
        config,
        sites,
        site_at,
    };

    let live = compute_liveness(cfg, proc);
    let in_sets = fixpoint(&ctx, cfg);
    let candidates = collect_candidates(&ctx, cfg, &live, &in_sets);

    // Anchor each site's report at the lexically last candidate in
    // reverse-postorder.
    let rpo = cfg.reverse_postorder();
    let rpo_pos: HashMap<usize, usize> = rpo.iter().enumerate().map(|(i, b)| (*b, i)).collect();
    let mut reports = Vec::new();
    for (site_idx, info) in ctx.sites.iter().enumerate() {
        let chosen = candidates
            .iter()
            .filter(|c| c.site == site_idx)
            .max_by_key(|c| (rpo_pos.get(&c.block).copied().unwrap_or(0), c.index));
        if let Some(c) = chosen {
            let last_block = &proc.blocks[c.block];
            reports.push(LeakReport {
                proc: proc.name.to_string(),
                site: IrPoint::new(proc.blocks[info.block].label.clone(), info.index),
                var: c.var.clone(),
                last_use: IrPoint::new(last_block.label.clone(), c.index),
                handler_of_last_use: last_block.handlers.first().cloned(),
            });
        }
    }
    reports
}

fn fixpoint(ctx: &Ctx<'_>, cfg: &Cfg) -> Vec<BTreeSet<AbsState>> {
    let n = ctx.proc.blocks.len();
    let mut in_sets: Vec<BTreeSet<AbsState>> = vec![BTreeSet::new(); n];
    in_sets[cfg.entry()].insert(AbsState::initial(ctx.sites.len()));

    let mut queue: VecDeque<usize> = VecDeque::from([cfg.entry()]);
    let mut queued = vec![false; n];
    queued[cfg.entry()] = true;

    while let Some(bi) = queue.pop_front() {
        queued[bi] = false;
        let block = &ctx.proc.blocks[bi];
        let mut normal_out = BTreeSet::new();
        let mut exc_out = BTreeSet::new();
        for sigma in &in_sets[bi] {
            let mut cur = sigma.clone();
            for (ii, instr) in block.instrs.iter().enumerate() {
                let (next, exc) = transfer(ctx, cur, bi, ii, instr);
                if let Some(e) = exc {
                    exc_out.insert(e);
                }
                cur = next;
            }
            normal_out.insert(cur);
        }
        let push = |target: usize,
                        incoming: &BTreeSet<AbsState>,
                        in_sets: &mut Vec<BTreeSet<AbsState>>,
                        queue: &mut VecDeque<usize>,
                        queued: &mut Vec<bool>| {
            let before = in_sets[target].len();
            in_sets[target].extend(incoming.iter().cloned());
            if in_sets[target].len() != before && !queued[target] {
                queued[target] = true;
                queue.push_back(target);
            }
        };
        for &s in cfg.successors(bi) {
            push(s, &normal_out, &mut in_sets, &mut queue, &mut queued);
        }
        // A throw transfers to the first handler; further handlers in the
        // list never receive control.
        if let Some(&h) = cfg.handlers(bi).first() {
            push(h, &exc_out, &mut in_sets, &mut queue, &mut queued);
        }
    }
    in_sets
}

/// Apply one instruction. Returns the normal out-state and, when the
/// instruction can throw, the state handed to the handler (the pre-call
/// state: a throwing call performs none of its effects, except that a
/// close closes before propagating — but closes never throw here).
fn transfer(
    ctx: &Ctx<'_>,
    mut sigma: AbsState,
    block: usize,
    index: usize,
    instr: &Instr,
) -> (AbsState, Option<AbsState>) {
    match instr {
        Instr::Alloc { dest, .. } => {
            if let Some(&site) = ctx.site_at.get(&(block, index)) {
                // A re-executed allocation (loops) makes a fresh object.
                sigma.status[site] = Status::Unopened;
                sigma.adopted[site] = false;
                sigma.wraps[site] = None;
                sigma.temps.insert(dest.clone(), site);
            } else {
                sigma.temps.remove(dest);
            }
            (sigma, None)
        }
        Instr::Load { dest, src, .. } => {
            let val = match src {
                LoadSrc::Var(v) => sigma.vars.get(v).copied(),
                LoadSrc::Temp(t) => sigma.temps.get(t).copied(),
            };
            match val {
                Some(site) => {
                    sigma.temps.insert(dest.clone(), site);
                }
                None => {
                    sigma.temps.remove(dest);
                }
            }
            (sigma, None)
        }
        Instr::Store { var, src, .. } => {
            match sigma.resolve(src) {
                Some(site) => {
                    sigma.vars.insert(var.clone(), site);
                }
                None => {
                    sigma.vars.remove(var);
                }
            }
            (sigma, None)
        }
        Instr::StaticCall { .. } | Instr::VirtualCall { .. } => {
            let kind = classify_call(instr, ctx.config).expect("calls classify");
            let (dest, first, rest): (&str, Option<Operand>, &[Operand]) = match instr {
                Instr::StaticCall { dest, args, .. } => (
                    dest,
                    args.first().cloned(),
                    args.get(1..).unwrap_or(&[]),
                ),
                Instr::VirtualCall {
                    dest, recv, args, ..
                } => (dest, Some(Operand::Temp(recv.clone())), args.as_slice()),
                _ => unreachable!(),
            };
            match kind {
                CallKind::Close => {
                    if let Some(site) = first.as_ref().and_then(|op| sigma.resolve(op)) {
                        sigma.close_chain(site);
                    }
                    sigma.temps.remove(dest);
                    (sigma, None)
                }
                CallKind::WrapperInit => {
                    if let Some(site) = first.as_ref().and_then(|op| sigma.resolve(op)) {
                        sigma.status[site] = Status::Open;
                        if let Some(inner) = rest.iter().find_map(|op| sigma.resolve(op)) {
                            if inner != site {
                                sigma.wraps[site] = Some(inner);
                                sigma.adopted[inner] = true;
                            }
                        }
                    }
                    sigma.temps.remove(dest);
                    (sigma, None)
                }
                CallKind::ResourceInit => {
                    let exc = sigma.clone();
                    if let Some(site) = first.as_ref().and_then(|op| sigma.resolve(op)) {
                        sigma.status[site] = Status::Open;
                    }
                    sigma.temps.remove(dest);
                    (sigma, Some(exc))
                }
                CallKind::Plain => {
                    let exc = sigma.clone();
                    sigma.temps.remove(dest);
                    (sigma, Some(exc))
                }
            }
        }
    }
}

struct Candidate {
    site: usize,
    block: usize,
    index: usize,
    var: String,
}

fn collect_candidates(
    ctx: &Ctx<'_>,
    cfg: &Cfg,
    live: &Liveness,
    in_sets: &[BTreeSet<AbsState>],
) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut record = |site: usize, block: usize, index: usize, var: String| {
        if seen.insert((site, block, index, var.clone())) {
            out.push(Candidate {
                site,
                block,
                index,
                var,
            });
        }
    };

    for (bi, block) in ctx.proc.blocks.iter().enumerate() {
        let handler = cfg.handlers(bi).first().copied();
        for sigma in &in_sets[bi] {
            let mut cur = sigma.clone();
            for (ii, instr) in block.instrs.iter().enumerate() {
                // Leak at the point right after a use: the site is still
                // open, some local references it, and no referencing local
                // or temp is mentioned again on any path.
                let used = used_sites(&cur, instr);
                let (next, exc) = transfer(ctx, cur.clone(), bi, ii, instr);
                for &site in &used {
                    if next.status[site] != Status::Open || next.adopted[site] {
                        continue;
                    }
                    let Some(var) = cur.refs(site).into_iter().next().map(String::from) else {
                        continue;
                    };
                    let after = live.live_after(bi, ii);
                    if bindings_dead(&next, site, after) {
                        record(site, bi, ii, var);
                    }
                }

                // Leak entering the exceptional continuation: a throw here
                // carries the pre-call state to the handler (or straight to
                // an exceptional exit), where the resource may be open with
                // every reference dead.
                if let Some(exc_state) = exc {
                    for site in 0..ctx.sites.len() {
                        if exc_state.status[site] != Status::Open || exc_state.adopted[site] {
                            continue;
                        }
                        let Some(var) = exc_state.refs(site).into_iter().next().map(String::from)
                        else {
                            continue;
                        };
                        let dead = match handler {
                            Some(h) => bindings_dead(&exc_state, site, live.live_in(h)),
                            // No handler: the throw exits; nothing can
                            // close the resource any more.
                            None => true,
                        };
                        if dead {
                            record(site, bi, ii, var);
                        }
                    }
                }
                cur = next;
            }
        }
    }
    out
}

fn bindings_dead(state: &AbsState, site: usize, live: &BTreeSet<Name>) -> bool {
    let vars_dead = state
        .vars
        .iter()
        .filter(|(_, s)| **s == site)
        .all(|(v, _)| !live.contains(&Name::Var(v.clone())));
    let temps_dead = state
        .temps
        .iter()
        .filter(|(_, s)| **s == site)
        .all(|(t, _)| !live.contains(&Name::Temp(t.clone())));
    vars_dead && temps_dead
}

/// Sites an instruction touches, resolved through the pre-state: temps in
/// use positions and locals mentioned anywhere.
fn used_sites(sigma: &AbsState, instr: &Instr) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut op = |o: &Operand| {
        if let Some(s) = sigma.resolve(o) {
            out.insert(s);
        }
    };
    match instr {
        Instr::Alloc { .. } => {}
        Instr::StaticCall { args, .. } => args.iter().for_each(&mut op),
        Instr::VirtualCall { recv, args, .. } => {
            op(&Operand::Temp(recv.clone()));
            args.iter().for_each(&mut op);
        }
        Instr::Store { var, src, .. } => {
            op(&Operand::Var(var.clone()));
            op(src);
        }
        Instr::Load { src, .. } => match src {
            LoadSrc::Var(v) => op(&Operand::Var(v.clone())),
            LoadSrc::Temp(t) => op(&Operand::Temp(t.clone())),
        },
    }
    out
}
