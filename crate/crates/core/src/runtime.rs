//! Small-step reduction modulo structural equivalence.
//!
//! A [`Configuration`] is the soup view of a process: every cut not guarded
//! by a case, a box, or a serve worker is hoisted to a wire; the remaining
//! cut-free trees are the threads (their head prefixes are the residual
//! context reduction happens under, via the Pre congruence). A reaction
//! fires at a wire when each endpoint has an *interactor* — a prefix, link,
//! case or box acting on that endpoint — reachable from the thread head
//! through prefixes on other channels and parallel branches. Serving a
//! client pool enumerates one redex per absorbed client, which realizes the
//! permutation of clients in pools.

use crate::canon::{self, canonical_digest, occ_names, Digest};
use crate::formula::Formula;
use crate::ground::GroundValue;
use crate::name::Name;
use crate::process::Process;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use thiserror::Error;

/// A hoisted cut: `a : annot`, `b : ~annot`.
#[derive(Clone, Debug)]
pub struct Wire {
    pub a: Name,
    pub b: Name,
    pub annot: Formula,
}

/// Normalized soup: wires plus cut-free threads.
#[derive(Clone, Debug, Default)]
pub struct Configuration {
    pub wires: Vec<Wire>,
    pub threads: Vec<Process>,
}

/// Turn a process into a configuration by hoisting cuts and flattening
/// parallel composition; `Stop` threads are erased.
pub fn to_config(p: &Process) -> Configuration {
    let mut cfg = Configuration::default();
    hoist(p.clone(), &mut cfg);
    cfg
}

fn hoist(p: Process, cfg: &mut Configuration) {
    match p {
        Process::Stop => {}
        Process::Par { left, right } => {
            hoist(*left, cfg);
            hoist(*right, cfg);
        }
        Process::New { x, y, annot, body } => {
            cfg.wires.push(Wire { a: x, b: y, annot });
            hoist(*body, cfg);
        }
        other if other.is_prefix() => {
            let cont = other.prefix_parts().unwrap().continuation.clone();
            let mut inner = Configuration::default();
            hoist(cont, &mut inner);
            cfg.wires.extend(inner.wires);
            cfg.threads.push(other.with_continuation(Process::par_fold(inner.threads)));
        }
        other => cfg.threads.push(other),
    }
}

/// Rebuild the process: cuts wrapped around the parallel threads.
pub fn from_config(c: &Configuration) -> Process {
    let mut p = Process::par_fold(c.threads.clone());
    for w in c.wires.iter().rev() {
        p = Process::new_cut(w.a.clone(), w.b.clone(), w.annot.clone(), p);
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleName {
    WithComm,
    OfCourseComm,
    Link,
    OneBot,
    TensorPar,
    PlusLWith,
    PlusRWith,
    ClaroQueW,
    ClaroQueA,
    OfCourseWhyNotW,
    OfCourseWhyNotD,
    OfCourseWhyNotC,
    GroundComm,
    GroundIf,
}

impl RuleName {
    pub fn name(self) -> &'static str {
        match self {
            RuleName::WithComm => "With-Comm",
            RuleName::OfCourseComm => "OfCourse-Comm",
            RuleName::Link => "Link",
            RuleName::OneBot => "One-Bot",
            RuleName::TensorPar => "Tensor-Par",
            RuleName::PlusLWith => "PlusL-With",
            RuleName::PlusRWith => "PlusR-With",
            RuleName::ClaroQueW => "Claro-QueW",
            RuleName::ClaroQueA => "Claro-QueA",
            RuleName::OfCourseWhyNotW => "OfCourse-WhyNotW",
            RuleName::OfCourseWhyNotD => "OfCourse-WhyNotD",
            RuleName::OfCourseWhyNotC => "OfCourse-WhyNotC",
            RuleName::GroundComm => "Ground-Comm",
            RuleName::GroundIf => "Ground-If",
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum IKind {
    OutName,
    InName,
    OutUnit,
    InUnit,
    Inl,
    Inr,
    CaseAwait,
    CaseComm,
    LinkEnd,
    BangSubj,
    BangCapt,
    QueW,
    QueA,
    ServeSubj,
    WhyW,
    WhyD,
    WhyC,
    SendG,
    RecvG,
}

#[derive(Clone, Debug)]
struct Interactor {
    kind: IKind,
    path: Vec<usize>,
}

#[derive(Clone, Debug)]
enum Loc {
    /// Binary reaction at a wire. `act` is the side named by the rule's
    /// left-hand process (output, selection, pool, client, dereliction…);
    /// `pas` the other. For Link and With-Comm the passive side is the
    /// minimal subtree containing the partner endpoint.
    Wire {
        wire: usize,
        act_thread: usize,
        act_path: Vec<usize>,
        pas_thread: usize,
        pas_path: Vec<usize>,
    },
    /// Ground-If fires on its own.
    Unary { thread: usize, path: Vec<usize> },
}

/// One enabled reaction instance.
#[derive(Clone, Debug)]
pub struct Redex {
    pub rule: RuleName,
    /// Endpoints of the wire this redex consumes (None for Ground-If).
    pub wire: Option<(Name, Name)>,
    /// Which absorbed client is served (Claro-QueA only).
    pub client_choice: Option<usize>,
    loc: Loc,
}

/// All reactions enabled in a configuration.
pub fn redexes(cfg: &Configuration) -> Vec<Redex> {
    let mut out = Vec::new();
    for (wi, w) in cfg.wires.iter().enumerate() {
        let ta = cfg.threads.iter().position(|t| occ_names(t).contains(&w.a));
        let tb = cfg.threads.iter().position(|t| occ_names(t).contains(&w.b));
        let (Some(ta), Some(tb)) = (ta, tb) else { continue };
        let ia = interactors(&cfg.threads[ta], &w.a);
        let ib = interactors(&cfg.threads[tb], &w.b);
        // Unconditional rules: a link or a commuting case fires against
        // anything on the other side.
        for (side_t, side_i, other_t, other_name) in
            [(ta, &ia, tb, &w.b), (tb, &ib, ta, &w.a)]
        {
            for i in side_i {
                let rule = match i.kind {
                    IKind::LinkEnd => RuleName::Link,
                    IKind::CaseComm => RuleName::WithComm,
                    _ => continue,
                };
                if let Some(pas_path) =
                    partner_subtree(cfg, other_t, other_name, side_t, &i.path)
                {
                    out.push(Redex {
                        rule,
                        wire: Some((w.a.clone(), w.b.clone())),
                        client_choice: None,
                        loc: Loc::Wire {
                            wire: wi,
                            act_thread: side_t,
                            act_path: i.path.clone(),
                            pas_thread: other_t,
                            pas_path,
                        },
                    });
                }
            }
        }
        // Paired rules.
        let mut pool_counter = 0usize;
        for a_i in &ia {
            for b_i in &ib {
                let pair = match (a_i.kind, b_i.kind) {
                    (IKind::OutName, IKind::InName) | (IKind::InName, IKind::OutName) => {
                        Some((RuleName::TensorPar, a_i.kind == IKind::OutName))
                    }
                    (IKind::OutUnit, IKind::InUnit) | (IKind::InUnit, IKind::OutUnit) => {
                        Some((RuleName::OneBot, a_i.kind == IKind::OutUnit))
                    }
                    (IKind::Inl, IKind::CaseAwait) | (IKind::CaseAwait, IKind::Inl) => {
                        Some((RuleName::PlusLWith, a_i.kind == IKind::Inl))
                    }
                    (IKind::Inr, IKind::CaseAwait) | (IKind::CaseAwait, IKind::Inr) => {
                        Some((RuleName::PlusRWith, a_i.kind == IKind::Inr))
                    }
                    (IKind::QueW, IKind::ServeSubj) | (IKind::ServeSubj, IKind::QueW) => {
                        Some((RuleName::ClaroQueW, a_i.kind == IKind::QueW))
                    }
                    (IKind::QueA, IKind::ServeSubj) | (IKind::ServeSubj, IKind::QueA) => {
                        Some((RuleName::ClaroQueA, a_i.kind == IKind::QueA))
                    }
                    (IKind::WhyW, IKind::BangSubj) | (IKind::BangSubj, IKind::WhyW) => {
                        Some((RuleName::OfCourseWhyNotW, a_i.kind == IKind::WhyW))
                    }
                    (IKind::WhyD, IKind::BangSubj) | (IKind::BangSubj, IKind::WhyD) => {
                        Some((RuleName::OfCourseWhyNotD, a_i.kind == IKind::WhyD))
                    }
                    (IKind::WhyC, IKind::BangSubj) | (IKind::BangSubj, IKind::WhyC) => {
                        Some((RuleName::OfCourseWhyNotC, a_i.kind == IKind::WhyC))
                    }
                    (IKind::BangCapt, IKind::BangSubj) | (IKind::BangSubj, IKind::BangCapt) => {
                        Some((RuleName::OfCourseComm, a_i.kind == IKind::BangCapt))
                    }
                    (IKind::SendG, IKind::RecvG) | (IKind::RecvG, IKind::SendG) => {
                        Some((RuleName::GroundComm, a_i.kind == IKind::SendG))
                    }
                    _ => None,
                };
                if let Some((rule, a_is_act)) = pair {
                    let (act_thread, act_path, pas_thread, pas_path) = if a_is_act {
                        (ta, a_i.path.clone(), tb, b_i.path.clone())
                    } else {
                        (tb, b_i.path.clone(), ta, a_i.path.clone())
                    };
                    let choice = if rule == RuleName::ClaroQueA {
                        let c = pool_counter;
                        pool_counter += 1;
                        Some(c)
                    } else {
                        None
                    };
                    out.push(Redex {
                        rule,
                        wire: Some((w.a.clone(), w.b.clone())),
                        client_choice: choice,
                        loc: Loc::Wire { wire: wi, act_thread, act_path, pas_thread, pas_path },
                    });
                }
            }
        }
    }
    // Unary ground branches.
    for (ti, t) in cfg.threads.iter().enumerate() {
        let mut paths = Vec::new();
        closed_gifs(t, &mut Vec::new(), &mut paths);
        for p in paths {
            out.push(Redex {
                rule: RuleName::GroundIf,
                wire: None,
                client_choice: None,
                loc: Loc::Unary { thread: ti, path: p },
            });
        }
    }
    out
}

/// Interactors for `target` inside a thread: descend through parallel
/// branches and prefixes whose subject is another channel; stop at guards.
fn interactors(thread: &Process, target: &Name) -> Vec<Interactor> {
    let mut out = Vec::new();
    descend(thread, target, &mut Vec::new(), &mut BTreeSet::new(), &mut out);
    out
}

fn descend(
    p: &Process,
    target: &Name,
    path: &mut Vec<usize>,
    gbound: &mut BTreeSet<Name>,
    out: &mut Vec<Interactor>,
) {
    use Process::*;
    match p {
        Stop => {}
        Link { a, b, .. } => {
            if a == target || b == target {
                out.push(Interactor { kind: IKind::LinkEnd, path: path.clone() });
            }
        }
        Par { left, right } => {
            if occ_names(left).contains(target) {
                path.push(0);
                descend(left, target, path, gbound, out);
                path.pop();
            }
            if occ_names(right).contains(target) {
                path.push(1);
                descend(right, target, path, gbound, out);
                path.pop();
            }
        }
        New { body, .. } => {
            // Configurations hoist cuts, but stay defensive for raw terms.
            if occ_names(body).contains(target) {
                path.push(0);
                descend(body, target, path, gbound, out);
                path.pop();
            }
        }
        CaseOn { x, left, right } => {
            if x == target {
                out.push(Interactor { kind: IKind::CaseAwait, path: path.clone() });
            } else if occ_names(left).contains(target) || occ_names(right).contains(target) {
                out.push(Interactor { kind: IKind::CaseComm, path: path.clone() });
            }
        }
        Bang { x, captured, .. } => {
            if x == target {
                out.push(Interactor { kind: IKind::BangSubj, path: path.clone() });
            } else if captured.contains(target) {
                out.push(Interactor { kind: IKind::BangCapt, path: path.clone() });
            }
        }
        GroundIf { .. } => {
            // No congruence under a value branch; the occurrence is frozen
            // until the branch resolves.
        }
        _ => {
            let parts = p.prefix_parts().unwrap();
            if parts.subject == *target {
                match p {
                    QueAbsorb { .. } => collect_pool(p, target, path, out),
                    Serve { .. } => {
                        // A serve whose worker mentions a value variable
                        // bound above cannot commute past that receive.
                        if let Serve { worker, .. } = p {
                            if worker.free_gvars().iter().any(|v| gbound.contains(v)) {
                                return;
                            }
                        }
                        out.push(Interactor { kind: IKind::ServeSubj, path: path.clone() });
                    }
                    SendGround { expr, .. } => {
                        if expr.vars().iter().all(|v| !gbound.contains(v)) {
                            out.push(Interactor { kind: IKind::SendG, path: path.clone() });
                        }
                    }
                    _ => {
                        let kind = match p {
                            InName { .. } => IKind::InName,
                            OutName { .. } => IKind::OutName,
                            InUnit { .. } => IKind::InUnit,
                            OutUnit { .. } => IKind::OutUnit,
                            Inl { .. } => IKind::Inl,
                            Inr { .. } => IKind::Inr,
                            QueWeaken { .. } => IKind::QueW,
                            WhyW { .. } => IKind::WhyW,
                            WhyD { .. } => IKind::WhyD,
                            WhyC { .. } => IKind::WhyC,
                            RecvGround { .. } => IKind::RecvG,
                            _ => unreachable!(),
                        };
                        out.push(Interactor { kind, path: path.clone() });
                    }
                }
            } else {
                let cont = parts.continuation;
                if occ_names(cont).contains(target) {
                    if let Some(v) = parts.gbound {
                        gbound.insert(v.clone());
                        path.push(0);
                        descend(cont, target, path, gbound, out);
                        path.pop();
                        gbound.remove(&v);
                    } else {
                        path.push(0);
                        descend(cont, target, path, gbound, out);
                        path.pop();
                    }
                }
            }
        }
    }
}

/// Gather the QueAbsorb pool at `path`: every absorbed client that the
/// Que-Que permutation can bring to the front, in syntactic order.
fn collect_pool(p: &Process, target: &Name, path: &mut Vec<usize>, out: &mut Vec<Interactor>) {
    use Process::*;
    match p {
        QueAbsorb { x, body, .. } if x == target => {
            out.push(Interactor { kind: IKind::QueA, path: path.clone() });
            path.push(0);
            collect_pool(body, target, path, out);
            path.pop();
        }
        QueWeaken { x, .. } if x == target => {
            // End of the pool; the weakening only reacts once it is the
            // first remaining prefix on the channel (handled by `descend`).
        }
        Par { left, right } => {
            if occ_names(left).contains(target) {
                path.push(0);
                collect_pool(left, target, path, out);
                path.pop();
            }
            if occ_names(right).contains(target) {
                path.push(1);
                collect_pool(right, target, path, out);
                path.pop();
            }
        }
        other if other.is_prefix() => {
            let parts = other.prefix_parts().unwrap();
            if parts.subject != *target && occ_names(parts.continuation).contains(target) {
                path.push(0);
                collect_pool(parts.continuation, target, path, out);
                path.pop();
            }
        }
        _ => {}
    }
}

/// Minimal subtree of the partner thread containing every occurrence of the
/// wire end; used as the `Q` of the Link and With-Comm axioms. Returns None
/// if the subtree would sit inside the active side's own subtree.
fn partner_subtree(
    cfg: &Configuration,
    thread: usize,
    name: &Name,
    act_thread: usize,
    act_path: &[usize],
) -> Option<Vec<usize>> {
    let mut path = Vec::new();
    let mut cur = &cfg.threads[thread];
    loop {
        // Stop if this node itself mentions the name in head position.
        let head_uses = head_names(cur).contains(name);
        if head_uses {
            break;
        }
        let kids = cur.children();
        let holding: Vec<usize> = kids
            .iter()
            .enumerate()
            .filter(|(_, k)| occ_names(k).contains(name))
            .map(|(i, _)| i)
            .collect();
        // Do not descend into guard positions (case branches, boxes,
        // workers, value branches): the subtree must be extractable as a
        // parallel component.
        let descendable = match cur {
            Process::Par { .. } => true,
            _ => cur.is_prefix(),
        };
        if !descendable || holding.len() != 1 {
            break;
        }
        let i = holding[0];
        if cur.is_prefix() && i != 0 {
            break;
        }
        path.push(i);
        cur = kids[i];
    }
    if thread == act_thread {
        // The passive subtree may not coincide with the active position.
        if path == act_path {
            return None;
        }
    }
    Some(path)
}

/// Names a node's head itself mentions (subjects, link ends, captures).
fn head_names(p: &Process) -> BTreeSet<Name> {
    use Process::*;
    let mut s = BTreeSet::new();
    match p {
        Link { a, b, .. } => {
            s.insert(a.clone());
            s.insert(b.clone());
        }
        CaseOn { x, .. } => {
            s.insert(x.clone());
        }
        Bang { x, captured, .. } => {
            s.insert(x.clone());
            s.extend(captured.iter().cloned());
        }
        _ => {
            if let Some(parts) = p.prefix_parts() {
                s.insert(parts.subject);
            }
        }
    }
    s
}

fn closed_gifs(p: &Process, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    use Process::*;
    match p {
        GroundIf { cond, .. } => {
            if cond.is_closed() {
                out.push(path.clone());
            }
        }
        Par { left, right } => {
            path.push(0);
            closed_gifs(left, path, out);
            path.pop();
            path.push(1);
            closed_gifs(right, path, out);
            path.pop();
        }
        New { body, .. } => {
            path.push(0);
            closed_gifs(body, path, out);
            path.pop();
        }
        CaseOn { .. } | Bang { .. } | Stop | Link { .. } => {}
        _ => {
            if p.is_prefix() {
                path.push(0);
                closed_gifs(p.prefix_parts().unwrap().continuation, path, out);
                path.pop();
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Stepping.

#[derive(Debug, Error)]
pub enum StepError {
    #[error("redex is stale or not enabled: {0}")]
    NotEnabled(String),
}

/// Apply one redex. The result is renormalized (canonicalized and hoisted).
pub fn step(cfg: &Configuration, r: &Redex) -> Result<Configuration, StepError> {
    let term = step_term(cfg, r)?;
    Ok(to_config(&canon::canonicalize(&term)))
}

/// Apply one redex, returning the full process term (canonicalized).
pub fn step_process(cfg: &Configuration, r: &Redex) -> Result<Process, StepError> {
    let term = step_term(cfg, r)?;
    Ok(canon::canonicalize(&term))
}

fn step_term(cfg: &Configuration, r: &Redex) -> Result<Process, StepError> {
    if r.rule == RuleName::ClaroQueA {
        return step_claro_quea(cfg, r);
    }
    match &r.loc {
        Loc::Unary { thread, path } => {
            let t = cfg
                .threads
                .get(*thread)
                .ok_or_else(|| StepError::NotEnabled("thread index".into()))?;
            let new_thread = t.rewrite_at(path, &mut |node| fire_ground_if(node));
            let mut threads = cfg.threads.clone();
            threads[*thread] = new_thread;
            Ok(rebuild(&cfg.wires, threads, None))
        }
        Loc::Wire { wire, act_thread, act_path, pas_thread, pas_path } => {
            let w = cfg
                .wires
                .get(*wire)
                .ok_or_else(|| StepError::NotEnabled("wire index".into()))?;
            let merged = if act_thread == pas_thread {
                merge_same_thread(
                    &cfg.threads[*act_thread],
                    act_path,
                    pas_path,
                    &mut |sa, sb| apply_axiom(r.rule, w, sa, sb),
                )?
            } else {
                let ta = &cfg.threads[*act_thread];
                let tb = &cfg.threads[*pas_thread];
                let sa = ta
                    .node_at(act_path)
                    .ok_or_else(|| StepError::NotEnabled("stale act path".into()))?;
                let sb = tb
                    .node_at(pas_path)
                    .ok_or_else(|| StepError::NotEnabled("stale pas path".into()))?;
                let inner = apply_axiom(r.rule, w, sa, sb)?;
                let wrapped = tb.rewrite_at(pas_path, &mut |_| inner.clone());
                ta.rewrite_at(act_path, &mut |_| wrapped.clone())
            };
            let mut threads = Vec::new();
            for (i, t) in cfg.threads.iter().enumerate() {
                if i == *act_thread {
                    threads.push(merged.clone());
                } else if i == *pas_thread && pas_thread != act_thread {
                    // consumed into the merged thread
                } else {
                    threads.push(t.clone());
                }
            }
            Ok(rebuild(&cfg.wires, threads, Some(*wire)))
        }
    }
}

fn rebuild(wires: &[Wire], threads: Vec<Process>, consumed: Option<usize>) -> Process {
    let mut p = Process::par_fold(threads);
    for (i, w) in wires.iter().enumerate().rev() {
        if Some(i) == consumed {
            continue;
        }
        p = Process::new_cut(w.a.clone(), w.b.clone(), w.annot.clone(), p);
    }
    p
}

/// Same-thread merge: either the paths diverge at a parallel node, or one
/// side's subtree encloses the other (the enclosed side is extracted first,
/// which is valid because the two sides use disjoint names).
fn merge_same_thread(
    t: &Process,
    act_path: &[usize],
    pas_path: &[usize],
    ax: &mut dyn FnMut(&Process, &Process) -> Result<Process, StepError>,
) -> Result<Process, StepError> {
    let common = act_path
        .iter()
        .zip(pas_path.iter())
        .take_while(|(a, b)| a == b)
        .count();
    if common == act_path.len() && common == pas_path.len() {
        return Err(StepError::NotEnabled("interactors coincide".into()));
    }
    if common == pas_path.len() {
        // Passive encloses active: pull the active subtree out.
        let sb = t.node_at(pas_path).unwrap();
        let rel: Vec<usize> = act_path[common..].to_vec();
        let sa = sb.node_at(&rel).unwrap().clone();
        check_extractable(sb, &rel, &sa)?;
        let sb_reduced = sb.rewrite_at(&rel, &mut |_| Process::Stop);
        let inner = ax(&sa, &sb_reduced)?;
        Ok(t.rewrite_at(pas_path, &mut |_| inner.clone()))
    } else if common == act_path.len() {
        // Active encloses passive: pull the passive subtree out.
        let sa = t.node_at(act_path).unwrap();
        let rel: Vec<usize> = pas_path[common..].to_vec();
        let sb = sa.node_at(&rel).unwrap().clone();
        check_extractable(sa, &rel, &sb)?;
        let sa_reduced = sa.rewrite_at(&rel, &mut |_| Process::Stop);
        let inner = ax(&sa_reduced, &sb)?;
        Ok(t.rewrite_at(act_path, &mut |_| inner.clone()))
    } else {
        // Divergent: graft the passive branch into the active hole.
        let sa = t.node_at(act_path).unwrap();
        let sb = t.node_at(pas_path).unwrap();
        let inner = ax(sa, sb)?;
        let act_rel: Vec<usize> = act_path[common + 1..].to_vec();
        let pas_rel: Vec<usize> = pas_path[common + 1..].to_vec();
        let lca_path: Vec<usize> = act_path[..common].to_vec();
        let lca = t.node_at(&lca_path).unwrap();
        let kids = lca.children();
        let bl = kids[act_path[common]].clone();
        let br = kids[pas_path[common]].clone();
        let wrapped = br.rewrite_at(&pas_rel, &mut |_| inner.clone());
        let merged_branch = bl.rewrite_at(&act_rel, &mut |_| wrapped.clone());
        // The merged branch replaces the whole parallel node (the passive
        // branch now lives inside it).
        Ok(t.rewrite_at(&lca_path, &mut |_| merged_branch.clone()))
    }
}

/// Extracting `sub` from under the prefixes between `root` and `rel` is
/// sound only when no binder on the way is free in `sub`.
fn check_extractable(root: &Process, rel: &[usize], sub: &Process) -> Result<(), StepError> {
    let used = occ_names(sub);
    let gused = sub.free_gvars();
    let mut cur = root;
    for &i in rel {
        if let Some(parts) = cur.prefix_parts() {
            if parts.bound.iter().any(|b| used.contains(b)) {
                return Err(StepError::NotEnabled("subtree uses a binder in between".into()));
            }
            if let Some(v) = &parts.gbound {
                if gused.contains(v) {
                    return Err(StepError::NotEnabled("subtree uses a value binder in between".into()));
                }
            }
        }
        if let Process::New { x, y, .. } = cur {
            if used.contains(x) || used.contains(y) {
                return Err(StepError::NotEnabled("subtree uses a cut binder in between".into()));
            }
        }
        cur = cur.children()[i];
    }
    Ok(())
}

fn fire_ground_if(node: &Process) -> Process {
    if let Process::GroundIf { cond, then_branch, else_branch } = node {
        match cond.eval() {
            Some(GroundValue::Bool(true)) => then_branch.as_ref().clone(),
            Some(GroundValue::Bool(false)) => else_branch.as_ref().clone(),
            _ => node.clone(),
        }
    } else {
        node.clone()
    }
}

/// The Fig. 3 axiom bodies. `sa` is the rule's active side, `sb` the
/// passive side; the original cut is re-emitted explicitly where the rule
/// keeps it.
fn apply_axiom(rule: RuleName, w: &Wire, sa: &Process, sb: &Process) -> Result<Process, StepError> {
    use Process::*;
    let stale = |what: &str| StepError::NotEnabled(format!("{} expected at redex ({})", what, rule));
    // Type of the wire as seen from the active side's subject.
    let act_subject_annot = |subject: &Name| -> Formula {
        if *subject == w.a {
            w.annot.clone()
        } else {
            w.annot.dual()
        }
    };
    match rule {
        RuleName::Link => {
            let Link { a, b, .. } = sa else { return Err(stale("link")) };
            let (end, partner) = if *a == w.a || *a == w.b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            let other_end = if end == w.a { w.b.clone() } else { w.a.clone() };
            Ok(sb.rename(&other_end, &partner))
        }
        RuleName::OneBot => {
            let OutUnit { body: pa, .. } = sa else { return Err(stale("unit output")) };
            let InUnit { body: pb, .. } = sb else { return Err(stale("unit input")) };
            Ok(Process::par(pa.as_ref().clone(), pb.as_ref().clone()))
        }
        RuleName::TensorPar => {
            let OutName { x, o: oa, body: pa } = sa else { return Err(stale("output")) };
            let InName { o: ob, body: pb, .. } = sb else { return Err(stale("input")) };
            let t = act_subject_annot(x);
            let (obj_t, cont_t) = match t {
                Formula::Tensor(l, r) => (*l, *r),
                other => (Formula::One, other),
            };
            let inner = Process::new_cut(
                oa.clone(),
                ob.clone(),
                obj_t,
                Process::par(pa.as_ref().clone(), pb.as_ref().clone()),
            );
            Ok(Process::new_cut(
                x.clone(),
                other_name(w, x),
                cont_t,
                inner,
            ))
        }
        RuleName::PlusLWith | RuleName::PlusRWith => {
            let (x, body, pick_left) = match sa {
                Inl { x, body, .. } => (x, body, true),
                Inr { x, body, .. } => (x, body, false),
                _ => return Err(stale("selection")),
            };
            let CaseOn { left, right, .. } = sb else { return Err(stale("case")) };
            let t = act_subject_annot(x);
            let cont_t = match t {
                Formula::Plus(l, r) => {
                    if pick_left {
                        *l
                    } else {
                        *r
                    }
                }
                other => other,
            };
            let branch = if pick_left { left } else { right };
            Ok(Process::new_cut(
                x.clone(),
                other_name(w, x),
                cont_t,
                Process::par(body.as_ref().clone(), branch.as_ref().clone()),
            ))
        }
        RuleName::WithComm => {
            let CaseOn { x, left, right } = sa else { return Err(stale("case")) };
            let mk = |branch: &Process| {
                Process::new_cut(
                    w.a.clone(),
                    w.b.clone(),
                    w.annot.clone(),
                    Process::par(branch.clone(), sb.clone()),
                )
            };
            Ok(CaseOn {
                x: x.clone(),
                left: Box::new(mk(left)),
                right: Box::new(mk(right)),
            })
        }
        RuleName::ClaroQueW => {
            let QueWeaken { body: client, .. } = sa else { return Err(stale("empty pool")) };
            let Serve { i, f, state, init_fin, .. } = sb else { return Err(stale("serve")) };
            Ok(Process::par(
                client.as_ref().clone(),
                Process::new_cut(i.clone(), f.clone(), state.clone(), init_fin.as_ref().clone()),
            ))
        }
        RuleName::ClaroQueA => {
            // Handled by step_claro_quea (needs the whole pool side).
            let _ = (sa, sb);
            Err(stale("claro-quea handled separately"))
        }
        RuleName::OfCourseWhyNotW => {
            let WhyW { body, .. } = sa else { return Err(stale("weakening")) };
            let Bang { captured, boxed, .. } = sb else { return Err(stale("box")) };
            let cap_types = captured_types(captured, boxed);
            let mut out = body.as_ref().clone();
            for (c, t) in cap_types.into_iter().rev() {
                out = WhyW { x: c, annot: t, body: Box::new(out) };
            }
            Ok(out)
        }
        RuleName::OfCourseWhyNotD => {
            let WhyD { x, o, body } = sa else { return Err(stale("dereliction")) };
            let Bang { x: bx, boxed, .. } = sb else { return Err(stale("box")) };
            let t = act_subject_annot(x);
            let inner_t = match t {
                Formula::WhyNot(b) => *b,
                other => other,
            };
            Ok(Process::new_cut(
                o.clone(),
                bx.clone(),
                inner_t,
                Process::par(body.as_ref().clone(), boxed.as_ref().clone()),
            ))
        }
        RuleName::OfCourseWhyNotC => {
            let WhyC { x, o0, o1, body } = sa else { return Err(stale("contraction")) };
            let Bang { x: bx, captured, boxed } = sb else { return Err(stale("box")) };
            let t = act_subject_annot(x);
            let cap_types = captured_types(captured, boxed);
            // Fresh subjects and capture vectors for the two copies.
            let w0 = Name::derived(bx, "0");
            let w1 = Name::derived(bx, "1");
            let mut caps0 = Vec::new();
            let mut caps1 = Vec::new();
            let mut boxed0 = boxed.as_ref().clone().rename(bx, &w0);
            let mut boxed1 = boxed.as_ref().clone().rename(bx, &w1);
            for c in captured {
                let c0 = Name::derived(c, "0");
                let c1 = Name::derived(c, "1");
                boxed0 = boxed0.rename(c, &c0);
                boxed1 = boxed1.rename(c, &c1);
                caps0.push(c0);
                caps1.push(c1);
            }
            let box0 = Bang { x: w0.clone(), captured: caps0.clone(), boxed: Box::new(boxed0) };
            let box1 = Bang { x: w1.clone(), captured: caps1.clone(), boxed: Box::new(boxed1) };
            let mut out = Process::new_cut(
                o0.clone(),
                w0,
                t.clone(),
                Process::new_cut(
                    o1.clone(),
                    w1,
                    t,
                    Process::par(body.as_ref().clone(), Process::par(box0, box1)),
                ),
            );
            // Contract the duplicated captures back together.
            for (k, (c, _)) in cap_types.into_iter().enumerate().rev() {
                out = WhyC {
                    x: c,
                    o0: caps0[k].clone(),
                    o1: caps1[k].clone(),
                    body: Box::new(out),
                };
            }
            Ok(out)
        }
        RuleName::OfCourseComm => {
            let Bang { x: za, captured: ca, boxed: pa } = sa else { return Err(stale("capturing box")) };
            let Bang { .. } = sb else { return Err(stale("box")) };
            let cut_name = if ca.contains(&w.a) { w.a.clone() } else { w.b.clone() };
            let t = if cut_name == w.a { w.annot.clone() } else { w.annot.dual() };
            let mut captured = Vec::new();
            if let Bang { captured: cb, .. } = sb {
                captured.extend(cb.iter().cloned());
            }
            captured.extend(ca.iter().filter(|c| **c != cut_name).cloned());
            Ok(Bang {
                x: za.clone(),
                captured,
                boxed: Box::new(Process::new_cut(
                    cut_name.clone(),
                    other_name(w, &cut_name),
                    t,
                    Process::par(pa.as_ref().clone(), sb.clone()),
                )),
            })
        }
        RuleName::GroundComm => {
            let SendGround { x, expr, body: pa } = sa else { return Err(stale("value send")) };
            let RecvGround { v, body: pb, .. } = sb else { return Err(stale("value receive")) };
            let value = expr
                .eval()
                .ok_or_else(|| StepError::NotEnabled("open ground expression".into()))?;
            let t = act_subject_annot(x);
            let cont_t = match t {
                Formula::GroundOut(_, s) => *s,
                other => other,
            };
            Ok(Process::new_cut(
                x.clone(),
                other_name(w, x),
                cont_t,
                Process::par(pa.as_ref().clone(), pb.subst_gvar(v, &value)),
            ))
        }
        RuleName::GroundIf => Err(stale("unary rule")),
    }
}

fn other_name(w: &Wire, n: &Name) -> Name {
    if *n == w.a {
        w.b.clone()
    } else {
        w.a.clone()
    }
}

/// Types of a box's captured names, recovered from the boxed process.
fn captured_types(captured: &[Name], boxed: &Process) -> Vec<(Name, Formula)> {
    let types = crate::typecheck::synth_with(boxed, crate::typecheck::Options::with_ground())
        .ok()
        .map(|d| d.conclusion.1);
    captured
        .iter()
        .map(|c| {
            let t = types
                .as_ref()
                .and_then(|g| g.lookup(c).cloned())
                .map(|f| match f {
                    Formula::WhyNot(b) => *b,
                    other => other,
                })
                .unwrap_or(Formula::One);
            (c.clone(), t)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Claro-QueA: serving one absorbed client.

fn step_claro_quea(cfg: &Configuration, r: &Redex) -> Result<Process, StepError> {
    let Loc::Wire { wire, act_thread, act_path, pas_thread, pas_path } = &r.loc else {
        return Err(StepError::NotEnabled("claro-quea loc".into()));
    };
    let w = &cfg.wires[*wire];
    let pool_thread = &cfg.threads[*act_thread];
    let serve_thread = &cfg.threads[*pas_thread];
    let Some(Process::QueAbsorb { x: pool_end, o: client_if, .. }) = pool_thread.node_at(act_path)
    else {
        return Err(StepError::NotEnabled("stale pool path".into()));
    };
    let Some(Process::Serve { i, f, state, init_fin, z, zp, yp, worker, .. }) =
        serve_thread.node_at(pas_path)
    else {
        return Err(StepError::NotEnabled("stale serve path".into()));
    };
    // Protocol the absorbed clients follow.
    let client_t = {
        let t = if *pool_end == w.a { w.annot.clone() } else { w.annot.dual() };
        match t {
            Formula::Que(b) => *b,
            other => other,
        }
    };
    // Fresh instance of the worker.
    let z1 = Name::derived(z, "'");
    let zp1 = Name::derived(zp, "'");
    let yp1 = Name::derived(yp, "'");
    let spawned = worker
        .as_ref()
        .clone()
        .rename(z, &z1)
        .rename(zp, &zp1)
        .rename(yp, &yp1);
    // The reinstated serve: its continuation is the old one cut against the
    // spawned worker's state-in; the next init channel is the worker's
    // state-out.
    let new_serve = Process::Serve {
        y: other_name(w, pool_end),
        i: zp1.clone(),
        f: f.clone(),
        state: state.clone(),
        init_fin: Box::new(Process::new_cut(
            i.clone(),
            z1,
            state.clone(),
            Process::par(init_fin.as_ref().clone(), spawned),
        )),
        z: z.clone(),
        zp: zp.clone(),
        yp: yp.clone(),
        worker: worker.clone(),
    };
    let client_if = client_if.clone();
    let splice_pool = &mut |node: &Process| {
        if let Process::QueAbsorb { body, .. } = node {
            body.as_ref().clone()
        } else {
            node.clone()
        }
    };
    let body = if act_thread == pas_thread {
        // Well-typed terms only reach this with the two positions on
        // divergent parallel branches; enclosure would put both cut
        // endpoints in one hyperenvironment component.
        let common = act_path
            .iter()
            .zip(pas_path.iter())
            .take_while(|(a, b)| a == b)
            .count();
        if common == act_path.len() || common == pas_path.len() {
            return Err(StepError::NotEnabled("pool and serve nested".into()));
        }
        pool_thread
            .rewrite_at(act_path, splice_pool)
            .rewrite_at(pas_path, &mut |_| new_serve.clone())
    } else {
        Process::par(
            pool_thread.rewrite_at(act_path, splice_pool),
            serve_thread.rewrite_at(pas_path, &mut |_| new_serve.clone()),
        )
    };
    let inner = Process::new_cut(client_if, yp1, client_t, body);
    let full = Process::new_cut(w.a.clone(), w.b.clone(), w.annot.clone(), inner);
    let mut threads = Vec::new();
    for (idx, t) in cfg.threads.iter().enumerate() {
        if idx == *act_thread {
            threads.push(full.clone());
        } else if idx == *pas_thread && pas_thread != act_thread {
            // consumed
        } else {
            threads.push(t.clone());
        }
    }
    Ok(rebuild(&cfg.wires, threads, Some(*wire)))
}

// ---------------------------------------------------------------------------
// Runs and enumeration.

#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub step: usize,
    pub rule: RuleName,
    pub subjects: Vec<String>,
    pub digest: Digest,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("step budget exceeded after {steps} steps")]
    StepBudgetExceeded { steps: usize, partial: Box<Process>, trace: Vec<TraceEvent> },
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Reduce with a seeded pseudo-random scheduler until canonical.
/// Deterministic for a fixed `(p, seed)`.
pub fn run(p: &Process, seed: u64, max_steps: usize) -> Result<(Process, Vec<TraceEvent>), RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = canon::canonicalize(p);
    let mut trace = Vec::new();
    for stepno in 0..max_steps {
        let cfg = to_config(&current);
        let rs = redexes(&cfg);
        if rs.is_empty() {
            return Ok((current, trace));
        }
        let pick = &rs[rng.gen_range(0..rs.len())];
        let next = dispatch_step(&cfg, pick)?;
        let digest = canonical_digest(&next);
        trace.push(TraceEvent {
            step: stepno,
            rule: pick.rule,
            subjects: subjects_of(pick),
            digest,
        });
        current = next;
    }
    // One more chance: already canonical?
    let cfg = to_config(&current);
    if redexes(&cfg).is_empty() {
        return Ok((current, trace));
    }
    Err(RunError::StepBudgetExceeded { steps: max_steps, partial: Box::new(current), trace })
}

fn subjects_of(r: &Redex) -> Vec<String> {
    let mut out = Vec::new();
    if let Some((a, b)) = &r.wire {
        out.push(a.display().to_string());
        out.push(b.display().to_string());
    }
    if let Some(c) = r.client_choice {
        out.push(format!("client#{}", c));
    }
    out
}

fn dispatch_step(cfg: &Configuration, r: &Redex) -> Result<Process, StepError> {
    if r.rule == RuleName::ClaroQueA {
        Ok(canon::canonicalize(&step_claro_quea(cfg, r)?))
    } else {
        step_process(cfg, r)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Bounds {
    pub max_states: usize,
    pub max_steps: usize,
}

impl Bounds {
    pub fn new(max_states: usize, max_steps: usize) -> Bounds {
        Bounds { max_states, max_steps }
    }
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    /// Reachable canonical forms, sorted by digest.
    pub outcomes: Vec<Process>,
    /// True when a bound was hit and the result may be incomplete.
    pub partial: bool,
    pub states_visited: usize,
    pub edges: usize,
}

/// Exhaustive breadth-first exploration of all schedules.
pub fn enumerate(p: &Process, bounds: &Bounds) -> Result<Enumeration, StepError> {
    explore(p, bounds, &mut |_, _, _| {})
}

/// Exploration driver; the visitor sees every edge (state, redex, next).
pub fn explore(
    p: &Process,
    bounds: &Bounds,
    visit: &mut dyn FnMut(&Process, &Redex, &Process),
) -> Result<Enumeration, StepError> {
    let start = canon::canonicalize(p);
    let mut visited: HashSet<Digest> = HashSet::new();
    let mut queue: VecDeque<(Process, usize)> = VecDeque::new();
    let mut outcomes: Vec<(Digest, Process)> = Vec::new();
    let mut partial = false;
    let mut edges = 0usize;
    visited.insert(canon::digest(&start));
    queue.push_back((start, 0));
    while let Some((state, depth)) = queue.pop_front() {
        let cfg = to_config(&state);
        let rs = redexes(&cfg);
        if rs.is_empty() {
            let d = canon::digest(&state);
            if !outcomes.iter().any(|(od, _)| *od == d) {
                outcomes.push((d, state.clone()));
            }
            continue;
        }
        if depth >= bounds.max_steps {
            partial = true;
            continue;
        }
        for r in &rs {
            let next = dispatch_step(&cfg, r)?;
            edges += 1;
            visit(&state, r, &next);
            let d = canon::digest(&next);
            if visited.contains(&d) {
                continue;
            }
            if visited.len() >= bounds.max_states {
                partial = true;
                continue;
            }
            visited.insert(d);
            queue.push_back((next, depth + 1));
        }
    }
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Enumeration {
        outcomes: outcomes.into_iter().map(|(_, p)| p).collect(),
        partial,
        states_visited: visited.len(),
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use crate::typecheck;

    fn n(s: &str) -> Name {
        Name::fresh(s)
    }

    fn truep(z: &Name) -> Process {
        Process::Inl {
            x: z.clone(),
            other: Formula::One,
            body: Box::new(Process::OutUnit { x: z.clone(), body: Box::new(Process::Stop) }),
        }
    }

    fn falsep(z: &Name) -> Process {
        Process::Inr {
            x: z.clone(),
            other: Formula::One,
            body: Box::new(Process::OutUnit { x: z.clone(), body: Box::new(Process::Stop) }),
        }
    }

    /// if-on-booleans: case z { z().P }{ z().Q }
    fn if0(z: &Name, p: Process, q: Process) -> Process {
        Process::CaseOn {
            x: z.clone(),
            left: Box::new(Process::InUnit { x: z.clone(), body: Box::new(p) }),
            right: Box::new(Process::InUnit { x: z.clone(), body: Box::new(q) }),
        }
    }

    #[test]
    fn config_roundtrip_single_cut() {
        let x = n("x");
        let y = n("y");
        let p = Process::new_cut(
            x.clone(),
            y.clone(),
            Formula::boolean(),
            Process::par(truep(&x), if0(&y, Process::Stop, Process::Stop)),
        );
        let cfg = to_config(&p);
        assert_eq!(cfg.wires.len(), 1);
        assert_eq!(cfg.threads.len(), 2);
        assert!(canon::struct_equiv(&from_config(&cfg), &p));
    }

    #[test]
    fn stop_is_the_empty_configuration() {
        let cfg = to_config(&Process::Stop);
        assert!(cfg.wires.is_empty());
        assert!(cfg.threads.is_empty());
    }

    #[test]
    fn boolean_reduction_picks_branch() {
        // new (x : bool)(y) { TrueP(x) | IfO(y, P, Q) } reduces to P.
        let x = n("x");
        let y = n("y");
        let r = n("r");
        let p_branch = Process::OutUnit { x: r.clone(), body: Box::new(Process::Stop) };
        let q_branch = Process::OutUnit { x: r.clone(), body: Box::new(Process::Stop) };
        let term = Process::new_cut(
            x.clone(),
            y.clone(),
            Formula::boolean(),
            Process::par(truep(&x), if0(&y, p_branch.clone(), q_branch)),
        );
        let (result, trace) = run(&term, 7, 64).unwrap();
        assert!(canon::struct_equiv(&result, &p_branch));
        assert!(!trace.is_empty());
    }

    #[test]
    fn link_reaction_substitutes() {
        // new (x:1)(y) { z <-> x | y().w[].0 }  →  … with z for y.
        let x = n("x");
        let y = n("y");
        let z = n("z");
        let w = n("w");
        let term = Process::new_cut(
            x.clone(),
            y.clone(),
            Formula::One,
            Process::par(
                Process::Link { a: z.clone(), b: x.clone(), annot: Formula::Bot },
                Process::InUnit {
                    x: y.clone(),
                    body: Box::new(Process::OutUnit { x: w.clone(), body: Box::new(Process::Stop) }),
                },
            ),
        );
        let (result, _) = run(&term, 1, 16).unwrap();
        let expect = Process::InUnit {
            x: z,
            body: Box::new(Process::OutUnit { x: w, body: Box::new(Process::Stop) }),
        };
        assert!(canon::struct_equiv(&result, &expect));
    }

    #[test]
    fn one_bot_reaction() {
        let x = n("x");
        let y = n("y");
        let u = n("u");
        let term = Process::new_cut(
            x.clone(),
            y.clone(),
            Formula::One,
            Process::par(
                Process::OutUnit { x: x.clone(), body: Box::new(Process::Stop) },
                Process::InUnit {
                    x: y.clone(),
                    body: Box::new(Process::OutUnit { x: u.clone(), body: Box::new(Process::Stop) }),
                },
            ),
        );
        let (result, _) = run(&term, 3, 16).unwrap();
        let expect = Process::OutUnit { x: u, body: Box::new(Process::Stop) };
        assert!(canon::struct_equiv(&result, &expect));
    }

    #[test]
    fn run_on_canonical_term_is_empty() {
        let (result, trace) = run(&Process::Stop, 5, 8).unwrap();
        assert!(canon::struct_equiv(&result, &Process::Stop));
        assert!(trace.is_empty());
    }

    #[test]
    fn run_is_deterministic_for_a_seed() {
        let x = n("x");
        let y = n("y");
        let term = Process::new_cut(
            x.clone(),
            y.clone(),
            Formula::boolean(),
            Process::par(truep(&x), if0(&y, Process::Stop, Process::Stop)),
        );
        let (r1, t1) = run(&term, 42, 64).unwrap();
        let (r2, t2) = run(&term, 42, 64).unwrap();
        assert!(r1.alpha_eq(&r2));
        let d1: Vec<_> = t1.iter().map(|e| e.digest).collect();
        let d2: Vec<_> = t2.iter().map(|e| e.digest).collect();
        assert_eq!(d1, d2);
    }

    /// A two-client pool against a serve that forwards the final state:
    /// exercises Claro-QueA (both orders), Claro-QueW and the boolean
    /// machinery end to end. The server stores the last vote received.
    fn vote_server_term() -> (Process, Name) {
        let bool_t = Formula::boolean();
        // Client protocol: send a boolean then end: A = bool * 1.
        // Server worker: y' : ~A = ~bool @ bot receives the vote, forwards
        // state; here the worker replaces the state with the client's vote.
        let x = n("x");
        let y = n("y");
        let u = n("u");
        // clients
        let x0 = n("x0");
        let x1 = n("x1");
        let client = |xi: &Name, val: bool| -> Process {
            // xi[v]. (val(v) | xi[].0)
            let v = n("v");
            Process::OutName {
                x: xi.clone(),
                o: v.clone(),
                body: Box::new(Process::par(
                    if val { truep(&v) } else { falsep(&v) },
                    Process::OutUnit { x: xi.clone(), body: Box::new(Process::Stop) },
                )),
            }
        };
        let pool = Process::QueAbsorb {
            x: x.clone(),
            o: x1.clone(),
            body: Box::new(Process::QueAbsorb {
                x: x.clone(),
                o: x0.clone(),
                body: Box::new(Process::QueWeaken {
                    x: x.clone(),
                    annot: Formula::tensor(bool_t.clone(), Formula::One),
                    body: Box::new(Process::par(client(&x0, true), client(&x1, false))),
                }),
            }),
        };
        // server: state bool; init false; finalize links to u.
        let i = n("i");
        let f = n("f");
        let z = n("z");
        let zp = n("zp");
        let yp = n("yp");
        let v = n("v");
        // worker: yp(v). yp(). if0(z){ v <-> zp }{ v <-> zp }
        // Receive the vote over yp, close yp, discard the old state by
        // casing on it, forward the vote as the next state.
        let fwd = || Process::Link { a: v.clone(), b: zp.clone(), annot: bool_t.dual() };
        let worker = Process::InName {
            x: yp.clone(),
            o: v.clone(),
            body: Box::new(Process::InUnit {
                x: yp.clone(),
                body: Box::new(if0(&z, fwd(), fwd())),
            }),
        };
        let serve = Process::Serve {
            y: y.clone(),
            i: i.clone(),
            f: f.clone(),
            state: bool_t.clone(),
            init_fin: Box::new(Process::par(
                falsep(&i),
                Process::Link { a: f.clone(), b: u.clone(), annot: bool_t.dual() },
            )),
            z,
            zp,
            yp,
            worker: Box::new(worker),
        };
        let term = Process::new_cut(
            x,
            y,
            Formula::que(Formula::tensor(bool_t, Formula::One)),
            Process::par(pool, serve),
        );
        (term, u)
    }

    #[test]
    fn pool_emits_one_redex_per_client() {
        let (term, _) = vote_server_term();
        let cfg = to_config(&canon::canonicalize(&term));
        let rs = redexes(&cfg);
        let quea: Vec<_> = rs.iter().filter(|r| r.rule == RuleName::ClaroQueA).collect();
        assert_eq!(quea.len(), 2);
        assert_eq!(quea[0].client_choice, Some(0));
        assert_eq!(quea[1].client_choice, Some(1));
    }

    #[test]
    fn vote_server_enumerates_both_finals() {
        let (term, u) = vote_server_term();
        // Well-typed to begin with.
        typecheck::synth(&term).expect("vote server types");
        let res = enumerate(&term, &Bounds::new(10_000, 200)).unwrap();
        assert!(!res.partial);
        let t = truep(&u);
        let fls = falsep(&u);
        assert_eq!(res.outcomes.len(), 2, "outcomes: {:?}", res.outcomes);
        assert!(res.outcomes.iter().any(|o| canon::struct_equiv(o, &t)));
        assert!(res.outcomes.iter().any(|o| canon::struct_equiv(o, &fls)));
    }

    #[test]
    fn preservation_along_vote_server() {
        let (term, _) = vote_server_term();
        let g = typecheck::synth(&term).unwrap().conclusion.1;
        let declared = typecheck::Hyperenvironment::of_envs(
            g.envs.iter().cloned().chain(g.floating.iter().cloned()).collect(),
        );
        let mut failures = 0;
        explore(&term, &Bounds::new(10_000, 200), &mut |_, _, next| {
            if typecheck::check(next, &declared).is_err() {
                failures += 1;
            }
        })
        .unwrap();
        assert_eq!(failures, 0);
    }
}
