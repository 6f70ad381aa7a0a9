//! CSLL process terms.
//!
//! Binding structure:
//! - `New { x, y, body }` binds `x` and `y` in `body`.
//! - `InName`/`OutName`/`QueAbsorb`/`WhyD` bind their object name in the
//!   continuation; `WhyC` binds both objects.
//! - `Serve` binds `i`,`f` in `init_fin` and `z`,`zp`,`yp` in `worker`.
//! - `RecvGround` binds a ground-value variable in the continuation.
//! - Prefix subjects (and `Bang`'s subject inside its boxed process, and
//!   `Bang`'s captured names) are free occurrences: renaming a free name
//!   rewrites them everywhere.
//!
//! Terms are identified up to alpha-equivalence; every operation in the
//! crate treats alpha-equivalent terms the same way.

use crate::formula::{Formula, GroundKind};
use crate::ground::{GroundExpr, GroundValue};
use crate::name::Name;
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, PartialEq, Eq)]
pub enum Process {
    Stop,
    /// `a <-> b : A` with `a : A` and `b : ~A`.
    Link { a: Name, b: Name, annot: Formula },
    /// `new (x : A)(y) { body }`, a cut with `x : A`, `y : ~A`.
    New { x: Name, y: Name, annot: Formula, body: Box<Process> },
    Par { left: Box<Process>, right: Box<Process> },
    /// `case x { left }{ right }` (receive a choice over `x`).
    CaseOn { x: Name, left: Box<Process>, right: Box<Process> },
    /// `x[inl : B] . body`; annot is the type of the branch not taken.
    Inl { x: Name, other: Formula, body: Box<Process> },
    Inr { x: Name, other: Formula, body: Box<Process> },
    /// `x(o) . body` — receive `o` over `x`.
    InName { x: Name, o: Name, body: Box<Process> },
    /// `x[o] . body` — send fresh `o` over `x`.
    OutName { x: Name, o: Name, body: Box<Process> },
    /// `x() . body` — receive end-of-session (x : bot).
    InUnit { x: Name, body: Box<Process> },
    /// `x[] . body` — send end-of-session (x : 1).
    OutUnit { x: Name, body: Box<Process> },
    /// `pool x[] : A . body` — empty client pool at `x : ??A`.
    QueWeaken { x: Name, annot: Formula, body: Box<Process> },
    /// `pool x[o] . body` — absorb client interface `o` into pool `x`.
    QueAbsorb { x: Name, o: Name, body: Box<Process> },
    /// `serve y (i, f : B) { init_fin } worker (z, zp, yp) { worker }`.
    Serve {
        y: Name,
        i: Name,
        f: Name,
        state: Formula,
        init_fin: Box<Process>,
        z: Name,
        zp: Name,
        yp: Name,
        worker: Box<Process>,
    },
    /// `?x[] : A . body` — weakening.
    WhyW { x: Name, annot: Formula, body: Box<Process> },
    /// `?x[o] . body` — dereliction.
    WhyD { x: Name, o: Name, body: Box<Process> },
    /// `?x[o0, o1] . body` — contraction.
    WhyC { x: Name, o0: Name, o1: Name, body: Box<Process> },
    /// `!x(captured) { boxed }` — promotion; `boxed` is a parameter, not a
    /// continuation.
    Bang { x: Name, captured: Vec<Name>, boxed: Box<Process> },
    /// `x[[e]] . body` — ground extension: send the value of `e` over `x`.
    SendGround { x: Name, expr: GroundExpr, body: Box<Process> },
    /// `x((v : k)) . body` — ground extension: receive a value into `v`.
    RecvGround { x: Name, v: Name, kind: GroundKind, body: Box<Process> },
    /// Ground extension: branch on a closed boolean expression.
    GroundIf { cond: GroundExpr, then_branch: Box<Process>, else_branch: Box<Process> },
}

impl Process {
    pub fn par(l: Process, r: Process) -> Process {
        Process::Par { left: Box::new(l), right: Box::new(r) }
    }

    /// Fold a list of processes with `Par`; empty folds to `Stop`.
    pub fn par_fold(items: Vec<Process>) -> Process {
        let mut it = items.into_iter();
        match it.next() {
            None => Process::Stop,
            Some(first) => it.fold(first, Process::par),
        }
    }

    pub fn new_cut(x: Name, y: Name, annot: Formula, body: Process) -> Process {
        Process::New { x, y, annot, body: Box::new(body) }
    }

    /// True for the prefix-headed constructors (everything written with a
    /// dot: communication prefixes, pool constructors, serve, ground
    /// prefixes). `Bang` and `CaseOn` are not prefixes.
    pub fn is_prefix(&self) -> bool {
        self.prefix_parts().is_some()
    }

    /// Subject and bound names of a prefix head, if this is one.
    /// For `Serve` the continuation is `init_fin` and the bound names are
    /// `i`,`f`; the worker is a parameter.
    pub fn prefix_parts(&self) -> Option<PrefixParts<'_>> {
        use Process::*;
        let (subject, bound, gbound, cont) = match self {
            InName { x, o, body } | OutName { x, o, body } => (x, vec![o.clone()], None, body),
            InUnit { x, body } | OutUnit { x, body } => (x, vec![], None, body),
            Inl { x, body, .. } | Inr { x, body, .. } => (x, vec![], None, body),
            QueWeaken { x, body, .. } => (x, vec![], None, body),
            QueAbsorb { x, o, body } => (x, vec![o.clone()], None, body),
            Serve { y, i, f, init_fin, .. } => (y, vec![i.clone(), f.clone()], None, init_fin),
            WhyW { x, body, .. } => (x, vec![], None, body),
            WhyD { x, o, body } => (x, vec![o.clone()], None, body),
            WhyC { x, o0, o1, body } => (x, vec![o0.clone(), o1.clone()], None, body),
            SendGround { x, body, .. } => (x, vec![], None, body),
            RecvGround { x, v, body, .. } => (x, vec![], Some(v.clone()), body),
            _ => return None,
        };
        Some(PrefixParts { subject: subject.clone(), bound, gbound, continuation: cont })
    }

    /// Rebuild a prefix node around a new continuation.
    pub fn with_continuation(&self, new_cont: Process) -> Process {
        use Process::*;
        let b = Box::new(new_cont);
        match self {
            InName { x, o, .. } => InName { x: x.clone(), o: o.clone(), body: b },
            OutName { x, o, .. } => OutName { x: x.clone(), o: o.clone(), body: b },
            InUnit { x, .. } => InUnit { x: x.clone(), body: b },
            OutUnit { x, .. } => OutUnit { x: x.clone(), body: b },
            Inl { x, other, .. } => Inl { x: x.clone(), other: other.clone(), body: b },
            Inr { x, other, .. } => Inr { x: x.clone(), other: other.clone(), body: b },
            QueWeaken { x, annot, .. } => QueWeaken { x: x.clone(), annot: annot.clone(), body: b },
            QueAbsorb { x, o, .. } => QueAbsorb { x: x.clone(), o: o.clone(), body: b },
            Serve { y, i, f, state, z, zp, yp, worker, .. } => Serve {
                y: y.clone(),
                i: i.clone(),
                f: f.clone(),
                state: state.clone(),
                init_fin: b,
                z: z.clone(),
                zp: zp.clone(),
                yp: yp.clone(),
                worker: worker.clone(),
            },
            WhyW { x, annot, .. } => WhyW { x: x.clone(), annot: annot.clone(), body: b },
            WhyD { x, o, .. } => WhyD { x: x.clone(), o: o.clone(), body: b },
            WhyC { x, o0, o1, .. } => {
                WhyC { x: x.clone(), o0: o0.clone(), o1: o1.clone(), body: b }
            }
            SendGround { x, expr, .. } => {
                SendGround { x: x.clone(), expr: expr.clone(), body: b }
            }
            RecvGround { x, v, kind, .. } => {
                RecvGround { x: x.clone(), v: v.clone(), kind: *kind, body: b }
            }
            _ => panic!("with_continuation on a non-prefix"),
        }
    }

    /// Free channel names, following the appendix definition clause by
    /// clause (notably: `Inl`/`Inr`/`CaseOn` contribute `fn` of the (left)
    /// body only, and `Serve` ignores its worker).
    pub fn free_names(&self) -> BTreeSet<Name> {
        use Process::*;
        match self {
            Stop => BTreeSet::new(),
            Link { a, b, .. } => [a.clone(), b.clone()].into_iter().collect(),
            New { x, y, body, .. } => {
                let mut s = body.free_names();
                s.remove(x);
                s.remove(y);
                s
            }
            Par { left, right } => {
                let mut s = left.free_names();
                s.extend(right.free_names());
                s
            }
            CaseOn { left, .. } => left.free_names(),
            Inl { body, .. } | Inr { body, .. } => body.free_names(),
            InName { o, body, .. } | OutName { o, body, .. } => {
                let mut s = body.free_names();
                s.remove(o);
                s
            }
            InUnit { x, body } | OutUnit { x, body } => {
                let mut s = body.free_names();
                s.insert(x.clone());
                s
            }
            QueWeaken { x, body, .. } => {
                let mut s = body.free_names();
                s.insert(x.clone());
                s
            }
            QueAbsorb { x, o, body } => {
                let mut s = body.free_names();
                s.remove(o);
                s.insert(x.clone());
                s
            }
            Serve { y, i, f, init_fin, .. } => {
                let mut s = init_fin.free_names();
                s.remove(i);
                s.remove(f);
                s.insert(y.clone());
                s
            }
            WhyW { x, body, .. } => {
                let mut s = body.free_names();
                s.insert(x.clone());
                s
            }
            WhyD { x, o, body } => {
                let mut s = body.free_names();
                s.remove(o);
                s.insert(x.clone());
                s
            }
            WhyC { x, o0, o1, body } => {
                let mut s = body.free_names();
                s.remove(o0);
                s.remove(o1);
                s.insert(x.clone());
                s
            }
            Bang { x, captured, .. } => {
                let mut s: BTreeSet<Name> = captured.iter().cloned().collect();
                s.insert(x.clone());
                s
            }
            SendGround { x, body, .. } | RecvGround { x, body, .. } => {
                let mut s = body.free_names();
                s.insert(x.clone());
                s
            }
            GroundIf { then_branch, else_branch, .. } => {
                let mut s = then_branch.free_names();
                s.extend(else_branch.free_names());
                s
            }
        }
    }

    /// Free ground-value variables.
    pub fn free_gvars(&self) -> BTreeSet<Name> {
        use Process::*;
        match self {
            Stop | Link { .. } => BTreeSet::new(),
            New { body, .. } => body.free_gvars(),
            Par { left, right } => {
                let mut s = left.free_gvars();
                s.extend(right.free_gvars());
                s
            }
            CaseOn { left, right, .. } => {
                let mut s = left.free_gvars();
                s.extend(right.free_gvars());
                s
            }
            Inl { body, .. }
            | Inr { body, .. }
            | InName { body, .. }
            | OutName { body, .. }
            | InUnit { body, .. }
            | OutUnit { body, .. }
            | QueWeaken { body, .. }
            | QueAbsorb { body, .. }
            | WhyW { body, .. }
            | WhyD { body, .. }
            | WhyC { body, .. } => body.free_gvars(),
            Serve { init_fin, worker, .. } => {
                let mut s = init_fin.free_gvars();
                s.extend(worker.free_gvars());
                s
            }
            Bang { boxed, .. } => boxed.free_gvars(),
            SendGround { expr, body, .. } => {
                let mut s = expr.vars();
                s.extend(body.free_gvars());
                s
            }
            RecvGround { v, body, .. } => {
                let mut s = body.free_gvars();
                s.remove(v);
                s
            }
            GroundIf { cond, then_branch, else_branch } => {
                let mut s = cond.vars();
                s.extend(then_branch.free_gvars());
                s.extend(else_branch.free_gvars());
                s
            }
        }
    }

    /// Capture-avoiding renaming of the free channel name `from` to `to`.
    /// Prefix subjects and `Bang` subjects/captures are rewritten; bound
    /// occurrences are untouched. A binder equal to `to` is freshened first.
    pub fn rename(&self, from: &Name, to: &Name) -> Process {
        if from == to {
            return self.clone();
        }
        self.rename_inner(from, to)
    }

    fn rename_inner(&self, from: &Name, to: &Name) -> Process {
        use Process::*;
        let r = |n: &Name| if n == from { to.clone() } else { n.clone() };
        // Freshen a binder when it would capture `to`.
        let guard = |p: &Process, binders: &[&Name]| -> Option<Process> {
            if binders.iter().any(|b| *b == from) {
                // `from` is shadowed below; only outer positions rename.
                return Some(p.clone());
            }
            if binders.iter().any(|b| *b == to) {
                let mut q = p.clone();
                for b in binders {
                    if *b == to {
                        let fresh = Name::derived(b, "'");
                        q = q.rename_binder(b, &fresh);
                    }
                }
                Some(q.rename_inner(from, to))
            } else {
                None
            }
        };
        match self {
            Stop => Stop,
            Link { a, b, annot } => Link { a: r(a), b: r(b), annot: annot.clone() },
            New { x, y, annot, body } => {
                if let Some(q) = guard(self, &[x, y]) {
                    return q;
                }
                New { x: x.clone(), y: y.clone(), annot: annot.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            Par { left, right } => Process::par(left.rename_inner(from, to), right.rename_inner(from, to)),
            CaseOn { x, left, right } => CaseOn {
                x: r(x),
                left: Box::new(left.rename_inner(from, to)),
                right: Box::new(right.rename_inner(from, to)),
            },
            Inl { x, other, body } => Inl { x: r(x), other: other.clone(), body: Box::new(body.rename_inner(from, to)) },
            Inr { x, other, body } => Inr { x: r(x), other: other.clone(), body: Box::new(body.rename_inner(from, to)) },
            InName { x, o, body } => {
                if let Some(q) = guard(self, &[o]) {
                    return match q {
                        InName { x, o, body } => InName { x: r(&x), o, body },
                        _ => unreachable!(),
                    };
                }
                InName { x: r(x), o: o.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            OutName { x, o, body } => {
                if let Some(q) = guard(self, &[o]) {
                    return match q {
                        OutName { x, o, body } => OutName { x: r(&x), o, body },
                        _ => unreachable!(),
                    };
                }
                OutName { x: r(x), o: o.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            InUnit { x, body } => InUnit { x: r(x), body: Box::new(body.rename_inner(from, to)) },
            OutUnit { x, body } => OutUnit { x: r(x), body: Box::new(body.rename_inner(from, to)) },
            QueWeaken { x, annot, body } => {
                QueWeaken { x: r(x), annot: annot.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            QueAbsorb { x, o, body } => {
                if let Some(q) = guard(self, &[o]) {
                    return match q {
                        QueAbsorb { x, o, body } => QueAbsorb { x: r(&x), o, body },
                        _ => unreachable!(),
                    };
                }
                QueAbsorb { x: r(x), o: o.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            Serve { y, i, f, state, init_fin, z, zp, yp, worker } => {
                // Continuation binders and worker binders guard separately.
                let init_fin2 = if i == from || f == from {
                    init_fin.as_ref().clone()
                } else if i == to || f == to {
                    let mut q = init_fin.as_ref().clone();
                    let mut i2 = i.clone();
                    let mut f2 = f.clone();
                    if i == to {
                        i2 = Name::derived(i, "'");
                        q = q.rename_binder(i, &i2);
                    }
                    if f == to {
                        f2 = Name::derived(f, "'");
                        q = q.rename_binder(f, &f2);
                    }
                    return Serve {
                        y: y.clone(),
                        i: i2,
                        f: f2,
                        state: state.clone(),
                        init_fin: Box::new(q),
                        z: z.clone(),
                        zp: zp.clone(),
                        yp: yp.clone(),
                        worker: worker.clone(),
                    }
                    .rename_inner(from, to);
                } else {
                    init_fin.rename_inner(from, to)
                };
                let worker2 = if z == from || zp == from || yp == from {
                    worker.as_ref().clone()
                } else {
                    // Worker binders never equal `to` in practice (fresh ids);
                    // fall back to freshening if they do.
                    if z == to || zp == to || yp == to {
                        let mut q = worker.as_ref().clone();
                        let mut z2 = z.clone();
                        let mut zp2 = zp.clone();
                        let mut yp2 = yp.clone();
                        if z == to {
                            z2 = Name::derived(z, "'");
                            q = q.rename_binder(z, &z2);
                        }
                        if zp == to {
                            zp2 = Name::derived(zp, "'");
                            q = q.rename_binder(zp, &zp2);
                        }
                        if yp == to {
                            yp2 = Name::derived(yp, "'");
                            q = q.rename_binder(yp, &yp2);
                        }
                        return Serve {
                            y: r(y),
                            i: i.clone(),
                            f: f.clone(),
                            state: state.clone(),
                            init_fin: Box::new(init_fin2),
                            z: z2,
                            zp: zp2,
                            yp: yp2,
                            worker: Box::new(q.rename_inner(from, to)),
                        };
                    }
                    worker.rename_inner(from, to)
                };
                Serve {
                    y: r(y),
                    i: i.clone(),
                    f: f.clone(),
                    state: state.clone(),
                    init_fin: Box::new(init_fin2),
                    z: z.clone(),
                    zp: zp.clone(),
                    yp: yp.clone(),
                    worker: Box::new(worker2),
                }
            }
            WhyW { x, annot, body } => {
                WhyW { x: r(x), annot: annot.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            WhyD { x, o, body } => {
                if let Some(q) = guard(self, &[o]) {
                    return match q {
                        WhyD { x, o, body } => WhyD { x: r(&x), o, body },
                        _ => unreachable!(),
                    };
                }
                WhyD { x: r(x), o: o.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            WhyC { x, o0, o1, body } => {
                if let Some(q) = guard(self, &[o0, o1]) {
                    return match q {
                        WhyC { x, o0, o1, body } => WhyC { x: r(&x), o0, o1, body },
                        _ => unreachable!(),
                    };
                }
                WhyC { x: r(x), o0: o0.clone(), o1: o1.clone(), body: Box::new(body.rename_inner(from, to)) }
            }
            Bang { x, captured, boxed } => Bang {
                x: r(x),
                captured: captured.iter().map(|c| r(c)).collect(),
                boxed: Box::new(boxed.rename_inner(from, to)),
            },
            SendGround { x, expr, body } => SendGround {
                x: r(x),
                expr: expr.clone(),
                body: Box::new(body.rename_inner(from, to)),
            },
            RecvGround { x, v, kind, body } => RecvGround {
                x: r(x),
                v: v.clone(),
                kind: *kind,
                body: Box::new(body.rename_inner(from, to)),
            },
            GroundIf { cond, then_branch, else_branch } => GroundIf {
                cond: cond.clone(),
                then_branch: Box::new(then_branch.rename_inner(from, to)),
                else_branch: Box::new(else_branch.rename_inner(from, to)),
            },
        }
    }

    /// Rename a bound name throughout its scope (used for alpha-conversion
    /// only; does not guard against capture).
    pub(crate) fn rename_binder(&self, from: &Name, to: &Name) -> Process {
        self.rename_inner(from, to)
    }

    /// Substitute a value for a free ground-expression variable.
    pub fn subst_gvar(&self, var: &Name, value: &GroundValue) -> Process {
        use Process::*;
        let go = |p: &Process| Box::new(p.subst_gvar(var, value));
        match self {
            Stop | Link { .. } => self.clone(),
            New { x, y, annot, body } => New { x: x.clone(), y: y.clone(), annot: annot.clone(), body: go(body) },
            Par { left, right } => Par { left: go(left), right: go(right) },
            CaseOn { x, left, right } => CaseOn { x: x.clone(), left: go(left), right: go(right) },
            Inl { x, other, body } => Inl { x: x.clone(), other: other.clone(), body: go(body) },
            Inr { x, other, body } => Inr { x: x.clone(), other: other.clone(), body: go(body) },
            InName { x, o, body } => InName { x: x.clone(), o: o.clone(), body: go(body) },
            OutName { x, o, body } => OutName { x: x.clone(), o: o.clone(), body: go(body) },
            InUnit { x, body } => InUnit { x: x.clone(), body: go(body) },
            OutUnit { x, body } => OutUnit { x: x.clone(), body: go(body) },
            QueWeaken { x, annot, body } => QueWeaken { x: x.clone(), annot: annot.clone(), body: go(body) },
            QueAbsorb { x, o, body } => QueAbsorb { x: x.clone(), o: o.clone(), body: go(body) },
            Serve { y, i, f, state, init_fin, z, zp, yp, worker } => Serve {
                y: y.clone(),
                i: i.clone(),
                f: f.clone(),
                state: state.clone(),
                init_fin: go(init_fin),
                z: z.clone(),
                zp: zp.clone(),
                yp: yp.clone(),
                worker: go(worker),
            },
            WhyW { x, annot, body } => WhyW { x: x.clone(), annot: annot.clone(), body: go(body) },
            WhyD { x, o, body } => WhyD { x: x.clone(), o: o.clone(), body: go(body) },
            WhyC { x, o0, o1, body } => {
                WhyC { x: x.clone(), o0: o0.clone(), o1: o1.clone(), body: go(body) }
            }
            Bang { x, captured, boxed } => {
                Bang { x: x.clone(), captured: captured.clone(), boxed: go(boxed) }
            }
            SendGround { x, expr, body } => SendGround {
                x: x.clone(),
                expr: expr.subst(var, value),
                body: go(body),
            },
            RecvGround { x, v, kind, body } => {
                if v == var {
                    self.clone()
                } else {
                    RecvGround { x: x.clone(), v: v.clone(), kind: *kind, body: go(body) }
                }
            }
            GroundIf { cond, then_branch, else_branch } => GroundIf {
                cond: cond.subst(var, value),
                then_branch: go(then_branch),
                else_branch: go(else_branch),
            },
        }
    }

    /// Children in a fixed order, for path-based addressing.
    pub fn children(&self) -> Vec<&Process> {
        use Process::*;
        match self {
            Stop | Link { .. } => vec![],
            New { body, .. } => vec![body],
            Par { left, right } => vec![left, right],
            CaseOn { left, right, .. } => vec![left, right],
            GroundIf { then_branch, else_branch, .. } => vec![then_branch, else_branch],
            Serve { init_fin, worker, .. } => vec![init_fin, worker],
            Bang { boxed, .. } => vec![boxed],
            Inl { body, .. }
            | Inr { body, .. }
            | InName { body, .. }
            | OutName { body, .. }
            | InUnit { body, .. }
            | OutUnit { body, .. }
            | QueWeaken { body, .. }
            | QueAbsorb { body, .. }
            | WhyW { body, .. }
            | WhyD { body, .. }
            | WhyC { body, .. }
            | SendGround { body, .. }
            | RecvGround { body, .. } => vec![body],
        }
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&Process> {
        let mut cur = self;
        for &idx in path {
            cur = *cur.children().get(idx)?;
        }
        Some(cur)
    }

    /// Rebuild with the node at `path` replaced by `f(old)`.
    pub fn rewrite_at(&self, path: &[usize], f: &mut dyn FnMut(&Process) -> Process) -> Process {
        if path.is_empty() {
            return f(self);
        }
        let idx = path[0];
        let rest = &path[1..];
        use Process::*;
        match self {
            New { x, y, annot, body } if idx == 0 => New {
                x: x.clone(),
                y: y.clone(),
                annot: annot.clone(),
                body: Box::new(body.rewrite_at(rest, f)),
            },
            Par { left, right } => match idx {
                0 => Par { left: Box::new(left.rewrite_at(rest, f)), right: right.clone() },
                _ => Par { left: left.clone(), right: Box::new(right.rewrite_at(rest, f)) },
            },
            CaseOn { x, left, right } => match idx {
                0 => CaseOn { x: x.clone(), left: Box::new(left.rewrite_at(rest, f)), right: right.clone() },
                _ => CaseOn { x: x.clone(), left: left.clone(), right: Box::new(right.rewrite_at(rest, f)) },
            },
            GroundIf { cond, then_branch, else_branch } => match idx {
                0 => GroundIf {
                    cond: cond.clone(),
                    then_branch: Box::new(then_branch.rewrite_at(rest, f)),
                    else_branch: else_branch.clone(),
                },
                _ => GroundIf {
                    cond: cond.clone(),
                    then_branch: then_branch.clone(),
                    else_branch: Box::new(else_branch.rewrite_at(rest, f)),
                },
            },
            Serve { y, i, f: fin, state, init_fin, z, zp, yp, worker } => match idx {
                0 => Serve {
                    y: y.clone(),
                    i: i.clone(),
                    f: fin.clone(),
                    state: state.clone(),
                    init_fin: Box::new(init_fin.rewrite_at(rest, f)),
                    z: z.clone(),
                    zp: zp.clone(),
                    yp: yp.clone(),
                    worker: worker.clone(),
                },
                _ => Serve {
                    y: y.clone(),
                    i: i.clone(),
                    f: fin.clone(),
                    state: state.clone(),
                    init_fin: init_fin.clone(),
                    z: z.clone(),
                    zp: zp.clone(),
                    yp: yp.clone(),
                    worker: Box::new(worker.rewrite_at(rest, f)),
                },
            },
            Bang { x, captured, boxed } if idx == 0 => Bang {
                x: x.clone(),
                captured: captured.clone(),
                boxed: Box::new(boxed.rewrite_at(rest, f)),
            },
            other if idx == 0 && other.is_prefix() => {
                let cont = other.prefix_parts().unwrap().continuation.clone();
                other.with_continuation(cont.rewrite_at(rest, f))
            }
            _ => panic!("rewrite_at: path does not address a child"),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Alpha-equivalence.
    pub fn alpha_eq(&self, other: &Process) -> bool {
        alpha_eq_in(self, other, &mut HashMap::new(), &mut HashMap::new())
    }
}

pub struct PrefixParts<'a> {
    pub subject: Name,
    pub bound: Vec<Name>,
    /// Ground-value variable bound by a `RecvGround`.
    pub gbound: Option<Name>,
    pub continuation: &'a Process,
}

fn names_eq(a: &Name, b: &Name, l2r: &HashMap<Name, Name>, r2l: &HashMap<Name, Name>) -> bool {
    match (l2r.get(a), r2l.get(b)) {
        (Some(b2), Some(a2)) => b2 == b && a2 == a,
        (None, None) => a == b,
        _ => false,
    }
}

fn bind_pair(
    a: &Name,
    b: &Name,
    l2r: &mut HashMap<Name, Name>,
    r2l: &mut HashMap<Name, Name>,
) -> (Option<Name>, Option<Name>) {
    let old_l = l2r.insert(a.clone(), b.clone()).map(|v| v).map(|v| v);
    let old_r = r2l.insert(b.clone(), a.clone());
    (old_l, old_r)
}

fn unbind_pair(
    a: &Name,
    b: &Name,
    saved: (Option<Name>, Option<Name>),
    l2r: &mut HashMap<Name, Name>,
    r2l: &mut HashMap<Name, Name>,
) {
    match saved.0 {
        Some(v) => {
            l2r.insert(a.clone(), v);
        }
        None => {
            l2r.remove(a);
        }
    }
    match saved.1 {
        Some(v) => {
            r2l.insert(b.clone(), v);
        }
        None => {
            r2l.remove(b);
        }
    }
}

fn alpha_eq_in(
    p: &Process,
    q: &Process,
    l2r: &mut HashMap<Name, Name>,
    r2l: &mut HashMap<Name, Name>,
) -> bool {
    use Process::*;
    let with_binders = |bs: &[(&Name, &Name)],
                        kids: &[(&Process, &Process)],
                        l2r: &mut HashMap<Name, Name>,
                        r2l: &mut HashMap<Name, Name>|
     -> bool {
        let mut saved = Vec::new();
        for (a, b) in bs {
            saved.push(bind_pair(a, b, l2r, r2l));
        }
        let ok = kids.iter().all(|(a, b)| alpha_eq_in(a, b, l2r, r2l));
        for ((a, b), s) in bs.iter().zip(saved).rev() {
            unbind_pair(a, b, s, l2r, r2l);
        }
        ok
    };
    match (p, q) {
        (Stop, Stop) => true,
        (Link { a, b, annot }, Link { a: a2, b: b2, annot: n2 }) => {
            annot == n2 && names_eq(a, a2, l2r, r2l) && names_eq(b, b2, l2r, r2l)
        }
        (New { x, y, annot, body }, New { x: x2, y: y2, annot: n2, body: b2 }) => {
            annot == n2 && with_binders(&[(x, x2), (y, y2)], &[(body, b2)], l2r, r2l)
        }
        (Par { left, right }, Par { left: l2, right: r2 }) => {
            alpha_eq_in(left, l2, l2r, r2l) && alpha_eq_in(right, r2, l2r, r2l)
        }
        (CaseOn { x, left, right }, CaseOn { x: x2, left: l2, right: r2 }) => {
            names_eq(x, x2, l2r, r2l)
                && alpha_eq_in(left, l2, l2r, r2l)
                && alpha_eq_in(right, r2, l2r, r2l)
        }
        (Inl { x, other, body }, Inl { x: x2, other: o2, body: b2 })
        | (Inr { x, other, body }, Inr { x: x2, other: o2, body: b2 }) => {
            other == o2 && names_eq(x, x2, l2r, r2l) && alpha_eq_in(body, b2, l2r, r2l)
        }
        (InName { x, o, body }, InName { x: x2, o: o2, body: b2 })
        | (OutName { x, o, body }, OutName { x: x2, o: o2, body: b2 })
        | (QueAbsorb { x, o, body }, QueAbsorb { x: x2, o: o2, body: b2 })
        | (WhyD { x, o, body }, WhyD { x: x2, o: o2, body: b2 }) => {
            // Same constructor on both sides by the match arm.
            std::mem::discriminant(p) == std::mem::discriminant(q)
                && names_eq(x, x2, l2r, r2l)
                && with_binders(&[(o, o2)], &[(body, b2)], l2r, r2l)
        }
        (InUnit { x, body }, InUnit { x: x2, body: b2 })
        | (OutUnit { x, body }, OutUnit { x: x2, body: b2 }) => {
            std::mem::discriminant(p) == std::mem::discriminant(q)
                && names_eq(x, x2, l2r, r2l)
                && alpha_eq_in(body, b2, l2r, r2l)
        }
        (QueWeaken { x, annot, body }, QueWeaken { x: x2, annot: n2, body: b2 })
        | (WhyW { x, annot, body }, WhyW { x: x2, annot: n2, body: b2 }) => {
            std::mem::discriminant(p) == std::mem::discriminant(q)
                && annot == n2
                && names_eq(x, x2, l2r, r2l)
                && alpha_eq_in(body, b2, l2r, r2l)
        }
        (
            Serve { y, i, f, state, init_fin, z, zp, yp, worker },
            Serve { y: y2, i: i2, f: f2, state: s2, init_fin: p2, z: z2, zp: zp2, yp: yp2, worker: w2 },
        ) => {
            state == s2
                && names_eq(y, y2, l2r, r2l)
                && with_binders(&[(i, i2), (f, f2)], &[(init_fin, p2)], l2r, r2l)
                && with_binders(&[(z, z2), (zp, zp2), (yp, yp2)], &[(worker, w2)], l2r, r2l)
        }
        (WhyC { x, o0, o1, body }, WhyC { x: x2, o0: p0, o1: p1, body: b2 }) => {
            names_eq(x, x2, l2r, r2l)
                && with_binders(&[(o0, p0), (o1, p1)], &[(body, b2)], l2r, r2l)
        }
        (Bang { x, captured, boxed }, Bang { x: x2, captured: c2, boxed: b2 }) => {
            names_eq(x, x2, l2r, r2l)
                && captured.len() == c2.len()
                && captured.iter().zip(c2).all(|(a, b)| names_eq(a, b, l2r, r2l))
                && alpha_eq_in(boxed, b2, l2r, r2l)
        }
        (SendGround { x, expr, body }, SendGround { x: x2, expr: e2, body: b2 }) => {
            names_eq(x, x2, l2r, r2l)
                && gexpr_alpha_eq(expr, e2, l2r, r2l)
                && alpha_eq_in(body, b2, l2r, r2l)
        }
        (RecvGround { x, v, kind, body }, RecvGround { x: x2, v: v2, kind: k2, body: b2 }) => {
            kind == k2
                && names_eq(x, x2, l2r, r2l)
                && with_binders(&[(v, v2)], &[(body, b2)], l2r, r2l)
        }
        (
            GroundIf { cond, then_branch, else_branch },
            GroundIf { cond: c2, then_branch: t2, else_branch: e2 },
        ) => {
            gexpr_alpha_eq(cond, c2, l2r, r2l)
                && alpha_eq_in(then_branch, t2, l2r, r2l)
                && alpha_eq_in(else_branch, e2, l2r, r2l)
        }
        _ => false,
    }
}

fn gexpr_alpha_eq(
    a: &GroundExpr,
    b: &GroundExpr,
    l2r: &HashMap<Name, Name>,
    r2l: &HashMap<Name, Name>,
) -> bool {
    match (a, b) {
        (GroundExpr::Var(x), GroundExpr::Var(y)) => names_eq(x, y, l2r, r2l),
        (GroundExpr::Lit(x), GroundExpr::Lit(y)) => x == y,
        (GroundExpr::App(o1, xs), GroundExpr::App(o2, ys)) => {
            o1 == o2 && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| gexpr_alpha_eq(x, y, l2r, r2l))
        }
        _ => false,
    }
}

impl std::fmt::Debug for Process {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        crate::canon::debug_print(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(a: &Name, b: &Name) -> Process {
        Process::Link { a: a.clone(), b: b.clone(), annot: Formula::One }
    }

    #[test]
    fn fn_of_stop_is_empty() {
        assert!(Process::Stop.free_names().is_empty());
    }

    #[test]
    fn fn_of_link() {
        let x = Name::fresh("x");
        let y = Name::fresh("y");
        let s = link(&x, &y).free_names();
        assert_eq!(s, [x, y].into_iter().collect());
    }

    #[test]
    fn fn_binder_removes_both() {
        let x = Name::fresh("x");
        let y = Name::fresh("y");
        let p = Process::new_cut(x.clone(), y.clone(), Formula::One, link(&x, &y));
        assert!(p.free_names().is_empty());
    }

    #[test]
    fn rename_free_occurrence() {
        let z = Name::fresh("z");
        let y = Name::fresh("y");
        let w = Name::fresh("w");
        let p = link(&z, &y).rename(&y, &w);
        assert_eq!(p.free_names(), [z, w].into_iter().collect());
    }

    #[test]
    fn rename_bound_is_identity() {
        // new (y:1)(a) { z <-> y }: renaming free `y` leaves the term alone
        // because the only y is bound.
        let y = Name::fresh("y");
        let a = Name::fresh("a");
        let z = Name::fresh("z");
        let w = Name::fresh("w");
        let p = Process::new_cut(y.clone(), a, Formula::One, link(&z, &y));
        let q = p.rename(&y, &w);
        assert!(p.alpha_eq(&q));
    }

    #[test]
    fn alpha_eq_of_renamed_cut() {
        let x = Name::fresh("x");
        let y = Name::fresh("y");
        let a = Name::fresh("a");
        let b = Name::fresh("b");
        let p = Process::new_cut(x.clone(), y.clone(), Formula::One, link(&x, &y));
        let q = Process::new_cut(a.clone(), b.clone(), Formula::One, link(&a, &b));
        assert!(p.alpha_eq(&q));
    }

    #[test]
    fn alpha_distinguishes_free_names() {
        let x = Name::fresh("x");
        let y = Name::fresh("y");
        assert!(!link(&x, &y).alpha_eq(&link(&y, &x)));
    }
}
