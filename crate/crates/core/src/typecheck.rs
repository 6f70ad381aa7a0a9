//! Syntax-directed typing for CSLL over hyperenvironments.
//!
//! Synthesis is deterministic and backtracking-free. The two rules that do
//! not determine where their subject lands (M-False and WhyNotW may attach
//! `x` to any premise environment) produce *floating* singleton groups that
//! commit only when forced: by a colocation (the Par rule), by a merge
//! subject (Cut/Tensor/QueAbsorb), by an exact-environment premise
//! (With/OfCourse/Claro's worker), or by matching a declared judgment in
//! [`check`]. Derivations record still-floating groups as marked
//! environments.

use crate::canon;
use crate::formula::{Formula, GroundKind};
use crate::name::Name;
use crate::process::Process;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// An environment: names paired with formulas, unordered, names distinct.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Environment {
    entries: Vec<(Name, Formula)>,
}

impl Environment {
    pub fn new() -> Environment {
        Environment::default()
    }

    pub fn singleton(n: Name, f: Formula) -> Environment {
        Environment { entries: vec![(n, f)] }
    }

    pub fn from_entries(entries: Vec<(Name, Formula)>) -> Environment {
        Environment { entries }
    }

    pub fn entries(&self) -> &[(Name, Formula)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, n: &Name) -> Option<&Formula> {
        self.entries.iter().find(|(m, _)| m == n).map(|(_, f)| f)
    }

    pub fn contains(&self, n: &Name) -> bool {
        self.get(n).is_some()
    }

    fn insert(&mut self, n: Name, f: Formula) {
        debug_assert!(!self.contains(&n));
        self.entries.push((n, f));
    }

    fn remove(&mut self, n: &Name) -> Option<Formula> {
        let ix = self.entries.iter().position(|(m, _)| m == n)?;
        Some(self.entries.remove(ix).1)
    }

    fn set(&mut self, n: &Name, f: Formula) {
        for (m, g) in &mut self.entries {
            if m == n {
                *g = f;
                return;
            }
        }
        unreachable!("set on absent name");
    }

    /// Set-equality on (name, formula) pairs.
    pub fn same_as(&self, other: &Environment) -> bool {
        self.len() == other.len()
            && self.entries.iter().all(|(n, f)| other.get(n) == Some(f))
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().map(|(n, _)| n)
    }
}

impl fmt::Debug for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (n, fm)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", n, fm)?;
        }
        write!(f, "}}")
    }
}

/// A multiset of environments. `floating` marks trailing groups whose final
/// environment was never forced (they may attach to any single environment
/// when matched against a declared judgment).
#[derive(Clone, Default)]
pub struct Hyperenvironment {
    pub envs: Vec<Environment>,
    pub floating: Vec<Environment>,
}

impl Hyperenvironment {
    pub fn empty() -> Hyperenvironment {
        Hyperenvironment::default()
    }

    pub fn of_envs(envs: Vec<Environment>) -> Hyperenvironment {
        Hyperenvironment { envs, floating: Vec::new() }
    }

    pub fn all_names(&self) -> Vec<Name> {
        self.envs
            .iter()
            .chain(self.floating.iter())
            .flat_map(|e| e.names().cloned())
            .collect()
    }

    pub fn lookup(&self, n: &Name) -> Option<&Formula> {
        self.envs
            .iter()
            .chain(self.floating.iter())
            .find_map(|e| e.get(n))
    }
}

impl fmt::Debug for Hyperenvironment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.envs.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{:?}", e)?;
        }
        for e in &self.floating {
            write!(f, " |~ {:?}", e)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    HMix0,
    HMix2,
    Cut,
    Ax,
    Par,
    Tensor,
    PlusL,
    PlusR,
    With,
    MFalse,
    MTrue,
    WhyNotW,
    WhyNotD,
    WhyNotC,
    OfCourse,
    QueW,
    QueA,
    Claro,
    GroundOut,
    GroundIn,
    GroundIf,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::HMix0 => "HMix0",
            Rule::HMix2 => "HMix2",
            Rule::Cut => "Cut",
            Rule::Ax => "Ax",
            Rule::Par => "Par",
            Rule::Tensor => "Tensor",
            Rule::PlusL => "PlusL",
            Rule::PlusR => "PlusR",
            Rule::With => "With",
            Rule::MFalse => "M-False",
            Rule::MTrue => "M-True",
            Rule::WhyNotW => "WhyNotW",
            Rule::WhyNotD => "WhyNotD",
            Rule::WhyNotC => "WhyNotC",
            Rule::OfCourse => "OfCourse",
            Rule::QueW => "QueW",
            Rule::QueA => "QueA",
            Rule::Claro => "Claro",
            Rule::GroundOut => "Ground-Out",
            Rule::GroundIn => "Ground-In",
            Rule::GroundIf => "Ground-If",
        }
    }
}

/// A typing derivation. Premises mirror the subterm structure.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: (Process, Hyperenvironment),
    pub premises: Vec<Derivation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnknownName,
    DualMismatch,
    PartitionViolation,
    WithNeedsSingleEnv,
    OfCourseNeedsWhyNotContext,
    AnnotationMissing,
    DuplicateName,
}

#[derive(Clone, Debug, Error)]
#[error("{kind:?} at {location:?}: {detail}")]
pub struct TypeError {
    /// Path of child indices from the root term to the offending node.
    pub location: Vec<usize>,
    pub kind: TypeErrorKind,
    pub detail: String,
}

fn err<T>(path: &[usize], kind: TypeErrorKind, detail: String) -> Result<T, TypeError> {
    Err(TypeError { location: path.to_vec(), kind, detail })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub ground: bool,
}

impl Options {
    pub fn with_ground() -> Options {
        Options { ground: true }
    }
}

// ---------------------------------------------------------------------------
// Synthesis state.

#[derive(Clone, Debug)]
struct SynthState {
    solids: Vec<Environment>,
    floats: Vec<Environment>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Loc {
    Solid(usize),
    Float(usize),
}

impl SynthState {
    fn empty() -> SynthState {
        SynthState { solids: Vec::new(), floats: Vec::new() }
    }

    fn find(&self, n: &Name) -> Option<(Loc, Formula)> {
        for (i, e) in self.solids.iter().enumerate() {
            if let Some(f) = e.get(n) {
                return Some((Loc::Solid(i), f.clone()));
            }
        }
        for (i, e) in self.floats.iter().enumerate() {
            if let Some(f) = e.get(n) {
                return Some((Loc::Float(i), f.clone()));
            }
        }
        None
    }

    fn contains(&self, n: &Name) -> bool {
        self.find(n).is_some()
    }

    fn env_mut(&mut self, loc: Loc) -> &mut Environment {
        match loc {
            Loc::Solid(i) => &mut self.solids[i],
            Loc::Float(i) => &mut self.floats[i],
        }
    }

    /// Ensure the group holding `n` is a solid component; returns its index.
    fn solidify(&mut self, n: &Name) -> usize {
        match self.find(n).expect("solidify: unknown name").0 {
            Loc::Solid(i) => i,
            Loc::Float(i) => {
                let e = self.floats.remove(i);
                self.solids.push(e);
                self.solids.len() - 1
            }
        }
    }

    /// Merge two distinct solid components into one; returns its index.
    fn merge_solids(&mut self, a: usize, b: usize) -> usize {
        debug_assert_ne!(a, b);
        let (keep, take) = if a < b { (a, b) } else { (b, a) };
        let taken = self.solids.remove(take);
        for (n, f) in taken.entries {
            self.solids[keep].insert(n, f);
        }
        keep
    }

    /// Force everything into a single environment (for With/OfCourse/worker
    /// premises). Errors if there is more than one solid component.
    fn into_single_env(self, path: &[usize], rule: Rule) -> Result<Environment, TypeError> {
        let mut solids = self.solids;
        if solids.len() > 1 {
            return err(
                path,
                TypeErrorKind::WithNeedsSingleEnv,
                format!(
                    "rule {} requires a single environment, found {} components",
                    rule.name(),
                    solids.len()
                ),
            );
        }
        let mut env = solids.pop().unwrap_or_default();
        for fl in self.floats {
            for (n, f) in fl.entries {
                env.insert(n, f);
            }
        }
        Ok(env)
    }

    fn judgment(&self) -> Hyperenvironment {
        Hyperenvironment { envs: self.solids.clone(), floating: self.floats.clone() }
    }

    fn component_count(&self) -> usize {
        self.solids.len() + self.floats.len()
    }
}

// ---------------------------------------------------------------------------

struct Ctx {
    opts: Options,
    gscope: HashMap<Name, GroundKind>,
}

/// Synthesize the judgment of a process.
pub fn synth(p: &Process) -> Result<Derivation, TypeError> {
    synth_with(p, Options::default())
}

pub fn synth_with(p: &Process, opts: Options) -> Result<Derivation, TypeError> {
    let mut ctx = Ctx { opts, gscope: HashMap::new() };
    let (_, deriv) = synth_in(p, &mut Vec::new(), &mut ctx)?;
    Ok(deriv)
}

/// Check a process against a declared hyperenvironment (environments up to
/// reordering; floating groups may attach to any single environment).
pub fn check(p: &Process, g: &Hyperenvironment) -> Result<Derivation, TypeError> {
    check_with(p, g, Options::default())
}

pub fn check_with(
    p: &Process,
    g: &Hyperenvironment,
    opts: Options,
) -> Result<Derivation, TypeError> {
    let mut ctx = Ctx { opts, gscope: HashMap::new() };
    let (state, deriv) = synth_in(p, &mut Vec::new(), &mut ctx)?;
    match_declared(&state, g)?;
    Ok(deriv)
}

fn match_declared(state: &SynthState, g: &Hyperenvironment) -> Result<(), TypeError> {
    // Where does every declared name live?
    let mut declared_of: HashMap<Name, usize> = HashMap::new();
    for (i, e) in g.envs.iter().enumerate() {
        for (n, _) in e.entries() {
            if declared_of.insert(n.clone(), i).is_some() {
                return err(
                    &[],
                    TypeErrorKind::DuplicateName,
                    format!("name {} declared twice", n),
                );
            }
        }
    }
    let no_path: Vec<usize> = Vec::new();
    // Each synthesized group must land inside exactly one declared env.
    let mut solid_assignment: Vec<Option<usize>> = Vec::new();
    for e in &state.solids {
        let mut target: Option<usize> = None;
        for (n, f) in e.entries() {
            let Some(&d) = declared_of.get(n) else {
                return err(
                    &no_path,
                    TypeErrorKind::UnknownName,
                    format!("synthesized name {} not in declared judgment", n),
                );
            };
            let declared_f = g.envs[d].get(n).unwrap();
            if declared_f != f {
                return err(
                    &no_path,
                    TypeErrorKind::DualMismatch,
                    format!("{} : {} synthesized, declared {}", n, f, declared_f),
                );
            }
            match target {
                None => target = Some(d),
                Some(t) if t == d => {}
                Some(t) => {
                    return err(
                        &no_path,
                        TypeErrorKind::PartitionViolation,
                        format!(
                            "component {:?} spans declared environments {} and {}",
                            e, t, d
                        ),
                    )
                }
            }
        }
        solid_assignment.push(target);
    }
    // Non-empty solids: at most one per declared env.
    let mut used: HashMap<usize, usize> = HashMap::new();
    for (si, a) in solid_assignment.iter().enumerate() {
        if let Some(d) = a {
            if let Some(prev) = used.insert(*d, si) {
                return err(
                    &no_path,
                    TypeErrorKind::PartitionViolation,
                    format!(
                        "components {:?} and {:?} both map into one declared environment",
                        state.solids[prev], state.solids[si]
                    ),
                );
            }
        }
    }
    // Floats: single declared env each; types checked the same way.
    let mut float_names: HashMap<usize, Vec<Name>> = HashMap::new();
    for e in &state.floats {
        let mut target: Option<usize> = None;
        for (n, f) in e.entries() {
            let Some(&d) = declared_of.get(n) else {
                return err(
                    &no_path,
                    TypeErrorKind::UnknownName,
                    format!("synthesized name {} not in declared judgment", n),
                );
            };
            let declared_f = g.envs[d].get(n).unwrap();
            if declared_f != f {
                return err(
                    &no_path,
                    TypeErrorKind::DualMismatch,
                    format!("{} : {} synthesized, declared {}", n, f, declared_f),
                );
            }
            match target {
                None => target = Some(d),
                Some(t) if t == d => {}
                Some(_) => {
                    return err(
                        &no_path,
                        TypeErrorKind::PartitionViolation,
                        format!("floating group {:?} spans two declared environments", e),
                    )
                }
            }
        }
        if let Some(d) = target {
            float_names.entry(d).or_default().extend(e.names().cloned());
        }
    }
    // Coverage: every declared env is exactly its solid plus floats; empty
    // declared envs must be covered by empty synthesized components.
    let empty_solids = solid_assignment.iter().filter(|a| a.is_none()).count();
    let mut empty_declared = 0usize;
    for (d, env) in g.envs.iter().enumerate() {
        if env.is_empty() {
            empty_declared += 1;
            continue;
        }
        let mut covered: Vec<Name> = Vec::new();
        if let Some(&si) = used.get(&d) {
            covered.extend(state.solids[si].names().cloned());
        }
        covered.extend(float_names.get(&d).cloned().unwrap_or_default());
        if covered.len() != env.len() {
            return err(
                &no_path,
                TypeErrorKind::PartitionViolation,
                format!(
                    "declared environment {:?} not exactly covered (got names {:?})",
                    env, covered
                ),
            );
        }
    }
    if empty_solids != empty_declared {
        return err(
            &no_path,
            TypeErrorKind::PartitionViolation,
            format!(
                "{} empty declared environments vs {} empty synthesized components",
                empty_declared, empty_solids
            ),
        );
    }
    Ok(())
}

fn require_ground(ctx: &Ctx, path: &[usize], what: &str) -> Result<(), TypeError> {
    if !ctx.opts.ground {
        return err(
            path,
            TypeErrorKind::AnnotationMissing,
            format!("ground extension disabled; {} not allowed", what),
        );
    }
    Ok(())
}

fn formula_ground_ok(ctx: &Ctx, path: &[usize], f: &Formula) -> Result<(), TypeError> {
    if !ctx.opts.ground && f.uses_ground() {
        return err(
            path,
            TypeErrorKind::AnnotationMissing,
            format!("ground extension disabled; formula {} not allowed", f),
        );
    }
    Ok(())
}

fn synth_in(
    p: &Process,
    path: &mut Vec<usize>,
    ctx: &mut Ctx,
) -> Result<(SynthState, Derivation), TypeError> {
    use Process::*;
    macro_rules! conclude {
        ($rule:expr, $state:expr, $prem:expr) => {{
            let state: SynthState = $state;
            let deriv = Derivation {
                rule: $rule,
                conclusion: (p.clone(), state.judgment()),
                premises: $prem,
            };
            Ok((state, deriv))
        }};
    }
    let child = |path: &mut Vec<usize>, i: usize, q: &Process, ctx: &mut Ctx| {
        path.push(i);
        let r = synth_in(q, path, ctx);
        path.pop();
        r
    };
    match p {
        Stop => conclude!(Rule::HMix0, SynthState::empty(), vec![]),
        Link { a, b, annot } => {
            formula_ground_ok(ctx, path, annot)?;
            if a == b {
                return err(path, TypeErrorKind::DuplicateName, format!("link {} with itself (rule Ax)", a));
            }
            let mut e = Environment::new();
            e.insert(a.clone(), annot.clone());
            e.insert(b.clone(), annot.dual());
            conclude!(Rule::Ax, SynthState { solids: vec![e], floats: vec![] }, vec![])
        }
        Par { left, right } => {
            let (sl, dl) = child(path, 0, left, ctx)?;
            let (sr, dr) = child(path, 1, right, ctx)?;
            for n in sr
                .solids
                .iter()
                .chain(sr.floats.iter())
                .flat_map(|e| e.names())
            {
                if sl.contains(n) {
                    return err(
                        path,
                        TypeErrorKind::DuplicateName,
                        format!("name {} used in both parallel components (rule HMix2)", n),
                    );
                }
            }
            let mut solids = sl.solids;
            solids.extend(sr.solids);
            let mut floats = sl.floats;
            floats.extend(sr.floats);
            conclude!(Rule::HMix2, SynthState { solids, floats }, vec![dl, dr])
        }
        New { x, y, annot, body } => {
            formula_ground_ok(ctx, path, annot)?;
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((_, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("cut name {} unused (rule Cut)", x));
            };
            let Some((_, fy)) = s.find(y) else {
                return err(path, TypeErrorKind::UnknownName, format!("cut name {} unused (rule Cut)", y));
            };
            if fx != *annot {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("cut annotation {} but {} : {} (rule Cut)", annot, x, fx),
                );
            }
            if fy != annot.dual() {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("cut endpoints not dual: {} : {}, {} : {} (rule Cut)", x, fx, y, fy),
                );
            }
            let ix = s.solidify(x);
            let iy = s.solidify(y);
            if ix == iy {
                return err(
                    path,
                    TypeErrorKind::PartitionViolation,
                    format!("cut endpoints {} and {} in one component (rule Cut)", x, y),
                );
            }
            let k = s.merge_solids(ix, iy);
            s.solids[k].remove(x);
            s.solids[k].remove(y);
            conclude!(Rule::Cut, s, vec![d])
        }
        InName { x, o, body } => {
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((lo, fo)) = s.find(o) else {
                return err(path, TypeErrorKind::UnknownName, format!("object {} unused (rule Par)", o));
            };
            let Some((lx, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused (rule Par)", x));
            };
            colocate(&mut s, path, Rule::Par, lo, lx)?;
            // Re-find after the structural change.
            let (loc, _) = s.find(x).unwrap();
            s.env_mut(loc).remove(o);
            s.env_mut(loc).set(x, Formula::par(fo, fx));
            conclude!(Rule::Par, s, vec![d])
        }
        OutName { x, o, body } => {
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((_, fo)) = s.find(o) else {
                return err(path, TypeErrorKind::UnknownName, format!("object {} unused (rule Tensor)", o));
            };
            let Some((_, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused (rule Tensor)", x));
            };
            let io = s.solidify(o);
            let ix = s.solidify(x);
            if io == ix {
                return err(
                    path,
                    TypeErrorKind::PartitionViolation,
                    format!("{} and {} must be in distinct components (rule Tensor)", o, x),
                );
            }
            let k = s.merge_solids(io, ix);
            s.solids[k].remove(o);
            s.solids[k].set(x, Formula::tensor(fo, fx));
            conclude!(Rule::Tensor, s, vec![d])
        }
        InUnit { x, body } => {
            let (mut s, d) = child(path, 0, body, ctx)?;
            if s.contains(x) {
                return err(path, TypeErrorKind::DuplicateName, format!("{} already used (rule M-False)", x));
            }
            if s.component_count() == 0 {
                return err(
                    path,
                    TypeErrorKind::PartitionViolation,
                    format!("no premise environment to host {} (rule M-False)", x),
                );
            }
            s.floats.push(Environment::singleton(x.clone(), Formula::Bot));
            conclude!(Rule::MFalse, s, vec![d])
        }
        OutUnit { x, body } => {
            let (mut s, d) = child(path, 0, body, ctx)?;
            if s.contains(x) {
                return err(path, TypeErrorKind::DuplicateName, format!("{} already used (rule M-True)", x));
            }
            s.solids.push(Environment::singleton(x.clone(), Formula::One));
            conclude!(Rule::MTrue, s, vec![d])
        }
        Inl { x, other, body } => {
            formula_ground_ok(ctx, path, other)?;
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((loc, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused (rule PlusL)", x));
            };
            s.env_mut(loc).set(x, Formula::plus(fx, other.clone()));
            conclude!(Rule::PlusL, s, vec![d])
        }
        Inr { x, other, body } => {
            formula_ground_ok(ctx, path, other)?;
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((loc, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused (rule PlusR)", x));
            };
            s.env_mut(loc).set(x, Formula::plus(other.clone(), fx));
            conclude!(Rule::PlusR, s, vec![d])
        }
        CaseOn { x, left, right } => {
            let (sl, dl) = child(path, 0, left, ctx)?;
            let (sr, dr) = child(path, 1, right, ctx)?;
            let el = sl.into_single_env(path, Rule::With)?;
            let er = sr.into_single_env(path, Rule::With)?;
            let Some(fa) = el.get(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused in left branch (rule With)", x));
            };
            let Some(fb) = er.get(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused in right branch (rule With)", x));
            };
            let fa = fa.clone();
            let fb = fb.clone();
            let mut gl = el.clone();
            gl.remove(x);
            let mut gr = er.clone();
            gr.remove(x);
            if !gl.same_as(&gr) {
                return err(
                    path,
                    TypeErrorKind::WithNeedsSingleEnv,
                    format!("branch environments differ: {:?} vs {:?} (rule With)", gl, gr),
                );
            }
            let mut env = gl;
            env.insert(x.clone(), Formula::with(fa, fb));
            conclude!(Rule::With, SynthState { solids: vec![env], floats: vec![] }, vec![dl, dr])
        }
        QueWeaken { x, annot, body } => {
            formula_ground_ok(ctx, path, annot)?;
            let (mut s, d) = child(path, 0, body, ctx)?;
            if s.contains(x) {
                return err(path, TypeErrorKind::DuplicateName, format!("{} already used (rule QueW)", x));
            }
            s.solids.push(Environment::singleton(x.clone(), Formula::que(annot.clone())));
            conclude!(Rule::QueW, s, vec![d])
        }
        QueAbsorb { x, o, body } => {
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((_, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("pool subject {} unused (rule QueA)", x));
            };
            let Formula::Que(a) = fx.clone() else {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("pool subject {} : {} is not a ?? type (rule QueA)", x, fx),
                );
            };
            let Some((_, fo)) = s.find(o) else {
                return err(path, TypeErrorKind::UnknownName, format!("absorbed client {} unused (rule QueA)", o));
            };
            if fo != *a {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("client {} : {} but pool carries ??{} (rule QueA)", o, fo, a),
                );
            }
            let ix = s.solidify(x);
            let io = s.solidify(o);
            if ix == io {
                return err(
                    path,
                    TypeErrorKind::PartitionViolation,
                    format!("{} and {} must be in distinct components (rule QueA)", x, o),
                );
            }
            let k = s.merge_solids(ix, io);
            s.solids[k].remove(o);
            conclude!(Rule::QueA, s, vec![d])
        }
        Serve { y, i, f, state, init_fin, z, zp, yp, worker } => {
            formula_ground_ok(ctx, path, state)?;
            let (mut s, d_init) = child(path, 0, init_fin, ctx)?;
            let Some((_, fi)) = s.find(i) else {
                return err(path, TypeErrorKind::UnknownName, format!("init channel {} unused (rule Claro)", i));
            };
            if fi != *state {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("init channel {} : {}, state annotation {} (rule Claro)", i, fi, state),
                );
            }
            let Some((_, ff)) = s.find(f) else {
                return err(path, TypeErrorKind::UnknownName, format!("finalize channel {} unused (rule Claro)", f));
            };
            if ff != state.dual() {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("finalize channel {} : {}, expected {} (rule Claro)", f, ff, state.dual()),
                );
            }
            let ii = s.solidify(i);
            let fi_ix = s.solidify(f);
            if ii == fi_ix {
                return err(
                    path,
                    TypeErrorKind::PartitionViolation,
                    format!("init {} and finalize {} share a component (rule Claro)", i, f),
                );
            }
            // Worker: exactly z : ~B, zp : B, yp : A.
            let (sw, d_work) = child(path, 1, worker, ctx)?;
            let ew = sw.into_single_env(path, Rule::Claro)?;
            if ew.len() != 3 {
                return err(
                    path,
                    TypeErrorKind::PartitionViolation,
                    format!("worker must use exactly z, z', y'; env is {:?} (rule Claro)", ew),
                );
            }
            let Some(fz) = ew.get(z) else {
                return err(path, TypeErrorKind::UnknownName, format!("worker state-in {} unused (rule Claro)", z));
            };
            if *fz != state.dual() {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("worker {} : {}, expected {} (rule Claro)", z, fz, state.dual()),
                );
            }
            let Some(fzp) = ew.get(zp) else {
                return err(path, TypeErrorKind::UnknownName, format!("worker state-out {} unused (rule Claro)", zp));
            };
            if *fzp != *state {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("worker {} : {}, expected {} (rule Claro)", zp, fzp, state),
                );
            }
            let Some(fyp) = ew.get(yp) else {
                return err(path, TypeErrorKind::UnknownName, format!("worker client channel {} unused (rule Claro)", yp));
            };
            let served = fyp.clone();
            if s.contains(y) {
                return err(path, TypeErrorKind::DuplicateName, format!("{} already used (rule Claro)", y));
            }
            let k = s.merge_solids(ii, fi_ix);
            s.solids[k].remove(i);
            s.solids[k].remove(f);
            s.solids[k].insert(y.clone(), Formula::exc(served));
            conclude!(Rule::Claro, s, vec![d_init, d_work])
        }
        WhyW { x, annot, body } => {
            formula_ground_ok(ctx, path, annot)?;
            let (mut s, d) = child(path, 0, body, ctx)?;
            if s.contains(x) {
                return err(path, TypeErrorKind::DuplicateName, format!("{} already used (rule WhyNotW)", x));
            }
            if s.component_count() == 0 {
                return err(
                    path,
                    TypeErrorKind::PartitionViolation,
                    format!("no premise environment to host {} (rule WhyNotW)", x),
                );
            }
            s.floats.push(Environment::singleton(x.clone(), Formula::why_not(annot.clone())));
            conclude!(Rule::WhyNotW, s, vec![d])
        }
        WhyD { x, o, body } => {
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((loc, fo)) = s.find(o) else {
                return err(path, TypeErrorKind::UnknownName, format!("object {} unused (rule WhyNotD)", o));
            };
            if s.contains(x) {
                return err(path, TypeErrorKind::DuplicateName, format!("{} already used (rule WhyNotD)", x));
            }
            s.env_mut(loc).remove(o);
            s.env_mut(loc).insert(x.clone(), Formula::why_not(fo));
            conclude!(Rule::WhyNotD, s, vec![d])
        }
        WhyC { x, o0, o1, body } => {
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((l0, f0)) = s.find(o0) else {
                return err(path, TypeErrorKind::UnknownName, format!("object {} unused (rule WhyNotC)", o0));
            };
            let Some((l1, f1)) = s.find(o1) else {
                return err(path, TypeErrorKind::UnknownName, format!("object {} unused (rule WhyNotC)", o1));
            };
            if !matches!(f0, Formula::WhyNot(_)) || f0 != f1 {
                return err(
                    path,
                    TypeErrorKind::DualMismatch,
                    format!("contraction needs {} and {} at one ?-type; got {} and {} (rule WhyNotC)", o0, o1, f0, f1),
                );
            }
            if s.contains(x) {
                return err(path, TypeErrorKind::DuplicateName, format!("{} already used (rule WhyNotC)", x));
            }
            colocate(&mut s, path, Rule::WhyNotC, l0, l1)?;
            let (loc, _) = s.find(o0).unwrap();
            s.env_mut(loc).remove(o0);
            s.env_mut(loc).remove(o1);
            s.env_mut(loc).insert(x.clone(), f0);
            conclude!(Rule::WhyNotC, s, vec![d])
        }
        Bang { x, captured, boxed } => {
            let (sb, db) = child(path, 0, boxed, ctx)?;
            let env = sb.into_single_env(path, Rule::OfCourse)?;
            let Some(fx) = env.get(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("box subject {} unused (rule OfCourse)", x));
            };
            let fx = fx.clone();
            let mut out = Environment::new();
            for (n, f) in env.entries() {
                if n == x {
                    continue;
                }
                if !captured.contains(n) {
                    return err(
                        path,
                        TypeErrorKind::OfCourseNeedsWhyNotContext,
                        format!("boxed process uses {} which is not captured (rule OfCourse)", n),
                    );
                }
                if !matches!(f, Formula::WhyNot(_)) {
                    return err(
                        path,
                        TypeErrorKind::OfCourseNeedsWhyNotContext,
                        format!("captured {} : {} is not a ?-type (rule OfCourse)", n, f),
                    );
                }
                out.insert(n.clone(), f.clone());
            }
            for c in captured {
                if !env.contains(c) {
                    return err(
                        path,
                        TypeErrorKind::UnknownName,
                        format!("captured {} not free in boxed process (rule OfCourse)", c),
                    );
                }
            }
            out.insert(x.clone(), Formula::of_course(fx));
            conclude!(Rule::OfCourse, SynthState { solids: vec![out], floats: vec![] }, vec![db])
        }
        SendGround { x, expr, body } => {
            require_ground(ctx, path, "value send")?;
            let gscope = ctx.gscope.clone();
            let kind = expr
                .kind_in(&|n| gscope.get(n).copied())
                .ok_or_else(|| TypeError {
                    location: path.clone(),
                    kind: TypeErrorKind::UnknownName,
                    detail: format!("ill-kinded or unbound ground expression {} (rule Ground-Out)", expr),
                })?;
            let (mut s, d) = child(path, 0, body, ctx)?;
            let Some((loc, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused (rule Ground-Out)", x));
            };
            s.env_mut(loc).set(x, Formula::GroundOut(kind, Box::new(fx)));
            conclude!(Rule::GroundOut, s, vec![d])
        }
        RecvGround { x, v, kind, body } => {
            require_ground(ctx, path, "value receive")?;
            let shadowed = ctx.gscope.insert(v.clone(), *kind);
            path.push(0);
            let res = synth_in(body, path, ctx);
            path.pop();
            match shadowed {
                Some(k) => {
                    ctx.gscope.insert(v.clone(), k);
                }
                None => {
                    ctx.gscope.remove(v);
                }
            }
            let (mut s, d) = res?;
            let Some((loc, fx)) = s.find(x) else {
                return err(path, TypeErrorKind::UnknownName, format!("subject {} unused (rule Ground-In)", x));
            };
            s.env_mut(loc).set(x, Formula::GroundIn(*kind, Box::new(fx)));
            conclude!(Rule::GroundIn, s, vec![d])
        }
        GroundIf { cond, then_branch, else_branch } => {
            require_ground(ctx, path, "value branch")?;
            let gscope = ctx.gscope.clone();
            match cond.kind_in(&|n| gscope.get(n).copied()) {
                Some(GroundKind::GBool) => {}
                _ => {
                    return err(
                        path,
                        TypeErrorKind::UnknownName,
                        format!("condition {} is not a boolean ground expression (rule Ground-If)", cond),
                    )
                }
            }
            let (sl, dl) = child(path, 0, then_branch, ctx)?;
            let (sr, dr) = child(path, 1, else_branch, ctx)?;
            if !states_same(&sl, &sr) {
                return err(
                    path,
                    TypeErrorKind::WithNeedsSingleEnv,
                    "branches of a value branch must synthesize equal judgments (rule Ground-If)".to_string(),
                );
            }
            conclude!(Rule::GroundIf, sl, vec![dl, dr])
        }
    }
}

fn states_same(a: &SynthState, b: &SynthState) -> bool {
    fn multiset_eq(xs: &[Environment], ys: &[Environment]) -> bool {
        if xs.len() != ys.len() {
            return false;
        }
        let mut used = vec![false; ys.len()];
        'outer: for x in xs {
            for (i, y) in ys.iter().enumerate() {
                if !used[i] && x.same_as(y) {
                    used[i] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
    multiset_eq(&a.solids, &b.solids) && multiset_eq(&a.floats, &b.floats)
}

fn colocate(
    s: &mut SynthState,
    path: &[usize],
    rule: Rule,
    la: Loc,
    lb: Loc,
) -> Result<(), TypeError> {
    if la == lb {
        return Ok(());
    }
    match (la, lb) {
        (Loc::Solid(_), Loc::Solid(_)) => err(
            path,
            TypeErrorKind::PartitionViolation,
            format!(
                "names must share one environment but live in distinct components (rule {})",
                rule.name()
            ),
        ),
        (Loc::Float(fi), Loc::Solid(si)) => {
            let fl = s.floats.remove(fi);
            for (n, f) in fl.entries {
                s.solids[si].insert(n, f);
            }
            Ok(())
        }
        (Loc::Solid(si), Loc::Float(fi)) => {
            let fl = s.floats.remove(fi);
            for (n, f) in fl.entries {
                s.solids[si].insert(n, f);
            }
            Ok(())
        }
        (Loc::Float(a), Loc::Float(b)) => {
            let (keep, take) = if a < b { (a, b) } else { (b, a) };
            let taken = s.floats.remove(take);
            for (n, f) in taken.entries {
                s.floats[keep].insert(n, f);
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical-form predicate and separation.

/// Canonical terms: prefixes over canonical continuations, parallel
/// compositions of canonical terms, Stop, links, case and box heads.
/// A cut is never canonical. (Ground extension: a value branch is canonical
/// only while its condition is still open.)
pub fn is_canonical(p: &Process) -> bool {
    use Process::*;
    match p {
        Stop | Link { .. } => true,
        New { .. } => false,
        Par { left, right } => is_canonical(left) && is_canonical(right),
        CaseOn { .. } | Bang { .. } => true,
        GroundIf { cond, .. } => !cond.is_closed(),
        _ => {
            let parts = p.prefix_parts().expect("non-prefix head");
            is_canonical(parts.continuation)
        }
    }
}

/// Split a checked process into one canonical-or-not component per declared
/// environment (Separation lemma). The Par-fold of the results is
/// structurally equivalent to the input.
pub fn separate(
    p: &Process,
    g: &Hyperenvironment,
    opts: Options,
) -> Result<Vec<(Process, Environment)>, TypeError> {
    check_with(p, g, opts)?;
    let canonical = canon::canonicalize(p);
    let mut comps = Vec::new();
    flatten_par(&canonical, &mut comps);
    // Map each component to the declared environment holding its names.
    let mut declared_of: HashMap<Name, usize> = HashMap::new();
    for (i, e) in g.envs.iter().enumerate() {
        for (n, _) in e.entries() {
            declared_of.insert(n.clone(), i);
        }
    }
    let mut assigned: Vec<Option<Process>> = vec![None; g.envs.len()];
    let mut anonymous: Vec<Process> = Vec::new();
    for c in comps {
        let names = canon::occ_names(&c);
        let mut target = None;
        for n in &names {
            if let Some(&d) = declared_of.get(n) {
                target = Some(d);
                break;
            }
        }
        match target {
            Some(d) => {
                let merged = match assigned[d].take() {
                    None => c,
                    // Two components may share one environment only when the
                    // checked judgment put them there via floats.
                    Some(prev) => Process::par(prev, c),
                };
                assigned[d] = Some(merged);
            }
            None => anonymous.push(c),
        }
    }
    // Components with no named environment cover the empty environments.
    let mut anon_iter = anonymous.into_iter();
    let mut out = Vec::new();
    for (d, env) in g.envs.iter().enumerate() {
        let proc = match assigned[d].take() {
            Some(p) => p,
            None => {
                if env.is_empty() {
                    anon_iter.next().unwrap_or(Process::Stop)
                } else {
                    return err(
                        &[],
                        TypeErrorKind::PartitionViolation,
                        format!("no component for declared environment {:?}", env),
                    );
                }
            }
        };
        out.push((proc, env.clone()));
    }
    Ok(out)
}

fn flatten_par(p: &Process, out: &mut Vec<Process>) {
    match p {
        Process::Par { left, right } => {
            flatten_par(left, out);
            flatten_par(right, out);
        }
        Process::Stop => {}
        other => out.push(other.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn stop_types_at_empty() {
        let d = synth(&Process::Stop).unwrap();
        assert_eq!(d.rule, Rule::HMix0);
        assert!(d.conclusion.1.envs.is_empty());
    }

    #[test]
    fn boolean_constant_types() {
        // z[inl : 1] . z[] . 0  ::  z : 1 + 1
        let z = n("z");
        let d = synth(&truep(&z)).unwrap();
        let g = &d.conclusion.1;
        assert_eq!(g.envs.len(), 1);
        assert_eq!(g.envs[0].get(&z), Some(&Formula::boolean()));
    }

    #[test]
    fn axiom_checks_against_duals() {
        let x = n("x");
        let y = n("y");
        let a = Formula::boolean();
        let p = Process::Link { a: x.clone(), b: y.clone(), annot: a.dual() };
        let ok = Hyperenvironment::of_envs(vec![Environment::from_entries(vec![
            (x.clone(), a.dual()),
            (y.clone(), a.clone()),
        ])]);
        assert!(check(&p, &ok).is_ok());
        let bad = Hyperenvironment::of_envs(vec![Environment::from_entries(vec![
            (x, a.clone()),
            (y, a),
        ])]);
        let e = check(&p, &bad).unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::DualMismatch);
    }

    #[test]
    fn hmix2_requires_split_environments() {
        let x = n("x");
        let y = n("y");
        let p = Process::par(
            Process::OutUnit { x: x.clone(), body: Box::new(Process::Stop) },
            Process::OutUnit { x: y.clone(), body: Box::new(Process::Stop) },
        );
        let split = Hyperenvironment::of_envs(vec![
            Environment::singleton(x.clone(), Formula::One),
            Environment::singleton(y.clone(), Formula::One),
        ]);
        assert!(check(&p, &split).is_ok());
        let joined = Hyperenvironment::of_envs(vec![Environment::from_entries(vec![
            (x, Formula::One),
            (y, Formula::One),
        ])]);
        let e = check(&p, &joined).unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::PartitionViolation);
    }

    #[test]
    fn cut_needs_distinct_components() {
        // new (x:1)(y) { x[].y().0 } — both endpoints in one component.
        let x = n("x");
        let y = n("y");
        let body = Process::OutUnit {
            x: x.clone(),
            body: Box::new(Process::InUnit { x: y.clone(), body: Box::new(Process::Stop) }),
        };
        let p = Process::new_cut(x, y, Formula::One, body);
        let e = synth(&p).unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::PartitionViolation);
    }

    #[test]
    fn float_attaches_at_declared_judgment() {
        // x() . y[] . 0  ::  { x : bot, y : 1 } — the bottom floats until
        // the declared judgment places it next to y.
        let x = n("x");
        let y = n("y");
        let p = Process::InUnit {
            x: x.clone(),
            body: Box::new(Process::OutUnit { x: y.clone(), body: Box::new(Process::Stop) }),
        };
        let g = Hyperenvironment::of_envs(vec![Environment::from_entries(vec![
            (y, Formula::One),
            (x, Formula::Bot),
        ])]);
        assert!(check(&p, &g).is_ok());
    }

    #[test]
    fn bottom_needs_a_host() {
        let x = n("x");
        let p = Process::InUnit { x, body: Box::new(Process::Stop) };
        assert!(synth(&p).is_err());
    }

    #[test]
    fn canonical_predicate() {
        let x = n("x");
        let y = n("y");
        assert!(is_canonical(&Process::Stop));
        assert!(is_canonical(&truep(&x)));
        let cut = Process::new_cut(
            x.clone(),
            y.clone(),
            Formula::boolean(),
            Process::par(truep(&x), truep(&y)),
        );
        assert!(!is_canonical(&cut));
    }
}
