//! Ground extension: opaque data values carried by dedicated prefixes.
//!
//! Disabled by default. Values are naturals, booleans and lists of
//! naturals; expressions are the handful of total operations the examples
//! need. Expression variables are bound by `RecvGround` prefixes; they live
//! outside the linear name discipline (values are copyable data).

use crate::formula::GroundKind;
use crate::name::Name;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroundValue {
    Nat(u64),
    Bool(bool),
    List(Vec<GroundValue>),
}

impl GroundValue {
    pub fn kind(&self) -> GroundKind {
        match self {
            GroundValue::Nat(_) => GroundKind::Nat,
            GroundValue::Bool(_) => GroundKind::GBool,
            GroundValue::List(_) => GroundKind::NatList,
        }
    }
}

impl fmt::Display for GroundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundValue::Nat(n) => write!(f, "{}", n),
            GroundValue::Bool(b) => write!(f, "{}", b),
            GroundValue::List(xs) => {
                write!(f, "[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", x)?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroundOp {
    Succ,
    Add,
    Leq,
    EqNat,
    Cons,
    Head,
    Tail,
    IsNil,
}

impl GroundOp {
    pub fn name(self) -> &'static str {
        match self {
            GroundOp::Succ => "succ",
            GroundOp::Add => "add",
            GroundOp::Leq => "leq",
            GroundOp::EqNat => "eqnat",
            GroundOp::Cons => "cons",
            GroundOp::Head => "head",
            GroundOp::Tail => "tail",
            GroundOp::IsNil => "isnil",
        }
    }

    pub fn arg_kinds(self) -> &'static [GroundKind] {
        match self {
            GroundOp::Succ => &[GroundKind::Nat],
            GroundOp::Add | GroundOp::Leq | GroundOp::EqNat => &[GroundKind::Nat, GroundKind::Nat],
            GroundOp::Cons => &[GroundKind::Nat, GroundKind::NatList],
            GroundOp::Head | GroundOp::Tail | GroundOp::IsNil => &[GroundKind::NatList],
        }
    }

    pub fn result_kind(self) -> GroundKind {
        match self {
            GroundOp::Succ | GroundOp::Add | GroundOp::Head => GroundKind::Nat,
            GroundOp::Leq | GroundOp::EqNat | GroundOp::IsNil => GroundKind::GBool,
            GroundOp::Cons | GroundOp::Tail => GroundKind::NatList,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum GroundExpr {
    Var(Name),
    Lit(GroundValue),
    App(GroundOp, Vec<GroundExpr>),
}

impl GroundExpr {
    pub fn nat(n: u64) -> GroundExpr {
        GroundExpr::Lit(GroundValue::Nat(n))
    }

    pub fn nil() -> GroundExpr {
        GroundExpr::Lit(GroundValue::List(Vec::new()))
    }

    /// Free expression variables.
    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            GroundExpr::Var(v) => {
                out.insert(v.clone());
            }
            GroundExpr::Lit(_) => {}
            GroundExpr::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.vars().is_empty()
    }

    /// Substitute a value for a variable.
    pub fn subst(&self, var: &Name, value: &GroundValue) -> GroundExpr {
        match self {
            GroundExpr::Var(v) if v == var => GroundExpr::Lit(value.clone()),
            GroundExpr::Var(_) | GroundExpr::Lit(_) => self.clone(),
            GroundExpr::App(op, args) => {
                GroundExpr::App(*op, args.iter().map(|a| a.subst(var, value)).collect())
            }
        }
    }

    /// Kind of the expression under a variable-kind scope, or None if
    /// ill-kinded or an unbound variable occurs.
    pub fn kind_in(&self, scope: &dyn Fn(&Name) -> Option<GroundKind>) -> Option<GroundKind> {
        match self {
            GroundExpr::Var(v) => scope(v),
            GroundExpr::Lit(v) => Some(v.kind()),
            GroundExpr::App(op, args) => {
                let expect = op.arg_kinds();
                if args.len() != expect.len() {
                    return None;
                }
                for (a, k) in args.iter().zip(expect) {
                    if a.kind_in(scope)? != *k {
                        return None;
                    }
                }
                Some(op.result_kind())
            }
        }
    }

    /// Evaluate a closed expression. The list operations are total:
    /// `head nil = 0`, `tail nil = nil`.
    pub fn eval(&self) -> Option<GroundValue> {
        match self {
            GroundExpr::Var(_) => None,
            GroundExpr::Lit(v) => Some(v.clone()),
            GroundExpr::App(op, args) => {
                let vals: Option<Vec<GroundValue>> = args.iter().map(|a| a.eval()).collect();
                let vals = vals?;
                match (op, vals.as_slice()) {
                    (GroundOp::Succ, [GroundValue::Nat(n)]) => Some(GroundValue::Nat(n + 1)),
                    (GroundOp::Add, [GroundValue::Nat(a), GroundValue::Nat(b)]) => {
                        Some(GroundValue::Nat(a + b))
                    }
                    (GroundOp::Leq, [GroundValue::Nat(a), GroundValue::Nat(b)]) => {
                        Some(GroundValue::Bool(a <= b))
                    }
                    (GroundOp::EqNat, [GroundValue::Nat(a), GroundValue::Nat(b)]) => {
                        Some(GroundValue::Bool(a == b))
                    }
                    (GroundOp::Cons, [GroundValue::Nat(n), GroundValue::List(xs)]) => {
                        let mut out = vec![GroundValue::Nat(*n)];
                        out.extend(xs.iter().cloned());
                        Some(GroundValue::List(out))
                    }
                    (GroundOp::Head, [GroundValue::List(xs)]) => Some(
                        xs.first()
                            .cloned()
                            .unwrap_or(GroundValue::Nat(0)),
                    ),
                    (GroundOp::Tail, [GroundValue::List(xs)]) => Some(GroundValue::List(
                        xs.iter().skip(1).cloned().collect(),
                    )),
                    (GroundOp::IsNil, [GroundValue::List(xs)]) => {
                        Some(GroundValue::Bool(xs.is_empty()))
                    }
                    _ => None,
                }
            }
        }
    }
}

impl fmt::Display for GroundExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundExpr::Var(v) => write!(f, "{}", v),
            GroundExpr::Lit(v) => write!(f, "{}", v),
            GroundExpr::App(op, args) => {
                write!(f, "{}(", op.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Debug for GroundExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_cons_chain() {
        let e = GroundExpr::App(
            GroundOp::Cons,
            vec![
                GroundExpr::nat(1),
                GroundExpr::App(GroundOp::Cons, vec![GroundExpr::nat(2), GroundExpr::nil()]),
            ],
        );
        assert_eq!(
            e.eval(),
            Some(GroundValue::List(vec![GroundValue::Nat(1), GroundValue::Nat(2)]))
        );
    }

    #[test]
    fn open_expr_does_not_eval() {
        let v = Name::fresh("v");
        let e = GroundExpr::App(GroundOp::Succ, vec![GroundExpr::Var(v.clone())]);
        assert!(!e.is_closed());
        assert_eq!(e.eval(), None);
        let closed = e.subst(&v, &GroundValue::Nat(4));
        assert_eq!(closed.eval(), Some(GroundValue::Nat(5)));
    }
}
