//! CSLL formulas (session types) and duality.

use std::fmt;

/// Kind tag for ground (opaque data) formulas. Only available when the
/// ground extension is enabled; core typing never produces these.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroundKind {
    Nat,
    GBool,
    NatList,
}

impl fmt::Display for GroundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundKind::Nat => write!(f, "nat"),
            GroundKind::GBool => write!(f, "gbool"),
            GroundKind::NatList => write!(f, "natlist"),
        }
    }
}

/// A formula of client-server linear logic.
///
/// `GroundIn`/`GroundOut` are the optional ground extension: a channel that
/// first carries one opaque value (inbound resp. outbound) and then behaves
/// as the continuation. They are dual to each other.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    One,
    Bot,
    Tensor(Box<Formula>, Box<Formula>),
    Par(Box<Formula>, Box<Formula>),
    Plus(Box<Formula>, Box<Formula>),
    With(Box<Formula>, Box<Formula>),
    WhyNot(Box<Formula>),
    OfCourse(Box<Formula>),
    Que(Box<Formula>),
    Exc(Box<Formula>),
    GroundIn(GroundKind, Box<Formula>),
    GroundOut(GroundKind, Box<Formula>),
}

impl Formula {
    pub fn tensor(a: Formula, b: Formula) -> Formula {
        Formula::Tensor(Box::new(a), Box::new(b))
    }
    pub fn par(a: Formula, b: Formula) -> Formula {
        Formula::Par(Box::new(a), Box::new(b))
    }
    pub fn plus(a: Formula, b: Formula) -> Formula {
        Formula::Plus(Box::new(a), Box::new(b))
    }
    pub fn with(a: Formula, b: Formula) -> Formula {
        Formula::With(Box::new(a), Box::new(b))
    }
    pub fn why_not(a: Formula) -> Formula {
        Formula::WhyNot(Box::new(a))
    }
    pub fn of_course(a: Formula) -> Formula {
        Formula::OfCourse(Box::new(a))
    }
    pub fn que(a: Formula) -> Formula {
        Formula::Que(Box::new(a))
    }
    pub fn exc(a: Formula) -> Formula {
        Formula::Exc(Box::new(a))
    }

    /// The type of boolean sessions, `1 ⊕ 1`.
    pub fn boolean() -> Formula {
        Formula::plus(Formula::One, Formula::One)
    }

    /// De Morgan dual. An involution: `dual(dual(a)) == a`.
    pub fn dual(&self) -> Formula {
        match self {
            Formula::One => Formula::Bot,
            Formula::Bot => Formula::One,
            Formula::Tensor(a, b) => Formula::par(a.dual(), b.dual()),
            Formula::Par(a, b) => Formula::tensor(a.dual(), b.dual()),
            Formula::Plus(a, b) => Formula::with(a.dual(), b.dual()),
            Formula::With(a, b) => Formula::plus(a.dual(), b.dual()),
            Formula::WhyNot(a) => Formula::of_course(a.dual()),
            Formula::OfCourse(a) => Formula::why_not(a.dual()),
            Formula::Que(a) => Formula::exc(a.dual()),
            Formula::Exc(a) => Formula::que(a.dual()),
            Formula::GroundIn(k, a) => Formula::GroundOut(*k, Box::new(a.dual())),
            Formula::GroundOut(k, a) => Formula::GroundIn(*k, Box::new(a.dual())),
        }
    }

    /// True iff the formula mentions a ground constructor anywhere.
    pub fn uses_ground(&self) -> bool {
        match self {
            Formula::One | Formula::Bot => false,
            Formula::Tensor(a, b)
            | Formula::Par(a, b)
            | Formula::Plus(a, b)
            | Formula::With(a, b) => a.uses_ground() || b.uses_ground(),
            Formula::WhyNot(a) | Formula::OfCourse(a) | Formula::Que(a) | Formula::Exc(a) => {
                a.uses_ground()
            }
            Formula::GroundIn(_, _) | Formula::GroundOut(_, _) => true,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Binary connectives associate to the right; the left operand is
        // parenthesized when it is itself binary.
        fn needs_parens(x: &Formula) -> bool {
            matches!(
                x,
                Formula::Tensor(_, _) | Formula::Par(_, _) | Formula::Plus(_, _) | Formula::With(_, _)
            )
        }
        fn left(x: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if needs_parens(x) {
                write!(f, "({})", x)
            } else {
                write!(f, "{}", x)
            }
        }
        match self {
            Formula::One => write!(f, "1"),
            Formula::Bot => write!(f, "bot"),
            Formula::Tensor(a, b) => {
                left(a, f)?;
                write!(f, " * {}", b)
            }
            Formula::Par(a, b) => {
                left(a, f)?;
                write!(f, " @ {}", b)
            }
            Formula::Plus(a, b) => {
                left(a, f)?;
                write!(f, " + {}", b)
            }
            Formula::With(a, b) => {
                left(a, f)?;
                write!(f, " & {}", b)
            }
            Formula::WhyNot(a) => wrap_unary(f, "?", a),
            Formula::OfCourse(a) => wrap_unary(f, "!", a),
            Formula::Que(a) => wrap_unary(f, "??", a),
            Formula::Exc(a) => wrap_unary(f, "!!", a),
            Formula::GroundIn(k, a) => {
                write!(f, "<{}+>", k)?;
                wrap_tail(f, a)
            }
            Formula::GroundOut(k, a) => {
                write!(f, "<{}->", k)?;
                wrap_tail(f, a)
            }
        }
    }
}

fn wrap_unary(f: &mut fmt::Formatter<'_>, op: &str, a: &Formula) -> fmt::Result {
    write!(f, "{}", op)?;
    wrap_tail(f, a)
}

fn wrap_tail(f: &mut fmt::Formatter<'_>, a: &Formula) -> fmt::Result {
    if matches!(
        a,
        Formula::Tensor(_, _) | Formula::Par(_, _) | Formula::Plus(_, _) | Formula::With(_, _)
    ) {
        write!(f, "({})", a)
    } else {
        write!(f, "{}", a)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_duality() {
        assert_eq!(Formula::One.dual(), Formula::Bot);
        assert_eq!(Formula::Bot.dual(), Formula::One);
    }

    #[test]
    fn coexponential_duality() {
        // dual(¿(1⊕1)) = ¡(⊥&⊥)
        let a = Formula::que(Formula::plus(Formula::One, Formula::One));
        let expect = Formula::exc(Formula::with(Formula::Bot, Formula::Bot));
        assert_eq!(a.dual(), expect);
    }

    #[test]
    fn display_right_associates() {
        let a = Formula::tensor(
            Formula::boolean(),
            Formula::tensor(Formula::boolean(), Formula::par(Formula::boolean().dual(), Formula::One)),
        );
        assert_eq!(a.to_string(), "(1 + 1) * (1 + 1) * (bot & bot) @ 1");
    }
}
