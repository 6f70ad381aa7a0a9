//! CSGV types, session duality, the unlimited predicate, and the encoding
//! into CSLL formulas.

use crate::formula::{Formula, GroundKind};
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum CsgvType {
    /// `T -o U`
    LinFun(Box<CsgvType>, Box<CsgvType>),
    /// `T -> U` (unlimited function)
    UnlFun(Box<CsgvType>, Box<CsgvType>),
    Sum(Box<CsgvType>, Box<CsgvType>),
    Prod(Box<CsgvType>, Box<CsgvType>),
    UnitT,
    Session(Box<SessionType>),
    /// Ground extension: opaque data (naturals, lists).
    Ground(GroundKind),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum SessionType {
    /// `send T . S`
    Send(Box<CsgvType>, Box<SessionType>),
    /// `recv T . S`
    Recv(Box<CsgvType>, Box<SessionType>),
    /// `S ++ S'` — select one of two options.
    Select(Box<SessionType>, Box<SessionType>),
    /// `S && S'` — offer a choice.
    Offer(Box<SessionType>, Box<SessionType>),
    /// `end!`
    EndOut,
    /// `end?`
    EndIn,
    /// `??S` — request sessions (client-pool capability).
    Que(Box<SessionType>),
    /// `!!S` — serve sessions.
    Exc(Box<SessionType>),
}

impl CsgvType {
    pub fn lin_fun(a: CsgvType, b: CsgvType) -> CsgvType {
        CsgvType::LinFun(Box::new(a), Box::new(b))
    }
    pub fn unl_fun(a: CsgvType, b: CsgvType) -> CsgvType {
        CsgvType::UnlFun(Box::new(a), Box::new(b))
    }
    pub fn sum(a: CsgvType, b: CsgvType) -> CsgvType {
        CsgvType::Sum(Box::new(a), Box::new(b))
    }
    pub fn prod(a: CsgvType, b: CsgvType) -> CsgvType {
        CsgvType::Prod(Box::new(a), Box::new(b))
    }
    pub fn session(s: SessionType) -> CsgvType {
        CsgvType::Session(Box::new(s))
    }
    /// `bool = Unit + Unit`
    pub fn boolean() -> CsgvType {
        CsgvType::sum(CsgvType::UnitT, CsgvType::UnitT)
    }
    pub fn nat() -> CsgvType {
        CsgvType::Ground(GroundKind::Nat)
    }
    pub fn nat_list() -> CsgvType {
        CsgvType::Ground(GroundKind::NatList)
    }
}

impl SessionType {
    pub fn send(t: CsgvType, s: SessionType) -> SessionType {
        SessionType::Send(Box::new(t), Box::new(s))
    }
    pub fn recv(t: CsgvType, s: SessionType) -> SessionType {
        SessionType::Recv(Box::new(t), Box::new(s))
    }
    pub fn select(a: SessionType, b: SessionType) -> SessionType {
        SessionType::Select(Box::new(a), Box::new(b))
    }
    pub fn offer(a: SessionType, b: SessionType) -> SessionType {
        SessionType::Offer(Box::new(a), Box::new(b))
    }
    pub fn que(s: SessionType) -> SessionType {
        SessionType::Que(Box::new(s))
    }
    pub fn exc(s: SessionType) -> SessionType {
        SessionType::Exc(Box::new(s))
    }
}

/// Session duality: swaps send/recv, select/offer, the ends, and the
/// client/server modalities. An involution.
pub fn dual_session(s: &SessionType) -> SessionType {
    match s {
        SessionType::Send(t, s) => SessionType::Recv(t.clone(), Box::new(dual_session(s))),
        SessionType::Recv(t, s) => SessionType::Send(t.clone(), Box::new(dual_session(s))),
        SessionType::Select(a, b) => {
            SessionType::Offer(Box::new(dual_session(a)), Box::new(dual_session(b)))
        }
        SessionType::Offer(a, b) => {
            SessionType::Select(Box::new(dual_session(a)), Box::new(dual_session(b)))
        }
        SessionType::EndOut => SessionType::EndIn,
        SessionType::EndIn => SessionType::EndOut,
        SessionType::Que(s) => SessionType::Exc(Box::new(dual_session(s))),
        SessionType::Exc(s) => SessionType::Que(Box::new(dual_session(s))),
    }
}

/// Unlimited types can be discarded and duplicated: Unit and unlimited
/// functions always; sums and products when both components are. The
/// ground extension's data types are unlimited as well.
pub fn is_unlimited(t: &CsgvType) -> bool {
    match t {
        CsgvType::UnitT | CsgvType::UnlFun(_, _) | CsgvType::Ground(_) => true,
        CsgvType::Sum(a, b) | CsgvType::Prod(a, b) => is_unlimited(a) && is_unlimited(b),
        CsgvType::LinFun(_, _) | CsgvType::Session(_) => false,
    }
}

/// Encode a functional type into a CSLL formula.
pub fn encode_type(t: &CsgvType) -> Formula {
    match t {
        CsgvType::LinFun(a, b) => Formula::par(encode_type(a).dual(), encode_type(b)),
        CsgvType::UnlFun(a, b) => {
            Formula::of_course(Formula::par(encode_type(a).dual(), encode_type(b)))
        }
        CsgvType::Sum(a, b) => Formula::plus(encode_type(a), encode_type(b)),
        CsgvType::Prod(a, b) => Formula::tensor(encode_type(a), encode_type(b)),
        CsgvType::UnitT => Formula::One,
        CsgvType::Session(s) => encode_session(s),
        CsgvType::Ground(k) => Formula::GroundOut(*k, Box::new(Formula::One)),
    }
}

/// Encode a session type into a CSLL formula. The connectives land on the
/// dual of what one might expect: sending is encoded as inputting the
/// channel the value travels on.
pub fn encode_session(s: &SessionType) -> Formula {
    match s {
        SessionType::Send(t, s) => Formula::par(encode_type(t).dual(), encode_session(s)),
        SessionType::Recv(t, s) => Formula::tensor(encode_type(t), encode_session(s)),
        SessionType::Select(a, b) => Formula::with(encode_session(a), encode_session(b)),
        SessionType::Offer(a, b) => Formula::plus(encode_session(a), encode_session(b)),
        SessionType::EndOut => Formula::Bot,
        SessionType::EndIn => Formula::One,
        SessionType::Que(s) => Formula::exc(encode_session(s)),
        SessionType::Exc(s) => Formula::que(encode_session(s)),
    }
}

impl fmt::Display for CsgvType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsgvType::LinFun(a, b) => write!(f, "({} -o {})", a, b),
            CsgvType::UnlFun(a, b) => write!(f, "({} -> {})", a, b),
            CsgvType::Sum(a, b) => write!(f, "({} + {})", a, b),
            CsgvType::Prod(a, b) => write!(f, "({} * {})", a, b),
            CsgvType::UnitT => write!(f, "unit"),
            CsgvType::Session(s) => write!(f, "{}", s),
            CsgvType::Ground(GroundKind::Nat) => write!(f, "nat"),
            CsgvType::Ground(GroundKind::NatList) => write!(f, "[nat]"),
            CsgvType::Ground(GroundKind::GBool) => write!(f, "gbool"),
        }
    }
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SessionType::Send(t, s) => write!(f, "send {} . {}", t, s),
            SessionType::Recv(t, s) => write!(f, "recv {} . {}", t, s),
            SessionType::Select(a, b) => write!(f, "({} ++ {})", a, b),
            SessionType::Offer(a, b) => write!(f, "({} && {})", a, b),
            SessionType::EndOut => write!(f, "end!"),
            SessionType::EndIn => write!(f, "end?"),
            SessionType::Que(s) => write!(f, "??({})", s),
            SessionType::Exc(s) => write!(f, "!!({})", s),
        }
    }
}

impl fmt::Debug for CsgvType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_swaps_send_recv() {
        let s = SessionType::send(CsgvType::boolean(), SessionType::EndOut);
        let d = dual_session(&s);
        assert_eq!(d, SessionType::recv(CsgvType::boolean(), SessionType::EndIn));
    }

    #[test]
    fn que_duals_to_exc() {
        let s = SessionType::que(SessionType::EndOut);
        assert_eq!(dual_session(&s), SessionType::exc(SessionType::EndIn));
    }

    #[test]
    fn encoding_commutes_with_duality() {
        let s = SessionType::select(
            SessionType::send(CsgvType::UnitT, SessionType::EndOut),
            SessionType::que(SessionType::recv(CsgvType::boolean(), SessionType::EndIn)),
        );
        assert_eq!(encode_session(&dual_session(&s)), encode_session(&s).dual());
    }

    #[test]
    fn unlimited_predicate() {
        assert!(is_unlimited(&CsgvType::UnitT));
        assert!(is_unlimited(&CsgvType::boolean()));
        assert!(is_unlimited(&CsgvType::unl_fun(CsgvType::UnitT, CsgvType::UnitT)));
        assert!(!is_unlimited(&CsgvType::lin_fun(CsgvType::UnitT, CsgvType::UnitT)));
        assert!(!is_unlimited(&CsgvType::session(SessionType::EndOut)));
        assert!(is_unlimited(&CsgvType::prod(CsgvType::boolean(), CsgvType::nat())));
    }
}
