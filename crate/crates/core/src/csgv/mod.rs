//! CSGV: the session-typed functional frontend.

pub mod types;

pub use types::{dual_session, encode_session, encode_type, is_unlimited, CsgvType, SessionType};
