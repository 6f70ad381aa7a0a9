//! Client-Server Linear Logic: a hypersequent typechecker, a reduction
//! engine with seeded and exhaustive schedulers, and the CSGV session-typed
//! functional frontend with its translation into processes.
//!
//! The crate is organized as:
//! - [`name`], [`formula`], [`ground`], [`process`], [`canon`]: the kernel —
//!   terms, duality, free names, renaming, alpha-equivalence and the
//!   structural-congruence decision procedure;
//! - [`typecheck`]: judgment synthesis and checking over hyperenvironments,
//!   canonical-form predicate, separation;
//! - [`runtime`]: configurations, redex enumeration, stepping, seeded runs
//!   and exhaustive outcome enumeration;
//! - [`csgv`]: the functional frontend: types, duality, linear typing,
//!   sugar elaboration and the type-preserving translation;
//! - [`testkit`]: randomized generators and rewriters shared by the test
//!   suites.

pub mod canon;
pub mod csgv;
pub mod formula;
pub mod ground;
pub mod name;
pub mod process;
pub mod runtime;
pub mod testkit;
pub mod typecheck;

pub use canon::{canonical_digest, canonicalize, digest, struct_equiv, Digest};
pub use formula::{Formula, GroundKind};
pub use ground::{GroundExpr, GroundOp, GroundValue};
pub use name::Name;
pub use process::Process;
