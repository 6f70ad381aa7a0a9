//! Interned channel names.
//!
//! A name is an integer id plus a display string. Identity, ordering and
//! hashing use the id only; the display string exists for printing and
//! error messages. Fresh ids come from a global counter so that binders
//! minted anywhere in the engine never collide.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// A channel (or ground-value) name.
#[derive(Clone)]
pub struct Name {
    id: u64,
    display: Arc<str>,
}

impl Name {
    /// Mint a fresh name with the given display hint.
    pub fn fresh(display: &str) -> Name {
        Name {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            display: Arc::from(display),
        }
    }

    /// A fresh name whose display is derived from an existing one.
    pub fn derived(base: &Name, suffix: &str) -> Name {
        Name::fresh(&format!("{}{}", base.display, suffix))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn display(&self) -> &str {
        &self.display
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Name {}

impl PartialOrd for Name {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Name {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl std::hash::Hash for Name {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.display, self.id)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_names_are_distinct() {
        let a = Name::fresh("x");
        let b = Name::fresh("x");
        assert_ne!(a, b);
        assert_eq!(a.display(), b.display());
    }

    #[test]
    fn identity_is_the_id() {
        let a = Name::fresh("x");
        let c = a.clone();
        assert_eq!(a, c);
    }
}
