use std::sync::Mutex;

use bbgky_core::{DerivationMemo, Equation, ExpansionMode, MemoStore, Single};

/// A derivation memo that several threads can fill at once.
///
/// The lock is held only for single lookups and stores, never across a
/// derivation. Two threads may derive the same sub-equation concurrently;
/// both results are identical, so the later store is harmless.
#[derive(Debug)]
pub struct SharedMemo {
    mode: ExpansionMode,
    inner: Mutex<DerivationMemo>,
}

impl SharedMemo {
    pub fn new(mode: ExpansionMode) -> Self {
        SharedMemo { mode, inner: Mutex::new(DerivationMemo::new(mode)) }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_inner(self) -> DerivationMemo {
        self.inner.into_inner().expect("memo lock")
    }
}

impl MemoStore for &SharedMemo {
    fn mode(&self) -> ExpansionMode {
        self.mode
    }

    fn lookup(&mut self, key: &[Single]) -> Option<Equation> {
        self.inner.lock().expect("memo lock").lookup(key)
    }

    fn store(&mut self, key: Vec<Single>, eq: Equation) {
        self.inner.lock().expect("memo lock").store(key, eq)
    }
}
