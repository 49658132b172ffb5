//! Undo-logged containers backing checkpoint/restore.
//!
//! Each container keeps its own undo log while a checkpoint is open. Writes
//! to distinct containers touch disjoint memory, so rolling every container
//! back independently reproduces the checkpointed state exactly. Overhead is
//! one log entry per write while a checkpoint is open and nothing otherwise.

use std::hash::Hash;

use rustc_hash::FxHashMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum JournalError {
    #[error("a checkpoint is already active")]
    AlreadyActive,
    #[error("restore requested without an active checkpoint")]
    NoCheckpoint,
    #[error("this structure does not support checkpoints")]
    Unsupported,
}

/// Common checkpoint protocol. At most one checkpoint is open at a time.
pub trait Journaled {
    fn begin(&mut self);
    /// Undo every write since `begin` and close the checkpoint.
    fn rollback(&mut self);
    /// Keep every write since `begin` and close the checkpoint.
    fn commit(&mut self);
}

/// Hash map with an undo log.
#[derive(Debug, Clone)]
pub struct JMap<K, V> {
    map: FxHashMap<K, V>,
    undo: Option<Vec<(K, Option<V>)>>,
}

impl<K, V> Default for JMap<K, V> {
    fn default() -> Self {
        Self {
            map: FxHashMap::default(),
            undo: None,
        }
    }
}

impl<K: Hash + Eq + Clone, V: Clone> JMap<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn get(&self, k: &K) -> Option<&V> {
        self.map.get(k)
    }

    #[inline]
    pub fn contains_key(&self, k: &K) -> bool {
        self.map.contains_key(k)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.map.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.map.keys()
    }

    #[inline]
    pub fn insert(&mut self, k: K, v: V) -> Option<V> {
        let old = self.map.insert(k.clone(), v);
        if let Some(log) = &mut self.undo {
            log.push((k, old.clone()));
        }
        old
    }

    #[inline]
    pub fn remove(&mut self, k: &K) -> Option<V> {
        let old = self.map.remove(k);
        if let (Some(log), Some(v)) = (&mut self.undo, &old) {
            log.push((k.clone(), Some(v.clone())));
        }
        old
    }

    /// Mutable access; the prior value is logged first.
    #[inline]
    pub fn get_mut(&mut self, k: &K) -> Option<&mut V> {
        if let Some(log) = &mut self.undo {
            if let Some(v) = self.map.get(k) {
                log.push((k.clone(), Some(v.clone())));
            }
        }
        self.map.get_mut(k)
    }
}

impl<K: Hash + Eq, V> std::ops::Index<&K> for JMap<K, V> {
    type Output = V;

    fn index(&self, k: &K) -> &V {
        &self.map[k]
    }
}

impl<K: Hash + Eq + Clone, V: Clone> Journaled for JMap<K, V> {
    fn begin(&mut self) {
        debug_assert!(self.undo.is_none());
        self.undo = Some(Vec::new());
    }

    fn rollback(&mut self) {
        if let Some(log) = self.undo.take() {
            for (k, old) in log.into_iter().rev() {
                match old {
                    Some(v) => {
                        self.map.insert(k, v);
                    }
                    None => {
                        self.map.remove(&k);
                    }
                }
            }
        }
    }

    fn commit(&mut self) {
        self.undo = None;
    }
}

#[derive(Debug, Clone)]
enum VecUndo<T> {
    Set(usize, T),
    Push,
    Pop(T),
}

/// Growable vector with an undo log.
#[derive(Debug, Clone)]
pub struct JVec<T> {
    items: Vec<T>,
    undo: Option<Vec<VecUndo<T>>>,
}

impl<T> Default for JVec<T> {
    fn default() -> Self {
        Self {
            items: Vec::new(),
            undo: None,
        }
    }
}

impl<T: Clone> JVec<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.items
    }

    #[inline]
    pub fn get(&self, i: usize) -> &T {
        &self.items[i]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize) -> &mut T {
        if let Some(log) = &mut self.undo {
            log.push(VecUndo::Set(i, self.items[i].clone()));
        }
        &mut self.items[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: T) {
        *self.get_mut(i) = v;
    }

    pub fn push(&mut self, v: T) {
        self.items.push(v);
        if let Some(log) = &mut self.undo {
            log.push(VecUndo::Push);
        }
    }

    pub fn pop(&mut self) -> Option<T> {
        let v = self.items.pop()?;
        if let Some(log) = &mut self.undo {
            log.push(VecUndo::Pop(v.clone()));
        }
        Some(v)
    }

    /// Remove and return every element, oldest first.
    pub fn drain_all(&mut self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.items.len());
        while let Some(v) = self.pop() {
            out.push(v);
        }
        out.reverse();
        out
    }
}

impl<T: Clone> Journaled for JVec<T> {
    fn begin(&mut self) {
        debug_assert!(self.undo.is_none());
        self.undo = Some(Vec::new());
    }

    fn rollback(&mut self) {
        if let Some(log) = self.undo.take() {
            for entry in log.into_iter().rev() {
                match entry {
                    VecUndo::Set(i, v) => self.items[i] = v,
                    VecUndo::Push => {
                        self.items.pop();
                    }
                    VecUndo::Pop(v) => self.items.push(v),
                }
            }
        }
    }

    fn commit(&mut self) {
        self.undo = None;
    }
}

/// Single value snapshotted when a checkpoint opens.
#[derive(Debug, Clone, Default)]
pub struct JCell<T> {
    value: T,
    saved: Option<T>,
}

impl<T: Clone> JCell<T> {
    pub fn new(value: T) -> Self {
        Self { value, saved: None }
    }

    #[inline]
    pub fn get(&self) -> &T {
        &self.value
    }

    #[inline]
    pub fn set(&mut self, v: T) {
        self.value = v;
    }
}

impl<T: Clone> Journaled for JCell<T> {
    fn begin(&mut self) {
        self.saved = Some(self.value.clone());
    }

    fn rollback(&mut self) {
        if let Some(v) = self.saved.take() {
            self.value = v;
        }
    }

    fn commit(&mut self) {
        self.saved = None;
    }
}

/// Tracks whether a checkpoint is open so backends can report
/// [`JournalError`]s uniformly.
#[derive(Debug, Clone, Copy, Default)]
pub struct CheckpointGuard {
    active: bool,
}

impl CheckpointGuard {
    pub fn open(&mut self) -> Result<(), JournalError> {
        if self.active {
            return Err(JournalError::AlreadyActive);
        }
        self.active = true;
        Ok(())
    }

    pub fn close(&mut self) -> Result<(), JournalError> {
        if !self.active {
            return Err(JournalError::NoCheckpoint);
        }
        self.active = false;
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.active
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_rollback_restores_inserts_and_removes() {
        let mut m: JMap<u32, u32> = JMap::new();
        m.insert(1, 10);
        m.insert(2, 20);
        m.begin();
        m.insert(1, 11);
        m.remove(&2);
        m.insert(3, 30);
        *m.get_mut(&3).unwrap() += 1;
        m.rollback();
        let mut got: Vec<_> = m.iter().map(|(k, v)| (*k, *v)).collect();
        got.sort();
        assert_eq!(got, vec![(1, 10), (2, 20)]);
    }

    #[test]
    fn vec_rollback_handles_drain() {
        let mut v: JVec<u8> = JVec::new();
        v.push(1);
        v.push(2);
        v.begin();
        v.set(0, 9);
        assert_eq!(v.drain_all(), vec![9, 2]);
        v.push(7);
        v.rollback();
        assert_eq!(v.as_slice(), &[1, 2]);
    }

    #[test]
    fn commit_keeps_writes() {
        let mut c = JCell::new(4u64);
        c.begin();
        c.set(5);
        c.commit();
        c.rollback();
        assert_eq!(*c.get(), 5);
    }

    #[test]
    fn guard_rejects_nesting_and_orphan_restore() {
        let mut g = CheckpointGuard::default();
        assert_eq!(g.close(), Err(JournalError::NoCheckpoint));
        g.open().unwrap();
        assert_eq!(g.open(), Err(JournalError::AlreadyActive));
        g.close().unwrap();
    }
}
