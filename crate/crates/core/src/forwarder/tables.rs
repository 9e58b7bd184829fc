//! Pending Interest Table, Forwarding Information Base and Content Store.

use std::collections::BTreeMap;

use crate::hashstate::Digest;
use crate::time::SimTime;
use crate::wire::{ContentObject, Name};

use super::FaceId;

/// A downstream face waiting for content, with the smallest MTU seen on the
/// path behind it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PitFace {
    pub mu_mtu: u32,
    pub arrived_at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitEntry {
    pub name: Name,
    pub faces: BTreeMap<FaceId, PitFace>,
    pub upstream: Option<FaceId>,
    pub created_at: SimTime,
    pub expiry: SimTime,
}

#[derive(Debug, Clone, Default)]
pub struct Pit {
    entries: BTreeMap<Name, PitEntry>,
}

impl Pit {
    pub fn get(&self, name: &Name) -> Option<&PitEntry> {
        self.entries.get(name)
    }

    pub fn get_mut(&mut self, name: &Name) -> Option<&mut PitEntry> {
        self.entries.get_mut(name)
    }

    pub fn insert(&mut self, entry: PitEntry) {
        self.entries.insert(entry.name.clone(), entry);
    }

    pub fn remove(&mut self, name: &Name) -> Option<PitEntry> {
        self.entries.remove(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PitEntry> {
        self.entries.values()
    }

    /// Removes entries whose expiry is at or before `now`.
    pub fn expire(&mut self, now: SimTime) -> Vec<Name> {
        let gone: Vec<Name> = self.entries.values().filter(|e| e.expiry <= now).map(|e| e.name.clone()).collect();
        for n in &gone {
            self.entries.remove(n);
        }
        gone
    }

    pub fn next_expiry(&self) -> Option<SimTime> {
        self.entries.values().map(|e| e.expiry).min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: Name,
    pub faces: Vec<FaceId>,
}

/// Longest-prefix-match routing table over name components.
#[derive(Debug, Clone, Default)]
pub struct Fib {
    entries: BTreeMap<Name, FibEntry>,
}

impl Fib {
    pub fn add_route(&mut self, prefix: Name, face: FaceId) {
        let e = self.entries.entry(prefix.clone()).or_insert_with(|| FibEntry { prefix, faces: Vec::new() });
        if !e.faces.contains(&face) {
            e.faces.push(face);
        }
    }

    pub fn lookup(&self, name: &Name) -> Option<&FibEntry> {
        self.entries.values().filter(|e| e.prefix.is_prefix_of(name)).max_by_key(|e| e.prefix.len())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Verified objects keyed by name and digest, evicted least recently used.
#[derive(Debug, Clone, Default)]
pub struct ContentStore {
    capacity: usize,
    entries: BTreeMap<(Name, Digest), (ContentObject, u64)>,
    tick: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        ContentStore { capacity, entries: BTreeMap::new(), tick: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, object: ContentObject) {
        if self.capacity == 0 {
            return;
        }
        self.tick += 1;
        let key = (object.name().clone(), object.digest());
        self.entries.insert(key, (object, self.tick));
        while self.entries.len() > self.capacity {
            let oldest = self.entries.iter().min_by_key(|(_, (_, t))| *t).map(|(k, _)| k.clone()).expect("non-empty");
            self.entries.remove(&oldest);
        }
    }

    /// Most recently used object under `name`, refreshing its position.
    pub fn lookup(&mut self, name: &Name) -> Option<ContentObject> {
        let lo = (name.clone(), Digest([0; 32]));
        let hi = (name.clone(), Digest([0xff; 32]));
        let key = self.entries.range(lo..=hi).max_by_key(|(_, (_, t))| *t).map(|(k, _)| k.clone())?;
        self.tick += 1;
        let entry = self.entries.get_mut(&key).expect("found above");
        entry.1 = self.tick;
        Some(entry.0.clone())
    }

    pub fn contains(&self, name: &Name, digest: &Digest) -> bool {
        self.entries.contains_key(&(name.clone(), *digest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{KeyLocator, KeyPair, SchemeId};

    fn n(s: &str) -> Name {
        s.parse().unwrap()
    }

    fn obj(name: &str, byte: u8) -> ContentObject {
        let kp = KeyPair::from_private(SchemeId::Test, [1; 32]);
        ContentObject::sign(n(name), KeyLocator::Key(kp.public().clone()), vec![byte; 10], &kp)
    }

    #[test]
    fn fib_longest_prefix() {
        let mut fib = Fib::default();
        fib.add_route(n("/a"), 1);
        fib.add_route(n("/a/b"), 2);
        fib.add_route(n("/a/b"), 2);
        assert_eq!(fib.lookup(&n("/a/b/c")).unwrap().faces, vec![2]);
        assert_eq!(fib.lookup(&n("/a/x")).unwrap().faces, vec![1]);
        assert!(fib.lookup(&n("/z")).is_none());
    }

    #[test]
    fn cs_lru_eviction() {
        let mut cs = ContentStore::new(2);
        cs.insert(obj("/a", 1));
        cs.insert(obj("/b", 2));
        assert!(cs.lookup(&n("/a")).is_some());
        cs.insert(obj("/c", 3));
        assert_eq!(cs.len(), 2);
        assert!(cs.lookup(&n("/b")).is_none());
        assert!(cs.lookup(&n("/a")).is_some());
    }

    #[test]
    fn cs_keeps_distinct_digests() {
        let mut cs = ContentStore::new(4);
        let (x, y) = (obj("/a", 1), obj("/a", 2));
        cs.insert(x.clone());
        cs.insert(y.clone());
        assert_eq!(cs.len(), 2);
        assert!(cs.contains(x.name(), &x.digest()) && cs.contains(y.name(), &y.digest()));
        assert_eq!(cs.lookup(&n("/a")), Some(y));
    }

    #[test]
    fn cs_zero_capacity_stores_nothing() {
        let mut cs = ContentStore::new(0);
        cs.insert(obj("/a", 1));
        assert!(cs.is_empty());
    }

    #[test]
    fn pit_expiry() {
        let mut pit = Pit::default();
        pit.insert(PitEntry {
            name: n("/a"),
            faces: BTreeMap::new(),
            upstream: None,
            created_at: SimTime(0),
            expiry: SimTime(10),
        });
        assert!(pit.expire(SimTime(9)).is_empty());
        assert_eq!(pit.expire(SimTime(10)), vec![n("/a")]);
        assert!(pit.is_empty());
    }
}
