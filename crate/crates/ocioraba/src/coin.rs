//! Oracle-backed common coins: an election coin uniform over `[1..n]` and a
//! binary coin, both keyed by instance identity. A coin's value is a pure
//! function of (seed, identity) but is revealed only once t+1 distinct nodes
//! have activated that identity, so no scheduler can read the future.

use crate::core::{InstanceId, Label, NodeId};
use std::collections::{BTreeMap, BTreeSet};

/// Reply to a coin activation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CoinReply {
    /// Not enough distinct activations yet; the caller is re-notified once
    /// the threshold is met.
    Pending,
    /// Released value, identical for every caller of the same identity.
    Value(u32),
}

/// Deterministic coin oracle for one run.
#[derive(Clone, Debug)]
pub struct CoinOracle {
    seed: u64,
    n: usize,
    t: usize,
    activated: BTreeMap<InstanceId, BTreeSet<NodeId>>,
}

impl CoinOracle {
    pub fn new(seed: u64, n: usize, t: usize) -> Self {
        CoinOracle { seed, n, t, activated: BTreeMap::new() }
    }

    /// Record an activation of `id` by `caller`. Returns the release set:
    /// `None` while below threshold; `Some(callers)` with the freshly
    /// crossed threshold's full activator set, or `Some([caller])` for a
    /// late activation of an already-released identity.
    pub fn activate(&mut self, id: &InstanceId, caller: NodeId) -> Option<Vec<NodeId>> {
        let set = self.activated.entry(id.clone()).or_default();
        let released_before = set.len() >= self.t + 1;
        if !set.insert(caller) && released_before {
            // Duplicate activation after release: nothing new to deliver.
            return None;
        }
        if released_before {
            return Some(vec![caller]);
        }
        if set.len() >= self.t + 1 {
            return Some(set.iter().copied().collect());
        }
        None
    }

    /// Election coin: uniform over `[1..n]` once released.
    pub fn election(&mut self, id: &InstanceId, caller: NodeId) -> CoinReply {
        match self.activate(id, caller) {
            Some(_) => CoinReply::Value(self.election_value(id)),
            None if self.released(id) => CoinReply::Value(self.election_value(id)),
            None => CoinReply::Pending,
        }
    }

    /// Binary coin for a round-subscripted identity.
    pub fn binary_coin(&mut self, id: &InstanceId, round: u32, caller: NodeId) -> CoinReply {
        let key = id.nest(Label::BinCoin, &[round]);
        match self.activate(&key, caller) {
            Some(_) => CoinReply::Value(self.binary_value(&key)),
            None if self.released(&key) => CoinReply::Value(self.binary_value(&key)),
            None => CoinReply::Pending,
        }
    }

    pub fn released(&self, id: &InstanceId) -> bool {
        self.activated.get(id).map_or(false, |s| s.len() >= self.t + 1)
    }

    /// Value for an election-labeled identity, in `[1..n]`.
    pub fn election_value(&self, id: &InstanceId) -> u32 {
        (self.prf(id) % self.n as u64) as u32 + 1
    }

    /// Value for a binary-coin identity, in `{0, 1}`.
    pub fn binary_value(&self, id: &InstanceId) -> u32 {
        (self.prf(id) & 1) as u32
    }

    /// Value dispatch by the identity's leaf label.
    pub fn value_for(&self, id: &InstanceId) -> u32 {
        match id.leaf_label() {
            Label::Election => self.election_value(id),
            _ => self.binary_value(id),
        }
    }

    /// Fixed 64-bit mixer over (seed, canonical identity encoding).
    fn prf(&self, id: &InstanceId) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        };
        for c in id.path() {
            eat(c.label as u8);
            eat(c.derived as u8);
            for &byte in c.base.as_bytes() {
                eat(byte);
            }
            eat(0xFE);
            for &s in &c.subs {
                for byte in s.to_le_bytes() {
                    eat(byte);
                }
            }
            eat(0xFF);
        }
        let mut x = h ^ self.seed;
        for _ in 0..3 {
            x = x.wrapping_add(0x9E3779B97F4A7C15);
            x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
            x ^= x >> 31;
        }
        x
    }
}
