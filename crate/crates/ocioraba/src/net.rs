//! Adversarial delivery queue with an eventual-delivery guarantee. Every
//! pending item (network envelope, protocol input, oracle reply) gets a
//! global enqueue sequence number; the scheduler may reorder freely, except
//! that the D-th delivery must satisfy D <= seq + bound for the item it
//! delivers. The queue enforces this by force-delivering the oldest item
//! whenever its deadline arrives, which bounds every item's lateness: a
//! non-oldest item delivered at D has D <= seq_oldest + bound <= seq + bound.
//!
//! Scheduler strategies only see sender, recipient, and body kind, never
//! payload contents, so delivery order cannot depend on coin values.

use crate::core::{Envelope, InstanceId, NodeId, ProtocolInput};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// One undelivered item.
#[derive(Clone, Debug)]
pub enum PendingItem {
    Net(Envelope),
    Input { to: NodeId, instance: InstanceId, input: ProtocolInput },
    Coin { to: NodeId, instance: InstanceId, value: u32 },
}

impl PendingItem {
    pub fn recipient(&self) -> NodeId {
        match self {
            PendingItem::Net(env) => env.to,
            PendingItem::Input { to, .. } | PendingItem::Coin { to, .. } => *to,
        }
    }

    fn sender(&self) -> Option<NodeId> {
        match self {
            PendingItem::Net(env) => Some(env.from),
            _ => None,
        }
    }
}

/// Reordering strategy. The delaying strategies hold back one traffic class
/// until the rest is drained or the fairness bound forces delivery.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SchedulerKind {
    /// Strict enqueue order.
    Fifo,
    /// Uniformly random among pending items.
    Random,
    /// Newest first.
    Lifo,
    /// Starve a fixed set of honest recipients.
    TargetedDelay,
    /// Starve honest traffic crossing a fixed honest partition.
    SplitBrain,
}

impl SchedulerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::Fifo => "fifo",
            SchedulerKind::Random => "random",
            SchedulerKind::Lifo => "lifo",
            SchedulerKind::TargetedDelay => "targeted-delay",
            SchedulerKind::SplitBrain => "split-brain",
        }
    }

    pub fn all() -> [SchedulerKind; 5] {
        [
            SchedulerKind::Fifo,
            SchedulerKind::Random,
            SchedulerKind::Lifo,
            SchedulerKind::TargetedDelay,
            SchedulerKind::SplitBrain,
        ]
    }

    pub fn parse(s: &str) -> Option<SchedulerKind> {
        SchedulerKind::all().into_iter().find(|k| k.name() == s)
    }
}

/// Classification fixed at construction: which items are held back.
pub struct Scheduler {
    kind: SchedulerKind,
    /// Targeted-delay victims.
    starved: BTreeSet<NodeId>,
    /// Split-brain: lower half of the honest nodes.
    low_side: BTreeSet<NodeId>,
    honest: BTreeSet<NodeId>,
}

impl Scheduler {
    pub fn new(kind: SchedulerKind, n: usize, t: usize, byzantine: &BTreeSet<NodeId>) -> Self {
        let honest: BTreeSet<NodeId> =
            NodeId::all(n).filter(|id| !byzantine.contains(id)).collect();
        // Starve the t+1 lowest honest ids: the largest set whose silence
        // the protocol must still tolerate from the scheduler alone.
        let starved: BTreeSet<NodeId> = honest.iter().copied().take(t + 1).collect();
        let low_side: BTreeSet<NodeId> =
            honest.iter().copied().take(honest.len() / 2).collect();
        Scheduler { kind, starved, low_side, honest }
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    /// True when the strategy wants to hold this item back.
    fn delayed(&self, item: &PendingItem) -> bool {
        match self.kind {
            SchedulerKind::Fifo | SchedulerKind::Random | SchedulerKind::Lifo => false,
            SchedulerKind::TargetedDelay => self.starved.contains(&item.recipient()),
            SchedulerKind::SplitBrain => {
                let to = item.recipient();
                let Some(from) = item.sender() else { return false };
                self.honest.contains(&from)
                    && self.honest.contains(&to)
                    && self.low_side.contains(&from) != self.low_side.contains(&to)
            }
        }
    }
}

/// The queue. `delivered` counts deliveries; an item enqueued as the seq-th
/// item must be delivered by the time `delivered` reaches seq + bound.
pub struct PendingQueue {
    items: BTreeMap<u64, PendingItem>,
    /// Non-delayed items, for the delaying strategies.
    eager: BTreeSet<u64>,
    /// Live seqs in arbitrary order, for uniform random picks.
    dense: Vec<u64>,
    pos: HashMap<u64, usize>,
    next_seq: u64,
    delivered: u64,
    bound: u64,
    forced: u64,
    max_lateness: u64,
}

impl PendingQueue {
    pub fn new(bound: u64) -> Self {
        PendingQueue {
            items: BTreeMap::new(),
            eager: BTreeSet::new(),
            dense: Vec::new(),
            pos: HashMap::new(),
            next_seq: 0,
            delivered: 0,
            bound,
            forced: 0,
            max_lateness: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Deliveries the deadline rule dictated over the strategy's choice.
    pub fn forced(&self) -> u64 {
        self.forced
    }

    /// Largest observed delivery number minus enqueue number.
    pub fn max_lateness(&self) -> u64 {
        self.max_lateness
    }

    pub fn push(&mut self, item: PendingItem, sched: &Scheduler) {
        let seq = self.next_seq;
        self.next_seq += 1;
        if !sched.delayed(&item) {
            self.eager.insert(seq);
        }
        self.pos.insert(seq, self.dense.len());
        self.dense.push(seq);
        self.items.insert(seq, item);
    }

    /// Remove and return the next item per strategy, honoring the deadline.
    pub fn pop<R: Rng>(&mut self, sched: &Scheduler, rng: &mut R) -> Option<PendingItem> {
        let oldest = *self.items.keys().next()?;
        let number = self.delivered + 1;
        debug_assert!(number <= oldest + self.bound, "deadline already broken");
        let seq = if number >= oldest + self.bound {
            self.forced += 1;
            oldest
        } else {
            match sched.kind() {
                SchedulerKind::Fifo => oldest,
                SchedulerKind::Lifo => *self.items.keys().next_back().expect("non-empty"),
                SchedulerKind::Random => self.dense[rng.gen_range(0..self.dense.len())],
                SchedulerKind::TargetedDelay | SchedulerKind::SplitBrain => {
                    self.eager.iter().next().copied().unwrap_or(oldest)
                }
            }
        };
        self.delivered = number;
        let lateness = number.saturating_sub(seq);
        self.max_lateness = self.max_lateness.max(lateness);
        assert!(number <= seq + self.bound, "eventual-delivery audit failed");
        Some(self.remove(seq))
    }

    fn remove(&mut self, seq: u64) -> PendingItem {
        self.eager.remove(&seq);
        let at = self.pos.remove(&seq).expect("tracked seq");
        let last = self.dense.pop().expect("non-empty dense");
        if last != seq {
            self.dense[at] = last;
            self.pos.insert(last, at);
        }
        self.items.remove(&seq).expect("tracked item")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{Label, MsgBody};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(from: u8, to: u8) -> PendingItem {
        PendingItem::Net(Envelope {
            from: NodeId(from),
            to: NodeId(to),
            instance: InstanceId::new(Label::Acidd, "q"),
            body: MsgBody::Election,
        })
    }

    fn drain_order(kind: SchedulerKind, bound: u64, pushes: &[(u8, u8)]) -> Vec<NodeId> {
        let sched = Scheduler::new(kind, 4, 1, &BTreeSet::new());
        let mut q = PendingQueue::new(bound);
        for (f, t) in pushes {
            q.push(env(*f, *t), &sched);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut order = Vec::new();
        while let Some(item) = q.pop(&sched, &mut rng) {
            order.push(item.recipient());
        }
        order
    }

    #[test]
    fn fifo_preserves_order() {
        let order = drain_order(SchedulerKind::Fifo, 100, &[(1, 2), (1, 3), (1, 4)]);
        assert_eq!(order, vec![NodeId(2), NodeId(3), NodeId(4)]);
    }

    #[test]
    fn lifo_reverses_order() {
        let order = drain_order(SchedulerKind::Lifo, 100, &[(1, 2), (1, 3), (1, 4)]);
        assert_eq!(order, vec![NodeId(4), NodeId(3), NodeId(2)]);
    }

    #[test]
    fn targeted_delay_starves_victims_until_forced() {
        // Victims for n=4, t=1 with no byzantine nodes: nodes 1 and 2.
        let order =
            drain_order(SchedulerKind::TargetedDelay, 100, &[(3, 1), (3, 4), (3, 2), (3, 3)]);
        assert_eq!(order, vec![NodeId(4), NodeId(3), NodeId(1), NodeId(2)]);
    }

    #[test]
    fn deadline_forces_oldest() {
        let sched = Scheduler::new(SchedulerKind::Lifo, 4, 1, &BTreeSet::new());
        let mut q = PendingQueue::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..10 {
            q.push(env(1, (i % 4) + 1), &sched);
        }
        // Deliveries 1 and 2 are lifo picks (seq 9, 8); delivery 3 hits
        // seq 0's deadline 0 + 3 and is forced.
        q.pop(&sched, &mut rng);
        q.pop(&sched, &mut rng);
        assert_eq!(q.forced(), 0);
        q.pop(&sched, &mut rng);
        assert_eq!(q.forced(), 1);
        while q.pop(&sched, &mut rng).is_some() {}
        assert!(q.max_lateness() <= 3);
    }

    #[test]
    fn every_strategy_respects_deadline_under_load() {
        for kind in SchedulerKind::all() {
            let sched = Scheduler::new(kind, 4, 1, &BTreeSet::new());
            let mut q = PendingQueue::new(8);
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut delivered = 0u64;
            // Interleave bursts of pushes with pops; the audit assert inside
            // pop verifies the invariant.
            for wave in 0..200u64 {
                for i in 0..3 {
                    q.push(env(((wave + i) % 4 + 1) as u8, ((wave * i) % 4 + 1) as u8), &sched);
                }
                if wave % 2 == 0 {
                    for _ in 0..2 {
                        if q.pop(&sched, &mut rng).is_some() {
                            delivered += 1;
                        }
                    }
                }
            }
            while q.pop(&sched, &mut rng).is_some() {
                delivered += 1;
            }
            assert_eq!(delivered, 600);
            assert!(q.max_lateness() <= 8, "{kind:?}");
        }
    }

    #[test]
    fn split_brain_delays_cross_partition_honest_traffic() {
        // n=4, t=1, byz {4}: honest {1,2,3}, low side {1}. Cross traffic
        // 1<->2, 1<->3 delayed; 2<->3 and anything with 4 eager.
        let byz: BTreeSet<NodeId> = [NodeId(4)].into();
        let sched = Scheduler::new(SchedulerKind::SplitBrain, 4, 1, &byz);
        assert!(sched.delayed(&env(1, 2)));
        assert!(sched.delayed(&env(3, 1)));
        assert!(!sched.delayed(&env(2, 3)));
        assert!(!sched.delayed(&env(4, 1)));
        assert!(!sched.delayed(&env(1, 4)));
        assert!(!sched.delayed(&PendingItem::Coin {
            to: NodeId(1),
            instance: InstanceId::new(Label::Election, "q"),
            value: 3,
        }));
    }

    #[test]
    fn random_is_a_permutation() {
        let order = drain_order(SchedulerKind::Random, 100, &[(1, 1), (1, 2), (1, 3), (1, 4)]);
        let mut got: Vec<u8> = order.iter().map(|x| x.0).collect();
        got.sort_unstable();
        assert_eq!(got, vec![1, 2, 3, 4]);
    }
}
