//! Vector agreement with a partial-vector output. A dispersal core first
//! spreads per-index bits and completes confirm vectors; once the election
//! phase opens, rounds of leader election pick a candidate vector, a biased
//! gate checks the candidate's broadcast really finished, and per-index
//! biased checks validate every entry against this node's own records. A
//! final binary agreement per candidate makes the accept/reject decision
//! unanimous; acceptance outputs the candidate's vector everywhere.
//!
//! The round engine is a phase machine, but every child decision is also
//! recorded in a mirror map keyed by candidate, so a node that receives a
//! late quorum of decision announcements jumps straight to the output once
//! the winning vector's broadcast delivers, without walking the remaining
//! rounds itself.

use crate::abba::Abba;
use crate::abbba::Abbba;
use crate::acidd::Acidd;
use crate::core::{
    nonmissing_set, Action, InstanceId, Label, MsgBody, NodeId, OutputValue, PartialVector,
    ProtocolInput, RbcPayload,
};
use crate::rbc::Rbc;
use std::collections::{BTreeMap, BTreeSet};

/// Where the round engine currently parks. The candidate index is the
/// elected leader of the round being examined.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Phase {
    /// Dispersal still running; elections have not opened.
    Idle,
    /// Election coin for the current round requested.
    AwaitElection,
    /// Gate checks for the candidate under way.
    AwaitGate(u32),
    /// Gate accepted; waiting for the candidate's vector broadcast.
    AwaitVector(u32),
    /// Per-index checks running over the candidate's vector.
    AwaitChecks(u32),
    /// Final accept/reject agreement for the candidate running.
    AwaitFinal(u32),
    /// Output delivered.
    Finished,
}

/// One vector-agreement instance at one node.
pub struct Apva {
    base: InstanceId,
    own_id: InstanceId,
    me: NodeId,
    n: usize,
    t: usize,
    acidd: Acidd,
    confirm_rbcs: Vec<Rbc>,
    gate_abbbas: BTreeMap<u32, Abbba>,
    check_abbbas: BTreeMap<(u32, u32), Abbba>,
    gate_abbas: BTreeMap<u32, Abba>,
    final_abbas: BTreeMap<u32, Abba>,
    /// Delivered confirm vectors by leader index.
    vectors: Vec<Option<PartialVector>>,
    gate_abbba_out: BTreeMap<u32, bool>,
    check_out: BTreeMap<(u32, u32), bool>,
    gate_decided: BTreeMap<u32, bool>,
    final_decided: BTreeMap<u32, bool>,
    phase: Phase,
    /// Current election round, 1-based; 0 before elections open.
    round: u32,
    election_result: BTreeMap<u32, u32>,
    elections_requested: BTreeSet<u32>,
    own_vector_sent: bool,
    output: Option<PartialVector>,
    terminated: bool,
}

impl Apva {
    /// `base` is the identity root shared with sibling sub-protocols; this
    /// instance's own outputs carry the vector-agreement label on the same
    /// root.
    pub fn new(base: InstanceId, me: NodeId, n: usize, t: usize) -> Self {
        let acidd = Acidd::new(base.relabel(Label::Acidd), me, n, t);
        let confirm_rbcs = (1..=n)
            .map(|j| {
                Rbc::new(
                    base.relabel(Label::Rbc).derived().sub(j as u32),
                    me,
                    n,
                    t,
                    NodeId(j as u8),
                )
            })
            .collect();
        Apva {
            own_id: base.relabel(Label::Apva),
            base,
            me,
            n,
            t,
            acidd,
            confirm_rbcs,
            gate_abbbas: BTreeMap::new(),
            check_abbbas: BTreeMap::new(),
            gate_abbas: BTreeMap::new(),
            final_abbas: BTreeMap::new(),
            vectors: vec![None; n],
            gate_abbba_out: BTreeMap::new(),
            check_out: BTreeMap::new(),
            gate_decided: BTreeMap::new(),
            final_decided: BTreeMap::new(),
            phase: Phase::Idle,
            round: 0,
            election_result: BTreeMap::new(),
            elections_requested: BTreeSet::new(),
            own_vector_sent: false,
            output: None,
            terminated: false,
        }
    }

    pub fn id(&self) -> &InstanceId {
        &self.own_id
    }

    pub fn output(&self) -> Option<&PartialVector> {
        self.output.as_ref()
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// Highest election round opened at this node.
    pub fn current_round(&self) -> u32 {
        self.round
    }

    pub fn status(&self) -> String {
        format!(
            "{} phase={:?} round={} acidd=[{}] vectors={} output={}",
            self.own_id,
            self.phase,
            self.round,
            self.acidd.status(),
            self.vectors.iter().filter(|v| v.is_some()).count(),
            self.output.is_some(),
        )
    }

    fn election_id(&self, r: u32) -> InstanceId {
        self.base.relabel(Label::Election).sub(r)
    }

    fn gate_abbba_id(&self, e: u32) -> InstanceId {
        self.base.relabel(Label::Abbba).derived().sub(e).sub(0)
    }

    fn check_abbba_id(&self, e: u32, j: u32) -> InstanceId {
        self.base.relabel(Label::Abbba).sub(e).sub(j)
    }

    fn gate_abba_id(&self, e: u32) -> InstanceId {
        self.base.relabel(Label::Abba).derived().sub(e)
    }

    fn final_abba_id(&self, e: u32) -> InstanceId {
        self.base.relabel(Label::Abba).sub(e)
    }

    /// Own per-index bit, forwarded to the dispersal vote.
    pub fn entry(&mut self, j: usize, b: bool) -> Vec<Action> {
        if self.terminated || j < 1 || j > self.n {
            return Vec::new();
        }
        let mut out = Vec::new();
        let acts = self.acidd.entry(j, b);
        self.ingest(acts, &mut out);
        self.settle(&mut out);
        out
    }

    /// Network message addressed to any instance under this root. No
    /// terminated gate: children keep serving stragglers at other nodes
    /// after our own output, and `settle` is a no-op once terminated.
    pub fn handle_message(&mut self, from: NodeId, instance: &InstanceId, body: &MsgBody) -> Vec<Action> {
        let mut out = Vec::new();
        let comp = instance.first().clone();
        let acts = match (comp.label, comp.derived, comp.subs.as_slice()) {
            (Label::Acidd, false, []) => self.acidd.step(from, body),
            (Label::Rbc, true, [j]) if (1..=self.n as u32).contains(j) => {
                self.confirm_rbcs[*j as usize - 1].step(from, body)
            }
            (Label::Abba, true, [e]) if (1..=self.n as u32).contains(e) => {
                let id = self.gate_abba_id(*e);
                let (n, t) = (self.n, self.t);
                self.gate_abbas.entry(*e).or_insert_with(|| Abba::new(id, n, t)).step(from, body)
            }
            (Label::Abba, false, [e]) if (1..=self.n as u32).contains(e) => {
                let id = self.final_abba_id(*e);
                let (n, t) = (self.n, self.t);
                self.final_abbas.entry(*e).or_insert_with(|| Abba::new(id, n, t)).step(from, body)
            }
            (Label::Abbba, true, [e, 0]) if (1..=self.n as u32).contains(e) => {
                let id = self.gate_abbba_id(*e);
                let (n, t) = (self.n, self.t);
                self.gate_abbbas.entry(*e).or_insert_with(|| Abbba::new(id, n, t)).step(from, body)
            }
            (Label::Abbba, false, [e, j])
                if (1..=self.n as u32).contains(e) && (1..=self.n as u32).contains(j) =>
            {
                let id = self.check_abbba_id(*e, *j);
                let (n, t) = (self.n, self.t);
                self.check_abbbas
                    .entry((*e, *j))
                    .or_insert_with(|| Abbba::new(id, n, t))
                    .step(from, body)
            }
            _ => Vec::new(),
        };
        self.ingest(acts, &mut out);
        self.settle(&mut out);
        out
    }

    /// Oracle reply: an election result or a round coin for one of the
    /// binary agreements.
    pub fn handle_coin(&mut self, instance: &InstanceId, value: u32) -> Vec<Action> {
        let mut out = Vec::new();
        let path = instance.path();
        match path {
            [comp] if comp.label == Label::Election => {
                if let [r] = comp.subs.as_slice() {
                    if (1..=self.n as u32).contains(&value) {
                        self.election_result.entry(*r).or_insert(value);
                    }
                }
            }
            [owner, coin] if coin.label == Label::BinCoin && owner.label == Label::Abba => {
                if let [e] = owner.subs.as_slice() {
                    let map = if owner.derived { &mut self.gate_abbas } else { &mut self.final_abbas };
                    if let Some(abba) = map.get_mut(e) {
                        let acts = abba.coin(instance, value);
                        self.ingest(acts, &mut out);
                    }
                }
            }
            _ => {}
        }
        self.settle(&mut out);
        out
    }

    /// Pass child actions through, folding child outputs into the decision
    /// mirrors instead of surfacing them.
    fn ingest(&mut self, acts: Vec<Action>, out: &mut Vec<Action>) {
        for act in acts {
            match act {
                Action::Output { instance, value } => self.record_child_output(&instance, value, out),
                Action::Terminate { .. } => {}
                other => out.push(other),
            }
        }
    }

    fn record_child_output(&mut self, instance: &InstanceId, value: OutputValue, out: &mut Vec<Action>) {
        let comp = instance.first().clone();
        match (comp.label, comp.derived, comp.subs.as_slice(), value) {
            // Confirm-vector broadcast delivered. Malformed payloads from a
            // corrupt leader earn no credit.
            (Label::Rbc, true, [j], OutputValue::Payload(RbcPayload::Vector(w)))
                if w.len() == self.n =>
            {
                let j = *j as usize;
                if self.vectors[j - 1].is_none() {
                    self.vectors[j - 1] = Some(w);
                    let acts = self.acidd.vector_input(j);
                    self.ingest(acts, out);
                }
            }
            (Label::Abbba, true, [e, 0], OutputValue::Bit(v)) => {
                self.gate_abbba_out.entry(*e).or_insert(v);
            }
            (Label::Abbba, false, [e, j], OutputValue::Bit(v)) => {
                self.check_out.entry((*e, *j)).or_insert(v);
            }
            (Label::Abba, true, [e], OutputValue::Bit(v)) => {
                self.gate_decided.entry(*e).or_insert(v);
            }
            (Label::Abba, false, [e], OutputValue::Bit(v)) => {
                self.final_decided.entry(*e).or_insert(v);
            }
            _ => {}
        }
    }

    /// Drive every enabled transition to a fixpoint.
    fn settle(&mut self, out: &mut Vec<Action>) {
        loop {
            if self.terminated {
                return;
            }
            let mut changed = false;

            // Completed own confirm vector goes out for broadcast.
            if !self.own_vector_sent {
                if let Some(v) = self.acidd.delivered_vector().cloned() {
                    self.own_vector_sent = true;
                    let acts = self.confirm_rbcs[self.me.index()].input(RbcPayload::Vector(v));
                    self.ingest(acts, out);
                    changed = true;
                }
            }

            // A pending biased vote rides on live indicator reads: when a
            // pair grows after input, re-announce so the flip reaches the
            // tallies. Without this a vote whose backing quorum formed late
            // can starve, and with it every honest node eventually feeds
            // the follow-up agreements.
            let mut regrown: Vec<Action> = Vec::new();
            for (e, vote) in self.gate_abbbas.iter_mut() {
                if vote.has_input() && vote.output().is_none() {
                    let alpha = self.acidd.vector_seen(*e as usize);
                    let beta = self.acidd.vector_finished(*e as usize);
                    regrown.extend(vote.upgrade(alpha, beta));
                }
            }
            for ((e, j), vote) in self.check_abbbas.iter_mut() {
                if vote.has_input() && vote.output().is_none() {
                    let Some(v) = self.vectors[*e as usize - 1].as_ref() else { continue };
                    let Some(b) = v.get(*j as usize) else { continue };
                    let alpha = self.acidd.vote_confirmed(*j as usize, b);
                    let beta = self.acidd.finish_recorded(*j as usize, b);
                    regrown.extend(vote.upgrade(alpha, beta));
                }
            }
            if !regrown.is_empty() {
                self.ingest(regrown, out);
                changed = true;
            }

            // Announcement shortcut: an accepted candidate whose vector has
            // delivered is an output, whatever round this node is in.
            if let Some(e) = self
                .final_decided
                .iter()
                .find_map(|(e, d)| (*d && self.vectors[*e as usize - 1].is_some()).then_some(*e))
            {
                let v = self.vectors[e as usize - 1].clone().expect("vector present");
                self.output = Some(v.clone());
                self.phase = Phase::Finished;
                self.terminated = true;
                out.push(Action::Output {
                    instance: self.own_id.clone(),
                    value: OutputValue::Vector(v),
                });
                out.push(Action::Terminate { instance: self.own_id.clone() });
                return;
            }

            if self.engine_step(out) {
                changed = true;
            }
            if !changed {
                return;
            }
        }
    }

    /// One phase-machine transition if enabled.
    fn engine_step(&mut self, out: &mut Vec<Action>) -> bool {
        match self.phase {
            Phase::Idle => {
                if self.acidd.returned() {
                    self.round = 1;
                    self.open_election(out);
                    true
                } else {
                    false
                }
            }
            Phase::AwaitElection => {
                let Some(e) = self.election_result.get(&self.round).copied() else {
                    return false;
                };
                self.phase = Phase::AwaitGate(e);
                // Gate inputs are live reads of the broadcast indicators.
                let alpha = self.acidd.vector_seen(e as usize);
                let beta = self.acidd.vector_finished(e as usize);
                let id = self.gate_abbba_id(e);
                let (n, t) = (self.n, self.t);
                let acts = self
                    .gate_abbbas
                    .entry(e)
                    .or_insert_with(|| Abbba::new(id, n, t))
                    .input(alpha, beta);
                self.ingest(acts, out);
                true
            }
            Phase::AwaitGate(e) => {
                // Feed the gate agreement as soon as the gate vote resolves.
                if let Some(v) = self.gate_abbba_out.get(&e).copied() {
                    let id = self.gate_abba_id(e);
                    let (n, t) = (self.n, self.t);
                    let abba = self.gate_abbas.entry(e).or_insert_with(|| Abba::new(id, n, t));
                    if !abba.has_input() && !abba.terminated() {
                        let acts = abba.input(v);
                        self.ingest(acts, out);
                        return true;
                    }
                }
                match self.gate_decided.get(&e).copied() {
                    Some(true) => {
                        self.phase = Phase::AwaitVector(e);
                        true
                    }
                    Some(false) => {
                        self.advance_round(out);
                        true
                    }
                    None => false,
                }
            }
            Phase::AwaitVector(e) => {
                let Some(v) = self.vectors[e as usize - 1].clone() else {
                    return false;
                };
                let m = nonmissing_set(&v);
                if m.len() < self.n - self.t {
                    self.advance_round(out);
                    return true;
                }
                self.phase = Phase::AwaitChecks(e);
                for j in m {
                    let b = v.get(j).expect("nonmissing entry");
                    let alpha = self.acidd.vote_confirmed(j, b);
                    let beta = self.acidd.finish_recorded(j, b);
                    let id = self.check_abbba_id(e, j as u32);
                    let (n, t) = (self.n, self.t);
                    let acts = self
                        .check_abbbas
                        .entry((e, j as u32))
                        .or_insert_with(|| Abbba::new(id, n, t))
                        .input(alpha, beta);
                    self.ingest(acts, out);
                }
                true
            }
            Phase::AwaitChecks(e) => {
                let v = self.vectors[e as usize - 1].as_ref().expect("vector fixed");
                let m = nonmissing_set(v);
                let mut all_one = true;
                for j in &m {
                    match self.check_out.get(&(e, *j as u32)) {
                        Some(ok) => all_one &= ok,
                        None => return false,
                    }
                }
                let id = self.final_abba_id(e);
                let (n, t) = (self.n, self.t);
                let abba = self.final_abbas.entry(e).or_insert_with(|| Abba::new(id, n, t));
                self.phase = Phase::AwaitFinal(e);
                if !abba.has_input() && !abba.terminated() {
                    let acts = abba.input(all_one);
                    self.ingest(acts, out);
                }
                true
            }
            Phase::AwaitFinal(e) => match self.final_decided.get(&e).copied() {
                // An accept is handled by the shortcut in `settle`, which
                // also waits for the vector; here only rejects advance.
                Some(false) => {
                    self.advance_round(out);
                    true
                }
                _ => false,
            },
            Phase::Finished => false,
        }
    }

    fn open_election(&mut self, out: &mut Vec<Action>) {
        self.phase = Phase::AwaitElection;
        if self.elections_requested.insert(self.round) {
            out.push(Action::ChildInput {
                instance: self.election_id(self.round),
                input: ProtocolInput::Activate,
            });
        }
    }

    // Rounds are unbounded: a draw that misses the dispersal-complete set
    // rejects and retries, and the miss probability is at most t/n per
    // round, so the walk past any depth shrinks geometrically. The run
    // loop's step budget stays the liveness backstop.
    fn advance_round(&mut self, out: &mut Vec<Action>) {
        self.round += 1;
        self.open_election(out);
    }

    /// Diagnostic for liveness reports: where this node is parked.
    pub fn stuck_report(&self) -> String {
        let detail = match self.phase {
            Phase::AwaitGate(e) => {
                let gate = self.gate_abbas.get(&e).map(|a| a.status());
                let vote = self.gate_abbbas.get(&e).map(|a| a.status());
                format!("gate_vote={vote:?} gate_agreement={gate:?}")
            }
            Phase::AwaitChecks(e) => {
                let missing: Vec<u32> = self.vectors[e as usize - 1]
                    .as_ref()
                    .map(|v| {
                        nonmissing_set(v)
                            .into_iter()
                            .map(|j| j as u32)
                            .filter(|j| !self.check_out.contains_key(&(e, *j)))
                            .collect()
                    })
                    .unwrap_or_default();
                format!("checks_missing={missing:?}")
            }
            Phase::AwaitFinal(e) => {
                format!("final_agreement={:?}", self.final_abbas.get(&e).map(|a| a.status()))
            }
            _ => String::new(),
        };
        format!("{} {}", self.status(), detail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::CoinOracle;
    use crate::core::{ChildValue, Envelope, Event};
    use std::collections::VecDeque;

    /// FIFO event loop over n vector-agreement nodes plus the coin oracle.
    fn run(n: usize, t: usize, seed: u64, entries: &[Vec<bool>]) -> Vec<Apva> {
        let base = InstanceId::new(Label::Apva, "t");
        let mut nodes: Vec<Apva> =
            (1..=n as u8).map(|i| Apva::new(base.clone(), NodeId(i), n, t)).collect();
        let mut oracle = CoinOracle::new(seed, n, t);
        let mut queue: VecDeque<(NodeId, Event)> = VecDeque::new();

        for i in 0..n {
            for j in 1..=n {
                let acts = nodes[i].entry(j, entries[i][j - 1]);
                enqueue(NodeId((i + 1) as u8), acts, &mut queue, n, &mut oracle);
            }
        }
        let mut steps = 0usize;
        while let Some((to, ev)) = queue.pop_front() {
            steps += 1;
            assert!(steps < 5_000_000, "no quiescence");
            let node = &mut nodes[to.index()];
            let acts = match &ev {
                Event::PeerMessage(env) => node.handle_message(env.from, &env.instance, &env.body),
                Event::ChildOutput { instance, value } => match value {
                    ChildValue::Coin(v) => node.handle_coin(instance, *v),
                    _ => Vec::new(),
                },
                _ => Vec::new(),
            };
            enqueue(to, acts, &mut queue, n, &mut oracle);
        }
        nodes
    }

    fn enqueue(
        me: NodeId,
        acts: Vec<Action>,
        queue: &mut VecDeque<(NodeId, Event)>,
        n: usize,
        oracle: &mut CoinOracle,
    ) {
        for act in acts {
            match act {
                Action::SendToAll { instance, body } => {
                    for to in NodeId::all(n) {
                        queue.push_back((
                            to,
                            Event::PeerMessage(Envelope {
                                from: me,
                                to,
                                instance: instance.clone(),
                                body: body.clone(),
                            }),
                        ));
                    }
                }
                Action::ChildInput { instance, .. } => {
                    if let Some(callers) = oracle.activate(&instance, me) {
                        let value = oracle.value_for(&instance);
                        for caller in callers {
                            queue.push_back((
                                caller,
                                Event::ChildOutput {
                                    instance: instance.clone(),
                                    value: ChildValue::Coin(value),
                                },
                            ));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn all_ones_agree_on_a_vector() {
        for seed in 0..5 {
            let n = 4;
            let entries = vec![vec![true; n]; n];
            let nodes = run(n, 1, seed, &entries);
            let first = nodes[0].output().expect("output").clone();
            assert!(nonmissing_set(&first).len() >= n - 1, "seed {seed}");
            for node in &nodes {
                assert!(node.terminated(), "seed {seed}: {}", node.stuck_report());
                assert_eq!(node.output(), Some(&first), "seed {seed}");
            }
        }
    }

    #[test]
    fn mixed_entries_still_agree() {
        for seed in 0..5 {
            let n = 4;
            // Node i's opinion of index j varies, but every index has a
            // clear honest majority of ones.
            let entries: Vec<Vec<bool>> =
                (0..n).map(|i| (0..n).map(|j| !(i == j && seed % 2 == 0)).collect()).collect();
            let nodes = run(n, 1, seed, &entries);
            let first = nodes[0].output().expect("output").clone();
            for node in &nodes {
                assert_eq!(node.output(), Some(&first), "seed {seed}");
            }
        }
    }

    #[test]
    fn seven_nodes_two_faults_tolerated_silently() {
        // Nodes 6 and 7 never participate: the rest still finish.
        for seed in 0..3 {
            let n = 7;
            let t = 2;
            let base = InstanceId::new(Label::Apva, "t");
            let mut nodes: Vec<Apva> =
                (1..=n as u8).map(|i| Apva::new(base.clone(), NodeId(i), n, t)).collect();
            let mut oracle = CoinOracle::new(seed, n, t);
            let mut queue: VecDeque<(NodeId, Event)> = VecDeque::new();
            for i in 0..n - 2 {
                for j in 1..=n {
                    let acts = nodes[i].entry(j, true);
                    enqueue(NodeId((i + 1) as u8), acts, &mut queue, n, &mut oracle);
                }
            }
            let mut steps = 0usize;
            while let Some((to, ev)) = queue.pop_front() {
                steps += 1;
                assert!(steps < 5_000_000, "no quiescence");
                if to.index() >= n - 2 {
                    continue; // silent nodes drop everything
                }
                let node = &mut nodes[to.index()];
                let acts = match &ev {
                    Event::PeerMessage(env) => {
                        node.handle_message(env.from, &env.instance, &env.body)
                    }
                    Event::ChildOutput { instance, value } => match value {
                        ChildValue::Coin(v) => node.handle_coin(instance, *v),
                        _ => Vec::new(),
                    },
                    _ => Vec::new(),
                };
                enqueue(to, acts, &mut queue, n, &mut oracle);
            }
            let first = nodes[0].output().expect("output").clone();
            assert!(nonmissing_set(&first).len() >= n - t, "seed {seed}");
            for node in nodes.iter().take(n - 2) {
                assert!(node.terminated(), "seed {seed}: {}", node.stuck_report());
                assert_eq!(node.output(), Some(&first), "seed {seed}");
            }
        }
    }

    #[test]
    fn entries_out_of_range_rejected() {
        let base = InstanceId::new(Label::Apva, "t");
        let mut node = Apva::new(base, NodeId(1), 4, 1);
        assert!(node.entry(0, true).is_empty());
        assert!(node.entry(5, true).is_empty());
        assert!(!node.entry(4, true).is_empty());
    }
}
