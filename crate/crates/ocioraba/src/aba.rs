//! Top-level agreement on an ell-bit value. Every node erasure-codes its
//! input into n shares with threshold t+1 and broadcasts its own share;
//! delivered shares are compared against the node's own encoding, and the
//! per-index match bits feed either n parallel binary agreements (the
//! direct build) or one vector agreement (the election build). The agreed
//! one-set picks t+1 share indices to decode; fewer than t+1 ones means no
//! value had enough honest backing and the distinguished fallback is output
//! instead. When all honest nodes start with the same value, the decoded
//! value is that input.

use crate::abba::Abba;
use crate::apva::Apva;
use crate::codec::{ec_decode, ec_encode};
use crate::core::{
    Action, BitString, InstanceId, Label, MsgBody, NodeId, OutputValue, PartialVector, RbcPayload,
    Share,
};
use crate::rbc::Rbc;

/// Which agreement engine consumes the per-index match bits.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AbaVariant {
    /// n parallel binary agreements with zero-backfill.
    Star,
    /// One election-driven vector agreement.
    Vector,
}

enum Engine {
    Star { abbas: Vec<Abba>, outs: Vec<Option<bool>>, backfilled: bool },
    Vector { apva: Box<Apva>, out: Option<PartialVector> },
}

/// One top-level agreement instance at one node.
pub struct AbaNode {
    id: InstanceId,
    me: NodeId,
    n: usize,
    t: usize,
    input: Option<BitString>,
    own_shares: Option<Vec<Share>>,
    share_rbcs: Vec<Rbc>,
    delivered: Vec<Option<RbcPayload>>,
    compared: Vec<bool>,
    engine: Engine,
    agreed: Option<Vec<usize>>,
    output: Option<OutputValue>,
    terminated: bool,
}

impl AbaNode {
    pub fn new(variant: AbaVariant, id: InstanceId, me: NodeId, n: usize, t: usize) -> Self {
        let share_rbcs = (1..=n)
            .map(|j| {
                Rbc::new(id.relabel(Label::Rbc).sub(j as u32), me, n, t, NodeId(j as u8))
            })
            .collect();
        let engine = match variant {
            AbaVariant::Star => Engine::Star {
                abbas: (1..=n)
                    .map(|j| Abba::new(id.relabel(Label::Abba).sub(j as u32), n, t))
                    .collect(),
                outs: vec![None; n],
                backfilled: false,
            },
            AbaVariant::Vector => Engine::Vector {
                apva: Box::new(Apva::new(id.clone(), me, n, t)),
                out: None,
            },
        };
        AbaNode {
            id,
            me,
            n,
            t,
            input: None,
            own_shares: None,
            share_rbcs,
            delivered: vec![None; n],
            compared: vec![false; n],
            engine,
            agreed: None,
            output: None,
            terminated: false,
        }
    }

    pub fn id(&self) -> &InstanceId {
        &self.id
    }

    pub fn output(&self) -> Option<&OutputValue> {
        self.output.as_ref()
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// Election rounds consumed; zero for the direct build.
    pub fn election_rounds(&self) -> u32 {
        match &self.engine {
            Engine::Star { .. } => 0,
            Engine::Vector { apva, .. } => apva.current_round(),
        }
    }

    pub fn stuck_report(&self) -> String {
        let shares: Vec<usize> =
            (1..=self.n).filter(|j| self.delivered[j - 1].is_some()).collect();
        let engine = match &self.engine {
            Engine::Star { abbas, outs, backfilled } => {
                let undecided: Vec<String> = abbas
                    .iter()
                    .zip(outs)
                    .filter(|(_, o)| o.is_none())
                    .map(|(a, _)| a.status())
                    .collect();
                format!("backfilled={backfilled} undecided={undecided:?}")
            }
            Engine::Vector { apva, out } => {
                format!("apva_out={} {}", out.is_some(), apva.stuck_report())
            }
        };
        format!(
            "{} me={} input={} shares_delivered={:?} agreed={:?} output={} | {}",
            self.id,
            self.me,
            self.input.is_some(),
            shares,
            self.agreed,
            self.output.is_some(),
            engine,
        )
    }

    pub fn input(&mut self, w: BitString) -> Vec<Action> {
        if self.terminated || self.input.is_some() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let shares = ec_encode(self.n, self.t + 1, &w).expect("encode own input");
        let own = shares[self.me.index()].clone();
        self.input = Some(w);
        self.own_shares = Some(shares);
        let acts = self.share_rbcs[self.me.index()].input(RbcPayload::Share(own));
        self.ingest_rbc(acts, &mut out);
        // Shares that arrived before the input can now be compared.
        for j in 1..=self.n {
            self.compare(j, &mut out);
        }
        self.settle(&mut out);
        out
    }

    /// No terminated gate here: children keep serving stragglers at other
    /// nodes after our own output, and `settle` is a no-op once terminated.
    pub fn handle_message(
        &mut self,
        from: NodeId,
        instance: &InstanceId,
        body: &MsgBody,
    ) -> Vec<Action> {
        let mut out = Vec::new();
        let comp = instance.first().clone();
        match (comp.label, comp.derived, comp.subs.as_slice(), &mut self.engine) {
            (Label::Rbc, false, [j], _) if (1..=self.n as u32).contains(j) => {
                let acts = self.share_rbcs[*j as usize - 1].step(from, body);
                self.ingest_rbc(acts, &mut out);
            }
            (Label::Abba, false, [j], Engine::Star { abbas, .. })
                if (1..=self.n as u32).contains(j) =>
            {
                let acts = abbas[*j as usize - 1].step(from, body);
                self.ingest_star(acts, &mut out);
            }
            (_, _, _, Engine::Vector { apva, .. }) => {
                let acts = apva.handle_message(from, instance, body);
                self.ingest_vector(acts, &mut out);
            }
            _ => {}
        }
        self.settle(&mut out);
        out
    }

    pub fn handle_coin(&mut self, instance: &InstanceId, value: u32) -> Vec<Action> {
        let mut out = Vec::new();
        match &mut self.engine {
            Engine::Star { abbas, .. } => {
                if let [owner, coin] = instance.path() {
                    if coin.label == Label::BinCoin && owner.label == Label::Abba {
                        if let [j] = owner.subs.as_slice() {
                            if (1..=self.n as u32).contains(j) {
                                let acts = abbas[*j as usize - 1].coin(instance, value);
                                self.ingest_star(acts, &mut out);
                            }
                        }
                    }
                }
            }
            Engine::Vector { apva, .. } => {
                let acts = apva.handle_coin(instance, value);
                self.ingest_vector(acts, &mut out);
            }
        }
        self.settle(&mut out);
        out
    }

    /// Share-broadcast actions: deliveries are buffered and compared.
    fn ingest_rbc(&mut self, acts: Vec<Action>, out: &mut Vec<Action>) {
        for act in acts {
            match act {
                Action::Output { instance, value: OutputValue::Payload(p) } => {
                    let comp = instance.first();
                    if let [j] = comp.subs.as_slice() {
                        let j = *j as usize;
                        if self.delivered[j - 1].is_none() {
                            self.delivered[j - 1] = Some(p);
                            self.compare(j, out);
                        }
                    }
                }
                Action::Output { .. } | Action::Terminate { .. } => {}
                other => out.push(other),
            }
        }
    }

    /// Binary-agreement actions: decisions land in the outcome table.
    fn ingest_star(&mut self, acts: Vec<Action>, out: &mut Vec<Action>) {
        let Engine::Star { outs, .. } = &mut self.engine else { return };
        for act in acts {
            match act {
                Action::Output { instance, value: OutputValue::Bit(b) } => {
                    let comp = instance.first();
                    if let [j] = comp.subs.as_slice() {
                        outs[*j as usize - 1].get_or_insert(b);
                    }
                }
                Action::Output { .. } | Action::Terminate { .. } => {}
                other => out.push(other),
            }
        }
    }

    /// Vector-agreement actions: the agreed vector is the engine outcome.
    fn ingest_vector(&mut self, acts: Vec<Action>, out: &mut Vec<Action>) {
        let Engine::Vector { out: engine_out, .. } = &mut self.engine else { return };
        for act in acts {
            match act {
                Action::Output { value: OutputValue::Vector(v), .. } => {
                    engine_out.get_or_insert(v);
                }
                Action::Output { .. } | Action::Terminate { .. } => {}
                other => out.push(other),
            }
        }
    }

    /// Compare j's delivered share against our own encoding and feed the
    /// match bit to the engine. Needs both the delivery and our input.
    fn compare(&mut self, j: usize, out: &mut Vec<Action>) {
        if self.compared[j - 1] {
            return;
        }
        let (Some(own), Some(p)) = (&self.own_shares, &self.delivered[j - 1]) else {
            return;
        };
        self.compared[j - 1] = true;
        let matches = match p {
            RbcPayload::Share(s) => *s == own[j - 1],
            RbcPayload::Vector(_) => false,
        };
        match &mut self.engine {
            Engine::Star { abbas, .. } => {
                let acts = abbas[j - 1].input(matches);
                self.ingest_star(acts, out);
            }
            Engine::Vector { apva, .. } => {
                let acts = apva.entry(j, matches);
                self.ingest_vector(acts, out);
            }
        }
    }

    /// Engine-completion checks and the decode tail.
    fn settle(&mut self, out: &mut Vec<Action>) {
        loop {
            if self.terminated {
                return;
            }
            let mut changed = false;

            if self.agreed.is_none() {
                match &mut self.engine {
                    Engine::Star { abbas, outs, backfilled } => {
                        let decided = outs.iter().filter(|o| o.is_some()).count();
                        if decided >= self.n - self.t && !*backfilled {
                            *backfilled = true;
                            let mut acts = Vec::new();
                            for abba in abbas.iter_mut().filter(|a| !a.has_input()) {
                                acts.extend(abba.input(false));
                            }
                            self.ingest_star(acts, out);
                            changed = true;
                        } else if decided == self.n {
                            let ones = outs
                                .iter()
                                .enumerate()
                                .filter_map(|(i, o)| (*o == Some(true)).then_some(i + 1))
                                .collect();
                            self.agreed = Some(ones);
                            changed = true;
                        }
                    }
                    Engine::Vector { out: engine_out, .. } => {
                        if let Some(v) = engine_out {
                            let ones = (1..=self.n).filter(|j| v.get(*j) == Some(true)).collect();
                            self.agreed = Some(ones);
                            changed = true;
                        }
                    }
                }
            }

            if let Some(ones) = &self.agreed {
                if ones.len() < self.t + 1 {
                    self.finish(OutputValue::BotDefault, out);
                    return;
                }
                let picks = &ones[..self.t + 1];
                let mut shares = Vec::with_capacity(picks.len());
                for k in picks {
                    match &self.delivered[k - 1] {
                        Some(RbcPayload::Share(s)) => shares.push(s.clone()),
                        // A non-share payload behind an agreed one is only
                        // reachable without honest backing, i.e. with the
                        // resilience bound already broken.
                        Some(RbcPayload::Vector(_)) => {
                            self.finish(OutputValue::BotDefault, out);
                            return;
                        }
                        None => return, // wait for the broadcast
                    }
                }
                let value = match ec_decode(self.n, self.t + 1, &shares) {
                    Ok(decoded) => OutputValue::Value(decoded.into_bits()),
                    Err(_) => OutputValue::BotDefault,
                };
                self.finish(value, out);
                return;
            }

            if !changed {
                return;
            }
        }
    }

    fn finish(&mut self, value: OutputValue, out: &mut Vec<Action>) {
        self.output = Some(value.clone());
        self.terminated = true;
        out.push(Action::Output { instance: self.id.clone(), value });
        out.push(Action::Terminate { instance: self.id.clone() });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::CoinOracle;
    use crate::core::{ChildValue, Envelope, Event};
    use std::collections::VecDeque;

    fn run(variant: AbaVariant, n: usize, t: usize, seed: u64, inputs: &[BitString]) -> Vec<AbaNode> {
        let base = InstanceId::new(Label::Aba, "t");
        let mut nodes: Vec<AbaNode> =
            (1..=n as u8).map(|i| AbaNode::new(variant, base.clone(), NodeId(i), n, t)).collect();
        let mut oracle = CoinOracle::new(seed, n, t);
        let mut queue: VecDeque<(NodeId, Event)> = VecDeque::new();
        for i in 0..n {
            let acts = nodes[i].input(inputs[i].clone());
            enqueue(NodeId((i + 1) as u8), acts, &mut queue, n, &mut oracle);
        }
        let mut steps = 0usize;
        while let Some((to, ev)) = queue.pop_front() {
            steps += 1;
            assert!(steps < 20_000_000, "no quiescence");
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

    fn value(seed: u64, bits: usize) -> BitString {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        BitString::random(&mut rng, bits)
    }

    #[test]
    fn star_unanimous_decodes_input() {
        for seed in 0..3 {
            let w = value(seed, 64);
            let nodes = run(AbaVariant::Star, 4, 1, seed, &vec![w.clone(); 4]);
            for node in &nodes {
                assert!(node.terminated(), "seed {seed}: {}", node.stuck_report());
                assert_eq!(node.output(), Some(&OutputValue::Value(w.clone())), "seed {seed}");
            }
        }
    }

    #[test]
    fn vector_unanimous_decodes_input() {
        for seed in 0..3 {
            let w = value(seed + 100, 64);
            let nodes = run(AbaVariant::Vector, 4, 1, seed, &vec![w.clone(); 4]);
            for node in &nodes {
                assert!(node.terminated(), "seed {seed}: {}", node.stuck_report());
                assert_eq!(node.output(), Some(&OutputValue::Value(w.clone())), "seed {seed}");
            }
        }
    }

    #[test]
    fn star_divergent_inputs_agree() {
        for seed in 0..3 {
            let inputs: Vec<BitString> = (0..4).map(|i| value(seed * 10 + i, 64)).collect();
            let nodes = run(AbaVariant::Star, 4, 1, seed, &inputs);
            let first = nodes[0].output().expect("output").clone();
            for node in &nodes {
                assert_eq!(node.output(), Some(&first), "seed {seed}");
            }
        }
    }

    #[test]
    fn vector_divergent_inputs_agree() {
        for seed in 0..3 {
            let inputs: Vec<BitString> = (0..4).map(|i| value(seed * 10 + i + 50, 64)).collect();
            let nodes = run(AbaVariant::Vector, 4, 1, seed, &inputs);
            let first = nodes[0].output().expect("output").clone();
            for node in &nodes {
                assert_eq!(node.output(), Some(&first), "seed {seed}");
            }
        }
    }

    #[test]
    fn seven_node_unanimous_both_variants() {
        let w = value(7, 128);
        for variant in [AbaVariant::Star, AbaVariant::Vector] {
            let nodes = run(variant, 7, 2, 3, &vec![w.clone(); 7]);
            for node in &nodes {
                assert_eq!(
                    node.output(),
                    Some(&OutputValue::Value(w.clone())),
                    "{variant:?}: {}",
                    node.stuck_report()
                );
            }
        }
    }
}
