//! Deterministic single-run simulator. A scenario fixes the protocol, the
//! population, the corruption set and behavior, the reordering strategy,
//! and one RNG seed; the run delivers one pending item at a time, feeds it
//! to the addressed participant, and requeues whatever actions come back.
//! Everything a run produces (traffic totals, outputs, stuck diagnostics,
//! delivery audits) lands in one report.

use crate::coin::CoinOracle;
use crate::codec::ec_encode;
use crate::core::{
    Action, BitString, ChildValue, Envelope, Event, InstanceId, Label, MsgBody, NodeId,
    OutputValue, PartialVector, ProtocolInput, RbcPayload, Share,
};
use crate::net::{PendingItem, PendingQueue, Scheduler, SchedulerKind};
use crate::node::Node;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Runnable protocols: the two full agreement builds plus each primitive
/// standalone, for focused campaigns.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Protocol {
    Star,
    Vector,
    Rbc,
    Abba,
    Abbba,
    Apva,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Star => "ocioraba-star",
            Protocol::Vector => "ocioraba",
            Protocol::Rbc => "rbc",
            Protocol::Abba => "abba",
            Protocol::Abbba => "abbba",
            Protocol::Apva => "apva",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s {
            "ocioraba-star" | "star" => Some(Protocol::Star),
            "ocioraba" | "vector" => Some(Protocol::Vector),
            "rbc" => Some(Protocol::Rbc),
            "abba" => Some(Protocol::Abba),
            "abbba" => Some(Protocol::Abbba),
            "apva" => Some(Protocol::Apva),
            _ => None,
        }
    }

    /// Whether the election-driven vector agreement runs inside.
    pub fn uses_apva(&self) -> bool {
        matches!(self, Protocol::Vector | Protocol::Apva)
    }
}

/// How inputs are assigned across nodes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InputMode {
    Unanimous,
    Random,
    Split,
}

impl InputMode {
    pub fn name(&self) -> &'static str {
        match self {
            InputMode::Unanimous => "unanimous",
            InputMode::Random => "random",
            InputMode::Split => "split",
        }
    }

    pub fn parse(s: &str) -> Option<InputMode> {
        match s {
            "unanimous" => Some(InputMode::Unanimous),
            "random" => Some(InputMode::Random),
            "split" => Some(InputMode::Split),
            _ => None,
        }
    }

    pub fn all() -> [InputMode; 3] {
        [InputMode::Unanimous, InputMode::Random, InputMode::Split]
    }
}

/// Corruption behavior of the byzantine set.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Adversary {
    None,
    Silent,
    CrashAfterK,
    Equivocator,
    RandomNoise,
}

impl Adversary {
    pub fn name(&self) -> &'static str {
        match self {
            Adversary::None => "none",
            Adversary::Silent => "silent",
            Adversary::CrashAfterK => "crash-after-k",
            Adversary::Equivocator => "equivocator",
            Adversary::RandomNoise => "random-noise",
        }
    }

    pub fn parse(s: &str) -> Option<Adversary> {
        match s {
            "none" => Some(Adversary::None),
            "silent" => Some(Adversary::Silent),
            "crash-after-k" => Some(Adversary::CrashAfterK),
            "equivocator" => Some(Adversary::Equivocator),
            "random-noise" => Some(Adversary::RandomNoise),
            _ => None,
        }
    }

    pub fn all_faulty() -> [Adversary; 4] {
        [Adversary::Silent, Adversary::CrashAfterK, Adversary::Equivocator, Adversary::RandomNoise]
    }
}

/// One complete run description. Identical configs replay identically.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub protocol: Protocol,
    pub n: usize,
    pub t: usize,
    pub ell: usize,
    pub input_mode: InputMode,
    pub adversary: Adversary,
    pub byzantine: BTreeSet<NodeId>,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub max_steps: u64,
}

impl ScenarioConfig {
    pub fn new(protocol: Protocol, n: usize, t: usize, seed: u64) -> Self {
        ScenarioConfig {
            protocol,
            n,
            t,
            ell: 64,
            input_mode: InputMode::Unanimous,
            adversary: Adversary::None,
            byzantine: BTreeSet::new(),
            scheduler: SchedulerKind::Fifo,
            seed,
            max_steps: 200_000_000,
        }
    }

    /// Every pending item must be delivered within this many deliveries of
    /// its enqueue position.
    pub fn fairness_bound(&self) -> u64 {
        8 * (self.n * self.n) as u64
    }

    /// Seed-derived corruption set of size t (empty for the none adversary).
    pub fn with_seeded_byzantine(mut self, adversary: Adversary) -> Self {
        self.adversary = adversary;
        self.byzantine = if adversary == Adversary::None {
            BTreeSet::new()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0xB12B_1221_D00D_F00Du64);
            let mut set = BTreeSet::new();
            while set.len() < self.t {
                set.insert(NodeId(rng.gen_range(1..=self.n as u8)));
            }
            set
        };
        self
    }
}

/// Honest traffic accounting, tagged by the protocol family of the
/// envelope's root identity. Corrupt-node traffic is tracked separately and
/// never mixes into the honest totals.
#[derive(Clone, Debug, Default)]
pub struct Metrics {
    pub bits: BTreeMap<Label, u64>,
    pub msgs: BTreeMap<Label, u64>,
    pub byz_bits: u64,
    pub byz_msgs: u64,
}

impl Metrics {
    pub fn total_bits(&self) -> u64 {
        self.bits.values().sum()
    }

    pub fn bits_for(&self, label: Label) -> u64 {
        self.bits.get(&label).copied().unwrap_or(0)
    }
}

/// Everything one run produced.
pub struct RunReport {
    pub config: ScenarioConfig,
    pub metrics: Metrics,
    pub outputs: BTreeMap<NodeId, OutputValue>,
    pub completion: BTreeMap<NodeId, u64>,
    pub elections: u32,
    /// Stuck diagnostics for honest nodes that never finished; None when
    /// every honest node terminated.
    pub liveness: Option<Vec<String>>,
    pub forced: u64,
    pub max_lateness: u64,
    pub deliveries: u64,
    pub input_ledger: Vec<(NodeId, ProtocolInput)>,
}

impl RunReport {
    pub fn honest(&self) -> impl Iterator<Item = NodeId> + '_ {
        NodeId::all(self.config.n).filter(|id| !self.config.byzantine.contains(id))
    }

    pub fn decided(&self) -> String {
        self.honest()
            .find_map(|id| self.outputs.get(&id))
            .map_or_else(|| "NONE".to_string(), |v| v.render())
    }

    pub fn all_honest_agree(&self) -> bool {
        let mut first: Option<&OutputValue> = None;
        for id in self.honest() {
            match self.outputs.get(&id) {
                None => return false,
                Some(v) => match first {
                    None => first = Some(v),
                    Some(f) if f != v => return false,
                    _ => {}
                },
            }
        }
        first.is_some()
    }

    pub fn completion_step(&self) -> u64 {
        let all_done = self.honest().all(|id| self.completion.contains_key(&id));
        if all_done {
            self.honest().filter_map(|id| self.completion.get(&id)).copied().max().unwrap_or(0)
        } else {
            self.deliveries
        }
    }

    /// Vote, check, and agreement traffic of the vector-agreement stack.
    pub fn bits_apva(&self) -> u64 {
        if self.config.protocol.uses_apva() {
            self.metrics.bits_for(Label::Acidd)
                + self.metrics.bits_for(Label::Abbba)
                + self.metrics.bits_for(Label::Abba)
        } else {
            0
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.config.seed,
            self.config.protocol.name(),
            self.config.n,
            self.config.t,
            self.config.ell,
            self.config.adversary.name(),
            self.config.scheduler.name(),
            self.metrics.total_bits(),
            self.metrics.bits_for(Label::Rbc),
            self.bits_apva(),
            self.metrics.bits_for(Label::Abba),
            self.metrics.bits_for(Label::Acidd),
            self.elections,
            self.completion_step(),
            self.decided(),
            self.all_honest_agree(),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "seed": self.config.seed,
            "protocol": self.config.protocol.name(),
            "n": self.config.n,
            "t": self.config.t,
            "ell": self.config.ell,
            "input_mode": self.config.input_mode.name(),
            "adversary": self.config.adversary.name(),
            "byzantine": self.config.byzantine.iter().map(|x| x.0).collect::<Vec<_>>(),
            "scheduler": self.config.scheduler.name(),
            "total_bits": self.metrics.total_bits(),
            "bits_rbc": self.metrics.bits_for(Label::Rbc),
            "bits_apva": self.bits_apva(),
            "bits_abba": self.metrics.bits_for(Label::Abba),
            "bits_abbba": self.metrics.bits_for(Label::Abbba),
            "bits_acidd": self.metrics.bits_for(Label::Acidd),
            "byz_bits": self.metrics.byz_bits,
            "elections": self.elections,
            "completion_step": self.completion_step(),
            "deliveries": self.deliveries,
            "forced_deliveries": self.forced,
            "max_lateness": self.max_lateness,
            "decided": self.decided(),
            "all_honest_agree": self.all_honest_agree(),
            "outputs": self.outputs.iter()
                .map(|(id, v)| (id.0.to_string(), v.render()))
                .collect::<BTreeMap<_, _>>(),
            "inputs": self.input_ledger.iter()
                .map(|(id, input)| format!("{id}<-{}", render_input(input)))
                .collect::<Vec<_>>(),
            "liveness_failures": self.liveness,
        })
    }

    /// Honest inputs, for property checks against what came out.
    pub fn honest_inputs(&self) -> impl Iterator<Item = (NodeId, &ProtocolInput)> + '_ {
        self.input_ledger
            .iter()
            .filter(|(id, _)| !self.config.byzantine.contains(id))
            .map(|(id, input)| (*id, input))
    }
}

pub fn csv_header() -> &'static str {
    "seed,protocol,n,t,ell,adversary,scheduler,total_bits,bits_rbc,bits_apva,bits_abba,\
     bits_acidd,elections,completion_step,decided,all_honest_agree"
}

/// A corrupt participant.
struct ByzNode {
    kind: Adversary,
    n: usize,
    inner: Option<Node>,
    deliveries: u64,
    crash_at: u64,
}

impl ByzNode {
    fn new(kind: Adversary, me: NodeId, n: usize, seed: u64, inner: Node) -> Self {
        let crash_at = ChaCha8Rng::seed_from_u64(
            seed ^ (me.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )
        .gen_range(1..=64);
        let inner = match kind {
            Adversary::CrashAfterK | Adversary::Equivocator => Some(inner),
            _ => None,
        };
        ByzNode { kind, n, inner, deliveries: 0, crash_at }
    }

    fn handle<R: Rng>(&mut self, ev: &Event, rng: &mut R) -> Vec<Action> {
        self.deliveries += 1;
        match self.kind {
            Adversary::None | Adversary::Silent => Vec::new(),
            Adversary::CrashAfterK => {
                if self.deliveries > self.crash_at {
                    Vec::new()
                } else {
                    self.inner.as_mut().expect("inner node").handle(ev)
                }
            }
            Adversary::Equivocator => {
                let acts = self.inner.as_mut().expect("inner node").handle(ev);
                self.equivocate(acts)
            }
            Adversary::RandomNoise => self.noise(ev, rng),
        }
    }

    /// Split every broadcast: half the recipients get the true message,
    /// half get a well-formed twist of it.
    fn equivocate(&self, acts: Vec<Action>) -> Vec<Action> {
        let mut out = Vec::new();
        for act in acts {
            match act {
                Action::SendToAll { instance, body } => {
                    let twisted = perturb(&body, self.n);
                    for to in NodeId::all(self.n) {
                        let b = if to.0 as usize <= self.n / 2 { body.clone() } else { twisted.clone() };
                        out.push(Action::SendTo { to, instance: instance.clone(), body: b });
                    }
                }
                other => out.push(other),
            }
        }
        out
    }

    /// Zero to two well-formed messages on the stimulating instance, to
    /// random recipients.
    fn noise<R: Rng>(&self, ev: &Event, rng: &mut R) -> Vec<Action> {
        let Event::PeerMessage(env) = ev else { return Vec::new() };
        let count = match rng.gen_range(0..10u8) {
            0..=4 => 0,
            5..=7 => 1,
            _ => 2,
        };
        (0..count)
            .map(|_| Action::SendTo {
                to: NodeId(rng.gen_range(1..=self.n as u8)),
                instance: env.instance.clone(),
                body: random_body(env.instance.leaf_label(), self.n, rng),
            })
            .collect()
    }
}

/// A well-formed variation of a message: same shape, different content.
fn perturb(body: &MsgBody, n: usize) -> MsgBody {
    let twist_payload = |p: &RbcPayload| match p {
        RbcPayload::Share(s) => {
            let mut s = s.clone();
            match s.data.first_mut() {
                Some(b) => *b ^= 1,
                None => s.index = s.index % n as u8 + 1,
            }
            RbcPayload::Share(s)
        }
        RbcPayload::Vector(w) => {
            let mut raw: Vec<u8> = (1..=w.len()).map(|j| w.raw(j)).collect();
            raw[0] = match raw[0] {
                0 => 1,
                1 => 0,
                _ => 0,
            };
            RbcPayload::Vector(PartialVector::from_raw(raw).expect("valid elements"))
        }
    };
    match body {
        MsgBody::RbcInit(p) => MsgBody::RbcInit(twist_payload(p)),
        MsgBody::RbcEcho(p) => MsgBody::RbcEcho(twist_payload(p)),
        MsgBody::RbcReady(p) => MsgBody::RbcReady(twist_payload(p)),
        MsgBody::Est { round, bit } => MsgBody::Est { round: *round, bit: !bit },
        MsgBody::Aux { round, bit } => MsgBody::Aux { round: *round, bit: !bit },
        MsgBody::Term { bit } => MsgBody::Term { bit: !bit },
        MsgBody::AbbbaValue { alpha, beta } => MsgBody::AbbbaValue { alpha: !alpha, beta: *beta },
        MsgBody::Vote { j, b } => MsgBody::Vote { j: *j, b: !b },
        MsgBody::Ready { j, b } => MsgBody::Ready { j: *j, b: !b },
        MsgBody::Finish { j, b } => MsgBody::Finish { j: *j, b: !b },
        MsgBody::VectorReady { j } => MsgBody::VectorReady { j: j % n as u8 + 1 },
        MsgBody::VectorFinish { j } => MsgBody::VectorFinish { j: j % n as u8 + 1 },
        MsgBody::Election => MsgBody::Confirm,
        MsgBody::Confirm => MsgBody::Election,
        MsgBody::CoinValue { value } => MsgBody::CoinValue { value: *value },
    }
}

fn random_body<R: Rng>(label: Label, n: usize, rng: &mut R) -> MsgBody {
    let j = rng.gen_range(1..=n as u8);
    let b = rng.gen_bool(0.5);
    match label {
        Label::Rbc => {
            let share = RbcPayload::Share(Share { index: j, data: vec![rng.gen(), rng.gen()] });
            match rng.gen_range(0..3u8) {
                0 => MsgBody::RbcInit(share),
                1 => MsgBody::RbcEcho(share),
                _ => MsgBody::RbcReady(share),
            }
        }
        Label::Abba => match rng.gen_range(0..3u8) {
            0 => MsgBody::Est { round: rng.gen_range(0..4), bit: b },
            1 => MsgBody::Aux { round: rng.gen_range(0..4), bit: b },
            _ => MsgBody::Term { bit: b },
        },
        Label::Abbba => MsgBody::AbbbaValue { alpha: b, beta: rng.gen_bool(0.5) },
        Label::Acidd => match rng.gen_range(0..7u8) {
            0 => MsgBody::Vote { j, b },
            1 => MsgBody::Ready { j, b },
            2 => MsgBody::Finish { j, b },
            3 => MsgBody::VectorReady { j },
            4 => MsgBody::VectorFinish { j },
            5 => MsgBody::Election,
            _ => MsgBody::Confirm,
        },
        _ => MsgBody::Election,
    }
}

enum Participant {
    Honest(Node),
    Byz(ByzNode),
}

impl Participant {
    fn is_honest(&self) -> bool {
        matches!(self, Participant::Honest(_))
    }
}

fn build_node(cfg: &ScenarioConfig, me: NodeId) -> Node {
    match cfg.protocol {
        Protocol::Star => Node::new_aba(crate::aba::AbaVariant::Star, me, cfg.n, cfg.t),
        Protocol::Vector => Node::new_aba(crate::aba::AbaVariant::Vector, me, cfg.n, cfg.t),
        Protocol::Rbc => Node::new_rbc(me, cfg.n, cfg.t, NodeId(1)),
        Protocol::Abba => Node::new_abba(me, cfg.n, cfg.t),
        Protocol::Abbba => Node::new_abbba(me, cfg.n, cfg.t),
        Protocol::Apva => Node::new_apva(me, cfg.n, cfg.t),
    }
}

/// Split mode divides the honest nodes into two near-equal camps (sizes
/// ceil(h/2) and floor(h/2), by id order); corrupt nodes join the first
/// camp. True for the first camp.
fn first_camp(cfg: &ScenarioConfig, id: NodeId) -> bool {
    if cfg.byzantine.contains(&id) {
        return true;
    }
    let honest: Vec<NodeId> = NodeId::all(cfg.n).filter(|x| !cfg.byzantine.contains(x)).collect();
    let camp_a = honest.len().div_ceil(2);
    honest.iter().position(|x| *x == id).expect("honest id") < camp_a
}

/// Input assignment for the run; scheduled through the queue so even input
/// arrival order is adversarial.
fn make_inputs<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<(NodeId, ProtocolInput)> {
    let mut inputs = Vec::new();
    match cfg.protocol {
        Protocol::Star | Protocol::Vector => {
            let shared = BitString::random(rng, cfg.ell);
            let split_alt = BitString::random(rng, cfg.ell);
            for id in NodeId::all(cfg.n) {
                let w = match cfg.input_mode {
                    InputMode::Unanimous => shared.clone(),
                    InputMode::Random => BitString::random(rng, cfg.ell),
                    InputMode::Split => {
                        if first_camp(cfg, id) {
                            shared.clone()
                        } else {
                            split_alt.clone()
                        }
                    }
                };
                inputs.push((id, ProtocolInput::Value(w)));
            }
        }
        Protocol::Rbc => {
            // The leader broadcasts a real share of a random message.
            let msg = BitString::random(rng, cfg.ell);
            let shares = ec_encode(cfg.n, cfg.t + 1, &msg).expect("encode");
            inputs.push((NodeId(1), ProtocolInput::Broadcast(RbcPayload::Share(shares[0].clone()))));
        }
        Protocol::Abba => {
            let shared = rng.gen_bool(0.5);
            for id in NodeId::all(cfg.n) {
                let bit = match cfg.input_mode {
                    InputMode::Unanimous => shared,
                    InputMode::Random => rng.gen_bool(0.5),
                    InputMode::Split => first_camp(cfg, id),
                };
                inputs.push((id, ProtocolInput::Bit(bit)));
            }
        }
        Protocol::Abbba => {
            let shared = (rng.gen_bool(0.5), rng.gen_bool(0.5));
            for id in NodeId::all(cfg.n) {
                let (alpha, beta) = match cfg.input_mode {
                    InputMode::Unanimous => shared,
                    InputMode::Random => (rng.gen_bool(0.5), rng.gen_bool(0.5)),
                    InputMode::Split => {
                        if first_camp(cfg, id) {
                            (true, true)
                        } else {
                            (false, false)
                        }
                    }
                };
                inputs.push((id, ProtocolInput::Pair { alpha, beta }));
            }
        }
        Protocol::Apva => {
            for id in NodeId::all(cfg.n) {
                for j in 1..=cfg.n {
                    let bit = match cfg.input_mode {
                        InputMode::Unanimous => true,
                        InputMode::Random => rng.gen_bool(0.5),
                        InputMode::Split => j <= cfg.n - cfg.t,
                    };
                    inputs.push((id, ProtocolInput::Entry { j: j as u8, bit }));
                }
            }
        }
    }
    inputs
}

fn input_instance(cfg: &ScenarioConfig) -> InstanceId {
    match cfg.protocol {
        Protocol::Star | Protocol::Vector => InstanceId::new(Label::Aba, "run"),
        Protocol::Rbc => InstanceId::new(Label::Rbc, "run").sub(1),
        Protocol::Abba => InstanceId::new(Label::Abba, "run").sub(1),
        Protocol::Abbba => InstanceId::new(Label::Abbba, "run").sub(1).sub(1),
        Protocol::Apva => InstanceId::new(Label::Apva, "run"),
    }
}

fn render_input(input: &ProtocolInput) -> String {
    match input {
        ProtocolInput::Value(w) => format!("value:{}", w.to_hex()),
        ProtocolInput::Entry { j, bit } => format!("entry:{j}={}", *bit as u8),
        ProtocolInput::Pair { alpha, beta } => format!("pair:{},{}", *alpha as u8, *beta as u8),
        ProtocolInput::Broadcast(p) => format!("broadcast:{}", OutputValue::Payload(p.clone()).render()),
        ProtocolInput::Bit(b) => format!("bit:{}", *b as u8),
        ProtocolInput::Activate => "activate".to_string(),
    }
}

/// Execute one scenario to completion, quiescence, or the step ceiling.
pub fn run_scenario(cfg: &ScenarioConfig) -> RunReport {
    assert!(cfg.n >= 1 && cfg.n <= 255, "population out of range");
    assert!(cfg.byzantine.iter().all(|id| id.0 >= 1 && (id.0 as usize) <= cfg.n));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sched = Scheduler::new(cfg.scheduler, cfg.n, cfg.t, &cfg.byzantine);
    let mut queue = PendingQueue::new(cfg.fairness_bound());
    let mut oracle = CoinOracle::new(cfg.seed ^ 0x0C01_0C01_0C01_0C01, cfg.n, cfg.t);

    let mut participants: Vec<Participant> = NodeId::all(cfg.n)
        .map(|me| {
            let node = build_node(cfg, me);
            if cfg.byzantine.contains(&me) {
                Participant::Byz(ByzNode::new(cfg.adversary, me, cfg.n, cfg.seed, node))
            } else {
                Participant::Honest(node)
            }
        })
        .collect();

    let instance = input_instance(cfg);
    let mut input_ledger = Vec::new();
    for (to, input) in make_inputs(cfg, &mut rng) {
        input_ledger.push((to, input.clone()));
        queue.push(PendingItem::Input { to, instance: instance.clone(), input }, &sched);
    }

    let mut metrics = Metrics::default();
    let mut outputs: BTreeMap<NodeId, OutputValue> = BTreeMap::new();
    let mut completion: BTreeMap<NodeId, u64> = BTreeMap::new();

    loop {
        let honest_done = participants.iter().all(|p| match p {
            Participant::Honest(node) => node.terminated(),
            Participant::Byz(_) => true,
        });
        if honest_done || queue.is_empty() || queue.delivered() >= cfg.max_steps {
            break;
        }
        let item = queue.pop(&sched, &mut rng).expect("non-empty queue");
        let to = item.recipient();
        let ev = match item {
            PendingItem::Net(env) => Event::PeerMessage(env),
            PendingItem::Input { instance, input, .. } => {
                Event::ExternalInput { instance, input }
            }
            PendingItem::Coin { instance, value, .. } => {
                Event::ChildOutput { instance, value: ChildValue::Coin(value) }
            }
        };
        let participant = &mut participants[to.index()];
        let honest = participant.is_honest();
        let acts = match participant {
            Participant::Honest(node) => node.handle(&ev),
            Participant::Byz(byz) => byz.handle(&ev, &mut rng),
        };
        for act in acts {
            match act {
                Action::SendToAll { instance, body } => {
                    for dest in NodeId::all(cfg.n) {
                        let env = Envelope {
                            from: to,
                            to: dest,
                            instance: instance.clone(),
                            body: body.clone(),
                        };
                        account(&mut metrics, honest, &env, cfg.n);
                        queue.push(PendingItem::Net(env), &sched);
                    }
                }
                Action::SendTo { to: dest, instance, body } => {
                    let env = Envelope { from: to, to: dest, instance, body };
                    account(&mut metrics, honest, &env, cfg.n);
                    queue.push(PendingItem::Net(env), &sched);
                }
                Action::ChildInput { instance, .. } => {
                    if let Some(callers) = oracle.activate(&instance, to) {
                        let value = oracle.value_for(&instance);
                        for caller in callers {
                            queue.push(
                                PendingItem::Coin { to: caller, instance: instance.clone(), value },
                                &sched,
                            );
                        }
                    }
                }
                Action::Output { value, .. } => {
                    if honest {
                        outputs.entry(to).or_insert(value);
                        completion.entry(to).or_insert_with(|| queue.delivered());
                    }
                }
                Action::Terminate { .. } => {}
            }
        }
    }

    let mut stuck = Vec::new();
    let mut elections = 0u32;
    for p in &participants {
        if let Participant::Honest(node) = p {
            elections = elections.max(node.election_rounds());
            if !node.terminated() {
                stuck.push(format!("node {}: {}", node.me(), node.stuck_report()));
            }
        }
    }

    RunReport {
        config: cfg.clone(),
        metrics,
        outputs,
        completion,
        elections,
        liveness: if stuck.is_empty() { None } else { Some(stuck) },
        forced: queue.forced(),
        max_lateness: queue.max_lateness(),
        deliveries: queue.delivered(),
        input_ledger,
    }
}

fn account(metrics: &mut Metrics, honest: bool, env: &Envelope, n: usize) {
    let cost = env.bit_cost(n);
    if honest {
        *metrics.bits.entry(env.instance.root_label()).or_insert(0) += cost;
        *metrics.msgs.entry(env.instance.root_label()).or_insert(0) += 1;
    } else {
        metrics.byz_bits += cost;
        metrics.byz_msgs += 1;
    }
}
