//! Uniform wrapper over every runnable protocol machine, so the simulator
//! can drive full agreement nodes and standalone primitive nodes through
//! one interface: feed an event, collect actions, ask for termination.

use crate::aba::{AbaNode, AbaVariant};
use crate::abba::Abba;
use crate::abbba::Abbba;
use crate::apva::Apva;
use crate::core::{Action, Event, InstanceId, Label, NodeId, ProtocolInput};
use crate::rbc::Rbc;

/// Which machine a node runs.
pub enum NodeKind {
    Aba(Box<AbaNode>),
    Rbc(Rbc),
    Abba(Abba),
    Abbba(Abbba),
    Apva(Box<Apva>),
}

/// One simulated protocol participant.
pub struct Node {
    me: NodeId,
    kind: NodeKind,
}

impl Node {
    pub fn new_aba(variant: AbaVariant, me: NodeId, n: usize, t: usize) -> Self {
        let id = InstanceId::new(Label::Aba, "run");
        Node { me, kind: NodeKind::Aba(Box::new(AbaNode::new(variant, id, me, n, t))) }
    }

    /// Standalone broadcast node; every node agrees on who leads.
    pub fn new_rbc(me: NodeId, n: usize, t: usize, leader: NodeId) -> Self {
        let id = InstanceId::new(Label::Rbc, "run").sub(leader.0 as u32);
        Node { me, kind: NodeKind::Rbc(Rbc::new(id, me, n, t, leader)) }
    }

    pub fn new_abba(me: NodeId, n: usize, t: usize) -> Self {
        let id = InstanceId::new(Label::Abba, "run").sub(1);
        Node { me, kind: NodeKind::Abba(Abba::new(id, n, t)) }
    }

    pub fn new_abbba(me: NodeId, n: usize, t: usize) -> Self {
        let id = InstanceId::new(Label::Abbba, "run").sub(1).sub(1);
        Node { me, kind: NodeKind::Abbba(Abbba::new(id, n, t)) }
    }

    pub fn new_apva(me: NodeId, n: usize, t: usize) -> Self {
        let base = InstanceId::new(Label::Apva, "run");
        Node { me, kind: NodeKind::Apva(Box::new(Apva::new(base, me, n, t))) }
    }

    pub fn me(&self) -> NodeId {
        self.me
    }

    /// The whole node is done: its top-level machine has output.
    pub fn terminated(&self) -> bool {
        match &self.kind {
            NodeKind::Aba(x) => x.terminated(),
            NodeKind::Rbc(x) => x.delivered().is_some(),
            NodeKind::Abba(x) => x.terminated(),
            NodeKind::Abbba(x) => x.terminated(),
            NodeKind::Apva(x) => x.terminated(),
        }
    }

    /// Election rounds consumed by the top-level machine, if it has any.
    pub fn election_rounds(&self) -> u32 {
        match &self.kind {
            NodeKind::Aba(x) => x.election_rounds(),
            NodeKind::Apva(x) => x.current_round(),
            _ => 0,
        }
    }

    pub fn stuck_report(&self) -> String {
        match &self.kind {
            NodeKind::Aba(x) => x.stuck_report(),
            NodeKind::Rbc(x) => x.status(),
            NodeKind::Abba(x) => x.status(),
            NodeKind::Abbba(x) => x.status(),
            NodeKind::Apva(x) => x.stuck_report(),
        }
    }

    pub fn handle(&mut self, ev: &Event) -> Vec<Action> {
        match ev {
            Event::ExternalInput { instance, input } => self.external(instance, input),
            Event::PeerMessage(env) => match &mut self.kind {
                NodeKind::Aba(x) => x.handle_message(env.from, &env.instance, &env.body),
                NodeKind::Rbc(x) if env.instance == *x.id() => x.step(env.from, &env.body),
                NodeKind::Abba(x) if env.instance == *x.id() => x.step(env.from, &env.body),
                NodeKind::Abbba(x) if env.instance == *x.id() => x.step(env.from, &env.body),
                NodeKind::Apva(x) => x.handle_message(env.from, &env.instance, &env.body),
                _ => Vec::new(),
            },
            Event::ChildOutput { instance, value } => {
                let crate::core::ChildValue::Coin(v) = value else {
                    return Vec::new();
                };
                match &mut self.kind {
                    NodeKind::Aba(x) => x.handle_coin(instance, *v),
                    NodeKind::Abba(x) => x.coin(instance, *v),
                    NodeKind::Apva(x) => x.handle_coin(instance, *v),
                    _ => Vec::new(),
                }
            }
        }
    }

    fn external(&mut self, _instance: &InstanceId, input: &ProtocolInput) -> Vec<Action> {
        match (&mut self.kind, input) {
            (NodeKind::Aba(x), ProtocolInput::Value(w)) => x.input(w.clone()),
            (NodeKind::Rbc(x), ProtocolInput::Broadcast(p)) => x.input(p.clone()),
            (NodeKind::Abba(x), ProtocolInput::Bit(b)) => x.input(*b),
            (NodeKind::Abbba(x), ProtocolInput::Pair { alpha, beta }) => x.input(*alpha, *beta),
            (NodeKind::Apva(x), ProtocolInput::Entry { j, bit }) => x.entry(*j as usize, *bit),
            _ => Vec::new(),
        }
    }
}
