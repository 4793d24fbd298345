//! Leader-rooted reliable broadcast: echo/ready quorums deliver one payload
//! with Consistency (no two honest nodes deliver differently), Validity (an
//! honest leader's payload is what everyone delivers), and Totality (one
//! honest delivery drags all honest nodes along). Every message carries the
//! full payload; nothing is hashed.

use crate::core::{Action, InstanceId, MsgBody, NodeId, OutputValue, RbcPayload};
use std::collections::{BTreeMap, BTreeSet};

/// One broadcast instance at one node.
#[derive(Clone, Debug)]
pub struct Rbc {
    id: InstanceId,
    me: NodeId,
    n: usize,
    t: usize,
    leader: NodeId,
    init_seen: bool,
    sent_echo: bool,
    sent_ready: bool,
    /// Distinct echo senders per candidate payload.
    echoes: BTreeMap<RbcPayload, BTreeSet<NodeId>>,
    /// Distinct ready senders per candidate payload.
    readies: BTreeMap<RbcPayload, BTreeSet<NodeId>>,
    /// Senders already counted, regardless of payload: only a sender's first
    /// echo (and first ready) counts.
    echoed: BTreeSet<NodeId>,
    readied: BTreeSet<NodeId>,
    delivered: Option<RbcPayload>,
}

impl Rbc {
    pub fn new(id: InstanceId, me: NodeId, n: usize, t: usize, leader: NodeId) -> Self {
        Rbc {
            id,
            me,
            n,
            t,
            leader,
            init_seen: false,
            sent_echo: false,
            sent_ready: false,
            echoes: BTreeMap::new(),
            readies: BTreeMap::new(),
            echoed: BTreeSet::new(),
            readied: BTreeSet::new(),
            delivered: None,
        }
    }

    /// Leader-side input. Non-leader inputs are rejected with no actions.
    pub fn input(&mut self, payload: RbcPayload) -> Vec<Action> {
        if self.me != self.leader || self.delivered.is_some() {
            return Vec::new();
        }
        vec![Action::SendToAll { instance: self.id.clone(), body: MsgBody::RbcInit(payload) }]
    }

    /// Echo quorum: strictly more than (n+t)/2 matching echoes.
    fn echo_quorum(&self) -> usize {
        (self.n + self.t + 1).div_ceil(2)
    }

    pub fn delivered(&self) -> Option<&RbcPayload> {
        self.delivered.as_ref()
    }

    pub fn id(&self) -> &InstanceId {
        &self.id
    }

    pub fn leader(&self) -> NodeId {
        self.leader
    }

    pub fn status(&self) -> String {
        format!(
            "{} leader={} echoes={} readies={} delivered={}",
            self.id,
            self.leader,
            self.echoed.len(),
            self.readied.len(),
            self.delivered.is_some(),
        )
    }

    pub fn step(&mut self, from: NodeId, body: &MsgBody) -> Vec<Action> {
        if self.delivered.is_some() {
            return Vec::new();
        }
        let mut out = Vec::new();
        match body {
            MsgBody::RbcInit(payload) => {
                if from != self.leader || self.init_seen {
                    return Vec::new();
                }
                self.init_seen = true;
                if !self.sent_echo {
                    self.sent_echo = true;
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::RbcEcho(payload.clone()),
                    });
                }
            }
            MsgBody::RbcEcho(payload) => {
                if !self.echoed.insert(from) {
                    return Vec::new();
                }
                self.echoes.entry(payload.clone()).or_default().insert(from);
                let count = self.echoes[payload].len();
                if count >= self.echo_quorum() && !self.sent_ready {
                    self.sent_ready = true;
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::RbcReady(payload.clone()),
                    });
                }
            }
            MsgBody::RbcReady(payload) => {
                if !self.readied.insert(from) {
                    return Vec::new();
                }
                self.readies.entry(payload.clone()).or_default().insert(from);
                let count = self.readies[payload].len();
                if count >= self.t + 1 && !self.sent_ready {
                    self.sent_ready = true;
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::RbcReady(payload.clone()),
                    });
                }
                if count >= 2 * self.t + 1 {
                    self.delivered = Some(payload.clone());
                    out.push(Action::Output {
                        instance: self.id.clone(),
                        value: OutputValue::Payload(payload.clone()),
                    });
                    out.push(Action::Terminate { instance: self.id.clone() });
                }
            }
            _ => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{Label, Share};

    fn payload(b: u8) -> RbcPayload {
        RbcPayload::Share(Share { index: 1, data: vec![b, b] })
    }

    fn setup(n: usize, t: usize, me: u8, leader: u8) -> Rbc {
        let id = InstanceId::new(Label::Rbc, "ba").sub(leader as u32);
        Rbc::new(id, NodeId(me), n, t, NodeId(leader))
    }

    fn has_ready(actions: &[Action]) -> bool {
        actions
            .iter()
            .any(|a| matches!(a, Action::SendToAll { body: MsgBody::RbcReady(_), .. }))
    }

    #[test]
    fn leader_input_broadcasts_init_once() {
        let mut rbc = setup(4, 1, 1, 1);
        let acts = rbc.input(payload(7));
        assert_eq!(acts.len(), 1);
        assert!(matches!(&acts[0], Action::SendToAll { body: MsgBody::RbcInit(_), .. }));
        // Non-leader input is rejected.
        let mut other = setup(4, 1, 2, 1);
        assert!(other.input(payload(7)).is_empty());
    }

    #[test]
    fn echo_then_ready_then_deliver_thresholds() {
        // n=4, t=1: echo quorum 3, amplify 2, deliver 3.
        let mut rbc = setup(4, 1, 2, 1);
        let p = payload(9);
        let acts = rbc.step(NodeId(1), &MsgBody::RbcInit(p.clone()));
        assert!(matches!(&acts[0], Action::SendToAll { body: MsgBody::RbcEcho(_), .. }));

        assert!(!has_ready(&rbc.step(NodeId(1), &MsgBody::RbcEcho(p.clone()))));
        assert!(!has_ready(&rbc.step(NodeId(2), &MsgBody::RbcEcho(p.clone()))));
        assert!(has_ready(&rbc.step(NodeId(3), &MsgBody::RbcEcho(p.clone()))));

        rbc.step(NodeId(1), &MsgBody::RbcReady(p.clone()));
        rbc.step(NodeId(2), &MsgBody::RbcReady(p.clone()));
        let acts = rbc.step(NodeId(3), &MsgBody::RbcReady(p.clone()));
        assert!(acts.iter().any(|a| matches!(a, Action::Output { .. })));
        assert_eq!(rbc.delivered(), Some(&p));
        // Post-delivery absorption.
        assert!(rbc.step(NodeId(4), &MsgBody::RbcReady(p.clone())).is_empty());
    }

    #[test]
    fn ready_amplification_without_echo_quorum() {
        let mut rbc = setup(4, 1, 2, 1);
        let p = payload(3);
        assert!(!has_ready(&rbc.step(NodeId(3), &MsgBody::RbcReady(p.clone()))));
        // t+1 matching readies force our own ready even with no echoes.
        assert!(has_ready(&rbc.step(NodeId(4), &MsgBody::RbcReady(p.clone()))));
    }

    #[test]
    fn duplicate_and_conflicting_senders_count_once() {
        let mut rbc = setup(4, 1, 2, 1);
        let p = payload(1);
        let q = payload(2);
        rbc.step(NodeId(3), &MsgBody::RbcEcho(p.clone()));
        // Same sender echoing again (same or different payload) is ignored.
        rbc.step(NodeId(3), &MsgBody::RbcEcho(p.clone()));
        rbc.step(NodeId(3), &MsgBody::RbcEcho(q.clone()));
        rbc.step(NodeId(4), &MsgBody::RbcEcho(p.clone()));
        assert!(!has_ready(&rbc.step(NodeId(4), &MsgBody::RbcEcho(q.clone()))));
        // Third distinct sender on p reaches the quorum.
        assert!(has_ready(&rbc.step(NodeId(1), &MsgBody::RbcEcho(p.clone()))));
    }

    #[test]
    fn init_from_non_leader_is_ignored() {
        let mut rbc = setup(4, 1, 2, 1);
        assert!(rbc.step(NodeId(3), &MsgBody::RbcInit(payload(5))).is_empty());
        assert!(!rbc.step(NodeId(1), &MsgBody::RbcInit(payload(5))).is_empty());
    }

    #[test]
    fn vector_payloads_work_too() {
        let mut w = crate::core::PartialVector::new(4);
        w.set(1, true);
        let p = RbcPayload::Vector(w);
        let mut rbc = setup(4, 1, 2, 1);
        rbc.step(NodeId(1), &MsgBody::RbcReady(p.clone()));
        rbc.step(NodeId(2), &MsgBody::RbcReady(p.clone()));
        rbc.step(NodeId(3), &MsgBody::RbcReady(p.clone()));
        assert_eq!(rbc.delivered(), Some(&p));
    }
}
