//! Dispersal core with dual-threshold completion records. Nodes vote on
//! per-index bits; cascaded vote/ready/finish quorums fill a confirm vector
//! until it has n-t entries, which this node then hands to its parent for
//! broadcast. A second quorum cascade tracks which confirm vectors finished
//! broadcasting, and an election/confirm handshake ends the phase: after
//! 2t+1 confirms the machine "returns", meaning the parent may start
//! electing leaders. The indicator arrays stay live after the return: they
//! only ever go 0 to 1, and the parent reads them at input time, so later
//! progress is never lost.

use crate::core::{Action, InstanceId, MsgBody, NodeId, PartialVector};
use std::collections::BTreeSet;

/// Distinct-sender tallies keyed by (index, bit).
#[derive(Clone, Debug)]
struct DualTally {
    senders: [Vec<BTreeSet<NodeId>>; 2],
}

impl DualTally {
    fn new(n: usize) -> Self {
        DualTally { senders: [vec![BTreeSet::new(); n], vec![BTreeSet::new(); n]] }
    }

    /// Inserts and returns the new count.
    fn add(&mut self, j: usize, b: bool, from: NodeId) -> usize {
        let set = &mut self.senders[b as usize][j - 1];
        set.insert(from);
        set.len()
    }
}

/// Per-(index, bit) flag pair.
#[derive(Clone, Debug)]
struct DualFlag {
    flags: [Vec<bool>; 2],
}

impl DualFlag {
    fn new(n: usize) -> Self {
        DualFlag { flags: [vec![false; n], vec![false; n]] }
    }

    fn get(&self, j: usize, b: bool) -> bool {
        self.flags[b as usize][j - 1]
    }

    fn set(&mut self, j: usize, b: bool) {
        self.flags[b as usize][j - 1] = true;
    }
}

/// One dispersal-core instance at one node.
#[derive(Clone, Debug)]
pub struct Acidd {
    id: InstanceId,
    me: NodeId,
    n: usize,
    t: usize,
    vote_tally: DualTally,
    ready_tally: DualTally,
    finish_tally: DualTally,
    vready_tally: Vec<BTreeSet<NodeId>>,
    vfinish_tally: Vec<BTreeSet<NodeId>>,
    election_senders: BTreeSet<NodeId>,
    confirm_senders: BTreeSet<NodeId>,
    sent_vote: DualFlag,
    ready_fired: DualFlag,
    finish_fired: DualFlag,
    /// One-votes confirmed: t+1 senders backed (j, b).
    r_record: DualFlag,
    /// Finish records: n-t ready senders for (j, b).
    f_record: DualFlag,
    /// Confirm-vector broadcast from j delivered here.
    g_record: Vec<bool>,
    /// n-t nodes reported j's broadcast delivered.
    h_record: Vec<bool>,
    confirm_vec: PartialVector,
    confirm_count: usize,
    delivered: Option<PartialVector>,
    election_sent: bool,
    confirm_sent: bool,
    returned: bool,
}

impl Acidd {
    pub fn new(id: InstanceId, me: NodeId, n: usize, t: usize) -> Self {
        Acidd {
            id,
            me,
            n,
            t,
            vote_tally: DualTally::new(n),
            ready_tally: DualTally::new(n),
            finish_tally: DualTally::new(n),
            vready_tally: vec![BTreeSet::new(); n],
            vfinish_tally: vec![BTreeSet::new(); n],
            election_senders: BTreeSet::new(),
            confirm_senders: BTreeSet::new(),
            sent_vote: DualFlag::new(n),
            ready_fired: DualFlag::new(n),
            finish_fired: DualFlag::new(n),
            r_record: DualFlag::new(n),
            f_record: DualFlag::new(n),
            g_record: vec![false; n],
            h_record: vec![false; n],
            confirm_vec: PartialVector::new(n),
            confirm_count: 0,
            delivered: None,
            election_sent: false,
            confirm_sent: false,
            returned: false,
        }
    }

    pub fn id(&self) -> &InstanceId {
        &self.id
    }

    /// Completed confirm vector, a snapshot with exactly n-t entries.
    pub fn delivered_vector(&self) -> Option<&PartialVector> {
        self.delivered.as_ref()
    }

    /// The election phase may start. Indicators keep updating afterwards.
    pub fn returned(&self) -> bool {
        self.returned
    }

    /// Live read: some honest node voted b for index j (t+1 vote senders).
    pub fn vote_confirmed(&self, j: usize, b: bool) -> bool {
        self.r_record.get(j, b)
    }

    /// Live read: n-t nodes sent ready for (j, b).
    pub fn finish_recorded(&self, j: usize, b: bool) -> bool {
        self.f_record.get(j, b)
    }

    /// Live read: j's confirm-vector broadcast delivered at this node.
    pub fn vector_seen(&self, j: usize) -> bool {
        self.g_record[j - 1]
    }

    /// Live read: n-t nodes reported j's confirm vector delivered.
    pub fn vector_finished(&self, j: usize) -> bool {
        self.h_record[j - 1]
    }

    pub fn status(&self) -> String {
        format!(
            "{} confirm_count={} delivered={} returned={} elections={} confirms={}",
            self.id,
            self.confirm_count,
            self.delivered.is_some(),
            self.returned,
            self.election_senders.len(),
            self.confirm_senders.len(),
        )
    }

    fn valid_index(&self, j: u8) -> bool {
        j >= 1 && j as usize <= self.n
    }

    /// Own comparison bit for index j. The vote is suppressed if an echo
    /// already broadcast the identical message.
    pub fn entry(&mut self, j: usize, b: bool) -> Vec<Action> {
        debug_assert!(j >= 1 && j <= self.n);
        if self.sent_vote.get(j, b) {
            return Vec::new();
        }
        self.sent_vote.set(j, b);
        vec![Action::SendToAll {
            instance: self.id.clone(),
            body: MsgBody::Vote { j: j as u8, b },
        }]
    }

    /// Confirm-vector broadcast from node j delivered at this node. The
    /// vector itself is kept by the caller; only the fact matters here.
    pub fn vector_input(&mut self, j: usize) -> Vec<Action> {
        debug_assert!(j >= 1 && j <= self.n);
        if self.g_record[j - 1] {
            return Vec::new();
        }
        self.g_record[j - 1] = true;
        vec![Action::SendToAll {
            instance: self.id.clone(),
            body: MsgBody::VectorReady { j: j as u8 },
        }]
    }

    pub fn step(&mut self, from: NodeId, body: &MsgBody) -> Vec<Action> {
        let mut out = Vec::new();
        match body {
            MsgBody::Vote { j, b } if self.valid_index(*j) => {
                let j = *j as usize;
                let count = self.vote_tally.add(j, *b, from);
                if count >= self.t + 1 && !self.ready_fired.get(j, *b) {
                    self.ready_fired.set(j, *b);
                    if !self.sent_vote.get(j, *b) {
                        self.sent_vote.set(j, *b);
                        out.push(Action::SendToAll {
                            instance: self.id.clone(),
                            body: MsgBody::Vote { j: j as u8, b: *b },
                        });
                    }
                    self.r_record.set(j, *b);
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::Ready { j: j as u8, b: *b },
                    });
                }
            }
            MsgBody::Ready { j, b } if self.valid_index(*j) => {
                let j = *j as usize;
                let count = self.ready_tally.add(j, *b, from);
                if count >= self.n - self.t && !self.finish_fired.get(j, *b) {
                    self.finish_fired.set(j, *b);
                    self.f_record.set(j, *b);
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::Finish { j: j as u8, b: *b },
                    });
                }
            }
            MsgBody::Finish { j, b } if self.valid_index(*j) => {
                let j = *j as usize;
                let count = self.finish_tally.add(j, *b, from);
                if count >= self.n - self.t && self.confirm_vec.is_missing(j) {
                    self.confirm_vec.set(j, *b);
                    self.confirm_count += 1;
                    if self.confirm_count == self.n - self.t {
                        self.delivered = Some(self.confirm_vec.clone());
                    }
                }
            }
            MsgBody::VectorReady { j } if self.valid_index(*j) => {
                let j = *j as usize;
                self.vready_tally[j - 1].insert(from);
                if self.vready_tally[j - 1].len() >= self.n - self.t && !self.h_record[j - 1] {
                    self.h_record[j - 1] = true;
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::VectorFinish { j: j as u8 },
                    });
                }
            }
            MsgBody::VectorFinish { j } if self.valid_index(*j) => {
                let j = *j as usize;
                self.vfinish_tally[j - 1].insert(from);
                if j == self.me.0 as usize
                    && self.vfinish_tally[j - 1].len() >= self.n - self.t
                    && !self.election_sent
                {
                    self.election_sent = true;
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::Election,
                    });
                }
            }
            MsgBody::Election => {
                self.election_senders.insert(from);
                if self.election_senders.len() >= self.n - self.t && !self.confirm_sent {
                    self.confirm_sent = true;
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::Confirm,
                    });
                }
            }
            MsgBody::Confirm => {
                self.confirm_senders.insert(from);
                if self.confirm_senders.len() >= self.t + 1 && !self.confirm_sent {
                    self.confirm_sent = true;
                    out.push(Action::SendToAll {
                        instance: self.id.clone(),
                        body: MsgBody::Confirm,
                    });
                }
                if self.confirm_senders.len() >= 2 * self.t + 1 && !self.returned {
                    self.returned = true;
                }
            }
            _ => {}
        }
        out
    }
}
