//! Biased one-shot binary vote. Every node broadcasts its input pair;
//! a node whose own pair already contains a one outputs 1 on the spot.
//! Everyone else outputs 1 as soon as t+1 senders back either coordinate
//! (so at least one backer is honest) and 0 only after n-t senders opened
//! with a zero second coordinate. The bias: any honest one-vote beats any
//! number of zero-votes, and a zero output proves a zero quorum existed.
//!
//! Callers whose pair is a live read of monotone state may re-announce
//! after a coordinate flips to one. One-tallies credit a sender once per
//! coordinate across all its announcements, so a late flip still lands;
//! the zero tally counts only each sender's opening announcement, which
//! keeps the zero quorum a statement about initial votes.

use crate::core::{Action, InstanceId, MsgBody, NodeId, OutputValue};
use std::collections::BTreeSet;

/// One biased-vote instance at one node.
#[derive(Clone, Debug)]
pub struct Abbba {
    id: InstanceId,
    n: usize,
    t: usize,
    input: Option<(bool, bool)>,
    /// Senders credited for a one in the first coordinate.
    ones_a: BTreeSet<NodeId>,
    /// Senders credited for a one in the second coordinate.
    ones_b: BTreeSet<NodeId>,
    /// Senders whose opening announcement was processed.
    opened: BTreeSet<NodeId>,
    /// Senders whose opening announcement had a zero second coordinate.
    c: usize,
    output: Option<bool>,
    terminated: bool,
}

impl Abbba {
    pub fn new(id: InstanceId, n: usize, t: usize) -> Self {
        Abbba {
            id,
            n,
            t,
            input: None,
            ones_a: BTreeSet::new(),
            ones_b: BTreeSet::new(),
            opened: BTreeSet::new(),
            c: 0,
            output: None,
            terminated: false,
        }
    }

    pub fn id(&self) -> &InstanceId {
        &self.id
    }

    pub fn output(&self) -> Option<bool> {
        self.output
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn has_input(&self) -> bool {
        self.input.is_some()
    }

    pub fn status(&self) -> String {
        format!(
            "{} input={:?} a={} b={} c={} output={:?}",
            self.id,
            self.input,
            self.ones_a.len(),
            self.ones_b.len(),
            self.c,
            self.output
        )
    }

    pub fn input(&mut self, alpha: bool, beta: bool) -> Vec<Action> {
        if self.terminated || self.input.is_some() {
            return Vec::new();
        }
        self.input = Some((alpha, beta));
        let mut out = vec![Action::SendToAll {
            instance: self.id.clone(),
            body: MsgBody::AbbbaValue { alpha, beta },
        }];
        if alpha || beta {
            self.finish(true, &mut out);
        } else {
            self.evaluate(&mut out);
        }
        out
    }

    /// Re-announce after the caller's pair grew a coordinate. The merged
    /// pair only ever gains ones, so a change triggers the own-pair
    /// shortcut; recipients credit the new coordinate to this sender.
    pub fn upgrade(&mut self, alpha: bool, beta: bool) -> Vec<Action> {
        if self.terminated || self.output.is_some() {
            return Vec::new();
        }
        let Some((a0, b0)) = self.input else {
            return Vec::new();
        };
        let merged = (a0 || alpha, b0 || beta);
        if merged == (a0, b0) {
            return Vec::new();
        }
        self.input = Some(merged);
        let mut out = vec![Action::SendToAll {
            instance: self.id.clone(),
            body: MsgBody::AbbbaValue { alpha: merged.0, beta: merged.1 },
        }];
        self.finish(true, &mut out);
        out
    }

    pub fn step(&mut self, from: NodeId, body: &MsgBody) -> Vec<Action> {
        if self.terminated {
            return Vec::new();
        }
        let MsgBody::AbbbaValue { alpha, beta } = body else {
            return Vec::new();
        };
        let mut counted = false;
        if self.opened.insert(from) {
            self.c += !*beta as usize;
            counted = true;
        }
        if *alpha {
            counted |= self.ones_a.insert(from);
        }
        if *beta {
            counted |= self.ones_b.insert(from);
        }
        if !counted {
            return Vec::new();
        }
        let mut out = Vec::new();
        if self.input.is_some() {
            self.evaluate(&mut out);
        }
        out
    }

    /// Quorum checks, one-sided first: t+1 backers of either coordinate
    /// beat the n-t zero quorum when both hold at once.
    fn evaluate(&mut self, out: &mut Vec<Action>) {
        if self.output.is_some() {
            return;
        }
        if self.ones_a.len() >= self.t + 1 || self.ones_b.len() >= self.t + 1 {
            self.finish(true, out);
        } else if self.c >= self.n - self.t {
            self.finish(false, out);
        }
    }

    fn finish(&mut self, bit: bool, out: &mut Vec<Action>) {
        self.output = Some(bit);
        self.terminated = true;
        out.push(Action::Output { instance: self.id.clone(), value: OutputValue::Bit(bit) });
        out.push(Action::Terminate { instance: self.id.clone() });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Label;

    fn new_node(n: usize, t: usize) -> Abbba {
        Abbba::new(InstanceId::new(Label::Abbba, "t").sub(1), n, t)
    }

    fn value(alpha: bool, beta: bool) -> MsgBody {
        MsgBody::AbbbaValue { alpha, beta }
    }

    fn output_of(acts: &[Action]) -> Option<bool> {
        acts.iter().find_map(|a| match a {
            Action::Output { value: OutputValue::Bit(b), .. } => Some(*b),
            _ => None,
        })
    }

    #[test]
    fn own_one_outputs_immediately() {
        for (alpha, beta) in [(true, false), (false, true), (true, true)] {
            let mut node = new_node(4, 1);
            let acts = node.input(alpha, beta);
            assert!(matches!(&acts[0], Action::SendToAll { body: MsgBody::AbbbaValue { .. }, .. }));
            assert_eq!(output_of(&acts), Some(true));
            assert!(node.terminated());
        }
    }

    #[test]
    fn zero_quorum_outputs_zero() {
        let mut node = new_node(4, 1);
        assert_eq!(output_of(&node.input(false, false)), None);
        assert_eq!(output_of(&node.step(NodeId(1), &value(false, false))), None);
        assert_eq!(output_of(&node.step(NodeId(2), &value(false, false))), None);
        // Third zero-beta sender reaches n-t.
        assert_eq!(output_of(&node.step(NodeId(3), &value(false, false))), Some(false));
    }

    #[test]
    fn first_coordinate_quorum_outputs_one() {
        let mut node = new_node(4, 1);
        node.input(false, false);
        node.step(NodeId(2), &value(true, false));
        let acts = node.step(NodeId(3), &value(true, false));
        assert_eq!(output_of(&acts), Some(true));
    }

    #[test]
    fn one_conditions_beat_zero_condition() {
        // Tallies crossing both thresholds in the same pass resolve to 1.
        let mut node = new_node(4, 1);
        node.step(NodeId(1), &value(false, false));
        node.step(NodeId(2), &value(false, false));
        node.step(NodeId(3), &value(true, false));
        node.step(NodeId(4), &value(true, false));
        // a=2=t+1 and c=4>=n-t are both true before input arrives.
        let acts = node.input(false, false);
        assert_eq!(output_of(&acts), Some(true));
    }

    #[test]
    fn no_output_before_input() {
        let mut node = new_node(4, 1);
        for j in 1..=4 {
            let acts = node.step(NodeId(j), &value(false, false));
            assert_eq!(output_of(&acts), None);
        }
        assert_eq!(output_of(&node.input(false, false)), Some(false));
    }

    #[test]
    fn duplicate_senders_ignored() {
        let mut node = new_node(4, 1);
        node.input(false, false);
        node.step(NodeId(2), &value(true, false));
        for _ in 0..5 {
            assert_eq!(output_of(&node.step(NodeId(2), &value(true, false))), None);
        }
        assert_eq!(output_of(&node.step(NodeId(3), &value(true, false))), Some(true));
    }

    #[test]
    fn second_coordinate_quorum_outputs_one() {
        let mut node = new_node(7, 2);
        node.input(false, false);
        node.step(NodeId(2), &value(false, true));
        node.step(NodeId(3), &value(false, true));
        let acts = node.step(NodeId(4), &value(false, true));
        assert_eq!(output_of(&acts), Some(true));
    }

    #[test]
    fn upgrade_reannounces_and_outputs_one() {
        let mut node = new_node(4, 1);
        assert_eq!(output_of(&node.input(false, false)), None);
        let acts = node.upgrade(true, false);
        assert!(matches!(
            &acts[0],
            Action::SendToAll { body: MsgBody::AbbbaValue { alpha: true, beta: false }, .. }
        ));
        assert_eq!(output_of(&acts), Some(true));
        assert!(node.terminated());
    }

    #[test]
    fn upgrade_without_growth_is_inert() {
        let mut node = new_node(4, 1);
        node.input(true, false);
        assert!(node.terminated());
        assert!(node.upgrade(true, true).is_empty());

        let mut node = new_node(4, 1);
        assert!(node.upgrade(true, true).is_empty(), "no input yet");
        node.input(false, false);
        assert!(node.upgrade(false, false).is_empty(), "pair unchanged");
    }

    #[test]
    fn reannouncement_credits_new_coordinate_only_once() {
        let mut node = new_node(4, 1);
        node.input(false, false);
        // Opening zero announcement counts into c; the later one-coordinate
        // re-announcements from the same sender credit a exactly once.
        node.step(NodeId(2), &value(false, false));
        node.step(NodeId(2), &value(true, false));
        assert_eq!(output_of(&node.step(NodeId(2), &value(true, false))), None);
        let acts = node.step(NodeId(3), &value(true, false));
        assert_eq!(output_of(&acts), Some(true));
    }
}
