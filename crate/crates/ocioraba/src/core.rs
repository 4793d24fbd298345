//! Shared vocabulary for the protocol stack: node identities, protocol
//! instance identifiers, partial vectors, events, actions, and the message
//! envelope that carries every bit counted by the metrics engine.

use std::fmt;
use std::sync::Arc;

/// One-based node index in `[1..n]`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u8);

impl NodeId {
    /// Zero-based position, for indexing length-n vectors.
    pub fn index(self) -> usize {
        debug_assert!(self.0 >= 1);
        self.0 as usize - 1
    }

    /// All node ids `1..=n` in ascending order.
    pub fn all(n: usize) -> impl Iterator<Item = NodeId> {
        (1..=n as u8).map(NodeId)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Protocol family a sub-instance belongs to. Doubles as the accounting tag
/// for communication metrics.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Label {
    Aba,
    Apva,
    Acidd,
    Rbc,
    Abba,
    Abbba,
    Election,
    BinCoin,
}

impl Label {
    fn short(self) -> &'static str {
        match self {
            Label::Aba => "aba",
            Label::Apva => "apva",
            Label::Acidd => "acidd",
            Label::Rbc => "rbc",
            Label::Abba => "abba",
            Label::Abbba => "abbba",
            Label::Election => "election",
            Label::BinCoin => "bincoin",
        }
    }
}

/// One component of an instance path: a protocol label, a base identity
/// string, a derivation marker (the derived identity is the base identity
/// with a fixed suffix), and zero or more integer subscripts.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Component {
    pub label: Label,
    pub base: Arc<str>,
    pub derived: bool,
    pub subs: Vec<u32>,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<{}", self.label.short(), self.base)?;
        if self.derived {
            write!(f, "'")?;
        }
        for s in &self.subs {
            write!(f, ",{s}")?;
        }
        write!(f, ">")
    }
}

/// Hierarchical protocol instance identifier. Equality is structural;
/// distinct identity tuples always compare unequal. Cloning is cheap (shared
/// path), so ids can key maps and ride on every envelope.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct InstanceId {
    path: Arc<Vec<Component>>,
}

impl InstanceId {
    pub fn new(label: Label, base: &str) -> Self {
        InstanceId {
            path: Arc::new(vec![Component {
                label,
                base: Arc::from(base),
                derived: false,
                subs: Vec::new(),
            }]),
        }
    }

    /// Copy of this id with the last component carrying one more subscript.
    pub fn sub(&self, s: u32) -> Self {
        let mut path = (*self.path).clone();
        path.last_mut().expect("non-empty path").subs.push(s);
        InstanceId { path: Arc::new(path) }
    }

    /// Copy of this id with the last component's derivation marker set.
    pub fn derived(&self) -> Self {
        let mut path = (*self.path).clone();
        path.last_mut().expect("non-empty path").derived = true;
        InstanceId { path: Arc::new(path) }
    }

    /// Copy of this id with the last component's label replaced. Subscripts
    /// and derivation marker are kept, so sibling instances of different
    /// protocol families stay distinct.
    pub fn relabel(&self, label: Label) -> Self {
        let mut path = (*self.path).clone();
        path.last_mut().expect("non-empty path").label = label;
        InstanceId { path: Arc::new(path) }
    }

    /// Child instance nested under this id.
    pub fn nest(&self, label: Label, subs: &[u32]) -> Self {
        let mut path = (*self.path).clone();
        path.push(Component {
            label,
            base: Arc::from(""),
            derived: false,
            subs: subs.to_vec(),
        });
        InstanceId { path: Arc::new(path) }
    }

    pub fn path(&self) -> &[Component] {
        &self.path
    }

    /// Label of the first path component: the protocol family the envelope
    /// is accounted under.
    pub fn root_label(&self) -> Label {
        self.path[0].label
    }

    /// Label of the last path component.
    pub fn leaf_label(&self) -> Label {
        self.path.last().expect("non-empty path").label
    }

    pub fn first(&self) -> &Component {
        &self.path[0]
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.path.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// The missing-element marker. Partial vector elements live in `{0, 1, BOT}`
/// and the marker encodes as the integer 2.
pub const BOT: u8 = 2;

/// Length-n vector over `{0, 1, missing}`. The non-missing index set is
/// always derived on demand, never stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PartialVector {
    elems: Vec<u8>,
}

impl PartialVector {
    /// All-missing vector of length `n`.
    pub fn new(n: usize) -> Self {
        PartialVector { elems: vec![BOT; n] }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Element at one-based index `j`: `Some(bit)` or `None` for missing.
    pub fn get(&self, j: usize) -> Option<bool> {
        match self.elems[j - 1] {
            0 => Some(false),
            1 => Some(true),
            _ => None,
        }
    }

    /// Raw element in `{0, 1, 2}` at one-based index `j`.
    pub fn raw(&self, j: usize) -> u8 {
        self.elems[j - 1]
    }

    /// Set one-based index `j` to a bit.
    pub fn set(&mut self, j: usize, bit: bool) {
        self.elems[j - 1] = bit as u8;
    }

    pub fn is_missing(&self, j: usize) -> bool {
        self.elems[j - 1] == BOT
    }

    /// Construct from raw elements; every element must be in `{0, 1, 2}`.
    pub fn from_raw(elems: Vec<u8>) -> Option<Self> {
        if elems.iter().all(|&e| e <= BOT) {
            Some(PartialVector { elems })
        } else {
            None
        }
    }

    /// Wire size: two bits per element.
    pub fn bit_len(&self) -> u64 {
        2 * self.elems.len() as u64
    }
}

impl fmt::Display for PartialVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &e in &self.elems {
            match e {
                0 => write!(f, "0")?,
                1 => write!(f, "1")?,
                _ => write!(f, "_")?,
            }
        }
        Ok(())
    }
}

/// One-based indices of all non-missing elements of `w`.
pub fn nonmissing_set(w: &PartialVector) -> Vec<usize> {
    (1..=w.len()).filter(|&j| !w.is_missing(j)).collect()
}

/// Arbitrary-length bit string; the tail of the last byte is zero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BitString {
    bytes: Vec<u8>,
    bits: usize,
}

impl BitString {
    /// Wrap `bytes` as a bit string of length `bits`. Unused tail bits of the
    /// last byte are cleared so equality stays canonical.
    pub fn new(mut bytes: Vec<u8>, bits: usize) -> Self {
        assert!(bits <= bytes.len() * 8, "bit length exceeds byte buffer");
        bytes.truncate(bits.div_ceil(8));
        if bits % 8 != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= 0xFFu8 << (8 - bits % 8);
            }
        }
        BitString { bytes, bits }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let bits = bytes.len() * 8;
        BitString { bytes, bits }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit_len(&self) -> usize {
        self.bits
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.bytes.len() * 2);
        for b in &self.bytes {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Deterministic random bit string from any RNG.
    pub fn random<R: rand::Rng>(rng: &mut R, bits: usize) -> Self {
        let mut bytes = vec![0u8; bits.div_ceil(8)];
        rng.fill(&mut bytes[..]);
        BitString::new(bytes, bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

/// One erasure-code share: a one-based share index and its symbol bytes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Share {
    pub index: u8,
    pub data: Vec<u8>,
}

impl Share {
    /// Wire size: one index byte plus the symbol bytes.
    pub fn bit_len(&self) -> u64 {
        8 + 8 * self.data.len() as u64
    }
}

/// Payload of a reliable-broadcast instance: either an erasure-code share or
/// a partial vector. Carried in full by every broadcast-internal message.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum RbcPayload {
    Share(Share),
    Vector(PartialVector),
}

impl RbcPayload {
    pub fn bit_len(&self) -> u64 {
        match self {
            RbcPayload::Share(s) => s.bit_len(),
            RbcPayload::Vector(v) => v.bit_len(),
        }
    }
}

/// Typed message body. The variant is the wire tag; `payload_bits` is the
/// size of the fields behind it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum MsgBody {
    /// Broadcast leader proposal (full payload).
    RbcInit(RbcPayload),
    /// Broadcast echo (full payload).
    RbcEcho(RbcPayload),
    /// Broadcast delivery vote (full payload; no hashing anywhere).
    RbcReady(RbcPayload),
    /// Binary-agreement estimate for one round.
    Est { round: u8, bit: bool },
    /// Binary-agreement auxiliary vote for one round.
    Aux { round: u8, bit: bool },
    /// Binary-agreement decision announcement; lets finished nodes stop
    /// emitting while stragglers still make progress.
    Term { bit: bool },
    /// Biased one-shot vote carrying the input pair.
    AbbbaValue { alpha: bool, beta: bool },
    /// Dispersal vote for index `j` with bit `b`.
    Vote { j: u8, b: bool },
    /// Dispersal ready for index `j` with bit `b`.
    Ready { j: u8, b: bool },
    /// Dispersal finish for index `j` with bit `b`.
    Finish { j: u8, b: bool },
    /// Confirm-vector broadcast for leader `j` completed here.
    VectorReady { j: u8 },
    /// Quorum observed for `VectorReady(j)`.
    VectorFinish { j: u8 },
    /// Own dispersal is complete; vote to open the election phase.
    Election,
    /// Dispersal return vote.
    Confirm,
    /// Oracle reply delivering a coin value. Costs no bits.
    CoinValue { value: u32 },
}

impl MsgBody {
    /// Payload size in bits, excluding the envelope header. An index costs
    /// ceil(log2 n) bits, a round 8 bits, a bit 1 bit, a partial-vector
    /// element 2 bits; oracle replies are free.
    pub fn payload_bits(&self, n: usize) -> u64 {
        let idx = ceil_log2(n);
        match self {
            MsgBody::RbcInit(p) | MsgBody::RbcEcho(p) | MsgBody::RbcReady(p) => p.bit_len(),
            MsgBody::Est { .. } | MsgBody::Aux { .. } => 8 + 1,
            MsgBody::Term { .. } => 1,
            MsgBody::AbbbaValue { .. } => 2,
            MsgBody::Vote { .. } | MsgBody::Ready { .. } | MsgBody::Finish { .. } => idx + 1,
            MsgBody::VectorReady { .. } | MsgBody::VectorFinish { .. } => idx,
            MsgBody::Election | MsgBody::Confirm => 0,
            MsgBody::CoinValue { .. } => 0,
        }
    }

    pub fn tag_name(&self) -> &'static str {
        match self {
            MsgBody::RbcInit(_) => "INIT",
            MsgBody::RbcEcho(_) => "ECHO",
            MsgBody::RbcReady(_) => "READY",
            MsgBody::Est { .. } => "EST",
            MsgBody::Aux { .. } => "AUX",
            MsgBody::Term { .. } => "TERM",
            MsgBody::AbbbaValue { .. } => "VALUE",
            MsgBody::Vote { .. } => "VOTE",
            MsgBody::Ready { .. } => "READY",
            MsgBody::Finish { .. } => "FINISH",
            MsgBody::VectorReady { .. } => "VREADY",
            MsgBody::VectorFinish { .. } => "VFINISH",
            MsgBody::Election => "ELECTION",
            MsgBody::Confirm => "CONFIRM",
            MsgBody::CoinValue { .. } => "COIN",
        }
    }
}

/// Smallest `b` with `2^b >= n` (and at least 1).
pub fn ceil_log2(n: usize) -> u64 {
    debug_assert!(n >= 1);
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(1) as u64
}

/// A point-to-point network message. `bit_cost` is a pure function of the
/// envelope: payload plus a fixed header of 16 bits (tag and instance
/// discriminator) and two addresses of ceil(log2 n) bits each.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Envelope {
    pub from: NodeId,
    pub to: NodeId,
    pub instance: InstanceId,
    pub body: MsgBody,
}

impl Envelope {
    pub fn bit_cost(&self, n: usize) -> u64 {
        self.body.payload_bits(n) + 16 + 2 * ceil_log2(n)
    }
}

/// Protocol input delivered from outside the node. Each top-level machine
/// consumes the variant it expects and rejects the rest.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProtocolInput {
    /// Full agreement input: an ell-bit value.
    Value(BitString),
    /// One partial-vector entry (one-based index, bit).
    Entry { j: u8, bit: bool },
    /// Biased-vote input pair.
    Pair { alpha: bool, beta: bool },
    /// Broadcast payload (leader only).
    Broadcast(RbcPayload),
    /// Binary-agreement input bit.
    Bit(bool),
    /// Coin activation marker, addressed to an oracle-backed instance.
    Activate,
}

/// What a state machine can observe.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Event {
    ExternalInput { instance: InstanceId, input: ProtocolInput },
    PeerMessage(Envelope),
    ChildOutput { instance: InstanceId, value: ChildValue },
}

/// Value delivered by a completed child instance.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ChildValue {
    Payload(RbcPayload),
    Vector(PartialVector),
    Bit(bool),
    Coin(u32),
}

/// Final output of a top-level protocol instance at one node.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum OutputValue {
    /// Decoded ell-bit value.
    Value(BitString),
    /// Distinguished no-agreement sentinel, printed as "BOT".
    BotDefault,
    /// Agreed partial vector.
    Vector(PartialVector),
    /// Agreed bit.
    Bit(bool),
    /// Delivered broadcast payload.
    Payload(RbcPayload),
}

impl OutputValue {
    /// Compact text form used in CSV rows: hex for values, "BOT" for the
    /// sentinel, element string for vectors, 0/1 for bits.
    pub fn render(&self) -> String {
        match self {
            OutputValue::Value(b) => b.to_hex(),
            OutputValue::BotDefault => "BOT".to_string(),
            OutputValue::Vector(v) => format!("v:{v}"),
            OutputValue::Bit(b) => if *b { "1" } else { "0" }.to_string(),
            OutputValue::Payload(RbcPayload::Share(s)) => {
                format!("s{}:{}", s.index, BitString::from_bytes(s.data.clone()).to_hex())
            }
            OutputValue::Payload(RbcPayload::Vector(v)) => format!("v:{v}"),
        }
    }
}

/// What a state machine emits. `SendToAll` expands to `n` point-to-point
/// envelopes (self included) for accounting; `Output` appears at most once
/// per instance per node; nothing follows `Terminate`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Action {
    SendToAll { instance: InstanceId, body: MsgBody },
    SendTo { to: NodeId, instance: InstanceId, body: MsgBody },
    ChildInput { instance: InstanceId, input: ProtocolInput },
    Output { instance: InstanceId, value: OutputValue },
    Terminate { instance: InstanceId },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(base: &str) -> InstanceId {
        InstanceId::new(Label::Rbc, base)
    }

    #[test]
    fn instance_ids_are_structural() {
        assert_eq!(id("ba").sub(3), id("ba").sub(3));
        assert_ne!(id("ba").sub(3), id("ba").sub(4));
        assert_ne!(id("ba"), id("ba").derived());
        assert_ne!(id("ba").sub(1), id("ba").derived().sub(1));
        assert_ne!(id("ba"), InstanceId::new(Label::Abba, "ba"));
    }

    #[test]
    fn distinct_tuples_stay_distinct_exhaustively() {
        // Every identity shape one run can produce, for n <= 8: share and
        // confirm broadcasts, per-index agreement, gate and final agreement,
        // biased votes, elections, per-round coins.
        let n = 8u32;
        let base = InstanceId::new(Label::Aba, "ba");
        let mut all = Vec::new();
        for j in 1..=n {
            all.push(base.relabel(Label::Rbc).sub(j));
            all.push(base.relabel(Label::Rbc).derived().sub(j));
            all.push(base.relabel(Label::Abba).sub(j));
            all.push(base.relabel(Label::Abba).derived().sub(j));
            all.push(base.relabel(Label::Election).sub(j));
            for r in 1..=4 {
                all.push(base.relabel(Label::Abba).sub(j).nest(Label::BinCoin, &[r]));
            }
            for e in 1..=n {
                all.push(base.relabel(Label::Abbba).sub(e).sub(j));
            }
            all.push(base.relabel(Label::Abbba).derived().sub(j).sub(0));
        }
        all.push(base.clone());
        all.push(base.relabel(Label::Apva));
        all.push(base.relabel(Label::Acidd));
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(all.len(), dedup.len(), "identity collision");
    }

    #[test]
    fn nonmissing_set_by_definition() {
        let mut w = PartialVector::new(4);
        w.set(1, true);
        w.set(2, false);
        w.set(4, true);
        assert_eq!(nonmissing_set(&w), vec![1, 2, 4]);
        assert_eq!(nonmissing_set(&PartialVector::new(5)), Vec::<usize>::new());
        let mut full = PartialVector::new(3);
        for j in 1..=3 {
            full.set(j, j % 2 == 0);
        }
        assert_eq!(nonmissing_set(&full), vec![1, 2, 3]);
    }

    #[test]
    fn partial_vector_round_trips_raw() {
        let w = PartialVector::from_raw(vec![0, 1, 2, 1]).unwrap();
        assert_eq!(w.get(1), Some(false));
        assert_eq!(w.get(2), Some(true));
        assert_eq!(w.get(3), None);
        assert_eq!(w.raw(3), BOT);
        assert!(PartialVector::from_raw(vec![0, 3]).is_none());
        assert_eq!(w.bit_len(), 8);
    }

    #[test]
    fn bit_string_is_canonical() {
        let a = BitString::new(vec![0b1010_1111], 4);
        let b = BitString::new(vec![0b1010_0000], 4);
        assert_eq!(a, b);
        assert_eq!(a.to_hex(), "a0");
        assert_eq!(a.bit_len(), 4);
    }

    #[test]
    fn envelope_cost_is_header_plus_payload() {
        let env = Envelope {
            from: NodeId(1),
            to: NodeId(2),
            instance: InstanceId::new(Label::Acidd, "ba"),
            body: MsgBody::Vote { j: 3, b: true },
        };
        // n = 4: header 16 + 2*2, payload 2 + 1.
        assert_eq!(env.bit_cost(4), 16 + 4 + 3);
        // n = 16: header 16 + 2*4, payload 4 + 1.
        assert_eq!(env.bit_cost(16), 16 + 8 + 5);
    }

    #[test]
    fn ceil_log2_boundaries() {
        assert_eq!(ceil_log2(1), 1);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(255), 8);
    }
}
