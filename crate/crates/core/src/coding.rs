//! Packets, soliton degree distributions and per-node coded storage.
//!
//! A node owns `m` slots. Slot 0 holds its own reading verbatim; each of the
//! `m - 1` coded slots draws an acceptance degree `d_c` from a soliton
//! distribution and accumulates the XOR of at most `d_c` foreign readings,
//! together with the list of their origin IDs.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{BitXor, BitXorAssign};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, NodeId, Result};

/// Fixed-width 64-bit payload.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Payload(pub u64);

impl Payload {
    pub const ZERO: Payload = Payload(0);

    /// Deterministic per-origin test pattern.
    pub fn pattern(seed: u64, origin: NodeId) -> Self {
        Payload(seed::derive(seed, seed::stream::PAYLOAD, origin as u64))
    }

    pub fn to_hex(self) -> String {
        format!("{:016x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        u64::from_str_radix(s, 16)
            .map(Payload)
            .map_err(|e| Error::Config(format!("bad payload hex {s:?}: {e}")))
    }
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Payload({:#018x})", self.0)
    }
}

impl BitXor for Payload {
    type Output = Payload;
    fn bitxor(self, rhs: Payload) -> Payload {
        Payload(self.0 ^ rhs.0)
    }
}

impl BitXorAssign for Payload {
    fn bitxor_assign(&mut self, rhs: Payload) {
        self.0 ^= rhs.0;
    }
}

/// Ground-truth readings for `n` origins.
pub fn payloads(n: usize, seed: u64) -> Vec<Payload> {
    (0..n).map(|i| Payload::pattern(seed, i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Init = 0,
    Update = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub origin: NodeId,
    /// Raw reading for `Init`, `new ⊕ old` for `Update`.
    pub payload: Payload,
    /// Remaining hop budget.
    pub counter: u32,
    pub flag: Flag,
}

impl Packet {
    pub fn init(origin: NodeId, payload: Payload, counter: u32) -> Self {
        Self {
            origin,
            payload,
            counter,
            flag: Flag::Init,
        }
    }

    pub fn update(origin: NodeId, old: Payload, new: Payload, counter: u32) -> Self {
        Self {
            origin,
            payload: old ^ new,
            counter,
            flag: Flag::Update,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Ideal,
    Robust,
}

/// Soliton pmf over `{1..=k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    kind: DistributionKind,
    k: usize,
    c0: f64,
    delta: f64,
    /// `pmf[i - 1] = Pr(d = i)`.
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

/// `R = c0 · ln(k/δ) · √k`.
pub fn robust_ripple(k: usize, c0: f64, delta: f64) -> f64 {
    c0 * (k as f64 / delta).ln() * (k as f64).sqrt()
}

/// Spike position `k/R`, rounded and clamped to `[1, k]`.
pub fn robust_spike(k: usize, ripple: f64) -> usize {
    let raw = (k as f64 / ripple).round();
    if raw.is_finite() {
        (raw.max(1.0) as usize).min(k)
    } else {
        k
    }
}

fn ideal_pmf(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| {
            if i == 1 {
                1.0 / k as f64
            } else {
                1.0 / (i as f64 * (i - 1) as f64)
            }
        })
        .collect()
}

pub fn build_distribution(
    kind: DistributionKind,
    k: usize,
    c0: f64,
    delta: f64,
) -> Result<DegreeDistribution> {
    if k == 0 {
        return Err(Error::Domain("soliton support size k must be at least 1".into()));
    }
    let pmf = match kind {
        DistributionKind::Ideal => ideal_pmf(k),
        DistributionKind::Robust => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Domain(format!("robust soliton needs 0 < δ < 1, got {delta}")));
            }
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(Error::Domain(format!("robust soliton needs c0 > 0, got {c0}")));
            }
            let ripple = robust_ripple(k, c0, delta);
            let spike = robust_spike(k, ripple);
            let kf = k as f64;
            let tau = |i: usize| -> f64 {
                if i < spike {
                    ripple / (i as f64 * kf)
                } else if i == spike {
                    // ln(R/δ) is negative when R < δ; the spike then vanishes.
                    (ripple * (ripple / delta).ln() / kf).max(0.0)
                } else {
                    0.0
                }
            };
            let raw: Vec<f64> = ideal_pmf(k)
                .into_iter()
                .enumerate()
                .map(|(idx, p)| p + tau(idx + 1))
                .collect();
            let beta: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / beta).collect()
        }
    };
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = pmf
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Guard the top of the table against rounding.
    *cdf.last_mut().expect("k >= 1") = 1.0;
    Ok(DegreeDistribution {
        kind,
        k,
        c0,
        delta,
        pmf,
        cdf,
    })
}

impl DegreeDistribution {
    pub fn ideal(k: usize) -> Result<Self> {
        build_distribution(DistributionKind::Ideal, k, 0.0, 0.0)
    }

    pub fn robust(k: usize, c0: f64, delta: f64) -> Result<Self> {
        build_distribution(DistributionKind::Robust, k, c0, delta)
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `Pr(d = i)`; zero outside `1..=k`.
    pub fn prob(&self, i: usize) -> f64 {
        if i == 0 || i > self.k {
            0.0
        } else {
            self.pmf[i - 1]
        }
    }

    /// Inverse-CDF draw in `1..=k`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.k - 1) + 1
    }
}

/// One coded slot: XOR accumulator plus the IDs folded into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub accept_degree: usize,
    pub acc: Payload,
    pub ids: BTreeSet<NodeId>,
}

impl Slot {
    pub fn new(accept_degree: usize) -> Self {
        Self {
            accept_degree,
            acc: Payload::ZERO,
            ids: BTreeSet::new(),
        }
    }

    pub fn has_capacity(&self) -> bool {
        self.ids.len() < self.accept_degree
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceptance {
    Accept(usize),
    Reject,
}

/// Storage of a single node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStore {
    node_id: NodeId,
    own: Payload,
    slots: Vec<Slot>,
    seen: BTreeSet<NodeId>,
}

impl NodeStore {
    /// A store with `m` slots: slot 0 for `own`, `m - 1` coded slots whose
    /// acceptance degrees are drawn from `dist`.
    pub fn new<R: Rng + ?Sized>(
        node_id: NodeId,
        own: Payload,
        m: usize,
        dist: &DegreeDistribution,
        rng: &mut R,
    ) -> Result<Self> {
        if m < 1 {
            return Err(Error::Config("a node needs at least one slot".into()));
        }
        let degrees: Vec<usize> = (1..m).map(|_| dist.sample(rng)).collect();
        Ok(Self::with_degrees(node_id, own, &degrees))
    }

    pub fn with_degrees(node_id: NodeId, own: Payload, degrees: &[usize]) -> Self {
        Self {
            node_id,
            own,
            slots: degrees.iter().map(|&d| Slot::new(d.max(1))).collect(),
            // A node never stores its own reading in a coded slot.
            seen: BTreeSet::from([node_id]),
        }
    }

    pub fn node_id(&self) -> NodeId {
        self.node_id
    }

    pub fn own(&self) -> Payload {
        self.own
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Total slot count `m` including slot 0.
    pub fn m(&self) -> usize {
        self.slots.len() + 1
    }

    pub fn seen(&self) -> &BTreeSet<NodeId> {
        &self.seen
    }

    pub fn has_seen(&self, origin: NodeId) -> bool {
        self.seen.contains(&origin)
    }

    pub fn mark_seen(&mut self, origin: NodeId) {
        self.seen.insert(origin);
    }

    /// Distinct foreign IDs held across coded slots.
    pub fn occupancy(&self) -> usize {
        self.slots.iter().map(|s| s.ids.len()).sum()
    }

    /// Index of the coded slot holding `origin`, if any.
    pub fn slot_of(&self, origin: NodeId) -> Option<usize> {
        self.slots.iter().position(|s| s.ids.contains(&origin))
    }

    /// Decide whether to keep `packet` and where.
    ///
    /// A candidate slot is drawn uniformly among slots with spare capacity.
    /// First-hop packets are kept outright; later ones with probability
    /// `1 / d_c` of the candidate.
    pub fn accept_decision<R: Rng + ?Sized>(
        &self,
        packet: &Packet,
        first_hop: bool,
        rng: &mut R,
    ) -> Acceptance {
        if packet.origin == self.node_id || self.slot_of(packet.origin).is_some() {
            return Acceptance::Reject;
        }
        let open: Vec<usize> = (0..self.slots.len())
            .filter(|&j| self.slots[j].has_capacity())
            .collect();
        if open.is_empty() {
            return Acceptance::Reject;
        }
        let j = open[rng.gen_range(0..open.len())];
        if first_hop {
            return Acceptance::Accept(j);
        }
        let coin: f64 = rng.gen();
        if coin <= 1.0 / self.slots[j].accept_degree as f64 {
            Acceptance::Accept(j)
        } else {
            Acceptance::Reject
        }
    }

    /// XOR an `Init` packet into coded slot `slot`.
    pub fn absorb(&mut self, packet: &Packet, slot: usize) -> Result<()> {
        if packet.flag != Flag::Init {
            return Err(Error::Integrity(format!(
                "node {} asked to absorb an update packet from {}",
                self.node_id, packet.origin
            )));
        }
        let target = self.slots.get_mut(slot).ok_or_else(|| {
            Error::Integrity(format!("node {} has no coded slot {slot}", packet.origin))
        })?;
        if !target.ids.insert(packet.origin) {
            return Err(Error::Integrity(format!(
                "node {} absorbed origin {} twice into slot {slot}",
                self.node_id, packet.origin
            )));
        }
        target.acc ^= packet.payload;
        self.seen.insert(packet.origin);
        Ok(())
    }

    /// Test hook: XOR a payload into a slot with no bookkeeping checks.
    #[doc(hidden)]
    pub fn force_xor(&mut self, slot: usize, payload: Payload) {
        self.slots[slot].acc ^= payload;
    }

    /// Apply an `Update` delta. Returns whether the store changed; nodes that
    /// do not hold the origin ignore the packet.
    pub fn apply_update(&mut self, delta: &Packet) -> Result<bool> {
        if delta.flag != Flag::Update {
            return Err(Error::Integrity(format!(
                "node {} received an init packet as an update",
                self.node_id
            )));
        }
        if delta.origin == self.node_id {
            self.own ^= delta.payload;
            return Ok(true);
        }
        match self.slot_of(delta.origin) {
            Some(j) => {
                self.slots[j].acc ^= delta.payload;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Count coded slots whose accumulator disagrees with `truth`, plus the
    /// own slot. Zero on a consistent store.
    pub fn ledger_violations(&self, truth: &[Payload]) -> usize {
        let own_bad = usize::from(truth.get(self.node_id) != Some(&self.own));
        let slot_bad = self
            .slots
            .iter()
            .filter(|s| {
                let expect = s
                    .ids
                    .iter()
                    .fold(Payload::ZERO, |acc, &id| acc ^ truth[id]);
                expect != s.acc || s.ids.len() > s.accept_degree
            })
            .count();
        own_bad + slot_bad
    }

    pub fn to_dump(&self) -> StoreDump {
        StoreDump {
            node_id: self.node_id,
            own: self.own.to_hex(),
            slots: self
                .slots
                .iter()
                .map(|s| SlotDump {
                    d_c: s.accept_degree,
                    ids: s.ids.iter().copied().collect(),
                    acc_hex: s.acc.to_hex(),
                })
                .collect(),
        }
    }

    /// Rebuild a store from its dump. `seen` is restored as own ID plus every
    /// stored ID.
    pub fn from_dump(dump: &StoreDump) -> Result<Self> {
        let mut store = NodeStore::with_degrees(dump.node_id, Payload::from_hex(&dump.own)?, &[]);
        for s in &dump.slots {
            let ids: BTreeSet<NodeId> = s.ids.iter().copied().collect();
            if ids.len() != s.ids.len() || ids.len() > s.d_c || s.d_c == 0 {
                return Err(Error::Config(format!(
                    "store dump for node {} has a malformed slot",
                    dump.node_id
                )));
            }
            store.seen.extend(ids.iter().copied());
            store.slots.push(Slot {
                accept_degree: s.d_c,
                acc: Payload::from_hex(&s.acc_hex)?,
                ids,
            });
        }
        let stored: usize = store.slots.iter().map(|s| s.ids.len()).sum();
        if stored + 1 != store.seen.len() {
            return Err(Error::Config(format!(
                "store dump for node {} repeats an origin across slots",
                dump.node_id
            )));
        }
        Ok(store)
    }
}

/// JSON form `{node_id, own, slots: [{d_c, ids, acc_hex}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreDump {
    pub node_id: NodeId,
    pub own: String,
    pub slots: Vec<SlotDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDump {
    pub d_c: usize,
    pub ids: Vec<NodeId>,
    pub acc_hex: String,
}

pub fn dump_stores(stores: &[NodeStore]) -> Result<String> {
    let dumps: Vec<StoreDump> = stores.iter().map(NodeStore::to_dump).collect();
    Ok(serde_json::to_string_pretty(&dumps)?)
}

pub fn load_stores(text: &str) -> Result<Vec<NodeStore>> {
    let dumps: Vec<StoreDump> = serde_json::from_str(text)?;
    dumps.iter().map(NodeStore::from_dump).collect()
}

/// Sum of ledger violations over all stores.
pub fn verify_ledger(stores: &[NodeStore], truth: &[Payload]) -> usize {
    stores.iter().map(|s| s.ledger_violations(truth)).sum()
}
