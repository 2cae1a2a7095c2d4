//! Counter-bounded flooding with coded storage.
//!
//! Each source broadcasts its reading once to every neighbour. From then on
//! each copy travels as its own branch: the holder decrements the counter and
//! hands the packet to one neighbour per synchronous round, preferring
//! neighbours it has no evidence of already holding that origin. Receivers
//! decide on first receipt whether to fold the reading into a coded slot.
//!
//! DSA-I sets each source's counter to `⌊n / d(s)⌋`; DSA-II reuses this engine
//! with locally inferred counters (see [`crate::dsa2`]).

use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{Acceptance, DegreeDistribution, NodeStore, Packet, Payload};
use crate::netgraph::NetworkGraph;
use crate::{Error, NodeId, Result};

/// DSA-I hop budget `⌊n / d⌋`, floored at 1.
pub fn init_counter_dsa1(n: usize, degree: usize) -> Result<u32> {
    if degree == 0 {
        return Err(Error::Domain(
            "a source without neighbours cannot flood".into(),
        ));
    }
    Ok(((n / degree).max(1)) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FloodOptions {
    /// Drop re-received packets instead of re-forwarding them while the
    /// counter allows.
    pub strict_discard: bool,
    /// Record one [`TraceEvent`] per transmission.
    pub trace: bool,
}

/// One transmission. `counter` is the value carried on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub round: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub origin: NodeId,
    pub counter: u32,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Transmission {
    from: NodeId,
    to: NodeId,
    packet: Packet,
    depth: u32,
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    packet: Packet,
    /// Hops travelled from the origin so far.
    depth: u32,
}

/// Mutable state of one dissemination run.
pub struct SimState<'g> {
    graph: &'g NetworkGraph,
    options: FloodOptions,
    stores: Vec<NodeStore>,
    counters: Vec<u32>,
    queues: Vec<VecDeque<Queued>>,
    // Per node: origin -> neighbours known to hold it (sent to or heard from).
    known: Vec<HashMap<NodeId, Vec<NodeId>>>,
    round: u64,
    tx_count: u64,
    per_origin_tx: Vec<u64>,
    per_origin_depth: Vec<u32>,
    initialized: bool,
    trace: Vec<TraceEvent>,
}

impl<'g> SimState<'g> {
    /// Fresh state: stores built with `m` slots and acceptance degrees drawn
    /// from `dist`; `counters[s]` is the hop budget of source `s`.
    pub fn new<R: Rng + ?Sized>(
        graph: &'g NetworkGraph,
        truth: &[Payload],
        counters: Vec<u32>,
        m: usize,
        dist: &DegreeDistribution,
        options: FloodOptions,
        rng: &mut R,
    ) -> Result<Self> {
        let n = graph.n();
        if truth.len() != n || counters.len() != n {
            return Err(Error::Config(format!(
                "need {n} payloads and counters, got {} and {}",
                truth.len(),
                counters.len()
            )));
        }
        if let Some(s) = counters.iter().position(|&c| c == 0) {
            return Err(Error::Domain(format!("source {s} has a zero counter")));
        }
        let stores = (0..n)
            .map(|u| NodeStore::new(u, truth[u], m, dist, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            graph,
            options,
            stores,
            counters,
            queues: vec![VecDeque::new(); n],
            known: vec![HashMap::new(); n],
            round: 0,
            tx_count: 0,
            per_origin_tx: vec![0; n],
            per_origin_depth: vec![0; n],
            initialized: false,
            trace: Vec::new(),
        })
    }

    pub fn stores(&self) -> &[NodeStore] {
        &self.stores
    }

    pub fn tx_count(&self) -> u64 {
        self.tx_count
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn queued(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    fn remember(&mut self, at: NodeId, origin: NodeId, neighbour: NodeId) {
        let list = self.known[at].entry(origin).or_default();
        if !list.contains(&neighbour) {
            list.push(neighbour);
        }
    }

    fn deliver<R: Rng + ?Sized>(
        &mut self,
        from: NodeId,
        to: NodeId,
        packet: Packet,
        depth: u32,
        first_hop: bool,
        rng: &mut R,
    ) -> Result<()> {
        debug_assert!(packet.counter >= 1, "forwarded a spent packet");
        let origin = packet.origin;
        self.tx_count += 1;
        self.per_origin_tx[origin] += 1;
        self.per_origin_depth[origin] = self.per_origin_depth[origin].max(depth);
        self.remember(from, origin, to);
        self.remember(to, origin, from);

        let store = &mut self.stores[to];
        let first_time = !store.has_seen(origin);
        let mut accepted = false;
        if first_time {
            store.mark_seen(origin);
            if let Acceptance::Accept(slot) = store.accept_decision(&packet, first_hop, rng) {
                store.absorb(&packet, slot)?;
                accepted = true;
            }
        }
        let remaining = packet.counter - 1;
        if remaining >= 1 && (first_time || !self.options.strict_discard) {
            self.queues[to].push_back(Queued {
                packet: Packet {
                    counter: remaining,
                    ..packet
                },
                depth,
            });
        }
        if self.options.trace {
            self.trace.push(TraceEvent {
                round: self.round,
                from,
                to,
                origin,
                counter: packet.counter,
                accepted,
            });
        }
        Ok(())
    }

    /// Every source broadcasts its `Init` packet to all neighbours, which keep
    /// it outright if they have a free slot. Arrivals are delivered in a
    /// random order so no source is favoured when slots run out.
    pub fn initialize_sources<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.initialized {
            return Ok(());
        }
        self.initialized = true;
        let mut sends: Vec<Transmission> = Vec::new();
        for s in 0..self.graph.n() {
            let packet = Packet::init(s, self.stores[s].own(), self.counters[s]);
            for &v in self.graph.neighbors(s) {
                sends.push(Transmission { from: s, to: v, packet, depth: 1 });
            }
        }
        self.deliver_all(sends, true, rng)
    }

    fn deliver_all<R: Rng + ?Sized>(
        &mut self,
        mut sends: Vec<Transmission>,
        first_hop: bool,
        rng: &mut R,
    ) -> Result<()> {
        sends.shuffle(rng);
        for t in sends {
            self.deliver(t.from, t.to, t.packet, t.depth, first_hop, rng)?;
        }
        Ok(())
    }

    fn pick_target<R: Rng + ?Sized>(&self, u: NodeId, origin: NodeId, rng: &mut R) -> Option<NodeId> {
        let neighbours = self.graph.neighbors(u);
        if neighbours.is_empty() {
            return None;
        }
        let known = self.known[u].get(&origin);
        let eligible: Vec<NodeId> = neighbours
            .iter()
            .copied()
            .filter(|&v| v != origin && known.is_none_or(|k| !k.contains(&v)))
            .collect();
        if eligible.is_empty() {
            neighbours.choose(rng).copied()
        } else {
            eligible.choose(rng).copied()
        }
    }

    /// Runs synchronous forwarding rounds until every queue drains.
    pub fn run_rounds<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<DisseminationReport> {
        self.initialize_sources(rng)?;
        let max_counter = self.counters.iter().copied().max().unwrap_or(1) as u64;
        let limit = 10 * (self.graph.n() as u64).max(1) * max_counter;
        while self.queued() > 0 {
            self.round += 1;
            if self.round > limit {
                return Err(Error::NonTermination { limit });
            }
            // Targets are chosen from what each node knew at the start of the round.
            let mut sends = Vec::new();
            for u in 0..self.graph.n() {
                for q in std::mem::take(&mut self.queues[u]) {
                    if let Some(v) = self.pick_target(u, q.packet.origin, rng) {
                        sends.push(Transmission { from: u, to: v, packet: q.packet, depth: q.depth + 1 });
                    }
                }
            }
            self.deliver_all(sends, false, rng)?;
        }
        Ok(self.report())
    }

    pub fn report(&self) -> DisseminationReport {
        DisseminationReport {
            tx_count: self.tx_count,
            per_origin_tx: self.per_origin_tx.clone(),
            per_origin_depth: self.per_origin_depth.clone(),
            rounds: self.round,
            counters: self.counters.clone(),
            occupancy: self.stores.iter().map(NodeStore::occupancy).collect(),
            stores: self.stores.clone(),
            trace: self.trace.clone(),
        }
    }
}

/// Immutable summary of a dissemination run.
#[derive(Debug, Clone, PartialEq)]
pub struct DisseminationReport {
    pub tx_count: u64,
    /// Transmissions of each origin's packet, summing to `tx_count`.
    pub per_origin_tx: Vec<u64>,
    /// Deepest hop count reached by each origin's packet.
    pub per_origin_depth: Vec<u32>,
    pub rounds: u64,
    pub counters: Vec<u32>,
    /// Foreign IDs stored per node.
    pub occupancy: Vec<usize>,
    pub stores: Vec<NodeStore>,
    pub trace: Vec<TraceEvent>,
}

fn mean<I: ExactSizeIterator<Item = f64>>(it: I) -> f64 {
    let len = it.len();
    if len == 0 {
        0.0
    } else {
        it.sum::<f64>() / len as f64
    }
}

impl DisseminationReport {
    pub fn mean_per_origin_tx(&self) -> f64 {
        mean(self.per_origin_tx.iter().map(|&t| t as f64))
    }

    pub fn mean_depth(&self) -> f64 {
        mean(self.per_origin_depth.iter().map(|&d| d as f64))
    }

    pub fn mean_occupancy(&self) -> f64 {
        mean(self.occupancy.iter().map(|&o| o as f64))
    }

    /// Trace as newline-delimited JSON.
    pub fn trace_ndjson(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.trace {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Storage layout shared by both algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageParams {
    /// Slots per node, including the own-data slot.
    pub m: usize,
    pub dist: DegreeDistribution,
}

/// Full DSA-I run on `graph`.
pub fn run_dsa1<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    truth: &[Payload],
    storage: &StorageParams,
    options: FloodOptions,
    rng: &mut R,
) -> Result<DisseminationReport> {
    let n = graph.n();
    let counters = (0..n)
        .map(|u| init_counter_dsa1(n, graph.degree(u)))
        .collect::<Result<Vec<_>>>()?;
    run_with_counters(graph, truth, counters, storage, options, rng)
}

pub fn run_with_counters<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    truth: &[Payload],
    counters: Vec<u32>,
    storage: &StorageParams,
    options: FloodOptions,
    rng: &mut R,
) -> Result<DisseminationReport> {
    let mut state = SimState::new(graph, truth, counters, storage.m, &storage.dist, options, rng)?;
    state.run_rounds(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub tx_count: u64,
    /// Stores that changed, including the origin's own slot.
    pub stores_updated: usize,
}

/// Sends an `Update` delta for `origin` and refreshes every holder.
///
/// The delta is flooded once through the origin's connected component; every
/// node that ever stored the origin sits inside it, so all holders see it.
pub fn propagate_update(
    graph: &NetworkGraph,
    stores: &mut [NodeStore],
    origin: NodeId,
    new_value: Payload,
) -> Result<UpdateOutcome> {
    let old = stores[origin].own();
    let delta = Packet::update(origin, old, new_value, 1);
    let mut reached = vec![false; graph.n()];
    let mut frontier = VecDeque::from([origin]);
    reached[origin] = true;
    let mut outcome = UpdateOutcome {
        tx_count: 0,
        stores_updated: 0,
    };
    while let Some(u) = frontier.pop_front() {
        if stores[u].apply_update(&delta)? {
            outcome.stores_updated += 1;
        }
        for &v in graph.neighbors(u) {
            outcome.tx_count += 1;
            if !reached[v] {
                reached[v] = true;
                frontier.push_back(v);
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{payloads, verify_ledger};
    use crate::seed;

    fn ideal(k: usize) -> DegreeDistribution {
        DegreeDistribution::ideal(k).unwrap()
    }

    fn triangle() -> NetworkGraph {
        NetworkGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn counter_examples() {
        assert_eq!(init_counter_dsa1(100, 10).unwrap(), 10);
        assert_eq!(init_counter_dsa1(100, 51).unwrap(), 1);
        assert_eq!(init_counter_dsa1(7, 2).unwrap(), 3);
        assert_eq!(init_counter_dsa1(3, 10).unwrap(), 1);
        assert!(init_counter_dsa1(7, 0).is_err());
    }

    #[test]
    fn triangle_init_sees_both_neighbours() {
        let g = triangle();
        let truth = payloads(3, 5);
        let mut rng = seed::rng(1);
        let mut st = SimState::new(&g, &truth, vec![1; 3], 3, &ideal(3), FloodOptions::default(), &mut rng).unwrap();
        st.initialize_sources(&mut rng).unwrap();
        assert_eq!(st.tx_count(), 6);
        for (u, s) in st.stores().iter().enumerate() {
            for v in 0..3 {
                assert!(s.has_seen(v), "node {u} missed {v}");
            }
        }
        let report = st.run_rounds(&mut rng).unwrap();
        assert_eq!(report.rounds, 0);
        assert_eq!(report.tx_count, 6);
        // Two coded slots with capacity >= 1 each: both neighbours kept.
        assert_eq!(report.occupancy, vec![2, 2, 2]);
    }

    #[test]
    fn single_edge_leaves_counter_one() {
        let g = NetworkGraph::from_edges(2, &[(0, 1)]).unwrap();
        let truth = payloads(2, 8);
        let mut rng = seed::rng(2);
        let counters = vec![init_counter_dsa1(2, 1).unwrap(); 2];
        assert_eq!(counters, vec![2, 2]);
        let mut st = SimState::new(&g, &truth, counters, 2, &ideal(2), FloodOptions::default(), &mut rng).unwrap();
        st.initialize_sources(&mut rng).unwrap();
        for (u, s) in st.stores().iter().enumerate() {
            assert_eq!(s.slots()[0].ids.iter().copied().collect::<Vec<_>>(), vec![1 - u]);
            assert_eq!(s.slots()[0].acc, truth[1 - u]);
        }
        assert!(st.queues.iter().all(|q| q.len() == 1 && q[0].packet.counter == 1));
    }

    #[test]
    fn fresh_state_reports_zero() {
        let g = triangle();
        let mut rng = seed::rng(3);
        let st = SimState::new(&g, &payloads(3, 0), vec![2; 3], 2, &ideal(3), FloodOptions::default(), &mut rng).unwrap();
        let r = st.report();
        assert_eq!(r.tx_count, 0);
        assert_eq!(r.rounds, 0);
        assert!(r.per_origin_tx.iter().all(|&t| t == 0));
        assert!(r.occupancy.iter().all(|&o| o == 0));
    }

    #[test]
    fn unit_counters_mean_no_forwarding() {
        let cfg = crate::netgraph::NetworkConfig::new(40, 2.0, 0.9, 17);
        let g = crate::netgraph::generate_network(&cfg).unwrap();
        let truth = payloads(40, 1);
        let mut rng = seed::rng(4);
        let storage = StorageParams { m: 4, dist: ideal(40) };
        let r = run_with_counters(&g, &truth, vec![1; 40], &storage, FloodOptions::default(), &mut rng).unwrap();
        assert_eq!(r.rounds, 0);
        assert_eq!(r.tx_count, g.degrees().iter().sum::<usize>() as u64);
    }

    #[test]
    fn path_packet_reaches_far_end() {
        let g = NetworkGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let truth = payloads(3, 9);
        let mut rng = seed::rng(5);
        let storage = StorageParams { m: 3, dist: ideal(3) };
        let opts = FloodOptions { trace: true, ..Default::default() };
        let r = run_with_counters(&g, &truth, vec![2, 1, 1], &storage, opts, &mut rng).unwrap();
        // Node 1 has no neighbour other than the origin besides node 2.
        assert!(r.trace.iter().any(|e| e.origin == 0 && e.to == 2));
        assert!(r.per_origin_tx[0] >= 2);
        assert_eq!(r.per_origin_depth[0], 2);
        assert!(r.stores[2].has_seen(0));
    }

    #[test]
    fn zero_counter_rejected() {
        let g = triangle();
        let mut rng = seed::rng(6);
        assert!(SimState::new(&g, &payloads(3, 0), vec![1, 0, 1], 2, &ideal(3), FloodOptions::default(), &mut rng).is_err());
    }

    #[test]
    fn update_flood_reaches_every_holder() {
        let cfg = crate::netgraph::NetworkConfig::new(30, 2.0, 1.0, 4);
        let g = crate::netgraph::generate_network(&cfg).unwrap();
        let mut truth = payloads(30, 2);
        let mut rng = seed::rng(7);
        let storage = StorageParams { m: 4, dist: ideal(30) };
        let mut stores = if g.isolated_nodes().is_empty() {
            run_dsa1(&g, &truth, &storage, FloodOptions::default(), &mut rng).unwrap().stores
        } else {
            return;
        };
        let new = Payload(0x1234);
        let holders = stores.iter().filter(|s| s.slot_of(3).is_some()).count();
        let out = propagate_update(&g, &mut stores, 3, new).unwrap();
        assert_eq!(out.stores_updated, holders + 1);
        truth[3] = new;
        assert_eq!(verify_ledger(&stores, &truth), 0);
    }
}
