//! Collector side: query `h` nodes, turn their slots into XOR equations over
//! the `n` unknown readings, and solve.
//!
//! Solving peels degree-1 equations first and finishes the residue with
//! Gauss-Jordan elimination over GF(2) on bit-packed rows.

use rand::Rng;

use crate::coding::{NodeStore, Payload};
use crate::{Error, NodeId, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySet {
    node_ids: Vec<NodeId>,
}

impl QuerySet {
    pub fn new(mut node_ids: Vec<NodeId>) -> Self {
        node_ids.sort_unstable();
        node_ids.dedup();
        Self { node_ids }
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn h(&self) -> usize {
        self.node_ids.len()
    }
}

/// Uniform random `h`-subset of `0..n`.
pub fn select_query<R: Rng + ?Sized>(n: usize, h: usize, rng: &mut R) -> Result<QuerySet> {
    if h > n {
        return Err(Error::Domain(format!("cannot query {h} of {n} nodes")));
    }
    Ok(QuerySet::new(rand::seq::index::sample(rng, n, h).into_vec()))
}

/// One equation: XOR of the readings in `ids` equals `rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub ids: Vec<NodeId>,
    pub rhs: Payload,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub n: usize,
    pub rows: Vec<Row>,
}

/// One identity row per queried node plus one row per non-empty coded slot.
pub fn build_system(stores: &[NodeStore], query: &QuerySet) -> LinearSystem {
    let mut rows = Vec::new();
    for &u in query.node_ids() {
        let store = &stores[u];
        rows.push(Row {
            ids: vec![store.node_id()],
            rhs: store.own(),
        });
        for slot in store.slots().iter().filter(|s| !s.ids.is_empty()) {
            rows.push(Row {
                ids: slot.ids.iter().copied().collect(),
                rhs: slot.acc,
            });
        }
    }
    LinearSystem {
        n: stores.len(),
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Success(Vec<Payload>),
    Failure {
        rank_deficit: usize,
        /// Unknowns not pinned down by the system.
        unrecovered: Vec<NodeId>,
        /// Values of the unknowns that were pinned down.
        partial: Vec<Option<Payload>>,
    },
}

impl Decoded {
    pub fn is_success(&self) -> bool {
        matches!(self, Decoded::Success(_))
    }

    /// Per-unknown values, `None` where undetermined.
    pub fn values(&self) -> Vec<Option<Payload>> {
        match self {
            Decoded::Success(v) => v.iter().copied().map(Some).collect(),
            Decoded::Failure { partial, .. } => partial.clone(),
        }
    }
}

fn check_ids(system: &LinearSystem) -> Result<()> {
    for row in &system.rows {
        if let Some(&bad) = row.ids.iter().find(|&&id| id >= system.n) {
            return Err(Error::Domain(format!("row references unknown {bad} >= n={}", system.n)));
        }
    }
    Ok(())
}

fn inconsistent(rhs: Payload) -> Error {
    Error::Integrity(format!(
        "contradictory equations: residual {:#018x} on an empty row",
        rhs.0
    ))
}

/// Result of the peeling pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peeled {
    pub values: Vec<Option<Payload>>,
    /// Rows still holding two or more unknowns, with known values substituted.
    pub residue: Vec<Row>,
}

/// Repeatedly resolves rows with a single unknown and substitutes the value.
pub fn peel(system: &LinearSystem) -> Result<Peeled> {
    check_ids(system)?;
    let n = system.n;
    let mut rows: Vec<Row> = system
        .rows
        .iter()
        .map(|r| {
            // Repeated IDs cancel in GF(2).
            let mut ids = r.ids.clone();
            ids.sort_unstable();
            let mut dedup: Vec<NodeId> = Vec::with_capacity(ids.len());
            for id in ids {
                if dedup.last() == Some(&id) {
                    dedup.pop();
                } else {
                    dedup.push(id);
                }
            }
            Row { ids: dedup, rhs: r.rhs }
        })
        .collect();
    let mut incidence: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ri, row) in rows.iter().enumerate() {
        for &id in &row.ids {
            incidence[id].push(ri);
        }
    }
    let mut values: Vec<Option<Payload>> = vec![None; n];
    let mut ready: Vec<usize> = Vec::new();
    for (ri, row) in rows.iter().enumerate() {
        match row.ids.len() {
            0 if row.rhs != Payload::ZERO => return Err(inconsistent(row.rhs)),
            1 => ready.push(ri),
            _ => {}
        }
    }
    while let Some(ri) = ready.pop() {
        if rows[ri].ids.len() != 1 {
            continue;
        }
        let x = rows[ri].ids[0];
        let value = rows[ri].rhs;
        values[x] = Some(value);
        for &rj in &incidence[x] {
            let row = &mut rows[rj];
            if let Some(pos) = row.ids.iter().position(|&id| id == x) {
                row.ids.swap_remove(pos);
                row.rhs ^= value;
                match row.ids.len() {
                    0 if row.rhs != Payload::ZERO => return Err(inconsistent(row.rhs)),
                    1 => ready.push(rj),
                    _ => {}
                }
            }
        }
    }
    let residue = rows.into_iter().filter(|r| r.ids.len() >= 2).collect();
    Ok(Peeled { values, residue })
}

/// Dense GF(2) row over a compact column index.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRow {
    words: Vec<u64>,
    rhs: Payload,
}

impl BitRow {
    fn zeros(cols: usize) -> Self {
        Self {
            words: vec![0; cols.div_ceil(64)],
            rhs: Payload::ZERO,
        }
    }

    fn flip(&mut self, col: usize) {
        self.words[col / 64] ^= 1 << (col % 64);
    }

    fn get(&self, col: usize) -> bool {
        self.words[col / 64] >> (col % 64) & 1 == 1
    }

    fn xor_with(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        self.rhs ^= other.rhs;
    }

    fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

/// Gauss-Jordan over the unknowns in `rows`; fills `values` for every
/// unknown the system determines. Returns the rank.
fn eliminate(n: usize, rows: &[Row], values: &mut [Option<Payload>]) -> Result<usize> {
    // Compact column index over unknowns that actually appear.
    let mut col_of = vec![usize::MAX; n];
    let mut var_of = Vec::new();
    for row in rows {
        for &id in &row.ids {
            if col_of[id] == usize::MAX {
                col_of[id] = var_of.len();
                var_of.push(id);
            }
        }
    }
    let cols = var_of.len();
    let mut mat: Vec<BitRow> = rows
        .iter()
        .map(|r| {
            let mut b = BitRow::zeros(cols);
            for &id in &r.ids {
                b.flip(col_of[id]);
            }
            b.rhs = r.rhs;
            b
        })
        .collect();

    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..mat.len()).find(|&i| mat[i].get(col)) else {
            continue;
        };
        mat.swap(rank, p);
        let pivot = mat[rank].clone();
        for (i, row) in mat.iter_mut().enumerate() {
            if i != rank && row.get(col) {
                row.xor_with(&pivot);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    for row in &mat[rank..] {
        if row.rhs != Payload::ZERO {
            return Err(inconsistent(row.rhs));
        }
    }
    for (i, &col) in pivots.iter().enumerate() {
        // In reduced form a pivot is determined iff no free column remains.
        if mat[i].count_ones() == 1 {
            values[var_of[col]] = Some(mat[i].rhs);
        }
    }
    Ok(rank)
}

fn finish(n: usize, values: Vec<Option<Payload>>, rank: usize) -> Decoded {
    if values.iter().all(Option::is_some) {
        Decoded::Success(values.into_iter().map(|v| v.expect("checked")).collect())
    } else {
        Decoded::Failure {
            rank_deficit: n - rank,
            unrecovered: (0..n).filter(|&i| values[i].is_none()).collect(),
            partial: values,
        }
    }
}

/// Peeling followed by elimination on the residue.
pub fn solve(system: &LinearSystem) -> Result<Decoded> {
    let Peeled { mut values, residue } = peel(system)?;
    let peeled = values.iter().filter(|v| v.is_some()).count();
    let rank = peeled + eliminate(system.n, &residue, &mut values)?;
    Ok(finish(system.n, values, rank))
}

/// Elimination on the full system, no peeling.
pub fn solve_by_elimination(system: &LinearSystem) -> Result<Decoded> {
    check_ids(system)?;
    let mut values = vec![None; system.n];
    let rank = eliminate(system.n, &system.rows, &mut values)?;
    Ok(finish(system.n, values, rank))
}

/// One collector query: `true` iff all `n` readings are recovered.
pub fn decode_trial<R: Rng + ?Sized>(
    stores: &[NodeStore],
    n: usize,
    h: usize,
    rng: &mut R,
) -> Result<bool> {
    if h == 0 {
        return Ok(n == 0);
    }
    let query = select_query(n, h, rng)?;
    Ok(solve(&build_system(stores, &query))?.is_success())
}
