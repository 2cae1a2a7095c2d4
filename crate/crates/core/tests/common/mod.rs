//! Shared test oracles.

#![allow(dead_code)]

use rand::Rng;

use wsnsim::coding::Payload;
use wsnsim::decoder::{Decoded, LinearSystem, Row};

/// Exhaustive answer for a system over `n ≤ 16` unknowns whose payloads fit
/// in `planes` bits: per unknown, its value if every solution agrees on it.
/// `None` overall when no assignment satisfies the rows.
pub fn brute_force(system: &LinearSystem, planes: u32) -> Option<Vec<Option<Payload>>> {
    let n = system.n;
    assert!(n <= 16, "brute force needs n <= 16");
    let masks: Vec<u32> = system
        .rows
        .iter()
        .map(|r| r.ids.iter().fold(0u32, |m, &id| m ^ (1 << id)))
        .collect();
    let mut values = vec![Some(Payload::ZERO); n];
    for plane in 0..planes {
        // Solutions of this bit plane, as bitmasks over the unknowns.
        let mut agree_one = u32::MAX;
        let mut agree_zero = u32::MAX;
        let mut any = false;
        for x in 0u32..(1 << n) {
            let ok = system
                .rows
                .iter()
                .zip(&masks)
                .all(|(r, &m)| ((x & m).count_ones() & 1) as u64 == (r.rhs.0 >> plane) & 1);
            if ok {
                any = true;
                agree_one &= x;
                agree_zero &= !x;
            }
        }
        if !any {
            return None;
        }
        for (i, v) in values.iter_mut().enumerate() {
            let fixed_one = agree_one >> i & 1 == 1;
            let fixed_zero = agree_zero >> i & 1 == 1;
            *v = match (*v, fixed_one, fixed_zero) {
                (Some(p), true, _) => Some(Payload(p.0 | 1 << plane)),
                (Some(p), false, true) => Some(p),
                _ => None,
            };
        }
    }
    Some(values)
}

/// Whether a solver output matches the exhaustive answer.
pub fn agrees(decoded: &Decoded, oracle: &[Option<Payload>]) -> bool {
    decoded.values() == oracle && decoded.is_success() == oracle.iter().all(Option::is_some)
}

/// Random consistent system: `rows` equations over `n` unknowns with
/// `planes`-bit payloads.
pub fn random_system<R: Rng>(n: usize, rows: usize, planes: u32, rng: &mut R) -> (LinearSystem, Vec<Payload>) {
    let mask = if planes >= 64 { u64::MAX } else { (1u64 << planes) - 1 };
    let truth: Vec<Payload> = (0..n).map(|_| Payload(rng.gen::<u64>() & mask)).collect();
    let rows = (0..rows)
        .map(|_| {
            let size = rng.gen_range(1..=n.min(5));
            let ids: Vec<usize> = rand::seq::index::sample(rng, n, size).into_vec();
            let rhs = ids.iter().fold(Payload::ZERO, |acc, &i| acc ^ truth[i]);
            Row { ids, rhs }
        })
        .collect();
    (LinearSystem { n, rows }, truth)
}
