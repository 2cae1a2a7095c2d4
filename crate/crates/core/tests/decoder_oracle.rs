mod common;

use proptest::prelude::*;
use rand::Rng;

use wsnsim::coding::{payloads, DegreeDistribution, Payload};
use wsnsim::decoder::{
    build_system, decode_trial, peel, select_query, solve, solve_by_elimination, Decoded,
    LinearSystem, QuerySet, Row,
};
use wsnsim::dsa1::{run_dsa1, run_with_counters, FloodOptions, StorageParams};
use wsnsim::netgraph::{generate_connected_enough, NetworkGraph};
use wsnsim::{seed, Error};

use common::{agrees, brute_force, random_system};

#[test]
fn random_small_systems_match_exhaustive_search() {
    let mut rng = seed::rng(0xB0B);
    for _ in 0..300 {
        let n = rng.gen_range(1..=12);
        let rows = rng.gen_range(0..=2 * n);
        let (system, truth) = random_system(n, rows, 3, &mut rng);
        let oracle = brute_force(&system, 3).expect("consistent by construction");
        let decoded = solve(&system).unwrap();
        assert!(agrees(&decoded, &oracle), "n={n} rows={:?}", system.rows);
        for (v, t) in decoded.values().iter().zip(&truth) {
            if let Some(v) = v {
                assert_eq!(v, t);
            }
        }
    }
}

#[test]
fn dissemination_systems_match_exhaustive_search() {
    let mut checked = 0;
    for s in 0..60u64 {
        let n = 6 + (s as usize % 7);
        let g = generate_connected_enough(n, 1.5, 0.8, s, 1000).unwrap();
        // Four-bit payloads keep enumeration cheap; the XOR structure is unchanged.
        let truth: Vec<Payload> = payloads(n, s).iter().map(|p| Payload(p.0 & 0xF)).collect();
        let storage = StorageParams {
            m: 3,
            dist: DegreeDistribution::ideal(n).unwrap(),
        };
        let report = run_dsa1(&g, &truth, &storage, FloodOptions::default(), &mut seed::rng(s)).unwrap();
        let mut rng = seed::rng(s + 1000);
        for h in 1..=n.min(4) {
            let q = select_query(n, h, &mut rng).unwrap();
            let system = build_system(&report.stores, &q);
            let oracle = brute_force(&system, 4).unwrap();
            assert!(agrees(&solve(&system).unwrap(), &oracle));
            checked += 1;
        }
    }
    assert!(checked >= 200);
}

#[test]
fn contradictory_rows_are_an_integrity_error() {
    let system = LinearSystem {
        n: 3,
        rows: vec![
            Row { ids: vec![0, 1], rhs: Payload(1) },
            Row { ids: vec![1, 2], rhs: Payload(2) },
            Row { ids: vec![0, 2], rhs: Payload(7) },
        ],
    };
    assert!(brute_force(&system, 3).is_none());
    assert!(matches!(solve(&system), Err(Error::Integrity(_))));
    assert!(matches!(solve_by_elimination(&system), Err(Error::Integrity(_))));
}

#[test]
fn missing_unknown_reports_its_id() {
    let system = LinearSystem {
        n: 3,
        rows: vec![
            Row { ids: vec![0], rhs: Payload(4) },
            Row { ids: vec![1], rhs: Payload(5) },
        ],
    };
    match solve(&system).unwrap() {
        Decoded::Failure { rank_deficit, unrecovered, partial } => {
            assert_eq!(rank_deficit, 1);
            assert_eq!(unrecovered, vec![2]);
            assert_eq!(partial, vec![Some(Payload(4)), Some(Payload(5)), None]);
        }
        other => panic!("expected failure, got {other:?}"),
    }
}

#[test]
fn empty_query_fails() {
    let stores = wsnsim::coding::load_stores("[]").unwrap();
    assert!(build_system(&stores, &QuerySet::new(vec![])).rows.is_empty());
    let system = LinearSystem { n: 2, rows: vec![] };
    assert!(!solve(&system).unwrap().is_success());
    assert!(!decode_trial(&stores, 3, 0, &mut seed::rng(0)).unwrap());
}

#[test]
fn query_inclusion_is_uniform() {
    let (n, h, draws) = (50, 10, 100_000);
    let mut rng = seed::rng(5010);
    let mut hits = vec![0usize; n];
    let mut pair = 0usize;
    for _ in 0..draws {
        let q = select_query(n, h, &mut rng).unwrap();
        assert_eq!(q.h(), h);
        for &u in q.node_ids() {
            hits[u] += 1;
        }
        if q.node_ids().contains(&0) && q.node_ids().contains(&1) {
            pair += 1;
        }
    }
    let p = h as f64 / n as f64;
    let sigma = (p * (1.0 - p) / draws as f64).sqrt();
    for (u, &c) in hits.iter().enumerate() {
        let f = c as f64 / draws as f64;
        assert!((f - p).abs() <= 4.0 * sigma, "node {u}: {f}");
    }
    // Hypergeometric joint inclusion h(h-1) / (n(n-1)).
    let pp = (h * (h - 1)) as f64 / (n * (n - 1)) as f64;
    let f = pair as f64 / draws as f64;
    assert!((f - pp).abs() <= 4.0 * (pp * (1.0 - pp) / draws as f64).sqrt(), "pair {f} vs {pp}");
    assert!(select_query(5, 6, &mut rng).is_err());
    assert_eq!(select_query(5, 5, &mut rng).unwrap().node_ids(), &[0, 1, 2, 3, 4]);
}

#[test]
fn triangle_decodes_from_any_single_node() {
    let k3 = NetworkGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let truth = payloads(3, 3);
    // Unit acceptance degrees give each foreign reading its own slot.
    let storage = StorageParams {
        m: 3,
        dist: DegreeDistribution::ideal(1).unwrap(),
    };
    let report = run_with_counters(&k3, &truth, vec![1; 3], &storage, FloodOptions::default(), &mut seed::rng(3)).unwrap();
    for u in 0..3 {
        let decoded = solve(&build_system(&report.stores, &QuerySet::new(vec![u]))).unwrap();
        assert_eq!(decoded, Decoded::Success(truth.clone()));
    }
    let mut rng = seed::rng(1);
    assert!(decode_trial(&report.stores, 3, 1, &mut rng).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn peeling_agrees_with_elimination(n in 1usize..200, extra in 0usize..100, s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let (system, truth) = random_system(n, n + extra, 64, &mut rng);
        let full = solve_by_elimination(&system).unwrap();
        let mixed = solve(&system).unwrap();
        prop_assert_eq!(&full, &mixed);
        let peeled = peel(&system).unwrap();
        if peeled.values.iter().all(Option::is_some) {
            prop_assert_eq!(full, Decoded::Success(truth));
        }
        for (v, p) in mixed.values().iter().zip(&peeled.values) {
            if p.is_some() {
                prop_assert_eq!(v, p);
            }
        }
    }

    #[test]
    fn more_rows_never_lose_unknowns(n in 1usize..60, base in 0usize..80, more in 0usize..40, s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let (system, _) = random_system(n, base + more, 64, &mut rng);
        let fewer = LinearSystem { n, rows: system.rows[..base].to_vec() };
        let small = solve(&fewer).unwrap().values();
        let large = solve(&system).unwrap().values();
        for (a, b) in small.iter().zip(&large) {
            if a.is_some() {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn querying_everyone_always_decodes(n in 2usize..60, s in any::<u64>()) {
        let g = generate_connected_enough(n, 2.0, 0.9, s, 1000).unwrap();
        let truth = payloads(n, s);
        let storage = StorageParams { m: 4, dist: DegreeDistribution::ideal(n).unwrap() };
        let report = run_dsa1(&g, &truth, &storage, FloodOptions::default(), &mut seed::rng(s)).unwrap();
        let all = QuerySet::new((0..n).collect());
        prop_assert_eq!(solve(&build_system(&report.stores, &all)).unwrap(), Decoded::Success(truth));
        prop_assert!(decode_trial(&report.stores, n, n, &mut seed::rng(s)).unwrap());
    }
}
