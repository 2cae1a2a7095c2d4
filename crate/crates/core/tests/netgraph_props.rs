use proptest::prelude::*;
use rand::Rng;

use wsnsim::netgraph::{generate_network, NetworkConfig, NetworkGraph};
use wsnsim::seed;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Closed form of `Pr(|X - Y| ≤ t)` for X, Y uniform on the unit square, `t ≤ 1`.
fn unit_square_pair_cdf(t: f64) -> f64 {
    std::f64::consts::PI * t * t - 8.0 * t.powi(3) / 3.0 + t.powi(4) / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edges_are_exactly_the_close_pairs(n in 1usize..200, side in 0.5f64..10.0, frac in 0.01f64..0.8, s in any::<u64>()) {
        let radius = frac * side;
        let g = generate_network(&NetworkConfig::new(n, side, radius, s)).unwrap();
        let pos = g.positions();
        for u in 0..n {
            for v in 0..n {
                let d = dist(pos[u], pos[v]);
                let expect = u != v && d > 0.0 && d <= radius;
                prop_assert_eq!(g.is_neighbor(u, v), expect, "pair ({}, {}) at distance {}", u, v, d);
            }
        }
        let degree_sum: usize = g.degrees().iter().sum();
        prop_assert_eq!(degree_sum, 2 * g.edge_count());
    }

    #[test]
    fn same_seed_same_graph(n in 1usize..150, s in any::<u64>()) {
        let cfg = NetworkConfig::new(n, 3.0, 0.8, s);
        prop_assert_eq!(generate_network(&cfg).unwrap(), generate_network(&cfg).unwrap());
    }

    #[test]
    fn larger_radius_keeps_every_edge(n in 2usize..150, r1 in 0.05f64..2.0, grow in 0.0f64..2.0, s in any::<u64>()) {
        let small = generate_network(&NetworkConfig::new(n, 4.0, r1, s)).unwrap();
        let large = generate_network(&NetworkConfig::new(n, 4.0, r1 + grow, s)).unwrap();
        for (u, v) in small.edges() {
            prop_assert!(large.is_neighbor(u, v));
        }
    }

    #[test]
    fn json_round_trip(n in 1usize..80, s in any::<u64>()) {
        let g = generate_network(&NetworkConfig::new(n, 2.0, 0.6, s)).unwrap();
        let back = NetworkGraph::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
        prop_assert_eq!(back.positions(), g.positions());
        prop_assert_eq!(back.seed(), g.seed());
    }
}

#[test]
fn mean_degree_matches_pair_distance_integral() {
    let (n, side, radius) = (1000, 10.0, 1.0);

    // Independent estimate: Monte-Carlo over point pairs, no graph involved.
    let mut rng = seed::rng(0xD15C);
    let draws = 2_000_000;
    let hits = (0..draws)
        .filter(|_| {
            let a = [rng.gen::<f64>() * side, rng.gen::<f64>() * side];
            let b = [rng.gen::<f64>() * side, rng.gen::<f64>() * side];
            dist(a, b) <= radius
        })
        .count();
    let p_mc = hits as f64 / draws as f64;
    let p_exact = unit_square_pair_cdf(radius / side);
    assert!((p_mc - p_exact).abs() < 0.05 * p_exact, "MC {p_mc} vs closed form {p_exact}");
    let oracle = (n - 1) as f64 * p_mc;

    let empirical: f64 = (0..100u64)
        .map(|s| generate_network(&NetworkConfig::new(n, side, radius, s)).unwrap().mean_degree())
        .sum::<f64>()
        / 100.0;
    assert!(
        (empirical - oracle).abs() < 0.10 * oracle,
        "mean degree {empirical} vs oracle {oracle}"
    );
}

#[test]
fn dense_fields_rarely_isolate_a_node() {
    // λ = 32 / 4 = 8.
    let clean = (0..1000u64)
        .filter(|&s| {
            generate_network(&NetworkConfig::new(32, 2.0, 1.0, s))
                .unwrap()
                .isolated_nodes()
                .is_empty()
        })
        .count();
    assert!(clean >= 990, "{clean}/1000 graphs without isolated nodes");
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(generate_network(&NetworkConfig::new(0, 1.0, 1.0, 0)).is_err());
    assert!(generate_network(&NetworkConfig::new(5, 0.0, 1.0, 0)).is_err());
    assert!(generate_network(&NetworkConfig::new(5, 1.0, -1.0, 0)).is_err());
    assert!(generate_network(&NetworkConfig::new(5, 1.0, f64::NAN, 0)).is_err());
}

#[test]
fn density_is_nodes_per_area() {
    assert_eq!(NetworkConfig::new(50, 2.0, 1.0, 0).density(), 12.5);
    assert_eq!(NetworkConfig::new(500, 5.0, 1.0, 0).density(), 20.0);
}
