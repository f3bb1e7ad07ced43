mod common;

use airy_graph::boundary::{
    assemble_global, classify, expected_shape, sample_bicontraction, sample_unitary, star_graph, vertex_forms,
    BoundaryOperator, Builtin,
};
use airy_graph::cli::{generate, Kind};
use airy_graph::graph::{MetricGraph, Side};
use airy_graph::krein::{is_krein_contractive, is_krein_unitary, krein_adjoint, DEFAULT_TOL};
use airy_graph::linalg::{c64, random_gaussian};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn balanced_graph() -> impl Strategy<Value = MetricGraph> {
    prop_oneof![
        (1..=3usize).prop_map(|n| star_graph(n, n).unwrap()),
        (0.2..5.0f64, -3.0..3.0f64).prop_map(|(a, b)| airy_graph::boundary::loop_graph(a, b).unwrap()),
        common::balanced_graph(),
    ]
}

fn random_operator(g: &MetricGraph, seed: u64) -> BoundaryOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bc = BoundaryOperator::new();
    for v in g.vertices() {
        let (rows, cols) = expected_shape(g, v).unwrap();
        bc.insert(v, random_gaussian(&mut rng, rows, cols));
    }
    bc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sampled_unitaries_pass(g in balanced_graph(), seed in any::<u64>()) {
        let bc = generate(&g, Kind::Unitary, seed, 0.0).unwrap();
        for v in g.vertices() {
            let (b_r, b_l) = vertex_forms(&g, v).unwrap();
            if b_r.dimension() == 0 {
                continue;
            }
            let cert = is_krein_unitary(&b_r, &b_l, bc.block(v).unwrap(), DEFAULT_TOL);
            prop_assert!(cert.verdict, "{:?}", cert);
        }
        prop_assert!(classify(&g, &bc, DEFAULT_TOL).unwrap().global.is_admissible());
    }

    #[test]
    fn sampled_bicontractions_pass(g in balanced_graph(), seed in any::<u64>(), s in 0.0..=1.0f64) {
        for v in g.vertices() {
            let (b_r, b_l) = vertex_forms(&g, v).unwrap();
            if b_r.dimension() == 0 {
                continue;
            }
            let l = sample_bicontraction(&g, v, seed, s).unwrap();
            prop_assert!(is_krein_contractive(&b_r, &b_l, &l, DEFAULT_TOL).unwrap().verdict);
            let sharp = krein_adjoint(&b_r, &b_l, &l).unwrap();
            prop_assert!(is_krein_contractive(&b_l, &b_r, &sharp, DEFAULT_TOL).unwrap().verdict);
        }
    }

    #[test]
    fn samplers_are_deterministic(n in 1..=3usize, seed in any::<u64>()) {
        let g = star_graph(n, n).unwrap();
        prop_assert_eq!(sample_unitary(&g, "v", seed).unwrap(), sample_unitary(&g, "v", seed).unwrap());
        prop_assert_eq!(
            generate(&g, Kind::Bicontractive, seed, 0.5).unwrap().to_json(),
            generate(&g, Kind::Bicontractive, seed, 0.5).unwrap().to_json()
        );
    }

    #[test]
    fn global_verdict_is_the_conjunction(g in common::graph(false), seed in any::<u64>()) {
        let bc = random_operator(&g, seed);
        let c = classify(&g, &bc, DEFAULT_TOL).unwrap();
        prop_assert!(c.consistent);
        let all = |f: fn(&airy_graph::boundary::VertexClassification) -> bool| c.vertices.iter().all(f);
        prop_assert_eq!(c.direct.unitary.verdict, all(|v| v.result.unitary.verdict));
        prop_assert_eq!(c.direct.contractive.verdict, all(|v| v.result.contractive.verdict));
        prop_assert_eq!(c.direct.adjoint_contractive.verdict, all(|v| v.result.adjoint_contractive.verdict));
    }

    #[test]
    fn assembly_preserves_sparsity(g in common::graph(false), seed in any::<u64>()) {
        let bc = random_operator(&g, seed);
        let l = assemble_global(&g, &bc).unwrap();
        let mut owned = vec![vec![false; l.ncols()]; l.nrows()];
        for v in g.vertices() {
            for &r in &g.vertex_positions(v, Side::Left).unwrap() {
                for &c in &g.vertex_positions(v, Side::Right).unwrap() {
                    owned[r][c] = true;
                }
            }
        }
        for r in 0..l.nrows() {
            for c in 0..l.ncols() {
                if !owned[r][c] {
                    prop_assert_eq!(l[(r, c)], c64(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn operator_json_round_trip(g in common::graph(false), seed in any::<u64>()) {
        let bc = random_operator(&g, seed);
        let back = BoundaryOperator::from_json(&bc.to_json()).unwrap();
        prop_assert_eq!(back, bc);
    }
}

#[test]
fn loop_diag_sweep() {
    for a in [0.5, 1.0, 2.0] {
        for b in [0.0, 0.5, -0.5, 1.0, -1.0, 1.001, -1.001] {
            let (g, bc) = Builtin::LoopDiag { a, b }.build().unwrap();
            let verdict = classify(&g, &bc, DEFAULT_TOL).unwrap().global;
            assert_eq!(verdict.is_admissible(), b.abs() <= 1.0, "a = {a}, b = {b}: {verdict}");
            assert_eq!(verdict.to_string() == "unitary", b.abs() == 1.0, "a = {a}, b = {b}: {verdict}");
        }
    }
}
