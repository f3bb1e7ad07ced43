#![allow(dead_code)]

use airy_graph::graph::{Edge, MetricGraph};
use proptest::prelude::*;

/// One edge: kind 0 finite, 1 incoming half-line, 2 outgoing half-line.
#[derive(Debug, Clone)]
pub struct EdgeDraw {
    pub kind: u8,
    pub from: usize,
    pub to: usize,
    pub len: f64,
    pub alpha: f64,
    pub beta: f64,
}

fn edge_draw(vertices: usize, finite_only: bool) -> impl Strategy<Value = EdgeDraw> {
    let kinds = if finite_only { 0..1u8 } else { 0..3u8 };
    (kinds, 0..vertices, 0..vertices, 0.3..3.0f64, 0.1..10.0f64, -5.0..5.0f64).prop_map(
        |(kind, from, to, len, alpha, beta)| EdgeDraw {
            kind,
            from,
            to,
            len,
            alpha,
            beta,
        },
    )
}

pub fn build(vertices: usize, draws: &[EdgeDraw]) -> MetricGraph {
    let names: Vec<String> = (0..vertices).map(|i| format!("v{i}")).collect();
    let edges = draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let id = format!("e{i:02}");
            match d.kind {
                0 => Edge::finite(&id, 0.0, d.len, &names[d.from], &names[d.to], d.alpha, d.beta),
                1 => Edge::incoming_halfline(&id, 0.0, &names[d.to], d.alpha, d.beta),
                _ => Edge::outgoing_halfline(&id, 0.0, &names[d.from], d.alpha, d.beta),
            }
        })
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    MetricGraph::from_parts(&refs, edges).expect("drawn graph is valid")
}

/// Valid graphs with 1 to 3 vertices and 1 to 6 edges.
pub fn graph(finite_only: bool) -> impl Strategy<Value = MetricGraph> {
    (1..=3usize).prop_flat_map(move |n| {
        proptest::collection::vec(edge_draw(n, finite_only), 1..=6).prop_map(move |d| build(n, &d))
    })
}

/// Unions of directed cycles on 1 to 3 vertices: every vertex has as many
/// edges ending as starting there.
pub fn balanced_graph() -> impl Strategy<Value = MetricGraph> {
    (1..=3usize).prop_flat_map(|n| {
        let cycle = proptest::collection::vec((0..n, 0.3..3.0f64, 0.1..10.0f64, -5.0..5.0f64), 1..=3);
        proptest::collection::vec(cycle, 1..=2).prop_map(move |cycles| {
            let mut draws = Vec::new();
            for cycle in cycles {
                for (i, &(from, len, alpha, beta)) in cycle.iter().enumerate() {
                    let to = cycle[(i + 1) % cycle.len()].0;
                    draws.push(EdgeDraw { kind: 0, from, to, len, alpha, beta });
                }
            }
            build(n, &draws)
        })
    })
}
