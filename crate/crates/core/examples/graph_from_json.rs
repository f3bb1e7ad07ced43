//! Reads a graph from JSON, generates a coupling for it and runs a short
//! simulation from a Gaussian.

use airy_graph::boundary::classify;
use airy_graph::cli::{generate, Kind};
use airy_graph::discretization::build_generator;
use airy_graph::evolution::{run_nodal, EvolutionConfig, Integrator};
use airy_graph::graph::{MetricGraph, Side};
use airy_graph::init::InitialCondition;
use airy_graph::krein::DEFAULT_TOL;

const GRAPH: &str = r#"{
  "vertices": ["p", "q"],
  "edges": [
    {"id": "a", "a": 0.0, "b": 1.0, "from": "p", "to": "q", "alpha": 1.0, "beta": 0.0},
    {"id": "b", "a": 0.0, "b": 1.5, "from": "q", "to": "p", "alpha": 0.5, "beta": 1.0},
    {"id": "c", "a": 0.0, "b": 0.8, "from": "p", "to": "p", "alpha": 2.0, "beta": -1.0}
  ]
}"#;

fn main() -> airy_graph::error::Result<()> {
    let g = MetricGraph::from_json(GRAPH)?;
    println!("right trace layout: {:?}", g.trace_layout(Side::Right).entries);
    let bc = generate(&g, Kind::Bicontractive, 42, 0.3)?;
    println!("verdict: {}", classify(&g, &bc, DEFAULT_TOL)?.global);

    let sys = build_generator(&g, &bc, 24)?;
    let u0 = InitialCondition::Gaussian { center: 0.5, width: 0.15 }.nodal(&sys)?;
    let mut cfg = EvolutionConfig::new(1e-4, 0.02, Integrator::CrankNicolson);
    cfg.sample_every = 50;
    let rec = run_nodal(&sys, &bc, &u0, &cfg)?.record;
    println!("projection residual {:.2e}", rec.projection_residual);
    for (t, n2) in rec.times.iter().zip(&rec.norm2) {
        println!("t = {t:.3}  ||u||^2 = {n2:.6}");
    }
    Ok(())
}
