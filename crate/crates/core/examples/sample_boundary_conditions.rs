//! Random Krein-unitary and bi-contractive couplings on a balanced star,
//! checked against the classifier and written as a boundary-condition file.

use airy_graph::boundary::{classify, sample_bicontraction, star_graph, BoundaryOperator};
use airy_graph::cli::{generate, Kind};
use airy_graph::krein::DEFAULT_TOL;

fn main() -> airy_graph::error::Result<()> {
    let g = star_graph(2, 2)?;
    for seed in 0..5 {
        let bc = generate(&g, Kind::Unitary, seed, 0.0)?;
        let c = classify(&g, &bc, DEFAULT_TOL)?;
        let r = &c.vertices[0].result.unitary.residual_norms;
        println!("unitary seed {seed}: {} (form residual {:.1e})", c.global, r["form_residual_relative"]);
    }
    for strictness in [0.0, 0.25, 0.5, 1.0] {
        let l = sample_bicontraction(&g, "v", 11, strictness)?;
        let bc = BoundaryOperator::new().with_block("v", l);
        let c = classify(&g, &bc, DEFAULT_TOL)?;
        let gap = c.vertices[0].result.contractive.min_eigenvalue.unwrap_or(0.0);
        println!("bi-contraction strictness {strictness}: {} (defect min eig {gap:.3})", c.global);
    }

    let loop_graph = airy_graph::boundary::loop_graph(1.0, 0.0)?;
    println!("\nunitary coupling for the unit loop, seed 7:\n{}", generate(&loop_graph, Kind::Unitary, 7, 0.0)?.to_json());

    match generate(&star_graph(0, 3)?, Kind::Unitary, 0, 0.0) {
        Err(e) => println!("\nall-outgoing star: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
