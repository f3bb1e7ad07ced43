//! Norm decay on loop_diag(1, b): the measured rate against the boundary
//! form prediction, written as CSV run records.

use airy_graph::boundary::builtin;
use airy_graph::discretization::build_generator;
use airy_graph::evolution::{run_nodal, EvolutionConfig, Integrator};
use airy_graph::init::InitialCondition;

fn main() -> airy_graph::error::Result<()> {
    let dir = std::env::temp_dir().join("airy-graph-dissipative-loop");
    std::fs::create_dir_all(&dir)?;
    println!("{:>5} {:>12} {:>14} {:>14} {:>10}", "b", "norm ratio", "mean predicted", "mean measured", "agreement");
    for b in [0.0, 0.5, 0.9, 1.0] {
        let (g, bc) = builtin(&format!("loop_diag(1,{b})"))?;
        let sys = build_generator(&g, &bc, 48)?;
        let u0 = InitialCondition::Gaussian { center: 0.5, width: 0.1 }.nodal(&sys)?;
        let cfg = EvolutionConfig::new(1e-5, 0.05, Integrator::CrankNicolson);
        let rec = run_nodal(&sys, &bc, &u0, &cfg)?.record;
        let (pred, meas) = rec.mean_dissipation();
        println!("{b:>5} {:>12.6} {pred:>14.5} {meas:>14.5} {:>10.1e}", rec.final_norm_ratio(), rec.dissipation_agreement());
        std::fs::write(dir.join(format!("b{b}.csv")), rec.to_csv())?;
    }
    println!("records in {}", dir.display());
    Ok(())
}
