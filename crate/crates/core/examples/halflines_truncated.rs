//! A pulse crossing the coupled vertex of two truncated half-lines, with the
//! mass on each edge tracked over time.

use airy_graph::boundary::{classify, Builtin};
use airy_graph::discretization::build_generator;
use airy_graph::evolution::{Integrator, Stepper};
use airy_graph::krein::DEFAULT_TOL;
use airy_graph::linalg::{c64, CVector};

fn main() -> airy_graph::error::Result<()> {
    let (g, bc) = Builtin::TwoHalflinesUnitary { truncate: Some(8.0) }.build()?;
    let c = classify(&g, &bc, DEFAULT_TOL)?;
    for v in &c.vertices {
        println!("vertex {:<4} {}", v.vertex, v.result.verdict);
    }
    println!("global: {}", c.global);

    let sys = build_generator(&g, &bc, 64)?;
    let u0 = sys.sample(|e, x| if g.edges()[e].id == "e_in" { c64((-((x + 2.0) / 0.6).powi(2)).exp(), 0.0) } else { c64(0.0, 0.0) });
    let mut state = sys.project(&u0)?.state;
    let dt = 2e-3;
    let stepper = Stepper::new(sys.generator(), dt, Integrator::CrankNicolson)?;

    let edge_mass = |state: &CVector, edge: &str| {
        let u = sys.reconstruct(state);
        let mut only = CVector::zeros(u.len());
        let blk = sys.blocks().iter().find(|b| g.edges()[b.edge].id == edge).expect("edge");
        only.rows_mut(blk.offset, blk.len()).copy_from(&u.rows(blk.offset, blk.len()));
        sys.mass_inner(&only, &only).re
    };
    println!("{:>6} {:>10} {:>10} {:>10}", "t", "e_in", "e_out", "total");
    for step in 0..=500 {
        if step % 50 == 0 {
            let (a, b) = (edge_mass(&state, "e_in"), edge_mass(&state, "e_out"));
            println!("{:>6.2} {a:>10.5} {b:>10.5} {:>10.5}", step as f64 * dt, state.norm_squared());
        }
        state = stepper.step(&state)?;
    }
    Ok(())
}
