//! Classifies every built-in boundary condition and prints the verdicts
//! with the residuals they were decided on.

use airy_graph::boundary::{builtin, classify};
use airy_graph::krein::DEFAULT_TOL;

fn main() -> airy_graph::error::Result<()> {
    let names = [
        "two_halflines_unitary",
        "two_halflines_unitary(20)",
        "star(2,2)",
        "star(1,2)",
        "loop_periodic",
        "loop_diag(1,0)",
        "loop_diag(2,0.5)",
        "loop_diag(1,-1)",
        "loop_diag(1,1.5)",
    ];
    println!("{:<28} {:<26} {:>10}", "builtin", "verdict", "consistent");
    for name in names {
        let (g, bc) = builtin(name)?;
        let c = classify(&g, &bc, DEFAULT_TOL)?;
        println!("{name:<28} {:<26} {:>10}", c.global.to_string(), c.consistent);
        for v in &c.vertices {
            let r = &v.result;
            let residual = match r.unitary.residual_norms.get("form_residual_relative") {
                Some(x) => format!("{x:9.2e}"),
                None => format!("{:>9}", "-"),
            };
            let min = |c: &airy_graph::krein::Certificate| c.min_eigenvalue.unwrap_or(f64::NAN);
            println!(
                "    {:<6} unitary residual {residual}  contraction defect min eig {:9.2e}  adjoint {:9.2e}",
                v.vertex,
                min(&r.contractive),
                min(&r.adjoint_contractive)
            );
        }
    }
    Ok(())
}
