//! Spatial and temporal convergence for the plane wave on the periodic loop.

use airy_graph::boundary::builtin;
use airy_graph::verification::convergence_study;

fn main() -> airy_graph::error::Result<()> {
    let (g, bc) = builtin("loop_periodic")?;
    let dts: Vec<f64> = (0..6).map(|i| 1e-3 / f64::powi(2.0, i)).collect();
    let (spatial, temporal) = convergence_study(&g, &bc, 1.0, &[8, 10, 12, 14, 16, 18], &dts, 0.01)?;
    print!("{}", spatial.to_csv());
    println!();
    print!("{}", temporal.to_csv());
    Ok(())
}
