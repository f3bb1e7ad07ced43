//! The boundary identity for the free operator, checked on random smooth
//! lifts of trace data over a finite 3-star.

use airy_graph::graph::{Edge, MetricGraph, Side};
use airy_graph::verification::{check_greens_identity, lift_bound_constant, random_lift};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> airy_graph::error::Result<()> {
    let g = MetricGraph::from_parts(
        &["c", "l1", "l2", "l3"],
        vec![
            Edge::finite("s1", -1.0, 0.0, "l1", "c", 1.0, 0.5),
            Edge::finite("s2", 0.0, 0.7, "c", "l2", 2.0, -1.0),
            Edge::finite("s3", 0.0, 1.3, "c", "l3", 0.5, 0.0),
        ],
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..5 {
        let u = random_lift(&g, &mut rng);
        let v = random_lift(&g, &mut rng);
        let check = check_greens_identity(&g, &u, &v, 32)?;
        println!("{}", serde_json::to_string(&check).unwrap());
    }
    for side in [Side::Left, Side::Right] {
        println!("lift bound constant, {side} side: {:.3}", lift_bound_constant(&g, side, 32)?);
    }
    Ok(())
}
