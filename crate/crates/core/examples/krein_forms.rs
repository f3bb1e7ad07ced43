//! The indefinite trace forms: signatures, the Krein adjoint and the
//! pairing identity it satisfies.

use airy_graph::boundary::{halfline_coupling, vertex_forms, builtin};
use airy_graph::graph::Side;
use airy_graph::krein::{edge_block, is_krein_unitary, krein_adjoint, KreinForm, TraceVector};
use airy_graph::linalg::{c64, fro};

fn main() -> airy_graph::error::Result<()> {
    for (alpha, beta) in [(1.0, 0.0), (0.1, -5.0), (10.0, 5.0)] {
        let form = KreinForm::from_coefficients(Side::Right, &[(alpha, beta)]);
        let sig = form.signature()?;
        println!("alpha {alpha:>4}, beta {beta:>4}: block {:?} signature ({}, {})", edge_block(alpha, beta), sig.positive, sig.negative);
    }

    let (g, _) = builtin("two_halflines_unitary")?;
    let (b_r, b_l) = vertex_forms(&g, "v")?;
    let l = halfline_coupling();
    let cert = is_krein_unitary(&b_r, &b_l, &l, 1e-12);
    println!("\nhalf-line coupling certificate:\n{}", serde_json::to_string_pretty(&cert).unwrap());

    let sharp = krein_adjoint(&b_r, &b_l, &l)?;
    let inverse = l.clone().try_inverse().expect("invertible");
    println!("||L# - L^-1|| = {:.2e}", fro(&(&sharp - inverse)));

    let x = TraceVector::from_slice(Side::Right, &[c64(1.0, 0.0), c64(0.0, 2.0), c64(-1.0, 1.0)]);
    let y = TraceVector::from_slice(Side::Left, &[c64(0.5, 0.0), c64(1.0, -1.0), c64(0.0, 3.0)]);
    let lx = TraceVector::new(Side::Left, &l * &x.values);
    let sy = TraceVector::new(Side::Right, &sharp * &y.values);
    println!("<Lx|y>_l = {:.6}", b_l.inner(&lx, &y)?);
    println!("<x|L#y>_r = {:.6}", b_r.inner(&x, &sy)?);
    Ok(())
}
