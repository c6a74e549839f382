//! Trigonometric polynomials: products with the elementary factors,
//! derivatives, exact and float evaluation.

use edge_shadows::exactnum::rat;
use edge_shadows::{ElemFactor, ExtScalar, TrigPoly};

fn main() {
    let y = TrigPoly::from_terms(3, [(2, ExtScalar::one(), ExtScalar::from_ints((0, 1), (1, 3)))]);
    println!("y          = {y}");
    for f in ElemFactor::ALL {
        println!("{f:?} · y = {}", y.mul_elem(f));
    }
    println!("y'         = {}", y.diff());
    println!("y''        = {}", y.diff().diff());
    for angle in [rat(-1, 1), rat(1, 2), rat(3, 4), rat(1, 3)] {
        match y.eval_exact(&angle) {
            Ok(v) => println!("y({angle}π)   = {v}"),
            Err(e) => println!("y({angle}π)   : {e}"),
        }
    }
    println!("y(0.7)     ≈ {:.15}", y.eval_float(0.7));
    println!("json       = {}", y.to_json());
}
