//! Neumann eigenpairs of both wedges and their face derivatives.

use edge_shadows::Geometry;

fn main() {
    for g in Geometry::ALL {
        println!("{g}: φ ∈ [{}π, {}π]", g.phi1_over_pi(), g.phi2_over_pi());
        for j in 1..=6 {
            let y = g.eigenfunction(j);
            let d = y.diff();
            let faces = [g.phi1_over_pi(), g.phi2_over_pi()].map(|a| d.eval_exact(&a).unwrap().to_string());
            println!("  j={j}  α={:<4}  φ_0,j,0 = {:<28}  y' at faces = {faces:?}", g.eigenvalue(j).to_string(), y.to_string());
        }
    }
}
