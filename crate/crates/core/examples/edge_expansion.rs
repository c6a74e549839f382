//! Evaluates the truncated edge expansion and its per-term breakdown.

use edge_shadows::evaluator::{eval_tau_terms, face_derivatives, EdgePoint, SeriesSpec};
use edge_shadows::{Geometry, Kind};

fn main() {
    let spec = SeriesSpec::new(Geometry::Crack, Kind::Primal, 1, 1.0, 2, 4);
    let table = spec.build_table().unwrap();
    let p = EdgePoint::new(0.05, 2.0, 0.3);
    let (tau, terms) = eval_tau_terms(&spec, &table, &p).unwrap();
    println!("tau = {tau:.15e}");
    for t in terms {
        println!("  h={} f={}  {:+.6e}", t.key.h, t.key.f, t.value);
    }
    let faces = face_derivatives(&spec, &table, 0.05, 0.3, 1e-5).unwrap();
    println!("(1/rho) dtau/dphi at the faces: {:.2e}, {:.2e}", faces[0], faces[1]);
}
