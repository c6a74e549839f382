//! Convergence order of the truncated expansion: the Laplacian residual
//! should decay like ρ^(α + K − 1).

use edge_shadows::evaluator::{residual_slope, SeriesSpec};
use edge_shadows::{Geometry, Kind};

fn main() {
    for g in [Geometry::Crack, Geometry::VNotch90] {
        for order in 0..=4 {
            let spec = SeriesSpec::new(g, Kind::Primal, 1, 1.0, 2, order);
            let table = spec.build_table().unwrap();
            let r = residual_slope(&spec, &table, 1e-3, 1e-2, 12).unwrap();
            println!("{g:<8} K={order}  slope {:+.3}  expected {:+.3}", r.slope, r.expected);
        }
    }
    let spec = SeriesSpec::new(Geometry::Crack, Kind::Primal, 1, 1.0, 2, 2);
    let table = spec.build_table().unwrap();
    let r = residual_slope(&spec, &table, 1e-3, 1e-2, 8).unwrap();
    println!("{}{}", r.to_csv(), r.summary_json());
}
