//! V-notch primal and dual shadows; coefficients live in Q(√3).

use edge_shadows::goldens::{emit_table, Format};
use edge_shadows::{build_table, Geometry, Kind, TableExtent};

fn main() {
    let primal = build_table(Geometry::VNotch90, Kind::Primal, &[1], TableExtent::triangle(3)).unwrap();
    print!("{}", emit_table(&primal, Format::Dsl));
    let dual = build_table(Geometry::VNotch90, Kind::Dual, &[2], TableExtent::rectangle(0, 2)).unwrap();
    print!("{}", emit_table(&dual, Format::Dsl));
    // integer exponents in the dual family run into a resonance
    match build_table(Geometry::VNotch90, Kind::Dual, &[3], TableExtent::rectangle(0, 4)) {
        Ok(_) => println!("j=3 dual solved"),
        Err(e) => println!("j=3 dual: {e}"),
    }
}
