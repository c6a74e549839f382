//! Primal shadows of the penny-shaped crack, printed as LaTeX blocks.

use edge_shadows::goldens::{emit_table, Format};
use edge_shadows::{build_table, Geometry, Kind, TableExtent};

fn main() {
    let table = build_table(Geometry::Crack, Kind::Primal, &[1], TableExtent::triangle(4)).unwrap();
    print!("{}", emit_table(&table, Format::Latex));
    for (key, _) in table.entries() {
        let rec = table.record(key).unwrap();
        if rec.degenerate {
            println!("% {key}: degenerate level, kernel component {}", if rec.kernel_dropped { "dropped" } else { "absent" });
        }
    }
}
