//! The golden DSL: parse, re-emit in all three formats, and report a
//! positioned parse error.

use edge_shadows::goldens::{emit_entry, parse_entry, Format};

fn main() {
    let src = "[vnotch90 primal j=1 h=2 f=0]\n  -3/20 sin 2/3 ; 0-1/20r3 cos 2/3\n";
    let e = parse_entry(src).unwrap();
    for f in [Format::Dsl, Format::Latex, Format::Json] {
        println!("{}", emit_entry(&e, f).trim_end());
    }
    assert_eq!(emit_entry(&e, Format::Dsl), src);
    match parse_entry("[crack primal j=1 h=0 f=1]\n  1/4 sine 1/2") {
        Ok(_) => unreachable!(),
        Err(err) => println!("error at {err}"),
    }
}
