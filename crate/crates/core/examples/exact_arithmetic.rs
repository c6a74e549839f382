//! Exact arithmetic in Q(√3).

use edge_shadows::exactnum::rat;
use edge_shadows::ExtScalar;

fn main() {
    let x: ExtScalar = "1/2+1/3r3".parse().unwrap();
    let y = ExtScalar::sqrt3();
    println!("x = {x}");
    println!("x + √3 = {}", &x + &y);
    println!("x · √3 = {}", &x * &y);
    println!("1 / x = {}", x.inv().unwrap());
    println!("norm(x) = {}", x.norm());
    println!("x · x̄ = {}", &x * &x.conjugate());
    println!("x scaled by 6 = {}", x.scale(&rat(6, 1)));
    println!("x ≈ {:.15}", x.to_f64());
    println!("1/0 -> {:?}", ExtScalar::zero().inv());
}
