//! Reducing a cubic term `c * x * y * z` with `c <= 0` to pairwise terms
//! over one auxiliary variable, then minimizing exactly by graph cut.
//!
//! Run with `cargo run --example third_order`.

use cutlearn::energy::{brute_force_minimize_binary, reduce_third_order, BinaryEnergy, ThirdOrderTerm};
use cutlearn::maxflow::minimize_submodular;

fn main() -> cutlearn::Result<()> {
    let term = ThirdOrderTerm::new([0, 1, 2], -3.0)?;
    let reduction = reduce_third_order(&term, 3)?;
    println!("aux unary {:?}", reduction.aux_unary);
    for (var, table) in &reduction.pairs {
        println!("pair (aux, x{var}) {table:?}");
    }

    println!(" x y z | c*xyz | min over aux");
    for mask in 0..8u32 {
        let bits = [mask & 4 != 0, mask & 2 != 0, mask & 1 != 0];
        let mut reduced = BinaryEnergy::new(3);
        reduced.add_third_order(&term)?;
        let min_aux = [false, true]
            .iter()
            .map(|&a| reduced.evaluate(&[bits[0], bits[1], bits[2], a]))
            .fold(f64::INFINITY, f64::min);
        let product = if bits.iter().all(|&b| b) { -3.0 } else { 0.0 };
        println!(" {} {} {} | {product:5.1} | {min_aux:5.1}", bits[0] as u8, bits[1] as u8, bits[2] as u8);
    }

    // a cubic reward plus unaries that mildly discourage switching on
    let mut energy = BinaryEnergy::new(3);
    for u in 0..3 {
        energy.add_unary(u, 0.0, 0.8);
    }
    energy.add_third_order(&term)?;
    println!("reduced energy submodular: {}", energy.is_submodular());
    let (labels, value) = minimize_submodular(&energy)?;
    let (_, best) = brute_force_minimize_binary(&energy)?;
    println!("graph cut {:?} energy {value:.2}, enumeration {best:.2}", &labels[..3]);
    Ok(())
}
