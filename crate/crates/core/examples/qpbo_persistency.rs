//! QPBO on a non-submodular energy: partial labeling, 0.5 relaxation and the
//! pairwise rounding rule.
//!
//! Run with `cargo run --example qpbo_persistency`.

use cutlearn::energy::{brute_force_minimize_binary, BinaryEnergy};
use cutlearn::qpbo::{pair_products, qpbo_r, qpbo_solve};

fn main() -> cutlearn::Result<()> {
    // a frustrated triangle (every edge prefers disagreement) hanging off a
    // chain that QPBO can still label
    let mut energy = BinaryEnergy::new(5);
    let repel = [[1.0, 0.0], [0.0, 1.0]];
    energy.add_pairwise(0, 1, repel);
    energy.add_pairwise(1, 2, repel);
    energy.add_pairwise(0, 2, repel);
    energy.add_unary(3, 0.0, -1.0);
    energy.add_pairwise(3, 4, [[0.0, 0.5], [0.5, -1.0]]);
    energy.add_pairwise(2, 3, [[0.0, 0.0], [0.0, 0.1]]);
    println!("submodular: {}", energy.is_submodular());

    let partial = qpbo_solve(&energy);
    println!("QPBO labels: {partial:?}");
    let (best, value) = brute_force_minimize_binary(&energy)?;
    println!("one global minimizer: {best:?} (energy {value})");
    for (u, label) in partial.iter().enumerate() {
        if let Some(bit) = label.value() {
            assert_eq!(bit, best[u], "persistency");
        }
    }

    let relaxed = qpbo_r(&energy);
    let values: Vec<f64> = relaxed.iter().map(|v| v.as_f64()).collect();
    println!("QPBO-R values: {values:?}");
    println!("pair products, literal   : {:?}", pair_products(&relaxed, &energy, false));
    println!("pair products, heuristic : {:?}", pair_products(&relaxed, &energy, true));
    Ok(())
}
