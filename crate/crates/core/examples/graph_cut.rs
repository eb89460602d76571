//! Exact minimization of a submodular binary energy by min cut.
//!
//! Run with `cargo run --example graph_cut`.

use cutlearn::energy::{brute_force_minimize_binary, BinaryEnergy};
use cutlearn::maxflow::{build_flow_network, minimize_submodular};

fn main() -> cutlearn::Result<()> {
    // a 2x3 grid: data terms pull the left column to 1 and the right to 0,
    // attractive pairwise terms reward equal labels
    let mut energy = BinaryEnergy::new(6);
    for (node, (c0, c1)) in [(0, (2.0, 0.0)), (3, (1.5, 0.0)), (2, (0.0, 2.0)), (5, (0.0, 1.0))] {
        energy.add_unary(node, c0, c1);
    }
    energy.add_unary(1, 0.2, 0.0);
    energy.add_unary(4, 0.0, 0.3);
    let smooth = [[0.0, 1.0], [1.0, 0.0]];
    for (u, v) in [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)] {
        energy.add_pairwise(u, v, smooth);
    }
    println!("submodular: {}", energy.is_submodular());

    let (mut network, offset) = build_flow_network(&energy)?;
    let cut = network.solve();
    println!("max flow {:.3} + constant {:.3}", cut.flow, offset);

    let (labels, value) = minimize_submodular(&energy)?;
    let (best, best_value) = brute_force_minimize_binary(&energy)?;
    let show = |bits: &[bool]| bits.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
    println!("graph cut  : {} energy {value:.3}", show(&labels));
    println!("enumeration: {} energy {best_value:.3}", show(&best));
    Ok(())
}
