//! TRW-S on a random loopy energy: the lower bound climbs monotonically
//! toward the energy of the returned labeling, and exact search confirms the
//! optimum.
//!
//! Run with `cargo run --release --example trws_bounds`.

use cutlearn::energy::EnergyFunction;
use cutlearn::infer::{predict_exact, trws, TrwsOptions, EXACT_CAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cutlearn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, k) = (10, 3);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.3) {
                edges.push((u, v));
            }
        }
    }
    let mut energy = EnergyFunction::zeros(n, k, edges)?;
    for u in 0..n {
        for c in energy.unary_mut(u) {
            *c = rng.gen_range(-1.0..1.0);
        }
    }
    for e in 0..energy.edges().len() {
        for c in energy.pairwise_mut(e) {
            *c = rng.gen_range(-1.0..1.0);
        }
    }
    println!("{} nodes, {} edges, {k} labels", n, energy.edges().len());

    let solution = trws(&energy, &TrwsOptions::default());
    for (i, bound) in solution.bound_history.iter().enumerate().take(12) {
        println!("iteration {:2}: lower bound {bound:.6}", i + 1);
    }
    let exact = predict_exact(&energy, EXACT_CAP)?;
    println!(
        "TRW-S energy {:.6} (bound {:.6}, certified {}), exact minimum {:.6}",
        solution.result.energy,
        solution.result.lower_bound.unwrap_or(f64::NEG_INFINITY),
        solution.result.exact,
        exact.energy
    );
    Ok(())
}
