//! The relaxed QPBO-R separation oracle against the exact graph-cut oracle.
//! Without the pairwise rounding rule the relaxed oracle returns a
//! constraint less violated than ones already in the working set, which an
//! exact oracle never does, and the cutting-plane loop stops early.
//!
//! Run with `cargo run --release --example baseline_failure`.

use cutlearn::graphdata::{generate_synthetic, GeneratorConfig};
use cutlearn::learn::{train_with_observer, OracleKind, TrainConfig};

fn main() -> cutlearn::Result<()> {
    let data = generate_synthetic(&GeneratorConfig::default(), 0)?;
    let runs = [
        ("exact graph cut", OracleKind::Exact, true),
        ("qpbo-r, no rounding rule", OracleKind::QpboR, false),
        ("qpbo-r, rounding rule", OracleKind::QpboR, true),
    ];
    for (name, oracle, heuristic) in runs {
        let cfg = TrainConfig {
            oracle,
            heuristic,
            max_iterations: 200,
            ..TrainConfig::default()
        };
        println!("{name}:");
        let (_, report) = train_with_observer(&data, &cfg, |r| {
            if r.iteration <= 6 {
                println!("  iteration {:3}  slack {:10.4}  new violation {:10.4}", r.iteration, r.slack, r.violation);
            }
        })?;
        println!("  -> {:?} after {} iterations\n", report.termination, report.iterations.len());
    }
    Ok(())
}
