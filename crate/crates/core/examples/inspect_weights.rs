//! Learned pairwise weights for the planted "support" edge feature next to
//! the generator's compatibility table, with their rank correlation.
//!
//! Run with `cargo run --release --example inspect_weights`.

use cutlearn::cli::format_matrix;
use cutlearn::graphdata::{generate_synthetic, GeneratorConfig, SUPPORT_FEATURE};
use cutlearn::learn::{train, TrainConfig};

/// Average ranks, ties sharing the mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0;
        for &idx in &order[i..=j] {
            out[idx] = mean;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn main() -> cutlearn::Result<()> {
    let generator = GeneratorConfig::default();
    let k = generator.label_count;
    let data = generate_synthetic(&generator, 0)?;
    let (w, _) = train(&data, &TrainConfig::default())?;
    let learned = w.pairwise_matrix(SUPPORT_FEATURE);
    let planted = generator.planted_compatibility();
    println!("learned pairwise weights, support feature:");
    print!("{}", format_matrix(&learned, k));
    println!("planted compatibility:");
    print!("{}", format_matrix(&planted, k));
    println!("spearman rank correlation {:.4}", pearson(&ranks(&learned), &ranks(&planted)));
    Ok(())
}
