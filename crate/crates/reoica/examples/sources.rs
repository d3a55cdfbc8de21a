//! Generate both benchmark source sets and print per-row statistics.
//!
//! Run with: cargo run --release --example sources

use reoica::signals::{chaotic_kinds, generate_sources, super_gaussian_kinds, SAMPLE_RATE_HZ};

fn describe(name: &str, kinds: &[reoica::signals::SourceKind], t: usize, seed: u64) {
    let sources = generate_sources(kinds, t, seed).expect("source generation");
    println!("{name} (T = {t}, seed = {seed}):");
    for (i, kind) in sources.kinds.iter().enumerate() {
        let row: Vec<f64> = sources.data.row(i).iter().cloned().collect();
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / row.len() as f64;
        let peak = row.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
        let excess_kurtosis = row
            .iter()
            .map(|v| (v - mean).powi(4))
            .sum::<f64>()
            / row.len() as f64
            / (var * var)
            - 3.0;
        println!(
            "  {kind:<13} mean {mean:+.2e}  var {var:.6}  peak {peak:.2}  excess kurtosis {excess_kurtosis:+.2}"
        );
    }
    println!();
}

fn main() {
    describe("chaotic benchmark set", &chaotic_kinds(), 15_000, 0);
    describe("super-Gaussian set", &super_gaussian_kinds(), 30_000, 0);

    // Chirp sweep check via zero crossings.
    let chirp = generate_sources(&[reoica::signals::SourceKind::Chirp], 1_000, 0).unwrap();
    let row: Vec<f64> = chirp.data.row(0).iter().cloned().collect();
    let crossings: Vec<usize> = (1..row.len())
        .filter(|&k| (row[k - 1] <= 0.0) != (row[k] <= 0.0))
        .collect();
    let first = crossings[1] - crossings[0];
    let last = crossings[crossings.len() - 1] - crossings[crossings.len() - 2];
    println!(
        "chirp sweep: first half-period {first} samples (~{:.2} Hz), last {last} samples (~{:.2} Hz)",
        SAMPLE_RATE_HZ / (2.0 * first as f64),
        SAMPLE_RATE_HZ / (2.0 * last as f64)
    );
}
