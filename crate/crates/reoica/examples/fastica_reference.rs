//! Offline FastICA reference on the static regime.
//!
//! Run with: cargo run --release --example fastica_reference

use reoica::baselines::{fastica_batch, FastIcaConfig};
use reoica::metrics::{match_sources, si_sdr_sc, DEFAULT_MAX_LAG};
use reoica::mixing::{mix_static, random_mixing_matrix};
use reoica::signals::{chaotic_kinds, generate_sources, super_gaussian_kinds};

fn bench(name: &str, kinds: &[reoica::signals::SourceKind], t: usize) {
    let sources = generate_sources(kinds, t, 4).unwrap();
    let a = random_mixing_matrix(3, 5.0, 5);
    let x = mix_static(&a, &sources).unwrap();
    let out = fastica_batch(&x.data, &FastIcaConfig::default()).unwrap();
    let total = sources.sample_count();
    let w = 5_000.min(total);
    let s_eval = sources.data.columns(total - w, w).into_owned();
    let y_eval = out.components.columns(total - w, w).into_owned();
    let matching = match_sources(&s_eval, &y_eval, DEFAULT_MAX_LAG).unwrap();
    let (per_source, mean) = si_sdr_sc(&s_eval, &y_eval, &matching).unwrap();
    println!(
        "{name}: converged = {} in {} iterations, mean SI-SDR_sc {mean:+.2} dB",
        out.converged, out.iterations
    );
    for (i, kind) in sources.kinds.iter().enumerate() {
        println!(
            "  {kind:<13} |corr| {:.4}, SI-SDR {:+.2} dB",
            matching.corrs[i], per_source[i]
        );
    }
}

fn main() {
    bench("chaotic sources", &chaotic_kinds(), 15_000);
    bench("super-Gaussian sources", &super_gaussian_kinds(), 30_000);
}
