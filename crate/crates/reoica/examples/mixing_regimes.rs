//! Build observations under the three mixing regimes and verify their
//! headline properties: condition-number control, the sinusoidal drift
//! formula, and nonlinear-regime SNR calibration.
//!
//! Run with: cargo run --release --example mixing_regimes

use reoica::mixing::{
    mix_nonlinear, mix_static, mix_time_varying, random_drift_matrix, random_mixing_matrix,
};
use reoica::signals::{chaotic_kinds, generate_sources};

fn main() {
    let sources = generate_sources(&chaotic_kinds(), 15_000, 7).unwrap();

    let a = random_mixing_matrix(3, 5.0, 11);
    let sv = a.clone().svd(false, false).singular_values;
    println!("mixing matrix condition number: {:.3} (bound 5)", sv[0] / sv[2]);

    let x_static = mix_static(&a, &sources).unwrap();
    println!(
        "static: {} channels x {} samples, first column norm {:.3}",
        x_static.num_channels(),
        x_static.sample_count(),
        x_static.data.column(0).norm()
    );

    let delta = random_drift_matrix(&a, 12);
    let x_tv = mix_time_varying(&a, &delta, 0.3, 0.5, &sources).unwrap();
    // At t = 0 the drift vanishes, so the columns agree exactly.
    let diff0 = (x_tv.data.column(0) - x_static.data.column(0)).norm();
    println!("time-varying: eps = 0.3, f = 0.5, |x_tv(0) - x_static(0)| = {diff0:.2e}");

    let x_nl = mix_nonlinear(&a, 0.8, 10.0, &sources, 99).unwrap();
    // Re-measure the SNR from the clean part.
    let mut clean_power = 0.0;
    let mut noise_power = 0.0;
    for t in 0..sources.sample_count() {
        let clean = (&a * sources.data.column(t)).map(|v| (0.8 * v).tanh());
        clean_power += clean.norm_squared();
        noise_power += (x_nl.data.column(t) - clean).norm_squared();
    }
    println!(
        "nonlinear: gamma = 0.8, requested SNR 10 dB, measured {:.2} dB",
        10.0 * (clean_power / noise_power).log10()
    );
}
