//! Miniature benchmark harness run: the cross-regime comparison and the
//! injection-mechanism table on a reduced seed set (3 seeds for speed; the
//! `reoica` binary runs the full 10-seed protocol).
//!
//! Run with: cargo run --release --example benchmark_tables

use reoica::harness::{run_experiment, ExperimentSpec};
use reoica::mixing::Regime;
use reoica::pipeline::Method;

fn show(title: &str, spec: &ExperimentSpec) {
    let out = run_experiment(spec).expect("experiment");
    assert!(out.errors.is_empty(), "runs failed: {:?}", out.errors);
    println!("{title}");
    println!(
        "  {:<13} {:<22} {:>9} {:>7} {:>5} {:>8} {:>7}",
        "regime", "method", "si_sdr", "corr", "win", "ier", "rho_x"
    );
    for row in &out.aggregates {
        println!(
            "  {:<13} {:<22} {:>9.2} {:>7.3} {:>5} {:>8} {:>7}",
            row.regime,
            row.method,
            row.si_sdr_sc_mean,
            row.mean_abs_corr_mean,
            row.win_count
                .map(|w| format!("{w}/{}", row.seeds))
                .unwrap_or_else(|| "-".into()),
            row.ier_mean
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into()),
            row.rho_x_mean
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    println!();
}

fn main() {
    let seeds: Vec<u64> = (0..3).collect();

    show(
        "cross-regime comparison (3 seeds)",
        &ExperimentSpec {
            regimes: vec![Regime::Static, Regime::TimeVarying, Regime::Nonlinear],
            methods: vec![Method::ReoicaBase, Method::Vanilla, Method::Fastica],
            seeds: seeds.clone(),
            skip_curves: true,
            ..ExperimentSpec::default()
        },
    );

    show(
        "injection mechanism on the nonlinear regime (3 seeds)",
        &ExperimentSpec {
            regimes: vec![Regime::Nonlinear],
            methods: vec![
                Method::ReoicaBase,
                Method::ReoicaSqrt,
                Method::ReoicaRsiGuarded,
                Method::ReoicaRsiUnguarded,
            ],
            seeds,
            reference: Some(Method::ReoicaBase),
            skip_curves: true,
            ..ExperimentSpec::default()
        },
    );
}
