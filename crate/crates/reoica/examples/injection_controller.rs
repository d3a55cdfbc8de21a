//! Trace the injection controller on the nonlinear regime: the guarded
//! branch holds passthrough retention near its floor while the unguarded
//! counterfactual tracks its IER target into crowd-out.
//!
//! Run with: cargo run --release --example injection_controller

use reoica::mixing::Regime;
use reoica::pipeline::{build_mixed_stream, build_sources, run_reoica, Method, RunConfig};
use reoica::signals::chaotic_kinds;

fn trace(method: Method) {
    let config = RunConfig {
        method,
        regime: Regime::Nonlinear,
        seed: 3,
        ..RunConfig::default()
    };
    let sources = build_sources(&config, &chaotic_kinds()).unwrap();
    let mixed = build_mixed_stream(&config, &sources).unwrap();
    let trace = run_reoica(&config, &sources, &mixed).unwrap();

    println!("{method}:");
    println!("  refresh   alpha      IER      SSO    rho_x  coherence");
    for rec in trace.refresh_trace.iter().step_by(16) {
        println!(
            "  {:>7} {:>7.3} {:>8.5} {:>8.5} {:>8.4} {:>10.3}",
            rec.step, rec.alpha, rec.diag.ier, rec.diag.sso, rec.diag.rho_x, rec.diag.coherence
        );
    }
    let steady = trace.steady_state_diagnostics(5_000).unwrap();
    println!(
        "  steady state: alpha {:.3}, IER {:.4}, SSO {:.4}, rho_x {:.4}\n",
        steady.alpha, steady.ier, steady.sso, steady.rho_x
    );
}

fn main() {
    trace(Method::ReoicaRsiGuarded);
    trace(Method::ReoicaRsiUnguarded);
}
