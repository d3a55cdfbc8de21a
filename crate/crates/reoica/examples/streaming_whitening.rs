//! Stream a correlated Gaussian process through the EMA whitener and watch
//! the whitened covariance approach the identity.
//!
//! Run with: cargo run --release --example streaming_whitening

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reoica::whitening::WhiteningState;

fn main() {
    let mix = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.2, 0.4, 0.8, 0.0, 0.1, 0.3, 0.6]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = WhiteningState::new(3, 0.9995, 1e-6, 64).unwrap();

    let mut zs: Vec<DVector<f64>> = Vec::new();
    for t in 1..=30_000usize {
        let g = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let u = &mix * g;
        state.ema_update(&u).unwrap();
        if t % 64 == 0 {
            state.refresh(3).unwrap();
        }
        if t > 10_000 {
            zs.push(state.whiten(&u).unwrap());
        }
    }

    let count = zs.len() as f64;
    let mean = zs.iter().fold(DVector::zeros(3), |acc, z| acc + z) / count;
    let mut cov = DMatrix::zeros(3, 3);
    for z in &zs {
        let r = z - &mean;
        cov += &r * r.transpose();
    }
    cov /= count;

    println!("input covariance (population):");
    let sigma = &mix * mix.transpose();
    for i in 0..3 {
        println!(
            "  [{:+.3} {:+.3} {:+.3}]",
            sigma[(i, 0)],
            sigma[(i, 1)],
            sigma[(i, 2)]
        );
    }
    println!("whitened covariance over the last 20000 samples:");
    for i in 0..3 {
        println!(
            "  [{:+.3} {:+.3} {:+.3}]",
            cov[(i, 0)],
            cov[(i, 1)],
            cov[(i, 2)]
        );
    }
    let eye = DMatrix::identity(3, 3);
    println!(
        "Frobenius deviation from identity: {:.4}",
        (cov - eye).norm()
    );
}
