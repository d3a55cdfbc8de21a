//! Separation quality metrics: lag-aware correlation, optimal source-output
//! assignment, the scale-invariant SDR family, and running curves.
//!
//! Lag convention: a positive lag tau means the estimate is delayed relative
//! to the source, i.e. correlations are computed between s[t] and y[t + tau]
//! on the overlapping region.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_LAG: usize = 200;

/// Assignment between sources and outputs, with per-pair alignment data.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// permutation[i] = output row matched to source i.
    pub permutation: Vec<usize>,
    /// Maximizing lag per matched pair (positive = estimate delayed).
    pub lags: Vec<i64>,
    /// Sign of the correlation at the maximizing lag (+1.0 / -1.0).
    pub signs: Vec<f64>,
    /// |correlation| per matched pair, in [0, 1].
    pub corrs: Vec<f64>,
}

impl MatchResult {
    pub fn mean_abs_corr(&self) -> f64 {
        if self.corrs.is_empty() {
            return 0.0;
        }
        self.corrs.iter().sum::<f64>() / self.corrs.len() as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct LagCorr {
    abs_corr: f64,
    lag: i64,
    sign: f64,
}

/// Pearson correlation (population normalization) of s[t] with y[t + lag]
/// over the overlapping index range. Zero-variance overlap yields 0.
fn corr_at_lag(s: &[f64], y: &[f64], lag: i64) -> f64 {
    let len = s.len() as i64;
    let start = (-lag).max(0);
    let end = len - lag.max(0);
    if end - start < 2 {
        return 0.0;
    }
    let count = (end - start) as f64;
    let (mut sum_s, mut sum_y) = (0.0, 0.0);
    for t in start..end {
        sum_s += s[t as usize];
        sum_y += y[(t + lag) as usize];
    }
    let (mean_s, mean_y) = (sum_s / count, sum_y / count);
    let (mut cov, mut var_s, mut var_y) = (0.0, 0.0, 0.0);
    for t in start..end {
        let ds = s[t as usize] - mean_s;
        let dy = y[(t + lag) as usize] - mean_y;
        cov += ds * dy;
        var_s += ds * ds;
        var_y += dy * dy;
    }
    if var_s <= 0.0 || var_y <= 0.0 {
        return 0.0;
    }
    cov / (var_s * var_y).sqrt()
}

fn best_lag_corr(s: &[f64], y: &[f64], max_lag: usize) -> LagCorr {
    let mut best = LagCorr {
        abs_corr: -1.0,
        lag: 0,
        sign: 1.0,
    };
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        let c = corr_at_lag(s, y, lag);
        if c.abs() > best.abs_corr {
            best = LagCorr {
                abs_corr: c.abs(),
                lag,
                sign: if c < 0.0 { -1.0 } else { 1.0 },
            };
        }
    }
    best
}

fn lag_corr_table(
    sources: &DMatrix<f64>,
    outputs: &DMatrix<f64>,
    max_lag: usize,
) -> Result<Vec<Vec<LagCorr>>> {
    if sources.nrows() != outputs.nrows() || sources.ncols() != outputs.ncols() {
        return Err(Error::DimensionMismatch(
            "sources and outputs must share shape for matching".into(),
        ));
    }
    if sources.ncols() <= 2 * max_lag + 2 {
        return Err(Error::Config(format!(
            "window of {} samples is too short for max lag {max_lag}",
            sources.ncols()
        )));
    }
    let n = sources.nrows();
    let mut table = Vec::with_capacity(n);
    for i in 0..n {
        let s: Vec<f64> = sources.row(i).iter().cloned().collect();
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let y: Vec<f64> = outputs.row(j).iter().cloned().collect();
            row.push(best_lag_corr(&s, &y, max_lag));
        }
        table.push(row);
    }
    Ok(table)
}

/// rho_ij = max over |tau| <= max_lag of |corr(s_i, y_j shifted by tau)|.
pub fn lag_corr_matrix(
    sources: &DMatrix<f64>,
    outputs: &DMatrix<f64>,
    max_lag: usize,
) -> Result<DMatrix<f64>> {
    let table = lag_corr_table(sources, outputs, max_lag)?;
    let n = table.len();
    Ok(DMatrix::from_fn(n, n, |i, j| table[i][j].abs_corr))
}

/// Assignment maximizing the total score. Lags and signs are neutral here;
/// use `match_sources` for the lag-aware pipeline matching.
pub fn hungarian_match(scores: &DMatrix<f64>) -> MatchResult {
    let permutation = assign_max(scores);
    let n = scores.nrows();
    MatchResult {
        corrs: (0..n).map(|i| scores[(i, permutation[i])]).collect(),
        lags: vec![0; n],
        signs: vec![1.0; n],
        permutation,
    }
}

/// Lag-aware matching: Hungarian assignment on the max-|corr| matrix, with
/// the maximizing lag and sign recorded per matched pair.
pub fn match_sources(
    sources: &DMatrix<f64>,
    outputs: &DMatrix<f64>,
    max_lag: usize,
) -> Result<MatchResult> {
    let table = lag_corr_table(sources, outputs, max_lag)?;
    let n = table.len();
    let scores = DMatrix::from_fn(n, n, |i, j| table[i][j].abs_corr);
    let permutation = assign_max(&scores);
    let mut lags = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    let mut corrs = Vec::with_capacity(n);
    for (i, &j) in permutation.iter().enumerate() {
        lags.push(table[i][j].lag);
        signs.push(table[i][j].sign);
        corrs.push(table[i][j].abs_corr);
    }
    Ok(MatchResult {
        permutation,
        lags,
        signs,
        corrs,
    })
}

/// O(n^3) Hungarian algorithm (potentials formulation), maximizing the total
/// score of a square matrix. Returns row -> column assignment.
fn assign_max(scores: &DMatrix<f64>) -> Vec<usize> {
    let n = scores.nrows();
    assert_eq!(n, scores.ncols(), "assignment needs a square score matrix");
    assert!(n >= 1);
    // Minimize the negated scores with the classic potentials algorithm
    // (1-based arrays, column 0 is the virtual root).
    let cost = |i: usize, j: usize| -scores[(i, j)];
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row assigned to column j

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Scale-invariant SDR in dB: project the estimate onto the target and
/// report the projected-to-residual power ratio. Collinear estimates return
/// +inf (the residual is numerically zero).
pub fn si_sdr(target: &[f64], estimate: &[f64]) -> Result<f64> {
    if target.len() != estimate.len() || target.len() < 2 {
        return Err(Error::DimensionMismatch(
            "si_sdr needs equal-length sequences of at least 2 samples".into(),
        ));
    }
    let target_energy: f64 = target.iter().map(|v| v * v).sum();
    if target_energy <= 0.0 {
        return Err(Error::Metric("si_sdr target has zero energy".into()));
    }
    let dot: f64 = target
        .iter()
        .zip(estimate.iter())
        .map(|(t, e)| t * e)
        .sum();
    let alpha = dot / target_energy;
    let mut proj_energy = 0.0;
    let mut resid_energy = 0.0;
    for (t, e) in target.iter().zip(estimate.iter()) {
        let p = alpha * t;
        proj_energy += p * p;
        let r = p - e;
        resid_energy += r * r;
    }
    if resid_energy <= 0.0 || resid_energy < 1e-20 * proj_energy {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (proj_energy / resid_energy).log10())
}

/// Lag-compensated, sign-corrected, scale-invariant SDR per matched pair:
/// shift the matched output by its maximizing lag, apply the sign, truncate
/// both series to the overlap, and evaluate `si_sdr`. Returns the per-source
/// values and their mean.
pub fn si_sdr_sc(
    sources: &DMatrix<f64>,
    outputs: &DMatrix<f64>,
    matching: &MatchResult,
) -> Result<(Vec<f64>, f64)> {
    let n = sources.nrows();
    let len = sources.ncols() as i64;
    if matching.permutation.len() != n {
        return Err(Error::DimensionMismatch(
            "matching size differs from source count".into(),
        ));
    }
    let mut per_source = Vec::with_capacity(n);
    for i in 0..n {
        let j = matching.permutation[i];
        let lag = matching.lags[i];
        let sign = matching.signs[i];
        let start = (-lag).max(0);
        let end = len - lag.max(0);
        if end - start < 2 {
            return Err(Error::Metric(format!(
                "overlap too short for lag {lag} on source {i}"
            )));
        }
        let target: Vec<f64> = (start..end).map(|t| sources[(i, t as usize)]).collect();
        let estimate: Vec<f64> = (start..end)
            .map(|t| sign * outputs[(j, (t + lag) as usize)])
            .collect();
        per_source.push(si_sdr(&target, &estimate)?);
    }
    let mean = per_source.iter().sum::<f64>() / n as f64;
    Ok((per_source, mean))
}

/// One point of the running separation curve.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    /// End of the trailing window (1-based sample count).
    pub t: usize,
    /// Mean unshifted, sign-corrected SI-SDR over the matched pairs.
    pub value: f64,
}

/// Trailing-window running curve: at each evaluation point, match sources to
/// outputs by zero-lag |correlation| (Hungarian), sign-correct, and average
/// the unshifted SI-SDR over pairs.
pub fn running_si_sdr(
    sources: &DMatrix<f64>,
    outputs: &DMatrix<f64>,
    window: usize,
    stride: usize,
) -> Result<Vec<CurvePoint>> {
    let total = sources.ncols();
    if window > total {
        return Err(Error::Config(format!(
            "window {window} exceeds horizon {total}"
        )));
    }
    if stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    let n = sources.nrows();
    let mut curve = Vec::new();
    let mut t = window;
    while t <= total {
        let s_win = sources.columns(t - window, window).into_owned();
        let y_win = outputs.columns(t - window, window).into_owned();
        // Zero-lag correlation matrix with signs.
        let mut scores = DMatrix::zeros(n, n);
        let mut sign_at = DMatrix::zeros(n, n);
        for i in 0..n {
            let s: Vec<f64> = s_win.row(i).iter().cloned().collect();
            for j in 0..n {
                let y: Vec<f64> = y_win.row(j).iter().cloned().collect();
                let c = corr_at_lag(&s, &y, 0);
                scores[(i, j)] = c.abs();
                sign_at[(i, j)] = if c < 0.0 { -1.0 } else { 1.0 };
            }
        }
        let perm = assign_max(&scores);
        let mut acc = 0.0;
        for i in 0..n {
            let j = perm[i];
            let target: Vec<f64> = s_win.row(i).iter().cloned().collect();
            let estimate: Vec<f64> = y_win.row(j).iter().map(|v| sign_at[(i, j)] * v).collect();
            acc += si_sdr(&target, &estimate)?;
        }
        curve.push(CurvePoint {
            t,
            value: acc / n as f64,
        });
        t += stride;
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn signal_matrix(n: usize, len: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, len, |i, t| {
            ((t as f64) * 0.013 * (i as f64 + 1.0)).sin() + 0.3 * rng.gen::<f64>()
        })
    }

    #[test]
    fn self_correlation_is_one_at_zero_lag() {
        let s = signal_matrix(3, 1_000, 1);
        let rho = lag_corr_matrix(&s, &s, 200).unwrap();
        for i in 0..3 {
            assert!((rho[(i, i)] - 1.0).abs() < 1e-12);
        }
        let m = match_sources(&s, &s, 200).unwrap();
        assert_eq!(m.permutation, vec![0, 1, 2]);
        assert_eq!(m.lags, vec![0, 0, 0]);
    }

    #[test]
    fn negated_output_matches_with_abs_value() {
        let s = signal_matrix(2, 800, 2);
        let y = -s.clone();
        let rho = lag_corr_matrix(&s, &y, 100).unwrap();
        for i in 0..2 {
            assert!((rho[(i, i)] - 1.0).abs() < 1e-12);
        }
        let m = match_sources(&s, &y, 100).unwrap();
        assert_eq!(m.signs, vec![-1.0, -1.0]);
    }

    #[test]
    fn delayed_output_recovers_lag() {
        // y[t] = s[t - 50]: the estimate is delayed by 50, so the maximizing
        // lag under our convention is +50.
        let s = signal_matrix(1, 1_200, 3);
        let mut y = DMatrix::zeros(1, 1_200);
        for t in 50..1_200 {
            y[(0, t)] = s[(0, t - 50)];
        }
        let m = match_sources(&s, &y, 200).unwrap();
        assert_eq!(m.lags, vec![50]);
        assert!(m.corrs[0] > 0.99);
        // Exhaustive-scan oracle agrees.
        let s0: Vec<f64> = s.row(0).iter().cloned().collect();
        let y0: Vec<f64> = y.row(0).iter().cloned().collect();
        let mut best = (0i64, -1.0f64);
        for lag in -200i64..=200 {
            let c = corr_at_lag(&s0, &y0, lag).abs();
            if c > best.1 {
                best = (lag, c);
            }
        }
        assert_eq!(best.0, 50);
    }

    #[test]
    fn hungarian_picks_dominant_diagonal() {
        let scores = DMatrix::from_row_slice(
            3,
            3,
            &[0.9, 0.1, 0.2, 0.2, 0.8, 0.1, 0.1, 0.3, 0.7],
        );
        let m = hungarian_match(&scores);
        assert_eq!(m.permutation, vec![0, 1, 2]);
        let total: f64 = m.corrs.iter().sum();
        assert!((total - 2.4).abs() < 1e-12);
    }

    #[test]
    fn hungarian_identity_and_antidiagonal() {
        let eye = DMatrix::<f64>::identity(4, 4);
        assert_eq!(hungarian_match(&eye).permutation, vec![0, 1, 2, 3]);
        let anti = DMatrix::from_fn(4, 4, |i, j| if i + j == 3 { 1.0 } else { 0.0 });
        assert_eq!(hungarian_match(&anti).permutation, vec![3, 2, 1, 0]);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        fn brute(scores: &DMatrix<f64>) -> f64 {
            fn rec(scores: &DMatrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
                if row == scores.nrows() {
                    return 0.0;
                }
                let mut best = f64::NEG_INFINITY;
                for j in 0..scores.ncols() {
                    if !used[j] {
                        used[j] = true;
                        let v = scores[(row, j)] + rec(scores, row + 1, used);
                        used[j] = false;
                        best = best.max(v);
                    }
                }
                best
            }
            rec(scores, 0, &mut vec![false; scores.ncols()])
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..200 {
            let n = 3 + (trial % 4);
            let scores = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
            let m = hungarian_match(&scores);
            let ours: f64 = (0..n).map(|i| scores[(i, m.permutation[i])]).sum();
            let best = brute(&scores);
            assert!((ours - best).abs() < 1e-9, "trial {trial}: {ours} vs {best}");
            // Bijection check.
            let mut seen = vec![false; n];
            for &j in &m.permutation {
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
    }

    #[test]
    fn si_sdr_sentinels_and_scale_invariance() {
        let target: Vec<f64> = (0..500).map(|t| (t as f64 * 0.1).sin()).collect();
        assert_eq!(si_sdr(&target, &target).unwrap(), f64::INFINITY);
        let doubled: Vec<f64> = target.iter().map(|v| 2.0 * v).collect();
        assert_eq!(si_sdr(&target, &doubled).unwrap(), f64::INFINITY);
        assert!(matches!(
            si_sdr(&vec![0.0; 500], &target),
            Err(Error::Metric(_))
        ));
    }

    #[test]
    fn si_sdr_orthogonal_equal_power_noise_is_zero_db() {
        // sin and cos over full periods are orthogonal with equal power.
        let len = 1_000;
        use std::f64::consts::PI;
        let target: Vec<f64> = (0..len)
            .map(|t| (2.0 * PI * 10.0 * t as f64 / len as f64).sin())
            .collect();
        let noise: Vec<f64> = (0..len)
            .map(|t| (2.0 * PI * 10.0 * t as f64 / len as f64).cos())
            .collect();
        let estimate: Vec<f64> = target
            .iter()
            .zip(noise.iter())
            .map(|(t, n)| t + n)
            .collect();
        let v = si_sdr(&target, &estimate).unwrap();
        assert!(v.abs() < 1e-9, "expected 0 dB, got {v}");
    }

    #[test]
    fn si_sdr_scale_invariance_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let target: Vec<f64> = (0..400).map(|_| rng.gen::<f64>() - 0.5).collect();
        let estimate: Vec<f64> = target
            .iter()
            .map(|v| v + 0.3 * (rng.gen::<f64>() - 0.5))
            .collect();
        let base = si_sdr(&target, &estimate).unwrap();
        for a in [0.2, -1.0, 7.5] {
            let scaled: Vec<f64> = estimate.iter().map(|v| a * v).collect();
            let got = si_sdr(&target, &scaled).unwrap();
            assert!((got - base).abs() < 1e-9, "a = {a}: {got} vs {base}");
        }
    }

    #[test]
    fn si_sdr_sc_recovers_permuted_delayed_scaled_copy() {
        let s = signal_matrix(3, 2_000, 4);
        // Output = permuted (rotate by 1), delayed by 7, scaled by -3.
        let mut y = DMatrix::zeros(3, 2_000);
        for i in 0..3 {
            let src = (i + 1) % 3;
            for t in 7..2_000 {
                y[(i, t)] = -3.0 * s[(src, t - 7)];
            }
        }
        let m = match_sources(&s, &y, 200).unwrap();
        let (per_source, mean) = si_sdr_sc(&s, &y, &m).unwrap();
        assert!(per_source.iter().all(|v| v.is_infinite() && *v > 0.0));
        assert!(mean.is_infinite());
    }

    #[test]
    fn si_sdr_sc_matches_scalar_oracle_on_two_sources() {
        // Hand-built 2-source case with known additive noise.
        let len = 1_000;
        let mut s = DMatrix::zeros(2, len);
        let mut y = DMatrix::zeros(2, len);
        use std::f64::consts::PI;
        for t in 0..len {
            let a = (2.0 * PI * 5.0 * t as f64 / len as f64).sin();
            let b = (2.0 * PI * 11.0 * t as f64 / len as f64).cos();
            s[(0, t)] = a;
            s[(1, t)] = b;
            // Outputs swapped, with orthogonal contamination.
            y[(0, t)] = b + 0.1 * a;
            y[(1, t)] = a + 0.2 * b;
        }
        let m = match_sources(&s, &y, 50).unwrap();
        assert_eq!(m.permutation, vec![1, 0]);
        let (per_source, _) = si_sdr_sc(&s, &y, &m).unwrap();
        // Scalar oracle: estimate = target + c * orthogonal with equal-power
        // basis waves, so SI-SDR = 10 log10(1 / c^2).
        let expect0 = 10.0 * (1.0f64 / 0.2f64.powi(2)).log10();
        let expect1 = 10.0 * (1.0f64 / 0.1f64.powi(2)).log10();
        assert!((per_source[0] - expect0).abs() < 0.05, "{per_source:?}");
        assert!((per_source[1] - expect1).abs() < 0.05, "{per_source:?}");
    }

    #[test]
    fn running_curve_constant_inf_for_exact_recovery() {
        let s = signal_matrix(2, 3_000, 5);
        let curve = running_si_sdr(&s, &s, 2_000, 100).unwrap();
        assert!(!curve.is_empty());
        assert!(curve.iter().all(|p| p.value.is_infinite()));
    }

    #[test]
    fn running_curve_point_count_and_drop() {
        let len = 6_000;
        let s = signal_matrix(2, len, 6);
        let mut y = s.clone();
        // Decorrelate the second half.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for t in len / 2..len {
            for i in 0..2 {
                y[(i, t)] = rng.gen::<f64>() - 0.5;
            }
        }
        let window = 1_000;
        let stride = window; // non-overlapping
        let curve = running_si_sdr(&s, &y, window, stride).unwrap();
        assert_eq!(curve.len(), (len - window) / stride + 1);
        let early = curve.iter().find(|p| p.t <= len / 2).unwrap().value;
        let late = curve.last().unwrap().value;
        assert!(early > late, "curve should drop after the switch");
        assert!(late < 1.0);
    }
}
