//! Chain diagnostics: autocorrelation, integrated autocorrelation time,
//! Spearman rank correlation and negative log-likelihood traces.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::adaptation::{RunRecord, SamplingTrace};
use crate::{Error, Result};

/// Window constant of the self-consistent ACT estimator.
pub const DEFAULT_WINDOW_C: f64 = 5.0;
/// Shortest series accepted by the ACT estimator.
pub const MIN_ACT_LENGTH: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    pub values: Vec<f64>,
    pub label: String,
}

impl ScalarSeries {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            values,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Sample autocorrelation at `lag` with the biased `1/n` normalization.
pub fn autocorr(series: &ScalarSeries, lag: usize) -> Result<f64> {
    let n = series.len();
    if lag >= n {
        return Err(Error::SeriesTooShort {
            label: series.label.clone(),
            reason: format!("lag {lag} needs more than {n} points"),
        });
    }
    let mean = series.mean();
    let centered: Vec<f64> = series.values.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::ZeroVariance {
            label: series.label.clone(),
        });
    }
    let ck: f64 = centered.iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum();
    Ok(ck / c0)
}

/// Autocorrelations for lags `0..=max_lag` via zero-padded FFT.
fn autocorr_fft(series: &ScalarSeries, max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    let mean = series.mean();
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .values
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    // exact zero variance shows up as c0 == 0; rounding noise as a tiny c0
    let scale: f64 = series.values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(c0 > 0.0) || scale == 0.0 {
        return Err(Error::ZeroVariance {
            label: series.label.clone(),
        });
    }
    Ok(buf[..=max_lag.min(n - 1)].iter().map(|c| c.re / c0).collect())
}

/// Outcome of the self-consistent window search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActEstimate {
    pub tau: f64,
    pub window: usize,
    /// False when no window `W >= c * tau(W)` exists below half the series
    /// length; `tau` is then the estimate at the largest window tried.
    pub converged: bool,
}

/// `tau = 1 + 2 sum_{k=1}^{W} rho(k)` with `W` the smallest lag such that
/// `W >= c * tau(W)`, floored at 1.
pub fn estimate_act(series: &ScalarSeries, window_c: f64) -> Result<ActEstimate> {
    let n = series.len();
    if n < MIN_ACT_LENGTH {
        return Err(Error::SeriesTooShort {
            label: series.label.clone(),
            reason: format!("{n} points, need at least {MIN_ACT_LENGTH}"),
        });
    }
    if !(window_c > 0.0) {
        return Err(Error::invalid("window_c", "must be positive"));
    }
    let max_window = n / 2;
    let rho = autocorr_fft(series, max_window)?;
    let mut tau = 1.0;
    for (w, r) in rho.iter().enumerate().skip(1) {
        tau += 2.0 * r;
        if w as f64 >= window_c * tau {
            return Ok(ActEstimate {
                tau: tau.max(1.0),
                window: w,
                converged: true,
            });
        }
    }
    Ok(ActEstimate {
        tau: tau.max(1.0),
        window: max_window,
        converged: false,
    })
}

/// Integrated autocorrelation time; errors when the chain is too short for
/// a self-consistent window.
pub fn integrated_act(series: &ScalarSeries, window_c: f64) -> Result<f64> {
    let est = estimate_act(series, window_c)?;
    if !est.converged {
        return Err(Error::SeriesTooShort {
            label: series.label.clone(),
            reason: format!(
                "no self-consistent window below {} (tau reached {:.3})",
                est.window, est.tau
            ),
        });
    }
    Ok(est.tau)
}

fn check_lengths(series: &[ScalarSeries]) -> Result<()> {
    let first = series
        .first()
        .ok_or_else(|| Error::invalid("series", "need at least one series"))?;
    if let Some(bad) = series.iter().find(|s| s.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            actual: bad.len(),
        }
        .context(format!("series `{}`", bad.label)));
    }
    Ok(())
}

/// Mean of [`integrated_act`] over a collection of equal-length series.
pub fn mean_act(series: &[ScalarSeries], window_c: f64) -> Result<f64> {
    check_lengths(series)?;
    let mut total = 0.0;
    for s in series {
        total += integrated_act(s, window_c).map_err(|e| e.context(format!("ACT of `{}`", s.label)))?;
    }
    Ok(total / series.len() as f64)
}

/// Mean ACT that tolerates chains too sticky to estimate.
///
/// A series without a self-consistent window contributes its estimate at
/// the largest window; a series that never moves contributes its length.
/// Returns the mean and how many series needed either fallback.
pub fn mean_act_bounded(series: &[ScalarSeries], window_c: f64) -> Result<(f64, usize)> {
    check_lengths(series)?;
    let mut total = 0.0;
    let mut fallbacks = 0;
    for s in series {
        match estimate_act(s, window_c) {
            Ok(est) => {
                if !est.converged {
                    fallbacks += 1;
                }
                total += est.tau;
            }
            Err(Error::ZeroVariance { .. }) => {
                fallbacks += 1;
                total += s.len() as f64;
            }
            Err(e) => return Err(e.context(format!("ACT of `{}`", s.label))),
        }
    }
    Ok((total / series.len() as f64, fallbacks))
}

/// One series per (walker, coordinate) of the recorded cold chain.
pub fn cold_chain_series(trace: &SamplingTrace) -> Vec<ScalarSeries> {
    let Some(first) = trace.cold_positions.first() else {
        return Vec::new();
    };
    let walkers = first.len();
    let dim = first.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(walkers * dim);
    for w in 0..walkers {
        for k in 0..dim {
            let values = trace.cold_positions.iter().map(|step| step[w][k]).collect();
            out.push(ScalarSeries::new(values, format!("walker{w}.x{k}")));
        }
    }
    out
}

/// Mid-ranks (1-based), ties sharing the average of their positions.
fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation: Pearson correlation of mid-ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::invalid("spearman", "need at least 3 pairs"));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::invalid("spearman", "NaN in input"));
    }
    pearson(&mid_ranks(xs), &mid_ranks(ys)).ok_or(Error::ZeroVariance {
        label: "spearman ranks".into(),
    })
}

/// Per-step mean of `-log pi` over the cold walkers of the sampling phase.
pub fn nll_trace(run: &RunRecord) -> Result<ScalarSeries> {
    let trace = run
        .sampling
        .as_ref()
        .ok_or_else(|| Error::invalid("run", "no cold-chain samples recorded"))?;
    let values = trace
        .cold_logpi
        .iter()
        .map(|step| -step.iter().sum::<f64>() / step.len() as f64)
        .collect();
    Ok(ScalarSeries::new(values, "nll"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn white_noise(n: usize, seed: u64) -> ScalarSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarSeries::new((0..n).map(|_| rng.sample(StandardNormal)).collect(), "noise")
    }

    fn ar1(rho: f64, n: usize, seed: u64) -> ScalarSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let innovation = (1.0 - rho * rho).sqrt();
        let mut x: f64 = rng.sample(StandardNormal);
        let values = (0..n)
            .map(|_| {
                x = rho * x + innovation * rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        ScalarSeries::new(values, format!("ar1({rho})"))
    }

    #[test]
    fn autocorr_basics() {
        let s = white_noise(1000, 1);
        assert!((autocorr(&s, 0).unwrap() - 1.0).abs() < 1e-12);
        let alt = ScalarSeries::new((0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(), "alt");
        assert!((autocorr(&alt, 1).unwrap() + 1.0).abs() < 0.01);
        let flat = ScalarSeries::new(vec![2.0; 10], "flat");
        assert!(matches!(autocorr(&flat, 1), Err(Error::ZeroVariance { .. })));
        assert!(autocorr(&flat, 10).is_err());
    }

    #[test]
    fn white_noise_lag_one() {
        let s = white_noise(100_000, 2);
        assert!(autocorr(&s, 1).unwrap().abs() < 0.01);
    }

    #[test]
    fn fft_matches_direct() {
        let s = ar1(0.7, 3000, 5);
        let fast = autocorr_fft(&s, 40).unwrap();
        for (k, v) in fast.iter().enumerate() {
            assert!((v - autocorr(&s, k).unwrap()).abs() < 1e-10, "lag {k}");
        }
    }

    #[test]
    fn iid_act_near_one() {
        let tau = integrated_act(&white_noise(100_000, 3), DEFAULT_WINDOW_C).unwrap();
        assert!((tau - 1.0).abs() < 0.1, "tau {tau}");
    }

    #[test]
    fn ar1_act_matches_closed_form() {
        for (rho, tol) in [(0.5, 0.10), (0.9, 0.15)] {
            let tau = integrated_act(&ar1(rho, 1_000_000, 7), DEFAULT_WINDOW_C).unwrap();
            let exact = (1.0 + rho) / (1.0 - rho);
            assert!((tau / exact - 1.0).abs() < tol, "rho {rho}: {tau} vs {exact}");
        }
    }

    #[test]
    fn short_or_sticky_series() {
        assert!(matches!(
            integrated_act(&white_noise(49, 1), 5.0),
            Err(Error::SeriesTooShort { .. })
        ));
        // a steady drift has no self-consistent window in 200 points
        let walk = ScalarSeries::new((0..200).map(|t| (t as f64 * 0.01).sin()).collect(), "drift");
        assert!(integrated_act(&walk, 5.0).is_err());
        let est = estimate_act(&walk, 5.0).unwrap();
        assert!(!est.converged);
        let (mean, fallbacks) = mean_act_bounded(&[walk.clone(), ScalarSeries::new(vec![1.0; 200], "flat")], 5.0).unwrap();
        assert_eq!(fallbacks, 2);
        assert!((mean - (est.tau + 200.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mean_act_examples() {
        let s = ar1(0.5, 20_000, 11);
        let single = integrated_act(&s, 5.0).unwrap();
        let same = mean_act(&[s.clone(), s.clone(), s.clone()], 5.0).unwrap();
        assert!((same - single).abs() < 1e-12);
        let noise = white_noise(20_000, 12);
        let mixed = mean_act(&[noise.clone(), s.clone()], 5.0).unwrap();
        let expected = (integrated_act(&noise, 5.0).unwrap() + single) / 2.0;
        assert!((mixed - expected).abs() < 1e-12);
        assert!((mixed - 2.0).abs() < 0.25, "mixed {mixed}");
        let swapped = mean_act(&[s, noise], 5.0).unwrap();
        assert!((swapped - mixed).abs() < 1e-12);
        assert!(mean_act(&[white_noise(100, 1), white_noise(101, 1)], 5.0).is_err());
    }

    #[test]
    fn spearman_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((spearman(&xs, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &[5.0, 3.0, 1.0, 0.0, -7.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 2.0, 4.0], &[10.0, 20.0, 20.0, 40.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(mid_ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_hand_ranked_with_ties() {
        // ranks x: 1, 2.5, 2.5, 4; ranks y: 2, 1, 3.5, 3.5
        let r = spearman(&[1.0, 2.0, 2.0, 4.0], &[5.0, 3.0, 9.0, 9.0]).unwrap();
        // pearson on those ranks, worked by hand: sxy = 2.25, sxx = syy = 4.5
        assert!((r - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn act_affine_invariant(a in prop::sample::select(vec![-3.0, -0.5, 0.25, 2.0, 7.0]), b in -10.0f64..10.0, seed in 0u64..50) {
            let s = ar1(0.6, 5000, seed);
            let t = ScalarSeries::new(s.values.iter().map(|v| a * v + b).collect(), "affine");
            let x = estimate_act(&s, 5.0).unwrap();
            let y = estimate_act(&t, 5.0).unwrap();
            prop_assert!((x.tau - y.tau).abs() < 1e-8);
        }

        #[test]
        fn spearman_monotone_invariant(xs in prop::collection::vec(-5.0f64..5.0, 3..30), ys in prop::collection::vec(-5.0f64..5.0, 30)) {
            let ys = &ys[..xs.len()];
            if let Ok(r) = spearman(&xs, ys) {
                let tx: Vec<f64> = xs.iter().map(|v| v.exp()).collect();
                let ty: Vec<f64> = ys.iter().map(|v| v * v * v + 2.0 * v).collect();
                prop_assert!((spearman(&tx, &ty).unwrap() - r).abs() < 1e-12);
            }
        }
    }
}
