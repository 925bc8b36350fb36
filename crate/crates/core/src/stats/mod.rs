//! Reusable statistics: bootstrap confidence intervals, Welch's
//! t-test, trailing rolling means.
//!
//! Randomness is pinned down completely: the bootstrap draws its
//! resamples from [`Pcg32`](crate::prng::Pcg32) seeded with
//! `(config.seed, stream 0)`, and quantiles interpolate linearly
//! between order statistics. Two runs with equal inputs produce
//! identical intervals, on any platform.

pub mod special;

use thiserror::Error;

use crate::prng::Pcg32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("EmptyInput: need at least one value")]
    EmptyInput,
    #[error("InsufficientData: each sample needs at least two values")]
    InsufficientData,
    #[error("ZeroVariance: both samples are constant")]
    ZeroVariance,
    #[error("EmptySeries: rolling mean of an empty series")]
    EmptySeries,
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    pub draws: u32,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            draws: 1000,
            confidence: 0.95,
            seed: 42,
        }
    }
}

/// A point estimate with percentile bounds; `lower <= upper` always,
/// though a percentile interval need not straddle the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n-1)p`), over an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for the mean.
///
/// Draws `config.draws` resamples with replacement, each the size of
/// the input, takes the mean of each, and reports the percentile
/// interval `[(1-c)/2, 1-(1-c)/2]` of those means. The point estimate
/// is the mean of the original values.
pub fn bootstrap_mean_ci(
    values: &[f64],
    config: &BootstrapConfig,
) -> Result<IntervalEstimate, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    assert!(config.draws >= 1, "draws must be positive");
    assert!(
        config.confidence > 0.0 && config.confidence < 1.0,
        "confidence must lie in (0, 1)"
    );

    let n = values.len();
    let mut rng = Pcg32::new(config.seed, 0);
    let mut resample_means = Vec::with_capacity(config.draws as usize);
    for _ in 0..config.draws {
        let mut total = 0.0;
        for _ in 0..n {
            total += values[rng.next_below(n as u32) as usize];
        }
        resample_means.push(total / n as f64);
    }
    resample_means.sort_by(f64::total_cmp);

    let alpha = (1.0 - config.confidence) / 2.0;
    Ok(IntervalEstimate {
        point: mean(values),
        lower: quantile_sorted(&resample_means, alpha),
        upper: quantile_sorted(&resample_means, 1.0 - alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTTest {
    pub t: f64,
    pub degrees_of_freedom: f64,
    pub p_two_sided: f64,
}

/// Welch's two-sample t-test (unequal variances), two-sided p-value
/// from the Student-t distribution via the regularized incomplete beta
/// function.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<WelchTTest, StatsError> {
    if x.len() < 2 || y.len() < 2 {
        return Err(StatsError::InsufficientData);
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (sample_variance(x), sample_variance(y));
    if vx + vy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let standard_error_sq = vx / nx + vy / ny;
    let t = (mean(x) - mean(y)) / standard_error_sq.sqrt();
    let degrees_of_freedom = standard_error_sq.powi(2)
        / ((vx / nx).powi(2) / (nx - 1.0) + (vy / ny).powi(2) / (ny - 1.0));
    let p_two_sided = special::student_t_two_sided(t, degrees_of_freedom);
    Ok(WelchTTest {
        t,
        degrees_of_freedom,
        p_two_sided,
    })
}

/// Trailing rolling mean over `window` entries; the first `window - 1`
/// positions average everything seen so far, so the output has the same
/// length as the input.
pub fn rolling_mean<P: Copy + PartialOrd>(
    series: &[(P, f64)],
    window: usize,
) -> Result<Vec<(P, f64)>, StatsError> {
    assert!(window >= 1, "window must be positive");
    if series.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    debug_assert!(
        series.windows(2).all(|pair| pair[0].0 < pair[1].0),
        "positions must be strictly increasing"
    );
    let values: Vec<f64> = series.iter().map(|&(_, v)| v).collect();
    Ok(series
        .iter()
        .enumerate()
        .map(|(i, &(position, _))| {
            let from = (i + 1).saturating_sub(window);
            (position, mean(&values[from..=i]))
        })
        .collect())
}
