use statrs::distribution::{ContinuousCDF, Normal};

use super::IntentionError;

/// Bin masses of a normal distribution truncated to `[lo, hi]`, with
/// `bins` equal-width bins spanning the window.
pub fn discretize_truncnorm(
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<Vec<f64>, IntentionError> {
    if !(sd > 0.0) || !(lo < hi) || bins < 2 || !mean.is_finite() {
        return Err(IntentionError::InvalidDiscretization(format!(
            "mean {mean}, sd {sd}, window [{lo}, {hi}], {bins} bins"
        )));
    }
    let normal = Normal::new(mean, sd).map_err(|e| IntentionError::InvalidDiscretization(e.to_string()))?;
    // Evaluate in whichever tail the window sits so far tails keep precision.
    let upper_tail = mean < 0.5 * (lo + hi);
    let cdf = |x: f64| if upper_tail { normal.sf(x) } else { normal.cdf(x) };
    let edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
    let at: Vec<f64> = edges.iter().map(|&e| cdf(e)).collect();
    let denom = (at[bins] - at[0]).abs();
    if denom < 1e-300 {
        return Err(IntentionError::DegenerateWindow { lo, hi });
    }
    let mut masses: Vec<f64> = at.windows(2).map(|w| (w[1] - w[0]).abs() / denom).collect();
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    Ok(masses)
}

/// Bin of a non-negative measurement; values at or beyond `upper`
/// (including `f64::INFINITY`) land in the last bin.
pub fn real_to_bin(value: f64, upper: f64, bins: usize) -> Result<usize, IntentionError> {
    if value.is_nan() || value < 0.0 {
        return Err(IntentionError::InvalidMeasurement(value));
    }
    let width = upper / bins as f64;
    let k = (value / width).floor();
    Ok(if k >= bins as f64 { bins - 1 } else { k as usize })
}
