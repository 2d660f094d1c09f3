use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::ExtractError;

/// Fitted truncated normal together with the plain sample statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncFit {
    /// Location of the untruncated normal.
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub sample_mean: f64,
    /// With the n - 1 denominator.
    pub sample_sd: f64,
    /// All samples equal; `sd` is floored at 1% of the window.
    pub degenerate: bool,
    /// Moment matching did not converge; `mean`/`sd` are the sample values.
    pub uncorrected: bool,
}

/// Mean and sample standard deviation (n - 1).
pub fn sample_stats(samples: &[f64]) -> Result<(f64, f64), ExtractError> {
    let n = samples.len();
    if n < 2 {
        return Err(ExtractError::TooFewSamples(n));
    }
    if let Some(&bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(ExtractError::NonFinite(bad));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((mean, (ss / (n - 1) as f64).sqrt()))
}

/// Mean and standard deviation of N(mu, sd) truncated to [lo, hi].
pub fn truncnorm_moments(mu: f64, sd: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let std = Normal::new(0.0, 1.0).ok()?;
    let a = (lo - mu) / sd;
    let b = (hi - mu) / sd;
    let z = if a > 0.0 { std.sf(a) - std.sf(b) } else { std.cdf(b) - std.cdf(a) };
    if !(z > 1e-300) {
        return None;
    }
    let (pa, pb) = (std.pdf(a), std.pdf(b));
    let r = (pa - pb) / z;
    let m = mu + sd * r;
    let var = sd * sd * (1.0 + (a * pa - b * pb) / z - r * r);
    (var > 0.0 && m.is_finite()).then(|| (m, var.sqrt()))
}

/// Truncated normal on `[lo, hi]` whose mean and standard deviation match
/// those of the (clamped) samples.
pub fn fit_truncnorm(samples: &[f64], lo: f64, hi: f64) -> Result<TruncFit, ExtractError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(ExtractError::BadWindow { lo, hi });
    }
    let clamped: Vec<f64> = samples.iter().map(|v| v.clamp(lo, hi)).collect();
    let (m, s) = sample_stats(&clamped)?;
    let range = hi - lo;
    let mut fit = TruncFit {
        mean: m,
        sd: s,
        lo,
        hi,
        n: samples.len(),
        sample_mean: m,
        sample_sd: s,
        degenerate: false,
        uncorrected: false,
    };
    if s <= 0.0 {
        fit.sd = 0.01 * range;
        fit.degenerate = true;
        return Ok(fit);
    }
    match match_moments(m, s, lo, hi) {
        Some((mu, sd)) => {
            fit.mean = mu;
            fit.sd = sd;
        }
        None => {
            log::warn!("moment matching failed for mean {m}, sd {s} on [{lo}, {hi}]; using sample values");
            fit.uncorrected = true;
        }
    }
    Ok(fit)
}

fn match_moments(m: f64, s: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let range = hi - lo;
    let (mut mu, mut sd) = (m, s);
    for _ in 0..10_000 {
        let (tm, ts) = truncnorm_moments(mu, sd, lo, hi)?;
        let (dm, ratio) = (m - tm, s / ts);
        if dm.abs() < 1e-10 * range && (ratio - 1.0).abs() < 1e-12 {
            return Some((mu, sd));
        }
        mu += dm;
        sd *= ratio;
        // A sample spread wider than the window allows has no finite fit.
        if !(sd.is_finite() && sd < 1e3 * range && mu.abs() < 1e4 * range) {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_samples() {
        let (m, s) = sample_stats(&[100.0, 300.0]).unwrap();
        assert_eq!(m, 200.0);
        assert!((s - 141.421356237).abs() < 1e-6);
    }

    #[test]
    fn equal_samples_are_degenerate() {
        let f = fit_truncnorm(&[42.0; 5], 0.0, 1500.0).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.mean, 42.0);
        assert_eq!(f.sd, 15.0);
    }

    #[test]
    fn too_few() {
        assert_eq!(fit_truncnorm(&[1.0], 0.0, 10.0), Err(ExtractError::TooFewSamples(1)));
    }

    #[test]
    fn fitted_moments_match_samples() {
        let xs = [300.0, 420.0, 500.0, 610.0, 700.0, 820.0, 560.0, 450.0, 40.0];
        let f = fit_truncnorm(&xs, 0.0, 1500.0).unwrap();
        let (tm, ts) = truncnorm_moments(f.mean, f.sd, 0.0, 1500.0).unwrap();
        assert!((tm - f.sample_mean).abs() < 1e-6);
        assert!((ts - f.sample_sd).abs() < 1e-6);
        assert!(!f.uncorrected);
    }

    #[test]
    fn spread_wider_than_window_keeps_sample_values() {
        let f = fit_truncnorm(&[0.0, 0.0, 1500.0, 1500.0], 0.0, 1500.0).unwrap();
        assert!(f.uncorrected);
        assert_eq!(f.mean, 750.0);
    }

    #[test]
    fn halving_samples_halves_fit() {
        let xs = [100.0, 220.0, 310.0, 480.0, 520.0, 900.0];
        let half: Vec<f64> = xs.iter().map(|x| x / 2.0).collect();
        let a = fit_truncnorm(&xs, 0.0, 1200.0).unwrap();
        let b = fit_truncnorm(&half, 0.0, 600.0).unwrap();
        assert!((a.mean / 2.0 - b.mean).abs() < 1e-6);
        assert!((a.sd / 2.0 - b.sd).abs() < 1e-6);
    }
}
