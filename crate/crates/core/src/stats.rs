//! Binomial error estimates, Wilson intervals and small summary helpers.

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for an observed rate `p_hat` over `trials` trials.
pub fn wilson_from_rate(p_hat: f64, trials: f64, z: f64) -> (f64, f64) {
    if trials <= 0.0 {
        return (0.0, 1.0);
    }
    let z2 = z * z;
    let denom = 1.0 + z2 / trials;
    let center = p_hat + z2 / (2.0 * trials);
    let margin = z * (p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials)).sqrt();
    let lo = ((center - margin) / denom).clamp(0.0, 1.0);
    let hi = ((center + margin) / denom).clamp(0.0, 1.0);
    // Guard against rounding pushing the interval past the point estimate.
    (lo.min(p_hat), hi.max(p_hat))
}

/// Wilson score interval for `successes` out of `trials` Bernoulli draws.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    wilson_from_rate(successes as f64 / trials as f64, trials as f64, z)
}

/// Monte Carlo error-probability estimate.
///
/// `p_hat` pools every test outcome. `std_error` is computed from the spread of
/// per-replicate error rates, so it includes the variability of the trained
/// rule and not only the binomial test noise; the Wilson interval uses the
/// matching effective sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub resample_events: u64,
    pub std_error: f64,
    pub valid: bool,
}

impl ErrorEstimate {
    /// Estimate with a known point value and standard error, e.g. from a
    /// recombination of other estimates.
    pub fn from_parts(p_hat: f64, std_error: f64, trials: u64, resample_events: u64) -> Self {
        let n_eff = effective_trials(p_hat, std_error, trials);
        let (ci_low, ci_high) = wilson_from_rate(p_hat, n_eff, Z95);
        ErrorEstimate {
            p_hat,
            ci_low,
            ci_high,
            trials,
            resample_events,
            std_error,
            valid: true,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// Number of combined standard errors separating two estimates.
    pub fn z_distance(&self, other: &ErrorEstimate) -> f64 {
        let se = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        let diff = (self.p_hat - other.p_hat).abs();
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn effective_trials(p: f64, se: f64, trials: u64) -> f64 {
    let t = trials as f64;
    if se > 0.0 && p > 0.0 && p < 1.0 {
        (p * (1.0 - p) / (se * se)).clamp(1.0, t.max(1.0))
    } else {
        t
    }
}

/// Integer accumulator of per-replicate error counts.
///
/// Merging is exact and commutative, which is what makes parallel
/// aggregation bit-reproducible.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ErrorTally {
    pub errors: u64,
    pub trials: u64,
    sum_sq_errors: u128,
    pub replicates: u64,
    pub tests_per_replicate: u64,
    pub resample_events: u64,
    pub failed_replicates: u64,
}

impl ErrorTally {
    pub fn new(tests_per_replicate: u64) -> Self {
        ErrorTally {
            tests_per_replicate,
            ..Default::default()
        }
    }

    pub fn record_replicate(&mut self, errors: u64) {
        debug_assert!(errors <= self.tests_per_replicate);
        self.errors += errors;
        self.trials += self.tests_per_replicate;
        self.sum_sq_errors += (errors as u128) * (errors as u128);
        self.replicates += 1;
    }

    pub fn record_failure(&mut self) {
        self.failed_replicates += 1;
    }

    pub fn merge(&mut self, other: &ErrorTally) {
        assert_eq!(
            self.tests_per_replicate, other.tests_per_replicate,
            "cannot pool tallies with different test sizes"
        );
        self.errors += other.errors;
        self.trials += other.trials;
        self.sum_sq_errors += other.sum_sq_errors;
        self.replicates += other.replicates;
        self.resample_events += other.resample_events;
        self.failed_replicates += other.failed_replicates;
    }

    /// Standard error of the pooled rate from the replicate-level spread.
    pub fn std_error(&self) -> f64 {
        let r = self.replicates as f64;
        let m = self.tests_per_replicate as f64;
        if self.replicates == 0 || m == 0.0 {
            return f64::NAN;
        }
        let p = self.errors as f64 / self.trials as f64;
        if self.replicates == 1 {
            return (p * (1.0 - p) / m).sqrt();
        }
        let mean_sq = self.sum_sq_errors as f64 / (m * m);
        let var = ((mean_sq - r * p * p) / (r - 1.0)).max(0.0);
        (var / r).sqrt()
    }

    pub fn finish(&self) -> ErrorEstimate {
        let planned = self.replicates + self.failed_replicates;
        let valid = self.replicates > 0 && self.failed_replicates * 10 <= planned;
        if self.trials == 0 {
            return ErrorEstimate {
                p_hat: f64::NAN,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
                trials: 0,
                resample_events: self.resample_events,
                std_error: f64::NAN,
                valid: false,
            };
        }
        let p_hat = self.errors as f64 / self.trials as f64;
        let mut est = ErrorEstimate::from_parts(p_hat, self.std_error(), self.trials, self.resample_events);
        est.valid = valid;
        est
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> MeanEstimate {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Formats `x` with `digits` significant digits in plain decimal notation.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i64;
    if !(-6..=15).contains(&magnitude) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, x)
}
