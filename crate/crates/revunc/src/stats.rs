//! Small descriptive-statistics helpers shared across modules.
//!
//! Quantiles use linear interpolation between order statistics (the common
//! "type 7" convention), and standardization uses the population variance
//! (denominator `n`). Both conventions are relied on by tests, so they are
//! fixed here rather than left to callers.

/// Arithmetic mean; 0.0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (denominator `n`); 0.0 for slices shorter than 1.
pub fn pop_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (denominator `n - 1`); 0.0 for slices shorter than 2.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Linear-interpolation quantile of an unsorted slice, `p` in [0, 1].
///
/// Panics on an empty slice; callers validate first.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile level out of range");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in quantile"));
    quantile_sorted(&sorted, p)
}

/// Same as [`quantile`] but assumes `sorted` is already ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Median via [`quantile`].
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Root mean squared error of a slice of errors; 0.0 for empty input.
pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Monte-Carlo standard error of the mean that accounts for serial
/// correlation, using non-overlapping batch means.
///
/// Falls back to the i.i.d. standard error when the series is too short to
/// form at least 8 batches.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 16 {
        return (sample_variance(xs) / n.max(1) as f64).sqrt();
    }
    let n_batches = (n as f64).sqrt().floor() as usize;
    let n_batches = n_batches.clamp(8, n / 2);
    let batch_len = n / n_batches;
    let used = n_batches * batch_len;
    let batch_means: Vec<f64> = (0..n_batches)
        .map(|b| mean(&xs[b * batch_len..(b + 1) * batch_len]))
        .collect();
    let _ = used;
    (sample_variance(&batch_means) / n_batches as f64).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic (maximum CDF distance).
///
/// Both inputs are consumed sorted internally; `O(n log n)`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "ks on empty sample");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("non-finite in ks"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("non-finite in ks"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let xa = a[i];
        let xb = b[j];
        let x = xa.min(xb);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_interpolates_linearly() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(quantile(&xs, 0.0), 1.0);
        assert_abs_diff_eq!(quantile(&xs, 1.0), 4.0);
        assert_abs_diff_eq!(quantile(&xs, 0.5), 2.5);
        assert_abs_diff_eq!(quantile(&xs, 0.25), 1.75);
    }

    #[test]
    fn quantiles_of_two_revisions() {
        // {0.2, 0.4}: mean 0.3, median 0.3, quartiles interpolated.
        let xs = [0.2, 0.4];
        assert_abs_diff_eq!(mean(&xs), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(median(&xs), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(quantile(&xs, 0.25), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(quantile(&xs, 0.75), 0.35, epsilon = 1e-15);
    }

    #[test]
    fn rmse_of_two_errors() {
        // {0.3, -0.4}: sqrt((0.09 + 0.16) / 2) = sqrt(0.125).
        assert_abs_diff_eq!(rmse(&[0.3, -0.4]), 0.125f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(rmse(&[0.3, -0.4]), 0.3536, epsilon = 5e-5);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_abs_diff_eq!(ks_statistic(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_of_disjoint_samples_is_one() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..50).map(|i| 1000.0 + i as f64).collect();
        assert_abs_diff_eq!(ks_statistic(&a, &b), 1.0);
    }

    #[test]
    fn batch_means_se_close_to_iid_for_white_noise() {
        // Deterministic pseudo-noise; batch-means SE should be near the
        // i.i.d. SE for an uncorrelated series.
        let xs: Vec<f64> = (0..4096)
            .map(|i| ((i as f64 * 12.9898).sin() * 43758.5453).fract())
            .collect();
        let iid = (sample_variance(&xs) / xs.len() as f64).sqrt();
        let bm = batch_means_se(&xs);
        assert!(bm / iid > 0.5 && bm / iid < 2.0, "bm={bm} iid={iid}");
    }
}
