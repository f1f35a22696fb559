//! Descriptive statistics over a single series.

use std::cmp::Ordering;

use crate::data::NUM_STATS;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
fn total_cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// The ten window statistics in frozen order:
/// min, max, mean, sum, variance, std_dev, sem, skewness, kurtosis, mad.
///
/// Variance uses the `n - 1` denominator (0 for a single sample). Skewness is
/// the adjusted Fisher-Pearson coefficient and kurtosis the bias-corrected
/// excess kurtosis; both are 0 when the series is constant or too short
/// (`n < 3` and `n < 4` respectively). MAD is unscaled.
pub fn window_stats<T: Scalar>(xs: &[T]) -> Result<[T; NUM_STATS]> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::Contract("statistics of an empty window".into()));
    }
    let (mut lo, mut hi) = (xs[0], xs[0]);
    let mut sum = T::zero();
    for &x in xs {
        lo = lo.min(x);
        hi = hi.max(x);
        sum += x;
    }
    let nf = T::of_usize(n);
    let zero = T::zero();

    if lo == hi {
        // Constant series: every spread and shape statistic is exactly zero.
        return Ok([lo, hi, lo, sum, zero, zero, zero, zero, zero, zero]);
    }

    let mean = sum / nf;
    let (mut m2, mut m3, mut m4) = (zero, zero, zero);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = if n > 1 { m2 / T::of_usize(n - 1) } else { zero };
    let std_dev = variance.sqrt();
    let sem = std_dev / nf.sqrt();

    let skewness = if n >= 3 && m2 > zero {
        let g1 = (m3 / nf) / (m2 / nf).powf(T::of(1.5));
        g1 * (nf * (nf - T::one())).sqrt() / (nf - T::of(2.0))
    } else {
        zero
    };
    let kurtosis = if n >= 4 && m2 > zero {
        let g2 = (m4 / nf) / ((m2 / nf) * (m2 / nf)) - T::of(3.0);
        let one = T::one();
        ((nf + one) * g2 + T::of(6.0)) * (nf - one) / ((nf - T::of(2.0)) * (nf - T::of(3.0)))
    } else {
        zero
    };

    let mad = median_abs_deviation(xs);
    Ok([lo, hi, mean, sum, variance, std_dev, sem, skewness, kurtosis, mad])
}

/// Median of a non-empty slice; reorders `xs` in place.
pub fn median_in_place<T: Scalar>(xs: &mut [T]) -> T {
    let n = xs.len();
    assert!(n > 0, "median of empty slice");
    let mid = n / 2;
    let (lower, upper, _) = xs.select_nth_unstable_by(mid, total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(T::neg_infinity(), T::max);
        (below + upper) / T::of(2.0)
    }
}

pub fn median<T: Scalar>(xs: &[T]) -> T {
    median_in_place(&mut xs.to_vec())
}

/// `median(|x - median(x)|)`, without the normal-consistency factor.
pub fn median_abs_deviation<T: Scalar>(xs: &[T]) -> T {
    let mut buf = xs.to_vec();
    let m = median_in_place(&mut buf);
    for v in &mut buf {
        *v = (*v - m).abs();
    }
    median_in_place(&mut buf)
}

/// Quantile of an ascending-sorted slice by linear interpolation between
/// order statistics (position `(n - 1) p`).
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> T {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile level {p} outside [0, 1]");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = T::of(h - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles<T> {
    pub q1: T,
    pub median: T,
    pub q3: T,
}

pub fn quartiles<T: Scalar>(xs: &[T]) -> Quartiles<T> {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(total_cmp);
    Quartiles {
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
    }
}

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::of_usize(xs.len())
}

/// Sample variance with `n - 1` denominator; 0 for fewer than two values.
pub fn sample_variance<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::of_usize(xs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Statistic;

    fn stat(v: &[f64; NUM_STATS], s: Statistic) -> f64 {
        v[s.ordinal()]
    }

    #[test]
    fn one_to_five() {
        let v = window_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(stat(&v, Statistic::Min), 1.0);
        assert_eq!(stat(&v, Statistic::Max), 5.0);
        assert_eq!(stat(&v, Statistic::Mean), 3.0);
        assert_eq!(stat(&v, Statistic::Sum), 15.0);
        assert_eq!(stat(&v, Statistic::Variance), 2.5);
        assert!((stat(&v, Statistic::StdDev) - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((stat(&v, Statistic::Sem) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(stat(&v, Statistic::Skewness), 0.0);
        assert_eq!(stat(&v, Statistic::Mad), 1.0);
        // Bias-corrected excess kurtosis of 1..5 is -1.2.
        assert!((stat(&v, Statistic::Kurtosis) + 1.2).abs() < 1e-12);
    }

    #[test]
    fn mad_can_vanish_while_std_does_not() {
        let v = window_stats(&[1.0, 1.0, 1.0, 10.0]).unwrap();
        assert_eq!(stat(&v, Statistic::Mad), 0.0);
        assert!(stat(&v, Statistic::StdDev) > 0.0);
    }

    #[test]
    fn constant_window() {
        let c = 0.1f64;
        let v = window_stats(&vec![c; 1000]).unwrap();
        assert_eq!(stat(&v, Statistic::Min), c);
        assert_eq!(stat(&v, Statistic::Max), c);
        assert_eq!(stat(&v, Statistic::Mean), c);
        assert!((stat(&v, Statistic::Sum) - 100.0).abs() < 1e-9);
        for s in [
            Statistic::Variance,
            Statistic::StdDev,
            Statistic::Sem,
            Statistic::Skewness,
            Statistic::Kurtosis,
            Statistic::Mad,
        ] {
            assert_eq!(stat(&v, s), 0.0, "{s}");
        }
    }

    #[test]
    fn short_windows_use_degenerate_shape_rules() {
        let v = window_stats(&[2.0]).unwrap();
        assert_eq!(v[Statistic::Variance.ordinal()], 0.0);
        let v = window_stats(&[1.0, 3.0]).unwrap();
        assert_eq!(v[Statistic::Variance.ordinal()], 2.0);
        assert_eq!(v[Statistic::Skewness.ordinal()], 0.0);
        let v = window_stats(&[1.0, 2.0, 7.0]).unwrap();
        assert!(v[Statistic::Skewness.ordinal()] > 0.0);
        assert_eq!(v[Statistic::Kurtosis.ordinal()], 0.0);
    }

    #[test]
    fn empty_window_is_a_contract_violation() {
        assert!(matches!(window_stats::<f64>(&[]), Err(Error::Contract(_))));
    }

    #[test]
    fn quartiles_type7() {
        let xs: Vec<f64> = (1..=8).map(f64::from).collect();
        let q = quartiles(&xs);
        assert_eq!(q.q1, 2.75);
        assert_eq!(q.median, 4.5);
        assert_eq!(q.q3, 6.25);
    }

    #[test]
    fn works_in_single_precision() {
        let v = window_stats(&[1.0f32, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(v[Statistic::Variance.ordinal()], 2.5f32);
        assert_eq!(v[Statistic::Mad.ordinal()], 1.0f32);
    }
}
