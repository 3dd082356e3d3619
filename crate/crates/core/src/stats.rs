//! Small descriptive-statistics kernels used across modules.

use std::cmp::Ordering;

use num_traits::Float;

use crate::Scalar;

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::count(xs.len()))
}

fn is_constant<T: Scalar>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Sum of squared deviations from the mean (two-pass).
///
/// Exactly zero when every element is equal, so that constant inputs are
/// recognised as degenerate regardless of rounding in the mean.
pub fn sum_sq_dev<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 || is_constant(xs) {
        return T::zero();
    }
    let m = mean(xs).unwrap_or_else(T::zero);
    xs.iter().map(|&x| (x - m) * (x - m)).sum()
}

/// Sample variance with the `n - 1` denominator; `None` below two observations.
pub fn sample_variance<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    Some(sum_sq_dev(xs) / T::count(xs.len() - 1))
}

/// Sample standard deviation (`n - 1`).
pub fn sample_std<T: Scalar>(xs: &[T]) -> Option<T> {
    sample_variance(xs).map(Float::sqrt)
}

/// Population standard deviation (`1 / n`).
pub fn population_std<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some((sum_sq_dev(xs) / T::count(xs.len())).sqrt())
}

/// Pearson correlation; `None` when either side has zero variance or fewer
/// than two points.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Option<T> {
    assert_eq!(xs.len(), ys.len(), "pearson: length mismatch");
    if xs.len() < 2 {
        return None;
    }
    let sxx = sum_sq_dev(xs);
    let syy = sum_sq_dev(ys);
    if sxx == T::zero() || syy == T::zero() {
        return None;
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    // Rounding can push |r| a hair past one.
    Some(r.max(-T::one()).min(T::one()))
}

/// One-based average ranks ("midranks"); ties share the mean of their positions.
pub fn average_ranks<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share rank mean((start+1)..=end)
        let rank = T::count(start + end + 1) / T::lit(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation as Pearson on midranks.
pub fn spearman<T: Scalar>(xs: &[T], ys: &[T]) -> Option<T> {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Median of a non-empty slice (mean of the two central values for even length).
pub fn median<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    })
}

/// Median absolute deviation around the median (unscaled).
pub fn mad<T: Scalar>(xs: &[T]) -> Option<T> {
    let med = median(xs)?;
    let dev: Vec<T> = xs.iter().map(|&x| (x - med).abs()).collect();
    median(&dev)
}
