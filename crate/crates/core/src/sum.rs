//! Deterministic reductions.
//!
//! Every reduction in the crate goes through these helpers so that results do
//! not depend on how work was split between threads: the tree shape depends
//! only on the input length.

const BLOCK: usize = 8;

/// Pairwise (cascade) summation in fixed index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(v)` over `values`.
pub fn pairwise_sum_by<T, F>(values: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64 + Copy,
{
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for v in values {
            acc += f(v);
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], f) + pairwise_sum_by(&values[mid..], f)
}


/// Ordinary least-squares line through `(x, y)`: returns `(slope, intercept, rms residual)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let idx: Vec<usize> = (0..xs.len()).collect();
    let sxx = pairwise_sum_by(&idx, |&i| (xs[i] - mx) * (xs[i] - mx));
    let sxy = pairwise_sum_by(&idx, |&i| (xs[i] - mx) * (ys[i] - my));
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss = pairwise_sum_by(&idx, |&i| {
        let e = ys[i] - (intercept + slope * xs[i]);
        e * e
    });
    (slope, intercept, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_sum_by(&v, |x| 2.0 * x), 1001000.0);
    }

    #[test]
    fn line_fit_exact() {
        let (m, b, r) = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((m - 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-14 && r < 1e-14);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn more_accurate_than_running_sum() {
        let v = vec![0.1; 1 << 20];
        let exact = 0.1 * (1 << 20) as f64;
        let naive: f64 = v.iter().sum();
        let pw = pairwise_sum(&v);
        assert!((pw - exact).abs() <= (naive - exact).abs());
    }
}
