use crate::scalar::{lit, Real};

/// Linear-interpolation quantile of already sorted data (R type 7).
pub fn quantile_sorted<T: Real>(sorted: &[T], prob: T) -> T {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    if n == 1 {
        return sorted[0];
    }
    let h = prob * lit::<T>((n - 1) as f64);
    let lo = h.floor();
    let i = crate::scalar::to_f64(lo).clamp(0.0, (n - 1) as f64) as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

/// Sorted copy; NaN values sort last.
pub fn sorted_copy<T: Real>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_values() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile_sorted(&xs, 0.025) - 3.475).abs() < 1e-12);
        assert!((quantile_sorted(&xs, 0.975) - 97.525).abs() < 1e-12);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 100.0);
        assert_eq!(quantile_sorted(&[4.0], 0.3), 4.0);
    }
}
