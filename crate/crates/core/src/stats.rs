//! Order statistics for batch experiment summaries.

use alloc::vec::Vec;

/// Quantile `p ∈ [0, 1]` by linear interpolation between order statistics
/// (the `(n − 1) p` rule). `None` on empty input or any NaN.
pub fn quantile(data: &[f64], p: f64) -> Option<f64> {
    let mut sorted = sorted_copy(data)?;
    quantile_sorted(&mut sorted, p)
}

/// Several quantiles from one sort.
pub fn quantiles(data: &[f64], ps: &[f64]) -> Option<Vec<f64>> {
    let mut sorted = sorted_copy(data)?;
    ps.iter().map(|&p| quantile_sorted(&mut sorted, p)).collect()
}

pub fn median(data: &[f64]) -> Option<f64> {
    quantile(data, 0.5)
}

fn sorted_copy(data: &[f64]) -> Option<Vec<f64>> {
    if data.is_empty() || data.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v)
}

fn quantile_sorted(sorted: &mut [f64], p: f64) -> Option<f64> {
    if !(0.0..=1.0).contains(&p) {
        return None;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        return Some(sorted[lo]);
    }
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_between_order_statistics() {
        let d = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&d, 0.0), Some(1.0));
        assert_eq!(quantile(&d, 1.0), Some(4.0));
        assert_eq!(median(&d), Some(2.5));
        assert_eq!(quantile(&d, 0.25), Some(1.75));
        assert_eq!(quantiles(&d, &[0.0, 0.5]), Some(alloc::vec![1.0, 2.5]));
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[1.0, f64::NAN], 0.5), None);
        assert_eq!(quantile(&[1.0], 1.5), None);
        assert_eq!(quantile(&[7.0], 0.9), Some(7.0));
    }
}
